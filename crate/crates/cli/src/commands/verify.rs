//! Residual reports for field files.

use std::path::{Path, PathBuf};

use gavriflow::fields::{cartesian_euler_residuals, euler_residuals, refinement_slope, worst_slope, Summary};
use gavriflow::io;
use serde::Serialize;

use super::{announce, read_bytes, Context};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
enum FieldKind {
    Axisymmetric,
    Cartesian,
}

#[derive(Serialize)]
struct Identity {
    name: String,
    max: f64,
    mean: f64,
    count: usize,
}

#[derive(Serialize)]
struct FileReport {
    path: PathBuf,
    kind: FieldKind,
    dimension: usize,
    nodes: usize,
    admissible_nodes: usize,
    /// Largest | |u| − 1 | over admissible nodes (axisymmetric fields only).
    normalization_error: Option<f64>,
    residuals: Vec<Identity>,
}

#[derive(Serialize)]
struct Slopes {
    name: String,
    slopes: Vec<Option<f64>>,
    worst: Option<f64>,
}

#[derive(Serialize)]
struct VerifyReport {
    files: Vec<FileReport>,
    slopes: Vec<Slopes>,
}

fn identities(list: Vec<(String, Summary)>) -> Vec<Identity> {
    list.into_iter().map(|(name, s)| Identity { name, max: s.max, mean: s.mean, count: s.count }).collect()
}

fn report_file(path: &Path) -> CliResult<FileReport> {
    let bytes = read_bytes(path)?;
    let (header, _) = io::parse_csv_any(&bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let with_path = |e: gavriflow::Error| CliError::Input(format!("{}: {e}", path.display()));
    if header.iter().map(String::as_str).eq(io::AXISYM_HEADER) {
        let field = io::axisym_from_csv(&bytes).map_err(with_path)?;
        let res = euler_residuals(&field);
        Ok(FileReport {
            path: path.to_path_buf(),
            kind: FieldKind::Axisymmetric,
            dimension: 2,
            nodes: field.mask.len(),
            admissible_nodes: field.masked_in(),
            normalization_error: Some(field.normalization_error()),
            residuals: identities(res.summaries().into_iter().map(|(n, s)| (n.to_string(), s)).collect()),
        })
    } else {
        let field = io::cartesian_from_csv(&bytes).map_err(with_path)?;
        let res = cartesian_euler_residuals(&field);
        Ok(FileReport {
            path: path.to_path_buf(),
            kind: FieldKind::Cartesian,
            dimension: field.dim(),
            nodes: field.mask.len(),
            admissible_nodes: field.mask.iter().filter(|&&m| m).count(),
            normalization_error: None,
            residuals: identities(res.summaries()),
        })
    }
}

pub fn verify(ctx: &Context, files: &[PathBuf]) -> CliResult<()> {
    let reports = files.iter().map(|f| report_file(f)).collect::<CliResult<Vec<_>>>()?;
    let first = &reports[0];
    if let Some(bad) = reports.iter().find(|r| r.kind != first.kind || r.dimension != first.dimension) {
        return Err(CliError::Input(format!(
            "{} does not match the field type of {}",
            bad.path.display(),
            first.path.display()
        )));
    }
    if let Some(empty) = reports.iter().find(|r| r.admissible_nodes == 0) {
        return Err(CliError::Numerical(format!("{} has no admissible nodes", empty.path.display())));
    }
    let slopes: Vec<Slopes> = if reports.len() >= 2 {
        first
            .residuals
            .iter()
            .enumerate()
            .map(|(k, id)| {
                let maxima: Vec<f64> = reports.iter().map(|r| r.residuals[k].max).collect();
                Slopes {
                    name: id.name.clone(),
                    slopes: maxima.windows(2).map(|w| refinement_slope(w[0], w[1])).collect(),
                    worst: worst_slope(&maxima),
                }
            })
            .collect()
    } else {
        Vec::new()
    };
    for r in &reports {
        println!("{}", r.path.display());
        for id in &r.residuals {
            println!("  {:<16} max {:.3e}  mean {:.3e}", id.name, id.max, id.mean);
        }
        if let Some(n) = r.normalization_error {
            println!("  {:<16} max {:.3e}", "normalization", n);
        }
    }
    for s in &slopes {
        match s.worst {
            Some(w) => println!("slope {:<16} {:.3}", s.name, w),
            None => println!("slope {:<16} exact", s.name),
        }
    }
    let path = ctx.write_json("verify_report.json", &VerifyReport { files: reports, slopes })?;
    announce(&[path]);
    Ok(())
}
