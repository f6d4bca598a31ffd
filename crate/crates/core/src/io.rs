//! File formats: CSV tables for fields and grids, JSON reports, atomic writes.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! write followed by a read reproduces every value bit for bit. Undefined
//! values are written as `NaN`.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array2, ArrayD, IxDyn};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::axisolver::GeneratrixGrid;
use crate::error::{Error, Result};
use crate::fields::{AxisymField, CartesianField};
use crate::minpoint::PsiField;
use crate::profiles::ProfilePoint;

/// Write `bytes` to a temporary sibling of `path`, then rename it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| Error::Parameter(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    v.push(b'\n');
    Ok(v)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, &to_json(value)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// A CSV document with a header row and numeric records.
pub fn csv_table<I>(header: &[&str], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Format(format!("row has {} fields, header has {}", row.len(), header.len())));
        }
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Format(e.to_string()))
}

/// Parse a numeric CSV document whose header must equal `expected`.
pub fn parse_csv_table(bytes: &[u8], expected: &[&str]) -> Result<Vec<Vec<f64>>> {
    let (header, rows) = parse_csv_any(bytes)?;
    if header != expected {
        return Err(Error::Format(format!("expected columns {expected:?}, found {header:?}")));
    }
    Ok(rows)
}

/// Parse a numeric CSV document, returning its header and records.
pub fn parse_csv_any(bytes: &[u8]) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| Error::Format(format!("record {}: not a number: {s:?}", line + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn parse_flag(v: f64) -> Result<bool> {
    if v == 1.0 {
        Ok(true)
    } else if v == 0.0 {
        Ok(false)
    } else {
        Err(Error::Format(format!("mask entries must be 0 or 1, found {v}")))
    }
}

/// Recover the tensor grid from rows ordered with the second coordinate
/// varying fastest.
fn tensor_axes(rows: &[Vec<f64>], dims: usize) -> Result<Vec<Vec<f64>>> {
    if rows.is_empty() {
        return Err(Error::Format("no data rows".into()));
    }
    let mut axes = Vec::with_capacity(dims);
    let mut stride = rows.len();
    for d in 0..dims {
        let mut axis = vec![rows[0][d]];
        let block = stride;
        let mut k = 1;
        while k < block && rows[k][..d] == rows[0][..d] {
            if rows[k][d] != *axis.last().unwrap_or(&f64::NAN) {
                axis.push(rows[k][d]);
            }
            k += 1;
        }
        stride = block / axis.len();
        axes.push(axis);
    }
    let total: usize = axes.iter().map(Vec::len).product();
    if total != rows.len() {
        return Err(Error::Format(format!("{} rows do not form a tensor grid", rows.len())));
    }
    let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
    for (k, row) in rows.iter().enumerate() {
        let mut rem = k;
        for d in (0..dims).rev() {
            let i = rem % shape[d];
            rem /= shape[d];
            if row[d] != axes[d][i] {
                return Err(Error::Format(format!("row {} is out of grid order", k + 1)));
            }
        }
    }
    Ok(axes)
}

pub const AXISYM_HEADER: [&str; 7] = ["r", "z", "u_r", "u_z", "u_theta", "p", "mask"];

pub fn axisym_to_csv(field: &AxisymField) -> Result<Vec<u8>> {
    let (nr, nz) = field.mask.dim();
    let rows = (0..nr).flat_map(|i| {
        (0..nz).map(move |j| {
            vec![
                field.r[i],
                field.z[j],
                field.u_r[[i, j]],
                field.u_z[[i, j]],
                field.u_theta[[i, j]],
                field.p[[i, j]],
                flag(field.mask[[i, j]]),
            ]
        })
    });
    csv_table(&AXISYM_HEADER, rows)
}

pub fn axisym_from_csv(bytes: &[u8]) -> Result<AxisymField> {
    let rows = parse_csv_table(bytes, &AXISYM_HEADER)?;
    let axes = tensor_axes(&rows, 2)?;
    let (nr, nz) = (axes[0].len(), axes[1].len());
    let pick = |c: usize| Array2::from_shape_fn((nr, nz), |(i, j)| rows[i * nz + j][c]);
    let mut mask = Array2::from_elem((nr, nz), false);
    for i in 0..nr {
        for j in 0..nz {
            mask[[i, j]] = parse_flag(rows[i * nz + j][6])?;
        }
    }
    Ok(AxisymField {
        r: axes[0].clone(),
        z: axes[1].clone(),
        u_r: pick(2),
        u_z: pick(3),
        u_theta: pick(4),
        p: pick(5),
        mask,
    })
}

fn cartesian_header(dim: usize) -> Vec<String> {
    let coords: Vec<String> = match dim {
        1..=3 => ["x", "y", "z"][..dim].iter().map(|s| s.to_string()).collect(),
        _ => (1..=dim).map(|k| format!("x{k}")).collect(),
    };
    coords.into_iter().chain((1..=dim).map(|k| format!("u{k}"))).chain(std::iter::once("p".to_string())).collect()
}

/// Columns (x, y[, z], u1, …, p); undefined nodes carry NaN values.
pub fn cartesian_to_csv(field: &CartesianField) -> Result<Vec<u8>> {
    let n = field.dim();
    let header = cartesian_header(n);
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = field.mask.indexed_iter().map(|(idx, _)| {
        let ix: Vec<usize> = (0..n).map(|d| idx[d]).collect();
        let mut row = field.point(&ix);
        row.extend(field.u.iter().map(|c| c[&idx]));
        row.push(field.p[&idx]);
        row
    });
    csv_table(&refs, rows)
}

pub fn cartesian_from_csv(bytes: &[u8]) -> Result<CartesianField> {
    let (header, rows) = parse_csv_any(bytes)?;
    if header.len() < 3 || (header.len() - 1) % 2 != 0 {
        return Err(Error::Format(format!("unexpected Cartesian columns {header:?}")));
    }
    let n = (header.len() - 1) / 2;
    if header != cartesian_header(n) {
        return Err(Error::Format(format!("expected columns {:?}, found {header:?}", cartesian_header(n))));
    }
    let axes = tensor_axes(&rows, n)?;
    let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
    let col = |c: usize| {
        ArrayD::from_shape_vec(IxDyn(&shape), rows.iter().map(|r| r[c]).collect()).expect("grid size checked")
    };
    let u: Vec<ArrayD<f64>> = (0..n).map(|d| col(n + d)).collect();
    let p = col(2 * n);
    let mask = ArrayD::from_shape_fn(IxDyn(&shape), |idx| p[&idx].is_finite() && u.iter().all(|c| c[&idx].is_finite()));
    Ok(CartesianField { axes, u, p, mask })
}

pub const PROFILE_HEADER: [&str; 7] = ["p", "alpha", "beta", "gamma", "dalpha", "dbeta", "dgamma"];

pub fn profiles_to_csv(points: &[ProfilePoint]) -> Result<Vec<u8>> {
    csv_table(&PROFILE_HEADER, points.iter().map(|q| vec![q.p, q.alpha, q.beta, q.gamma, q.dalpha, q.dbeta, q.dgamma]))
}

pub const GENERATRIX_HEADER: [&str; 9] = ["p", "z", "f", "fp", "fz", "fzz", "resid_f", "resid_g", "admissible"];

/// Rows for the slices in `slices` (all slices when `None`).
pub fn generatrix_to_csv(grid: &GeneratrixGrid, slices: Option<&[usize]>) -> Result<Vec<u8>> {
    let all: Vec<usize> = (0..grid.p.len()).collect();
    let pick = slices.unwrap_or(&all);
    let nz = grid.z.len();
    let rows = pick.iter().flat_map(|&i| {
        (0..nz).map(move |j| {
            vec![
                grid.p[i],
                grid.z[j],
                grid.f[[i, j]],
                grid.fp[[i, j]],
                grid.fz[[i, j]],
                grid.fzz[[i, j]],
                grid.resid_f[[i, j]],
                grid.resid_g[[i, j]],
                flag(grid.admissible[[i, j]]),
            ]
        })
    });
    csv_table(&GENERATRIX_HEADER, rows)
}

pub const PSI_HEADER: [&str; 8] = ["r", "z", "psi", "p", "resid2", "psi_r", "psi_z", "mask"];

/// ψ rows with p = (1/3) ln(ψ/ψ_ref); p is NaN where ψ ≤ 0 or the node is masked.
pub fn psi_to_csv(field: &PsiField, psi_ref: f64) -> Result<Vec<u8>> {
    if !(psi_ref > 0.0 && psi_ref.is_finite()) {
        return Err(Error::Parameter(format!("psi_ref must be positive, got {psi_ref}")));
    }
    let (nr, nz) = field.mask.dim();
    let rows = (0..nr).flat_map(|i| {
        (0..nz).map(move |j| {
            let psi = field.psi[[i, j]];
            let p = if field.mask[[i, j]] && psi > 0.0 { (psi / psi_ref).ln() / 3.0 } else { f64::NAN };
            vec![
                field.r[i],
                field.z[j],
                psi,
                p,
                field.resid2[[i, j]],
                field.psi_r[[i, j]],
                field.psi_z[[i, j]],
                flag(field.mask[[i, j]]),
            ]
        })
    });
    csv_table(&PSI_HEADER, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_evendim_flow, sample_cartesian, Variant};
    use crate::minpoint::uniform_nodes;

    fn sample_field() -> AxisymField {
        let r = uniform_nodes(0.5, 1.0, 0.1);
        let z = uniform_nodes(-0.2, 0.2, 0.1);
        AxisymField::from_fn(&r, &z, |r, z| if r > 0.55 { Some([0.1 * z, 1.0 / 3.0, r.sqrt(), r * z]) } else { None })
    }

    #[test]
    fn axisym_round_trip_is_exact() {
        let f = sample_field();
        let bytes = axisym_to_csv(&f).unwrap();
        let g = axisym_from_csv(&bytes).unwrap();
        assert_eq!(f.r, g.r);
        assert_eq!(f.z, g.z);
        assert_eq!(f.mask, g.mask);
        for ((i, j), &m) in f.mask.indexed_iter() {
            if m {
                assert_eq!(f.u_theta[[i, j]].to_bits(), g.u_theta[[i, j]].to_bits());
                assert_eq!(f.p[[i, j]].to_bits(), g.p[[i, j]].to_bits());
            } else {
                assert!(g.p[[i, j]].is_nan());
            }
        }
        assert_eq!(axisym_to_csv(&g).unwrap(), bytes);
    }

    #[test]
    fn corrupted_inputs_are_format_errors() {
        let text = String::from_utf8(axisym_to_csv(&sample_field()).unwrap()).unwrap();
        let bad_number = text.replacen("0.6", "zero.six", 1);
        assert!(matches!(axisym_from_csv(bad_number.as_bytes()), Err(Error::Format(_))));
        let bad_header = text.replacen("u_theta", "w", 1);
        assert!(matches!(axisym_from_csv(bad_header.as_bytes()), Err(Error::Format(_))));
        let mut lines: Vec<&str> = text.lines().collect();
        lines.remove(3);
        assert!(matches!(axisym_from_csv(lines.join("\n").as_bytes()), Err(Error::Format(_))));
        lines.truncate(1);
        assert!(matches!(axisym_from_csv(lines.join("\n").as_bytes()), Err(Error::Format(_))));
    }

    #[test]
    fn cartesian_round_trip() {
        let f = make_evendim_flow(1, Variant::Odd { a: 0.25 }).unwrap();
        let ax = uniform_nodes(-0.3, 0.3, 0.1);
        let field = sample_cartesian(&f, &[ax.clone(), ax.clone(), ax]).unwrap();
        let bytes = cartesian_to_csv(&field).unwrap();
        assert!(bytes.starts_with(b"x,y,z,u1,u2,u3,p\n"));
        let back = cartesian_from_csv(&bytes).unwrap();
        assert_eq!(back.axes, field.axes);
        assert_eq!(back.p, field.p);
        assert_eq!(back.u, field.u);
        assert!(back.mask.iter().all(|&m| m));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = std::env::temp_dir().join(format!("gavriflow-io-{}", std::process::id()));
        let path = dir.join("out.json");
        write_json(&path, &vec![1, 2]).unwrap();
        write_json(&path, &vec![3]).unwrap();
        let v: Vec<i32> = read_json(&path).unwrap();
        assert_eq!(v, vec![3]);
        fs::write(&path, b"{not json").unwrap();
        assert!(matches!(read_json::<Vec<i32>>(&path), Err(Error::Format(_))));
        let leftovers = fs::read_dir(&dir).unwrap().filter(|e| e.as_ref().unwrap().file_name() != "out.json").count();
        assert_eq!(leftovers, 0);
        fs::remove_dir_all(&dir).unwrap();
    }
}
