//! profiles, series and solve.

use gavriflow::axisolver::{detect_symmetry, solve_f, FlowScenario, GeneratrixGrid};
use gavriflow::fields::{reconstruct_generatrix, Summary};
use gavriflow::io;
use gavriflow::minpoint::uniform_nodes;
use gavriflow::series::{series_beta_gamma, SeriesJson};
use gavriflow::{ProfileTriple, Termination};
use serde::Serialize;

use super::{announce, Context};
use crate::error::{CliError, CliResult};

pub const DEFAULT_SERIES_ORDER: usize = 6;

#[derive(Serialize)]
struct ProfileSummary {
    requested: (f64, f64),
    step: f64,
    valid_interval: (f64, f64),
    termination: (Termination, Termination),
    nonneg_interval: (f64, f64),
    samples: usize,
}

pub fn profiles(ctx: &Context, range: (f64, f64), with_series: bool) -> CliResult<()> {
    let sc = ctx.scenario_or(FlowScenario::figure1())?;
    let triple = sc.integrate_profiles_over(range)?;
    let samples = triple.samples();
    let mut written = vec![ctx.write("profiles.csv", &io::profiles_to_csv(&samples)?)?];
    let summary = ProfileSummary {
        requested: range,
        step: sc.p_step,
        valid_interval: triple.valid_interval,
        termination: triple.termination,
        nonneg_interval: triple.nonneg_interval,
        samples: samples.len(),
    };
    written.push(ctx.write_json("profiles_summary.json", &summary)?);
    if with_series {
        written.push(write_series(ctx)?);
    }
    let (a, b) = triple.valid_interval;
    println!(
        "validity interval: ({a:.4}, {b:.4})  [lower end: {}, upper end: {}]",
        triple.termination.0, triple.termination.1
    );
    announce(&written);
    Ok(())
}

fn write_series(ctx: &Context) -> CliResult<std::path::PathBuf> {
    let order = ctx.order.unwrap_or(DEFAULT_SERIES_ORDER);
    let (beta, gamma) = series_beta_gamma(order);
    ctx.write_json("series.json", &SeriesJson::from_pair(&beta, &gamma))
}

pub fn series(ctx: &Context) -> CliResult<()> {
    let path = write_series(ctx)?;
    announce(&[path]);
    Ok(())
}

#[derive(Serialize)]
struct SolveSummary {
    p_nodes: usize,
    z_nodes: usize,
    p_reached: f64,
    p_truncated: bool,
    admissible_nodes: usize,
    max_resid_f: f64,
    max_resid_g: f64,
    degenerate_slices: usize,
    period: Option<f64>,
    field: Option<FieldSummary>,
}

#[derive(Serialize)]
struct FieldSummary {
    r_step: f64,
    z_stride: usize,
    r_range: (f64, f64),
    z_window: (f64, f64),
    p_window: (f64, f64),
    admissible_nodes: usize,
    normalization_error: f64,
    speed: Summary,
}

/// The solver z-stride matching a field step `h`, which must be a whole
/// multiple of the solver step.
pub fn z_stride(h: f64, z_step: f64) -> CliResult<usize> {
    let k = (h / z_step).round();
    if !(k >= 1.0) || (k * z_step - h).abs() > 1e-9 * h.max(z_step) {
        return Err(CliError::Input(format!("field step {h} is not a multiple of the solver z-step {z_step}")));
    }
    Ok(k as usize)
}

/// Radial range of the graph over admissible nodes in the z-window, widened
/// to multiples of `h`.
fn default_r_range(grid: &GeneratrixGrid, z_window: (f64, f64), h: f64) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for ((i, j), &ok) in grid.admissible.indexed_iter() {
        if ok && grid.z[j] >= z_window.0 && grid.z[j] <= z_window.1 {
            lo = lo.min(grid.f[[i, j]]);
            hi = hi.max(grid.f[[i, j]]);
        }
    }
    (lo <= hi).then(|| ((lo / h).floor() * h, (hi / h).ceil() * h))
}

pub fn solve(
    ctx: &Context,
    field_step: Option<f64>,
    r_range: Option<(f64, f64)>,
    z_window: Option<(f64, f64)>,
    p_window: Option<(f64, f64)>,
) -> CliResult<()> {
    let sc = ctx.scenario_or(FlowScenario::figure1())?;
    let profiles = sc.integrate_profiles()?;
    let grid = solve_f(&sc, &profiles)?;
    let mut written = vec![ctx.write("generatrix.csv", &io::generatrix_to_csv(&grid, None)?)?];
    let field = match field_step {
        Some(h) => {
            let (field, path) = write_field(ctx, &sc, &grid, &profiles, h, r_range, z_window, p_window)?;
            written.push(path);
            Some(field)
        }
        None => None,
    };
    let (mf, mg) = grid.max_residuals(None);
    let symmetry = detect_symmetry(&grid, sc.tol);
    let summary = SolveSummary {
        p_nodes: grid.p.len(),
        z_nodes: grid.z.len(),
        p_reached: grid.p.last().copied().unwrap_or(f64::NAN),
        p_truncated: grid.p_truncated,
        admissible_nodes: grid.admissible.iter().filter(|&&a| a).count(),
        max_resid_f: mf,
        max_resid_g: mg,
        degenerate_slices: grid.degenerate.iter().filter(|&&d| d).count(),
        period: symmetry.period,
        field,
    };
    written.push(ctx.write_json("solve_summary.json", &summary)?);
    announce(&written);
    if grid.p_truncated {
        return Err(CliError::Numerical(format!(
            "solver stopped at p = {} before p_max = {}; partial output written",
            summary.p_reached, sc.p_max
        )));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn write_field(
    ctx: &Context,
    sc: &FlowScenario,
    grid: &GeneratrixGrid,
    profiles: &ProfileTriple,
    h: f64,
    r_range: Option<(f64, f64)>,
    z_window: Option<(f64, f64)>,
    p_window: Option<(f64, f64)>,
) -> CliResult<(FieldSummary, std::path::PathBuf)> {
    let stride = z_stride(h, sc.z_step)?;
    let z_window = z_window.unwrap_or((sc.z_min, sc.z_max));
    // the upper half of the pressure range keeps away from the swirl layer near β = 0
    let p_window = p_window.unwrap_or((0.5 * (sc.p_min + sc.p_max), sc.p_max));
    let r_range = match r_range {
        Some(r) => r,
        None => default_r_range(grid, z_window, h)
            .ok_or_else(|| CliError::Numerical("no admissible nodes inside the z-window".into()))?,
    };
    let r_nodes = uniform_nodes(r_range.0, r_range.1, h);
    let mut field = reconstruct_generatrix(grid, profiles, &r_nodes, stride, z_window)?;
    field.restrict_pressure(p_window.0, p_window.1);
    let admissible = field.mask.iter().filter(|&&m| m).count();
    if admissible == 0 {
        return Err(CliError::Numerical("the reconstructed field has no admissible nodes".into()));
    }
    let speeds: Vec<f64> = field.mask.indexed_iter().filter(|(_, &m)| m).map(|((i, j), _)| field.speed(i, j)).collect();
    let summary = FieldSummary {
        r_step: h,
        z_stride: stride,
        r_range,
        z_window,
        p_window,
        admissible_nodes: admissible,
        normalization_error: field.normalization_error(),
        speed: Summary::of(&speeds),
    };
    let path = ctx.write("field.csv", &io::axisym_to_csv(&field)?)?;
    Ok((summary, path))
}
