//! torus, localize and plane-section.

use gavriflow::contour::Polyline;
use gavriflow::fields::{
    cartesian_euler_residuals, localize as localize_flow, make_evendim_flow, plane_flux_integral,
    plane_section_integral, sample_cartesian, Bump, CartesianField, EvenDimFlow, FlowEvaluator, LocalizedFlow, Plane,
    Summary, TorusFlow, Variant, TORUS_MIN_RADIUS,
};
use gavriflow::io;
use gavriflow::minpoint::{
    psi_taylor, symmetric_nodes, ProfileSeries, PsiEvaluator, DEFAULT_PSI_REF, DEFAULT_SERIES_ORDER,
};
use serde::Serialize;

use super::{announce, Context};
use crate::error::{CliError, CliResult};
use crate::{Direction, FlowKind};

/// Taylor order of the seed data for the torus flow.
pub const TORUS_TAYLOR_ORDER: usize = 12;
const TORUS_SEED_RADIUS: f64 = 0.3;
const TORUS_Z_EXTENT: f64 = 1.0;
const TORUS_MARCH_STEP: f64 = 0.005;
const DEFAULT_STEP_2D: f64 = 0.01;
const DEFAULT_STEP_3D: f64 = 0.05;

pub fn torus_flow(order: usize) -> CliResult<TorusFlow> {
    let poly = psi_taylor(order)?;
    let series = ProfileSeries::new(DEFAULT_SERIES_ORDER)?;
    let ev = PsiEvaluator::new(&poly, series, TORUS_SEED_RADIUS, TORUS_Z_EXTENT, TORUS_MARCH_STEP)?;
    Ok(TorusFlow::with_cut_cap(ev, DEFAULT_PSI_REF, TORUS_Z_EXTENT)?)
}

#[derive(Serialize)]
struct NamedSummary {
    name: String,
    #[serde(flatten)]
    summary: Summary,
}

fn residual_report(field: &CartesianField) -> Vec<NamedSummary> {
    cartesian_euler_residuals(field)
        .summaries()
        .into_iter()
        .map(|(name, summary)| NamedSummary { name, summary })
        .collect()
}

fn defined_nodes(field: &CartesianField) -> usize {
    field.mask.iter().filter(|&&m| m).count()
}

#[derive(Serialize)]
struct TorusSummary {
    taylor_order: usize,
    psi_ref: f64,
    psi_cap: f64,
    min_radius: f64,
    step: f64,
    nodes: usize,
    defined_nodes: usize,
    max_speed: f64,
    residuals: Vec<NamedSummary>,
}

pub fn torus(ctx: &Context, extent: f64, height: f64) -> CliResult<()> {
    let order = ctx.order.unwrap_or(TORUS_TAYLOR_ORDER);
    let h = ctx.step.unwrap_or(DEFAULT_STEP_3D);
    let flow = torus_flow(order)?;
    let axes = vec![symmetric_nodes(extent, h), symmetric_nodes(extent, h), symmetric_nodes(height, h)];
    let field = sample_cartesian(&flow, &axes)?;
    let defined = defined_nodes(&field);
    if defined == 0 {
        return Err(CliError::Numerical("the torus flow is undefined on the whole grid".into()));
    }
    let mut written = vec![ctx.write("torus.csv", &io::cartesian_to_csv(&field)?)?];
    let summary = TorusSummary {
        taylor_order: order,
        psi_ref: flow.psi_ref,
        psi_cap: flow.psi_cap,
        min_radius: TORUS_MIN_RADIUS,
        step: h,
        nodes: field.mask.len(),
        defined_nodes: defined,
        max_speed: field.max_speed(),
        residuals: residual_report(&field),
    };
    written.push(ctx.write_json("torus_summary.json", &summary)?);
    println!("psi cap {:.6}, {} of {} nodes defined", flow.psi_cap, defined, summary.nodes);
    announce(&written);
    Ok(())
}

pub struct LocalizeOptions {
    pub flow: FlowKind,
    pub n_half: usize,
    pub a: f64,
    pub p0: Option<f64>,
    pub delta: Option<f64>,
    pub psi_band: Option<(f64, f64)>,
    pub extent: f64,
}

#[derive(Serialize)]
struct LocalizeSummary {
    flow: String,
    dimension: usize,
    bump: Option<(f64, f64)>,
    support: Option<(f64, f64)>,
    pressure_drop: f64,
    step: f64,
    nodes: usize,
    defined_nodes: usize,
    max_speed: f64,
    residuals: Vec<NamedSummary>,
}

fn bump_from(p0: Option<f64>, delta: Option<f64>) -> CliResult<Option<Bump>> {
    match (p0, delta) {
        (Some(p0), Some(delta)) => Ok(Some(Bump { p0, delta })),
        (None, None) => Ok(None),
        _ => Err(CliError::Input("--p0 and --delta must be given together".into())),
    }
}

/// A bump whose support is the pressure band of ψ ∈ [lo, hi].
fn psi_bump(flow: &TorusFlow, band: (f64, f64)) -> CliResult<Bump> {
    if !(band.0 > 0.0 && band.0 < band.1) {
        return Err(CliError::Input(format!("ψ band must satisfy 0 < lo < hi, got {band:?}")));
    }
    let (a, b) = (flow.pressure_of_psi(band.0), flow.pressure_of_psi(band.1));
    Ok(Bump { p0: 0.5 * (a + b), delta: 0.5 * (b - a) })
}

fn sample_localized<F: FlowEvaluator>(
    ctx: &Context,
    name: &str,
    flow: LocalizedFlow<F>,
    axes: Vec<Vec<f64>>,
    h: f64,
) -> CliResult<()> {
    let field = sample_cartesian(&flow, &axes)?;
    let defined = defined_nodes(&field);
    let mut written = vec![ctx.write("localized.csv", &io::cartesian_to_csv(&field)?)?];
    let summary = LocalizeSummary {
        flow: name.to_string(),
        dimension: axes.len(),
        bump: flow.bump.map(|b| (b.p0, b.delta)),
        support: flow.bump.map(|b| b.support()),
        pressure_drop: flow.pressure_drop(),
        step: h,
        nodes: field.mask.len(),
        defined_nodes: defined,
        max_speed: field.max_speed(),
        residuals: residual_report(&field),
    };
    written.push(ctx.write_json("localize_summary.json", &summary)?);
    for r in &summary.residuals {
        println!("{:<16} max {:.3e}  mean {:.3e}", r.name, r.summary.max, r.summary.mean);
    }
    announce(&written);
    Ok(())
}

pub fn localize(ctx: &Context, o: &LocalizeOptions) -> CliResult<()> {
    if !(o.extent > 0.0) {
        return Err(CliError::Input("--extent must be positive".into()));
    }
    let explicit = |variant: Variant| -> CliResult<EvenDimFlow> { Ok(make_evendim_flow(o.n_half, variant)?) };
    match o.flow {
        FlowKind::Even | FlowKind::Odd => {
            let variant = if o.flow == FlowKind::Even { Variant::Even } else { Variant::Odd { a: o.a } };
            let flow = explicit(variant)?;
            let dim = flow.dim();
            let h = ctx.step.unwrap_or(if dim == 2 { DEFAULT_STEP_2D } else { DEFAULT_STEP_3D });
            let nodes = symmetric_nodes(o.extent, h);
            let nodes_per_axis = nodes.len() as f64;
            if nodes_per_axis.powi(dim as i32) > 5e7 {
                return Err(CliError::Input(format!("grid of {nodes_per_axis}^{dim} nodes is too large")));
            }
            let loc = localize_flow(flow, bump_from(o.p0, o.delta)?)?;
            let name = if o.flow == FlowKind::Even { "even" } else { "odd" };
            sample_localized(ctx, name, loc, vec![nodes; dim], h)
        }
        FlowKind::Torus => {
            let flow = torus_flow(ctx.order.unwrap_or(TORUS_TAYLOR_ORDER))?;
            let bump = match o.psi_band {
                Some(band) => Some(psi_bump(&flow, band)?),
                None => bump_from(o.p0, o.delta)?,
            };
            let h = ctx.step.unwrap_or(DEFAULT_STEP_3D);
            let axes = vec![
                symmetric_nodes(o.extent, h),
                symmetric_nodes(o.extent, h),
                symmetric_nodes(TORUS_Z_EXTENT * 0.6, h),
            ];
            let loc = localize_flow(flow, bump)?;
            sample_localized(ctx, "torus", loc, axes, h)
        }
    }
}

pub struct SectionOptions {
    pub z0: f64,
    pub tilt: f64,
    pub psi_level: f64,
    pub psi_band: (f64, f64),
    pub xi: Direction,
    pub n: usize,
    pub extent: f64,
    pub refine: usize,
}

#[derive(Serialize)]
struct SectionRun {
    n: usize,
    integral: f64,
    empty: bool,
    curves: usize,
    closed_curves: usize,
    length: f64,
}

#[derive(Serialize)]
struct SectionSummary {
    plane_point: [f64; 3],
    plane_normal: [f64; 3],
    xi: [f64; 3],
    psi_level: f64,
    pressure_level: f64,
    psi_band: (f64, f64),
    runs: Vec<SectionRun>,
    ratios: Vec<f64>,
    flux_integral: f64,
}

pub const SECTION_HEADER: [&str; 5] = ["curve", "closed", "vertex", "s", "t"];

fn curves_csv(curves: &[Polyline]) -> CliResult<Vec<u8>> {
    let rows = curves.iter().enumerate().flat_map(|(c, line)| {
        line.points
            .iter()
            .enumerate()
            .map(move |(v, q)| vec![c as f64, if line.closed { 1.0 } else { 0.0 }, v as f64, q[0], q[1]])
    });
    Ok(io::csv_table(&SECTION_HEADER, rows)?)
}

pub fn plane_section(ctx: &Context, o: &SectionOptions) -> CliResult<()> {
    if o.n < 3 || !(o.extent > 0.0) {
        return Err(CliError::Input("plane grid needs --n >= 3 and a positive --extent".into()));
    }
    let flow = torus_flow(ctx.order.unwrap_or(TORUS_TAYLOR_ORDER))?;
    if !(o.psi_level > 0.0) {
        return Err(CliError::Input("--psi-level must be positive".into()));
    }
    let level_p = flow.pressure_of_psi(o.psi_level);
    let bump = psi_bump(&flow, o.psi_band)?;
    let loc = localize_flow(flow, Some(bump))?;
    let level = loc.pressure_map(level_p);
    let plane = Plane::tilted(o.z0, o.tilt);
    let (e1, e2) = plane.basis();
    let xi = match o.xi {
        Direction::E1 => e1,
        Direction::E2 => e2,
    };

    let mut runs = Vec::new();
    let mut finest = Vec::new();
    let mut n = o.n;
    for _ in 0..=o.refine {
        let r = plane_section_integral(&loc, &plane, level, xi, o.extent, n)?;
        runs.push(SectionRun {
            n,
            integral: r.integral,
            empty: r.empty,
            curves: r.curves.len(),
            closed_curves: r.curves.iter().filter(|c| c.closed).count(),
            length: r.curves.iter().map(Polyline::length).sum(),
        });
        finest = r.curves;
        n = 2 * n - 1;
    }
    let ratios = runs.windows(2).map(|w| (w[0].integral / w[1].integral).abs()).collect();
    let flux = plane_flux_integral(&loc, &plane, xi, o.extent, o.n)?;
    let summary = SectionSummary {
        plane_point: plane.point,
        plane_normal: plane.normal,
        xi,
        psi_level: o.psi_level,
        pressure_level: level,
        psi_band: o.psi_band,
        runs,
        ratios,
        flux_integral: flux,
    };
    let mut written = vec![ctx.write("section_curves.csv", &curves_csv(&finest)?)?];
    written.push(ctx.write_json("section.json", &summary)?);
    for r in &summary.runs {
        println!("n = {:<5} integral {:+.6e}  curves {}", r.n, r.integral, r.curves);
    }
    announce(&written);
    Ok(())
}
