//! fig1, fig2 and plot.

use std::collections::BTreeMap;
use std::path::Path;

use gavriflow::axisolver::{detect_symmetry, find_pc, solve_f, FlowScenario, GeneratrixGrid, Station};
use gavriflow::contour::Polyline;
use gavriflow::fields::swirl_velocity;
use gavriflow::io;
use gavriflow::minpoint::{
    critical_points, isolines, psi_taylor, uniform_nodes, CriticalKind, CriticalPoint, ProfileSeries, PsiField,
    DEFAULT_PSI_REF, DEFAULT_SERIES_ORDER,
};
use gavriflow::ProfileTriple;
use serde::Serialize;

use super::{announce, read_bytes, Context};
use crate::error::{CliError, CliResult};
use crate::svg::{bounds, Svg};

/// Number of generatrices drawn in the periodic example, at p = 0.02·i.
pub const FIG1_CURVES: usize = 9;
pub const FIG1_P_SPACING: f64 = 0.02;
/// Approximate spacing of velocity glyphs along a curve, in plot units.
const GLYPH_SPACING: f64 = 0.15;

pub const FIG2_LEVELS: usize = 6;
pub const FIG2_DEFAULT_ORDER: usize = 5;
pub const FIG2_DEFAULT_STEP: f64 = 0.005;
const FIG2_R: (f64, f64) = (0.0, 1.6);
const FIG2_Z: (f64, f64) = (-0.8, 0.8);
const GLYPHS_PER_COMPONENT: usize = 16;

/// Meridian and swirl glyphs at a point of a curve in the plot plane.
///
/// `meridian` is the in-plane velocity already expressed in plot
/// coordinates; the swirl glyph is drawn along the unit `normal`.
fn glyph_pair(
    svg: &mut Svg,
    at: [f64; 2],
    meridian: [f64; 2],
    normal: [f64; 2],
    swirl: f64,
    scale: f64,
    tag: &str,
) -> f64 {
    let m = [at[0] + scale * meridian[0], at[1] + scale * meridian[1]];
    let s = [at[0] + scale * swirl * normal[0], at[1] + scale * swirl * normal[1]];
    svg.line(at, m, "glyph-meridian", tag);
    svg.line(at, s, "glyph-swirl", tag);
    scale * (meridian[0].hypot(meridian[1])).hypot(swirl)
}

#[derive(Serialize)]
struct Fig1Curve {
    index: usize,
    p: f64,
    nodes: usize,
}

#[derive(Serialize)]
struct Fig1Summary {
    curves: Vec<Fig1Curve>,
    missing_curves: Vec<usize>,
    period: Option<f64>,
    period_station_rule: Option<f64>,
    p_c: Option<f64>,
    p_c_on_grid: Option<f64>,
    stations: Vec<Station>,
    vertical_drift: f64,
    plot_window: (f64, f64),
    glyph_scale: f64,
    glyphs: usize,
    glyph_magnitude_max: f64,
    p_truncated: bool,
}

fn slice_points(grid: &GeneratrixGrid, i: usize, window: (f64, f64)) -> Vec<[f64; 2]> {
    (0..grid.z.len())
        .filter(|&j| grid.admissible[[i, j]] && grid.z[j] >= window.0 && grid.z[j] <= window.1)
        .map(|j| [grid.z[j], grid.f[[i, j]]])
        .collect()
}

/// Glyphs on slice `i`, drawn in the (z, r) plot plane.
fn fig1_glyphs(
    svg: &mut Svg,
    grid: &GeneratrixGrid,
    profiles: &ProfileTriple,
    i: usize,
    window: (f64, f64),
    scale: f64,
) -> (usize, f64) {
    let stride = ((GLYPH_SPACING / (grid.z[1] - grid.z[0])).round() as usize).max(1);
    let Some(pt) = profiles.at(grid.p[i]) else { return (0, 0.0) };
    let e = profiles.epsilon.value();
    let tag = format!(r#" data-curve="{i}""#);
    let (mut count, mut largest) = (0, 0.0f64);
    for j in (0..grid.z.len()).filter(|j| (*j as i64 - grid.z_origin as i64).rem_euclid(stride as i64) == 0) {
        let z = grid.z[j];
        if !(grid.admissible[[i, j]] && z >= window.0 && z <= window.1) {
            continue;
        }
        let (r, fz) = (grid.f[[i, j]], grid.fz[[i, j]]);
        let Some((ur, uz, ut)) = swirl_velocity(r, pt.beta, (e * fz, e)) else { continue };
        let n = fz.hypot(1.0);
        let mag = glyph_pair(svg, [z, r], [uz, ur], [-fz / n, 1.0 / n], ut, scale, &tag);
        largest = largest.max(mag);
        count += 1;
    }
    (count, largest)
}

pub fn fig1(ctx: &Context, pc_search: f64) -> CliResult<()> {
    let sc = ctx.scenario_or(FlowScenario::figure1())?;
    let profiles = sc.integrate_profiles()?;
    let grid = solve_f(&sc, &profiles)?;

    let mut picked = Vec::new();
    let mut missing = Vec::new();
    for k in 0..FIG1_CURVES {
        let target = FIG1_P_SPACING * k as f64;
        match grid.slice_index(target) {
            Some(i) if (grid.p[i] - target).abs() <= 0.5 * sc.p_step + 1e-12 => picked.push((k, i)),
            _ => missing.push(k),
        }
    }
    if picked.is_empty() {
        return Err(CliError::Numerical("none of the curves p = 0.02 i lies inside the solved range".into()));
    }

    let symmetry = detect_symmetry(&grid, sc.tol);
    let plot_window = match symmetry.period {
        Some(t) if t / 2.0 <= sc.z_max.min(-sc.z_min) => (-t / 2.0, t / 2.0),
        _ => (sc.z_min, sc.z_max),
    };

    let wide_hi = sc.p_origin + pc_search + 0.1;
    let wide = sc.integrate_profiles_over((sc.p_min.min(0.0) - 0.01, wide_hi))?;
    let search_hi = (sc.p_origin + pc_search).min(wide.sampled_range().1 - sc.p_step);
    let p_c = if search_hi > sc.p_origin { find_pc(&sc, &wide, (sc.p_origin, search_hi))? } else { None };

    let slices: Vec<usize> = picked.iter().map(|&(_, i)| i).collect();
    let mut written = vec![ctx.write("fig1_generatrix.csv", &io::generatrix_to_csv(&grid, Some(&slices))?)?];

    let curves: Vec<(usize, usize, Vec<[f64; 2]>)> =
        picked.iter().map(|&(k, i)| (k, i, slice_points(&grid, i, plot_window))).collect();
    let all = curves.iter().flat_map(|c| c.2.iter());
    let (bx, by) = bounds(all, 0.1 + ctx.glyph_scale).unwrap_or(((plot_window.0, plot_window.1), (0.0, 2.0)));
    let mut svg = Svg::new(bx, by);
    for (k, i, pts) in &curves {
        svg.polyline(pts, false, "curve", &format!(r#" data-index="{k}" data-p="{:.6}""#, grid.p[*i]));
    }
    let mut glyphs = 0;
    let mut glyph_max = 0.0f64;
    for &(_, i) in picked.iter().filter(|(k, _)| *k == 0 || *k == FIG1_CURVES - 1) {
        let (n, m) = fig1_glyphs(&mut svg, &grid, &profiles, i, plot_window, ctx.glyph_scale);
        glyphs += n;
        glyph_max = glyph_max.max(m);
    }
    written.push(ctx.write("fig1.svg", svg.finish("Periodic axisymmetric flow: generatrices").as_bytes())?);

    let summary = Fig1Summary {
        curves: curves.iter().map(|(k, i, pts)| Fig1Curve { index: *k, p: grid.p[*i], nodes: pts.len() }).collect(),
        missing_curves: missing.clone(),
        period: symmetry.period,
        period_station_rule: symmetry.period_station_rule,
        p_c,
        p_c_on_grid: symmetry.p_c,
        stations: symmetry.stations.iter().find(|s| !s.is_empty()).cloned().unwrap_or_default(),
        vertical_drift: symmetry.vertical_drift,
        plot_window,
        glyph_scale: ctx.glyph_scale,
        glyphs,
        glyph_magnitude_max: glyph_max,
        p_truncated: grid.p_truncated,
    };
    written.push(ctx.write_json("fig1_summary.json", &summary)?);
    match summary.period {
        Some(t) => println!("period: {t:.4}"),
        None => println!("period: not detected"),
    }
    match p_c {
        Some(p) => println!("p_c: {p:.4}"),
        None => println!("p_c: not found below p = {search_hi:.3}"),
    }
    announce(&written);
    if !missing.is_empty() {
        return Err(CliError::Numerical(format!(
            "solver degenerated before all curves were reached; missing curves {missing:?}, partial output written"
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct Fig2Level {
    index: usize,
    psi: f64,
    p: f64,
    components: usize,
    closed: usize,
}

#[derive(Serialize)]
struct Fig2Report {
    order: usize,
    step: f64,
    psi_ref: f64,
    terms: Vec<(usize, usize, String)>,
    levels: Vec<Fig2Level>,
    critical_points: Vec<CriticalPoint>,
    saddles: Vec<CriticalPoint>,
    glyph_scale: f64,
    glyphs: usize,
}

pub const ISOLINE_HEADER: [&str; 7] = ["level", "psi", "component", "closed", "vertex", "r", "z"];

fn isolines_csv(levels: &[(usize, f64, Vec<Polyline>)]) -> CliResult<Vec<u8>> {
    let rows = levels.iter().flat_map(|(i, psi, comps)| {
        comps.iter().enumerate().flat_map(move |(c, line)| {
            line.points.iter().enumerate().map(move |(v, q)| {
                vec![*i as f64, *psi, c as f64, if line.closed { 1.0 } else { 0.0 }, v as f64, q[0], q[1]]
            })
        })
    });
    Ok(io::csv_table(&ISOLINE_HEADER, rows)?)
}

pub fn fig2(ctx: &Context) -> CliResult<()> {
    let order = ctx.order.unwrap_or(FIG2_DEFAULT_ORDER);
    let h = ctx.step.unwrap_or(FIG2_DEFAULT_STEP);
    let poly = psi_taylor(order)?;
    let series = ProfileSeries::new(DEFAULT_SERIES_ORDER)?;
    let (r, z) = (uniform_nodes(FIG2_R.0, FIG2_R.1, h), uniform_nodes(FIG2_Z.0, FIG2_Z.1, h));
    let mut field = PsiField::from_poly(&poly, &r, &z, &series)?;
    field.mask_negative();

    let psi_levels: Vec<f64> = (1..=FIG2_LEVELS).map(|i| DEFAULT_PSI_REF * i as f64).collect();
    let traced: Vec<(usize, f64, Vec<Polyline>)> =
        isolines(&field, &psi_levels).into_iter().enumerate().map(|(k, ls)| (k + 1, ls.level, ls.components)).collect();

    let mut written = vec![ctx.write("fig2_psi.csv", &io::psi_to_csv(&field, DEFAULT_PSI_REF)?)?];
    written.push(ctx.write("fig2_isolines.csv", &isolines_csv(&traced)?)?);

    let all = traced.iter().flat_map(|t| t.2.iter().flat_map(|c| c.points.iter()));
    let (bx, by) = bounds(all, 0.05 + ctx.glyph_scale).unwrap_or((FIG2_R, FIG2_Z));
    let mut svg = Svg::new(bx, by);
    let mut glyphs = 0;
    for (i, psi, comps) in &traced {
        for (c, line) in comps.iter().enumerate() {
            svg.polyline(&line.points, line.closed, "level", &format!(r#" data-level="{i}" data-component="{c}""#));
        }
        if *i != 3 && *i != 5 {
            continue;
        }
        let beta = series.beta(*psi).0;
        let tag = format!(r#" data-level="{i}""#);
        for line in comps {
            let stride = (line.points.len() / GLYPHS_PER_COMPONENT).max(1);
            for q in line.points.iter().step_by(stride) {
                let (_, pr, pz) = poly.gradient(q[0], q[1]);
                let g = pr.hypot(pz);
                let Some((ur, uz, ut)) = swirl_velocity(q[0], beta, (-pz, pr)) else { continue };
                if g == 0.0 {
                    continue;
                }
                glyph_pair(&mut svg, *q, [ur, uz], [pr / g, pz / g], ut, ctx.glyph_scale, &tag);
                glyphs += 1;
            }
        }
    }
    written.push(ctx.write("fig2.svg", svg.finish("Isobars near the pressure minimum").as_bytes())?);

    let crit = critical_points(&poly, (0.05, FIG2_R.1), FIG2_Z, 41);
    let saddles: Vec<CriticalPoint> = crit.iter().copied().filter(|c| c.kind == CriticalKind::Saddle).collect();
    let report = Fig2Report {
        order,
        step: h,
        psi_ref: DEFAULT_PSI_REF,
        terms: poly.terms(),
        levels: traced
            .iter()
            .map(|(i, psi, comps)| Fig2Level {
                index: *i,
                psi: *psi,
                p: (*psi / DEFAULT_PSI_REF).ln() / 3.0,
                components: comps.len(),
                closed: comps.iter().filter(|c| c.closed).count(),
            })
            .collect(),
        critical_points: crit,
        saddles: saddles.clone(),
        glyph_scale: ctx.glyph_scale,
        glyphs,
    };
    written.push(ctx.write_json("fig2_report.json", &report)?);
    let counts: Vec<usize> = report.levels.iter().map(|l| l.components).collect();
    println!("components per level: {counts:?}");
    match saddles.first() {
        Some(s) => println!("saddle at (r, z) = ({:.6}, {:.6})", s.r, s.z),
        None => println!("no saddle"),
    }
    announce(&written);
    Ok(())
}

/// Render a generatrix CSV (curves r = f(p, z) per slice) or an isoline CSV.
pub fn plot(ctx: &Context, file: &Path) -> CliResult<()> {
    let bytes = read_bytes(file)?;
    let (header, rows) = io::parse_csv_any(&bytes)?;
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut svg_curves: Vec<(String, Vec<[f64; 2]>, bool)> = Vec::new();
    if header == io::GENERATRIX_HEADER {
        let mut by_p: BTreeMap<u64, (f64, Vec<[f64; 2]>)> = BTreeMap::new();
        let mut order = Vec::new();
        for row in &rows {
            if row[8] != 1.0 {
                continue;
            }
            let key = row[0].to_bits();
            if !by_p.contains_key(&key) {
                order.push(key);
            }
            by_p.entry(key).or_insert((row[0], Vec::new())).1.push([row[1], row[2]]);
        }
        for key in order {
            let (p, pts) = by_p.remove(&key).expect("key recorded");
            svg_curves.push((format!(r#" data-p="{p:.6}""#), pts, false));
        }
    } else if header == ISOLINE_HEADER {
        let mut current: Option<(u64, u64, bool, Vec<[f64; 2]>)> = None;
        let flush = |c: Option<(u64, u64, bool, Vec<[f64; 2]>)>, out: &mut Vec<(String, Vec<[f64; 2]>, bool)>| {
            if let Some((l, k, closed, pts)) = c {
                out.push((format!(r#" data-level="{l}" data-component="{k}""#), pts, closed));
            }
        };
        for row in &rows {
            let (l, k) = (row[0] as u64, row[2] as u64);
            match &mut current {
                Some((cl, ck, _, pts)) if *cl == l && *ck == k => pts.push([row[5], row[6]]),
                _ => {
                    flush(current.take(), &mut svg_curves);
                    current = Some((l, k, row[3] == 1.0, vec![[row[5], row[6]]]));
                }
            }
        }
        flush(current.take(), &mut svg_curves);
    } else {
        return Err(CliError::Input(format!(
            "{}: not a generatrix or isoline table (columns {header:?})",
            file.display()
        )));
    }
    let (bx, by) = bounds(svg_curves.iter().flat_map(|c| c.1.iter()), 0.05)
        .ok_or_else(|| CliError::Numerical(format!("{}: no admissible points to draw", file.display())))?;
    let mut svg = Svg::new(bx, by);
    for (attrs, pts, closed) in &svg_curves {
        svg.polyline(pts, *closed, "curve", attrs);
    }
    let stem = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "plot".into());
    let path = ctx.write(&format!("{stem}.svg"), svg.finish(&stem).as_bytes())?;
    println!("{} curves", svg_curves.len());
    announce(&[path]);
    Ok(())
}
