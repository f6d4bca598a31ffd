//! Acceptance checks. Each criterion prints one PASS or FAIL line; the
//! process exits nonzero when any criterion fails.

use std::time::{Duration, Instant};

use gavriflow::axisolver::{detect_symmetry, find_pc, solve_f, solve_f_ordered, FlowScenario, MarchOrder};
use gavriflow::consistency::{bracket_scale, closure, fg_at, is_admissible, jacobi_bracket_at, JetPoint};
use gavriflow::fields::{
    cartesian_euler_residuals, euler_residuals, localize, make_evendim_flow, plane_section_integral,
    reconstruct_generatrix, sample_cartesian, worst_slope, Bump, Plane, TorusFlow, Variant,
};
use gavriflow::minpoint::{
    critical_points, isolines, psi_taylor, symmetric_nodes, uniform_nodes, CriticalKind, ProfileSeries, PsiEvaluator,
    PsiField, DEFAULT_PSI_REF, DEFAULT_SERIES_ORDER,
};
use gavriflow::profiles::{consistency_residuals, integrate_profiles};
use gavriflow::series::{q, series_beta_gamma};
use gavriflow::{ProfileInit, ProfileTriple, Sign};
use num_rational::BigRational;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const SLOPE_MIN: f64 = 1.7;
const NORMALIZATION_TOL: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, limit: f64) -> bool {
    elapsed.as_secs_f64() < limit
}

fn series_exactness() -> Outcome {
    let start = Instant::now();
    let (beta, gamma) = series_beta_gamma(6);
    let elapsed = start.elapsed();
    let reference_beta = [q(1, 3), q(-7, 6), q(13, 72), q(-133, 1728), q(575, 13824), q(-2077, 82944), q(37, 2304)];
    let reference_gamma = [q(-1, 1), q(1, 1), q(-1, 8), q(7, 144), q(-115, 4608), q(67, 4608), q(-7, 768)];
    let mut mismatches = Vec::new();
    for (k, c) in reference_beta.iter().enumerate() {
        if &beta.coefficient(k) != c {
            mismatches.push(format!("beta[{k}]"));
        }
    }
    for (k, c) in reference_gamma.iter().enumerate() {
        if &gamma.coefficient(k) != c {
            mismatches.push(format!("gamma[{k}]"));
        }
    }
    let checked = reference_beta.len() + reference_gamma.len();
    outcome(
        mismatches.is_empty() && within(elapsed, 1.0),
        format!(
            "{} of {checked} coefficients exact, mismatches {mismatches:?}, {:.3} s",
            checked - mismatches.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn taylor_exactness() -> Outcome {
    let start = Instant::now();
    let poly = match psi_taylor(5) {
        Ok(p) => p,
        Err(e) => return outcome(false, format!("psi_taylor(5) failed: {e}")),
    };
    let elapsed = start.elapsed();
    // (power of r − 1, power of z, reference value)
    let reference: [(usize, usize, BigRational); 10] = [
        (2, 0, q(3, 2)),
        (0, 2, q(3, 2)),
        (3, 0, q(9, 4)),
        (1, 2, q(9, 4)),
        (4, 0, q(57, 32)),
        (2, 2, q(45, 16)),
        (0, 4, q(33, 32)),
        (5, 0, q(9, 8)),
        (3, 2, q(9, 4)),
        (1, 4, q(9, 4)),
    ];
    let mismatches: Vec<String> = reference
        .iter()
        .filter(|(j, k, c)| &poly.coefficient(*j, *k) != c)
        .map(|(j, k, c)| format!("({j},{k}) computed {} reference {c}", poly.coefficient(*j, *k)))
        .collect();
    outcome(
        mismatches.is_empty() && within(elapsed, 5.0),
        format!(
            "{} of 10 reference terms exact, mismatches {mismatches:?}, {:.3} s",
            10 - mismatches.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn profile_interval() -> Outcome {
    let start = Instant::now();
    let init = ProfileInit { alpha0: 1.0, beta0: 0.01, gamma0: 0.5, epsilon: Sign::Plus };
    let triple = match integrate_profiles(init, (-1.0, 10.0), 1e-3) {
        Ok(t) => t,
        Err(e) => return outcome(false, format!("integration failed: {e}")),
    };
    let elapsed = start.elapsed();
    let (lo, hi) = triple.valid_interval;
    let ok_lo = (lo - (-0.07)).abs() <= 0.02;
    let ok_hi = (hi - 7.48).abs() <= 0.02;
    outcome(
        ok_lo && ok_hi && within(elapsed, 1.0),
        format!(
            "interval ({lo:.4}, {hi:.4}) vs (-0.07, 7.48) ± 0.02: lower {}, upper {}; ends {:?}; {:.3} s",
            if ok_lo { "ok" } else { "off" },
            if ok_hi { "ok" } else { "off" },
            triple.termination,
            elapsed.as_secs_f64()
        ),
    )
}

fn figure1_periodicity() -> Outcome {
    let start = Instant::now();
    let sc = FlowScenario::figure1();
    let run = || -> gavriflow::Result<(Option<f64>, Option<f64>, Option<f64>)> {
        let profiles = sc.integrate_profiles()?;
        let grid = solve_f(&sc, &profiles)?;
        let report = detect_symmetry(&grid, sc.tol);
        let wide = sc.integrate_profiles_over((-0.01, 1.6))?;
        let p_c = find_pc(&sc, &wide, (0.0, 1.5))?;
        Ok((report.period, report.period_station_rule, p_c))
    };
    let (period, rule, p_c) = match run() {
        Ok(v) => v,
        Err(e) => return outcome(false, format!("pipeline failed: {e}")),
    };
    let elapsed = start.elapsed();
    let ok_t = period.is_some_and(|t| (t - 2.8).abs() <= 0.1);
    let ok_pc = p_c.is_some_and(|p| (p - 0.25).abs() <= 0.05);
    outcome(
        ok_t && ok_pc && within(elapsed, 30.0),
        format!(
            "period {period:?} (station rule {rule:?}) vs 2.8 ± 0.1; p_c {p_c:?} vs 0.25 ± 0.05; {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn figure2_topology() -> Outcome {
    let start = Instant::now();
    let run = || -> gavriflow::Result<(Vec<usize>, bool, bool)> {
        let series = ProfileSeries::new(DEFAULT_SERIES_ORDER)?;
        let poly5 = psi_taylor(5)?;
        let h = 0.005;
        let (r, z) = (uniform_nodes(0.0, 1.6, h), uniform_nodes(-0.8, 0.8, h));
        let mut field = PsiField::from_poly(&poly5, &r, &z, &series)?;
        field.mask_negative();
        let levels: Vec<f64> = (1..=6).map(|i| DEFAULT_PSI_REF * i as f64).collect();
        let counts = isolines(&field, &levels).iter().map(|l| l.components.len()).collect();
        let near = |c: &gavriflow::minpoint::CriticalPoint| {
            c.kind == CriticalKind::Saddle && (c.r - 1.0 / 3.0).abs() < 1e-6 && c.z.abs() < 1e-6
        };
        let saddle5 = critical_points(&poly5, (0.05, 1.6), (-0.8, 0.8), 41).iter().any(near);
        let poly6 = psi_taylor(6)?;
        let saddle6 = critical_points(&poly6, (0.05, 1.6), (-0.8, 0.8), 41)
            .iter()
            .any(|c| c.kind == CriticalKind::Saddle && (c.r - 1.0 / 3.0).abs() < 0.1 && c.z.abs() < 0.1);
        Ok((counts, saddle5, saddle6))
    };
    let (counts, saddle5, saddle6) = match run() {
        Ok(v) => v,
        Err(e) => return outcome(false, format!("pipeline failed: {e}")),
    };
    let elapsed = start.elapsed();
    outcome(
        counts == [2, 2, 2, 2, 2, 1] && saddle5 && !saddle6 && within(elapsed, 10.0),
        format!(
            "components {counts:?}; saddle at (1/3, 0): degree 5 {saddle5}, degree 6 {saddle6}; {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

/// A random admissible jet on consistent profiles, with its profile point.
fn random_consistent_jet(rng: &mut StdRng) -> Option<(JetPoint, gavriflow::ProfilePoint, Sign)> {
    let eps = if rng.gen_bool(0.5) { Sign::Plus } else { Sign::Minus };
    let init = ProfileInit {
        alpha0: rng.gen_range(0.5..2.0),
        beta0: rng.gen_range(0.0..0.2),
        gamma0: eps.value() * rng.gen_range(0.2..1.5),
        epsilon: eps,
    };
    let triple = integrate_profiles(init, (-0.05, 0.3), 1e-3).ok()?;
    let (lo, hi) = triple.valid_interval;
    let p = rng.gen_range(lo.max(-0.04)..hi.min(0.25));
    let pt = triple.at(p)?;
    for _ in 0..200 {
        let f = rng.gen_range(pt.beta.max(0.0).sqrt()..3.0);
        if !is_admissible(f, &pt, eps) {
            continue;
        }
        let (pi, zeta_sq) = closure(f, &pt, eps).ok()?;
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        return Some((JetPoint { p, z: rng.gen_range(-1.0..1.0), f, pi, zeta: sign * zeta_sq.sqrt() }, pt, eps));
    }
    None
}

fn completeness_dichotomy() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x6a76_2024);
    let mut worst = 0.0f64;
    let mut jets = 0;
    let mut attempts = 0;
    while jets < 100 && attempts < 10_000 {
        attempts += 1;
        let Some((jet, pt, eps)) = random_consistent_jet(&mut rng) else { continue };
        let scale = bracket_scale(&jet, &pt, eps);
        worst = worst.max(jacobi_bracket_at(&jet, &pt, eps).abs() / scale);
        jets += 1;
    }

    let mut fg_max = 0.0f64;
    let mut resid_min = f64::INFINITY;
    for a0 in [0.1, 0.25, 0.5, 0.75, 1.0] {
        let triple = ProfileTriple::exceptional(a0).expect("a0 in (0, 1]");
        for p in [0.05, 0.2, 0.5, 1.0, 2.0, 5.0] {
            let pt = triple.at(p).expect("p > 0");
            let jet = JetPoint { p, z: 0.0, f: 2.0 * p.sqrt(), pi: 1.0 / p.sqrt(), zeta: 0.0 };
            let (f, g) = fg_at(&jet, &pt, triple.epsilon);
            fg_max = fg_max.max(f.abs()).max(g.abs());
            let (r1, r2) = consistency_residuals(&pt, triple.epsilon);
            resid_min = resid_min.min(r1.abs().max(r2.abs()));
        }
    }
    outcome(
        jets == 100 && worst <= 1e-9 && fg_max <= 1e-12 && resid_min > 0.1,
        format!(
            "{jets} jets, max |bracket|/scale {worst:.2e}; exceptional family max |F|,|G| {fg_max:.1e}, min residual {resid_min:.3}"
        ),
    )
}

fn slopes_ok(maxima: &[Vec<f64>]) -> (bool, Vec<Option<f64>>) {
    let n = maxima[0].len();
    let slopes: Vec<Option<f64>> =
        (0..n).map(|k| worst_slope(&maxima.iter().map(|m| m[k]).collect::<Vec<_>>())).collect();
    (slopes.iter().all(|s| s.is_none_or(|s| s >= SLOPE_MIN)), slopes)
}

fn fmt_slopes(s: &[Option<f64>]) -> String {
    s.iter().map(|v| v.map_or("exact".to_string(), |v| format!("{v:.2}"))).collect::<Vec<_>>().join(", ")
}

fn euler_verification() -> Outcome {
    let figure1 = || -> gavriflow::Result<(Vec<Vec<f64>>, f64)> {
        let sc = FlowScenario::figure1();
        let profiles = sc.integrate_profiles()?;
        let grid = solve_f(&sc, &profiles)?;
        let mut maxima = Vec::new();
        let mut norm = 0.0f64;
        for stride in [8usize, 4, 2] {
            let h = stride as f64 * sc.z_step;
            let mut field =
                reconstruct_generatrix(&grid, &profiles, &uniform_nodes(0.95, 1.25, h), stride, (-0.2, 0.2))?;
            field.restrict_pressure(0.08, 0.16);
            norm = norm.max(field.normalization_error());
            maxima.push(euler_residuals(&field).maxima().to_vec());
        }
        Ok((maxima, norm))
    };
    let localized = || -> gavriflow::Result<Vec<Vec<f64>>> {
        let flow = localize(make_evendim_flow(1, Variant::Even)?, Some(Bump { p0: 0.6, delta: 0.5 }))?;
        [0.01, 0.005, 0.0025]
            .iter()
            .map(|&h| {
                let axes = vec![symmetric_nodes(1.5, h); 2];
                Ok(cartesian_euler_residuals(&sample_cartesian(&flow, &axes)?).maxima())
            })
            .collect()
    };
    let ((m1, norm), m2) = match (figure1(), localized()) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return outcome(false, format!("pipeline failed: {e}")),
    };
    let (ok1, s1) = slopes_ok(&m1);
    let (ok2, s2) = slopes_ok(&m2);
    outcome(
        ok1 && ok2 && norm <= NORMALIZATION_TOL,
        format!(
            "Figure-1 slopes [{}], normalization {norm:.1e}; localized rotation slopes [{}]",
            fmt_slopes(&s1),
            fmt_slopes(&s2)
        ),
    )
}

fn plane_section() -> Outcome {
    let run = || -> gavriflow::Result<(Vec<f64>, f64, bool)> {
        let poly = psi_taylor(12)?;
        let series = ProfileSeries::new(DEFAULT_SERIES_ORDER)?;
        let ev = PsiEvaluator::new(&poly, series, 0.3, 1.0, 0.005)?;
        let torus = TorusFlow::with_cut_cap(ev, DEFAULT_PSI_REF, 1.0)?;
        let (a, b) = (torus.pressure_of_psi(0.01), torus.pressure_of_psi(0.12));
        let level_p = torus.pressure_of_psi(0.09);
        let flow = localize(torus, Some(Bump { p0: 0.5 * (a + b), delta: 0.5 * (b - a) }))?;
        let level = flow.pressure_map(level_p);
        let plane = Plane::tilted(0.1, 5.0);
        let xi = plane.basis().0;
        let integrals = [101, 201, 401]
            .iter()
            .map(|&n| plane_section_integral(&flow, &plane, level, xi, 1.4, n).map(|r| r.integral))
            .collect::<gavriflow::Result<Vec<f64>>>()?;
        let far = Plane::tilted(5.0, 5.0);
        let miss = plane_section_integral(&flow, &far, level, far.basis().0, 1.4, 101)?;
        Ok((integrals, miss.integral, miss.empty))
    };
    let (integrals, miss, empty) = match run() {
        Ok(v) => v,
        Err(e) => return outcome(false, format!("pipeline failed: {e}")),
    };
    let ratios: Vec<f64> = integrals.windows(2).map(|w| (w[0] / w[1]).abs()).collect();
    outcome(
        ratios.iter().all(|&r| r >= 2.0) && miss == 0.0 && empty,
        format!(
            "integrals {:?}, ratios {:?}; non-intersecting plane integral {miss}, empty {empty}",
            integrals.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>(),
            ratios.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>()
        ),
    )
}

/// Half width of the z-window treated as the interior; it stays clear of the
/// turning points at z ≈ −0.46 and 0.60, where f''_zz is large.
const INTERIOR_Z: f64 = 0.2;

fn march_commutativity() -> Outcome {
    let sc = FlowScenario::figure1();
    let run = || -> gavriflow::Result<(f64, f64, usize)> {
        let profiles = sc.integrate_profiles()?;
        let a = solve_f_ordered(&sc, &profiles, MarchOrder::PThenZ)?;
        let b = solve_f_ordered(&sc, &profiles, MarchOrder::ZThenP)?;
        let (mut inner, mut everywhere, mut count) = (0.0f64, 0.0f64, 0);
        for ((i, j), &ok) in a.admissible.indexed_iter() {
            if !(ok && b.admissible[[i, j]]) {
                continue;
            }
            let d = (a.f[[i, j]] - b.f[[i, j]]).abs();
            everywhere = everywhere.max(d);
            if a.z[j].abs() <= INTERIOR_Z {
                inner = inner.max(d);
                count += 1;
            }
        }
        Ok((inner, everywhere, count))
    };
    let tol = 10.0 * sc.p_step.max(sc.z_step).powi(4);
    match run() {
        Ok((inner, everywhere, count)) => outcome(
            count > 0 && inner <= tol,
            format!(
                "max |f_pz - f_zp| {inner:.2e} over {count} nodes with |z| <= {INTERIOR_Z}, tolerance {tol:.1e} \
                 (whole grid {everywhere:.2e})"
            ),
        ),
        Err(e) => outcome(false, format!("pipeline failed: {e}")),
    }
}

fn main() {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check); 9] = [
        ("series exactness", series_exactness),
        ("Taylor exactness", taylor_exactness),
        ("profile interval", profile_interval),
        ("periodicity", figure1_periodicity),
        ("isobar topology", figure2_topology),
        ("completeness dichotomy", completeness_dichotomy),
        ("Euler verification", euler_verification),
        ("plane section", plane_section),
        ("march commutativity", march_commutativity),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("{} criterion {} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, k + 1, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
