use std::sync::OnceLock;

use gavriflow::axisolver::{
    detect_symmetry, extend_periodic, solve_f, FlowScenario, GeneratrixGrid, StationKind, SymmetryReport,
};
use gavriflow::ProfileTriple;

struct Solved {
    sc: FlowScenario,
    profiles: ProfileTriple,
    grid: GeneratrixGrid,
    report: SymmetryReport,
}

fn solved() -> &'static Solved {
    static S: OnceLock<Solved> = OnceLock::new();
    S.get_or_init(|| {
        let sc = FlowScenario::figure1();
        let profiles = sc.integrate_profiles().unwrap();
        let grid = solve_f(&sc, &profiles).unwrap();
        let report = detect_symmetry(&grid, sc.tol);
        Solved { sc, profiles, grid, report }
    })
}

#[test]
fn stations_bracket_the_origin() {
    let s = solved();
    let i0 = s.grid.slice_index(0.0).unwrap();
    let st = &s.report.stations[i0];
    let below = st.iter().filter(|x| x.z0 < 0.0).max_by(|a, b| a.z0.total_cmp(&b.z0)).unwrap();
    let above = st.iter().filter(|x| x.z0 > 0.0).min_by(|a, b| a.z0.total_cmp(&b.z0)).unwrap();
    assert_eq!(below.kind, StationKind::Min);
    assert_eq!(above.kind, StationKind::Max);
    assert!((below.z0 + 0.4586).abs() < 1e-3, "{}", below.z0);
    assert!((above.z0 - 0.6046).abs() < 1e-3, "{}", above.z0);
    assert!(below.is_regular() && above.is_regular());
}

#[test]
fn stations_are_vertical() {
    let s = solved();
    assert!(s.report.vertical, "drift {}", s.report.vertical_drift);
    assert!(s.report.vertical_drift <= s.sc.tol.max(1e-9));
}

#[test]
fn reflection_period() {
    let s = solved();
    let t = s.report.period.unwrap();
    assert!((t - 2.1263).abs() < 1e-3, "{t}");
    assert!((s.report.period_station_rule.unwrap() - t / 2.0).abs() < 1e-12);
}

#[test]
fn extension_is_periodic_and_reflective() {
    let s = solved();
    let ext = extend_periodic(&s.grid, &s.report, s.sc.tol).unwrap();
    assert!((ext.period - s.report.period.unwrap()).abs() < 1e-6);
    let i = ext.p.iter().position(|&p| p.abs() < 1e-12).unwrap();
    let mut worst_shift = 0.0f64;
    let mut worst_mirror = 0.0f64;
    for k in 0..200 {
        let z = ext.z_a + ext.period * k as f64 / 200.0;
        let (f0, fz0, _) = ext.eval(i, z);
        let (f1, fz1, _) = ext.eval(i, z + 3.0 * ext.period);
        worst_shift = worst_shift.max((f0 - f1).abs()).max((fz0 - fz1).abs());
        let d = z - ext.z_b;
        let (fa, fza, _) = ext.eval(i, ext.z_b + d);
        let (fb, fzb, _) = ext.eval(i, ext.z_b - d);
        worst_mirror = worst_mirror.max((fa - fb).abs()).max((fza + fzb).abs());
    }
    assert!(worst_shift < 1e-9);
    assert!(worst_mirror < 1e-9);
}

/// The f'_p residual is only resolved away from the narrow neck at the lower
/// station, so it is checked on the same window as the solver's own checks.
#[test]
fn extended_grid_keeps_residuals_small() {
    let s = solved();
    let ext = extend_periodic(&s.grid, &s.report, s.sc.tol).unwrap();
    let g = ext.to_grid(3, &s.profiles).unwrap();
    assert!(g.z.last().unwrap() - g.z[0] >= 2.9 * ext.period);
    let (_, rg) = g.max_residuals(None);
    let (rf_near, _) = g.max_residuals(Some((-0.25, 0.25)));
    let (rf_all, _) = g.max_residuals(None);
    let (rf_solver, _) = s.grid.max_residuals(None);
    assert!(rg < 1e-6, "{rg}");
    assert!(rf_near < 1e-6, "{rf_near}");
    assert!(rf_all <= 1.01 * rf_solver, "{rf_all} vs {rf_solver}");
}

#[test]
fn extension_matches_the_solver_inside_the_cell() {
    let s = solved();
    let ext = extend_periodic(&s.grid, &s.report, s.sc.tol).unwrap();
    let mut worst = 0.0f64;
    for (ie, &p) in ext.p.iter().enumerate() {
        let i = s.grid.slice_index(p).unwrap();
        for (j, &z) in s.grid.z.iter().enumerate() {
            if z > ext.z_a && z < ext.z_b && s.grid.admissible[[i, j]] {
                worst = worst.max((ext.eval(ie, z).0 - s.grid.f[[i, j]]).abs());
            }
        }
    }
    assert!(worst < 1e-12, "{worst}");
}
