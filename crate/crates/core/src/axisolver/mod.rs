//! Numerical solution of the first-order system for the generatrix graph
//! r = f(p, z), with symmetry detection and periodic extension.

mod symmetry;

pub use symmetry::{
    detect_symmetry, extend_periodic, find_pc, period_by_station_rule, period_from_reflections, station_curvature,
    ExtendedGrid, Station, StationKind, SymmetryReport, CURVATURE_FACTOR,
};

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::consistency::{fg_at, JetPoint, ZETA_SQ_TOL};
use crate::error::{Error, Result};
use crate::ode::rk4_step;
use crate::profiles::{integrate_profiles, ProfileInit, ProfilePoint, ProfileTriple};
use crate::sign::Sign;

fn default_tol() -> f64 {
    1e-6
}

/// The five constants plus grid and tolerance settings defining one flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowScenario {
    pub alpha0: f64,
    pub beta0: f64,
    pub gamma0: f64,
    pub f0: f64,
    pub epsilon: Sign,
    pub p_min: f64,
    pub p_max: f64,
    pub p_step: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub z_step: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Sign of f'_z at (p_origin, 0).
    #[serde(default)]
    pub zeta_sign: Sign,
    /// Pressure at which f(p_origin, 0) = f0.
    #[serde(default)]
    pub p_origin: f64,
}

impl FlowScenario {
    /// The flow drawn in the periodic example: α₀=1, β₀=0.01, γ₀=0.5, f₀=0.97, ε=1.
    pub fn figure1() -> Self {
        FlowScenario {
            alpha0: 1.0,
            beta0: 0.01,
            gamma0: 0.5,
            f0: 0.97,
            epsilon: Sign::Plus,
            p_min: 0.0,
            p_max: 0.16,
            p_step: 1e-3,
            z_min: -1.5,
            z_max: 1.5,
            z_step: 1e-3,
            tol: 1e-6,
            zeta_sign: Sign::Plus,
            p_origin: 0.0,
        }
    }

    pub fn profile_init(&self) -> ProfileInit {
        ProfileInit { alpha0: self.alpha0, beta0: self.beta0, gamma0: self.gamma0, epsilon: self.epsilon }
    }

    /// Both lines of the admissibility conditions for the constants, plus grid sanity.
    pub fn validate(&self) -> Result<()> {
        self.validate_grid()?;
        self.profile_init().validate()?;
        let pt = ProfilePoint {
            p: self.p_origin,
            alpha: self.alpha0,
            beta: self.beta0,
            gamma: self.gamma0,
            dalpha: 3.0 * self.alpha0,
            dbeta: 0.0,
            dgamma: 0.0,
        };
        check_initial_point(self.f0, &pt, self.epsilon, true)
    }

    pub fn validate_grid(&self) -> Result<()> {
        let finite =
            [self.p_min, self.p_max, self.p_step, self.z_min, self.z_max, self.z_step, self.tol, self.p_origin];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("scenario contains non-finite numbers".into()));
        }
        if !(self.p_step > 0.0 && self.z_step > 0.0 && self.tol > 0.0) {
            return Err(Error::Parameter("steps and tolerance must be positive".into()));
        }
        if !(self.p_min <= self.p_origin && self.p_origin <= self.p_max) {
            return Err(Error::Parameter("p range must contain p_origin".into()));
        }
        if !(self.z_min <= 0.0 && 0.0 <= self.z_max) {
            return Err(Error::Parameter("z range must contain 0".into()));
        }
        Ok(())
    }

    /// Integrate the profiles over the scenario's p-range (extended to contain 0).
    pub fn integrate_profiles(&self) -> Result<ProfileTriple> {
        let lo = self.p_min.min(0.0) - 2.0 * self.p_step;
        let hi = self.p_max.max(0.0) + 2.0 * self.p_step;
        integrate_profiles(self.profile_init(), (lo, hi), self.p_step)
    }

    /// Integrate the profiles over an explicit range, which must contain 0.
    pub fn integrate_profiles_over(&self, range: (f64, f64)) -> Result<ProfileTriple> {
        integrate_profiles(self.profile_init(), range, self.p_step)
    }

    pub(crate) fn p_nodes(&self) -> (Vec<f64>, usize) {
        nodes(self.p_origin, self.p_min, self.p_max, self.p_step)
    }

    pub(crate) fn z_nodes(&self) -> (Vec<f64>, usize) {
        nodes(0.0, self.z_min, self.z_max, self.z_step)
    }
}

/// Uniform nodes origin + k·h inside [lo, hi]; returns nodes and the index of the origin.
fn nodes(origin: f64, lo: f64, hi: f64, h: f64) -> (Vec<f64>, usize) {
    let k_lo = ((lo - origin) / h - 1e-9).ceil() as i64;
    let k_hi = ((hi - origin) / h + 1e-9).floor() as i64;
    let v = (k_lo..=k_hi).map(|k| origin + k as f64 * h).collect();
    (v, (-k_lo) as usize)
}

/// The second line of the admissibility conditions at the initial point.
/// With `strict == false` the upper bound may be attained (a turning point).
pub fn check_initial_point(f0: f64, pt: &ProfilePoint, eps: Sign, strict: bool) -> Result<()> {
    let d = f0 * f0 - pt.beta;
    if !(f0 > 0.0 && d > 0.0) {
        return Err(Error::Parameter(format!("f0 = {f0} must exceed sqrt(beta) = {}", pt.beta.max(0.0).sqrt())));
    }
    let e = eps.value() * f0 * f0 + pt.gamma;
    let bound = 2.0 * pt.alpha.sqrt() * d.sqrt() / f0;
    let upper_ok = if strict { e < bound } else { e <= bound * (1.0 + 1e-12) };
    if !(e > 0.0 && upper_ok) {
        return Err(Error::Parameter(format!(
            "eps*f0^2 + gamma0 = {e} must lie in (0, {bound}) for an admissible initial point"
        )));
    }
    Ok(())
}

/// Sampled solution f(p, z) with derivatives, residuals and admissibility mask.
#[derive(Debug, Clone)]
pub struct GeneratrixGrid {
    pub p: Vec<f64>,
    pub z: Vec<f64>,
    pub f: Array2<f64>,
    pub fp: Array2<f64>,
    pub fz: Array2<f64>,
    pub fzz: Array2<f64>,
    pub resid_f: Array2<f64>,
    pub resid_g: Array2<f64>,
    pub admissible: Array2<bool>,
    /// Slices flagged as z-independent (cylinders), not marched.
    pub degenerate: Vec<bool>,
    pub epsilon: Sign,
    pub zeta_sign: Sign,
    /// True when the requested p-range was cut short.
    pub p_truncated: bool,
    /// Index of z = 0 in `z`.
    pub z_origin: usize,
}

impl GeneratrixGrid {
    pub fn dims(&self) -> (usize, usize) {
        (self.p.len(), self.z.len())
    }

    /// Index of the slice whose pressure is closest to `p`.
    pub fn slice_index(&self, p: f64) -> Option<usize> {
        self.p.iter().enumerate().min_by(|a, b| (a.1 - p).abs().total_cmp(&(b.1 - p).abs())).map(|(i, _)| i)
    }

    /// Max of |residF| and |residG| over admissible nodes, optionally restricted to a z-window.
    pub fn max_residuals(&self, z_window: Option<(f64, f64)>) -> (f64, f64) {
        let (mut mf, mut mg) = (0.0f64, 0.0f64);
        for ((i, j), &ok) in self.admissible.indexed_iter() {
            if !ok {
                continue;
            }
            if let Some((a, b)) = z_window {
                if self.z[j] < a || self.z[j] > b {
                    continue;
                }
            }
            mf = mf.max(self.resid_f[[i, j]].abs());
            mg = mg.max(self.resid_g[[i, j]].abs());
        }
        (mf, mg)
    }
}

/// Right-hand side of the second-order z-equation for fixed profile values.
pub fn fzz_rhs(f: f64, zeta: f64, pt: &ProfilePoint, eps: Sign) -> f64 {
    let q = 1.0 + zeta * zeta;
    let d = f * f - pt.beta;
    pt.beta * q / (f * d) - eps.value() * f * f * q * q.sqrt() / (pt.alpha.sqrt() * d.sqrt())
}

/// df/dp along a column from the closure (needs no ζ).
pub fn column_rhs(f: f64, pt: &ProfilePoint, eps: Sign) -> f64 {
    2.0 * eps.value() * pt.alpha / (f * (eps.value() * f * f + pt.gamma))
}

/// ζ² from the closure, without the admissibility check.
pub(crate) fn closure_zeta_sq(f: f64, pt: &ProfilePoint, eps: Sign) -> f64 {
    let e = eps.value() * f * f + pt.gamma;
    4.0 * pt.alpha * (f * f - pt.beta) / (f * f * e * e) - 1.0
}

fn node_admissible(f: f64, pt: &ProfilePoint, eps: Sign) -> bool {
    let d = f * f - pt.beta;
    let e = eps.value() * f * f + pt.gamma;
    f > 0.0 && d > 0.0 && e > 0.0 && f.is_finite() && closure_zeta_sq(f, pt, eps) >= -ZETA_SQ_TOL.sqrt()
}

/// Integrate df/dp = π(p, f) on a uniform p-lattice from `p[start]` with value `f0`.
/// Returns values for the contiguous run of nodes reached; `None` entries were not reached.
fn march_column(p: &[f64], start: usize, f0: f64, profiles: &ProfileTriple) -> Vec<Option<f64>> {
    let eps = profiles.epsilon;
    let rhs = |pp: f64, y: &[f64; 1]| -> [f64; 1] {
        match profiles.at(pp) {
            Some(pt) if y[0] > 0.0 && eps.value() * y[0] * y[0] + pt.gamma > 0.0 => [column_rhs(y[0], &pt, eps)],
            _ => [f64::NAN],
        }
    };
    let mut out = vec![None; p.len()];
    out[start] = Some(f0);
    for dir in [1i64, -1] {
        let mut y = [f0];
        let mut i = start as i64;
        loop {
            let j = i + dir;
            if j < 0 || j >= p.len() as i64 {
                break;
            }
            let h = p[j as usize] - p[i as usize];
            let next = rk4_step(&rhs, p[i as usize], &y, h);
            if !next[0].is_finite() || profiles.at(p[j as usize]).is_none() {
                break;
            }
            y = next;
            out[j as usize] = Some(y[0]);
            i = j;
        }
    }
    out
}

/// One p-slice marched in z from (f, ζ) at z = 0 with the second-order equation.
pub(crate) struct Slice {
    f: Vec<f64>,
    fz: Vec<f64>,
    fzz: Vec<f64>,
    ok: Vec<bool>,
}

pub(crate) fn march_slice(z: &[f64], z0: usize, f0: f64, zeta0: f64, pt: &ProfilePoint, eps: Sign) -> Slice {
    let n = z.len();
    let mut s = Slice { f: vec![f64::NAN; n], fz: vec![f64::NAN; n], fzz: vec![f64::NAN; n], ok: vec![false; n] };
    let rhs = |_z: f64, y: &[f64; 2]| -> [f64; 2] { [y[1], fzz_rhs(y[0], y[1], pt, eps)] };
    let put = |s: &mut Slice, j: usize, y: &[f64; 2]| {
        s.f[j] = y[0];
        s.fz[j] = y[1];
        s.fzz[j] = fzz_rhs(y[0], y[1], pt, eps);
        s.ok[j] = node_admissible(y[0], pt, eps) && s.fzz[j].is_finite();
    };
    let y0 = [f0, zeta0];
    put(&mut s, z0, &y0);
    if !s.ok[z0] {
        return s;
    }
    for dir in [1i64, -1] {
        let mut y = y0;
        let mut j = z0 as i64;
        loop {
            let k = j + dir;
            if k < 0 || k >= n as i64 {
                break;
            }
            let h = z[k as usize] - z[j as usize];
            y = rk4_step(&rhs, z[j as usize], &y, h);
            put(&mut s, k as usize, &y);
            if !s.ok[k as usize] {
                s.f[k as usize] = f64::NAN;
                break;
            }
            j = k;
        }
    }
    s
}

/// Slice for a z-independent solution.
fn cylinder_slice(n: usize, f0: f64) -> Slice {
    Slice { f: vec![f0; n], fz: vec![0.0; n], fzz: vec![0.0; n], ok: vec![true; n] }
}

/// Five-point derivative weights for evaluation at offset `k` (0..5) of a uniform stencil.
fn five_point_weights(k: usize) -> [f64; 5] {
    match k {
        0 => [-25.0, 48.0, -36.0, 16.0, -3.0],
        1 => [-3.0, -10.0, 18.0, -6.0, 1.0],
        2 => [1.0, -8.0, 0.0, 8.0, -1.0],
        3 => [-1.0, 6.0, -18.0, 10.0, 3.0],
        _ => [3.0, -16.0, 36.0, -48.0, 25.0],
    }
}

/// Fourth-order p-derivative along column `j`, using admissible nodes only.
fn column_derivative(f: &Array2<f64>, ok: &Array2<bool>, j: usize, i: usize, h: f64) -> Option<f64> {
    let n = f.dim().0;
    if n < 5 {
        return None;
    }
    let order = [2usize, 1, 3, 0, 4];
    for &k in &order {
        if i < k || i - k + 4 >= n {
            continue;
        }
        let start = i - k;
        if (start..start + 5).all(|m| ok[[m, j]]) {
            let w = five_point_weights(k);
            let s: f64 = (0..5).map(|m| w[m] * f[[start + m, j]]).sum();
            return Some(s / (12.0 * h));
        }
    }
    None
}

/// Fourth-order z-derivative along slice `i`, using admissible nodes only.
fn row_derivative(f: &Array2<f64>, ok: &Array2<bool>, i: usize, j: usize, h: f64) -> Option<f64> {
    let n = f.dim().1;
    if n < 5 {
        return None;
    }
    for &k in &[2usize, 1, 3, 0, 4] {
        if j < k || j - k + 4 >= n {
            continue;
        }
        let start = j - k;
        if (start..start + 5).all(|m| ok[[i, m]]) {
            let w = five_point_weights(k);
            let s: f64 = (0..5).map(|m| w[m] * f[[i, start + m]]).sum();
            return Some(s / (12.0 * h));
        }
    }
    None
}

/// Order in which the two directions are marched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarchOrder {
    /// Spine in p along z = 0, then each slice in z.
    PThenZ,
    /// Slice in z at p_origin, then each column in p.
    ZThenP,
}

/// Solve for f(p, z) by marching in p along z = 0 and then in z on each slice.
pub fn solve_f(scenario: &FlowScenario, profiles: &ProfileTriple) -> Result<GeneratrixGrid> {
    solve_f_ordered(scenario, profiles, MarchOrder::PThenZ)
}

pub fn solve_f_ordered(scenario: &FlowScenario, profiles: &ProfileTriple, order: MarchOrder) -> Result<GeneratrixGrid> {
    scenario.validate_grid()?;
    let eps = profiles.epsilon;
    if eps != scenario.epsilon {
        return Err(Error::Parameter("scenario and profiles disagree on epsilon".into()));
    }
    let origin_pt = profiles
        .at(scenario.p_origin)
        .ok_or_else(|| Error::Parameter(format!("profiles undefined at p = {}", scenario.p_origin)))?;
    check_initial_point(scenario.f0, &origin_pt, eps, profiles.consistent)?;

    let (p_all, p0) = scenario.p_nodes();
    let (z, z0) = scenario.z_nodes();
    let seed_zeta =
        |f: f64, pt: &ProfilePoint| -> f64 { scenario.zeta_sign.value() * closure_zeta_sq(f, pt, eps).max(0.0).sqrt() };
    let is_cylinder = |f: f64, pt: &ProfilePoint| -> bool {
        !profiles.consistent && closure_zeta_sq(f, pt, eps).abs() <= scenario.tol
    };

    let (p, slices, degenerate, p_truncated) = match order {
        MarchOrder::PThenZ => {
            let spine = march_column(&p_all, p0, scenario.f0, profiles);
            let reached: Vec<usize> = contiguous(&spine, p0, |i| {
                let pt = profiles.at(p_all[i])?;
                let f = spine[i]?;
                (closure_zeta_sq(f, &pt, eps) >= -ZETA_SQ_TOL && node_admissible(f, &pt, eps)).then_some(())
            });
            let p: Vec<f64> = reached.iter().map(|&i| p_all[i]).collect();
            let results: Vec<(Slice, bool)> = reached
                .par_iter()
                .map(|&i| {
                    let pt = profiles.at(p_all[i]).expect("checked above");
                    let f = spine[i].expect("checked above");
                    if is_cylinder(f, &pt) {
                        (cylinder_slice(z.len(), f), true)
                    } else {
                        (march_slice(&z, z0, f, seed_zeta(f, &pt), &pt, eps), false)
                    }
                })
                .collect();
            let truncated = p.len() < p_all.len();
            let (slices, degenerate) = results.into_iter().unzip();
            (p, slices, degenerate, truncated)
        }
        MarchOrder::ZThenP => {
            let seed = if is_cylinder(scenario.f0, &origin_pt) {
                cylinder_slice(z.len(), scenario.f0)
            } else {
                march_slice(&z, z0, scenario.f0, seed_zeta(scenario.f0, &origin_pt), &origin_pt, eps)
            };
            let columns: Vec<Vec<Option<f64>>> =
                (0..z.len())
                    .into_par_iter()
                    .map(|j| {
                        if seed.ok[j] {
                            march_column(&p_all, p0, seed.f[j], profiles)
                        } else {
                            vec![None; p_all.len()]
                        }
                    })
                    .collect();
            let slices: Vec<Slice> = (0..p_all.len())
                .map(|i| {
                    let pt = profiles.at(p_all[i]);
                    let mut s = Slice {
                        f: vec![f64::NAN; z.len()],
                        fz: vec![f64::NAN; z.len()],
                        fzz: vec![f64::NAN; z.len()],
                        ok: vec![false; z.len()],
                    };
                    if let Some(pt) = pt {
                        for j in 0..z.len() {
                            if let Some(f) = columns[j][i] {
                                if node_admissible(f, &pt, eps) {
                                    s.f[j] = f;
                                    s.ok[j] = true;
                                }
                            }
                        }
                    }
                    s
                })
                .collect();
            let degenerate = vec![false; p_all.len()];
            (p_all, slices, degenerate, false)
        }
    };

    let (np, nz) = (p.len(), z.len());
    let mut f = Array2::from_elem((np, nz), f64::NAN);
    let mut fz = Array2::from_elem((np, nz), f64::NAN);
    let mut fzz = Array2::from_elem((np, nz), f64::NAN);
    let mut ok = Array2::from_elem((np, nz), false);
    for (i, s) in slices.iter().enumerate() {
        for j in 0..nz {
            f[[i, j]] = s.f[j];
            fz[[i, j]] = s.fz[j];
            fzz[[i, j]] = s.fzz[j];
            ok[[i, j]] = s.ok[j];
        }
    }
    if order == MarchOrder::ZThenP {
        for i in 0..np {
            for j in 0..nz {
                if ok[[i, j]] {
                    match row_derivative(&f, &ok, i, j, scenario.z_step) {
                        Some(d) => fz[[i, j]] = d,
                        None => ok[[i, j]] = false,
                    }
                }
            }
        }
    }

    let mut fp = Array2::from_elem((np, nz), f64::NAN);
    let mut resid_f = Array2::from_elem((np, nz), f64::NAN);
    let mut resid_g = Array2::from_elem((np, nz), f64::NAN);
    for i in 0..np {
        let pt = match profiles.at(p[i]) {
            Some(pt) => pt,
            None => continue,
        };
        for j in 0..nz {
            if !ok[[i, j]] {
                continue;
            }
            let d =
                column_derivative(&f, &ok, j, i, scenario.p_step).unwrap_or_else(|| column_rhs(f[[i, j]], &pt, eps));
            fp[[i, j]] = d;
            let jet = JetPoint { p: p[i], z: z[j], f: f[[i, j]], pi: d, zeta: fz[[i, j]] };
            let (rf, rg) = fg_at(&jet, &pt, eps);
            resid_f[[i, j]] = rf;
            resid_g[[i, j]] = rg;
        }
    }
    Ok(GeneratrixGrid {
        p,
        z,
        f,
        fp,
        fz,
        fzz,
        resid_f,
        resid_g,
        admissible: ok,
        degenerate,
        epsilon: eps,
        zeta_sign: scenario.zeta_sign,
        p_truncated,
        z_origin: z0,
    })
}

/// Indices of the contiguous run around `start` for which `good` holds.
fn contiguous<T, F: Fn(usize) -> Option<T>>(v: &[Option<f64>], start: usize, good: F) -> Vec<usize> {
    if good(start).is_none() {
        return Vec::new();
    }
    let mut lo = start;
    while lo > 0 && v[lo - 1].is_some() && good(lo - 1).is_some() {
        lo -= 1;
    }
    let mut hi = start;
    while hi + 1 < v.len() && v[hi + 1].is_some() && good(hi + 1).is_some() {
        hi += 1;
    }
    (lo..=hi).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_scenario() -> FlowScenario {
        FlowScenario { p_max: 0.04, z_min: -0.5, z_max: 0.5, p_step: 2e-3, z_step: 2e-3, ..FlowScenario::figure1() }
    }

    #[test]
    fn scenario_json_round_trip() {
        let s = FlowScenario::figure1();
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<FlowScenario>(&j).unwrap(), s);
        let bad = j.replace("\"epsilon\":1", "\"epsilon\":2");
        assert!(serde_json::from_str::<FlowScenario>(&bad).is_err());
    }

    #[test]
    fn initial_point_violations() {
        let mut s = FlowScenario::figure1();
        s.f0 = 0.05;
        assert!(matches!(s.validate(), Err(Error::Parameter(_))));
        s.f0 = 3.0;
        assert!(s.validate().is_err());
        assert!(FlowScenario::figure1().validate().is_ok());
    }

    #[test]
    fn solve_rejects_bad_f0_before_integrating() {
        let s = small_scenario();
        let prof = s.integrate_profiles().unwrap();
        let bad = FlowScenario { f0: 0.09, ..s };
        assert!(matches!(solve_f(&bad, &prof), Err(Error::Parameter(_))));
    }

    #[test]
    fn origin_value_and_residuals() {
        let s = small_scenario();
        let prof = s.integrate_profiles().unwrap();
        let g = solve_f(&s, &prof).unwrap();
        let i0 = g.slice_index(0.0).unwrap();
        assert_eq!(g.f[[i0, g.z_origin]], 0.97);
        let (rf, rg) = g.max_residuals(Some((-0.25, 0.25)));
        assert!(rf < 1e-6 && rg < 1e-6, "{rf} {rg}");
    }

    #[test]
    fn exceptional_spine_is_square_root() {
        let prof = ProfileTriple::exceptional(0.5).unwrap();
        let s = FlowScenario {
            alpha0: 2.0,
            beta0: 2.0,
            gamma0: -2.0,
            f0: 2.0,
            p_origin: 1.0,
            p_min: 0.5,
            p_max: 2.0,
            p_step: 1e-3,
            z_min: -0.1,
            z_max: 0.1,
            z_step: 1e-2,
            ..FlowScenario::figure1()
        };
        let g = solve_f(&s, &prof).unwrap();
        for (i, &p) in g.p.iter().enumerate() {
            assert!((g.f[[i, g.z_origin]] - 2.0 * p.sqrt()).abs() < 1e-6);
            assert!(g.degenerate[i]);
        }
    }

    #[test]
    fn residuals_converge_at_fourth_order() {
        let run = |h: f64| {
            let s = FlowScenario { p_step: h, z_step: h, ..small_scenario() };
            let g = solve_f(&s, &s.integrate_profiles().unwrap()).unwrap();
            let (rf, rg) = g.max_residuals(Some((-0.25, 0.25)));
            rf.max(rg)
        };
        let (a, b) = (run(2e-3), run(1e-3));
        assert!(a / b >= 8.0, "{a} {b}");
    }

    #[test]
    fn marching_orders_agree() {
        let s = small_scenario();
        let prof = s.integrate_profiles().unwrap();
        let a = solve_f_ordered(&s, &prof, MarchOrder::PThenZ).unwrap();
        let b = solve_f_ordered(&s, &prof, MarchOrder::ZThenP).unwrap();
        let mut worst = 0.0f64;
        for i in 0..a.p.len() {
            for j in 0..a.z.len() {
                if a.z[j].abs() <= 0.25 && a.admissible[[i, j]] && b.admissible[[i, j]] {
                    worst = worst.max((a.f[[i, j]] - b.f[[i, j]]).abs());
                }
            }
        }
        assert!(worst < 10.0 * s.p_step.powi(4), "{worst}");
    }
}
