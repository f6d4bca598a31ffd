//! Symmetry stations f'_z = 0, periodic extension and the critical pressure.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{check_initial_point, closure_zeta_sq, column_rhs, fzz_rhs, march_slice, FlowScenario, GeneratrixGrid};
use crate::consistency::{fg_at, JetPoint};
use crate::error::{Error, Result};
use crate::ode::{hermite, lagrange4, rk4_step};
use crate::profiles::ProfileTriple;

/// A station is accepted when |f''_zz| ≥ CURVATURE_FACTOR·(1 + |f|).
pub const CURVATURE_FACTOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationKind {
    /// Local maximum of r = f(p, ·).
    Max,
    /// Local minimum of r = f(p, ·).
    Min,
}

/// A root z0 of f'_z on one slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub p: f64,
    pub z0: f64,
    pub f: f64,
    pub fzz: f64,
    pub kind: StationKind,
}

impl Station {
    pub fn is_regular(&self) -> bool {
        self.fzz.abs() >= CURVATURE_FACTOR * (1.0 + self.f.abs())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymmetryReport {
    /// Accepted stations per slice, aligned with the grid's p values.
    pub stations: Vec<Vec<Station>>,
    /// Roots of f'_z whose curvature fell below the threshold.
    pub rejected: Vec<Station>,
    /// Slices on which f'_z vanishes identically.
    pub degenerate_slices: Vec<f64>,
    /// Largest drift of a station's z0 between neighbouring slices.
    pub vertical_drift: f64,
    /// True when `vertical_drift` is within the tolerance used for detection.
    pub vertical: bool,
    /// Translation period generated by reflections in two adjacent stations.
    pub period: Option<f64>,
    /// Period assigned to the first two stations by [`period_by_station_rule`].
    pub period_station_rule: Option<f64>,
    pub p_c: Option<f64>,
}

/// Period assigned to a pair of stations: |z0 − z0'| for stations on one
/// slice and 2|z0 − z0'| otherwise.
pub fn period_by_station_rule(a: &Station, b: &Station) -> f64 {
    let d = (a.z0 - b.z0).abs();
    if a.p == b.p {
        d
    } else {
        2.0 * d
    }
}

/// Translation period generated by the reflections in the stations of one slice.
///
/// Reflections in z0 and z0' compose to a shift by 2|z0 − z0'|. With three or
/// more stations this equals the spacing of same-kind stations, which is used
/// directly when available.
pub fn period_from_reflections(stations: &[Station]) -> Option<f64> {
    let mut s: Vec<&Station> = stations.iter().collect();
    s.sort_by(|a, b| a.z0.total_cmp(&b.z0));
    if s.len() >= 3 {
        let spans: Vec<f64> = s.windows(3).filter(|w| w[0].kind == w[2].kind).map(|w| w[2].z0 - w[0].z0).collect();
        if !spans.is_empty() {
            return Some(spans.iter().sum::<f64>() / spans.len() as f64);
        }
    }
    if s.len() >= 2 {
        return Some(2.0 * (s[1].z0 - s[0].z0));
    }
    None
}

/// Roots of f'_z on one slice given nodal f, f', f''.
fn slice_roots(p: f64, z: &[f64], f: &[f64], fz: &[f64], fzz: &[f64], ok: &[bool]) -> Vec<Station> {
    let mut out = Vec::new();
    for j in 0..z.len().saturating_sub(1) {
        if !(ok[j] && ok[j + 1]) {
            continue;
        }
        let (a, b) = (fz[j], fz[j + 1]);
        if a == 0.0 && j > 0 {
            continue;
        }
        if a.signum() == b.signum() && a != 0.0 && b != 0.0 {
            continue;
        }
        if a == 0.0 && b == 0.0 {
            continue;
        }
        let g = |x: f64| hermite(z[j], z[j + 1], fz[j], fz[j + 1], fzz[j], fzz[j + 1], x);
        let (mut lo, mut hi) = (z[j], z[j + 1]);
        let s_lo = g(lo).signum();
        for _ in 0..80 {
            let m = 0.5 * (lo + hi);
            if g(m).signum() == s_lo && g(m) != 0.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        let z0 = 0.5 * (lo + hi);
        let t = (z0 - z[j]) / (z[j + 1] - z[j]);
        let curv = fzz[j] * (1.0 - t) + fzz[j + 1] * t;
        let fv = hermite(z[j], z[j + 1], f[j], f[j + 1], fz[j], fz[j + 1], z0);
        let kind = if curv < 0.0 { StationKind::Max } else { StationKind::Min };
        out.push(Station { p, z0, f: fv, fzz: curv, kind });
    }
    out
}

fn slice_data(grid: &GeneratrixGrid, i: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<bool>) {
    let nz = grid.z.len();
    let row = |a: &Array2<f64>| (0..nz).map(|j| a[[i, j]]).collect::<Vec<_>>();
    let (f, fz) = (row(&grid.f), row(&grid.fz));
    let mut fzz = row(&grid.fzz);
    for j in 0..nz {
        if !fzz[j].is_finite() && j > 0 && j + 1 < nz {
            fzz[j] = (fz[j + 1] - fz[j - 1]) / (grid.z[j + 1] - grid.z[j - 1]);
        }
    }
    let ok = (0..nz).map(|j| grid.admissible[[i, j]] && fzz[j].is_finite()).collect();
    (f, fz, fzz, ok)
}

/// Locate stations on every slice and check that they are p-independent.
pub fn detect_symmetry(grid: &GeneratrixGrid, tol: f64) -> SymmetryReport {
    let mut stations = Vec::with_capacity(grid.p.len());
    let mut rejected = Vec::new();
    let mut degenerate_slices = Vec::new();
    for i in 0..grid.p.len() {
        let (f, fz, fzz, ok) = slice_data(grid, i);
        let flat = ok.iter().zip(&fz).filter(|(o, _)| **o).all(|(_, v)| v.abs() <= tol);
        if grid.degenerate.get(i).copied().unwrap_or(false) || flat {
            degenerate_slices.push(grid.p[i]);
            stations.push(Vec::new());
            continue;
        }
        let (good, bad): (Vec<Station>, Vec<Station>) =
            slice_roots(grid.p[i], &grid.z, &f, &fz, &fzz, &ok).into_iter().partition(|s| s.is_regular());
        rejected.extend(bad);
        stations.push(good);
    }

    let mut drift = 0.0f64;
    for w in stations.windows(2) {
        for s in &w[0] {
            if let Some(t) = w[1].iter().min_by(|a, b| (a.z0 - s.z0).abs().total_cmp(&(b.z0 - s.z0).abs())) {
                drift = drift.max((t.z0 - s.z0).abs());
            }
        }
    }

    let reference = stations.iter().filter(|s| s.len() >= 2).max_by_key(|s| s.len());
    let period = reference.and_then(|s| period_from_reflections(s));
    let period_station_rule = reference.map(|s| {
        let mut v = s.clone();
        v.sort_by(|a, b| a.z0.total_cmp(&b.z0));
        period_by_station_rule(&v[0], &v[1])
    });

    let first_with = stations.iter().position(|s| !s.is_empty());
    let p_c = match first_with {
        Some(k) => {
            let base = stations[k].len();
            (k..grid.p.len()).find(|&i| stations[i].len() < base).map(|i| grid.p[i])
        }
        None if !degenerate_slices.is_empty() => Some(degenerate_slices[0]),
        None => None,
    };

    SymmetryReport {
        stations,
        rejected,
        degenerate_slices,
        vertical_drift: drift,
        vertical: drift <= tol,
        period,
        period_station_rule,
        p_c,
    }
}

/// A slice extended periodically by reflections in two adjacent stations.
#[derive(Debug, Clone)]
pub struct ExtendedGrid {
    pub p: Vec<f64>,
    pub z_a: f64,
    pub z_b: f64,
    pub period: f64,
    step: f64,
    z: Vec<f64>,
    f: Vec<Vec<f64>>,
    fz: Vec<Vec<f64>>,
    fzz: Vec<Vec<f64>>,
    fp: Vec<Vec<f64>>,
    epsilon: crate::sign::Sign,
    zeta_sign: crate::sign::Sign,
}

impl ExtendedGrid {
    fn locate(&self, x: f64) -> usize {
        let k = ((x - self.z[0]) / self.step).floor() as usize;
        k.min(self.z.len() - 2)
    }

    /// Map z into the fundamental interval; returns the mapped point and the sign of f'_z.
    fn fold(&self, z: f64) -> (f64, f64) {
        let half = self.z_b - self.z_a;
        let w = (z - self.z_a).rem_euclid(self.period);
        if w <= half {
            (self.z_a + w, 1.0)
        } else {
            (self.z_a + (self.period - w), -1.0)
        }
    }

    /// (f, f'_z, f'_p) at slice `i` and arbitrary z.
    pub fn eval(&self, i: usize, z: f64) -> (f64, f64, f64) {
        let (x, s) = self.fold(z);
        let k = self.locate(x);
        let (z0, z1) = (self.z[k], self.z[k + 1]);
        let f = hermite(z0, z1, self.f[i][k], self.f[i][k + 1], self.fz[i][k], self.fz[i][k + 1], x);
        let fz = hermite(z0, z1, self.fz[i][k], self.fz[i][k + 1], self.fzz[i][k], self.fzz[i][k + 1], x);
        let fp = lagrange4(&self.z, &self.fp[i], k, x);
        (f, s * fz, fp)
    }

    /// Sample the extension on nodes k·h covering `copies` periods centred on the fundamental interval.
    pub fn to_grid(&self, copies: usize, profiles: &ProfileTriple) -> Result<GeneratrixGrid> {
        let centre = 0.5 * (self.z_a + self.z_b);
        let half_span = 0.5 * copies as f64 * self.period;
        let k_lo = ((centre - half_span) / self.step).ceil() as i64;
        let k_hi = ((centre + half_span) / self.step).floor() as i64;
        let z: Vec<f64> = (k_lo..=k_hi).map(|k| k as f64 * self.step).collect();
        let (np, nz) = (self.p.len(), z.len());
        let mut g = GeneratrixGrid {
            p: self.p.clone(),
            z: z.clone(),
            f: Array2::zeros((np, nz)),
            fp: Array2::zeros((np, nz)),
            fz: Array2::zeros((np, nz)),
            fzz: Array2::zeros((np, nz)),
            resid_f: Array2::zeros((np, nz)),
            resid_g: Array2::zeros((np, nz)),
            admissible: Array2::from_elem((np, nz), true),
            degenerate: vec![false; np],
            epsilon: self.epsilon,
            zeta_sign: self.zeta_sign,
            p_truncated: false,
            z_origin: (-k_lo).max(0) as usize,
        };
        for i in 0..np {
            let pt = profiles.require(self.p[i])?;
            for (j, &zz) in z.iter().enumerate() {
                let (f, fz, fp) = self.eval(i, zz);
                g.f[[i, j]] = f;
                g.fz[[i, j]] = fz;
                g.fp[[i, j]] = fp;
                g.fzz[[i, j]] = fzz_rhs(f, fz, &pt, self.epsilon);
                let (rf, rg) = fg_at(&JetPoint { p: self.p[i], z: zz, f, pi: fp, zeta: fz }, &pt, self.epsilon);
                g.resid_f[[i, j]] = rf;
                g.resid_g[[i, j]] = rg;
            }
        }
        Ok(g)
    }
}

/// Extend by reflections in the two adjacent stations nearest z = 0 that
/// persist on a common run of slices.
pub fn extend_periodic(grid: &GeneratrixGrid, report: &SymmetryReport, tol: f64) -> Result<ExtendedGrid> {
    let reference = report
        .stations
        .iter()
        .enumerate()
        .filter(|(_, s)| s.len() >= 2)
        .min_by(|a, b| grid.p[a.0].abs().total_cmp(&grid.p[b.0].abs()))
        .ok_or_else(|| Error::Extension("fewer than two stations on every slice".into()))?;
    let mut st = reference.1.clone();
    st.sort_by(|a, b| a.z0.total_cmp(&b.z0));
    let pair = st
        .windows(2)
        .min_by(|a, b| (a[0].z0 + a[1].z0).abs().total_cmp(&(b[0].z0 + b[1].z0).abs()))
        .expect("at least two stations");
    let (z_a, z_b) = (pair[0].z0, pair[1].z0);
    let matches = |i: usize, z0: f64| report.stations[i].iter().any(|s| (s.z0 - z0).abs() <= tol.max(1e-9));

    let h = grid.z[1] - grid.z[0];
    let j_lo = ((z_a - grid.z[0]) / h).floor() as i64 - 2;
    let j_hi = ((z_b - grid.z[0]) / h).ceil() as i64 + 2;
    if j_lo < 0 || j_hi >= grid.z.len() as i64 {
        return Err(Error::Extension("stations too close to the grid edge".into()));
    }
    let (j_lo, j_hi) = (j_lo as usize, j_hi as usize);
    let covered = |i: usize| matches(i, z_a) && matches(i, z_b) && (j_lo..=j_hi).all(|j| grid.admissible[[i, j]]);

    let i_ref = reference.0;
    let mut lo = i_ref;
    while lo > 0 && covered(lo - 1) {
        lo -= 1;
    }
    let mut hi = i_ref;
    while hi + 1 < grid.p.len() && covered(hi + 1) {
        hi += 1;
    }
    if !covered(i_ref) {
        return Err(Error::Extension("station p-intervals are disjoint".into()));
    }
    let rows =
        |a: &Array2<f64>| -> Vec<Vec<f64>> { (lo..=hi).map(|i| (j_lo..=j_hi).map(|j| a[[i, j]]).collect()).collect() };
    Ok(ExtendedGrid {
        p: grid.p[lo..=hi].to_vec(),
        z_a,
        z_b,
        period: 2.0 * (z_b - z_a),
        step: h,
        z: grid.z[j_lo..=j_hi].to_vec(),
        f: rows(&grid.f),
        fz: rows(&grid.fz),
        fzz: rows(&grid.fzz),
        fp: rows(&grid.fp),
        epsilon: grid.epsilon,
        zeta_sign: grid.zeta_sign,
    })
}

/// The station nearest `z_ref` on the slice at pressure `p`, computed by a
/// fresh march from the scenario origin. Includes stations below the
/// curvature threshold; `None` when f'_z has no root or the slice is flat.
pub fn station_curvature(
    scenario: &FlowScenario,
    profiles: &ProfileTriple,
    p: f64,
    z_ref: f64,
) -> Result<Option<Station>> {
    let eps = profiles.epsilon;
    let origin = profiles.require(scenario.p_origin)?;
    check_initial_point(scenario.f0, &origin, eps, profiles.consistent)?;
    let rhs = |pp: f64, y: &[f64; 1]| -> [f64; 1] {
        match profiles.at(pp) {
            Some(pt) => [column_rhs(y[0], &pt, eps)],
            None => [f64::NAN],
        }
    };
    let span = p - scenario.p_origin;
    let n = (span.abs() / scenario.p_step).ceil().max(1.0) as usize;
    let h = span / n as f64;
    let mut y = [scenario.f0];
    for k in 0..n {
        y = rk4_step(&rhs, scenario.p_origin + k as f64 * h, &y, h);
    }
    if !y[0].is_finite() {
        return Err(Error::Domain(format!("spine integration failed before p = {p}")));
    }
    let pt = profiles.require(p)?;
    let zsq = closure_zeta_sq(y[0], &pt, eps);
    if !profiles.consistent && zsq.abs() <= scenario.tol {
        return Ok(None);
    }
    if zsq < -scenario.tol {
        return Err(Error::Inadmissible(format!("zeta^2 = {zsq} on the spine at p = {p}")));
    }
    let (z, z0) = scenario.z_nodes();
    let s = march_slice(&z, z0, y[0], scenario.zeta_sign.value() * zsq.max(0.0).sqrt(), &pt, eps);
    let roots = slice_roots(p, &z, &s.f, &s.fz, &s.fzz, &s.ok);
    Ok(roots.into_iter().min_by(|a, b| (a.z0 - z_ref).abs().total_cmp(&(b.z0 - z_ref).abs())))
}

/// Smallest p in `p_search` where the tracked station loses curvature, to ±0.01.
pub fn find_pc(scenario: &FlowScenario, profiles: &ProfileTriple, p_search: (f64, f64)) -> Result<Option<f64>> {
    let (a, b) = p_search;
    let (lo, hi) = profiles.sampled_range();
    if !(lo <= a && a < b && b <= hi) {
        return Err(Error::Parameter(format!("search range ({a}, {b}) not inside the profile range ({lo}, {hi})")));
    }
    let first = station_curvature(scenario, profiles, a, 0.0)?;
    let z_ref = match first {
        Some(s) if s.is_regular() => s.z0,
        _ => return Ok(Some(a)),
    };
    let degenerate = |p: f64| -> Result<bool> {
        Ok(match station_curvature(scenario, profiles, p, z_ref)? {
            Some(s) => !s.is_regular() || (s.z0 - z_ref).abs() > 0.5,
            None => true,
        })
    };
    let scan = 0.02;
    let mut prev = a;
    let mut p = a;
    while p < b {
        p = (p + scan).min(b);
        let hit = match degenerate(p) {
            Ok(d) => d,
            Err(Error::Domain(_)) | Err(Error::Inadmissible(_)) => true,
            Err(e) => return Err(e),
        };
        if hit {
            let (mut lo, mut hi) = (prev, p);
            while hi - lo > 0.01 {
                let m = 0.5 * (lo + hi);
                if degenerate(m).unwrap_or(true) {
                    hi = m;
                } else {
                    lo = m;
                }
            }
            return Ok(Some(0.5 * (lo + hi)));
        }
        prev = p;
    }
    Ok(None)
}
