//! Torus-type flow near a nondegenerate pressure minimum, in the
//! normalization α = ψ with the minimum at (r, z) = (1, 0).

mod poly;

pub use poly::{psi_taylor, BivariatePoly};

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour::{isolines as trace, Polyline};
use crate::error::{Error, Result};
use crate::ode::{hermite, rk4_step};
use crate::series::{series_beta_gamma, F64Series};

/// β(ψ), γ(ψ) series are never trusted beyond this |ψ|.
pub const SERIES_TRUST_RADIUS: f64 = 2.0;
/// Largest accepted change of β(ψ), γ(ψ) when the series order is doubled.
pub const SERIES_TRUNCATION_TOL: f64 = 1e-8;
/// Default number of series terms for β(ψ), γ(ψ).
pub const DEFAULT_SERIES_ORDER: usize = 16;
/// The level ψ₁ of the innermost drawn isoline, used as the pressure reference.
pub const DEFAULT_PSI_REF: f64 = 0.04;

/// β(ψ), γ(ψ) with their derivatives in floating point.
#[derive(Debug, Clone)]
pub struct ProfileSeries {
    beta: F64Series,
    gamma: F64Series,
    beta_check: F64Series,
    gamma_check: F64Series,
}

impl ProfileSeries {
    pub fn new(order: usize) -> Result<Self> {
        if order < 12 {
            return Err(Error::Parameter(format!("series order {order} below the trusted minimum 12")));
        }
        let (b, g) = series_beta_gamma(2 * order);
        let head = |s: &crate::series::RationalSeries| F64Series { c: s.to_f64().c[..=order].to_vec() };
        Ok(ProfileSeries { beta: head(&b), gamma: head(&g), beta_check: b.to_f64(), gamma_check: g.to_f64() })
    }

    /// True when |ψ| is within the hard cap and doubling the order moves
    /// neither series by more than [`SERIES_TRUNCATION_TOL`].
    pub fn trusted(&self, psi: f64) -> bool {
        psi.is_finite()
            && psi.abs() <= SERIES_TRUST_RADIUS
            && (self.beta.eval(psi) - self.beta_check.eval(psi)).abs() <= SERIES_TRUNCATION_TOL
            && (self.gamma.eval(psi) - self.gamma_check.eval(psi)).abs() <= SERIES_TRUNCATION_TOL
    }

    pub fn beta(&self, psi: f64) -> (f64, f64) {
        self.beta.eval_d(psi)
    }

    pub fn gamma(&self, psi: f64) -> (f64, f64) {
        self.gamma.eval_d(psi)
    }

    /// dψ/dr and d(ψ_z)/dr along a row.
    fn row_rhs(&self, r: f64, y: &[f64; 2]) -> [f64; 2] {
        let (g, dg) = self.gamma(y[0]);
        [1.5 * r * (r * r + g), 1.5 * r * dg * y[1]]
    }

    /// ψ_zz on the column r = 1, from differentiating ψ_z² = Q(ψ).
    fn column_accel(&self, psi: f64) -> f64 {
        let (b, db) = self.beta(psi);
        let (g, dg) = self.gamma(psi);
        0.5 * (9.0 * (1.0 - b) - 9.0 * db * psi - 4.5 * (1.0 + g) * dg)
    }

    /// ψ_z² − 9(r² − β)ψ + (9/4) r² (r² + γ)².
    pub fn second_residual(&self, r: f64, psi: f64, psi_z: f64) -> f64 {
        let b = self.beta(psi).0;
        let g = self.gamma(psi).0;
        let s = r * r + g;
        psi_z * psi_z - 9.0 * (r * r - b) * psi + 2.25 * r * r * s * s
    }
}

/// ψ on a rectilinear (r, z) grid. Arrays are indexed `[r index, z index]`.
#[derive(Debug, Clone)]
pub struct PsiField {
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    pub psi: Array2<f64>,
    /// ψ_r from the construction (exact for polynomials, the row law for marching).
    pub psi_r: Array2<f64>,
    /// ψ_z from the construction (exact for polynomials, variational for marching).
    pub psi_z: Array2<f64>,
    /// Residual of the second equation with ψ_z by centred differences; NaN on the z-boundary.
    pub resid2: Array2<f64>,
    pub mask: Array2<bool>,
}

impl PsiField {
    /// Sample a polynomial directly.
    pub fn from_poly(poly: &BivariatePoly, r: &[f64], z: &[f64], series: &ProfileSeries) -> Result<Self> {
        check_axis(r, "r")?;
        check_axis(z, "z")?;
        let (nr, nz) = (r.len(), z.len());
        let mut psi = Array2::zeros((nr, nz));
        let mut psi_r = Array2::zeros((nr, nz));
        let mut psi_z = Array2::zeros((nr, nz));
        for i in 0..nr {
            for j in 0..nz {
                let (v, gr, gz) = poly.gradient(r[i], z[j]);
                psi[[i, j]] = v;
                psi_r[[i, j]] = gr;
                psi_z[[i, j]] = gz;
            }
        }
        let mask = psi.mapv(|v: f64| series.trusted(v));
        let mut f = PsiField { r: r.to_vec(), z: z.to_vec(), psi, psi_r, psi_z, resid2: Array2::zeros((nr, nz)), mask };
        f.fill_residual(series);
        Ok(f)
    }

    fn fill_residual(&mut self, series: &ProfileSeries) {
        let (nr, nz) = self.psi.dim();
        let mut out = Array2::from_elem((nr, nz), f64::NAN);
        for i in 0..nr {
            for j in 1..nz.saturating_sub(1) {
                if !(self.mask[[i, j - 1]] && self.mask[[i, j]] && self.mask[[i, j + 1]]) {
                    continue;
                }
                let dz = (self.psi[[i, j + 1]] - self.psi[[i, j - 1]]) / (self.z[j + 1] - self.z[j - 1]);
                out[[i, j]] = series.second_residual(self.r[i], self.psi[[i, j]], dz);
            }
        }
        self.resid2 = out;
    }

    /// Largest |resid2| over nodes inside the window.
    pub fn max_residual(&self, r_window: (f64, f64), z_window: (f64, f64)) -> f64 {
        let mut m = 0.0f64;
        for ((i, j), &v) in self.resid2.indexed_iter() {
            let inside =
                (r_window.0..=r_window.1).contains(&self.r[i]) && (z_window.0..=z_window.1).contains(&self.z[j]);
            if inside && v.is_finite() {
                m = m.max(v.abs());
            }
        }
        m
    }

    /// Remove nodes with negative ψ, where the pressure is undefined.
    pub fn mask_negative(&mut self) {
        for ((i, j), m) in self.mask.indexed_iter_mut() {
            if self.psi[[i, j]] < 0.0 {
                *m = false;
            }
        }
    }

    pub fn value_range(&self) -> (f64, f64) {
        self.psi
            .iter()
            .zip(self.mask.iter())
            .filter(|(_, &m)| m)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&v, _)| (lo.min(v), hi.max(v)))
    }
}

fn check_axis(v: &[f64], name: &str) -> Result<()> {
    if v.len() < 2 || v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter(format!("{name} nodes must be finite, strictly increasing, at least two")));
    }
    Ok(())
}

/// Integrate the column ODE through `targets` (monotone away from `z0`),
/// starting from (ψ, ψ_z) at `z0`, with substeps no longer than `h_max`.
fn integrate_column(series: &ProfileSeries, z0: f64, y0: [f64; 2], targets: &[f64], h_max: f64) -> Vec<[f64; 2]> {
    let rhs = |_z: f64, y: &[f64; 2]| [y[1], series.column_accel(y[0])];
    let mut out = Vec::with_capacity(targets.len());
    let (mut z, mut y) = (z0, y0);
    for &t in targets {
        let n = ((t - z).abs() / h_max).ceil().max(1.0) as usize;
        let h = (t - z) / n as f64;
        for _ in 0..n {
            if !series.trusted(y[0]) {
                y = [f64::NAN; 2];
                break;
            }
            y = rk4_step(&rhs, z, &y, h);
            z += h;
        }
        z = t;
        out.push(y);
    }
    out
}

/// Values (ψ, ψ_z) on r = 1 at the given heights: from the polynomial within
/// `seed_radius`, from the column ODE beyond it.
fn seed_column(poly: &BivariatePoly, series: &ProfileSeries, z: &[f64], seed_radius: f64, h_max: f64) -> Vec<[f64; 2]> {
    let mut out = vec![[f64::NAN; 2]; z.len()];
    let seed = |zz: f64| {
        let (v, _, gz) = poly.gradient(1.0, zz);
        [v, gz]
    };
    let up: Vec<usize> = (0..z.len()).filter(|&j| z[j] > seed_radius).collect();
    let down: Vec<usize> = (0..z.len()).rev().filter(|&j| z[j] < -seed_radius).collect();
    for j in 0..z.len() {
        if z[j].abs() <= seed_radius {
            out[j] = seed(z[j]);
        }
    }
    for (side, start) in [(up, seed_radius), (down, -seed_radius)] {
        let targets: Vec<f64> = side.iter().map(|&j| z[j]).collect();
        let vals = integrate_column(series, start, seed(start), &targets, h_max);
        for (k, &j) in side.iter().enumerate() {
            out[j] = vals[k];
        }
    }
    out
}

/// March ψ along rows r from the seed column r = 1 with
/// dψ/dr = (3/2) r (r² + γ(ψ)), carrying ψ_z by the variational equation.
pub fn psi_march(
    poly: &BivariatePoly,
    r: &[f64],
    z: &[f64],
    seed_radius: f64,
    series: &ProfileSeries,
) -> Result<PsiField> {
    check_axis(r, "r")?;
    check_axis(z, "z")?;
    if !(seed_radius >= 0.0 && seed_radius.is_finite()) {
        return Err(Error::Parameter("seed radius must be a non-negative number".into()));
    }
    let i0 = r
        .iter()
        .position(|&x| (x - 1.0).abs() < 1e-12)
        .ok_or_else(|| Error::Parameter("the r nodes must contain the seed column r = 1".into()))?;
    let hz = z.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let column = seed_column(poly, series, z, seed_radius, hz.min(1e-3));

    let nr = r.len();
    let rows: Vec<Vec<Option<[f64; 2]>>> = column
        .par_iter()
        .map(|&y0| {
            let mut row = vec![None; nr];
            if !series.trusted(y0[0]) {
                return row;
            }
            row[i0] = Some(y0);
            let rhs = |rr: f64, y: &[f64; 2]| series.row_rhs(rr, y);
            for dir in [1i64, -1] {
                let mut y = y0;
                let mut i = i0 as i64;
                loop {
                    let next = i + dir;
                    if next < 0 || next >= nr as i64 {
                        break;
                    }
                    let (a, b) = (r[i as usize], r[next as usize]);
                    y = rk4_step(&rhs, a, &y, b - a);
                    if !series.trusted(y[0]) {
                        break;
                    }
                    row[next as usize] = Some(y);
                    i = next;
                }
            }
            row
        })
        .collect();

    let nz = z.len();
    let mut psi = Array2::from_elem((nr, nz), f64::NAN);
    let mut psi_r = Array2::from_elem((nr, nz), f64::NAN);
    let mut psi_z = Array2::from_elem((nr, nz), f64::NAN);
    let mut mask = Array2::from_elem((nr, nz), false);
    for (j, row) in rows.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            if let Some(y) = v {
                psi[[i, j]] = y[0];
                psi_r[[i, j]] = series.row_rhs(r[i], y)[0];
                psi_z[[i, j]] = y[1];
                mask[[i, j]] = true;
            }
        }
    }
    let mut f = PsiField { r: r.to_vec(), z: z.to_vec(), psi, psi_r, psi_z, resid2: Array2::zeros((nr, nz)), mask };
    f.fill_residual(series);
    Ok(f)
}

/// Pointwise ψ with both partials, by the same construction as [`psi_march`]:
/// a tabulated seed column and an RK4 row integration from r = 1.
#[derive(Debug, Clone)]
pub struct PsiEvaluator {
    series: ProfileSeries,
    table_z: Vec<f64>,
    table: Vec<[f64; 2]>,
    row_step: f64,
}

impl PsiEvaluator {
    pub fn new(
        poly: &BivariatePoly,
        series: ProfileSeries,
        seed_radius: f64,
        z_extent: f64,
        step: f64,
    ) -> Result<Self> {
        if !(step > 0.0 && z_extent > 0.0) {
            return Err(Error::Parameter("evaluator step and extent must be positive".into()));
        }
        let n = (z_extent / step).ceil() as i64;
        let table_z: Vec<f64> = (-n..=n).map(|k| k as f64 * step).collect();
        let table = seed_column(poly, &series, &table_z, seed_radius, step);
        Ok(PsiEvaluator { series, table_z, table, row_step: step })
    }

    pub fn series(&self) -> &ProfileSeries {
        &self.series
    }

    fn column(&self, z: f64) -> Option<[f64; 2]> {
        let h = self.table_z[1] - self.table_z[0];
        let k = ((z - self.table_z[0]) / h).floor();
        if k < 0.0 || k as usize + 1 >= self.table_z.len() {
            return None;
        }
        let k = k as usize;
        let (a, b) = (self.table[k], self.table[k + 1]);
        if !(a[0].is_finite() && b[0].is_finite()) {
            return None;
        }
        let (z0, z1) = (self.table_z[k], self.table_z[k + 1]);
        let (aa, ab) = (self.series.column_accel(a[0]), self.series.column_accel(b[0]));
        Some([hermite(z0, z1, a[0], b[0], a[1], b[1], z), hermite(z0, z1, a[1], b[1], aa, ab, z)])
    }

    /// (ψ, ψ_r, ψ_z), or `None` outside the trusted region.
    pub fn eval(&self, r: f64, z: f64) -> Option<(f64, f64, f64)> {
        let mut y = self.column(z)?;
        let n = ((r - 1.0).abs() / self.row_step).ceil().max(1.0) as usize;
        let h = (r - 1.0) / n as f64;
        let rhs = |rr: f64, y: &[f64; 2]| self.series.row_rhs(rr, y);
        for k in 0..n {
            y = rk4_step(&rhs, 1.0 + k as f64 * h, &y, h);
            if !self.series.trusted(y[0]) {
                return None;
            }
        }
        let dr = self.series.row_rhs(r, &y)[0];
        Some((y[0], dr, y[1]))
    }
}

/// Level set of ψ with its connected components.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelSet {
    pub level: f64,
    pub components: Vec<Polyline>,
}

/// Isolines ψ = level for each level, by marching squares on unmasked cells.
pub fn isolines(field: &PsiField, levels: &[f64]) -> Vec<LevelSet> {
    levels
        .iter()
        .map(|&level| LevelSet { level, components: trace(&field.r, &field.z, &field.psi, Some(&field.mask), level) })
        .collect()
}

/// p = (1/3) ln(ψ/ψ_ref) on the same grid.
#[derive(Debug, Clone)]
pub struct PressureField {
    pub p: Array2<f64>,
    /// Nodes where ψ = 0 and the pressure is −∞.
    pub singular: Array2<bool>,
}

pub fn pressure_from_psi(field: &PsiField, psi_ref: f64) -> Result<PressureField> {
    if !(psi_ref > 0.0 && psi_ref.is_finite()) {
        return Err(Error::Parameter(format!("psi_ref must be positive, got {psi_ref}")));
    }
    let dim = field.psi.dim();
    let mut p = Array2::from_elem(dim, f64::NAN);
    let mut singular = Array2::from_elem(dim, false);
    for ((i, j), &v) in field.psi.indexed_iter() {
        if !field.mask[[i, j]] {
            continue;
        }
        if v < 0.0 {
            return Err(Error::Data(format!("negative psi {v} at (r, z) = ({}, {})", field.r[i], field.z[j])));
        }
        if v == 0.0 {
            singular[[i, j]] = true;
            p[[i, j]] = f64::NEG_INFINITY;
        } else {
            p[[i, j]] = (v / psi_ref).ln() / 3.0;
        }
    }
    Ok(PressureField { p, singular })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalKind {
    Minimum,
    Maximum,
    Saddle,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub r: f64,
    pub z: f64,
    pub psi: f64,
    pub kind: CriticalKind,
}

/// Acceptance threshold on |∇ψ| after Newton refinement.
pub const CRITICAL_GRADIENT_TOL: f64 = 1e-8;

fn classify(hrr: f64, hrz: f64, hzz: f64) -> CriticalKind {
    let det = hrr * hzz - hrz * hrz;
    let scale = (hrr.abs() + hzz.abs() + hrz.abs()).max(1e-300);
    if det.abs() < 1e-10 * scale * scale {
        CriticalKind::Degenerate
    } else if det < 0.0 {
        CriticalKind::Saddle
    } else if hrr > 0.0 {
        CriticalKind::Minimum
    } else {
        CriticalKind::Maximum
    }
}

/// Zeros of ∇ψ for a polynomial inside a window, found by damped Newton
/// from local minima of |∇ψ|² on an n × n sampling grid.
pub fn critical_points(
    poly: &BivariatePoly,
    r_window: (f64, f64),
    z_window: (f64, f64),
    n: usize,
) -> Vec<CriticalPoint> {
    let n = n.max(3);
    let rs: Vec<f64> = (0..n).map(|k| r_window.0 + (r_window.1 - r_window.0) * k as f64 / (n - 1) as f64).collect();
    let zs: Vec<f64> = (0..n).map(|k| z_window.0 + (z_window.1 - z_window.0) * k as f64 / (n - 1) as f64).collect();
    let g2 = |r: f64, z: f64| {
        let (_, a, b) = poly.gradient(r, z);
        a * a + b * b
    };
    let s = Array2::from_shape_fn((n, n), |(i, j)| g2(rs[i], zs[j]));
    let mut seeds = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = s[[i, j]];
            let mut is_min = true;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) != (0, 0)
                        && a >= 0
                        && b >= 0
                        && (a as usize) < n
                        && (b as usize) < n
                        && s[[a as usize, b as usize]] < v
                    {
                        is_min = false;
                    }
                }
            }
            if is_min {
                seeds.push((rs[i], zs[j]));
            }
        }
    }

    let mut found: Vec<CriticalPoint> = Vec::new();
    let pad_r = 0.01 * (r_window.1 - r_window.0);
    let pad_z = 0.01 * (z_window.1 - z_window.0);
    for (mut r, mut z) in seeds {
        for _ in 0..100 {
            let (_, gr, gz) = poly.gradient(r, z);
            if gr.hypot(gz) < 1e-14 {
                break;
            }
            let (a, b, c) = poly.hessian(r, z);
            let det = a * c - b * b;
            if det == 0.0 {
                break;
            }
            let (dr, dz) = (-(c * gr - b * gz) / det, -(a * gz - b * gr) / det);
            let g0 = gr * gr + gz * gz;
            let mut t = 1.0;
            while t > 1e-6 && g2(r + t * dr, z + t * dz) >= g0 {
                t *= 0.5;
            }
            r += t * dr;
            z += t * dz;
        }
        let (v, gr, gz) = poly.gradient(r, z);
        let inside =
            r >= r_window.0 - pad_r && r <= r_window.1 + pad_r && z >= z_window.0 - pad_z && z <= z_window.1 + pad_z;
        if !inside || gr.hypot(gz) >= CRITICAL_GRADIENT_TOL {
            continue;
        }
        if found.iter().any(|c| (c.r - r).hypot(c.z - z) < 1e-6) {
            continue;
        }
        let (a, b, c) = poly.hessian(r, z);
        found.push(CriticalPoint { r, z, psi: v, kind: classify(a, b, c) });
    }
    found.sort_by(|a, b| a.r.total_cmp(&b.r).then(a.z.total_cmp(&b.z)));
    found
}

/// Critical nodes of a sampled field: local minima of the centred-difference
/// |∇ψ|² below `grad_tol`, classified by the difference Hessian.
pub fn critical_points_field(field: &PsiField, grad_tol: f64) -> Vec<CriticalPoint> {
    let (nr, nz) = field.psi.dim();
    let ok = |i: usize, j: usize| field.mask[[i, j]];
    let grad = |i: usize, j: usize| -> Option<(f64, f64)> {
        if i == 0 || j == 0 || i + 1 >= nr || j + 1 >= nz {
            return None;
        }
        if !(ok(i - 1, j) && ok(i + 1, j) && ok(i, j - 1) && ok(i, j + 1) && ok(i, j)) {
            return None;
        }
        let gr = (field.psi[[i + 1, j]] - field.psi[[i - 1, j]]) / (field.r[i + 1] - field.r[i - 1]);
        let gz = (field.psi[[i, j + 1]] - field.psi[[i, j - 1]]) / (field.z[j + 1] - field.z[j - 1]);
        Some((gr, gz))
    };
    let g2 = Array2::from_shape_fn((nr, nz), |(i, j)| grad(i, j).map_or(f64::INFINITY, |(a, b)| a * a + b * b));
    let mut out = Vec::new();
    for i in 2..nr.saturating_sub(2) {
        for j in 2..nz.saturating_sub(2) {
            let v = g2[[i, j]];
            if !(v.sqrt() < grad_tol) {
                continue;
            }
            let local_min = (i - 1..=i + 1).all(|a| (j - 1..=j + 1).all(|b| (a, b) == (i, j) || g2[[a, b]] >= v));
            if !local_min {
                continue;
            }
            let (hr, hz) = (field.r[i + 1] - field.r[i], field.z[j + 1] - field.z[j]);
            let p = |a: usize, b: usize| field.psi[[a, b]];
            let hrr = (p(i + 1, j) - 2.0 * p(i, j) + p(i - 1, j)) / (hr * hr);
            let hzz = (p(i, j + 1) - 2.0 * p(i, j) + p(i, j - 1)) / (hz * hz);
            let hrz = (p(i + 1, j + 1) - p(i + 1, j - 1) - p(i - 1, j + 1) + p(i - 1, j - 1)) / (4.0 * hr * hz);
            out.push(CriticalPoint { r: field.r[i], z: field.z[j], psi: p(i, j), kind: classify(hrr, hrz, hzz) });
        }
    }
    out
}

/// Nodes k·h for |k·h| ≤ half, exactly symmetric about 0.
pub fn symmetric_nodes(half: f64, h: f64) -> Vec<f64> {
    let n = (half / h + 1e-9).floor() as i64;
    (-n..=n).map(|k| k as f64 * h).collect()
}

/// Uniform nodes a, a + h, … up to b inclusive (within rounding).
pub fn uniform_nodes(a: f64, b: f64, h: f64) -> Vec<f64> {
    let n = ((b - a) / h + 1e-9).floor() as usize;
    (0..=n).map(|k| a + k as f64 * h).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series() -> ProfileSeries {
        ProfileSeries::new(DEFAULT_SERIES_ORDER).unwrap()
    }

    fn window_nodes(h: f64) -> (Vec<f64>, Vec<f64>) {
        (uniform_nodes(0.0, 1.6, h), uniform_nodes(-0.8, 0.8, h))
    }

    #[test]
    fn figure_levels_have_two_then_one_components() {
        let poly = psi_taylor(5).unwrap();
        let (r, z) = window_nodes(0.005);
        let mut f = PsiField::from_poly(&poly, &r, &z, &series()).unwrap();
        f.mask_negative();
        let levels: Vec<f64> = (1..=6).map(|i| 0.04 * i as f64).collect();
        let counts: Vec<usize> = isolines(&f, &levels).iter().map(|l| l.components.len()).collect();
        assert_eq!(counts, vec![2, 2, 2, 2, 2, 1]);
    }

    #[test]
    fn inner_isoline_is_close_to_the_quadratic_ellipse() {
        let poly = psi_taylor(5).unwrap();
        let (r, z) = window_nodes(0.002);
        let f = PsiField::from_poly(&poly, &r, &z, &series()).unwrap();
        let ls = &isolines(&f, &[0.04])[0];
        let inner = ls
            .components
            .iter()
            .filter(|c| c.closed)
            .min_by(|a, b| {
                let d = |c: &Polyline| (c.centroid()[0] - 1.0).hypot(c.centroid()[1]);
                d(a).total_cmp(&d(b))
            })
            .unwrap();
        let area = inner.signed_area().abs();
        let ellipse = std::f64::consts::PI * 2.0 * 0.04 / 3.0;
        assert!((area / ellipse - 1.0).abs() < 0.1, "{area} {ellipse}");
    }

    #[test]
    fn level_below_minimum_is_empty() {
        let poly = psi_taylor(2).unwrap();
        let (r, z) = (uniform_nodes(0.5, 1.5, 0.05), uniform_nodes(-0.5, 0.5, 0.05));
        let f = PsiField::from_poly(&poly, &r, &z, &series()).unwrap();
        assert!(isolines(&f, &[-0.01])[0].components.is_empty());
    }

    #[test]
    fn saddle_appears_for_degree_five_only() {
        let five = critical_points(&psi_taylor(5).unwrap(), (0.05, 1.6), (-0.8, 0.8), 41);
        let saddles: Vec<_> = five.iter().filter(|c| c.kind == CriticalKind::Saddle).collect();
        assert_eq!(saddles.len(), 1);
        assert!((saddles[0].r - 1.0 / 3.0).abs() < 1e-9 && saddles[0].z.abs() < 1e-9);
        assert!(five.iter().any(|c| c.kind == CriticalKind::Minimum && (c.r - 1.0).abs() < 1e-12));

        let six = critical_points(&psi_taylor(6).unwrap(), (0.05, 1.6), (-0.8, 0.8), 41);
        assert!(six.iter().all(|c| c.kind != CriticalKind::Saddle));

        let two = critical_points(&psi_taylor(2).unwrap(), (0.05, 1.6), (-0.8, 0.8), 21);
        assert_eq!(two.len(), 1);
        assert_eq!(two[0].kind, CriticalKind::Minimum);
    }

    #[test]
    fn pressure_levels() {
        let poly = psi_taylor(2).unwrap();
        let (r, z) = (vec![1.0, 1.2], vec![-0.1, 0.0, 0.1]);
        let f = PsiField::from_poly(&poly, &r, &z, &series()).unwrap();
        let pf = pressure_from_psi(&f, f.psi[[1, 1]]).unwrap();
        assert!(pf.p[[1, 1]].abs() < 1e-15);
        assert!(pf.singular[[0, 1]] && pf.p[[0, 1]] == f64::NEG_INFINITY);
        let p3 = pressure_from_psi(&f, f.psi[[1, 1]] / 3.0).unwrap();
        assert!((p3.p[[1, 1]] - 3f64.ln() / 3.0).abs() < 1e-14);
        assert!(pressure_from_psi(&f, 0.0).is_err());
    }

    #[test]
    fn negative_psi_is_a_data_error() {
        let poly = psi_taylor(5).unwrap();
        let (r, z) = (uniform_nodes(0.0, 0.2, 0.05), vec![-0.1, 0.0, 0.1]);
        let f = PsiField::from_poly(&poly, &r, &z, &series()).unwrap();
        assert!(matches!(pressure_from_psi(&f, 0.04), Err(Error::Data(_))));
    }

    #[test]
    fn march_matches_polynomial_near_centre() {
        let poly = psi_taylor(5).unwrap();
        let r = uniform_nodes(0.9, 1.1, 0.001);
        let f = psi_march(&poly, &r, &[0.0, 0.05], 0.1, &series()).unwrap();
        for (i, &rr) in r.iter().enumerate() {
            let u = (rr - 1.0_f64).abs();
            let d = (f.psi[[i, 0]] - poly.eval(rr, 0.0)).abs();
            assert!(d <= 50.0 * u.powi(6) + 1e-13, "{rr} {d}");
        }
    }

    #[test]
    fn march_is_even_in_z() {
        let poly = psi_taylor(5).unwrap();
        let (r, z) = (uniform_nodes(0.6, 1.4, 0.01), symmetric_nodes(0.5, 0.01));
        let f = psi_march(&poly, &r, &z, 0.05, &series()).unwrap();
        let nz = z.len();
        for i in 0..r.len() {
            for j in 0..nz {
                if f.mask[[i, j]] {
                    assert_eq!(f.psi[[i, j]], f.psi[[i, nz - 1 - j]]);
                }
            }
        }
    }

    #[test]
    fn seed_column_follows_taylor_data() {
        let poly = psi_taylor(5).unwrap();
        let fine = psi_taylor(12).unwrap();
        let z = symmetric_nodes(0.1, 0.01);
        let f = psi_march(&poly, &[1.0, 1.01], &z, 0.02, &series()).unwrap();
        for (j, &zz) in z.iter().enumerate() {
            assert!((f.psi[[0, j]] - fine.eval(1.0, zz)).abs() < 1e-8, "{zz}");
            let quartic = 1.5 * zz * zz + 33.0 / 32.0 * zz.powi(4);
            assert!((f.psi[[0, j]] - quartic).abs() < 2.0 * zz.powi(6) + 1e-15, "{zz}");
        }
    }

    #[test]
    fn march_residual_converges_at_second_order() {
        let poly = psi_taylor(5).unwrap();
        let run = |h: f64| {
            let (r, z) = (uniform_nodes(0.6, 1.4, h), uniform_nodes(-0.5, 0.5, h));
            let f = psi_march(&poly, &r, &z, 0.05, &series()).unwrap();
            f.max_residual((0.6, 1.4), (-0.45, 0.45))
        };
        let (a, b) = (run(0.01), run(0.005));
        let ratio = a / b;
        assert!((3.5..4.5).contains(&ratio), "{a} {b} {ratio}");
    }

    #[test]
    fn evaluator_matches_march() {
        let poly = psi_taylor(5).unwrap();
        let s = series();
        let ev = PsiEvaluator::new(&poly, s.clone(), 0.05, 0.6, 1e-3).unwrap();
        let f = psi_march(&poly, &uniform_nodes(0.8, 1.2, 1e-3), &[0.3, 0.31], 0.05, &s).unwrap();
        let (v, dr, dz) = ev.eval(1.15, 0.3).unwrap();
        assert!((v - f.psi[[350, 0]]).abs() < 1e-10, "{v} {}", f.psi[[350, 0]]);
        assert!((dz - f.psi_z[[350, 0]]).abs() < 1e-8);
        assert!((dr - 1.5 * 1.15 * (1.15 * 1.15 + s.gamma(v).0)).abs() < 1e-14);
    }

    #[test]
    fn series_matches_integrated_profiles() {
        use crate::profiles::{integrate_profiles, ProfileInit};
        use crate::sign::Sign;
        let s = series();
        let psi1 = DEFAULT_PSI_REF;
        let init = ProfileInit { alpha0: psi1, beta0: s.beta(psi1).0, gamma0: s.gamma(psi1).0, epsilon: Sign::Plus };
        let prof = integrate_profiles(init, (-0.5, 0.5), 1e-3).unwrap();
        for p in [-0.4, -0.1, 0.2, 0.45] {
            let pt = prof.at(p).unwrap();
            let psi = psi1 * (3.0 * p).exp();
            assert!((pt.beta - s.beta(psi).0).abs() < 1e-8, "{p}");
            assert!((pt.gamma - s.gamma(psi).0).abs() < 1e-8, "{p}");
        }
    }
}
