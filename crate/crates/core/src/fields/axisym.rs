//! Axisymmetric fields in physical cylindrical components.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Summary;
use crate::axisolver::{column_rhs, GeneratrixGrid};
use crate::contour::isolines;
use crate::error::{Error, Result};
use crate::minpoint::{ProfileSeries, PsiField};
use crate::ode::{hermite, lagrange4};
use crate::profiles::ProfileTriple;

/// (u_r, u_z, u_θ, p) on an (r, z) grid, arrays indexed `[r index, z index]`.
#[derive(Debug, Clone)]
pub struct AxisymField {
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    pub u_r: Array2<f64>,
    pub u_z: Array2<f64>,
    pub u_theta: Array2<f64>,
    pub p: Array2<f64>,
    pub mask: Array2<bool>,
}

impl AxisymField {
    /// Sample `f(r, z) -> (u_r, u_z, u_θ, p)`; `None` masks the node.
    pub fn from_fn<F>(r: &[f64], z: &[f64], f: F) -> Self
    where
        F: Fn(f64, f64) -> Option<[f64; 4]> + Sync,
    {
        let (nr, nz) = (r.len(), z.len());
        let vals: Vec<Option<[f64; 4]>> = (0..nr * nz).into_par_iter().map(|k| f(r[k / nz], z[k % nz])).collect();
        let mut out = AxisymField {
            r: r.to_vec(),
            z: z.to_vec(),
            u_r: Array2::from_elem((nr, nz), f64::NAN),
            u_z: Array2::from_elem((nr, nz), f64::NAN),
            u_theta: Array2::from_elem((nr, nz), f64::NAN),
            p: Array2::from_elem((nr, nz), f64::NAN),
            mask: Array2::from_elem((nr, nz), false),
        };
        for (k, v) in vals.into_iter().enumerate() {
            if let Some([a, b, c, d]) = v {
                let ix = [k / nz, k % nz];
                out.u_r[ix] = a;
                out.u_z[ix] = b;
                out.u_theta[ix] = c;
                out.p[ix] = d;
                out.mask[ix] = true;
            }
        }
        out
    }

    pub fn speed(&self, i: usize, j: usize) -> f64 {
        (self.u_r[[i, j]].powi(2) + self.u_z[[i, j]].powi(2) + self.u_theta[[i, j]].powi(2)).sqrt()
    }

    /// Largest | |u| − 1 | over masked-in nodes.
    pub fn normalization_error(&self) -> f64 {
        let mut m = 0.0f64;
        for ((i, j), &ok) in self.mask.indexed_iter() {
            if ok {
                m = m.max((self.speed(i, j) - 1.0).abs());
            }
        }
        m
    }

    /// Mask out nodes whose pressure lies outside `[lo, hi]`.
    pub fn restrict_pressure(&mut self, lo: f64, hi: f64) {
        for (m, &p) in self.mask.iter_mut().zip(self.p.iter()) {
            if !(p >= lo && p <= hi) {
                *m = false;
            }
        }
    }

    pub fn masked_in(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Bilinear interpolation of a nodal quantity; `None` outside fully unmasked cells.
    pub fn interpolate(&self, values: &Array2<f64>, r: f64, z: f64) -> Option<f64> {
        let i = cell(&self.r, r)?;
        let j = cell(&self.z, z)?;
        if !(self.mask[[i, j]] && self.mask[[i + 1, j]] && self.mask[[i, j + 1]] && self.mask[[i + 1, j + 1]]) {
            return None;
        }
        let s = (r - self.r[i]) / (self.r[i + 1] - self.r[i]);
        let t = (z - self.z[j]) / (self.z[j + 1] - self.z[j]);
        Some(
            (1.0 - s) * (1.0 - t) * values[[i, j]]
                + s * (1.0 - t) * values[[i + 1, j]]
                + (1.0 - s) * t * values[[i, j + 1]]
                + s * t * values[[i + 1, j + 1]],
        )
    }
}

fn cell(x: &[f64], v: f64) -> Option<usize> {
    if x.len() < 2 || v < x[0] || v > x[x.len() - 1] {
        return None;
    }
    let k = x.partition_point(|&a| a <= v);
    Some(k.saturating_sub(1).min(x.len() - 2))
}

/// Physical velocity at radius `r` for swirl constant β and a meridian
/// tangent direction: u_θ = √β/r and |(u_r, u_z)|² = 1 − β/r².
/// `None` when β < 0 or r < √β.
pub fn swirl_velocity(r: f64, beta: f64, tangent: (f64, f64)) -> Option<(f64, f64, f64)> {
    if !(beta >= 0.0 && r > 0.0) {
        return None;
    }
    let m2 = 1.0 - beta / (r * r);
    if m2 < 0.0 {
        return None;
    }
    let n = tangent.0.hypot(tangent.1);
    let (tr, tz) = if n > 0.0 { (tangent.0 / n, tangent.1 / n) } else { (0.0, 0.0) };
    let m = m2.sqrt();
    Some((m * tr, m * tz, beta.sqrt() / r))
}

/// Build the field on `r_nodes` × (every `z_stride`-th solver z-node inside
/// `z_window`) by inverting r = f(p, z) along each solver column.
///
/// The inversion uses Hermite interpolation in p with the exact column
/// slope; f'_z at the recovered pressure is cubic in p. The meridian
/// velocity points along the isobar tangent (f'_z, 1).
pub fn reconstruct_generatrix(
    grid: &GeneratrixGrid,
    profiles: &ProfileTriple,
    r_nodes: &[f64],
    z_stride: usize,
    z_window: (f64, f64),
) -> Result<AxisymField> {
    if z_stride == 0 {
        return Err(Error::Parameter("z stride must be positive".into()));
    }
    let eps = profiles.epsilon;
    let cols: Vec<usize> = (0..grid.z.len())
        .filter(|&j| (j as i64 - grid.z_origin as i64).rem_euclid(z_stride as i64) == 0)
        .filter(|&j| grid.z[j] >= z_window.0 - 1e-12 && grid.z[j] <= z_window.1 + 1e-12)
        .collect();
    if cols.is_empty() {
        return Err(Error::Parameter("no solver z-nodes inside the window".into()));
    }
    let z: Vec<f64> = cols.iter().map(|&j| grid.z[j]).collect();
    let np = grid.p.len();
    let slope: Vec<Vec<f64>> = (0..np)
        .map(|i| {
            let pt = profiles.at(grid.p[i]);
            (0..grid.z.len())
                .map(|j| match (&pt, grid.admissible[[i, j]]) {
                    (Some(pt), true) => column_rhs(grid.f[[i, j]], pt, eps),
                    _ => f64::NAN,
                })
                .collect()
        })
        .collect();

    let node = |r: f64, jj: usize| -> Option<[f64; 4]> {
        let j = cols[jj];
        let ok = |i: usize| grid.admissible[[i, j]];
        let i = (0..np.saturating_sub(1))
            .find(|&i| ok(i) && ok(i + 1) && grid.f[[i, j]] <= r && r <= grid.f[[i + 1, j]])?;
        let (p0, p1) = (grid.p[i], grid.p[i + 1]);
        let h = |p: f64| hermite(p0, p1, grid.f[[i, j]], grid.f[[i + 1, j]], slope[i][j], slope[i + 1][j], p) - r;
        let (mut lo, mut hi) = (p0, p1);
        for _ in 0..60 {
            let m = 0.5 * (lo + hi);
            if h(m) <= 0.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        let p = 0.5 * (lo + hi);
        let k0 = i.saturating_sub(1).min(np.saturating_sub(4));
        if np < 4 || !(k0..k0 + 4).all(ok) {
            return None;
        }
        let col_fz: Vec<f64> = (0..np).map(|k| grid.fz[[k, j]]).collect();
        let fz = lagrange4(&grid.p, &col_fz, i, p);
        let pt = profiles.at(p)?;
        let e = eps.value();
        let (ur, uz, ut) = swirl_velocity(r, pt.beta, (e * fz, e))?;
        Some([ur, uz, ut, p])
    };
    Ok(AxisymField::from_fn(r_nodes, &z, |r, zz| {
        let jj = z.iter().position(|&v| v == zz)?;
        node(r, jj)
    }))
}

/// Torus-type field from ψ: p = (1/3) ln(ψ/ψ_ref), β = β(ψ), with the
/// meridian velocity along the level-curve tangent (−ψ_z, ψ_r).
pub fn reconstruct_psi(field: &PsiField, series: &ProfileSeries, psi_ref: f64) -> Result<AxisymField> {
    if !(psi_ref > 0.0) {
        return Err(Error::Parameter("psi_ref must be positive".into()));
    }
    let index = |v: &[f64], x: f64| v.iter().position(|&a| a == x);
    Ok(AxisymField::from_fn(&field.r, &field.z, |r, z| {
        let (i, j) = (index(&field.r, r)?, index(&field.z, z)?);
        if !field.mask[[i, j]] {
            return None;
        }
        let psi = field.psi[[i, j]];
        if !(psi > 0.0) {
            return None;
        }
        let (pr, pz) = (field.psi_r[[i, j]], field.psi_z[[i, j]]);
        if pr == 0.0 && pz == 0.0 {
            return None;
        }
        let beta = series.beta(psi).0;
        let (ur, uz, ut) = swirl_velocity(r, beta, (-pz, pr))?;
        Some([ur, uz, ut, (psi / psi_ref).ln() / 3.0])
    }))
}

/// Pointwise residual grids of the steady Euler system in cylindrical
/// components, with second-order centred differences.
#[derive(Debug, Clone)]
pub struct AxisymResiduals {
    pub divergence: Array2<f64>,
    pub momentum_r: Array2<f64>,
    pub momentum_theta: Array2<f64>,
    pub momentum_z: Array2<f64>,
    pub orthogonality: Array2<f64>,
}

impl AxisymResiduals {
    /// Summaries in the order divergence, momentum r, θ, z, orthogonality.
    pub fn summaries(&self) -> [(&'static str, Summary); 5] {
        [
            ("divergence", Summary::of(self.divergence.iter())),
            ("momentum_r", Summary::of(self.momentum_r.iter())),
            ("momentum_theta", Summary::of(self.momentum_theta.iter())),
            ("momentum_z", Summary::of(self.momentum_z.iter())),
            ("orthogonality", Summary::of(self.orthogonality.iter())),
        ]
    }

    pub fn maxima(&self) -> [f64; 5] {
        self.summaries().map(|(_, s)| s.max)
    }
}

pub fn euler_residuals(field: &AxisymField) -> AxisymResiduals {
    let (nr, nz) = field.mask.dim();
    let nan = || Array2::from_elem((nr, nz), f64::NAN);
    let mut out = AxisymResiduals {
        divergence: nan(),
        momentum_r: nan(),
        momentum_theta: nan(),
        momentum_z: nan(),
        orthogonality: nan(),
    };
    let m = &field.mask;
    for i in 1..nr.saturating_sub(1) {
        for j in 1..nz.saturating_sub(1) {
            if !(m[[i, j]] && m[[i - 1, j]] && m[[i + 1, j]] && m[[i, j - 1]] && m[[i, j + 1]]) {
                continue;
            }
            let dr = field.r[i + 1] - field.r[i - 1];
            let dz = field.z[j + 1] - field.z[j - 1];
            let d_r = |a: &Array2<f64>| (a[[i + 1, j]] - a[[i - 1, j]]) / dr;
            let d_z = |a: &Array2<f64>| (a[[i, j + 1]] - a[[i, j - 1]]) / dz;
            let r = field.r[i];
            let (ur, uz, ut) = (field.u_r[[i, j]], field.u_z[[i, j]], field.u_theta[[i, j]]);
            let (pr, pz) = (d_r(&field.p), d_z(&field.p));
            out.divergence[[i, j]] = d_r(&field.u_r) + ur / r + d_z(&field.u_z);
            out.momentum_r[[i, j]] = ur * d_r(&field.u_r) + uz * d_z(&field.u_r) - ut * ut / r + pr;
            out.momentum_theta[[i, j]] = ur * d_r(&field.u_theta) + uz * d_z(&field.u_theta) + ur * ut / r;
            out.momentum_z[[i, j]] = ur * d_r(&field.u_z) + uz * d_z(&field.u_z) + pz;
            out.orthogonality[[i, j]] = ur * pr + uz * pz;
        }
    }
    out
}

/// Speed statistics along one isobar.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsobarSpeed {
    pub level: f64,
    pub mean: f64,
    pub max_deviation: f64,
    pub vertices: usize,
    pub flagged: bool,
}

/// For each pressure level: mean of |u| along the traced isobar and the
/// largest deviation from that mean. Levels with no isobar are omitted.
pub fn bernoulli_audit(field: &AxisymField, levels: &[f64], tol: f64) -> Vec<IsobarSpeed> {
    let (nr, nz) = field.mask.dim();
    let speed = Array2::from_shape_fn((nr, nz), |(i, j)| if field.mask[[i, j]] { field.speed(i, j) } else { f64::NAN });
    levels
        .iter()
        .filter_map(|&level| {
            let curves = isolines(&field.r, &field.z, &field.p, Some(&field.mask), level);
            let vals: Vec<f64> = curves
                .iter()
                .flat_map(|c| c.points.iter())
                .filter_map(|q| field.interpolate(&speed, q[0], q[1]))
                .collect();
            if vals.is_empty() {
                return None;
            }
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let max_deviation = vals.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
            Some(IsobarSpeed { level, mean, max_deviation, vertices: vals.len(), flagged: max_deviation > tol })
        })
        .collect()
}

/// Largest |r u_θ − √β(p)| over isobar vertices at the given levels.
pub fn clairaut_defect<B: Fn(f64) -> Option<f64>>(field: &AxisymField, levels: &[f64], beta: B) -> f64 {
    let (nr, nz) = field.mask.dim();
    let ang = Array2::from_shape_fn((nr, nz), |(i, j)| field.r[i] * field.u_theta[[i, j]]);
    let mut worst = 0.0f64;
    for &level in levels {
        let Some(b) = beta(level) else { continue };
        for c in isolines(&field.r, &field.z, &field.p, Some(&field.mask), level) {
            for q in &c.points {
                if let Some(v) = field.interpolate(&ang, q[0], q[1]) {
                    worst = worst.max((v - b.max(0.0).sqrt()).abs());
                }
            }
        }
    }
    worst
}

/// The equivalence (u, p) ↦ (φ(p) u, P(p)) with P' = φ², applied nodewise.
pub fn equivalence_transform<F, P>(field: &AxisymField, phi: F, primitive: P) -> AxisymField
where
    F: Fn(f64) -> f64,
    P: Fn(f64) -> f64,
{
    let mut out = field.clone();
    for ((i, j), &ok) in field.mask.indexed_iter() {
        if !ok {
            continue;
        }
        let p = field.p[[i, j]];
        let s = phi(p);
        out.u_r[[i, j]] *= s;
        out.u_z[[i, j]] *= s;
        out.u_theta[[i, j]] *= s;
        out.p[[i, j]] = primitive(p);
    }
    out
}
