//! Arc-length parametrized generatrix families and the identities they
//! satisfy for a normalized flow.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::Summary;
use crate::axisolver::GeneratrixGrid;
use crate::error::{Error, Result};
use crate::ode::hermite;
use crate::profiles::ProfileTriple;

/// Curves (R(p, t), Z(p, t)), arrays indexed `[p index, t index]`.
#[derive(Debug, Clone)]
pub struct GeneratrixFamily {
    pub p: Vec<f64>,
    pub t: Vec<f64>,
    pub r: Array2<f64>,
    pub z: Array2<f64>,
}

/// |R'_t| at or below this on a whole slice marks it as a cylinder.
pub const CYLINDER_TOL: f64 = 1e-9;

impl GeneratrixFamily {
    pub fn from_fn<F: Fn(f64, f64) -> (f64, f64)>(p: &[f64], t: &[f64], f: F) -> Self {
        let (np, nt) = (p.len(), t.len());
        let mut r = Array2::zeros((np, nt));
        let mut z = Array2::zeros((np, nt));
        for i in 0..np {
            for k in 0..nt {
                let (a, b) = f(p[i], t[k]);
                r[[i, k]] = a;
                z[[i, k]] = b;
            }
        }
        GeneratrixFamily { p: p.to_vec(), t: t.to_vec(), r, z }
    }

    /// R = 1 + ρ(p) cos(t/ρ), Z = ρ(p) sin(t/ρ).
    pub fn circles<F: Fn(f64) -> f64>(p: &[f64], t: &[f64], rho: F) -> Self {
        Self::from_fn(p, t, |p, t| {
            let q = rho(p);
            (1.0 + q * (t / q).cos(), q * (t / q).sin())
        })
    }

    /// R = radius(p), Z = t.
    pub fn cylinders<F: Fn(f64) -> f64>(p: &[f64], t: &[f64], radius: F) -> Self {
        Self::from_fn(p, t, |p, t| (radius(p), t))
    }

    /// Re-parametrize every `p_stride`-th solver slice by arc length from
    /// z = 0, restricted to `z_window`, on a common uniform t-grid of step
    /// `t_step`. Slices that are degenerate or not admissible throughout the
    /// window are skipped.
    pub fn from_grid(grid: &GeneratrixGrid, z_window: (f64, f64), p_stride: usize, t_step: f64) -> Result<Self> {
        if p_stride == 0 || !(t_step > 0.0) {
            return Err(Error::Parameter("p stride and t step must be positive".into()));
        }
        let js: Vec<usize> =
            (0..grid.z.len()).filter(|&j| grid.z[j] >= z_window.0 - 1e-12 && grid.z[j] <= z_window.1 + 1e-12).collect();
        if js.len() < 2 || !js.contains(&grid.z_origin) {
            return Err(Error::Parameter("z window must contain z = 0 and at least two nodes".into()));
        }
        let o = js.iter().position(|&j| j == grid.z_origin).unwrap_or(0);
        let mut slices = Vec::new();
        for i in (0..grid.p.len()).step_by(p_stride) {
            if grid.degenerate[i] || !js.iter().all(|&j| grid.admissible[[i, j]]) {
                continue;
            }
            let z: Vec<f64> = js.iter().map(|&j| grid.z[j]).collect();
            let f: Vec<f64> = js.iter().map(|&j| grid.f[[i, j]]).collect();
            let fz: Vec<f64> = js.iter().map(|&j| grid.fz[[i, j]]).collect();
            let fzz: Vec<f64> = js.iter().map(|&j| grid.fzz[[i, j]]).collect();
            let w: Vec<f64> = fz.iter().map(|d| d.hypot(1.0)).collect();
            let mut t = vec![0.0; z.len()];
            for k in 0..z.len() - 1 {
                let zm = 0.5 * (z[k] + z[k + 1]);
                let wm = hermite(z[k], z[k + 1], fz[k], fz[k + 1], fzz[k], fzz[k + 1], zm).hypot(1.0);
                t[k + 1] = t[k] + (z[k + 1] - z[k]) * (w[k] + 4.0 * wm + w[k + 1]) / 6.0;
            }
            let shift = t[o];
            t.iter_mut().for_each(|v| *v -= shift);
            slices.push((grid.p[i], z, f, fz, w, t));
        }
        if slices.is_empty() {
            return Err(Error::Data("no admissible slice covers the z window".into()));
        }
        let lo = slices.iter().map(|s| s.5[0]).fold(f64::NEG_INFINITY, f64::max);
        let hi = slices.iter().map(|s| *s.5.last().unwrap()).fold(f64::INFINITY, f64::min);
        let (k0, k1) = ((lo / t_step).ceil() as i64, (hi / t_step).floor() as i64);
        let t: Vec<f64> = (k0..=k1).map(|k| k as f64 * t_step).collect();
        let np = slices.len();
        let mut r = Array2::zeros((np, t.len()));
        let mut zz = Array2::zeros((np, t.len()));
        for (i, (_, z, f, fz, w, ts)) in slices.iter().enumerate() {
            for (k, &tk) in t.iter().enumerate() {
                let m = ts.partition_point(|&v| v <= tk).clamp(1, ts.len() - 1) - 1;
                let g = |zv: f64| hermite(z[m], z[m + 1], ts[m], ts[m + 1], w[m], w[m + 1], zv) - tk;
                let (mut a, mut b) = (z[m], z[m + 1]);
                for _ in 0..60 {
                    let c = 0.5 * (a + b);
                    if g(c) <= 0.0 {
                        a = c;
                    } else {
                        b = c;
                    }
                }
                let zs = 0.5 * (a + b);
                r[[i, k]] = hermite(z[m], z[m + 1], f[m], f[m + 1], fz[m], fz[m + 1], zs);
                zz[[i, k]] = zs;
            }
        }
        Ok(GeneratrixFamily { p: slices.iter().map(|s| s.0).collect(), t, r, z: zz })
    }
}

/// Per-node residuals of the arc-length, Jacobian and curvature identities.
#[derive(Debug, Clone)]
pub struct GeometryReport {
    pub p: Vec<f64>,
    pub t: Vec<f64>,
    pub arc_length: Array2<f64>,
    pub jacobian: Array2<f64>,
    pub jacobian_identity: Array2<f64>,
    pub curvature_identity: Array2<f64>,
    /// |J| below the threshold.
    pub irregular: Array2<bool>,
    /// Slices with R'_t ≡ 0, excluded from the Jacobian and curvature checks.
    pub cylinder_slices: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometrySummary {
    pub arc_length: Summary,
    pub jacobian_identity: Summary,
    pub curvature_identity: Summary,
    pub irregular_nodes: usize,
    pub cylinder_slices: usize,
}

impl GeometryReport {
    pub fn summary(&self) -> GeometrySummary {
        GeometrySummary {
            arc_length: Summary::of(self.arc_length.iter()),
            jacobian_identity: Summary::of(self.jacobian_identity.iter()),
            curvature_identity: Summary::of(self.curvature_identity.iter()),
            irregular_nodes: self.irregular.iter().filter(|&&b| b).count(),
            cylinder_slices: self.cylinder_slices.iter().filter(|&&b| b).count(),
        }
    }
}

/// Fourth-order centred first and second differences at index k, or `None`
/// within two nodes of either end.
fn d12(v: &[f64], h: f64, k: usize) -> Option<(f64, f64)> {
    if k < 2 || k + 2 >= v.len() {
        return None;
    }
    let (a, b, c, d, e) = (v[k - 2], v[k - 1], v[k], v[k + 1], v[k + 2]);
    Some(((a - 8.0 * b + 8.0 * d - e) / (12.0 * h), (-a + 16.0 * b - 30.0 * c + 16.0 * d - e) / (12.0 * h * h)))
}

/// Check R'_t² + Z'_t² = 1, √(R² − β)|J| = √α and
/// κR(R² − β) + βZ'_t = εR³√(R² − β)/√α, with J = R'_p Z'_t − R'_t Z'_p and
/// κ = R'_t Z''_tt − Z'_t R''_tt. Both grids must be uniform.
pub fn verify_geometry(
    family: &GeneratrixFamily,
    profiles: &ProfileTriple,
    j_threshold: f64,
) -> Result<GeometryReport> {
    let (np, nt) = family.r.dim();
    if np < 5 || nt < 5 {
        return Err(Error::Parameter("geometry checks need at least 5 nodes in p and in t".into()));
    }
    let ht = family.t[1] - family.t[0];
    let hp = family.p[1] - family.p[0];
    let eps = profiles.epsilon.value();
    let nan = || Array2::from_elem((np, nt), f64::NAN);
    let mut rep = GeometryReport {
        p: family.p.clone(),
        t: family.t.clone(),
        arc_length: nan(),
        jacobian: nan(),
        jacobian_identity: nan(),
        curvature_identity: nan(),
        irregular: Array2::from_elem((np, nt), false),
        cylinder_slices: vec![false; np],
    };
    let rows_r: Vec<Vec<f64>> = family.r.outer_iter().map(|v| v.to_vec()).collect();
    let rows_z: Vec<Vec<f64>> = family.z.outer_iter().map(|v| v.to_vec()).collect();
    for i in 0..np {
        let rt: Vec<Option<f64>> = (0..nt).map(|k| d12(&rows_r[i], ht, k).map(|d| d.0)).collect();
        rep.cylinder_slices[i] = rt.iter().flatten().all(|v| v.abs() <= CYLINDER_TOL);
    }
    for k in 0..nt {
        let col_r: Vec<f64> = family.r.column(k).to_vec();
        let col_z: Vec<f64> = family.z.column(k).to_vec();
        for i in 0..np {
            let (Some((r_t, r_tt)), Some((z_t, z_tt))) = (d12(&rows_r[i], ht, k), d12(&rows_z[i], ht, k)) else {
                continue;
            };
            rep.arc_length[[i, k]] = r_t * r_t + z_t * z_t - 1.0;
            if rep.cylinder_slices[i] {
                continue;
            }
            let (Some((r_p, _)), Some((z_p, _))) = (d12(&col_r, hp, i), d12(&col_z, hp, i)) else { continue };
            let Some(pt) = profiles.at(family.p[i]) else { continue };
            let j = r_p * z_t - r_t * z_p;
            rep.jacobian[[i, k]] = j;
            if j.abs() < j_threshold {
                rep.irregular[[i, k]] = true;
                continue;
            }
            let r = family.r[[i, k]];
            let d = r * r - pt.beta;
            if !(d > 0.0 && pt.alpha > 0.0) {
                rep.irregular[[i, k]] = true;
                continue;
            }
            let (sd, sa) = (d.sqrt(), pt.alpha.sqrt());
            let kappa = r_t * z_tt - z_t * r_tt;
            rep.jacobian_identity[[i, k]] = sd * j.abs() - sa;
            rep.curvature_identity[[i, k]] = kappa * r * d + pt.beta * z_t - eps * r.powi(3) * sd / sa;
        }
    }
    Ok(rep)
}
