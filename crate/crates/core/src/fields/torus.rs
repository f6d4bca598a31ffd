//! The three-dimensional flow generated by a ψ evaluator around the
//! minimum at (r, z) = (1, 0).

use super::axisym::swirl_velocity;
use super::cartesian::{FlowEvaluator, FlowSample};
use crate::error::{Error, Result};
use crate::minpoint::PsiEvaluator;

/// Radius below which the flow is left undefined: the swirl √β(ψ)/r is
/// singular on the axis.
pub const TORUS_MIN_RADIUS: f64 = 0.5;

/// Fraction of the smallest ψ on the cut r = [`TORUS_MIN_RADIUS`] used as
/// the regular-level cap by [`TorusFlow::with_cut_cap`].
pub const CUT_CAP_FRACTION: f64 = 0.9;

/// p = (1/3) ln(ψ/ψ_ref), u_θ = √β(ψ)/r, meridian part along (−ψ_z, ψ_r).
#[derive(Debug, Clone)]
pub struct TorusFlow {
    pub evaluator: PsiEvaluator,
    pub psi_ref: f64,
    /// Largest ψ-level accepted as regular.
    pub psi_cap: f64,
}

impl TorusFlow {
    pub fn new(evaluator: PsiEvaluator, psi_ref: f64, psi_cap: f64) -> Result<Self> {
        if !(psi_ref > 0.0 && psi_cap > 0.0) {
            return Err(Error::Parameter("psi_ref and psi_cap must be positive".into()));
        }
        Ok(TorusFlow { evaluator, psi_ref, psi_cap })
    }

    /// Cap the regular levels below the smallest ψ on the cylinder
    /// r = [`TORUS_MIN_RADIUS`], |z| ≤ `z_extent`, so that every regular
    /// isobar is a closed torus inside the domain.
    pub fn with_cut_cap(evaluator: PsiEvaluator, psi_ref: f64, z_extent: f64) -> Result<Self> {
        let n = 200;
        let cut_min = (0..=n)
            .filter_map(|k| evaluator.eval(TORUS_MIN_RADIUS, -z_extent + 2.0 * z_extent * k as f64 / n as f64))
            .map(|v| v.0)
            .fold(f64::INFINITY, f64::min);
        if !cut_min.is_finite() {
            return Err(Error::Data("ψ is undefined on the whole cut".into()));
        }
        Self::new(evaluator, psi_ref, CUT_CAP_FRACTION * cut_min)
    }

    pub fn pressure_of_psi(&self, psi: f64) -> f64 {
        (psi / self.psi_ref).ln() / 3.0
    }

    pub fn psi_of_pressure(&self, p: f64) -> f64 {
        self.psi_ref * (3.0 * p).exp()
    }
}

impl FlowEvaluator for TorusFlow {
    fn dim(&self) -> usize {
        3
    }

    fn sample(&self, x: &[f64]) -> Option<FlowSample> {
        let r = x[0].hypot(x[1]);
        if r < TORUS_MIN_RADIUS {
            return None;
        }
        let (psi, pr, pz) = self.evaluator.eval(r, x[2])?;
        if !(psi > 0.0) || (pr == 0.0 && pz == 0.0) {
            return None;
        }
        let beta = self.evaluator.series().beta(psi).0;
        let (ur, uz, ut) = swirl_velocity(r, beta, (-pz, pr))?;
        let (c, s) = (x[0] / r, x[1] / r);
        let g = 1.0 / (3.0 * psi);
        Some(FlowSample {
            u: vec![ur * c - ut * s, ur * s + ut * c, uz],
            p: self.pressure_of_psi(psi),
            grad_p: vec![g * pr * c, g * pr * s, g * pz],
        })
    }

    /// The minimum ψ = 0 sits at p = −∞, so only the upper end can fail.
    fn regular_band(&self, lo: f64, hi: f64) -> bool {
        lo.is_finite() && lo <= hi && self.psi_of_pressure(hi) < self.psi_cap
    }
}
