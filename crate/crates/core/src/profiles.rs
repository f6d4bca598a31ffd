//! Profile functions α(p), β(p), γ(p) and the consistency ODEs they satisfy.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{bisect_predicate, hermite, rk4_step};
use crate::sign::Sign;

/// Below this value of |β + εγ| the consistency system is treated as singular.
pub const DEGENERACY_THRESHOLD: f64 = 1e-8;

/// Step used for centered differences of non-consistent profiles.
pub const PROFILE_FD_STEP: f64 = 1e-5;

/// Profile values and first derivatives at one pressure value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub dalpha: f64,
    pub dbeta: f64,
    pub dgamma: f64,
}

/// Why an integration run stopped at one end of its interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Reached the end of the requested range.
    RangeEnd,
    /// |β + εγ| fell below the degeneracy threshold or changed sign.
    Degenerate,
    /// The state became infinite or NaN.
    NonFinite,
    /// The fixed step left the RK4 stability region of a decaying mode.
    StabilityLimit,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Termination::RangeEnd => "range end",
            Termination::Degenerate => "degenerate determinant",
            Termination::NonFinite => "non-finite state",
            Termination::StabilityLimit => "integrator stability limit",
        };
        f.write_str(s)
    }
}

pub fn alpha_closed_form(alpha0: f64, p: f64) -> Result<f64> {
    if !(alpha0 > 0.0) {
        return Err(Error::Parameter(format!("alpha0 must be positive, got {alpha0}")));
    }
    Ok(alpha0 * (3.0 * p).exp())
}

/// Solve the consistency conditions for (β', γ').
///
/// The conditions are written with r = α'/α. For α = 0 the value r = 3 of
/// the exponential family is used, which makes (1/3, −1) a fixed point.
pub fn consistency_rhs(beta: f64, gamma: f64, alpha: f64, dalpha: f64, epsilon: Sign) -> Result<(f64, f64)> {
    let e = epsilon.value();
    let s = beta + e * gamma;
    if !(s.abs() >= DEGENERACY_THRESHOLD) {
        return Err(Error::Singular(s.abs()));
    }
    let r = if alpha == 0.0 { 3.0 } else { dalpha / alpha };
    // [1, 2e; eγ, −2eβ] (β', γ') = (rhs1, rhs2), determinant −2e(β + eγ)
    let rhs1 = -r * beta + e * r * gamma - 4.0 * e * gamma;
    let rhs2 = -e * r * beta * gamma + 4.0 * alpha - gamma * gamma;
    let det = -2.0 * e * s;
    let db = (rhs1 * (-2.0 * e * beta) - 2.0 * e * rhs2) / det;
    let dg = (rhs2 - e * gamma * rhs1) / det;
    Ok((db, dg))
}

/// Residuals of the two consistency equations with α' = 3α.
pub fn consistency_residuals(pt: &ProfilePoint, epsilon: Sign) -> (f64, f64) {
    let e = epsilon.value();
    let (a, b, g, db, dg) = (pt.alpha, pt.beta, pt.gamma, pt.dbeta, pt.dgamma);
    let r1 = db + 2.0 * e * dg + 3.0 * b + e * g;
    let r2 = g * db - 2.0 * b * dg + 3.0 * b * g - 4.0 * e * a + e * g * g;
    (r1, r2)
}

#[derive(Clone)]
enum Repr {
    Sampled(Sampled),
    Exceptional { a0: f64 },
    Custom(Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>),
}

#[derive(Clone, Debug)]
struct Sampled {
    alpha: Arc<AlphaFn>,
    p_first: f64,
    step: f64,
    beta: Vec<f64>,
    gamma: Vec<f64>,
    dbeta: Vec<f64>,
    dgamma: Vec<f64>,
}

/// α as a function of p together with its derivative.
#[derive(Clone, Debug)]
pub enum AlphaFn {
    Exponential { alpha0: f64 },
    Zero,
}

impl AlphaFn {
    pub fn eval(&self, p: f64) -> (f64, f64) {
        match *self {
            AlphaFn::Exponential { alpha0 } => {
                let a = alpha0 * (3.0 * p).exp();
                (a, 3.0 * a)
            }
            AlphaFn::Zero => (0.0, 0.0),
        }
    }
}

/// The profile triple (α, β, γ) with derivatives, sign ε and validity data.
#[derive(Clone)]
pub struct ProfileTriple {
    repr: Repr,
    pub epsilon: Sign,
    /// Open interval on which the triple exists.
    pub valid_interval: (f64, f64),
    /// Reasons the lower and upper ends were reached.
    pub termination: (Termination, Termination),
    /// Sub-interval of `valid_interval` containing 0 on which β ≥ 0.
    pub nonneg_interval: (f64, f64),
    /// True when (β', γ') are taken from the consistency ODEs.
    pub consistent: bool,
}

impl fmt::Debug for ProfileTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProfileTriple")
            .field("epsilon", &self.epsilon)
            .field("valid_interval", &self.valid_interval)
            .field("termination", &self.termination)
            .field("nonneg_interval", &self.nonneg_interval)
            .field("consistent", &self.consistent)
            .finish()
    }
}

impl ProfileTriple {
    /// The constant-α family α = 4a₀, β = 4(1−a₀)p, γ = 4(a₀−p) with ε = 1.
    /// It solves the first-order system but not the consistency conditions.
    pub fn exceptional(a0: f64) -> Result<Self> {
        if !(a0 > 0.0 && a0 <= 1.0) {
            return Err(Error::Parameter(format!("a0 must lie in (0, 1], got {a0}")));
        }
        Ok(ProfileTriple {
            repr: Repr::Exceptional { a0 },
            epsilon: Sign::Plus,
            valid_interval: (0.0, f64::INFINITY),
            termination: (Termination::RangeEnd, Termination::RangeEnd),
            nonneg_interval: (0.0, f64::INFINITY),
            consistent: false,
        })
    }

    /// Arbitrary profiles given as p ↦ [α, β, γ]; derivatives by centered differences.
    pub fn from_functions<F>(f: F, epsilon: Sign, valid_interval: (f64, f64)) -> Self
    where
        F: Fn(f64) -> [f64; 3] + Send + Sync + 'static,
    {
        ProfileTriple {
            repr: Repr::Custom(Arc::new(f)),
            epsilon,
            valid_interval,
            termination: (Termination::RangeEnd, Termination::RangeEnd),
            nonneg_interval: valid_interval,
            consistent: false,
        }
    }

    /// Profile values at `p`, or `None` outside the sampled/valid range.
    pub fn at(&self, p: f64) -> Option<ProfilePoint> {
        match &self.repr {
            Repr::Sampled(s) => s.at(p, self.epsilon),
            Repr::Exceptional { a0 } => {
                if !(p > self.valid_interval.0) {
                    return None;
                }
                Some(ProfilePoint {
                    p,
                    alpha: 4.0 * a0,
                    beta: 4.0 * (1.0 - a0) * p,
                    gamma: 4.0 * (a0 - p),
                    dalpha: 0.0,
                    dbeta: 4.0 * (1.0 - a0),
                    dgamma: -4.0,
                })
            }
            Repr::Custom(f) => {
                if !(p > self.valid_interval.0 && p < self.valid_interval.1) {
                    return None;
                }
                let v = f(p);
                let h = PROFILE_FD_STEP;
                let (vp, vm) = (f(p + h), f(p - h));
                let d = |i: usize| (vp[i] - vm[i]) / (2.0 * h);
                Some(ProfilePoint { p, alpha: v[0], beta: v[1], gamma: v[2], dalpha: d(0), dbeta: d(1), dgamma: d(2) })
            }
        }
    }

    /// Like [`ProfileTriple::at`] but with a domain error outside the range.
    pub fn require(&self, p: f64) -> Result<ProfilePoint> {
        self.at(p).ok_or_else(|| Error::Domain(format!("profiles undefined at p = {p}")))
    }

    /// Sampled pressures and values as stored, lowest p first.
    pub fn samples(&self) -> Vec<ProfilePoint> {
        match &self.repr {
            Repr::Sampled(s) => (0..s.beta.len())
                .map(|i| {
                    let p = s.p_first + i as f64 * s.step;
                    let (alpha, dalpha) = s.alpha.eval(p);
                    ProfilePoint {
                        p,
                        alpha,
                        beta: s.beta[i],
                        gamma: s.gamma[i],
                        dalpha,
                        dbeta: s.dbeta[i],
                        dgamma: s.dgamma[i],
                    }
                })
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Sample step of an integrated triple.
    pub fn step(&self) -> Option<f64> {
        match &self.repr {
            Repr::Sampled(s) => Some(s.step),
            _ => None,
        }
    }

    /// Range of p covered by stored samples (or the validity interval otherwise).
    pub fn sampled_range(&self) -> (f64, f64) {
        match &self.repr {
            Repr::Sampled(s) => (s.p_first, s.p_first + (s.beta.len() - 1) as f64 * s.step),
            _ => self.valid_interval,
        }
    }
}

impl Sampled {
    fn at(&self, p: f64, eps: Sign) -> Option<ProfilePoint> {
        let n = self.beta.len();
        let x = (p - self.p_first) / self.step;
        if !(x >= -1e-9 && x <= (n - 1) as f64 + 1e-9) {
            return None;
        }
        let (alpha, dalpha) = self.alpha.eval(p);
        let i = (x.floor().max(0.0) as usize).min(n.saturating_sub(2));
        let exact = (x - x.round()).abs() < 1e-9;
        let (beta, gamma) = if exact || n == 1 {
            let k = (x.round() as usize).min(n - 1);
            (self.beta[k], self.gamma[k])
        } else {
            let p0 = self.p_first + i as f64 * self.step;
            let p1 = p0 + self.step;
            (
                hermite(p0, p1, self.beta[i], self.beta[i + 1], self.dbeta[i], self.dbeta[i + 1], p),
                hermite(p0, p1, self.gamma[i], self.gamma[i + 1], self.dgamma[i], self.dgamma[i + 1], p),
            )
        };
        let (dbeta, dgamma) = consistency_rhs(beta, gamma, alpha, dalpha, eps).ok()?;
        Some(ProfilePoint { p, alpha, beta, gamma, dalpha, dbeta, dgamma })
    }
}

/// Constant initial data and sign for the consistency ODEs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileInit {
    pub alpha0: f64,
    pub beta0: f64,
    pub gamma0: f64,
    pub epsilon: Sign,
}

impl ProfileInit {
    /// The first line of the admissibility conditions at p = 0.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0) {
            return Err(Error::Parameter(format!("alpha0 must be positive, got {}", self.alpha0)));
        }
        if !(self.beta0 >= 0.0) {
            return Err(Error::Parameter(format!("beta0 must be nonnegative, got {}", self.beta0)));
        }
        let s = self.beta0 + self.epsilon.value() * self.gamma0;
        if !(s.abs() >= DEGENERACY_THRESHOLD) || !self.gamma0.is_finite() {
            return Err(Error::Parameter(format!("beta0 + eps*gamma0 = {s} is degenerate")));
        }
        Ok(())
    }
}

/// Integrate the consistency ODEs from p = 0 across `p_range` with α = α₀e^{3p}.
pub fn integrate_profiles(init: ProfileInit, p_range: (f64, f64), step: f64) -> Result<ProfileTriple> {
    init.validate()?;
    integrate_with_alpha(
        AlphaFn::Exponential { alpha0: init.alpha0 },
        init.beta0,
        init.gamma0,
        init.epsilon,
        p_range,
        step,
    )
}

/// Integrate the consistency ODEs for a prescribed α(p).
pub fn integrate_with_alpha(
    alpha: AlphaFn,
    beta0: f64,
    gamma0: f64,
    epsilon: Sign,
    p_range: (f64, f64),
    step: f64,
) -> Result<ProfileTriple> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Parameter(format!("step must be positive, got {step}")));
    }
    if !(p_range.0 <= 0.0 && p_range.1 >= 0.0 && p_range.0 < p_range.1) {
        return Err(Error::Parameter(format!(
            "p_range must contain the initial point 0, got ({}, {})",
            p_range.0, p_range.1
        )));
    }
    let s0 = beta0 + epsilon.value() * gamma0;
    if !(s0.abs() >= DEGENERACY_THRESHOLD) {
        return Err(Error::Singular(s0.abs()));
    }
    let alpha = Arc::new(alpha);
    let up = march(&alpha, [beta0, gamma0], epsilon, p_range.1, step)?;
    let down = march(&alpha, [beta0, gamma0], epsilon, p_range.0, -step)?;

    let mut beta = Vec::with_capacity(up.states.len() + down.states.len());
    let mut gamma = Vec::with_capacity(beta.capacity());
    for y in down.states.iter().skip(1).rev().chain(up.states.iter()) {
        beta.push(y[0]);
        gamma.push(y[1]);
    }
    let p_first = -((down.states.len() - 1) as f64) * step;
    let mut dbeta = Vec::with_capacity(beta.len());
    let mut dgamma = Vec::with_capacity(beta.len());
    for i in 0..beta.len() {
        let p = p_first + i as f64 * step;
        let (a, da) = alpha.eval(p);
        let (db, dg) = consistency_rhs(beta[i], gamma[i], a, da, epsilon)?;
        dbeta.push(db);
        dgamma.push(dg);
    }
    let sampled = Sampled { alpha, p_first, step, beta, gamma, dbeta, dgamma };
    let zero_index = down.states.len() - 1;
    let nonneg_interval = nonneg_interval(&sampled, zero_index, (down.endpoint, up.endpoint));
    Ok(ProfileTriple {
        repr: Repr::Sampled(sampled),
        epsilon,
        valid_interval: (down.endpoint, up.endpoint),
        termination: (down.reason, up.reason),
        nonneg_interval,
        consistent: true,
    })
}

struct MarchResult {
    states: Vec<[f64; 2]>,
    endpoint: f64,
    reason: Termination,
}

fn march(alpha: &AlphaFn, y0: [f64; 2], eps: Sign, p_end: f64, h: f64) -> Result<MarchResult> {
    let rhs = |p: f64, y: &[f64; 2]| -> [f64; 2] {
        let (a, da) = alpha.eval(p);
        match consistency_rhs(y[0], y[1], a, da, eps) {
            Ok((db, dg)) => [db, dg],
            Err(_) => [f64::NAN, f64::NAN],
        }
    };
    let sign0 = (y0[0] + eps.value() * y0[1]).signum();
    let failure = |p: f64, y: &[f64; 2]| -> Option<Termination> {
        if !(y[0].is_finite() && y[1].is_finite()) {
            return Some(Termination::NonFinite);
        }
        let s = y[0] + eps.value() * y[1];
        if s.abs() < DEGENERACY_THRESHOLD || s.signum() != sign0 {
            return Some(Termination::Degenerate);
        }
        let k = rhs(p, y);
        if !(k[0].is_finite() && k[1].is_finite()) {
            return Some(Termination::NonFinite);
        }
        if outside_stability_region(&rhs, p, y, h) {
            return Some(Termination::StabilityLimit);
        }
        None
    };

    let n_max = ((p_end / h).abs() + 1e-9).floor() as usize;
    let mut states = vec![y0];
    let mut y = y0;
    for i in 0..n_max {
        let p = i as f64 * h;
        let next = rk4_step(&rhs, p, &y, h);
        if let Some(reason) = failure(p + h, &next) {
            let theta = bisect_predicate(0.0, 1.0, |t| failure(p + t * h, &rk4_step(&rhs, p, &y, t * h)).is_some(), 48);
            return Ok(MarchResult { states, endpoint: p + theta * h, reason });
        }
        y = next;
        states.push(y);
    }
    let endpoint = if (n_max as f64 * h - p_end).abs() < 1e-9 * h.abs().max(1.0) {
        p_end
    } else {
        // the requested end falls between grid points
        n_max as f64 * h
    };
    Ok(MarchResult { states, endpoint, reason: Termination::RangeEnd })
}

/// True when some eigenvalue λ of the Jacobian has Re(hλ) < 0 but the RK4
/// amplification |R(hλ)| exceeds one.
fn outside_stability_region<F>(rhs: &F, p: f64, y: &[f64; 2], h: f64) -> bool
where
    F: Fn(f64, &[f64; 2]) -> [f64; 2],
{
    let mut jac = [[0.0; 2]; 2];
    for j in 0..2 {
        let d = 1e-7 * (1.0 + y[j].abs());
        let (mut yp, mut ym) = (*y, *y);
        yp[j] += d;
        ym[j] -= d;
        let (fp, fm) = (rhs(p, &yp), rhs(p, &ym));
        for i in 0..2 {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * d);
        }
    }
    let tr = jac[0][0] + jac[1][1];
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    let disc = Complex64::new(tr * tr / 4.0 - det, 0.0).sqrt();
    [tr / 2.0 + disc, tr / 2.0 - disc].iter().any(|&lam| {
        let z = lam * h;
        if !(z.re < 0.0) {
            return false;
        }
        let r = 1.0 + z + z * z / 2.0 + z * z * z / 6.0 + z * z * z * z / 24.0;
        r.norm() > 1.0
    })
}

fn nonneg_interval(s: &Sampled, zero: usize, valid: (f64, f64)) -> (f64, f64) {
    let n = s.beta.len();
    let root_in = |i: usize| -> f64 {
        let p0 = s.p_first + i as f64 * s.step;
        let p1 = p0 + s.step;
        let f = |p: f64| hermite(p0, p1, s.beta[i], s.beta[i + 1], s.dbeta[i], s.dbeta[i + 1], p);
        let (mut a, mut b) = (p0, p1);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if (f(m) >= 0.0) == (f(a) >= 0.0) {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    };
    let mut hi = valid.1;
    for i in zero..n.saturating_sub(1) {
        if s.beta[i + 1] < 0.0 {
            hi = root_in(i);
            break;
        }
    }
    let mut lo = valid.0;
    for i in (1..=zero).rev() {
        if s.beta[i - 1] < 0.0 {
            lo = root_in(i - 1);
            break;
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG1: ProfileInit = ProfileInit { alpha0: 1.0, beta0: 0.01, gamma0: 0.5, epsilon: Sign::Plus };

    #[test]
    fn alpha_closed_form_values() {
        assert_eq!(alpha_closed_form(1.0, 0.0).unwrap(), 1.0);
        assert!((alpha_closed_form(1.0, 2f64.ln() / 3.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(alpha_closed_form(0.0, 1.0).is_err());
        assert!(alpha_closed_form(-1.0, 1.0).is_err());
    }

    #[test]
    fn rhs_fixed_point() {
        let (db, dg) = consistency_rhs(1.0 / 3.0, -1.0, 0.0, 0.0, Sign::Plus).unwrap();
        assert!(db.abs() < 1e-15 && dg.abs() < 1e-15);
    }

    #[test]
    fn rhs_hand_solved_case() {
        let (db, dg) = consistency_rhs(0.0, 1.0, 1.0, 3.0, Sign::Plus).unwrap();
        assert!((db - 3.0).abs() < 1e-14 && (dg + 2.0).abs() < 1e-14);
    }

    #[test]
    fn rhs_singular() {
        assert!(matches!(consistency_rhs(0.5, -0.5, 1.0, 3.0, Sign::Plus), Err(Error::Singular(_))));
        assert!(consistency_rhs(0.5, 0.5, 1.0, 3.0, Sign::Minus).is_err());
    }

    #[test]
    fn rhs_satisfies_both_equations() {
        for &(b, g, a, e) in &[(0.2, 0.7, 1.3, Sign::Plus), (1.1, 0.3, 0.4, Sign::Minus), (0.0, -2.0, 2.0, Sign::Plus)]
        {
            let (db, dg) = consistency_rhs(b, g, a, 3.0 * a, e).unwrap();
            let pt = ProfilePoint { p: 0.0, alpha: a, beta: b, gamma: g, dalpha: 3.0 * a, dbeta: db, dgamma: dg };
            let (r1, r2) = consistency_residuals(&pt, e);
            assert!(r1.abs() < 1e-13 && r2.abs() < 1e-13, "{r1} {r2}");
        }
    }

    #[test]
    fn fixed_point_with_zero_alpha_stays_constant() {
        let t = integrate_with_alpha(AlphaFn::Zero, 1.0 / 3.0, -1.0, Sign::Plus, (-1.0, 1.0), 1e-2).unwrap();
        for s in t.samples() {
            assert!((s.beta - 1.0 / 3.0).abs() < 1e-15 && (s.gamma + 1.0).abs() < 1e-15);
        }
        assert_eq!(t.termination, (Termination::RangeEnd, Termination::RangeEnd));
    }

    #[test]
    fn figure_one_lower_end_is_the_determinant_zero() {
        let t = integrate_profiles(FIG1, (-1.0, 1.0), 1e-3).unwrap();
        assert!((t.valid_interval.0 + 0.07).abs() < 0.02, "{:?}", t.valid_interval);
        assert!(t.nonneg_interval.0 > t.valid_interval.0);
        assert_eq!(t.valid_interval.1, 1.0);
    }

    #[test]
    fn sampled_points_satisfy_consistency() {
        let h = 1e-3;
        let t = integrate_profiles(FIG1, (-0.05, 0.5), h).unwrap();
        for s in t.samples() {
            let (r1, r2) = consistency_residuals(&s, Sign::Plus);
            assert!(r1.abs() <= 10.0 * h.powi(4) && r2.abs() <= 10.0 * h.powi(4));
        }
    }

    #[test]
    fn interpolation_matches_finer_run() {
        let coarse = integrate_profiles(FIG1, (-0.01, 0.3), 2e-3).unwrap();
        let fine = integrate_profiles(FIG1, (-0.01, 0.3), 1e-4).unwrap();
        for &p in &[0.0123, 0.1001, 0.2777] {
            let (a, b) = (coarse.at(p).unwrap(), fine.at(p).unwrap());
            assert!((a.beta - b.beta).abs() < 1e-9 && (a.gamma - b.gamma).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_initial_data() {
        let mut bad = FIG1;
        bad.beta0 = -0.1;
        assert!(integrate_profiles(bad, (-1.0, 1.0), 1e-3).is_err());
        bad = FIG1;
        bad.gamma0 = -0.01;
        assert!(integrate_profiles(bad, (-1.0, 1.0), 1e-3).is_err());
        assert!(integrate_profiles(FIG1, (0.1, 1.0), 1e-3).is_err());
    }

    #[test]
    fn exceptional_family_violates_consistency() {
        let t = ProfileTriple::exceptional(0.5).unwrap();
        assert!(!t.consistent);
        let pt = t.at(1.0).unwrap();
        let (r1, r2) = consistency_residuals(&pt, Sign::Plus);
        assert!(r1.abs().max(r2.abs()) > 0.1);
    }

    #[test]
    fn custom_profiles_use_centered_differences() {
        let t = ProfileTriple::from_functions(|p| [p.exp(), p * p, p.sin()], Sign::Plus, (-1.0, 1.0));
        let pt = t.at(0.3).unwrap();
        assert!((pt.dalpha - 0.3f64.exp()).abs() < 1e-9);
        assert!((pt.dbeta - 0.6).abs() < 1e-9);
        assert!((pt.dgamma - 0.3f64.cos()).abs() < 1e-9);
    }
}
