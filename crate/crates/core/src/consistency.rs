//! The first-order system F = G = 0 for the generatrix graph r = f(p, z):
//! closures, Jacobi brackets, completeness coefficients, the Case-B system
//! and residuals of the Cartesian graph form.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::{ProfilePoint, ProfileTriple};
use crate::sign::Sign;

/// Values of ζ² this far below zero are rounded to zero by [`closure`].
pub const ZETA_SQ_TOL: f64 = 1e-10;

/// A point of the jet space: (p, z, f, π = f'_p, ζ = f'_z).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JetPoint {
    pub p: f64,
    pub z: f64,
    pub f: f64,
    pub pi: f64,
    pub zeta: f64,
}

/// A point for the Case-B graph z = g(p, r).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseBJet {
    pub p: f64,
    pub r: f64,
    pub g: f64,
    pub gp: f64,
    pub gr: f64,
    pub tau: Sign,
}

/// Partial derivatives of a function of (p, z, f, π, ζ).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Partials {
    pub p: f64,
    pub z: f64,
    pub f: f64,
    pub pi: f64,
    pub zeta: f64,
}

fn e_of(f: f64, pt: &ProfilePoint, eps: Sign) -> f64 {
    eps.value() * f * f + pt.gamma
}

/// F and G at a jet with the given profile values.
pub fn fg_at(jet: &JetPoint, pt: &ProfilePoint, eps: Sign) -> (f64, f64) {
    let f2 = jet.f * jet.f;
    let q = jet.zeta * jet.zeta + 1.0;
    let e = e_of(jet.f, pt, eps);
    let big_f = (f2 - pt.beta) * jet.pi * jet.pi - pt.alpha * q;
    let big_g = f2 * e * e * q - 4.0 * pt.alpha * (f2 - pt.beta);
    (big_f, big_g)
}

pub fn eval_fg(jet: &JetPoint, profiles: &ProfileTriple) -> Result<(f64, f64)> {
    Ok(fg_at(jet, &profiles.require(jet.p)?, profiles.epsilon))
}

/// Membership of (p, f) in the open admissible set.
pub fn is_admissible(f: f64, pt: &ProfilePoint, eps: Sign) -> bool {
    let d = f * f - pt.beta;
    if !(f > 0.0 && d > 0.0) {
        return false;
    }
    let e = e_of(f, pt, eps);
    e > 0.0 && e < 2.0 * pt.alpha.sqrt() * d.sqrt() / f
}

/// (π, ζ²) solving F = G = 0 at (p, f).
pub fn closure(f: f64, pt: &ProfilePoint, eps: Sign) -> Result<(f64, f64)> {
    let d = f * f - pt.beta;
    let e = e_of(f, pt, eps);
    if !(e > 0.0) {
        return Err(Error::Domain(format!("eps*f^2 + gamma = {e} is not positive at f = {f}")));
    }
    if !(f > 0.0 && d > 0.0) {
        return Err(Error::Inadmissible(format!("f^2 - beta = {d} at f = {f}")));
    }
    let mut zeta_sq = 4.0 * pt.alpha * d / (f * f * e * e) - 1.0;
    if zeta_sq < -ZETA_SQ_TOL {
        return Err(Error::Inadmissible(format!("zeta^2 = {zeta_sq} at f = {f}, p = {}", pt.p)));
    }
    if zeta_sq < 0.0 {
        zeta_sq = 0.0;
    }
    let pi = 2.0 * eps.value() * pt.alpha / (f * e);
    Ok((pi, zeta_sq))
}

/// Partial derivatives of F and G.
pub fn partials(jet: &JetPoint, pt: &ProfilePoint, eps: Sign) -> (Partials, Partials) {
    let (f, pi, zeta) = (jet.f, jet.pi, jet.zeta);
    let f2 = f * f;
    let q = zeta * zeta + 1.0;
    let e = e_of(f, pt, eps);
    let ev = eps.value();
    let fp = Partials {
        p: -pt.dbeta * pi * pi - pt.dalpha * q,
        z: 0.0,
        f: 2.0 * f * pi * pi,
        pi: 2.0 * (f2 - pt.beta) * pi,
        zeta: -2.0 * pt.alpha * zeta,
    };
    let gp = Partials {
        p: 2.0 * pt.dgamma * f2 * e * q - 4.0 * pt.dalpha * (f2 - pt.beta) + 4.0 * pt.alpha * pt.dbeta,
        z: 0.0,
        f: 2.0 * f * e * e * q + 4.0 * ev * f2 * f * e * q - 8.0 * pt.alpha * f,
        pi: 0.0,
        zeta: 2.0 * f2 * e * e * zeta,
    };
    (fp, gp)
}

/// The generic bracket of two functions of (p, z, f, π, ζ).
pub fn bracket_generic(jet: &JetPoint, a: &Partials, b: &Partials) -> f64 {
    (a.p + jet.pi * a.f) * b.pi - (b.p + jet.pi * b.f) * a.pi + (a.z + jet.zeta * a.f) * b.zeta
        - (b.z + jet.zeta * b.f) * a.zeta
}

fn reduced_terms(jet: &JetPoint, pt: &ProfilePoint, eps: Sign) -> [f64; 4] {
    let (a, b) = partials(jet, pt, eps);
    [-b.p * a.pi, -jet.pi * b.f * a.pi, jet.zeta * a.f * b.zeta, -jet.zeta * b.f * a.zeta]
}

/// [F, G] using that G'_π = F'_z = G'_z = 0.
pub fn jacobi_bracket_at(jet: &JetPoint, pt: &ProfilePoint, eps: Sign) -> f64 {
    reduced_terms(jet, pt, eps).iter().sum()
}

pub fn jacobi_bracket(jet: &JetPoint, profiles: &ProfileTriple) -> Result<f64> {
    Ok(jacobi_bracket_at(jet, &profiles.require(jet.p)?, profiles.epsilon))
}

/// Sum of absolute values of the four bracket terms; the scale for relative checks.
pub fn bracket_scale(jet: &JetPoint, pt: &ProfilePoint, eps: Sign) -> f64 {
    reduced_terms(jet, pt, eps).iter().map(|t| t.abs()).sum()
}

/// The bracket written out as a polynomial in f (four times the quarter form).
pub fn jacobi_bracket_expanded(jet: &JetPoint, pt: &ProfilePoint, eps: Sign) -> f64 {
    let (f, pi, zeta) = (jet.f, jet.pi, jet.zeta);
    let (a, b, g) = (pt.alpha, pt.beta, pt.gamma);
    let (da, db, dg) = (pt.dalpha, pt.dbeta, pt.dgamma);
    let ev = eps.value();
    let f2 = f * f;
    let d = f2 - b;
    let e = ev * f2 + g;
    let q = zeta * zeta + 1.0;
    let z2 = zeta * zeta;
    let k = e * e * q + 2.0 * ev * f2 * e * q - 4.0 * a;
    let quarter = -pi * d * (dg * f2 * e * q - 2.0 * da * d + 2.0 * a * db) - pi * pi * f * d * k
        + pi * pi * z2 * f2 * f * e * e
        + z2 * a * f * k;
    4.0 * quarter
}

/// The bracket after closure, multiplied by f³(εf²+γ)³/(16α²): a degree-10 polynomial in f.
pub fn cleared_bracket_expanded(f: f64, pt: &ProfilePoint, eps: Sign) -> f64 {
    let (a, b, g) = (pt.alpha, pt.beta, pt.gamma);
    let (da, db, dg) = (pt.dalpha, pt.dbeta, pt.dgamma);
    let ev = eps.value();
    let f2 = f * f;
    let d = f2 - b;
    let e = ev * f2 + g;
    let m = d * e + 2.0 * ev * f2 * d - f2 * e;
    -2.0 * ev * f2 * d * e * (dg * d - da / (2.0 * a) * d * e + db / 2.0 * e) - 4.0 * a * d * m + 4.0 * a * f2 * d * e
        - f2 * f2 * e * e * e
        + (4.0 * a * d - f2 * e * e) * m
}

/// The same polynomial in factored form: −f²(f²−β)(εf²+γ)(c4 f⁴ + c2 f² + c0).
pub fn cleared_bracket_factored(f: f64, pt: &ProfilePoint, eps: Sign) -> f64 {
    let (c4, c2, c0) = completeness_residual(pt, eps);
    let f2 = f * f;
    -f2 * (f2 - pt.beta) * (eps.value() * f2 + pt.gamma) * (c4 * f2 * f2 + c2 * f2 + c0)
}

/// Coefficients (c4, c2, c0) of the quartic whose vanishing is the completeness condition.
pub fn completeness_residual(pt: &ProfilePoint, eps: Sign) -> (f64, f64, f64) {
    let ev = eps.value();
    let (a, b, g) = (pt.alpha, pt.beta, pt.gamma);
    let (db, dg) = (pt.dbeta, pt.dgamma);
    let r = pt.dalpha / a;
    let c4 = 3.0 - r;
    let c2 = 2.0 * ev * dg - ev * r * g + r * b + db + 4.0 * ev * g;
    let c0 = -2.0 * ev * b * dg + ev * r * b * g + ev * g * db - 4.0 * a + g * g;
    (c4, c2, c0)
}

/// (g'_p, (g'_r)²) for the Case-B graph z = g(p, r), with sign of g'_p equal to τ.
pub fn case_b_closure(r: f64, pt: &ProfilePoint, tau: Sign) -> Result<(f64, f64)> {
    let d = r * r - pt.beta;
    if !(d > 0.0) {
        return Err(Error::Inadmissible(format!("r^2 - beta = {d}")));
    }
    let w = pt.gamma - tau.value() * r * r;
    let num = r * r * w * w;
    let den = 4.0 * pt.alpha * d - num;
    if !(den > 0.0) {
        return Err(Error::Inadmissible(format!("Case-B denominator {den} is not positive")));
    }
    let gr_sq = num / den;
    let gp = tau.value() * (pt.alpha * (1.0 + gr_sq) / d).sqrt();
    Ok((gp, gr_sq))
}

/// The two Case-B equations at a jet.
pub fn case_b_residuals(jet: &CaseBJet, pt: &ProfilePoint) -> (f64, f64) {
    let r2 = jet.r * jet.r;
    let d = r2 - pt.beta;
    let w = pt.gamma - jet.tau.value() * r2;
    let q = 1.0 + jet.gr * jet.gr;
    (d * jet.gp * jet.gp - pt.alpha * q, r2 * w * w * q - 4.0 * pt.alpha * d * jet.gr * jet.gr)
}

/// Audit record for one jet.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub point: JetPoint,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "G")]
    pub g: f64,
    pub bracket: f64,
    pub completeness: [f64; 3],
}

pub fn report(jet: &JetPoint, profiles: &ProfileTriple) -> Result<ConsistencyReport> {
    let pt = profiles.require(jet.p)?;
    let (f, g) = fg_at(jet, &pt, profiles.epsilon);
    let (c4, c2, c0) = completeness_residual(&pt, profiles.epsilon);
    Ok(ConsistencyReport {
        point: *jet,
        f,
        g,
        bracket: jacobi_bracket_at(jet, &pt, profiles.epsilon),
        completeness: [c4, c2, c0],
    })
}

/// Samples of a graph z = f(p; x, y) and the surface velocity at one fixed p.
///
/// Optional fields are analytic partials; missing ones are replaced by
/// second-order centered differences, in which case boundary nodes are NaN.
#[derive(Debug, Clone)]
pub struct GraphSlice {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub f: Array2<f64>,
    pub fp: Array2<f64>,
    pub ux: Array2<f64>,
    pub uy: Array2<f64>,
    pub fx: Option<Array2<f64>>,
    pub fy: Option<Array2<f64>>,
    pub fxx: Option<Array2<f64>>,
    pub fxy: Option<Array2<f64>>,
    pub fyy: Option<Array2<f64>>,
    pub ux_x: Option<Array2<f64>>,
    pub ux_y: Option<Array2<f64>>,
    pub uy_x: Option<Array2<f64>>,
    pub uy_y: Option<Array2<f64>>,
    /// ∂(f'_p uˣ)/∂x.
    pub flux_x: Option<Array2<f64>>,
    /// ∂(f'_p uʸ)/∂y.
    pub flux_y: Option<Array2<f64>>,
}

impl GraphSlice {
    pub fn new(x: Vec<f64>, y: Vec<f64>, f: Array2<f64>, fp: Array2<f64>, ux: Array2<f64>, uy: Array2<f64>) -> Self {
        GraphSlice {
            x,
            y,
            f,
            fp,
            ux,
            uy,
            fx: None,
            fy: None,
            fxx: None,
            fxy: None,
            fyy: None,
            ux_x: None,
            ux_y: None,
            uy_x: None,
            uy_y: None,
            flux_x: None,
            flux_y: None,
        }
    }
}

/// Pointwise residuals of the four graph-form equations.
#[derive(Debug, Clone)]
pub struct Prop51Residuals {
    pub continuity: Array2<f64>,
    pub momentum_x: Array2<f64>,
    pub momentum_y: Array2<f64>,
    pub normal: Array2<f64>,
}

impl Prop51Residuals {
    /// Maximum absolute value over finite entries of each residual.
    pub fn max_abs(&self) -> [f64; 4] {
        let m = |a: &Array2<f64>| a.iter().filter(|v| v.is_finite()).fold(0.0f64, |acc, v| acc.max(v.abs()));
        [m(&self.continuity), m(&self.momentum_x), m(&self.momentum_y), m(&self.normal)]
    }
}

fn dx(a: &Array2<f64>, x: &[f64]) -> Array2<f64> {
    let (n, m) = a.dim();
    Array2::from_shape_fn((n, m), |(i, j)| {
        if i == 0 || i + 1 >= n {
            f64::NAN
        } else {
            (a[[i + 1, j]] - a[[i - 1, j]]) / (x[i + 1] - x[i - 1])
        }
    })
}

fn dy(a: &Array2<f64>, y: &[f64]) -> Array2<f64> {
    let (n, m) = a.dim();
    Array2::from_shape_fn((n, m), |(i, j)| {
        if j == 0 || j + 1 >= m {
            f64::NAN
        } else {
            (a[[i, j + 1]] - a[[i, j - 1]]) / (y[j + 1] - y[j - 1])
        }
    })
}

/// Residuals of the graph-form system on a slice.
pub fn prop51_residuals(s: &GraphSlice) -> Result<Prop51Residuals> {
    if s.fp.iter().any(|v| *v == 0.0 || !v.is_finite()) {
        return Err(Error::Domain("f'_p vanishes on the grid".into()));
    }
    let get = |o: &Option<Array2<f64>>, fallback: &dyn Fn() -> Array2<f64>| o.clone().unwrap_or_else(fallback);
    let fx = get(&s.fx, &|| dx(&s.f, &s.x));
    let fy = get(&s.fy, &|| dy(&s.f, &s.y));
    let fxx = get(&s.fxx, &|| dx(&fx, &s.x));
    let fxy = get(&s.fxy, &|| dy(&fx, &s.y));
    let fyy = get(&s.fyy, &|| dy(&fy, &s.y));
    let ux_x = get(&s.ux_x, &|| dx(&s.ux, &s.x));
    let ux_y = get(&s.ux_y, &|| dy(&s.ux, &s.y));
    let uy_x = get(&s.uy_x, &|| dx(&s.uy, &s.x));
    let uy_y = get(&s.uy_y, &|| dy(&s.uy, &s.y));
    let flux_x = get(&s.flux_x, &|| dx(&(&s.fp * &s.ux), &s.x));
    let flux_y = get(&s.flux_y, &|| dy(&(&s.fp * &s.uy), &s.y));
    let afp = s.fp.mapv(f64::abs);

    let continuity = &flux_x + &flux_y;
    let momentum_x = &s.ux * &ux_x + &s.uy * &ux_y + &fx / &afp;
    let momentum_y = &s.ux * &uy_x + &s.uy * &uy_y + &fy / &afp;
    let lhs = &fxx * &s.ux * &s.ux + &(&fxy * &s.ux * &s.uy * 2.0) + &fyy * &s.uy * &s.uy;
    let rhs = (&fx * &fx + &fy * &fy + 1.0) / &afp;
    let normal = lhs - rhs;
    Ok(Prop51Residuals { continuity, momentum_x, momentum_y, normal })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exceptional_point(a0: f64, p: f64) -> ProfilePoint {
        ProfileTriple::exceptional(a0).unwrap().at(p).unwrap()
    }

    #[test]
    fn exceptional_solution_zeroes_f_and_g() {
        let pt = exceptional_point(0.5, 1.0);
        let jet = JetPoint { p: 1.0, z: 0.0, f: 2.0, pi: 1.0, zeta: 0.0 };
        let (f, g) = fg_at(&jet, &pt, Sign::Plus);
        assert!(f.abs() < 1e-12 && g.abs() < 1e-12);
    }

    #[test]
    fn boundary_point_values() {
        let pt = ProfilePoint { p: 0.0, alpha: 1.3, beta: 0.25, gamma: 0.4, dalpha: 3.9, dbeta: 0.0, dgamma: 0.0 };
        let jet = JetPoint { p: 0.0, z: 0.0, f: 0.5, pi: 0.0, zeta: 0.0 };
        let (f, g) = fg_at(&jet, &pt, Sign::Plus);
        assert!((f + 1.3).abs() < 1e-15);
        let e = 0.25 + 0.4;
        assert!((g - 0.25 * e * e).abs() < 1e-15);
    }

    #[test]
    fn closure_on_exceptional_data() {
        for &p in &[0.3, 1.0, 2.5] {
            let pt = exceptional_point(0.5, p);
            let (pi, zsq) = closure(2.0 * p.sqrt(), &pt, Sign::Plus).unwrap();
            assert!(zsq.abs() < 1e-12);
            assert!((pi - p.powf(-0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn closure_turning_point() {
        // choose γ so that εf²+γ equals 2√α√(f²−β)/f exactly
        let (a, b, f) = (1.2, 0.3, 1.1);
        let e = 2.0 * f64::sqrt(a) * f64::sqrt(f * f - b) / f;
        let pt = ProfilePoint { p: 0.0, alpha: a, beta: b, gamma: e - f * f, dalpha: 3.0 * a, dbeta: 0.0, dgamma: 0.0 };
        let (_, zsq) = closure(f, &pt, Sign::Plus).unwrap();
        assert!(zsq.abs() < 1e-14);
    }

    #[test]
    fn closure_errors() {
        let pt = ProfilePoint { p: 0.0, alpha: 1.0, beta: 0.01, gamma: -5.0, dalpha: 3.0, dbeta: 0.0, dgamma: 0.0 };
        assert!(matches!(closure(1.0, &pt, Sign::Plus), Err(Error::Domain(_))));
        let pt = ProfilePoint { gamma: 0.5, ..pt };
        assert!(matches!(closure(0.05, &pt, Sign::Plus), Err(Error::Inadmissible(_))));
        // far outside: ζ² negative
        assert!(matches!(closure(3.0, &pt, Sign::Plus), Err(Error::Inadmissible(_))));
    }

    #[test]
    fn bracket_vanishes_on_exceptional_curve() {
        for &(a0, p) in &[(0.5, 1.0), (0.25, 0.7), (1.0, 2.0)] {
            let pt = exceptional_point(a0, p);
            let jet = JetPoint { p, z: 0.0, f: 2.0 * p.sqrt(), pi: p.powf(-0.5), zeta: 0.0 };
            let br = jacobi_bracket_at(&jet, &pt, Sign::Plus);
            assert!(br.abs() <= 1e-12 * bracket_scale(&jet, &pt, Sign::Plus).max(1.0), "{br}");
        }
    }

    #[test]
    fn leading_f7_coefficient() {
        let pt = ProfilePoint { p: 0.0, alpha: 1.0, beta: 0.1, gamma: 0.2, dalpha: 3.0, dbeta: 0.5, dgamma: -0.3 };
        for &zeta in &[0.0, 0.7] {
            let f = 1e3;
            let jet = JetPoint { p: 0.0, z: 0.0, f, pi: 1.0, zeta };
            let br = jacobi_bracket_at(&jet, &pt, Sign::Plus) / 4.0;
            let lead = -(2.0 * zeta * zeta + 3.0) * f.powi(7);
            assert!((br / lead - 1.0).abs() < 1e-2, "{}", br / lead);
        }
    }

    #[test]
    fn completeness_exceptional() {
        let pt = exceptional_point(0.5, 1.0);
        let (c4, _, _) = completeness_residual(&pt, Sign::Plus);
        assert_eq!(c4, 3.0);
    }

    #[test]
    fn case_b_values() {
        let (a, b, r) = (1.0, 0.2, 0.9);
        let pt = ProfilePoint { p: 0.0, alpha: a, beta: b, gamma: r * r, dalpha: 3.0, dbeta: 0.0, dgamma: 0.0 };
        let (_, gr_sq) = case_b_closure(r, &pt, Sign::Plus).unwrap();
        assert_eq!(gr_sq, 0.0);
        // 4α(r²−β) = 2 r²(γ − τr²)²
        let w = f64::sqrt(4.0 * a * (r * r - b) / (2.0 * r * r));
        let pt = ProfilePoint { gamma: r * r + w, ..pt };
        let (gp, gr_sq) = case_b_closure(r, &pt, Sign::Plus).unwrap();
        assert!((gr_sq - 1.0).abs() < 1e-13);
        let jet = CaseBJet { p: 0.0, r, g: 0.0, gp, gr: 1.0, tau: Sign::Plus };
        let (e1, e2) = case_b_residuals(&jet, &pt);
        assert!(e1.abs() < 1e-13 && e2.abs() < 1e-13);
        assert!(case_b_closure(0.3, &pt, Sign::Plus).is_err());
    }

    fn half_cylinder(p: f64, b: f64, n: usize, analytic: bool, wobble: f64) -> GraphSlice {
        let x: Vec<f64> = (0..n).map(|i| -0.5 * p + p * i as f64 / (n - 1) as f64).collect();
        let y: Vec<f64> = (0..n).map(|j| -1.0 + 2.0 * j as f64 / (n - 1) as f64).collect();
        let sh = (n, n);
        let s = |i: usize| (p * p - x[i] * x[i]).sqrt();
        let f = Array2::from_shape_fn(sh, |(i, _)| -s(i) + wobble * x[i].sin());
        let fp = Array2::from_shape_fn(sh, |(i, _)| -p / s(i));
        let ux = Array2::from_shape_fn(sh, |(i, _)| s(i) / p.sqrt());
        let uy = Array2::from_elem(sh, b);
        let mut g = GraphSlice::new(x.clone(), y, f, fp, ux, uy);
        if analytic {
            g.fx = Some(Array2::from_shape_fn(sh, |(i, _)| x[i] / s(i)));
            g.fy = Some(Array2::zeros(sh));
            g.fxx = Some(Array2::from_shape_fn(sh, |(i, _)| p * p / s(i).powi(3)));
            g.fxy = Some(Array2::zeros(sh));
            g.fyy = Some(Array2::zeros(sh));
            g.ux_x = Some(Array2::from_shape_fn(sh, |(i, _)| -x[i] / (s(i) * p.sqrt())));
            g.ux_y = Some(Array2::zeros(sh));
            g.uy_x = Some(Array2::zeros(sh));
            g.uy_y = Some(Array2::zeros(sh));
            g.flux_x = Some(Array2::zeros(sh));
            g.flux_y = Some(Array2::zeros(sh));
        }
        g
    }

    #[test]
    fn half_cylinder_satisfies_graph_system() {
        for &b in &[0.0, 1.0] {
            let r = prop51_residuals(&half_cylinder(0.8, b, 21, true, 0.0)).unwrap();
            assert!(r.max_abs().iter().all(|m| *m <= 1e-8), "{:?}", r.max_abs());
        }
    }

    #[test]
    fn perturbed_half_cylinder_fails_normal_equation() {
        let r = prop51_residuals(&half_cylinder(0.8, 0.0, 41, false, 1e-3)).unwrap();
        assert!(r.max_abs()[3] >= 1e-4);
    }

    #[test]
    fn vanishing_fp_is_rejected() {
        let mut g = half_cylinder(0.8, 0.0, 5, true, 0.0);
        g.fp[[2, 2]] = 0.0;
        assert!(prop51_residuals(&g).is_err());
    }
}
