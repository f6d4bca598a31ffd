//! Cartesian flows: the explicit rotation examples, gridded sampling,
//! Euler residuals on n-dimensional grids, trajectories and localization.

use ndarray::{ArrayD, IxDyn};
use rayon::prelude::*;

use super::Summary;
use crate::error::{Error, Result};
use crate::ode::hermite;

/// Velocity, pressure and pressure gradient at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSample {
    pub u: Vec<f64>,
    pub p: f64,
    pub grad_p: Vec<f64>,
}

/// A pointwise flow evaluator in a fixed dimension.
pub trait FlowEvaluator: Sync {
    fn dim(&self) -> usize;

    /// `None` where the flow is undefined.
    fn sample(&self, x: &[f64]) -> Option<FlowSample>;

    /// True when every pressure value in `[lo, hi]` is a regular value.
    fn regular_band(&self, lo: f64, hi: f64) -> bool;
}

impl<T: FlowEvaluator + ?Sized> FlowEvaluator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn sample(&self, x: &[f64]) -> Option<FlowSample> {
        (**self).sample(x)
    }
    fn regular_band(&self, lo: f64, hi: f64) -> bool {
        (**self).regular_band(lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    /// Rotation in every coordinate pair, p = |x|²/2.
    Even,
    /// One extra coordinate carrying the constant velocity `a`.
    Odd { a: f64 },
}

/// u_{2j−1} = −x_{2j}, u_{2j} = x_{2j−1} in 2·n_half dimensions, optionally
/// extended by a constant axial component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvenDimFlow {
    pub n_half: usize,
    pub variant: Variant,
}

pub fn make_evendim_flow(n_half: usize, variant: Variant) -> Result<EvenDimFlow> {
    if n_half == 0 {
        return Err(Error::Parameter("n_half must be at least 1".into()));
    }
    Ok(EvenDimFlow { n_half, variant })
}

impl EvenDimFlow {
    pub fn velocity(&self, x: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.dim()];
        for j in 0..self.n_half {
            u[2 * j] = -x[2 * j + 1];
            u[2 * j + 1] = x[2 * j];
        }
        if let Variant::Odd { a } = self.variant {
            u[2 * self.n_half] = a;
        }
        u
    }

    /// Sum of squares over the rotating coordinates, halved.
    pub fn pressure(&self, x: &[f64]) -> f64 {
        0.5 * x[..2 * self.n_half].iter().map(|v| v * v).sum::<f64>()
    }
}

impl FlowEvaluator for EvenDimFlow {
    fn dim(&self) -> usize {
        match self.variant {
            Variant::Even => 2 * self.n_half,
            Variant::Odd { .. } => 2 * self.n_half + 1,
        }
    }

    fn sample(&self, x: &[f64]) -> Option<FlowSample> {
        if x.len() != self.dim() {
            return None;
        }
        let mut grad_p = x.to_vec();
        if let Variant::Odd { .. } = self.variant {
            grad_p[2 * self.n_half] = 0.0;
        }
        Some(FlowSample { u: self.velocity(x), p: self.pressure(x), grad_p })
    }

    /// Only p = 0 (the origin, or the axis for the odd variant) is critical.
    fn regular_band(&self, lo: f64, _hi: f64) -> bool {
        lo > 0.0
    }
}

/// Smooth bump exp(−1/(1−x²)), x = (s − p0)/δ, supported on |s − p0| < δ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub p0: f64,
    pub delta: f64,
}

impl Bump {
    pub fn phi(&self, s: f64) -> f64 {
        let x = (s - self.p0) / self.delta;
        if x.abs() >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - x * x)).exp()
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.p0 - self.delta, self.p0 + self.delta)
    }
}

const PRIMITIVE_INTERVALS: usize = 2048;

/// The flow (φ(p) u, P(p)) with P(s) = −∫_s^{p0+δ} φ², or the unchanged
/// flow when no bump is given.
#[derive(Debug, Clone)]
pub struct LocalizedFlow<F> {
    pub inner: F,
    pub bump: Option<Bump>,
    nodes: Vec<f64>,
    primitive: Vec<f64>,
}

/// Localize `flow` with `bump`; `None` leaves the flow unchanged.
/// Points where the inner flow is undefined are treated as lying above the
/// band: zero velocity, zero pressure.
pub fn localize<F: FlowEvaluator>(flow: F, bump: Option<Bump>) -> Result<LocalizedFlow<F>> {
    let Some(b) = bump else {
        return Ok(LocalizedFlow { inner: flow, bump, nodes: Vec::new(), primitive: Vec::new() });
    };
    if !(b.delta > 0.0 && b.delta.is_finite() && b.p0.is_finite()) {
        return Err(Error::Parameter("bump width must be positive".into()));
    }
    let (lo, hi) = b.support();
    if !flow.regular_band(lo, hi) {
        return Err(Error::Parameter(format!("pressure band [{lo}, {hi}] contains a critical value")));
    }
    let h = (hi - lo) / PRIMITIVE_INTERVALS as f64;
    let nodes: Vec<f64> = (0..=PRIMITIVE_INTERVALS).map(|k| lo + k as f64 * h).collect();
    // three-point Gauss–Legendre per interval
    let g = (0.6f64).sqrt() / 2.0;
    let mut primitive = vec![0.0; nodes.len()];
    for k in 0..PRIMITIVE_INTERVALS {
        let m = nodes[k] + 0.5 * h;
        let sq = |s: f64| b.phi(s).powi(2);
        let q = h * (5.0 * sq(m - g * h) + 8.0 * sq(m) + 5.0 * sq(m + g * h)) / 18.0;
        primitive[k + 1] = primitive[k] + q;
    }
    Ok(LocalizedFlow { inner: flow, bump, nodes, primitive })
}

impl<F: FlowEvaluator> LocalizedFlow<F> {
    /// ∫ φ² over the whole band; the pressure inside the band's inner side is minus this.
    pub fn pressure_drop(&self) -> f64 {
        self.primitive.last().copied().unwrap_or(0.0)
    }

    /// The localized pressure as a function of the original pressure.
    pub fn pressure_map(&self, s: f64) -> f64 {
        let Some(b) = self.bump else { return s };
        let (lo, hi) = b.support();
        let total = self.pressure_drop();
        if s >= hi {
            return 0.0;
        }
        if s <= lo {
            return -total;
        }
        let h = self.nodes[1] - self.nodes[0];
        let k = (((s - lo) / h) as usize).min(PRIMITIVE_INTERVALS - 1);
        let (a, c) = (self.nodes[k], self.nodes[k + 1]);
        let v = hermite(a, c, self.primitive[k], self.primitive[k + 1], b.phi(a).powi(2), b.phi(c).powi(2), s);
        v - total
    }
}

impl<F: FlowEvaluator> FlowEvaluator for LocalizedFlow<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn sample(&self, x: &[f64]) -> Option<FlowSample> {
        let Some(b) = self.bump else { return self.inner.sample(x) };
        let Some(s) = self.inner.sample(x) else {
            let n = self.dim();
            return Some(FlowSample { u: vec![0.0; n], p: 0.0, grad_p: vec![0.0; n] });
        };
        let phi = b.phi(s.p);
        Some(FlowSample {
            u: s.u.iter().map(|v| phi * v).collect(),
            p: self.pressure_map(s.p),
            grad_p: s.grad_p.iter().map(|g| phi * phi * g).collect(),
        })
    }

    fn regular_band(&self, lo: f64, hi: f64) -> bool {
        match self.bump {
            None => self.inner.regular_band(lo, hi),
            Some(_) => lo > -self.pressure_drop() && hi < 0.0,
        }
    }
}

/// A flow sampled on a tensor-product grid; `mask` is false where undefined.
#[derive(Debug, Clone)]
pub struct CartesianField {
    pub axes: Vec<Vec<f64>>,
    pub u: Vec<ArrayD<f64>>,
    pub p: ArrayD<f64>,
    pub mask: ArrayD<bool>,
}

impl CartesianField {
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    pub fn point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().enumerate().map(|(k, &i)| self.axes[k][i]).collect()
    }

    /// Largest |u| over masked-in nodes.
    pub fn max_speed(&self) -> f64 {
        let mut m = 0.0f64;
        for (idx, &ok) in self.mask.indexed_iter() {
            if ok {
                m = m.max(self.u.iter().map(|c| c[&idx].powi(2)).sum::<f64>().sqrt());
            }
        }
        m
    }
}

pub fn sample_cartesian<F: FlowEvaluator>(flow: &F, axes: &[Vec<f64>]) -> Result<CartesianField> {
    let n = flow.dim();
    if axes.len() != n {
        return Err(Error::Parameter(format!("flow is {n}-dimensional but {} axes were given", axes.len())));
    }
    if axes.iter().any(|a| a.is_empty()) {
        return Err(Error::Parameter("empty grid axis".into()));
    }
    let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
    let total: usize = shape.iter().product();
    let unravel = |mut k: usize| {
        let mut idx = vec![0; n];
        for d in (0..n).rev() {
            idx[d] = k % shape[d];
            k /= shape[d];
        }
        idx
    };
    let samples: Vec<Option<FlowSample>> = (0..total)
        .into_par_iter()
        .map(|k| {
            let idx = unravel(k);
            let x: Vec<f64> = idx.iter().enumerate().map(|(d, &i)| axes[d][i]).collect();
            flow.sample(&x)
        })
        .collect();
    let mut u = vec![ArrayD::from_elem(IxDyn(&shape), f64::NAN); n];
    let mut p = ArrayD::from_elem(IxDyn(&shape), f64::NAN);
    let mut mask = ArrayD::from_elem(IxDyn(&shape), false);
    for (k, s) in samples.into_iter().enumerate() {
        if let Some(s) = s {
            let idx = IxDyn(&unravel(k));
            for d in 0..n {
                u[d][&idx] = s.u[d];
            }
            p[&idx] = s.p;
            mask[&idx] = true;
        }
    }
    Ok(CartesianField { axes: axes.to_vec(), u, p, mask })
}

/// Residual grids of div u, u·∇u + ∇p (one per component) and u·∇p.
#[derive(Debug, Clone)]
pub struct CartesianResiduals {
    pub divergence: ArrayD<f64>,
    pub momentum: Vec<ArrayD<f64>>,
    pub orthogonality: ArrayD<f64>,
}

impl CartesianResiduals {
    pub fn summaries(&self) -> Vec<(String, Summary)> {
        let mut v = vec![("divergence".to_string(), Summary::of(self.divergence.iter()))];
        for (k, m) in self.momentum.iter().enumerate() {
            v.push((format!("momentum_{}", k + 1), Summary::of(m.iter())));
        }
        v.push(("orthogonality".to_string(), Summary::of(self.orthogonality.iter())));
        v
    }

    pub fn maxima(&self) -> Vec<f64> {
        self.summaries().into_iter().map(|(_, s)| s.max).collect()
    }
}

pub fn cartesian_euler_residuals(field: &CartesianField) -> CartesianResiduals {
    let n = field.dim();
    let shape = field.shape();
    let nan = || ArrayD::from_elem(IxDyn(&shape), f64::NAN);
    let mut out = CartesianResiduals { divergence: nan(), momentum: vec![nan(); n], orthogonality: nan() };
    for (idx, &ok) in field.mask.indexed_iter() {
        if !ok {
            continue;
        }
        let base: Vec<usize> = (0..n).map(|d| idx[d]).collect();
        if base.iter().zip(&shape).any(|(&i, &s)| i == 0 || i + 1 >= s) {
            continue;
        }
        let nb = |d: usize, off: isize| {
            let mut k = base.clone();
            k[d] = (k[d] as isize + off) as usize;
            IxDyn(&k)
        };
        if !(0..n).all(|d| field.mask[&nb(d, -1)] && field.mask[&nb(d, 1)]) {
            continue;
        }
        let deriv = |a: &ArrayD<f64>, d: usize| {
            let h = field.axes[d][base[d] + 1] - field.axes[d][base[d] - 1];
            (a[&nb(d, 1)] - a[&nb(d, -1)]) / h
        };
        let u: Vec<f64> = (0..n).map(|d| field.u[d][&idx]).collect();
        let gp: Vec<f64> = (0..n).map(|d| deriv(&field.p, d)).collect();
        out.divergence[&idx] = (0..n).map(|d| deriv(&field.u[d], d)).sum();
        for i in 0..n {
            out.momentum[i][&idx] = (0..n).map(|k| u[k] * deriv(&field.u[i], k)).sum::<f64>() + gp[i];
        }
        out.orthogonality[&idx] = (0..n).map(|k| u[k] * gp[k]).sum();
    }
    out
}

/// Largest | |u|² − 2p | over masked-in nodes.
pub fn speed_pressure_defect(field: &CartesianField) -> f64 {
    let mut m = 0.0f64;
    for (idx, &ok) in field.mask.indexed_iter() {
        if ok {
            let s: f64 = field.u.iter().map(|c| c[&idx].powi(2)).sum();
            m = m.max((s - 2.0 * field.p[&idx]).abs());
        }
    }
    m
}

/// RK4 integration of dx/dt = u(x) for `steps` steps up to `t_end`.
/// Returns every state including the initial one.
pub fn trajectory<F: FlowEvaluator>(flow: &F, x0: &[f64], t_end: f64, steps: usize) -> Result<Vec<Vec<f64>>> {
    if x0.len() != flow.dim() || steps == 0 {
        return Err(Error::Parameter("trajectory needs a start point of the flow's dimension and steps > 0".into()));
    }
    let h = t_end / steps as f64;
    let vel = |x: &[f64]| flow.sample(x).map(|s| s.u).ok_or_else(|| Error::Data(format!("flow undefined at {x:?}")));
    let axpy = |x: &[f64], k: &[f64], c: f64| x.iter().zip(k).map(|(a, b)| a + c * b).collect::<Vec<f64>>();
    let mut out = vec![x0.to_vec()];
    let mut x = x0.to_vec();
    for _ in 0..steps {
        let k1 = vel(&x)?;
        let k2 = vel(&axpy(&x, &k1, 0.5 * h))?;
        let k3 = vel(&axpy(&x, &k2, 0.5 * h))?;
        let k4 = vel(&axpy(&x, &k3, h))?;
        x = (0..x.len()).map(|d| x[d] + h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d])).collect();
        out.push(x.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minpoint::symmetric_nodes;
    use std::f64::consts::PI;

    #[test]
    fn rotation_is_orthogonal_and_bernoulli() {
        let f = make_evendim_flow(2, Variant::Even).unwrap();
        let x = [0.3, -1.2, 0.7, 2.0];
        let s = f.sample(&x).unwrap();
        let dot: f64 = s.u.iter().zip(&s.grad_p).map(|(a, b)| a * b).sum();
        assert_eq!(dot, 0.0);
        let speed2: f64 = s.u.iter().map(|v| v * v).sum();
        assert!((speed2 - 2.0 * s.p).abs() < 1e-14);
        assert!(make_evendim_flow(0, Variant::Even).is_err());
    }

    #[test]
    fn odd_variant_circles_and_helices() {
        for a in [0.0, 0.4] {
            let f = make_evendim_flow(1, Variant::Odd { a }).unwrap();
            let path = trajectory(&f, &[1.0, 0.0, 0.0], 2.0 * PI, 2000).unwrap();
            let end = path.last().unwrap();
            assert!((end[0] - 1.0).abs() < 1e-10 && end[1].abs() < 1e-10);
            assert!((end[2] - 2.0 * PI * a).abs() < 1e-12);
        }
    }

    #[test]
    fn polynomial_flows_have_exact_residuals() {
        let ax = symmetric_nodes(1.0, 0.1);
        let f = make_evendim_flow(1, Variant::Odd { a: 0.7 }).unwrap();
        let field = sample_cartesian(&f, &[ax.clone(), ax.clone(), ax]).unwrap();
        let m = cartesian_euler_residuals(&field).maxima();
        assert!(m.iter().all(|&v| v <= 1e-10), "{m:?}");
    }

    #[test]
    fn identity_cutoff_is_transparent() {
        let f = make_evendim_flow(1, Variant::Even).unwrap();
        let l = localize(f, None).unwrap();
        assert_eq!(l.sample(&[0.4, 0.9]), f.sample(&[0.4, 0.9]));
    }

    #[test]
    fn localized_rotation_support_and_pressure() {
        let f = make_evendim_flow(1, Variant::Even).unwrap();
        let l = localize(f, Some(Bump { p0: 0.5, delta: 0.2 })).unwrap();
        // shell: 0.3 < r²/2 < 0.7
        let inside = l.sample(&[0.2, 0.1]).unwrap();
        let outside = l.sample(&[1.5, 0.0]).unwrap();
        assert!(inside.u.iter().all(|&v| v == 0.0) && outside.u.iter().all(|&v| v == 0.0));
        assert_eq!(outside.p, 0.0);
        assert_eq!(inside.p, -l.pressure_drop());
        assert_eq!(l.sample(&[0.0, 0.5]).unwrap().p, -l.pressure_drop());
        assert!(l.sample(&[1.0, 0.0]).unwrap().u[1] > 0.0);
        assert!(localize(f, Some(Bump { p0: 0.1, delta: 0.2 })).is_err());
    }

    #[test]
    fn pressure_primitive_matches_derivative() {
        let f = make_evendim_flow(1, Variant::Even).unwrap();
        let b = Bump { p0: 0.5, delta: 0.2 };
        let l = localize(f, Some(b)).unwrap();
        for s in [0.35, 0.5, 0.61] {
            let h = 1e-5;
            let d = (l.pressure_map(s + h) - l.pressure_map(s - h)) / (2.0 * h);
            assert!((d - b.phi(s).powi(2)).abs() < 1e-8);
        }
    }
}
