//! Exact Taylor expansion of ψ(r, z) about the minimum point (1, 0).

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::series::{format_rational, q, rational_to_f64, series_beta_gamma, RationalSeries};

/// Dense coefficients `c[j][k]` of Σ c_jk u^j z^k with j + k ≤ degree.
#[derive(Debug, Clone, PartialEq)]
struct Trunc {
    n: usize,
    c: Vec<Vec<BigRational>>,
}

impl Trunc {
    fn zero(n: usize) -> Self {
        Trunc { n, c: (0..=n).map(|j| vec![BigRational::zero(); n + 1 - j]).collect() }
    }

    fn constant(n: usize, v: BigRational) -> Self {
        let mut t = Trunc::zero(n);
        t.c[0][0] = v;
        t
    }

    /// 1 + u, the radius in shifted coordinates.
    fn radius(n: usize) -> Self {
        let mut t = Trunc::constant(n, BigRational::one());
        if n >= 1 {
            t.c[1][0] = BigRational::one();
        }
        t
    }

    fn add(&self, o: &Trunc) -> Trunc {
        let mut t = self.clone();
        for (j, row) in o.c.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                t.c[j][k] += v;
            }
        }
        t
    }

    fn scale(&self, s: &BigRational) -> Trunc {
        let mut t = self.clone();
        t.c.iter_mut().flatten().for_each(|v| *v *= s);
        t
    }

    fn mul(&self, o: &Trunc) -> Trunc {
        let n = self.n;
        let mut t = Trunc::zero(n);
        for (j1, r1) in self.c.iter().enumerate() {
            for (k1, a) in r1.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                for j2 in 0..=(n - j1 - k1) {
                    for k2 in 0..=(n - j1 - k1 - j2) {
                        let b = &o.c[j2][k2];
                        if !b.is_zero() {
                            t.c[j1 + j2][k1 + k2] += a * b;
                        }
                    }
                }
            }
        }
        t
    }

    fn du(&self) -> Trunc {
        let mut t = Trunc::zero(self.n);
        for j in 1..=self.n {
            for k in 0..self.c[j].len() {
                t.c[j - 1][k] = &self.c[j][k] * q(j as i64, 1);
            }
        }
        t
    }

    fn dz(&self) -> Trunc {
        let mut t = Trunc::zero(self.n);
        for j in 0..=self.n {
            for k in 1..self.c[j].len() {
                t.c[j][k - 1] = &self.c[j][k] * q(k as i64, 1);
            }
        }
        t
    }

    /// Σ s_m ψ^m for a series without assumptions on s_0; ψ must vanish at the origin.
    fn compose(series: &RationalSeries, psi: &Trunc) -> Trunc {
        let n = psi.n;
        let mut acc = Trunc::constant(n, series.coefficient(0));
        let mut power = Trunc::constant(n, BigRational::one());
        for m in 1..series.coefficients.len() {
            power = power.mul(psi);
            acc = acc.add(&power.scale(&series.coefficients[m]));
        }
        acc
    }

    fn truncate(&self, n: usize) -> Trunc {
        let mut t = Trunc::zero(n);
        for j in 0..=n.min(self.n) {
            for k in 0..=(n - j).min(self.n - j) {
                t.c[j][k] = self.c[j][k].clone();
            }
        }
        t
    }
}

/// Left-hand sides of both equations for a truncated ψ.
fn system(psi: &Trunc, beta: &RationalSeries, gamma: &RationalSeries) -> (Trunc, Trunc) {
    let n = psi.n;
    let r = Trunc::radius(n);
    let r2 = r.mul(&r);
    let g = Trunc::compose(gamma, psi);
    let b = Trunc::compose(beta, psi);
    let r2g = r2.add(&g);
    let e1 = psi.du().scale(&q(2, 1)).add(&r.mul(&r2g).scale(&q(-3, 1)));
    let pz = psi.dz();
    let e2 = pz
        .mul(&pz)
        .add(&r2.add(&b.scale(&q(-1, 1))).mul(psi).scale(&q(-9, 1)))
        .add(&r2.mul(&r2g).mul(&r2g).scale(&q(9, 4)));
    (e1, e2)
}

/// Polynomial Σ c_jk (r−1)^j z^k with exact coefficients, centred at (1, 0).
#[derive(Debug, Clone)]
pub struct BivariatePoly {
    exact: Trunc,
    float: Vec<Vec<f64>>,
}

impl PartialEq for BivariatePoly {
    fn eq(&self, o: &Self) -> bool {
        self.exact == o.exact
    }
}

impl BivariatePoly {
    fn from_trunc(exact: Trunc) -> Self {
        let float = exact.c.iter().map(|row| row.iter().map(rational_to_f64).collect()).collect();
        BivariatePoly { exact, float }
    }

    pub fn degree(&self) -> usize {
        self.exact.n
    }

    pub fn center(&self) -> (f64, f64) {
        (1.0, 0.0)
    }

    /// Coefficient of (r−1)^j z^k; zero beyond the degree.
    pub fn coefficient(&self, j: usize, k: usize) -> BigRational {
        if j + k > self.exact.n {
            return BigRational::zero();
        }
        self.exact.c[j][k].clone()
    }

    /// Nonzero terms as (j, k, "num/den"), ordered by total degree then by j descending.
    pub fn terms(&self) -> Vec<(usize, usize, String)> {
        let mut out = Vec::new();
        for d in 0..=self.exact.n {
            for j in (0..=d).rev() {
                let c = &self.exact.c[j][d - j];
                if !c.is_zero() {
                    out.push((j, d - j, format_rational(c)));
                }
            }
        }
        out
    }

    /// Truncation to a lower total degree.
    pub fn truncate(&self, degree: usize) -> BivariatePoly {
        BivariatePoly::from_trunc(self.exact.truncate(degree.min(self.exact.n)))
    }

    pub fn eval(&self, r: f64, z: f64) -> f64 {
        self.eval_all(r, z).0
    }

    /// (ψ, ψ_r, ψ_z).
    pub fn gradient(&self, r: f64, z: f64) -> (f64, f64, f64) {
        let (v, gr, gz, _, _, _) = self.eval_all(r, z);
        (v, gr, gz)
    }

    /// (ψ_rr, ψ_rz, ψ_zz).
    pub fn hessian(&self, r: f64, z: f64) -> (f64, f64, f64) {
        let (_, _, _, a, b, c) = self.eval_all(r, z);
        (a, b, c)
    }

    /// Value, gradient and Hessian entries.
    pub fn eval_all(&self, r: f64, z: f64) -> (f64, f64, f64, f64, f64, f64) {
        let u = r - 1.0;
        let n = self.exact.n;
        let pw = |x: f64| -> Vec<f64> {
            let mut v = vec![1.0; n + 1];
            for i in 1..=n {
                v[i] = v[i - 1] * x;
            }
            v
        };
        let (up, zp) = (pw(u), pw(z));
        let d1 = |p: &[f64], i: usize| if i >= 1 { i as f64 * p[i - 1] } else { 0.0 };
        let d2 = |p: &[f64], i: usize| if i >= 2 { (i * (i - 1)) as f64 * p[i - 2] } else { 0.0 };
        let mut o = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for (j, row) in self.float.iter().enumerate() {
            for (k, &c) in row.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                o.0 += c * up[j] * zp[k];
                o.1 += c * d1(&up, j) * zp[k];
                o.2 += c * up[j] * d1(&zp, k);
                o.3 += c * d2(&up, j) * zp[k];
                o.4 += c * d1(&up, j) * d1(&zp, k);
                o.5 += c * up[j] * d2(&zp, k);
            }
        }
        o
    }

    /// Both equations evaluated on the polynomial with β, γ composed as
    /// series in ψ. The first is exact through degree − 1, the second through degree.
    pub fn formal_residuals(&self) -> (BivariatePoly, BivariatePoly) {
        let n = self.exact.n;
        let (b, g) = series_beta_gamma(n / 2 + 1);
        let (e1, e2) = system(&self.exact, &b, &g);
        (BivariatePoly::from_trunc(e1.truncate(n.saturating_sub(1))), BivariatePoly::from_trunc(e2))
    }

    pub fn is_zero(&self) -> bool {
        self.exact.c.iter().flatten().all(|c| c.is_zero())
    }

    /// Largest |coefficient| as a float.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.exact.c.iter().flatten().map(|c| rational_to_f64(&c.abs())).fold(0.0, f64::max)
    }
}

/// Taylor polynomial of ψ through total degree `order`.
///
/// The quadratic part is (3/2)((r−1)² + z²). For each higher degree d the
/// degree-d part of the second equation is 6(k−1)·c_jk plus terms fixed by
/// lower degrees, so every coefficient follows by one division; the k = 1
/// coefficients are zero by evenness.
pub fn psi_taylor(order: usize) -> Result<BivariatePoly> {
    if order < 2 {
        return Err(Error::Parameter(format!("Taylor order must be at least 2, got {order}")));
    }
    let (beta, gamma) = series_beta_gamma(order / 2 + 1);
    let mut psi = Trunc::zero(order);
    psi.c[2][0] = q(3, 2);
    psi.c[0][2] = q(3, 2);
    for d in 3..=order {
        let (_, e2) = system(&psi.truncate(d), &beta, &gamma);
        for j in 0..=d {
            let k = d - j;
            let r = &e2.c[j][k];
            if k == 1 {
                debug_assert!(r.is_zero(), "odd z-term forced at ({j}, {k})");
                continue;
            }
            psi.c[j][k] = -r / q(6 * (k as i64 - 1), 1);
        }
    }
    Ok(BivariatePoly::from_trunc(psi))
}
