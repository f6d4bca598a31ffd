//! Exact-rational power series for β(α), γ(α) near the pressure minimum.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A truncated power series Σ c_k v^k with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalSeries {
    pub coefficients: Vec<BigRational>,
    pub variable: String,
}

/// Build a rational from a numerator/denominator pair.
pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Parse a `"num/den"` or `"num"` string.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::Format(format!("not a rational: {s:?}"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(n, d))
}

/// Format as `"num/den"` (denominator always present).
pub fn format_rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl RationalSeries {
    pub fn new(coefficients: Vec<BigRational>, variable: &str) -> Self {
        RationalSeries { coefficients, variable: variable.to_string() }
    }

    pub fn order(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn coefficient(&self, k: usize) -> BigRational {
        self.coefficients.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Exact evaluation at a rational point.
    pub fn eval_exact(&self, v: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coefficients.iter().rev() {
            acc = acc * v + c;
        }
        acc
    }

    /// Floating-point view for fast evaluation.
    pub fn to_f64(&self) -> F64Series {
        F64Series { c: self.coefficients.iter().map(rational_to_f64).collect() }
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.coefficients.iter().map(format_rational).collect()
    }
}

/// Series with `f64` coefficients, evaluated by Horner's rule.
#[derive(Debug, Clone, PartialEq)]
pub struct F64Series {
    pub c: Vec<f64>,
}

impl F64Series {
    pub fn eval(&self, v: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, &c| acc * v + c)
    }

    /// Value and first derivative.
    pub fn eval_d(&self, v: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in self.c.iter().rev() {
            dp = dp * v + p;
            p = p * v + c;
        }
        (p, dp)
    }

    /// Value, first and second derivative.
    pub fn eval_d2(&self, v: f64) -> (f64, f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        let mut ddp = 0.0;
        for &c in self.c.iter().rev() {
            ddp = ddp * v + 2.0 * dp;
            dp = dp * v + p;
            p = p * v + c;
        }
        (p, dp, ddp)
    }
}

/// JSON form: `{"variable": "alpha", "beta": [...], "gamma": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SeriesJson {
    pub variable: String,
    pub beta: Vec<String>,
    pub gamma: Vec<String>,
}

impl SeriesJson {
    pub fn from_pair(beta: &RationalSeries, gamma: &RationalSeries) -> Self {
        SeriesJson { variable: beta.variable.clone(), beta: beta.to_strings(), gamma: gamma.to_strings() }
    }

    pub fn to_pair(&self) -> Result<(RationalSeries, RationalSeries)> {
        let parse = |v: &[String]| v.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>();
        Ok((
            RationalSeries::new(parse(&self.beta)?, &self.variable),
            RationalSeries::new(parse(&self.gamma)?, &self.variable),
        ))
    }
}

/// Coefficient `k` of the two consistency equations with ε = 1 and α' = 3α,
/// where d/dp acts on Σ c_j α^j as Σ 3j c_j α^j.
///
/// Returns `(r1_k, r2_k)` for
/// `β' + 2γ' + 3β + γ` and `γβ' − 2βγ' + 3βγ − 4α + γ²`.
fn equation_coefficients(b: &[BigRational], g: &[BigRational], k: usize) -> (BigRational, BigRational) {
    let three = q(3, 1);
    let at = |v: &[BigRational], i: usize| v.get(i).cloned().unwrap_or_else(BigRational::zero);
    let d = |v: &[BigRational], i: usize| at(v, i) * q(3 * i as i64, 1);

    let r1 = d(b, k) + d(g, k) * q(2, 1) + at(b, k) * &three + at(g, k);

    let mut r2 = BigRational::zero();
    for i in 0..=k {
        let j = k - i;
        r2 += at(g, i) * d(b, j);
        r2 -= at(b, i) * d(g, j) * q(2, 1);
        r2 += at(b, i) * at(g, j) * &three;
        r2 += at(g, i) * at(g, j);
    }
    if k == 1 {
        r2 -= q(4, 1);
    }
    (r1, r2)
}

/// Exact series β = 1/3 + Σ β_k α^k and γ = −1 + Σ γ_k α^k through `order`.
///
/// Each order is affine in the two new unknowns, so the linear part is
/// recovered by probing with unit values and the 2×2 system is solved exactly.
pub fn series_beta_gamma(order: usize) -> (RationalSeries, RationalSeries) {
    let mut b = vec![q(1, 3)];
    let mut g = vec![q(-1, 1)];
    for k in 1..=order {
        b.push(BigRational::zero());
        g.push(BigRational::zero());
        let (r1, r2) = equation_coefficients(&b, &g, k);
        b[k] = BigRational::one();
        let (a11, a21) = equation_coefficients(&b, &g, k);
        b[k] = BigRational::zero();
        g[k] = BigRational::one();
        let (a12, a22) = equation_coefficients(&b, &g, k);
        g[k] = BigRational::zero();
        let (a11, a21, a12, a22) = (a11 - &r1, a21 - &r2, a12 - &r1, a22 - &r2);
        let det = &a11 * &a22 - &a12 * &a21;
        assert!(!det.is_zero(), "recurrence is singular at order {k}");
        b[k] = (-(&r1) * &a22 + &r2 * &a12) / &det;
        g[k] = (-(&r2) * &a11 + &r1 * &a21) / &det;
    }
    (RationalSeries::new(b, "alpha"), RationalSeries::new(g, "alpha"))
}

/// Coefficients of both consistency equations as formal series, orders `0..=order`.
pub fn formal_residuals(
    beta: &RationalSeries,
    gamma: &RationalSeries,
    order: usize,
) -> (Vec<BigRational>, Vec<BigRational>) {
    let mut out1 = Vec::with_capacity(order + 1);
    let mut out2 = Vec::with_capacity(order + 1);
    for k in 0..=order {
        let (a, b) = equation_coefficients(&beta.coefficients, &gamma.coefficients, k);
        out1.push(a);
        out2.push(b);
    }
    (out1, out2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qs(v: &[(i64, i64)]) -> Vec<BigRational> {
        v.iter().map(|&(n, d)| q(n, d)).collect()
    }

    #[test]
    fn order_six_coefficients() {
        let (b, g) = series_beta_gamma(6);
        assert_eq!(
            b.coefficients,
            qs(&[(1, 3), (-7, 6), (13, 72), (-133, 1728), (575, 13824), (-2077, 82944), (37, 2304)])
        );
        assert_eq!(g.coefficients, qs(&[(-1, 1), (1, 1), (-1, 8), (7, 144), (-115, 4608), (67, 4608), (-7, 768)]));
    }

    #[test]
    fn order_zero_is_the_limit_pair() {
        let (b, g) = series_beta_gamma(0);
        assert_eq!(b.coefficients, vec![q(1, 3)]);
        assert_eq!(g.coefficients, vec![q(-1, 1)]);
    }

    #[test]
    fn formal_residuals_vanish() {
        let (b, g) = series_beta_gamma(14);
        let (r1, r2) = formal_residuals(&b, &g, 14);
        assert!(r1.iter().chain(r2.iter()).all(|r| r.is_zero()));
    }

    #[test]
    fn rational_string_round_trip() {
        let r = q(-2077, 82944);
        assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r);
        assert_eq!(parse_rational("5").unwrap(), q(5, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn horner_derivatives() {
        let s = F64Series { c: vec![1.0, 2.0, 3.0] };
        let (v, d, dd) = s.eval_d2(2.0);
        assert_eq!((v, d, dd), (17.0, 14.0, 6.0));
        assert_eq!(s.eval_d(2.0), (17.0, 14.0));
    }

    #[test]
    fn json_round_trip() {
        let (b, g) = series_beta_gamma(3);
        let j = SeriesJson::from_pair(&b, &g);
        let (b2, g2) = j.to_pair().unwrap();
        assert_eq!((b, g), (b2, g2));
    }
}
