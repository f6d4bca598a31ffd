//! Fixed-step classical Runge–Kutta and cubic Hermite interpolation.

/// One classical RK4 step of size `h` for `y' = f(t, y)`.
pub fn rk4_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], h: f64) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let k1 = f(t, y);
    let y2 = axpy(y, 0.5 * h, &k1);
    let k2 = f(t + 0.5 * h, &y2);
    let y3 = axpy(y, 0.5 * h, &k2);
    let k3 = f(t + 0.5 * h, &y3);
    let y4 = axpy(y, h, &k3);
    let k4 = f(t + h, &y4);
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn axpy<const N: usize>(y: &[f64; N], a: f64, k: &[f64; N]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += a * k[i];
    }
    out
}

/// Cubic Hermite interpolation on `[x0, x1]` from values and slopes at both ends.
pub fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// Derivative of the cubic Hermite interpolant.
pub fn hermite_slope(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let dh00 = 6.0 * t2 - 6.0 * t;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = -6.0 * t2 + 6.0 * t;
    let dh11 = 3.0 * t2 - 2.0 * t;
    (dh00 * y0 + dh01 * y1) / h + dh10 * d0 + dh11 * d1
}

/// Bisection for the first point in `[a, b]` where `pred` turns true,
/// given `pred(a) == false` and `pred(b) == true`.
pub fn bisect_predicate<P: Fn(f64) -> bool>(mut a: f64, mut b: f64, pred: P, iters: usize) -> f64 {
    for _ in 0..iters {
        let m = 0.5 * (a + b);
        if pred(m) {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

/// Cubic Lagrange interpolation through the four nodes of `x` nearest
/// interval `k`, clamped to the ends of the table.
pub fn lagrange4(x: &[f64], y: &[f64], k: usize, t: f64) -> f64 {
    let start = k.saturating_sub(1).min(x.len().saturating_sub(4));
    let mut acc = 0.0;
    for a in start..start + 4 {
        let mut w = 1.0;
        for b in start..start + 4 {
            if a != b {
                w *= (t - x[b]) / (x[a] - x[b]);
            }
        }
        acc += w * y[a];
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_exponential_is_fourth_order() {
        let f = |_t: f64, y: &[f64; 1]| [y[0]];
        let err = |h: f64| {
            let n = (1.0 / h).round() as usize;
            let mut y = [1.0];
            for i in 0..n {
                y = rk4_step(&f, i as f64 * h, &y, h);
            }
            (y[0] - 1f64.exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let p = |x: f64| 2.0 * x * x * x - x + 0.5;
        let dp = |x: f64| 6.0 * x * x - 1.0;
        for &x in &[0.3, 0.71, 1.0] {
            let v = hermite(0.2, 1.1, p(0.2), p(1.1), dp(0.2), dp(1.1), x);
            assert!((v - p(x)).abs() < 1e-14);
            let s = hermite_slope(0.2, 1.1, p(0.2), p(1.1), dp(0.2), dp(1.1), x);
            assert!((s - dp(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn bisection_finds_threshold() {
        let x = bisect_predicate(0.0, 1.0, |t| t > 0.3, 50);
        assert!((x - 0.3).abs() < 1e-12);
    }
}
