//! Integrals over plane sections of three-dimensional flows.

use ndarray::Array2;
use rayon::prelude::*;

use super::cartesian::{FlowEvaluator, FlowSample};
use crate::contour::{isolines, Polyline};
use crate::error::{Error, Result};

type V3 = [f64; 3];

fn dot(a: &V3, b: &[f64]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: &V3) -> f64 {
    dot(a, a).sqrt()
}

fn cross(a: &V3, b: &V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// An affine plane with unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub point: V3,
    pub normal: V3,
}

impl Plane {
    pub fn new(point: V3, normal: V3) -> Result<Self> {
        let n = norm(&normal);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Parameter("plane normal must be a nonzero finite vector".into()));
        }
        Ok(Plane { point, normal: normal.map(|v| v / n) })
    }

    /// The plane through (0, 0, z0) whose normal is tilted from e_z toward
    /// e_x by `degrees`.
    pub fn tilted(z0: f64, degrees: f64) -> Self {
        let a = degrees.to_radians();
        Plane { point: [0.0, 0.0, z0], normal: [a.sin(), 0.0, a.cos()] }
    }

    /// An orthonormal pair spanning the plane, with e1 × e2 = normal.
    pub fn basis(&self) -> (V3, V3) {
        let n = self.normal;
        let seed = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let d = dot(&seed, &n);
        let mut e1 = [seed[0] - d * n[0], seed[1] - d * n[1], seed[2] - d * n[2]];
        let l = norm(&e1);
        e1 = e1.map(|v| v / l);
        (e1, cross(&n, &e1))
    }

    pub fn at(&self, s: f64, t: f64) -> V3 {
        let (e1, e2) = self.basis();
        [0, 1, 2].map(|k| self.point[k] + s * e1[k] + t * e2[k])
    }
}

/// Newton steps along the in-plane gradient moving a traced vertex onto
/// the exact level set, each step capped at `max_step`. The vertex is
/// restored if the level mismatch does not shrink.
fn snap_to_level<F: FlowEvaluator>(
    flow: &F,
    plane: &Plane,
    basis: (&V3, &V3),
    level: f64,
    max_step: f64,
    q: &mut [f64; 2],
) {
    let start = *q;
    let mismatch = |q: &[f64; 2]| flow.sample(&plane.at(q[0], q[1])).map(|s| (s.p - level).abs());
    let Some(initial) = mismatch(q) else { return };
    for _ in 0..SNAP_ITERATIONS {
        let Some(s) = flow.sample(&plane.at(q[0], q[1])) else { break };
        let g = [dot(basis.0, &s.grad_p), dot(basis.1, &s.grad_p)];
        let g2 = g[0] * g[0] + g[1] * g[1];
        if !(g2 > 0.0) {
            break;
        }
        let step = (s.p - level) / g2;
        let scale = (max_step / (step.abs() * g2.sqrt())).min(1.0);
        q[0] -= scale * step * g[0];
        q[1] -= scale * step * g[1];
    }
    if !matches!(mismatch(q), Some(m) if m <= initial) {
        *q = start;
    }
}

/// Redistribute the vertices of a closed polyline evenly by chord length.
fn resample_closed(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let m = points.len();
    let mut cum = vec![0.0; m + 1];
    for k in 0..m {
        let (a, b) = (points[k], points[(k + 1) % m]);
        cum[k + 1] = cum[k] + (b[0] - a[0]).hypot(b[1] - a[1]);
    }
    let total = cum[m];
    if !(total > 0.0) {
        return points.to_vec();
    }
    let mut seg = 0;
    (0..m)
        .map(|k| {
            let target = total * k as f64 / m as f64;
            while seg + 1 < m && cum[seg + 1] <= target {
                seg += 1;
            }
            let len = cum[seg + 1] - cum[seg];
            let w = if len > 0.0 { (target - cum[seg]) / len } else { 0.0 };
            let (a, b) = (points[seg], points[(seg + 1) % m]);
            [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])]
        })
        .collect()
}

const SNAP_ITERATIONS: usize = 4;

/// The section integral and the traced curves (in plane coordinates).
#[derive(Debug, Clone)]
pub struct SectionResult {
    pub integral: f64,
    pub curves: Vec<Polyline>,
    pub empty: bool,
}

struct PlaneSamples {
    axis: Vec<f64>,
    samples: Vec<Option<FlowSample>>,
}

fn sample_plane<F: FlowEvaluator>(flow: &F, plane: &Plane, extent: f64, n: usize) -> Result<PlaneSamples> {
    if flow.dim() != 3 {
        return Err(Error::Parameter("plane sections need a three-dimensional flow".into()));
    }
    if n < 2 || !(extent > 0.0) {
        return Err(Error::Parameter("plane grid needs n >= 2 and a positive extent".into()));
    }
    let axis: Vec<f64> = (0..n).map(|k| -extent + 2.0 * extent * k as f64 / (n - 1) as f64).collect();
    let samples = (0..n * n).into_par_iter().map(|k| flow.sample(&plane.at(axis[k / n], axis[k % n]))).collect();
    Ok(PlaneSamples { axis, samples })
}

fn check_tangent(plane: &Plane, xi: &V3) -> Result<()> {
    let l = norm(xi);
    if !(l > 0.0) || dot(xi, &plane.normal).abs() > 1e-12 * l {
        return Err(Error::Parameter("xi must be a nonzero vector parallel to the plane".into()));
    }
    Ok(())
}

/// ∮ (ξ·u)(ν·u)/|∇q| ds over the curve {p = level} ∩ plane, where q is p
/// restricted to the plane and ν is the plane normal. The curve is traced
/// on an n × n grid covering [−extent, extent]² in plane coordinates.
/// Vertices are moved onto the level set, closed curves are redistributed
/// evenly by arc length and moved back, and the integrand is evaluated
/// exactly at the vertices.
pub fn plane_section_integral<F: FlowEvaluator>(
    flow: &F,
    plane: &Plane,
    level: f64,
    xi: V3,
    extent: f64,
    n: usize,
) -> Result<SectionResult> {
    check_tangent(plane, &xi)?;
    let grid = sample_plane(flow, plane, extent, n)?;
    let p = Array2::from_shape_fn((n, n), |(i, j)| grid.samples[i * n + j].as_ref().map_or(f64::NAN, |s| s.p));
    let mask = p.mapv(f64::is_finite);
    let mut curves = isolines(&grid.axis, &grid.axis, &p, Some(&mask), level);
    if curves.is_empty() {
        return Ok(SectionResult { integral: 0.0, curves, empty: true });
    }
    let (e1, e2) = plane.basis();
    let h = grid.axis[1] - grid.axis[0];
    for c in &mut curves {
        for q in &mut c.points {
            snap_to_level(flow, plane, (&e1, &e2), level, h, q);
        }
        if c.closed && c.points.len() >= 8 {
            c.points = resample_closed(&c.points);
            for q in &mut c.points {
                snap_to_level(flow, plane, (&e1, &e2), level, h, q);
            }
        }
    }
    let integrand = |q: &[f64; 2]| -> Result<f64> {
        let x = plane.at(q[0], q[1]);
        let s = flow.sample(&x).ok_or_else(|| Error::Data(format!("flow undefined on the section at {x:?}")))?;
        let gq = dot(&e1, &s.grad_p).hypot(dot(&e2, &s.grad_p));
        if !(gq > 0.0) {
            return Err(Error::Domain("level curve is not transversal to the plane".into()));
        }
        Ok(dot(&xi, &s.u) * dot(&plane.normal, &s.u) / gq)
    };
    let mut integral = 0.0;
    for c in &curves {
        let vals = c.points.iter().map(integrand).collect::<Result<Vec<f64>>>()?;
        let m = c.points.len();
        let segs = if c.closed { m } else { m - 1 };
        for k in 0..segs {
            let (a, b) = (k, (k + 1) % m);
            let ds = (c.points[b][0] - c.points[a][0]).hypot(c.points[b][1] - c.points[a][1]);
            integral += 0.5 * ds * (vals[a] + vals[b]);
        }
    }
    Ok(SectionResult { integral, curves, empty: false })
}

/// ∫∫ (ξ·u)(ν·u) dA over the plane by the trapezoid rule on an n × n grid;
/// undefined points contribute zero.
pub fn plane_flux_integral<F: FlowEvaluator>(flow: &F, plane: &Plane, xi: V3, extent: f64, n: usize) -> Result<f64> {
    check_tangent(plane, &xi)?;
    let grid = sample_plane(flow, plane, extent, n)?;
    let h = grid.axis[1] - grid.axis[0];
    let w = |i: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if let Some(s) = &grid.samples[i * n + j] {
                sum += w(i) * w(j) * dot(&xi, &s.u) * dot(&plane.normal, &s.u);
            }
        }
    }
    Ok(sum * h * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{localize, make_evendim_flow, Bump, Variant};

    #[test]
    fn basis_is_orthonormal() {
        let p = Plane::tilted(0.1, 5.0);
        let (a, b) = p.basis();
        assert!(dot(&a, &b).abs() < 1e-15 && (norm(&a) - 1.0).abs() < 1e-15);
        assert!(dot(&a, &p.normal).abs() < 1e-15 && dot(&b, &p.normal).abs() < 1e-15);
        assert!(Plane::new([0.0; 3], [0.0; 3]).is_err());
    }

    #[test]
    fn missing_plane_gives_exact_zero() {
        let f = make_evendim_flow(1, Variant::Odd { a: 0.3 }).unwrap();
        let l = localize(f, Some(Bump { p0: 0.5, delta: 0.2 })).unwrap();
        let plane = Plane::new([0.0, 0.0, 0.0], [1.0, 0.0, 0.0]).unwrap();
        // the plane x = 0 meets the support, but level 1 is never attained
        let r = plane_section_integral(&l, &plane, 1.0, [0.0, 1.0, 0.0], 2.0, 41).unwrap();
        assert!(r.empty && r.integral == 0.0);
        let (e1, _) = plane.basis();
        assert!(plane_section_integral(&l, &plane, -0.01, plane.normal, 2.0, 41).is_err());
        assert!(plane_section_integral(&l, &plane, -0.01, e1, 2.0, 41).is_ok());
    }
}
