//! Marching-squares level sets on rectilinear grids.

use std::collections::HashMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// A piecewise-linear curve. Closed polylines repeat no vertex; the last
/// vertex connects back to the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

impl Polyline {
    pub fn length(&self) -> f64 {
        let mut l: f64 = self.points.windows(2).map(|w| dist(w[0], w[1])).sum();
        if self.closed && self.points.len() > 1 {
            l += dist(self.points[self.points.len() - 1], self.points[0]);
        }
        l
    }

    /// Signed shoelace area; zero for open curves.
    pub fn signed_area(&self) -> f64 {
        if !self.closed {
            return 0.0;
        }
        let n = self.points.len();
        (0..n)
            .map(|i| {
                let (a, b) = (self.points[i], self.points[(i + 1) % n]);
                a[0] * b[1] - b[0] * a[1]
            })
            .sum::<f64>()
            * 0.5
    }

    pub fn centroid(&self) -> [f64; 2] {
        let n = self.points.len().max(1) as f64;
        let s = self.points.iter().fold([0.0, 0.0], |acc, p| [acc[0] + p[0], acc[1] + p[1]]);
        [s[0] / n, s[1] / n]
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Grid edge: `(0, i, j)` joins (i, j)–(i+1, j); `(1, i, j)` joins (i, j)–(i, j+1).
type Edge = (u8, usize, usize);

/// Level set `v = level` of values `v[[i, j]]` sampled at `(x[i], y[j])`.
///
/// Cells with a masked-out or non-finite corner are skipped, so level sets
/// end at the boundary of the valid region. Ambiguous cells are resolved by
/// the mean of the four corners.
pub fn isolines(x: &[f64], y: &[f64], v: &Array2<f64>, mask: Option<&Array2<bool>>, level: f64) -> Vec<Polyline> {
    let (nx, ny) = v.dim();
    assert_eq!((nx, ny), (x.len(), y.len()), "grid shape mismatch");
    let valid = |i: usize, j: usize| v[[i, j]].is_finite() && mask.is_none_or(|m| m[[i, j]]);

    let mut point: HashMap<Edge, [f64; 2]> = HashMap::new();
    let mut adj: HashMap<Edge, Vec<Edge>> = HashMap::new();
    let mut at = |e: Edge| -> [f64; 2] {
        let (a, b) = match e.0 {
            0 => ((e.1, e.2), (e.1 + 1, e.2)),
            _ => ((e.1, e.2), (e.1, e.2 + 1)),
        };
        let (va, vb) = (v[[a.0, a.1]], v[[b.0, b.1]]);
        let t = if vb != va { ((level - va) / (vb - va)).clamp(0.0, 1.0) } else { 0.5 };
        let p = [x[a.0] + t * (x[b.0] - x[a.0]), y[a.1] + t * (y[b.1] - y[a.1])];
        *point.entry(e).or_insert(p)
    };

    for i in 0..nx.saturating_sub(1) {
        for j in 0..ny.saturating_sub(1) {
            if !(valid(i, j) && valid(i + 1, j) && valid(i + 1, j + 1) && valid(i, j + 1)) {
                continue;
            }
            let c = [v[[i, j]], v[[i + 1, j]], v[[i + 1, j + 1]], v[[i, j + 1]]];
            let b: Vec<bool> = c.iter().map(|&w| w >= level).collect();
            let e = [(0, i, j), (1, i + 1, j), (0, i, j + 1), (1, i, j)];
            let crossed: Vec<usize> = (0..4).filter(|&k| b[k] != b[(k + 1) % 4]).collect();
            let segs: Vec<(usize, usize)> = match crossed.len() {
                2 => vec![(crossed[0], crossed[1])],
                4 => {
                    let centre_above = c.iter().sum::<f64>() / 4.0 >= level;
                    // Corners 0 and 2 share a state here exactly when the case is 0101.
                    if b[0] == centre_above {
                        vec![(0, 1), (2, 3)]
                    } else {
                        vec![(3, 0), (1, 2)]
                    }
                }
                _ => Vec::new(),
            };
            for (a, bb) in segs {
                let (ea, eb) = (e[a], e[bb]);
                at(ea);
                at(eb);
                adj.entry(ea).or_default().push(eb);
                adj.entry(eb).or_default().push(ea);
            }
        }
    }
    stitch(&point, &adj)
}

fn stitch(point: &HashMap<Edge, [f64; 2]>, adj: &HashMap<Edge, Vec<Edge>>) -> Vec<Polyline> {
    let mut keys: Vec<Edge> = adj.keys().copied().collect();
    keys.sort_unstable();
    let mut used: HashMap<Edge, bool> = HashMap::new();
    let mut out = Vec::new();
    let walk = |start: Edge, used: &mut HashMap<Edge, bool>| -> (Vec<Edge>, bool) {
        let mut path = vec![start];
        used.insert(start, true);
        let mut prev: Option<Edge> = None;
        let mut cur = start;
        loop {
            let next = adj[&cur].iter().copied().find(|n| Some(*n) != prev && !used.get(n).copied().unwrap_or(false));
            match next {
                Some(n) => {
                    used.insert(n, true);
                    path.push(n);
                    prev = Some(cur);
                    cur = n;
                }
                None => {
                    let closed = path.len() > 2 && adj[&cur].contains(&start);
                    return (path, closed);
                }
            }
        }
    };
    for &k in &keys {
        if adj[&k].len() == 1 && !used.get(&k).copied().unwrap_or(false) {
            let (path, _) = walk(k, &mut used);
            out.push(Polyline { points: path.iter().map(|e| point[e]).collect(), closed: false });
        }
    }
    for &k in &keys {
        if !used.get(&k).copied().unwrap_or(false) {
            let (path, closed) = walk(k, &mut used);
            out.push(Polyline { points: path.iter().map(|e| point[e]).collect(), closed });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
    }

    fn sample(x: &[f64], y: &[f64], f: impl Fn(f64, f64) -> f64) -> Array2<f64> {
        Array2::from_shape_fn((x.len(), y.len()), |(i, j)| f(x[i], y[j]))
    }

    #[test]
    fn circle_area_and_length() {
        let x = grid(201, -1.0, 1.0);
        let v = sample(&x, &x, |a, b| a * a + b * b);
        let ls = isolines(&x, &x, &v, None, 0.25);
        assert_eq!(ls.len(), 1);
        assert!(ls[0].closed);
        let area = ls[0].signed_area().abs();
        assert!((area - std::f64::consts::PI * 0.25).abs() < 1e-3, "{area}");
        assert!((ls[0].length() - std::f64::consts::PI).abs() < 1e-3);
    }

    #[test]
    fn two_wells_give_two_components() {
        let x = grid(161, -2.0, 2.0);
        let y = grid(161, -2.0, 2.0);
        let v = sample(&x, &y, |a, b| (a * a - 1.0).powi(2) + b * b);
        assert_eq!(isolines(&x, &y, &v, None, 0.5).len(), 2);
        assert_eq!(isolines(&x, &y, &v, None, 1.5).len(), 1);
        assert!(isolines(&x, &y, &v, None, -1.0).is_empty());
    }

    #[test]
    fn lines_crossing_the_boundary_are_open() {
        let x = grid(11, 0.0, 1.0);
        let v = sample(&x, &x, |a, _| a);
        let ls = isolines(&x, &x, &v, None, 0.55);
        assert_eq!(ls.len(), 1);
        assert!(!ls[0].closed);
        assert_eq!(ls[0].points.len(), 11);
        assert!(ls[0].points.iter().all(|p| (p[0] - 0.55).abs() < 1e-12));
    }

    #[test]
    fn mask_cuts_the_curve() {
        let x = grid(101, -1.0, 1.0);
        let v = sample(&x, &x, |a, b| a * a + b * b);
        let m = Array2::from_shape_fn((101, 101), |(i, _)| x[i] < 0.0);
        let ls = isolines(&x, &x, &v, Some(&m), 0.25);
        assert_eq!(ls.len(), 1);
        assert!(!ls[0].closed);
    }

    #[test]
    fn saddle_cell_is_consistent() {
        let x = grid(3, -1.0, 1.0);
        let v = sample(&x, &x, |a, b| a * b);
        let ls = isolines(&x, &x, &v, None, 0.1);
        assert_eq!(ls.len(), 2);
    }
}
