//! Minimal deterministic SVG writer. Coordinates are given in plot units
//! (x to the right, y upward); the document's user units equal plot units.

use std::fmt::Write;

const STYLE: &str = ".curve{fill:none;stroke:#000}.level{fill:none;stroke:#246}\
.glyph-meridian{stroke:#c22}.glyph-swirl{stroke:#27c}.frame{fill:none;stroke:#999}";

pub struct Svg {
    x: (f64, f64),
    y: (f64, f64),
    stroke: f64,
    body: String,
}

fn num(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

impl Svg {
    pub fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let stroke = 0.003 * (x.1 - x.0).max(y.1 - y.0);
        Svg { x, y, stroke, body: String::new() }
    }

    fn point(&self, p: [f64; 2]) -> String {
        format!("{},{}", num(p[0]), num(-p[1]))
    }

    pub fn polyline(&mut self, points: &[[f64; 2]], closed: bool, class: &str, attrs: &str) {
        if points.len() < 2 {
            return;
        }
        let pts: Vec<String> = points.iter().map(|&p| self.point(p)).collect();
        let tag = if closed { "polygon" } else { "polyline" };
        let _ = writeln!(self.body, r#"<{tag} class="{class}"{attrs} points="{}"/>"#, pts.join(" "));
    }

    pub fn line(&mut self, a: [f64; 2], b: [f64; 2], class: &str, attrs: &str) {
        let _ = writeln!(
            self.body,
            r#"<line class="{class}"{attrs} x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
            num(a[0]),
            num(-a[1]),
            num(b[0]),
            num(-b[1])
        );
    }

    pub fn finish(self, title: &str) -> String {
        let (w, h) = (self.x.1 - self.x.0, self.y.1 - self.y.0);
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="{}" height="{}" stroke-width="{}">"#,
            num(self.x.0),
            num(-self.y.1),
            num(w),
            num(h),
            (600.0 * w / w.max(h)).round(),
            (600.0 * h / w.max(h)).round(),
            num(self.stroke)
        );
        let _ = writeln!(out, "<title>{title}</title>");
        let _ = writeln!(out, "<style>{STYLE}</style>");
        let _ = writeln!(
            out,
            r#"<rect class="frame" x="{}" y="{}" width="{}" height="{}"/>"#,
            num(self.x.0),
            num(-self.y.1),
            num(w),
            num(h)
        );
        out.push_str(&self.body);
        out.push_str("</svg>\n");
        out
    }
}

/// Bounding box of a set of points, padded by `pad` on every side.
pub fn bounds<'a, I: IntoIterator<Item = &'a [f64; 2]>>(points: I, pad: f64) -> Option<((f64, f64), (f64, f64))> {
    let mut b: Option<((f64, f64), (f64, f64))> = None;
    for p in points {
        if !(p[0].is_finite() && p[1].is_finite()) {
            continue;
        }
        b = Some(match b {
            None => ((p[0], p[0]), (p[1], p[1])),
            Some(((x0, x1), (y0, y1))) => ((x0.min(p[0]), x1.max(p[0])), (y0.min(p[1]), y1.max(p[1]))),
        });
    }
    b.map(|((x0, x1), (y0, y1))| ((x0 - pad, x1 + pad), (y0 - pad, y1 + pad)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_is_flipped_and_stable() {
        let mut s = Svg::new((0.0, 1.0), (0.0, 2.0));
        s.line([0.0, 0.0], [0.25, 0.5], "glyph-swirl", "");
        let a = s.finish("t");
        assert!(a.contains(r#"x2="0.250000" y2="-0.500000""#));
        assert!(a.contains(r#"viewBox="0.000000 -2.000000 1.000000 2.000000""#));
        let mut s = Svg::new((0.0, 1.0), (0.0, 2.0));
        s.line([0.0, 0.0], [0.25, 0.5], "glyph-swirl", "");
        assert_eq!(a, s.finish("t"));
    }

    #[test]
    fn bounds_skip_nan() {
        let b = bounds(&[[0.0, 1.0], [f64::NAN, 5.0], [2.0, -1.0]], 0.5).unwrap();
        assert_eq!(b, ((-0.5, 2.5), (-1.5, 1.5)));
    }
}
