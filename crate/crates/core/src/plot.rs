//! SVG rendering of covers and domain outlines (first quadrant).

use crate::cover::{Cover, Target};
use crate::domain::Geometry;
use num_complex::Complex64;
use std::fmt::Write as _;

const SIZE: f64 = 800.0;
const MARGIN: f64 = 40.0;

struct View {
    w: f64,
    h: f64,
    scale: f64,
}

impl View {
    fn new(w: f64, h: f64) -> Self {
        View { w, h, scale: (SIZE - 2.0 * MARGIN) / w.max(h) }
    }

    fn x(&self, x: f64) -> f64 {
        MARGIN + x * self.scale
    }

    fn y(&self, y: f64) -> f64 {
        MARGIN + (self.h - y) * self.scale
    }
}

/// Draws the cells of `cover` (if any) over the outlines of the boxed domains.
/// Output depends only on the inputs, so repeated runs are byte-identical.
pub fn render_svg(cover: Option<&Cover>, geom: &Geometry) -> String {
    let lam = geom.lambda.pow(1).center.re;
    let (w, h) = match cover.map(|c| c.target) {
        Some(Target::Xtilde) => (1.05, 1.15),
        _ => (2.6, 2.9),
    };
    let v = View::new(w, h);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{0}" viewBox="0 0 {0} {0}">"#,
        SIZE
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if let Some(c) = cover {
        let side = c.grid.spacing() * v.scale;
        let color = match c.target {
            Target::Xtilde => "#d94841",
            Target::Sigma => "#3b7dd8",
            Target::P0 => "#8fbf6a",
        };
        let _ = writeln!(s, r#"<g fill="{}" stroke="none">"#, color);
        for &(ix, iy) in &c.cells {
            let ll = c.grid.corner(ix, iy);
            let _ = writeln!(
                s,
                r#"<rect x="{:.4}" y="{:.4}" width="{:.4}" height="{:.4}"/>"#,
                v.x(ll.re),
                v.y(ll.im) - side,
                side,
                side
            );
        }
        let _ = writeln!(s, "</g>");
    }
    let outlines: Vec<(&str, Vec<Vec<Complex64>>)> = vec![
        ("#000000", geom.w_in.outlines(&geom.lambda)),
        ("#555555", geom.w_out.outlines(&geom.lambda)),
        ("#999999", geom.h1_out.outlines(&geom.lambda)),
        ("#7a3db8", geom.v2.outlines(&geom.lambda)),
        ("#c47f00", geom.wtilde6.outlines(&geom.lambda)),
    ];
    let _ = writeln!(s, r#"<g fill="none" stroke-width="1">"#);
    for (color, polys) in outlines {
        for poly in polys {
            if poly.iter().all(|z| z.re >= 0.0 && z.im >= 0.0) {
                let pts: Vec<String> = poly.iter().map(|z| format!("{:.4},{:.4}", v.x(z.re), v.y(z.im))).collect();
                let _ = writeln!(s, r#"<polygon stroke="{}" points="{}"/>"#, color, pts.join(" "));
            }
        }
    }
    // Shells λᵐ Ŵin.
    for m in 1..=6 {
        let k = lam.powi(m);
        let (a, b) = (2.07 * k, 2.06 * k);
        let _ = writeln!(
            s,
            r##"<rect stroke="#2a9d8f" x="{:.4}" y="{:.4}" width="{:.4}" height="{:.4}"/>"##,
            v.x(0.0),
            v.y(b),
            a * v.scale,
            b * v.scale
        );
    }
    let _ = writeln!(s, "</g>");
    // Axes.
    let _ = writeln!(
        s,
        r#"<g stroke="black"><line x1="{0:.4}" y1="{1:.4}" x2="{2:.4}" y2="{1:.4}"/><line x1="{0:.4}" y1="{1:.4}" x2="{0:.4}" y2="{3:.4}"/></g>"#,
        v.x(0.0),
        v.y(0.0),
        v.x(v.w),
        v.y(v.h)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.4}" y="{:.4}" font-size="12" font-family="sans-serif">{}</text>"#,
        MARGIN,
        MARGIN - 12.0,
        match cover {
            Some(c) => format!("{} n={} e={} cells={}", c.target.name(), c.n, c.grid.spacing_exp, c.cells.len()),
            None => "domains".to_string(),
        }
    );
    s.push_str("</svg>\n");
    s
}
