//! Certified checks that the stored domain approximations have the claimed inclusions.
//!
//! Every check walks boundary arcs with adaptive bisection. A piece of an arc
//! is enclosed in a ball, pushed through the relevant map in ball arithmetic
//! and accepted only when its image satisfies the required separation; pieces
//! that contribute to a reported margin are in addition refined until the
//! image radius is below 1/32 of the local separation, so the reported
//! margins are rigorous lower bounds that are also close to the true value.

use super::{Geometry, Polygon};
use crate::arith::{add_up, Ball, UNIT_ROUNDOFF};
use crate::map::{FeigenbaumMap, MapError, FALLBACK_RADIUS};
use num_complex::Complex64;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("check ({check}) could not be certified near {point}")]
    Uncertified { check: char, point: Complex64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct SubCheck {
    pub id: char,
    pub description: &'static str,
    /// Rigorous lower bounds on the separations (or, for signed quantities, upper bounds).
    pub margins: BTreeMap<String, f64>,
    /// Largest enclosure radius of the image of a single boundary point.
    pub error_bound: f64,
    pub pieces: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DomainReport {
    pub checks: Vec<SubCheck>,
    pub passed: bool,
}

impl DomainReport {
    pub fn check(&self, id: char) -> Option<&SubCheck> {
        self.checks.iter().find(|c| c.id == id)
    }
}

const MAX_DEPTH: u32 = 48;
const REFINE: f64 = 32.0;

enum Verdict {
    Accept,
    Refine,
}

/// Closed axis-parallel box `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy)]
struct ClosedBox {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl ClosedBox {
    fn dist(&self, c: Complex64) -> f64 {
        let dx = (self.x0 - c.re).max(0.0).max(c.re - self.x1);
        let dy = (self.y0 - c.im).max(0.0).max(c.im - self.y1);
        dx.hypot(dy)
    }

    fn dist_lower(&self, b: &Ball) -> f64 {
        let slack = 64.0 * UNIT_ROUNDOFF * (1.0 + b.center.re.abs() + b.center.im.abs() + self.x0.abs().max(self.x1.abs()) + self.y0.abs().max(self.y1.abs()));
        (self.dist(b.center) * (1.0 - 4.0 * UNIT_ROUNDOFF) - slack - b.radius).max(0.0)
    }

    // Whether the closed half-plane left of the directed line a→b contains the box.
    fn supported_by(&self, a: Complex64, b: Complex64) -> bool {
        if a.re == b.re {
            // vertical line; left side is x <= a.re when going up
            if b.im > a.im {
                self.x1 <= a.re
            } else {
                self.x0 >= a.re
            }
        } else if a.im == b.im {
            if b.re > a.re {
                self.y0 >= a.im
            } else {
                self.y1 <= a.im
            }
        } else {
            false
        }
    }
}

/// Signed distance lower bound of the ball from the outside of the closed
/// half-plane left of a→b (positive when the whole ball is inside).
fn halfplane_margin(ball: &Ball, a: Complex64, b: Complex64) -> f64 {
    let e = b - a;
    let p = ball.center - a;
    let cr = e.re * p.im - e.im * p.re;
    let err = 8.0 * UNIT_ROUNDOFF * (e.re.abs() + e.im.abs()) * (p.re.abs() + p.im.abs() + 1.0);
    (cr - err) / (e.norm() * (1.0 + 4.0 * UNIT_ROUNDOFF)) - ball.radius
}

/// Whether `ball ∩ clip ⊂ poly`: edges of the polygon whose lines support the
/// clip box are implied; every other edge must contain the whole ball.
fn clipped_in_polygon(ball: &Ball, clip: &ClosedBox, poly: &Polygon) -> bool {
    let n = poly.vertices.len();
    (0..n).all(|i| {
        let a = poly.vertices[i];
        let b = poly.vertices[(i + 1) % n];
        clip.supported_by(a, b) || halfplane_margin(ball, a, b) > 0.0
    })
}

fn point_ball(p: Complex64) -> Ball {
    Ball::point(p)
}

/// Ball enclosing the segment `[a, b]` scaled by `λ^scale`.
fn segment_ball(map: &FeigenbaumMap, a: Complex64, b: Complex64, scale: i32) -> Ball {
    let mid = (a + b) * 0.5;
    let half = add_up((b - a).norm() * 0.5 * (1.0 + 4.0 * UNIT_ROUNDOFF), 4.0 * UNIT_ROUNDOFF * (mid.norm() + (b - a).norm()));
    let base = Ball::new(mid, half);
    if scale == 0 {
        base
    } else {
        base * map.lambda.pow(scale)
    }
}

fn scaled_point(map: &FeigenbaumMap, p: Complex64, scale: i32) -> Ball {
    if scale == 0 {
        point_ball(p)
    } else {
        point_ball(p) * map.lambda.pow(scale)
    }
}

/// Walks the polyline through `vertices` (base scale, multiplied by `λ^scale`),
/// calling `accept(piece_ball, a, b)` with pieces in order along the curve.
fn walk_polyline(
    map: &FeigenbaumMap,
    check: char,
    vertices: &[Complex64],
    scale: i32,
    mut accept: impl FnMut(&Ball, Complex64, Complex64) -> Result<Verdict, MapError>,
) -> Result<usize, VerifyError> {
    let mut pieces = 0;
    for w in vertices.windows(2) {
        let mut stack = vec![(w[0], w[1], 0u32)];
        while let Some((a, b, depth)) = stack.pop() {
            let ball = segment_ball(map, a, b, scale);
            let verdict = accept(&ball, a, b).unwrap_or(Verdict::Refine);
            match verdict {
                Verdict::Accept => pieces += 1,
                Verdict::Refine => {
                    if depth >= MAX_DEPTH {
                        let p = scaled_point(map, (a + b) * 0.5, scale).center;
                        return Err(VerifyError::Uncertified { check, point: p });
                    }
                    let m = (a + b) * 0.5;
                    // second half first so that pieces are visited in curve order
                    stack.push((m, b, depth + 1));
                    stack.push((a, m, depth + 1));
                }
            }
        }
    }
    Ok(pieces)
}

struct Tracker {
    margins: BTreeMap<String, f64>,
    error: f64,
}

impl Tracker {
    fn new() -> Self {
        Tracker { margins: BTreeMap::new(), error: 0.0 }
    }

    fn min(&mut self, key: &str, v: f64) {
        let e = self.margins.entry(key.to_string()).or_insert(f64::INFINITY);
        *e = e.min(v);
    }

    fn max(&mut self, key: &str, v: f64) {
        let e = self.margins.entry(key.to_string()).or_insert(f64::NEG_INFINITY);
        *e = e.max(v);
    }

    fn err(&mut self, r: f64) {
        self.error = self.error.max(r);
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Accepts when the certified separation is positive and the image is small
/// compared with it, recording the separation under `key`.
fn separation(t: &mut Tracker, key: &str, lower: f64, nominal: f64, radius: f64) -> Verdict {
    if lower > 0.0 && radius * REFINE <= nominal {
        t.min(key, lower);
        Verdict::Accept
    } else {
        Verdict::Refine
    }
}

fn f3(map: &FeigenbaumMap, z: &Ball) -> Result<Ball, MapError> {
    let mut b = *z;
    for _ in 0..3 {
        b = map.eval_jet_extended(&b)?.0;
    }
    Ok(b)
}

fn f_lambda2(map: &FeigenbaumMap, z: &Ball) -> Result<Ball, MapError> {
    map.eval_f_lambda(&map.eval_f_lambda(z)?)
}

/// `F⁵⁴ = F² ∘ F⁴ ∘ F¹⁶ ∘ F³²` with value and derivative.
pub fn eval_f54(map: &FeigenbaumMap, z: &Ball) -> Result<(Ball, Ball), MapError> {
    let mut v = *z;
    let mut d = Ball::real(1.0);
    for n in [5u32, 4, 2, 1] {
        let (nv, nd) = map.eval_f_pow2_fine(&v, n)?;
        v = nv;
        d = d * nd;
    }
    Ok((v, d))
}

fn check_a(map: &FeigenbaumMap, g: &Geometry) -> Result<SubCheck, VerifyError> {
    let mut t = Tracker::new();
    let slits = g.v2_slits;
    let pieces = walk_polyline(map, 'a', &[c(0.0, 2.06), c(2.07, 2.06), c(2.07, 0.0)], 0, |ball, a, b| {
        let img = map.eval_jet_extended(ball)?.0;
        let key = if ball.abs_upper() < FALLBACK_RADIUS { "direct_clearance" } else { "fallback_clearance" };
        let v = separation(&mut t, key, slits.dist_lower(&img), slits.dist_nominal(img.center), img.radius);
        if let Verdict::Accept = v {
            t.err(map.eval_jet_extended(&point_ball((a + b) * 0.5))?.0.radius);
        }
        Ok(v)
    })?;
    let passed = t.margins.values().all(|m| *m > 0.0);
    Ok(SubCheck { id: 'a', description: "F(boundary of W_in) avoids the slits", margins: t.margins, error_bound: t.error, pieces, passed })
}

fn check_b(map: &FeigenbaumMap, g: &Geometry) -> Result<SubCheck, VerifyError> {
    let mut t = Tracker::new();
    let outside = |w: Complex64| (2.07 - w.re.abs()).min(2.06 - w.im.abs());
    let q = [c(2.07, 0.0), c(3.75, 0.0), c(3.75, 1.65), c(2.07, 1.65), c(2.07, 0.0)];
    let pieces = walk_polyline(map, 'b', &q, 1, |ball, a, b| {
        let img = map.eval_jet(ball)?.0;
        let inside = g.w_in.certainly_inside(&img, &g.lambda);
        // The margin is the distance to the complement of the box, less the radius.
        let nominal = outside(img.center);
        let lower = (nominal * (1.0 - 4.0 * UNIT_ROUNDOFF) - 8.0 * UNIT_ROUNDOFF * 4.0 - img.radius).max(0.0);
        let v = if inside { separation(&mut t, "margin", lower, nominal, img.radius) } else { Verdict::Refine };
        if let Verdict::Accept = v {
            t.err(map.eval_jet(&scaled_point(map, (a + b) * 0.5, 1))?.0.radius);
        }
        Ok(v)
    })?;
    let passed = t.margins.get("margin").is_some_and(|m| *m > 0.0);
    Ok(SubCheck { id: 'b', description: "F(lambda Q_in) lies in W_in", margins: t.margins, error_bound: t.error, pieces, passed })
}

fn check_c(map: &FeigenbaumMap, _g: &Geometry) -> Result<SubCheck, VerifyError> {
    let mut t = Tracker::new();
    let wout = ClosedBox { x0: -2.495, x1: 2.495, y0: -2.81, y1: 2.81 };
    let pieces = walk_polyline(map, 'c', &[c(0.0, 4.075), c(9.33, 0.85), c(9.33, 0.0)], 2, |ball, a, b| {
        let img = f3(map, ball)?;
        let v = separation(&mut t, "gap", wout.dist_lower(&img), wout.dist(img.center), img.radius);
        if let Verdict::Accept = v {
            t.err(f3(map, &scaled_point(map, (a + b) * 0.5, 2))?.radius);
        }
        Ok(v)
    })?;
    // F³(0) = F(λ) lies in W_out, so W_out is inside the image region.
    let inner = f3(map, &Ball::real(0.0)).map(|b| wout.dist_lower(&b) == 0.0 && b.abs_upper() < 2.495).unwrap_or(false);
    let passed = inner && t.margins.get("gap").is_some_and(|m| *m > 0.0);
    Ok(SubCheck { id: 'c', description: "W_out lies in F^3(V2)", margins: t.margins, error_bound: t.error, pieces, passed })
}

fn check_d(map: &FeigenbaumMap, g: &Geometry) -> Result<SubCheck, VerifyError> {
    let mut t = Tracker::new();
    let pout = ClosedBox { x0: 0.0, x1: 2.495, y0: 0.0, y1: 2.81 };
    let tris = [("t1_distance", g.t1.polygon().unwrap()), ("t2_distance", g.t2.polygon().unwrap())];
    let pieces = walk_polyline(map, 'd', &[c(0.0, 2.81), c(2.495, 2.81), c(2.495, 0.0)], 0, |ball, a, b| {
        let w = map.eval_f_lambda(ball)?;
        if pout.dist_lower(&w) > 0.0 {
            return Ok(Verdict::Accept);
        }
        for (key, tri) in tris {
            if clipped_in_polygon(&w, &pout, tri) {
                let v2 = f_lambda2(map, &w)?;
                let v = separation(&mut t, key, pout.dist_lower(&v2), pout.dist(v2.center), v2.radius);
                if let Verdict::Accept = v {
                    let p = map.eval_f_lambda(&point_ball((a + b) * 0.5))?;
                    t.err(f_lambda2(map, &Ball::point(p.center))?.radius);
                }
                return Ok(v);
            }
        }
        Ok(Verdict::Refine)
    })?;
    let passed = t.margins.values().all(|m| *m > 0.0) && t.margins.len() == 2;
    Ok(SubCheck {
        id: 'd',
        description: "F_lambda(Gamma) meets P_out only inside T1, T2, whose second images leave P_out",
        margins: t.margins,
        error_bound: t.error,
        pieces,
        passed,
    })
}

fn check_e(map: &FeigenbaumMap, g: &Geometry) -> Result<SubCheck, VerifyError> {
    let mut t = Tracker::new();
    let upper = ClosedBox { x0: -2.495, x1: 2.495, y0: 0.0, y1: 2.81 };
    let t2 = g.t2.polygon().unwrap();
    let verts = [c(0.0, 2.81), c(2.495, 2.81), c(2.495, 2.35), c(4.25, 2.35), c(4.25, 0.0)];
    let pieces = walk_polyline(map, 'e', &verts, 0, |ball, a, b| {
        let w0 = map.eval_f_lambda(ball)?;
        // Reflected boundary arcs map to the conjugate curve.
        for w in [w0, w0.conj()] {
            if upper.dist_lower(&w) > 0.0 || clipped_in_polygon(&w, &upper, t2) {
                continue;
            }
            let v = map.eval_f_lambda(&w)?;
            let re_upper = add_up(v.center.re, v.radius);
            if re_upper < 0.0 && v.radius * REFINE <= -v.center.re {
                t.max("gamma_re_max", re_upper);
                t.err(f_lambda2(map, &point_ball((a + b) * 0.5))?.radius);
            } else {
                return Ok(Verdict::Refine);
            }
        }
        Ok(Verdict::Accept)
    })?;
    let passed = t.margins.get("gamma_re_max").is_some_and(|m| *m < 0.0);
    Ok(SubCheck {
        id: 'e',
        description: "F_lambda(boundary of H_out) in W_out cap H+ is inside T2 or has Re F_lambda < 0",
        margins: t.margins,
        error_bound: t.error,
        pieces,
        passed,
    })
}

// Re F² > 0 on the closed triangle T3, except at its vertex near -λx₀, where F²
// vanishes; there the mean value form F²(z) = (z + λx₀)·m with m in the
// derivative enclosure is used instead.
fn t3_positive(map: &FeigenbaumMap, g: &Geometry) -> Result<usize, VerifyError> {
    let tri = g.t3.polygon().unwrap();
    let apex = tri.vertices.iter().copied().max_by(|a, b| a.re.total_cmp(&b.re)).unwrap();
    let others: Vec<Complex64> = tri.vertices.iter().copied().filter(|v| *v != apex).collect();
    let (e1, e2) = (others[0] - apex, others[1] - apex);
    let mut stack = vec![(tri.vertices[0], tri.vertices[1], tri.vertices[2], 0u32)];
    let mut pieces = 0;
    while let Some((p, q, r, depth)) = stack.pop() {
        let cen = (p + q + r) / 3.0;
        let rad = [p, q, r].iter().map(|v| (v - cen).norm()).fold(0.0, f64::max);
        let ball = Ball::new(cen, add_up(rad * (1.0 + 8.0 * UNIT_ROUNDOFF), 8.0 * UNIT_ROUNDOFF * (cen.norm() + 1.0)));
        let direct = map.eval_f_pow2_fine(&ball, 1).map(|(v, _)| v.center.re - v.radius > 0.0).unwrap_or(false);
        let cone = direct || {
            // ball over the piece together with the true zero of F²
            let cen2 = (p + q + r + apex) / 4.0;
            let rad2 = [p, q, r, apex].iter().map(|v| (v - cen2).norm()).fold(0.0, f64::max);
            let hull = Ball::new(cen2, add_up(rad2 * (1.0 + 8.0 * UNIT_ROUNDOFF), 1e-15));
            map.eval_f_pow2_fine(&hull, 1)
                .map(|(_, d)| [e1, e2].iter().all(|e| (Ball::point(*e) * d).center.re - (Ball::point(*e) * d).radius > 0.0))
                .unwrap_or(false)
        };
        if direct || cone {
            pieces += 1;
        } else if depth >= 24 {
            return Err(VerifyError::Uncertified { check: 'f', point: cen });
        } else {
            let (pq, qr, rp) = ((p + q) * 0.5, (q + r) * 0.5, (r + p) * 0.5);
            stack.extend([(p, pq, rp, depth + 1), (pq, q, qr, depth + 1), (rp, qr, r, depth + 1), (pq, qr, rp, depth + 1)]);
        }
    }
    Ok(pieces)
}

fn check_f(map: &FeigenbaumMap, g: &Geometry) -> Result<SubCheck, VerifyError> {
    let mut t = Tracker::new();
    let l2 = map.lambda.pow(2);
    let l2_hi = add_up(l2.center.re, l2.radius);
    let neg_p2 = ClosedBox { x0: (-2.495 * l2_hi).next_down(), x1: 0.0, y0: (-2.81 * l2_hi).next_down(), y1: 0.0 };
    let t3 = g.t3.polygon().unwrap();
    let apex = t3.vertices.iter().copied().max_by(|a, b| a.re.total_cmp(&b.re)).unwrap();
    let verts = [c(0.0, 2.81), c(1.30, 2.81), c(1.30, 3.23), c(2.2, 3.23), c(2.2, 2.81), c(2.495, 2.81), c(2.495, 0.0)];
    let on_axis = |p: Complex64| p.re == 0.0 || p.im == 0.0;
    let mut crossings: Vec<f64> = Vec::new();
    let mut prev: Option<Complex64> = None;
    let pieces = walk_polyline(map, 'f', &verts, 6, |ball, a, b| {
        let (w, d) = eval_f54(map, ball)?;
        let verdict = if on_axis(a) || on_axis(b) {
            // The axis endpoint maps to the real line; the image leaves it
            // into the upper half-plane when Im(DF⁵⁴ · direction) > 0.
            let dir = if on_axis(a) { b - a } else { a - b };
            let s = d * Ball::point(dir);
            if s.center.im - s.radius > 0.0 {
                Verdict::Accept
            } else {
                Verdict::Refine
            }
        } else if neg_p2.dist_lower(&w) > 0.0 {
            if w.center.im < 0.0 {
                separation(&mut t, "lower_half_distance", neg_p2.dist_lower(&w), neg_p2.dist(w.center), w.radius)
            } else {
                Verdict::Accept
            }
        } else if clipped_in_polygon(&w, &neg_p2, t3) {
            let dv = ((w.center - apex).norm() * (1.0 - 4.0 * UNIT_ROUNDOFF) - w.radius).max(0.0);
            separation(&mut t, "t3_vertex_distance", dv, (w.center - apex).norm(), w.radius)
        } else {
            Verdict::Refine
        };
        if let Verdict::Accept = verdict {
            let (p, _) = eval_f54(map, &scaled_point(map, (a + b) * 0.5, 6))?;
            t.err(p.radius);
            if let Some(q) = prev {
                if (q.im > 0.0) != (p.center.im > 0.0) {
                    let s = q.im / (q.im - p.center.im);
                    crossings.push(q.re + s * (p.center.re - q.re));
                }
            }
            prev = Some(p.center);
        }
        Ok(verdict)
    })?;
    let t3_pieces = t3_positive(map, g)?;
    for (key, p) in [("axis_image_imaginary", c(0.0, 2.81)), ("axis_image_real", c(2.495, 0.0))] {
        let (v, _) = eval_f54(map, &scaled_point(map, p, 6)).map_err(|_| VerifyError::Uncertified { check: 'f', point: p })?;
        t.margins.insert(key.into(), v.center.re);
    }
    for (k, x) in crossings.iter().enumerate() {
        t.margins.insert(format!("real_crossing_{k}"), *x);
    }
    let clearance = t.margins.get("lower_half_distance").copied().unwrap_or(f64::INFINITY)
        .min(t.margins.get("t3_vertex_distance").copied().unwrap_or(f64::INFINITY));
    t.margins.insert("clearance".into(), clearance);
    let passed = clearance > 0.0 && clearance.is_finite();
    Ok(SubCheck {
        id: 'f',
        description: "F^54(boundary of P6) avoids -P_out^2 except inside T3, and Re F^2 > 0 on T3",
        margins: t.margins,
        error_bound: t.error,
        pieces: pieces + t3_pieces,
        passed,
    })
}

/// Runs the six certified inclusion checks.
pub fn verify_domain_inclusions(map: &FeigenbaumMap, g: &Geometry) -> Result<DomainReport, VerifyError> {
    let checks = vec![
        check_a(map, g)?,
        check_b(map, g)?,
        check_c(map, g)?,
        check_d(map, g)?,
        check_e(map, g)?,
        check_f(map, g)?,
    ];
    let passed = checks.iter().all(|c| c.passed && c.error_bound.is_finite());
    Ok(DomainReport { checks, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipped_triangle() {
        let tri = Polygon::new(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, -1.0)]);
        let clip = ClosedBox { x0: -0.5, x1: 2.0, y0: -2.0, y1: 0.0 };
        // straddles the top edge, which supports the clip box
        assert!(clipped_in_polygon(&Ball::from_parts(0.2, 0.0, 0.05), &clip, &tri));
        assert!(!clipped_in_polygon(&Ball::from_parts(0.6, -0.3, 0.2), &clip, &tri));
    }

    #[test]
    fn halfplane_sign() {
        let m = halfplane_margin(&Ball::from_parts(0.0, 1.0, 0.25), c(0.0, 0.0), c(1.0, 0.0));
        assert!((m - 0.75).abs() < 1e-12);
    }
}
