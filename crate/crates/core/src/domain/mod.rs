//! Polygonal approximations of the dynamically defined domains and certified
//! membership / distance queries against them.
//!
//! Every set is stored by its first-quadrant generators (open rectangles and
//! convex polygons with double-precision vertices) and an optional four-fold
//! symmetrisation. A set may be scaled by `λ^s`; queries map the ball back to
//! the base scale with rigorous `λ^{-s}` enclosures, so the scaled sets are
//! exact images of the stored ones.

pub mod verify;

use crate::arith::{abs_up, add_up, Ball, UNIT_ROUNDOFF};
use crate::map::{FeigenbaumMap, LambdaData, ShellMembership, ShellOracle};
use num_complex::Complex64;
use std::sync::OnceLock;

/// Open rectangle with lower-left corner `ll` and upper-right corner `ur`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CBox {
    pub ll: Complex64,
    pub ur: Complex64,
}

impl CBox {
    pub fn new(ll: Complex64, ur: Complex64) -> Self {
        assert!(ll.re < ur.re && ll.im < ur.im, "degenerate box");
        CBox { ll, ur }
    }

    pub fn from_coords(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        CBox::new(Complex64::new(x0, y0), Complex64::new(x1, y1))
    }

    fn closed_contains_rect(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> bool {
        self.ll.re <= x0 && x1 <= self.ur.re && self.ll.im <= y0 && y1 <= self.ur.im
    }

    fn dist(&self, p: Complex64) -> f64 {
        let dx = (self.ll.re - p.re).max(0.0).max(p.re - self.ur.re);
        let dy = (self.ll.im - p.im).max(0.0).max(p.im - self.ur.im);
        dx.hypot(dy)
    }

    pub fn vertices(&self) -> Vec<Complex64> {
        vec![
            self.ll,
            Complex64::new(self.ur.re, self.ll.im),
            self.ur,
            Complex64::new(self.ll.re, self.ur.im),
        ]
    }
}

/// Closed convex polygon, vertices stored counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub vertices: Vec<Complex64>,
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

impl Polygon {
    pub fn new(mut vertices: Vec<Complex64>) -> Self {
        assert!(vertices.len() >= 3);
        let area2: f64 = (0..vertices.len())
            .map(|i| cross(vertices[i], vertices[(i + 1) % vertices.len()]))
            .sum();
        if area2 < 0.0 {
            vertices.reverse();
        }
        let p = Polygon { vertices };
        debug_assert!(p.is_convex());
        p
    }

    fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let c = self.vertices[(i + 2) % n];
            cross(b - a, c - b) >= 0.0
        })
    }

    fn edges(&self) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    // Signed margin of `p` inside the closed polygon, conservative for "inside":
    // returns a value > 0 only when p is certainly inside.
    fn inside_margin(&self, p: Complex64) -> f64 {
        self.edges()
            .map(|(a, b)| {
                let e = b - a;
                let len = e.norm();
                let c = cross(e, p - a);
                let err = 8.0 * UNIT_ROUNDOFF * (e.re.abs() + e.im.abs()) * ((p - a).re.abs() + (p - a).im.abs() + 1.0);
                (c - err) / len
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn closed_contains_point(&self, p: Complex64) -> bool {
        self.inside_margin(p) >= 0.0
    }

    fn dist(&self, p: Complex64) -> f64 {
        let inside = self.edges().all(|(a, b)| cross(b - a, p - a) >= 0.0);
        if inside {
            return 0.0;
        }
        self.edges().map(|(a, b)| point_segment_dist(p, a, b)).fold(f64::INFINITY, f64::min)
    }
}

pub fn point_segment_dist(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let e = b - a;
    let l2 = e.norm_sqr();
    let t = if l2 == 0.0 { 0.0 } else { ((p - a).re * e.re + (p - a).im * e.im) / l2 };
    let t = t.clamp(0.0, 1.0);
    (p - (a + e * t)).norm()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Piece {
    Rect(CBox),
    Poly(Polygon),
}

impl Piece {
    fn dist(&self, p: Complex64) -> f64 {
        match self {
            Piece::Rect(b) => b.dist(p),
            Piece::Poly(q) => q.dist(p),
        }
    }

    fn extent(&self) -> f64 {
        match self {
            Piece::Rect(b) => abs_up(b.ur).max(abs_up(b.ll)),
            Piece::Poly(q) => q.vertices.iter().map(|v| abs_up(*v)).fold(0.0, f64::max),
        }
    }

    pub fn vertices(&self) -> Vec<Complex64> {
        match self {
            Piece::Rect(b) => b.vertices(),
            Piece::Poly(q) => q.vertices.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Inside,
    Outside,
    Straddling,
}

/// `λ^scale_exponent · ICL(∪ pieces)` (or the plain union when not symmetrised).
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSet {
    pub name: &'static str,
    pub pieces: Vec<Piece>,
    pub symmetrized: bool,
    pub scale_exponent: i32,
}

// Relative slack covering the rounding in distance computations.
fn dist_slack(p: Complex64, extent: f64) -> f64 {
    64.0 * UNIT_ROUNDOFF * (1.0 + p.re.abs() + p.im.abs() + extent)
}

impl DomainSet {
    pub fn new(name: &'static str, pieces: Vec<Piece>, symmetrized: bool, scale_exponent: i32) -> Self {
        DomainSet { name, pieces, symmetrized, scale_exponent }
    }

    /// The single polygon of a triangle-like set.
    pub fn polygon(&self) -> Option<&Polygon> {
        match self.pieces.as_slice() {
            [Piece::Poly(p)] => Some(p),
            _ => None,
        }
    }

    pub fn scaled(&self, by: i32) -> DomainSet {
        DomainSet { scale_exponent: self.scale_exponent + by, ..self.clone() }
    }

    fn extent(&self) -> f64 {
        self.pieces.iter().map(Piece::extent).fold(0.0, f64::max)
    }

    fn to_base(&self, z: &Ball, lam: &LambdaData) -> Ball {
        if self.scale_exponent == 0 {
            *z
        } else {
            *z * lam.pow(-self.scale_exponent)
        }
    }

    fn fold(&self, c: Complex64) -> Complex64 {
        if self.symmetrized {
            Complex64::new(c.re.abs(), c.im.abs())
        } else {
            c
        }
    }

    /// Lower bound on the distance from the point `p` (base scale) to the closure.
    fn base_dist_lower(&self, p: Complex64) -> f64 {
        let q = self.fold(p);
        let d = self.pieces.iter().map(|pc| pc.dist(q)).fold(f64::INFINITY, f64::min);
        (d * (1.0 - 4.0 * UNIT_ROUNDOFF) - dist_slack(q, self.extent())).max(0.0)
    }

    /// Upper bound on the distance from `p` (base scale) to the closure.
    fn base_dist_upper(&self, p: Complex64) -> f64 {
        let q = self.fold(p);
        let d = self.pieces.iter().map(|pc| pc.dist(q)).fold(f64::INFINITY, f64::min);
        d * (1.0 + 4.0 * UNIT_ROUNDOFF) + dist_slack(q, self.extent())
    }

    /// Whether the closed disk `D(c, r)` (base scale) lies in the open set.
    fn base_inside(&self, c: Complex64, r: f64) -> bool {
        let q = self.fold(c);
        let slack = dist_slack(q, self.extent()) + r * 8.0 * UNIT_ROUNDOFF;
        let mut x0 = q.re - r - slack;
        let x1 = q.re + r + slack;
        let mut y0 = q.im - r - slack;
        let y1 = q.im + r + slack;
        if self.symmetrized {
            // The reflected copies glue along the axes.
            x0 = x0.max(0.0);
            y0 = y0.max(0.0);
        }
        let mut xs = vec![x0, x1];
        let mut ys = vec![y0, y1];
        for pc in &self.pieces {
            if let Piece::Rect(b) = pc {
                for x in [b.ll.re, b.ur.re] {
                    if x > x0 && x < x1 {
                        xs.push(x);
                    }
                }
                for y in [b.ll.im, b.ur.im] {
                    if y > y0 && y < y1 {
                        ys.push(y);
                    }
                }
            }
        }
        xs.sort_by(f64::total_cmp);
        ys.sort_by(f64::total_cmp);
        for i in 0..xs.len() - 1 {
            for j in 0..ys.len() - 1 {
                let (a0, a1, b0, b1) = (xs[i], xs[i + 1], ys[j], ys[j + 1]);
                let covered = self.pieces.iter().any(|pc| match pc {
                    Piece::Rect(b) => b.closed_contains_rect(a0, a1, b0, b1),
                    Piece::Poly(p) => [
                        Complex64::new(a0, b0),
                        Complex64::new(a1, b0),
                        Complex64::new(a1, b1),
                        Complex64::new(a0, b1),
                    ]
                    .iter()
                    .all(|v| p.closed_contains_point(*v)),
                });
                if !covered {
                    return false;
                }
            }
        }
        true
    }

    pub fn contains(&self, z: &Ball, lam: &LambdaData) -> Membership {
        let b = self.to_base(z, lam);
        if !b.is_finite() {
            return Membership::Straddling;
        }
        if self.base_inside(b.center, b.radius) {
            Membership::Inside
        } else if self.base_dist_lower(b.center) > b.radius {
            Membership::Outside
        } else {
            Membership::Straddling
        }
    }

    pub fn certainly_inside(&self, z: &Ball, lam: &LambdaData) -> bool {
        self.contains(z, lam) == Membership::Inside
    }

    pub fn certainly_outside(&self, z: &Ball, lam: &LambdaData) -> bool {
        self.contains(z, lam) == Membership::Outside
    }

    /// Lower bound on the distance from every point of `z` to the closure.
    pub fn dist_lower(&self, z: &Ball, lam: &LambdaData) -> f64 {
        let b = self.to_base(z, lam);
        let d = (self.base_dist_lower(b.center) - b.radius).max(0.0);
        if self.scale_exponent == 0 {
            d
        } else {
            let s = lam.pow(self.scale_exponent);
            (d * (s.center.re - s.radius)).next_down().max(0.0)
        }
    }

    /// Upper bound on the distance from the centre of `z` to the closure.
    pub fn dist_upper_center(&self, z: Complex64, lam: &LambdaData) -> f64 {
        let b = self.to_base(&Ball::point(z), lam);
        let d = add_up(self.base_dist_upper(b.center), b.radius);
        if self.scale_exponent == 0 {
            d
        } else {
            let s = lam.pow(self.scale_exponent);
            (d * (s.center.re + s.radius)).next_up()
        }
    }

    /// Outlines of every generator in all symmetric copies, at actual scale
    /// (rounded to nearest; for plotting only).
    pub fn outlines(&self, lam: &LambdaData) -> Vec<Vec<Complex64>> {
        let s = if self.scale_exponent == 0 { 1.0 } else { lam.pow(self.scale_exponent).center.re };
        let mut out = Vec::new();
        for pc in &self.pieces {
            let v: Vec<Complex64> = pc.vertices().iter().map(|z| z * s).collect();
            out.push(v.clone());
            if self.symmetrized {
                out.push(v.iter().map(|z| -z).collect());
                out.push(v.iter().map(|z| z.conj()).collect());
                out.push(v.iter().map(|z| -z.conj()).collect());
            }
        }
        out
    }
}

/// `ℂ ∖ ((-∞, left] ∪ [right, ∞))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitPlane {
    pub left_slit_end: Ball,
    pub right_slit_start: Ball,
}

impl SlitPlane {
    /// Lower bound on the distance from every point of `z` to the slits.
    pub fn dist_lower(&self, z: &Ball) -> f64 {
        let a = self.left_slit_end.center.re + self.left_slit_end.radius;
        let b = self.right_slit_start.center.re - self.right_slit_start.radius;
        let c = z.center;
        let dl = if c.re <= a { c.im.abs() } else { (c - a).norm() };
        let dr = if c.re >= b { c.im.abs() } else { (c - b).norm() };
        let d = dl.min(dr);
        (d * (1.0 - 4.0 * UNIT_ROUNDOFF) - dist_slack(c, a.abs().max(b.abs())) - z.radius).max(0.0)
    }

    /// Distance from the point `c` to the slits, nominal value.
    pub fn dist_nominal(&self, c: Complex64) -> f64 {
        let a = self.left_slit_end.center.re;
        let b = self.right_slit_start.center.re;
        let dl = if c.re <= a { c.im.abs() } else { (c - a).norm() };
        let dr = if c.re >= b { c.im.abs() } else { (c - b).norm() };
        dl.min(dr)
    }

    pub fn certainly_avoids(&self, z: &Ball) -> bool {
        self.dist_lower(z) > 0.0
    }
}

/// Shell level of a query ball with respect to `λ^m Ŵ`.
#[derive(Debug, Clone)]
struct ShellTable {
    in_x: Vec<f64>,
    in_y: Vec<f64>,
    out_x: Vec<f64>,
    out_y: Vec<f64>,
}

pub const MAX_SHELL: u32 = 90;

/// All domain approximations together with the `λ` data used to scale them.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub lambda: LambdaData,
    pub w_in: DomainSet,
    pub w_out: DomainSet,
    pub h_in: DomainSet,
    pub h_out: DomainSet,
    /// `λ Ĥin` and `λ Ĥout`, the sets deciding escape from `H¹`.
    pub h1_in: DomainSet,
    pub h1_out: DomainSet,
    pub q_in: DomainSet,
    /// `V̂₂`, already scaled by `λ²`.
    pub v2: DomainSet,
    /// `W̃̂₆`, scaled by `λ⁶`.
    pub wtilde6: DomainSet,
    /// Optional coarser capture sets, stored but not verified.
    pub wtilde4: DomainSet,
    pub wtilde5: DomainSet,
    pub t1: DomainSet,
    pub t2: DomainSet,
    pub t3: DomainSet,
    /// Slits of `ℂ_λ`: `(-∞,-1/λ] ∪ [F(λ)/λ², ∞)`.
    pub c_lambda: SlitPlane,
    /// Slits of `V₂*`: `(-∞,-1/λ] ∪ [1/λ², ∞)`.
    pub v2_slits: SlitPlane,
    shells: ShellTable,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub const P_IN: (f64, f64) = (2.07, 2.06);
pub const P_OUT: (f64, f64) = (2.495, 2.81);

static GEOMETRY: OnceLock<Geometry> = OnceLock::new();

impl Geometry {
    pub fn new(map: &FeigenbaumMap) -> Self {
        let lam = map.lambda.clone();
        let p_in = Piece::Rect(CBox::from_coords(0.0, 0.0, P_IN.0, P_IN.1));
        let p_out = Piece::Rect(CBox::from_coords(0.0, 0.0, P_OUT.0, P_OUT.1));
        let q_in = Piece::Rect(CBox::from_coords(2.07, 0.0, 3.75, 1.65));
        let q_out = Piece::Rect(CBox::from_coords(2.495, 0.0, 4.25, 2.35));
        let v2_poly = Piece::Poly(Polygon::new(vec![c(0.0, 0.0), c(0.0, 4.075), c(9.33, 0.85), c(9.33, 0.0)]));
        let l2 = lam.pow(2).center.re;
        // The vertex -λx₀ is rounded to a double not exceeding the true value, so
        // the stored triangle never reaches past the zero of F² at -λx₀.
        let lx0 = map.constants.x0 * lam.pow(1);
        let t3 = Polygon::new(vec![c(-add_up(lx0.center.re, lx0.radius).next_up(), 0.0), c(-2.5 * l2, -0.1), c(-2.5 * l2, 0.0)]);
        let shells = Self::shell_table(&lam);
        let h_in = DomainSet::new("H_in", vec![p_in.clone(), q_in.clone()], true, 0);
        let h_out = DomainSet::new("H_out", vec![p_out.clone(), q_out], true, 0);
        Geometry {
            h1_in: h_in.scaled(1),
            h1_out: h_out.scaled(1),
            h_in,
            h_out,
            w_in: DomainSet::new("W_in", vec![p_in.clone()], true, 0),
            w_out: DomainSet::new("W_out", vec![p_out.clone()], true, 0),
            q_in: DomainSet::new("Q_in", vec![q_in], false, 0),
            v2: DomainSet::new("V2", vec![v2_poly], true, 2),
            wtilde6: DomainSet::new(
                "Wtilde6",
                vec![p_out.clone(), Piece::Rect(CBox::from_coords(1.30, 2.81, 2.2, 3.23))],
                true,
                6,
            ),
            wtilde4: DomainSet::new("Wtilde4", vec![Piece::Rect(CBox::from_coords(0.0, 0.0, 0.09, 0.15))], true, 0),
            wtilde5: DomainSet::new(
                "Wtilde5",
                vec![p_out, Piece::Rect(CBox::from_coords(1.2, 1.79, 3.0, 3.65))],
                true,
                5,
            ),
            t1: DomainSet::new("T1", vec![Piece::Poly(Polygon::new(vec![c(0.0, 2.08), c(0.0, 2.81), c(0.31, 2.81)]))], false, 0),
            t2: DomainSet::new(
                "T2",
                vec![Piece::Poly(Polygon::new(vec![c(2.495, 0.0), c(2.05, 2.81), c(2.495, 2.81)]))],
                false,
                0,
            ),
            t3: DomainSet::new("T3", vec![Piece::Poly(t3)], false, 0),
            c_lambda: SlitPlane { left_slit_end: -lam.pow(-1), right_slit_start: map.constants.slit_right },
            v2_slits: SlitPlane { left_slit_end: -lam.pow(-1), right_slit_start: lam.pow(-2) },
            lambda: lam,
            shells,
        }
    }

    pub fn global() -> &'static Geometry {
        GEOMETRY.get_or_init(|| Geometry::new(FeigenbaumMap::global()))
    }

    fn shell_table(lam: &LambdaData) -> ShellTable {
        let mut t = ShellTable { in_x: vec![], in_y: vec![], out_x: vec![], out_y: vec![] };
        for m in 0..=(MAX_SHELL as i32 + 1) {
            let p = lam.pow(m);
            let lo = (p.center.re - p.radius).next_down();
            let hi = add_up(p.center.re, p.radius);
            t.in_x.push((P_IN.0 * lo).next_down());
            t.in_y.push((P_IN.1 * lo).next_down());
            t.out_x.push((P_OUT.0 * hi).next_up());
            t.out_y.push((P_OUT.1 * hi).next_up());
        }
        t
    }

    fn in_shell(&self, x_hi: f64, y_hi: f64, m: u32) -> bool {
        x_hi < self.shells.in_x[m as usize] && y_hi < self.shells.in_y[m as usize]
    }

    /// Whether the ball lies in `λ^m Ŵin`.
    pub fn in_w_in_shell(&self, z: &Ball, m: u32) -> bool {
        let (x_hi, y_hi) = folded_hi(z);
        self.in_shell(x_hi, y_hi, m)
    }

    /// Whether the ball misses the closure of `λ^m Ŵout`.
    pub fn outside_w_out_shell(&self, z: &Ball, m: u32) -> bool {
        let x_lo = (z.center.re.abs() - z.radius).next_down();
        let y_lo = (z.center.im.abs() - z.radius).next_down();
        x_lo > self.shells.out_x[m as usize] || y_lo > self.shells.out_y[m as usize]
    }

    /// Largest `m` with the ball inside `λ^m Ŵin`, and whether it is known to
    /// miss `λ^{m+1} Ŵout`.
    pub fn max_wn_shell(&self, z: &Ball) -> ShellMembership {
        let (x_hi, y_hi) = folded_hi(z);
        if !self.in_shell(x_hi, y_hi, 0) {
            return ShellMembership::Outside;
        }
        // Estimate from logarithms, then correct with exact table comparisons.
        let ratio = (x_hi / P_IN.0).max(y_hi / P_IN.1);
        let est = if ratio <= 0.0 { MAX_SHELL } else { ((ratio.ln() / self.lambda.pow(1).center.re.ln()).floor().max(0.0) as u32).min(MAX_SHELL) };
        let mut m = est;
        while m > 0 && !self.in_shell(x_hi, y_hi, m) {
            m -= 1;
        }
        while m < MAX_SHELL && self.in_shell(x_hi, y_hi, m + 1) {
            m += 1;
        }
        if self.outside_w_out_shell(z, m + 1) {
            ShellMembership::Exact(m)
        } else {
            ShellMembership::Ambiguous { lower: m }
        }
    }

    /// Lower bound on `dist(z, V₂*)` over the ball.
    pub fn dist_to_v2star(&self, z: &Ball) -> f64 {
        let ds = self.v2_slits.dist_lower(z);
        let dv = self.v2.dist_lower(z, &self.lambda);
        ds.min(dv)
    }

    /// Nominal distance from a point to `V₂*` (not rounded outward).
    pub fn dist_to_v2star_nominal(&self, z: Complex64) -> f64 {
        let ds = self.v2_slits.dist_nominal(z);
        let l2 = self.lambda.pow(2).center.re;
        let q = Complex64::new(z.re.abs(), z.im.abs()) / l2;
        let dv = self.v2.pieces.iter().map(|p| p.dist(q)).fold(f64::INFINITY, f64::min) * l2;
        ds.min(dv)
    }

    /// `λ Ĥout` and friends are used constantly; these helpers fix the scale.
    pub fn in_h1_in(&self, z: &Ball) -> bool {
        self.h1_in.certainly_inside(z, &self.lambda)
    }

    pub fn outside_h1_out(&self, z: &Ball) -> bool {
        self.h1_out.certainly_outside(z, &self.lambda)
    }
}

fn folded_hi(z: &Ball) -> (f64, f64) {
    (add_up(z.center.re.abs(), z.radius), add_up(z.center.im.abs(), z.radius))
}

impl ShellOracle for Geometry {
    fn max_wn_shell(&self, z: &Ball) -> ShellMembership {
        Geometry::max_wn_shell(self, z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g() -> &'static Geometry {
        Geometry::global()
    }

    #[test]
    fn membership_examples() {
        let g = g();
        let l = &g.lambda;
        assert_eq!(g.w_in.contains(&Ball::from_parts(1.0, 1.0, 0.01), l), Membership::Inside);
        assert_eq!(g.w_in.contains(&Ball::from_parts(2.07, 1.0, 0.01), l), Membership::Straddling);
        assert_eq!(g.w_out.contains(&Ball::from_parts(5.0, 0.0, 0.1), l), Membership::Outside);
        // Symmetric copies glue across the axes.
        assert_eq!(g.w_in.contains(&Ball::from_parts(0.0, 0.0, 1.0), l), Membership::Inside);
        assert_eq!(g.h_in.contains(&Ball::from_parts(2.07, 0.5, 0.1), l), Membership::Inside);
    }

    #[test]
    fn shell_examples() {
        let g = g();
        assert_eq!(g.max_wn_shell(&Ball::from_parts(1.0, 0.0, 1e-6)), ShellMembership::Exact(0));
        let l3 = g.lambda.pow(3).center.re;
        assert_eq!(g.max_wn_shell(&Ball::from_parts(l3, l3, 0.0)), ShellMembership::Exact(3));
        assert_eq!(g.max_wn_shell(&Ball::from_parts(2.6, 0.0, 0.0)), ShellMembership::Outside);
        assert!(matches!(g.max_wn_shell(&Ball::from_parts(0.9, 0.0, 0.0)), ShellMembership::Ambiguous { lower: 0 }));
    }

    #[test]
    fn v2star_distance() {
        let g = g();
        assert_eq!(g.dist_to_v2star(&Ball::from_parts(0.5, 0.1, 0.0)), 0.0);
        let a = g.lambda.pow(-1).center.re;
        assert_eq!(g.dist_to_v2star(&Ball::from_parts(-a - 1.0, 0.0, 0.0)), 0.0);
        let d = g.dist_to_v2star(&Ball::from_parts(0.0, 3.0, 0.0));
        assert!(d > 1.0 && d <= 3.0 - 4.075 * g.lambda.pow(2).center.re);
    }

    #[test]
    fn slit_plane() {
        let g = g();
        assert!(g.c_lambda.certainly_avoids(&Ball::from_parts(0.0, 0.0, 2.0)));
        assert!(!g.c_lambda.certainly_avoids(&Ball::from_parts(5.0, 0.0, 0.01)));
    }
}
