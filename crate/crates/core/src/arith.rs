//! Complex ball arithmetic with outward-rounded radii.
//!
//! A [`Ball`] `c ± r` encloses every complex number within distance `r` of the
//! floating-point centre `c`. Each operation returns a ball containing the exact
//! image of the operand balls. The rounding error of the centre is measured
//! with error-free transformations (two-sum, fused multiply-add), so it is
//! never larger than the classical `√5·u·|c|` a priori bound and is zero for
//! exactly representable results. Radii are accumulated with upward rounding.

use num_complex::Complex64;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use thiserror::Error;

/// Unit roundoff of IEEE binary64.
pub const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

// Absolute floor added where a product may underflow.
const UNDERFLOW_FLOOR: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArithError {
    #[error("division by a ball that contains zero (|centre| = {center_abs:e}, radius = {radius:e})")]
    DivisionByZero { center_abs: f64, radius: f64 },
    #[error("non-finite value in ball arithmetic")]
    NonFinite,
    #[error("square root of a ball that meets the branch cut (-inf, 0]")]
    BranchCut,
    #[error("composition bound undefined: |eps| = {eps:e} >= |z| = {scale:e}")]
    CompositionOutOfRange { eps: f64, scale: f64 },
}

/// Floating-point error model used for a priori polynomial bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundoffModel {
    pub unit_roundoff: f64,
    /// Relative error factor of one complex multiplication, `√5` rounded up.
    pub complex_op_factor: f64,
    /// Number of Horner steps covered by [`RoundoffModel::horner_gamma`].
    pub horner_degree: u32,
}

impl Default for RoundoffModel {
    fn default() -> Self {
        RoundoffModel {
            unit_roundoff: UNIT_ROUNDOFF,
            complex_op_factor: 5f64.sqrt().next_up(),
            horner_degree: 80,
        }
    }
}

impl RoundoffModel {
    /// `f · n u / (1 - n u)` rounded up, with `f = √5` for complex inputs and
    /// `f = 1` when every intermediate is real.
    pub fn horner_gamma(&self, complex: bool) -> f64 {
        let nu = (self.horner_degree as f64 * self.unit_roundoff).next_up();
        let g = (nu / (1.0 - nu).next_down()).next_up();
        if complex {
            mul_up(g, self.complex_op_factor)
        } else {
            g
        }
    }
}

#[inline]
pub(crate) fn add_up(a: f64, b: f64) -> f64 {
    (a + b).next_up()
}

#[inline]
pub(crate) fn mul_up(a: f64, b: f64) -> f64 {
    (a * b).next_up()
}

#[inline]
pub(crate) fn div_up(a: f64, b: f64) -> f64 {
    (a / b).next_up()
}

/// Upper bound on `|z|`.
#[inline]
pub fn abs_up(z: Complex64) -> f64 {
    z.re.hypot(z.im).next_up().next_up()
}

/// Lower bound on `|z|`.
#[inline]
pub fn abs_down(z: Complex64) -> f64 {
    z.re.hypot(z.im).next_down().next_down().max(0.0)
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

// `x*y - z*w` with a bound on its rounding error.
#[inline]
fn dot2_diff(x: f64, y: f64, z: f64, w: f64) -> (f64, f64) {
    let (p1, e1) = two_prod(x, y);
    let (p2, e2) = two_prod(z, w);
    let (s, e3) = two_sum(p1, -p2);
    (s, add_up(add_up(e1.abs(), e2.abs()), e3.abs()))
}

/// Exact-centre product with a bound on the centre's rounding error.
#[inline]
pub(crate) fn cmul_err(a: Complex64, b: Complex64) -> (Complex64, f64) {
    let (re, er) = dot2_diff(a.re, b.re, a.im, b.im);
    let (im, ei) = dot2_diff(a.re, b.im, -a.im, b.re);
    (Complex64::new(re, im), add_up(er, ei))
}

#[inline]
fn cadd_err(a: Complex64, b: Complex64) -> (Complex64, f64) {
    let (re, er) = two_sum(a.re, b.re);
    let (im, ei) = two_sum(a.im, b.im);
    (Complex64::new(re, im), add_up(er.abs(), ei.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center: Complex64,
    pub radius: f64,
}

impl fmt::Display for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {:+}i) ± {:e}", self.center.re, self.center.im, self.radius)
    }
}

impl Ball {
    pub fn new(center: Complex64, radius: f64) -> Self {
        debug_assert!(radius >= 0.0, "negative ball radius");
        Ball { center, radius }
    }

    pub fn point(center: Complex64) -> Self {
        Ball { center, radius: 0.0 }
    }

    pub fn real(x: f64) -> Self {
        Ball::point(Complex64::new(x, 0.0))
    }

    pub fn from_parts(re: f64, im: f64, radius: f64) -> Self {
        Ball::new(Complex64::new(re, im), radius)
    }

    pub fn is_finite(&self) -> bool {
        self.center.re.is_finite() && self.center.im.is_finite() && self.radius.is_finite()
    }

    pub fn checked(self) -> Result<Self, ArithError> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(ArithError::NonFinite)
        }
    }

    pub fn contains_zero(&self) -> bool {
        abs_down(self.center) <= self.radius
    }

    /// Whether the closed ball contains the point `z` (conservative: may say
    /// yes for points at distance within a few ulps of the boundary).
    pub fn may_contain(&self, z: Complex64) -> bool {
        abs_down(self.center - z) <= add_up(self.radius, 4.0 * UNIT_ROUNDOFF * abs_up(z))
    }

    /// Whether `other` is certainly inside `self`.
    pub fn encloses(&self, other: &Ball) -> bool {
        let (d, e) = cadd_err(self.center, -other.center);
        add_up(add_up(abs_up(d), e), other.radius) <= self.radius
    }

    /// Lower and upper bound on `|z|` over the ball.
    pub fn abs_bounds(&self) -> (f64, f64) {
        ((abs_down(self.center) - self.radius).next_down().max(0.0), add_up(abs_up(self.center), self.radius))
    }

    pub fn abs_upper(&self) -> f64 {
        add_up(abs_up(self.center), self.radius)
    }

    pub fn abs_lower(&self) -> f64 {
        (abs_down(self.center) - self.radius).next_down().max(0.0)
    }

    pub fn conj(&self) -> Ball {
        Ball::new(self.center.conj(), self.radius)
    }

    /// Enlarges the radius by `extra` (rounded up).
    pub fn inflate(&self, extra: f64) -> Ball {
        Ball::new(self.center, add_up(self.radius, extra))
    }

    /// Multiplication by an exact real scalar.
    pub fn scale(&self, k: f64) -> Ball {
        *self * Ball::real(k)
    }

    pub fn div(&self, other: &Ball) -> Result<Ball, ArithError> {
        let b_lo = abs_down(other.center);
        if b_lo <= other.radius || b_lo == 0.0 {
            return Err(ArithError::DivisionByZero { center_abs: b_lo, radius: other.radius });
        }
        let q = self.center / other.center;
        // Residual a - q b gives the centre error exactly up to its own rounding.
        let (t, et) = cmul_err(q, other.center);
        let (r, er) = cadd_err(self.center, -t);
        let centre_err = div_up(add_up(add_up(abs_up(r), er), et), b_lo);
        let a_abs = abs_up(self.center);
        let b_up = abs_up(other.center);
        let num = add_up(mul_up(self.radius, b_up), mul_up(a_abs, other.radius));
        let den = (b_lo * (b_lo - other.radius).next_down()).next_down();
        let spread = if num == 0.0 { 0.0 } else { div_up(num, den) };
        let radius = add_up(add_up(spread, centre_err), if q == Complex64::new(0.0, 0.0) { 0.0 } else { UNDERFLOW_FLOOR });
        Ball::new(q, radius).checked()
    }

    pub fn recip(&self) -> Result<Ball, ArithError> {
        Ball::real(1.0).div(self)
    }

    pub fn sqr(&self) -> Ball {
        *self * *self
    }

    /// Principal square root; the ball must avoid `(-inf, 0]`.
    pub fn sqrt(&self) -> Result<Ball, ArithError> {
        let c = self.center;
        // Distance from the centre to the cut (-inf, 0].
        let gap = if c.re >= 0.0 { abs_down(c) } else { c.im.abs() };
        if gap <= self.radius || gap == 0.0 {
            return Err(ArithError::BranchCut);
        }
        let s = c.sqrt();
        // |√x - √c| = |x - c| / |√x + √c|; for a ball off the cut the two roots are
        // less than 90° apart, so the denominator is at least √|c|.
        let spread = if self.radius == 0.0 { 0.0 } else { div_up(self.radius, abs_down(c).sqrt().next_down()) };
        // Centre error from the residual s² - c, via |√c - s| <= |c - s²| / |s| (same argument).
        let (s2, e2) = cmul_err(s, s);
        let (d, ed) = cadd_err(s2, -c);
        let res = add_up(add_up(abs_up(d), e2), ed);
        let centre_err = div_up(res, abs_down(s).next_down());
        Ball::new(s, add_up(add_up(spread, centre_err), UNDERFLOW_FLOOR)).checked()
    }
}

impl Add for Ball {
    type Output = Ball;
    fn add(self, o: Ball) -> Ball {
        let (c, e) = cadd_err(self.center, o.center);
        Ball::new(c, add_up(add_up(self.radius, o.radius), e))
    }
}

impl Sub for Ball {
    type Output = Ball;
    fn sub(self, o: Ball) -> Ball {
        self + (-o)
    }
}

impl Neg for Ball {
    type Output = Ball;
    fn neg(self) -> Ball {
        Ball::new(-self.center, self.radius)
    }
}

impl Mul for Ball {
    type Output = Ball;
    fn mul(self, o: Ball) -> Ball {
        let (c, e) = cmul_err(self.center, o.center);
        let mut r = e;
        if self.radius != 0.0 || o.radius != 0.0 {
            r = add_up(r, mul_up(abs_up(self.center), o.radius));
            r = add_up(r, mul_up(abs_up(o.center), self.radius));
            r = add_up(r, mul_up(self.radius, o.radius));
        }
        if e != 0.0 {
            r = add_up(r, UNDERFLOW_FLOOR);
        }
        Ball::new(c, r)
    }
}

/// Enclosure of `{|z| : z ∈ b}` as `(lower, upper)`.
pub fn ball_norm(b: &Ball) -> (f64, f64) {
    b.abs_bounds()
}

/// Upper bound for the error of evaluating a univalent map `g` at a point
/// displaced by `eps`, given a bound `deriv` on `|g'|` at the nominal point and
/// the Koebe scale `scale` (radius of univalence): `|ε|/(1-|ε|/scale)² · deriv`.
pub fn koebe_composition_bound(eps: f64, scale: f64, deriv: f64) -> Result<f64, ArithError> {
    if !(eps >= 0.0 && scale > 0.0 && deriv >= 0.0) || !eps.is_finite() || !deriv.is_finite() {
        return Err(ArithError::NonFinite);
    }
    if eps >= scale {
        return Err(ArithError::CompositionOutOfRange { eps, scale });
    }
    let t = (1.0 - div_up(eps, scale)).next_down();
    if t <= 0.0 {
        return Err(ArithError::CompositionOutOfRange { eps, scale });
    }
    let v = div_up(mul_up(eps, deriv), (t * t).next_down());
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ArithError::CompositionOutOfRange { eps, scale })
    }
}
