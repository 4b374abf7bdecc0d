//! Independent reference arithmetic for the integration tests.
//!
//! `Dd` is a double-double number (about 32 significant digits); `Cdd` is a
//! complex double-double. `Oracle` evaluates `F` from the decimal coefficients
//! at double-double precision, using the functional equation away from the
//! origin. It shares no evaluation code with the library.

#![allow(dead_code)]

use feigencert::bigfix::Fix;
use feigencert::map::LAMBDA_DIGITS;
use feigencert::LanfordPolynomial;
use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn from_fix(x: &Fix) -> Dd {
        let hi = x.to_f64();
        let rest = x.clone() - Fix::from_f64(hi, x.prec());
        Dd { hi, lo: rest.to_f64() }
    }

    pub fn parse(s: &str) -> Dd {
        Dd::from_fix(&Fix::parse_decimal(s, 160).expect("decimal"))
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn recip(self) -> Dd {
        // Two Newton steps from the double reciprocal.
        let mut x = Dd::from_f64(1.0 / self.hi);
        for _ in 0..2 {
            x = x + x * (Dd::ONE - self * x);
        }
        x
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    pub fn new(re: Dd, im: Dd) -> Cdd {
        Cdd { re, im }
    }

    pub fn from_c64(z: Complex64) -> Cdd {
        Cdd { re: Dd::from_f64(z.re), im: Dd::from_f64(z.im) }
    }

    pub fn real(x: Dd) -> Cdd {
        Cdd { re: x, im: Dd::ZERO }
    }

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn sqr(self) -> Cdd {
        self * self
    }

    pub fn scale(self, k: Dd) -> Cdd {
        Cdd { re: self.re * k, im: self.im * k }
    }

    pub fn norm(self) -> f64 {
        self.to_c64().norm()
    }

    pub fn recip(self) -> Cdd {
        let d = (self.re * self.re + self.im * self.im).recip();
        Cdd { re: self.re * d, im: -(self.im * d) }
    }
}

impl Add for Cdd {
    type Output = Cdd;
    fn add(self, o: Cdd) -> Cdd {
        Cdd { re: self.re + o.re, im: self.im + o.im }
    }
}

impl Sub for Cdd {
    type Output = Cdd;
    fn sub(self, o: Cdd) -> Cdd {
        Cdd { re: self.re - o.re, im: self.im - o.im }
    }
}

impl Mul for Cdd {
    type Output = Cdd;
    fn mul(self, o: Cdd) -> Cdd {
        Cdd { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }
}

/// Radius below which the polynomial is used directly; its truncation error
/// there is far below double-double resolution of the iterates we follow.
pub const DIRECT_RADIUS: f64 = 1.2;
const MAX_DEPTH: u32 = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleError {
    /// The argument left the region where the recursion is affordable.
    OutOfRange,
}

pub struct Oracle {
    pub coeffs: Vec<Dd>,
    pub lambda: Dd,
    pub inv_lambda: Dd,
}

impl Oracle {
    pub fn new(poly: &LanfordPolynomial) -> Oracle {
        let coeffs = poly.decimals.iter().map(|s| Dd::parse(s)).collect();
        let lambda = Dd::parse(LAMBDA_DIGITS);
        Oracle { coeffs, lambda, inv_lambda: lambda.recip() }
    }

    pub fn bundled() -> Oracle {
        Oracle::new(&LanfordPolynomial::bundled().expect("bundled coefficients"))
    }

    fn horner(&self, z: Cdd) -> Cdd {
        let w = z.sqr();
        let mut acc = Cdd::real(*self.coeffs.last().unwrap());
        for a in self.coeffs.iter().rev().skip(1) {
            acc = acc * w + Cdd::real(*a);
        }
        acc
    }

    /// `F(z)` via `F(z) = -(1/λ) F(F(λz))` until the argument is small.
    pub fn f(&self, z: Cdd) -> Result<Cdd, OracleError> {
        self.f_depth(z, 0)
    }

    fn f_depth(&self, z: Cdd, depth: u32) -> Result<Cdd, OracleError> {
        let r = z.norm();
        if !r.is_finite() || depth > MAX_DEPTH {
            return Err(OracleError::OutOfRange);
        }
        if r <= DIRECT_RADIUS {
            return Ok(self.horner(z));
        }
        let inner = self.f_depth(z.scale(self.lambda), depth + 1)?;
        let outer = self.f_depth(inner, depth + 1)?;
        Ok(outer.scale(-self.inv_lambda))
    }

    /// `F` iterated `count` times, with a callback on every iterate.
    pub fn iterate(&self, mut z: Cdd, count: u64, mut visit: impl FnMut(Cdd) -> bool) -> Result<Cdd, OracleError> {
        for _ in 0..count {
            z = self.f(z)?;
            if !visit(z) {
                break;
            }
        }
        Ok(z)
    }

    /// `F` and `F'` at `z`, from a centred difference on a tiny scale
    /// (only used to sanity-check derivative enclosures).
    pub fn df(&self, z: Cdd) -> Result<Cdd, OracleError> {
        let h = Dd::from_f64(1e-12);
        let a = self.f(z + Cdd::real(h))?;
        let b = self.f(z - Cdd::real(h))?;
        Ok((a - b).scale(Dd::from_f64(0.5e12)))
    }
}

/// Deterministic generator for sampling tests.
pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
