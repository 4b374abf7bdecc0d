//! Binary fixed-point reals on top of `BigInt`.
//!
//! A [`Fix`] stores `m · 2^-prec`. All operands of a binary operation must
//! share the same precision. Multiplication and division truncate toward
//! negative infinity, so every operation is accurate to one unit in the last
//! place; callers that need rigour track that unit explicitly.

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fix {
    m: BigInt,
    prec: u32,
}

impl Fix {
    pub fn zero(prec: u32) -> Self {
        Fix { m: BigInt::zero(), prec }
    }

    pub fn one(prec: u32) -> Self {
        Fix { m: BigInt::one() << prec, prec }
    }

    pub fn from_int(v: i64, prec: u32) -> Self {
        Fix { m: BigInt::from(v) << prec, prec }
    }

    /// Exact conversion of a finite double.
    pub fn from_f64(x: f64, prec: u32) -> Self {
        assert!(x.is_finite(), "non-finite input to Fix::from_f64");
        if x == 0.0 {
            return Fix::zero(prec);
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1 } else { 1 };
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp - 1075)
        };
        let mut m = BigInt::from(mant) * sign;
        let shift = e + prec as i64;
        if shift >= 0 {
            m <<= shift as usize;
        } else {
            m >>= (-shift) as usize;
        }
        Fix { m, prec }
    }

    /// Parses a plain decimal literal such as `-0.3995352805`.
    /// The result is the truncation of the exact decimal value.
    pub fn parse_decimal(s: &str, prec: u32) -> Option<Self> {
        let s = s.trim();
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return None;
        }
        let digits = format!("{}{}", int_part, frac_part);
        let n = BigInt::parse_bytes(if digits.is_empty() { b"0" } else { digits.as_bytes() }, 10)?;
        let den = BigInt::from(10u32).pow(frac_part.len() as u32);
        let mut m = (n << prec) / den;
        if neg {
            m = -m;
        }
        Some(Fix { m, prec })
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.m
    }

    /// One unit in the last place.
    pub fn ulp(prec: u32) -> Self {
        Fix { m: BigInt::one(), prec }
    }

    pub fn is_negative(&self) -> bool {
        self.m.sign() == Sign::Minus
    }

    pub fn abs(&self) -> Self {
        Fix { m: self.m.abs(), prec: self.prec }
    }

    pub fn div(&self, other: &Fix) -> Fix {
        assert_eq!(self.prec, other.prec);
        assert!(!other.m.is_zero(), "division by zero");
        Fix {
            m: (&self.m << self.prec as usize) / &other.m,
            prec: self.prec,
        }
    }

    pub fn mul_int(&self, k: i64) -> Fix {
        Fix { m: &self.m * k, prec: self.prec }
    }

    pub fn powi(&self, n: u32) -> Fix {
        let mut acc = Fix::one(self.prec);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Nearest double.
    pub fn to_f64(&self) -> f64 {
        let (lo, hi) = self.f64_bracket();
        if lo == hi {
            return lo;
        }
        let dl = self - &Fix::from_f64(lo, self.prec);
        let dh = &Fix::from_f64(hi, self.prec) - self;
        if dl <= dh {
            lo
        } else {
            hi
        }
    }

    /// Largest double not exceeding the value, and smallest not below it.
    pub fn f64_bracket(&self) -> (f64, f64) {
        let mut x = self.approx();
        loop {
            let fx = Fix::from_f64(x, self.prec);
            match fx.cmp(self) {
                Ordering::Equal => return (x, x),
                Ordering::Less => {
                    let up = x.next_up();
                    if Fix::from_f64(up, self.prec) >= *self {
                        return if Fix::from_f64(up, self.prec) == *self { (up, up) } else { (x, up) };
                    }
                    x = up;
                }
                Ordering::Greater => {
                    let dn = x.next_down();
                    if Fix::from_f64(dn, self.prec) <= *self {
                        return if Fix::from_f64(dn, self.prec) == *self { (dn, dn) } else { (dn, x) };
                    }
                    x = dn;
                }
            }
        }
    }

    /// Decimal string with `digits` digits after the point (truncated).
    pub fn to_decimal(&self, digits: usize) -> String {
        let neg = self.is_negative();
        let a = self.m.abs();
        let int = &a >> self.prec as usize;
        let frac = &a - (&int << self.prec as usize);
        let scaled = (frac * BigInt::from(10u32).pow(digits as u32)) >> self.prec as usize;
        let mut fs = scaled.to_string();
        while fs.len() < digits {
            fs.insert(0, '0');
        }
        format!("{}{}.{}", if neg { "-" } else { "" }, int, fs)
    }

    /// Value as `f64`, saturating; meant for diagnostics only.
    pub fn approx(&self) -> f64 {
        let shift = self.m.bits().saturating_sub(60);
        let top = (&self.m >> shift as usize).to_f64().unwrap_or(0.0);
        let e = shift as i32 - self.prec as i32;
        // Split the exponent so that neither factor under- or overflows.
        top * 2f64.powi(e / 2) * 2f64.powi(e - e / 2)
    }
}

impl PartialOrd for Fix {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fix {
    fn cmp(&self, other: &Self) -> Ordering {
        assert_eq!(self.prec, other.prec);
        self.m.cmp(&other.m)
    }
}

impl<'a> Add<&'a Fix> for &'a Fix {
    type Output = Fix;
    fn add(self, o: &'a Fix) -> Fix {
        assert_eq!(self.prec, o.prec);
        Fix { m: &self.m + &o.m, prec: self.prec }
    }
}

impl<'a> Sub<&'a Fix> for &'a Fix {
    type Output = Fix;
    fn sub(self, o: &'a Fix) -> Fix {
        assert_eq!(self.prec, o.prec);
        Fix { m: &self.m - &o.m, prec: self.prec }
    }
}

impl<'a> Mul<&'a Fix> for &'a Fix {
    type Output = Fix;
    fn mul(self, o: &'a Fix) -> Fix {
        assert_eq!(self.prec, o.prec);
        Fix { m: (&self.m * &o.m) >> self.prec as usize, prec: self.prec }
    }
}

impl Neg for &Fix {
    type Output = Fix;
    fn neg(self) -> Fix {
        Fix { m: -&self.m, prec: self.prec }
    }
}

impl Add for Fix {
    type Output = Fix;
    fn add(self, o: Fix) -> Fix {
        &self + &o
    }
}

impl Sub for Fix {
    type Output = Fix;
    fn sub(self, o: Fix) -> Fix {
        &self - &o
    }
}

impl Mul for Fix {
    type Output = Fix;
    fn mul(self, o: Fix) -> Fix {
        &self * &o
    }
}

impl Neg for Fix {
    type Output = Fix;
    fn neg(self) -> Fix {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_roundtrip() {
        let x = Fix::parse_decimal("-0.3995352805231344898575", 200).unwrap();
        assert_eq!(x.to_decimal(22), "-0.3995352805231344898574");
        assert!((x.approx() + 0.3995352805231345).abs() < 1e-16);
    }

    #[test]
    fn f64_exact() {
        for &v in &[1.0, -2.5, 0.1, 1e-300, 123456.789] {
            let f = Fix::from_f64(v, 1200);
            assert_eq!(f.to_f64(), v);
            assert_eq!(f.f64_bracket(), (v, v));
        }
    }

    #[test]
    fn bracket_straddles() {
        let third = Fix::one(300).div(&Fix::from_int(3, 300));
        let (lo, hi) = third.f64_bracket();
        assert!(Fix::from_f64(lo, 300) < third && third < Fix::from_f64(hi, 300));
        assert_eq!(hi, lo.next_up());
    }

    #[test]
    fn arithmetic() {
        let p = 128;
        let a = Fix::from_int(7, p);
        let b = Fix::from_int(2, p);
        assert_eq!((&a * &b).to_f64(), 14.0);
        assert_eq!(a.div(&b).to_f64(), 3.5);
        assert_eq!((&a - &b).to_f64(), 5.0);
        assert_eq!(b.powi(10).to_f64(), 1024.0);
    }
}
