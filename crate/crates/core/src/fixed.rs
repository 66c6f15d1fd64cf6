//! Fixed-point reals embedded in the prime field.
//!
//! A real `x` is stored as the signed integer `round(x * 2^s)`; negative
//! values embed as `p - |raw|`. Magnitudes stay below `2^(TOTAL_BITS - 1)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{self, Fe};

pub const SCALE_BITS: u32 = 20;
pub const TOTAL_BITS: u32 = 64;
/// Exclusive bound on |raw|.
pub const RAW_BOUND: i128 = 1 << (TOTAL_BITS - 1);
pub const ONE_RAW: i64 = 1 << SCALE_BITS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FixedPoint {
    raw: i64,
    scale_bits: u32,
}

impl Default for FixedPoint {
    fn default() -> Self {
        FixedPoint::ZERO
    }
}

fn check_raw(raw: i128) -> Result<i64> {
    if raw.abs() >= RAW_BOUND {
        Err(Error::RangeOverflow)
    } else {
        Ok(raw as i64)
    }
}

impl FixedPoint {
    pub const ZERO: FixedPoint = FixedPoint { raw: 0, scale_bits: SCALE_BITS };
    pub const ONE: FixedPoint = FixedPoint { raw: ONE_RAW, scale_bits: SCALE_BITS };

    pub fn encode(x: f64) -> Result<Self> {
        Self::encode_scaled(x, SCALE_BITS)
    }

    pub fn encode_scaled(x: f64, scale_bits: u32) -> Result<Self> {
        assert!(TOTAL_BITS > 2 * scale_bits, "scale too large for range budget");
        let scaled = (x * (scale_bits as f64).exp2()).round();
        if !scaled.is_finite() || scaled.abs() >= RAW_BOUND as f64 {
            return Err(Error::RangeOverflow);
        }
        Ok(FixedPoint { raw: scaled as i64, scale_bits })
    }

    pub fn from_raw(raw: i64) -> Result<Self> {
        Self::from_raw_scaled(raw as i128, SCALE_BITS)
    }

    pub fn from_raw_scaled(raw: i128, scale_bits: u32) -> Result<Self> {
        Ok(FixedPoint { raw: check_raw(raw)?, scale_bits })
    }

    pub fn from_int(v: i64) -> Result<Self> {
        Self::from_raw_scaled((v as i128) << SCALE_BITS, SCALE_BITS)
    }

    /// Interprets a field element as a fixed-point value.
    pub fn from_field(v: &Fe, scale_bits: u32) -> Result<Self> {
        let raw = field::to_i128(v).ok_or(Error::InvalidEncoding)?;
        if raw.abs() >= RAW_BOUND {
            return Err(Error::InvalidEncoding);
        }
        Ok(FixedPoint { raw: raw as i64, scale_bits })
    }

    pub fn raw(&self) -> i64 {
        self.raw
    }

    pub fn scale_bits(&self) -> u32 {
        self.scale_bits
    }

    pub fn field(&self) -> Fe {
        field::from_i64(self.raw)
    }

    pub fn decode(&self) -> f64 {
        self.raw as f64 / (self.scale_bits as f64).exp2()
    }

    fn same_scale(&self, other: &Self) {
        assert_eq!(self.scale_bits, other.scale_bits, "mixed fixed-point scales");
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_scale(other);
        Self::from_raw_scaled(self.raw as i128 + other.raw as i128, self.scale_bits)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_scale(other);
        Self::from_raw_scaled(self.raw as i128 - other.raw as i128, self.scale_bits)
    }

    /// Product rounded toward negative infinity.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_scale(other);
        let prod = self.raw as i128 * other.raw as i128;
        Self::from_raw_scaled(prod >> self.scale_bits, self.scale_bits)
    }

    /// Quotient rounded toward negative infinity.
    pub fn div(&self, other: &Self) -> Result<Self> {
        self.same_scale(other);
        if other.raw == 0 {
            return Err(Error::DomainError("division by zero".into()));
        }
        let (num, den) = ((self.raw as i128) << self.scale_bits, other.raw as i128);
        let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
        Self::from_raw_scaled(num.div_euclid(den), self.scale_bits)
    }

    /// Natural log, evaluated in double precision and re-encoded.
    pub fn ln(&self) -> Result<Self> {
        if self.raw <= 0 {
            return Err(Error::DomainError(format!("ln of non-positive value {}", self.decode())));
        }
        Self::encode_scaled(self.decode().ln(), self.scale_bits)
    }
}

impl fmt::Display for FixedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}", self.decode())
    }
}

pub fn encode(x: f64, scale_bits: u32) -> Result<FixedPoint> {
    FixedPoint::encode_scaled(x, scale_bits)
}

pub fn decode(x: &FixedPoint) -> f64 {
    x.decode()
}

pub fn fxp_add(a: &FixedPoint, b: &FixedPoint) -> Result<FixedPoint> {
    a.add(b)
}

pub fn fxp_mul(a: &FixedPoint, b: &FixedPoint) -> Result<FixedPoint> {
    a.mul(b)
}

pub fn fxp_ln(x: &FixedPoint) -> Result<FixedPoint> {
    x.ln()
}

/// `round(ln(c) * 2^20)` for a positive integer count, the table value used
/// by both the native estimator and the circuit.
pub fn ln_count_raw(c: u64) -> i64 {
    assert!(c > 0);
    ((c as f64).ln() * (SCALE_BITS as f64).exp2()).round() as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p_minus(v: u64) -> Fe {
        -Fe::from(v)
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode(1.0, 20).unwrap().field(), Fe::from(1048576u64));
        assert_eq!(encode(0.0, 20).unwrap().field(), Fe::from(0u64));
        assert_eq!(encode(-1.5, 20).unwrap().field(), p_minus(1572864));
        assert_eq!(encode(2f64.powi(43), 20), Err(Error::RangeOverflow));
        assert_eq!(encode(f64::NAN, 20), Err(Error::RangeOverflow));
    }

    #[test]
    fn decode_examples() {
        let one = FixedPoint::from_field(&Fe::from(1048576u64), 20).unwrap();
        assert_eq!(one.decode(), 1.0);
        let neg = FixedPoint::from_field(&p_minus(1048576), 20).unwrap();
        assert_eq!(neg.decode(), -1.0);
        let pi = encode(3.141592, 20).unwrap().decode();
        assert!((pi - 3.141592).abs() <= 2f64.powi(-21));
        assert_eq!(
            FixedPoint::from_field(&field::pow2(100), 20),
            Err(Error::InvalidEncoding)
        );
        assert_eq!(
            FixedPoint::from_field(&field::pow2(63), 20),
            Err(Error::InvalidEncoding)
        );
    }

    #[test]
    fn arithmetic_examples() {
        let f = |x: f64| encode(x, 20).unwrap();
        assert_eq!(f(1.0).add(&f(2.0)).unwrap().decode(), 3.0);
        assert_eq!(f(1.5).add(&f(-1.5)).unwrap().decode(), 0.0);
        assert_eq!(f(0.25).add(&f(0.125)).unwrap().decode(), 0.375);
        assert_eq!(f(2.0).mul(&f(3.0)).unwrap().decode(), 6.0);
        assert_eq!(f(0.5).mul(&f(0.5)).unwrap().decode(), 0.25);
        assert_eq!(f(-1.0).mul(&FixedPoint::from_raw(1).unwrap()).unwrap().raw(), -1);
        // floor, not truncation toward zero
        let tiny = FixedPoint::from_raw(-1).unwrap();
        assert_eq!(tiny.mul(&f(0.5)).unwrap().raw(), -1);
        let big = FixedPoint::from_raw(i64::MAX).unwrap();
        assert_eq!(big.add(&big), Err(Error::RangeOverflow));
        assert_eq!(f(1.0).div(&f(4.0)).unwrap().decode(), 0.25);
        assert_eq!(f(-1.0).div(&f(3.0)).unwrap().raw(), -349526);
        assert_eq!(f(1.0).div(&f(-3.0)).unwrap().raw(), -349526);
    }

    #[test]
    fn ln_examples() {
        let f = |x: f64| encode(x, 20).unwrap();
        assert_eq!(f(1.0).ln().unwrap().decode(), 0.0);
        assert!((f(std::f64::consts::E).ln().unwrap().decode() - 1.0).abs() <= 2f64.powi(-18));
        assert!((f(0.5).ln().unwrap().decode() + 0.693147).abs() <= 2f64.powi(-18));
        assert!(matches!(f(0.0).ln(), Err(Error::DomainError(_))));
        assert!(matches!(f(-2.0).ln(), Err(Error::DomainError(_))));
        assert_eq!(ln_count_raw(1), 0);
        assert_eq!(ln_count_raw(2), 726817);
    }

    fn raw_in(bits: u32) -> impl Strategy<Value = i64> {
        let b = 1i64 << bits;
        -b + 1..b
    }

    proptest! {
        #[test]
        fn add_is_exact(a in raw_in(61), b in raw_in(61)) {
            let x = FixedPoint::from_raw(a).unwrap();
            let y = FixedPoint::from_raw(b).unwrap();
            prop_assert_eq!(x.add(&y).unwrap().raw(), a + b);
            prop_assert_eq!(fxp_add(&x, &y).unwrap().field(), x.field() + y.field());
        }

        #[test]
        fn mul_error_bound(a in raw_in(40), b in raw_in(42)) {
            let x = FixedPoint::from_raw(a).unwrap();
            let y = FixedPoint::from_raw(b).unwrap();
            if let Ok(z) = x.mul(&y) {
                let exact = (a as i128 * b as i128) as f64 / 2f64.powi(40);
                prop_assert!((z.decode() - exact).abs() <= 2f64.powi(-20) * (1.0 + 1e-9) + exact.abs() * 1e-15);
            }
        }

        #[test]
        fn encode_roundtrip(x in -1.0e9f64..1.0e9) {
            let e = encode(x, 20).unwrap();
            prop_assert!((e.decode() - x).abs() <= 2f64.powi(-21) + x.abs() * 1e-15);
            prop_assert_eq!(FixedPoint::from_field(&e.field(), 20).unwrap(), e);
        }

        #[test]
        fn field_axioms(a in any::<u64>(), b in any::<u64>(), c in any::<i64>()) {
            let (a, b, c) = (Fe::from(a), Fe::from(b) * Fe::from(a) + Fe::from(7u64), field::from_i64(c));
            prop_assert_eq!((a + b) + c, a + (b + c));
            prop_assert_eq!(a * (b + c), a * b + a * c);
        }
    }
}
