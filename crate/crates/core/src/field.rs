//! BN254 scalar field and conversions between field elements, integers and
//! byte/text encodings.

use std::sync::OnceLock;

use ark_ff::{BigInteger, PrimeField};
use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Element of the BN254 scalar field.
pub type Fe = ark_bn254::Fr;

/// Field modulus as an arbitrary-precision integer.
pub fn modulus() -> &'static BigUint {
    static P: OnceLock<BigUint> = OnceLock::new();
    P.get_or_init(|| BigUint::from_bytes_le(&Fe::MODULUS.to_bytes_le()))
}

/// Miller-Rabin with the first 24 primes as witnesses.
pub fn is_probable_prime(n: &BigUint) -> bool {
    const BASES: [u32; 24] = [
        2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    ];
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for b in BASES {
        let b = BigUint::from(b);
        if *n == b {
            return true;
        }
        if (n % &b).is_zero() {
            return false;
        }
    }
    let n1 = n - 1u32;
    let s = n1.trailing_zeros().unwrap_or(0);
    let d = &n1 >> s;
    'witness: for b in BASES {
        let mut x = BigUint::from(b).modpow(&d, n);
        if x.is_one() || x == n1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Checks the modulus once per process.
pub fn modulus_is_prime() -> bool {
    static OK: OnceLock<bool> = OnceLock::new();
    *OK.get_or_init(|| is_probable_prime(modulus()))
}

pub fn from_i64(v: i64) -> Fe {
    if v >= 0 {
        Fe::from(v as u64)
    } else {
        -Fe::from(v.unsigned_abs())
    }
}

pub fn from_i128(v: i128) -> Fe {
    if v >= 0 {
        Fe::from(v as u128)
    } else {
        -Fe::from(v.unsigned_abs())
    }
}

pub fn from_biguint(v: &BigUint) -> Fe {
    Fe::from_le_bytes_mod_order(&v.to_bytes_le())
}

pub fn from_bigint(v: &BigInt) -> Fe {
    let (sign, mag) = v.clone().into_parts();
    let f = from_biguint(&mag);
    if sign == Sign::Minus {
        -f
    } else {
        f
    }
}

pub fn to_biguint(v: &Fe) -> BigUint {
    BigUint::from_bytes_le(&v.into_bigint().to_bytes_le())
}

/// Signed representative in (-p/2, p/2].
pub fn to_bigint_signed(v: &Fe) -> BigInt {
    let u = to_biguint(v);
    let p = modulus();
    if &u > &(p >> 1) {
        BigInt::from_biguint(Sign::Minus, p - u)
    } else {
        BigInt::from(u)
    }
}

/// Signed interpretation when |v| < 2^127, `None` otherwise.
pub fn to_i128(v: &Fe) -> Option<i128> {
    let limbs = v.into_bigint().0;
    if limbs[2] == 0 && limbs[3] == 0 && limbs[1] >> 63 == 0 {
        return Some(((limbs[1] as u128) << 64 | limbs[0] as u128) as i128);
    }
    let n = (-*v).into_bigint().0;
    if n[2] == 0 && n[3] == 0 && n[1] >> 63 == 0 {
        return Some(-(((n[1] as u128) << 64 | n[0] as u128) as i128));
    }
    None
}

/// Low 64 bits of the canonical representative.
pub fn low_u64(v: &Fe) -> u64 {
    v.into_bigint().0[0]
}

/// Bit `i` of the canonical representative.
pub fn bit(v: &Fe, i: usize) -> bool {
    v.into_bigint().get_bit(i)
}

pub fn to_decimal(v: &Fe) -> String {
    to_biguint(v).to_str_radix(10)
}

pub fn parse_decimal(s: &str) -> Result<Fe> {
    let s = s.trim();
    let u = BigUint::parse_bytes(s.as_bytes(), 10)
        .ok_or_else(|| Error::ParseError(format!("not a decimal integer: {s:?}")))?;
    if &u >= modulus() {
        return Err(Error::ParseError(format!("value not reduced mod p: {s}")));
    }
    Ok(from_biguint(&u))
}

pub fn to_bytes32(v: &Fe) -> [u8; 32] {
    let mut out = [0u8; 32];
    out.copy_from_slice(&v.into_bigint().to_bytes_le());
    out
}

pub fn from_bytes32(b: &[u8]) -> Result<Fe> {
    if b.len() != 32 {
        return Err(Error::ParseError("field element must be 32 bytes".into()));
    }
    let u = BigUint::from_bytes_le(b);
    if &u >= modulus() {
        return Err(Error::ParseError("field element not reduced".into()));
    }
    Ok(from_biguint(&u))
}

/// 2^e as a field element.
pub fn pow2(e: u32) -> Fe {
    let mut acc = Fe::from(1u64);
    let two = Fe::from(2u64);
    for _ in 0..e {
        acc *= two;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modulus_value() {
        assert_eq!(
            modulus().to_str_radix(10),
            "21888242871839275222246405745257275088548364400416034343698204186575808495617"
        );
        assert!(modulus_is_prime());
        assert!(!is_probable_prime(&(modulus() + 2u32)));
        assert!(!is_probable_prime(&BigUint::from(561u32)));
        assert!(is_probable_prime(&BigUint::from(1_000_000_007u64)));
    }

    #[test]
    fn signed_conversions() {
        for v in [0i128, 1, -1, i64::MAX as i128, -(1 << 100), (1 << 126)] {
            assert_eq!(to_i128(&from_i128(v)), Some(v));
        }
        assert_eq!(to_i128(&pow2(200)), None);
        assert_eq!(to_bigint_signed(&from_i64(-5)), BigInt::from(-5));
    }

    #[test]
    fn text_and_bytes() {
        let v = from_i64(-12345);
        assert_eq!(parse_decimal(&to_decimal(&v)).unwrap(), v);
        assert_eq!(from_bytes32(&to_bytes32(&v)).unwrap(), v);
        assert!(parse_decimal(&modulus().to_str_radix(10)).is_err());
        assert!(parse_decimal("12a").is_err());
    }
}
