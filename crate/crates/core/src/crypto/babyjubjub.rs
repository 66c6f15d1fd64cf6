//! Baby Jubjub: the twisted Edwards curve `a x^2 + y^2 = 1 + d x^2 y^2` over
//! the BN254 scalar field, with its prime-order subgroup generated by Base8.

use std::sync::OnceLock;

use ark_ff::{Field, Zero};
use num_bigint::BigUint;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{self, Fe};

pub const A: u64 = 168700;
pub const D: u64 = 168696;
/// Bit length of the subgroup order.
pub const SCALAR_BITS: usize = 251;

const ORDER_DEC: &str =
    "2736030358979909402780800718157159386076813972158567259200215660948447373041";
const BASE8_X: &str =
    "5299619240641551281634865583518297030282874472190772894086521144482721001553";
const BASE8_Y: &str =
    "16950150798460657717958625567821834550301663161624707787222815936182638968203";

pub fn subgroup_order() -> &'static BigUint {
    static L: OnceLock<BigUint> = OnceLock::new();
    L.get_or_init(|| BigUint::parse_bytes(ORDER_DEC.as_bytes(), 10).unwrap())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Point {
    #[serde(with = "fe_serde")]
    pub x: Fe,
    #[serde(with = "fe_serde")]
    pub y: Fe,
}

/// Scalar modulo the subgroup order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Scalar(BigUint);

impl Scalar {
    pub fn new(v: BigUint) -> Self {
        Scalar(v % subgroup_order())
    }

    pub fn from_u64(v: u64) -> Self {
        Scalar::new(BigUint::from(v))
    }

    /// Uniform nonzero scalar.
    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        loop {
            let mut bytes = [0u8; 32];
            rng.fill_bytes(&mut bytes);
            bytes[31] &= 0x07;
            let v = BigUint::from_bytes_le(&bytes);
            if &v < subgroup_order() && !v.is_zero() {
                return Scalar(v);
            }
        }
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    /// Little-endian bits, `SCALAR_BITS` long.
    pub fn bits_le(&self) -> Vec<bool> {
        (0..SCALAR_BITS).map(|i| self.0.bit(i as u64)).collect()
    }

    pub fn to_decimal(&self) -> String {
        self.0.to_str_radix(10)
    }

    pub fn parse_decimal(s: &str) -> Result<Self> {
        let v = BigUint::parse_bytes(s.trim().as_bytes(), 10)
            .ok_or_else(|| Error::ParseError(format!("bad scalar {s:?}")))?;
        if &v >= subgroup_order() {
            return Err(Error::ParseError("scalar not reduced".into()));
        }
        Ok(Scalar(v))
    }
}

impl Point {
    pub fn identity() -> Self {
        Point { x: Fe::zero(), y: Fe::from(1u64) }
    }

    pub fn generator() -> Self {
        static G: OnceLock<Point> = OnceLock::new();
        *G.get_or_init(|| Point {
            x: field::parse_decimal(BASE8_X).unwrap(),
            y: field::parse_decimal(BASE8_Y).unwrap(),
        })
    }

    pub fn is_identity(&self) -> bool {
        *self == Point::identity()
    }

    pub fn is_on_curve(&self) -> bool {
        let (x2, y2) = (self.x.square(), self.y.square());
        Fe::from(A) * x2 + y2 == Fe::from(1u64) + Fe::from(D) * x2 * y2
    }

    pub fn is_in_subgroup(&self) -> bool {
        self.is_on_curve() && self.mul_biguint(subgroup_order()).is_identity()
    }

    /// Valid public key: on curve, in the subgroup and not the identity.
    pub fn validate(&self) -> Result<()> {
        if self.is_identity() || !self.is_in_subgroup() {
            return Err(Error::InvalidPoint);
        }
        Ok(())
    }

    /// Complete twisted Edwards addition.
    pub fn add(&self, other: &Point) -> Point {
        let k = Fe::from(D) * self.x * other.x * self.y * other.y;
        let one = Fe::from(1u64);
        let x = (self.x * other.y + self.y * other.x) * (one + k).inverse().unwrap();
        let y = (self.y * other.y - Fe::from(A) * self.x * other.x) * (one - k).inverse().unwrap();
        Point { x, y }
    }

    pub fn neg(&self) -> Point {
        Point { x: -self.x, y: self.y }
    }

    /// Double-and-add in projective coordinates with one final inversion.
    pub fn mul_biguint(&self, k: &BigUint) -> Point {
        let base = Projective::from(self);
        let mut acc = Projective::from(&Point::identity());
        for i in (0..k.bits()).rev() {
            acc = acc.add(&acc);
            if k.bit(i) {
                acc = acc.add(&base);
            }
        }
        acc.to_affine()
    }

    pub fn mul(&self, k: &Scalar) -> Point {
        self.mul_biguint(&k.0)
    }
}

/// `(X : Y : Z)` with `x = X / Z`, `y = Y / Z`.
#[derive(Clone, Copy)]
struct Projective {
    x: Fe,
    y: Fe,
    z: Fe,
}

impl From<&Point> for Projective {
    fn from(p: &Point) -> Self {
        Projective { x: p.x, y: p.y, z: Fe::from(1u64) }
    }
}

impl Projective {
    /// Complete addition (add-2008-bbjlp).
    fn add(&self, o: &Projective) -> Projective {
        let a = self.z * o.z;
        let b = a.square();
        let c = self.x * o.x;
        let d = self.y * o.y;
        let e = Fe::from(D) * c * d;
        let f = b - e;
        let g = b + e;
        Projective {
            x: a * f * ((self.x + self.y) * (o.x + o.y) - c - d),
            y: a * g * (d - Fe::from(A) * c),
            z: f * g,
        }
    }

    fn to_affine(self) -> Point {
        let zi = self.z.inverse().expect("complete addition keeps Z nonzero");
        Point { x: self.x * zi, y: self.y * zi }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyPair {
    pub sk: Scalar,
    pub pk: Point,
}

impl KeyPair {
    pub fn from_secret(sk: Scalar) -> Self {
        let pk = Point::generator().mul(&sk);
        KeyPair { sk, pk }
    }

    pub fn generate<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::from_secret(Scalar::random(rng))
    }
}

/// Shared secret: x-coordinate of `sk_a * pk_b`.
pub fn ecdh(sk_a: &Scalar, pk_b: &Point) -> Result<Fe> {
    pk_b.validate()?;
    Ok(pk_b.mul(sk_a).x)
}

pub(crate) mod fe_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::field::{self, Fe};

    pub fn serialize<S: Serializer>(v: &Fe, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&field::to_decimal(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Fe, D::Error> {
        let s = String::deserialize(d)?;
        field::parse_decimal(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn base_point_properties() {
        let g = Point::generator();
        assert!(g.is_on_curve());
        assert!(g.is_in_subgroup());
        assert!(!g.mul_biguint(&BigUint::from(3u32)).is_identity());
    }

    #[test]
    fn group_laws() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let g = Point::generator();
        for _ in 0..5 {
            let p = g.mul(&Scalar::random(&mut rng));
            let q = g.mul(&Scalar::random(&mut rng));
            let r = g.mul(&Scalar::random(&mut rng));
            assert_eq!(p.add(&q).add(&r), p.add(&q.add(&r)));
            assert_eq!(p.add(&q), q.add(&p));
            assert_eq!(p.add(&Point::identity()), p);
            assert!(p.add(&p.neg()).is_identity());
        }
    }

    #[test]
    fn rejects_bad_points() {
        let bad = Point { x: Fe::from(1u64), y: Fe::from(1u64) };
        assert_eq!(ecdh(&Scalar::from_u64(5), &bad), Err(Error::InvalidPoint));
        assert_eq!(ecdh(&Scalar::from_u64(5), &Point::identity()), Err(Error::InvalidPoint));
    }

    #[test]
    fn identity_scalar() {
        let pk = Point::generator().mul(&Scalar::from_u64(42));
        assert_eq!(ecdh(&Scalar::from_u64(1), &pk).unwrap(), pk.x);
    }
}
