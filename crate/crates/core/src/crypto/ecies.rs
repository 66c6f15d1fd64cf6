//! ECIES over Baby Jubjub with a MiMC additive keystream.

use serde::{Deserialize, Serialize};

use super::babyjubjub::{ecdh, Point, Scalar};
use super::mimc::mimc_prf;
use super::poseidon;
use crate::error::{Error, Result};
use crate::field::{self, Fe};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ciphertext {
    pub ephemeral_pk: Point,
    /// Poseidon hash of the shared secret; lets the holder of the wrong key
    /// notice before trusting the plaintext.
    #[serde(with = "super::babyjubjub::fe_serde")]
    pub key_check: Fe,
    #[serde(with = "fe_vec_serde")]
    pub body: Vec<Fe>,
}

pub fn key_check(shared: Fe) -> Fe {
    poseidon::hash(&[shared])
}

pub fn keystream(shared: Fe, len: usize) -> Vec<Fe> {
    (0..len).map(|i| mimc_prf(shared, Fe::from(i as u64))).collect()
}

impl Ciphertext {
    /// Flat field encoding: `[epk.x, epk.y, key_check, body...]`.
    pub fn to_fields(&self) -> Vec<Fe> {
        let mut v = Vec::with_capacity(self.body.len() + 3);
        v.extend([self.ephemeral_pk.x, self.ephemeral_pk.y, self.key_check]);
        v.extend_from_slice(&self.body);
        v
    }

    pub fn from_fields(v: &[Fe]) -> Result<Self> {
        if v.len() < 3 {
            return Err(Error::ParseError("ciphertext needs at least 3 elements".into()));
        }
        Ok(Ciphertext {
            ephemeral_pk: Point { x: v[0], y: v[1] },
            key_check: v[2],
            body: v[3..].to_vec(),
        })
    }

    pub fn digest(&self) -> Fe {
        poseidon::hash(&self.to_fields())
    }

    /// Decimal text: one value per line, in `to_fields` order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for v in self.to_fields() {
            s.push_str(&field::to_decimal(&v));
            s.push('\n');
        }
        s
    }

    pub fn from_text(s: &str) -> Result<Self> {
        let vals = s
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(field::parse_decimal)
            .collect::<Result<Vec<_>>>()?;
        Self::from_fields(&vals)
    }
}

/// Field-encoded length of a ciphertext carrying `n` elements.
pub fn encoded_len(n: usize) -> usize {
    n + 3
}

/// Digest of the all-zero vector published on the reject path.
pub fn zero_digest(n: usize) -> Fe {
    poseidon::hash(&vec![Fe::from(0u64); encoded_len(n)])
}

pub fn ecies_encrypt(pk: &Point, plaintext: &[Fe], ephemeral_sk: &Scalar) -> Result<Ciphertext> {
    if plaintext.is_empty() {
        return Err(Error::DomainError("empty plaintext".into()));
    }
    let shared = ecdh(ephemeral_sk, pk)?;
    let ks = keystream(shared, plaintext.len());
    Ok(Ciphertext {
        ephemeral_pk: Point::generator().mul(ephemeral_sk),
        key_check: key_check(shared),
        body: plaintext.iter().zip(ks).map(|(m, k)| *m + k).collect(),
    })
}

/// Inverse of `ecies_encrypt`. A wrong key yields garbage, not an error;
/// use `ecies_decrypt_checked` to detect it.
pub fn ecies_decrypt(sk: &Scalar, c: &Ciphertext) -> Result<Vec<Fe>> {
    let shared = ecdh(sk, &c.ephemeral_pk)?;
    let ks = keystream(shared, c.body.len());
    Ok(c.body.iter().zip(ks).map(|(b, k)| *b - k).collect())
}

pub fn ecies_decrypt_checked(sk: &Scalar, c: &Ciphertext) -> Result<Vec<Fe>> {
    let shared = ecdh(sk, &c.ephemeral_pk)?;
    if key_check(shared) != c.key_check {
        return Err(Error::DigestMismatch);
    }
    ecies_decrypt(sk, c)
}

pub(crate) mod fe_vec_serde {
    use serde::{Deserialize, Deserializer, Serializer, ser::SerializeSeq};

    use crate::field::{self, Fe};

    pub fn serialize<S: Serializer>(v: &[Fe], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&field::to_decimal(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Fe>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| field::parse_decimal(s).map_err(serde::de::Error::custom))
            .collect()
    }
}
