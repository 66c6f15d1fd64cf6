//! Commitment and encryption primitives over the BN254 scalar field.

pub mod babyjubjub;
pub mod ecies;
pub mod mimc;
pub mod poseidon;

use serde::{Deserialize, Serialize};

pub use babyjubjub::{ecdh, KeyPair, Point, Scalar};
pub use ecies::{ecies_decrypt, ecies_encrypt, Ciphertext};
pub use mimc::mimc_prf;
pub use poseidon::hash as poseidon_hash;

use crate::field::Fe;

/// Poseidon digest of a canonical serialization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Commitment {
    #[serde(with = "babyjubjub::fe_serde")]
    pub digest: Fe,
}

impl Commitment {
    pub fn of(elements: &[Fe]) -> Self {
        Commitment { digest: poseidon::hash(elements) }
    }
}
