//! MiMC-7 (circomlib `mimc7`): x -> x^7 over 91 rounds with Keccak-derived
//! round constants, used as a PRF for the additive keystream.

use std::sync::OnceLock;

use ark_ff::{Field, PrimeField};
use sha3::{Digest, Keccak256};

use crate::field::Fe;

pub const ROUNDS: usize = 91;
const SEED: &[u8] = b"mimc";

/// Round constants; `constants()[0]` is zero.
pub fn constants() -> &'static [Fe; ROUNDS] {
    static C: OnceLock<[Fe; ROUNDS]> = OnceLock::new();
    C.get_or_init(|| {
        let mut out = [Fe::from(0u64); ROUNDS];
        let mut c: [u8; 32] = Keccak256::digest(SEED).into();
        for slot in out.iter_mut().skip(1) {
            c = Keccak256::digest(c).into();
            *slot = Fe::from_be_bytes_mod_order(&c);
        }
        out
    })
}

#[inline]
fn pow7(t: Fe) -> Fe {
    let t2 = t.square();
    let t4 = t2.square();
    t4 * t2 * t
}

/// Keyed permutation of `x`.
pub fn mimc7(x: Fe, key: Fe) -> Fe {
    let c = constants();
    let mut r = Fe::from(0u64);
    for (i, ci) in c.iter().enumerate() {
        let t = if i == 0 { x + key } else { r + key + ci };
        r = pow7(t);
    }
    r + key
}

/// Keystream element `index` under `key`.
pub fn mimc_prf(key: Fe, index: Fe) -> Fe {
    mimc7(index, key)
}
