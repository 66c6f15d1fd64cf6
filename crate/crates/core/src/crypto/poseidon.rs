//! Poseidon permutation over BN254 with width 3 (circomlib parameters) and
//! a rate-2 sponge.
//!
//! Sponge rule: absorb two elements per permutation into state[1..3]. When
//! the last block holds a single element it is zero-padded and 1 is added to
//! the capacity element; empty input sets the capacity element to 2. The
//! digest is state[0]. For two inputs this coincides with circomlib's
//! `Poseidon(2)`.

use std::sync::OnceLock;

use ark_ff::Field;
use num_bigint::BigUint;

use crate::field::{self, Fe};

pub const WIDTH: usize = 3;
pub const RATE: usize = 2;
pub const FULL_ROUNDS: usize = 8;
pub const PARTIAL_ROUNDS: usize = 57;

pub struct PoseidonParams {
    /// Round constants, `WIDTH` per round.
    pub rc: Vec<Fe>,
    pub mds: [[Fe; WIDTH]; WIDTH],
}

/// Self-shrinking Grain LFSR used to derive Poseidon constants.
struct Grain {
    state: Vec<u8>,
}

impl Grain {
    fn new(n: u32, t: u32, rf: u32, rp: u32) -> Self {
        let mut bits = Vec::with_capacity(80);
        let mut push = |v: u32, width: u32| {
            for i in (0..width).rev() {
                bits.push(((v >> i) & 1) as u8);
            }
        };
        push(1, 2);
        push(0, 4);
        push(n, 12);
        push(t, 12);
        push(rf, 10);
        push(rp, 10);
        bits.extend(std::iter::repeat(1).take(30));
        let mut g = Grain { state: bits };
        for _ in 0..160 {
            g.step();
        }
        g
    }

    fn step(&mut self) -> u8 {
        let s = &self.state;
        let nb = s[62] ^ s[51] ^ s[38] ^ s[23] ^ s[13] ^ s[0];
        self.state.remove(0);
        self.state.push(nb);
        nb
    }

    fn bit(&mut self) -> u8 {
        loop {
            let b1 = self.step();
            let b2 = self.step();
            if b1 == 1 {
                return b2;
            }
        }
    }

    fn uint(&mut self, n: usize) -> BigUint {
        let mut v = BigUint::default();
        for _ in 0..n {
            v <<= 1;
            if self.bit() == 1 {
                v += 1u32;
            }
        }
        v
    }
}

fn generate() -> PoseidonParams {
    let p = field::modulus();
    let mut g = Grain::new(254, WIDTH as u32, FULL_ROUNDS as u32, PARTIAL_ROUNDS as u32);
    let mut rc = Vec::with_capacity((FULL_ROUNDS + PARTIAL_ROUNDS) * WIDTH);
    for _ in 0..(FULL_ROUNDS + PARTIAL_ROUNDS) * WIDTH {
        let mut v = g.uint(254);
        while &v >= p {
            v = g.uint(254);
        }
        rc.push(field::from_biguint(&v));
    }
    let xy = loop {
        let xy: Vec<BigUint> = (0..2 * WIDTH).map(|_| g.uint(254) % p).collect();
        let mut sorted = xy.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() == 2 * WIDTH {
            break xy;
        }
    };
    let mut mds = [[Fe::from(0u64); WIDTH]; WIDTH];
    for (i, row) in mds.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let s = field::from_biguint(&xy[i]) + field::from_biguint(&xy[WIDTH + j]);
            *cell = s.inverse().expect("Cauchy matrix entry is invertible");
        }
    }
    PoseidonParams { rc, mds }
}

pub fn params() -> &'static PoseidonParams {
    static P: OnceLock<PoseidonParams> = OnceLock::new();
    P.get_or_init(generate)
}

#[inline]
fn pow5(x: Fe) -> Fe {
    let x2 = x.square();
    x2.square() * x
}

/// True for rounds that apply the S-box to every lane.
pub fn is_full_round(r: usize) -> bool {
    r < FULL_ROUNDS / 2 || r >= FULL_ROUNDS / 2 + PARTIAL_ROUNDS
}

pub fn permute(state: &mut [Fe; WIDTH]) {
    let p = params();
    for r in 0..FULL_ROUNDS + PARTIAL_ROUNDS {
        for (i, s) in state.iter_mut().enumerate() {
            *s += p.rc[r * WIDTH + i];
        }
        if is_full_round(r) {
            for s in state.iter_mut() {
                *s = pow5(*s);
            }
        } else {
            state[0] = pow5(state[0]);
        }
        let old = *state;
        for (i, s) in state.iter_mut().enumerate() {
            *s = p.mds[i][0] * old[0] + p.mds[i][1] * old[1] + p.mds[i][2] * old[2];
        }
    }
}

/// Capacity-lane domain value added before the final permutation.
pub fn capacity_flag(len: usize) -> u64 {
    match (len, len % RATE) {
        (0, _) => 2,
        (_, 1) => 1,
        _ => 0,
    }
}

pub fn hash(input: &[Fe]) -> Fe {
    let mut state = [Fe::from(0u64); WIDTH];
    if input.is_empty() {
        state[0] = Fe::from(2u64);
        permute(&mut state);
        return state[0];
    }
    let nchunks = input.len().div_ceil(RATE);
    for (ci, chunk) in input.chunks(RATE).enumerate() {
        if ci + 1 == nchunks {
            state[0] += Fe::from(capacity_flag(input.len()));
        }
        state[1] += chunk[0];
        if let Some(v) = chunk.get(1) {
            state[2] += *v;
        }
        permute(&mut state);
    }
    state[0]
}
