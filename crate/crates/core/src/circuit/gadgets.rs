//! Reusable sub-circuits: bit decomposition, comparisons, Poseidon, MiMC,
//! Baby Jubjub arithmetic, Freivalds products, eigenpair and exponential
//! checks.

use std::sync::OnceLock;

use ark_ff::{AdditiveGroup, Zero};
use num_bigint::BigUint;
use num_traits::One;

use super::builder::{sum, Builder, Lc};
use crate::crypto::babyjubjub::{self, Point};
use crate::crypto::{mimc, poseidon};
use crate::field::{self, Fe};
use crate::fixed::{SCALE_BITS, TOTAL_BITS};
use crate::pca::{EIG_TOL_INV, ORTH_TOL_RAW};

/// Allocates `n` boolean variables holding the low bits of `value`; returns
/// the bits and their packed combination. Costs `n` constraints.
pub fn alloc_bits(b: &mut Builder, value: Fe, n: usize) -> (Vec<Lc>, Lc) {
    let mut bits = Vec::with_capacity(n);
    let mut packed = Lc::zero();
    let mut w = Fe::from(1u64);
    for i in 0..n {
        let bit = b.alloc(Fe::from(field::bit(&value, i) as u64));
        b.enforce(&bit, &(Lc::one() - &bit), &Lc::zero());
        packed = &packed + &bit.scale(w);
        w.double_in_place();
        bits.push(bit);
    }
    (bits, packed)
}

/// Little-endian decomposition of `x` into `n` bits.
pub fn to_bits(b: &mut Builder, x: &Lc, n: usize) -> Vec<Lc> {
    let (bits, packed) = alloc_bits(b, x.value(), n);
    b.enforce_equal(&packed, x);
    bits
}

/// Enforces `0 <= x < 2^n`.
pub fn range_check(b: &mut Builder, x: &Lc, n: usize) {
    to_bits(b, x, n);
}

/// Enforces `-2^(n-1) <= x < 2^(n-1)`.
pub fn range_check_signed(b: &mut Builder, x: &Lc, n: usize) {
    range_check(b, &x.add_const(field::pow2(n as u32 - 1)), n);
}

/// Bit `[a >= c]`, valid when `|a - c| < 2^(TOTAL_BITS - 1)`.
pub fn geq(b: &mut Builder, a: &Lc, c: &Lc) -> Lc {
    let d = (a - c).add_const(field::pow2(TOTAL_BITS - 1));
    let bits = to_bits(b, &d, TOTAL_BITS as usize);
    bits[TOTAL_BITS as usize - 1].clone()
}

/// Bit `[x == 0]`.
pub fn is_zero(b: &mut Builder, x: &Lc) -> Lc {
    let z = b.alloc(Fe::from(x.value().is_zero() as u64));
    let inv = b.alloc(Builder::inverse_hint(x.value()));
    b.enforce(x, &inv, &(Lc::one() - &z));
    b.enforce(x, &z, &Lc::zero());
    z
}

/// Signed floor division hint for `x / d` when `x` fits in i128.
pub fn floor_div_hint(x: Fe, d: i128) -> (Fe, Fe) {
    match field::to_i128(&x) {
        Some(v) => (field::from_i128(v.div_euclid(d)), field::from_i128(v.rem_euclid(d))),
        None => (Fe::zero(), Fe::zero()),
    }
}

/// `q = floor(x / d)` with `x = q d + r`, `0 <= r < d`. `rem_bits` must
/// cover `d` and `q_bits` bounds the signed quotient so it is unique.
pub fn div_floor_const(b: &mut Builder, x: &Lc, d: u128, rem_bits: usize, q_bits: usize) -> Lc {
    assert!(d > 0 && bits_for(d) <= rem_bits);
    let (qv, rv) = floor_div_hint(x.value(), d as i128);
    let q = b.alloc(qv);
    let r = b.alloc(rv);
    range_check(b, &r, rem_bits);
    range_check(b, &(Lc::constant(Fe::from(d - 1)) - &r), rem_bits);
    range_check_signed(b, &q, q_bits);
    b.enforce_equal(x, &(&q.scale(Fe::from(d)) + &r));
    q
}

/// Bits needed to represent `v`.
pub fn bits_for(v: u128) -> usize {
    (128 - v.leading_zeros() as usize).max(1)
}

// ---- Poseidon ----

const POSEIDON_MAX_TERMS: usize = 8;

fn sbox(b: &mut Builder, x: &Lc) -> Lc {
    let x2 = b.mul(x, x);
    let x4 = b.mul(&x2, &x2);
    b.mul(&x4, x)
}

pub fn poseidon_permute(b: &mut Builder, state: [Lc; 3]) -> [Lc; 3] {
    let p = poseidon::params();
    let mut s = state;
    for r in 0..poseidon::FULL_ROUNDS + poseidon::PARTIAL_ROUNDS {
        for (i, si) in s.iter_mut().enumerate() {
            *si = si.add_const(p.rc[r * 3 + i]);
        }
        if poseidon::is_full_round(r) {
            for si in s.iter_mut() {
                *si = sbox(b, si);
            }
        } else {
            s[0] = sbox(b, &s[0]);
        }
        let mixed: Vec<Lc> = (0..3)
            .map(|i| sum([&s[0].scale(p.mds[i][0]), &s[1].scale(p.mds[i][1]), &s[2].scale(p.mds[i][2])]))
            .collect();
        for (i, m) in mixed.into_iter().enumerate() {
            s[i] = b.materialize_if_longer(&m, POSEIDON_MAX_TERMS);
        }
    }
    s
}

/// Sponge with the same padding rule as `crypto::poseidon::hash`.
pub fn poseidon_hash(b: &mut Builder, input: &[Lc]) -> Lc {
    let mut s = [Lc::zero(), Lc::zero(), Lc::zero()];
    if input.is_empty() {
        s[0] = Lc::from_u64(2);
        return poseidon_permute(b, s)[0].clone();
    }
    let nchunks = input.len().div_ceil(2);
    for (ci, chunk) in input.chunks(2).enumerate() {
        if ci + 1 == nchunks {
            s[0] = s[0].add_const(Fe::from(poseidon::capacity_flag(input.len())));
        }
        s[1] = &s[1] + &chunk[0];
        if let Some(v) = chunk.get(1) {
            s[2] = &s[2] + v;
        }
        s = poseidon_permute(b, s);
    }
    s[0].clone()
}

// ---- MiMC ----

pub fn mimc7(b: &mut Builder, x: &Lc, k: &Lc) -> Lc {
    let c = mimc::constants();
    let mut r = Lc::zero();
    for (i, ci) in c.iter().enumerate() {
        let t = if i == 0 { x + k } else { (&r + k).add_const(*ci) };
        let t2 = b.mul(&t, &t);
        let t4 = b.mul(&t2, &t2);
        let t6 = b.mul(&t4, &t2);
        r = b.mul(&t6, &t);
    }
    &r + k
}

// ---- Baby Jubjub ----

#[derive(Clone, Debug)]
pub struct PointLc {
    pub x: Lc,
    pub y: Lc,
}

impl PointLc {
    pub fn constant(p: &Point) -> Self {
        PointLc { x: Lc::constant(p.x), y: Lc::constant(p.y) }
    }
}

/// Complete twisted Edwards addition (6 constraints).
pub fn point_add(b: &mut Builder, p: &PointLc, q: &PointLc) -> PointLc {
    let (a_c, d_c) = (Fe::from(babyjubjub::A), Fe::from(babyjubjub::D));
    let a = b.mul(&p.x, &q.x);
    let bb = b.mul(&p.y, &q.y);
    let c = b.mul(&(&p.x + &p.y), &(&q.x + &q.y));
    let dd = b.mul(&a, &bb);
    let xnum = &(&c - &a) - &bb;
    let xden = dd.scale(d_c).add_const(Fe::from(1u64));
    let ynum = &bb - &a.scale(a_c);
    let yden = (-&dd.scale(d_c)).add_const(Fe::from(1u64));
    let x3 = b.alloc(xnum.value() * Builder::inverse_hint(xden.value()));
    let y3 = b.alloc(ynum.value() * Builder::inverse_hint(yden.value()));
    b.enforce(&x3, &xden, &xnum);
    b.enforce(&y3, &yden, &ynum);
    PointLc { x: x3, y: y3 }
}

pub fn assert_on_curve(b: &mut Builder, p: &PointLc) {
    let x2 = b.mul(&p.x, &p.x);
    let y2 = b.mul(&p.y, &p.y);
    let lhs = (&x2.scale(Fe::from(babyjubjub::A)) + &y2).add_const(-Fe::from(1u64));
    b.enforce(&x2.scale(Fe::from(babyjubjub::D)), &y2, &lhs);
}

fn generator_powers() -> &'static Vec<Point> {
    static G: OnceLock<Vec<Point>> = OnceLock::new();
    G.get_or_init(|| {
        let mut out = Vec::with_capacity(babyjubjub::SCALAR_BITS);
        let mut p = Point::generator();
        for _ in 0..babyjubjub::SCALAR_BITS {
            out.push(p);
            p = p.add(&p);
        }
        out
    })
}

/// `sum bits_i 2^i G` for boolean `bits` (little-endian).
pub fn fixed_base_mul(b: &mut Builder, bits: &[Lc]) -> PointLc {
    let pw = generator_powers();
    let mut acc = PointLc::constant(&Point::identity());
    for (bit, g) in bits.iter().zip(pw) {
        let q = PointLc { x: bit.scale(g.x), y: bit.scale(g.y - Fe::from(1u64)).add_const(Fe::from(1u64)) };
        acc = point_add(b, &acc, &q);
    }
    acc
}

/// `sum bits_i 2^i P` by MSB-first double-and-add.
pub fn var_base_mul(b: &mut Builder, bits: &[Lc], p: &PointLc) -> PointLc {
    let mut acc = PointLc::constant(&Point::identity());
    let ym1 = p.y.add_const(-Fe::from(1u64));
    for bit in bits.iter().rev() {
        acc = point_add(b, &acc, &acc);
        let q = PointLc { x: b.mul(bit, &p.x), y: b.mul(bit, &ym1).add_const(Fe::from(1u64)) };
        acc = point_add(b, &acc, &q);
    }
    acc
}

// ---- matrix products ----

/// Enforces `A (B r) = C r` for `A: m1 x m2`, `B: m2 x m3`, `C: m1 x m3`.
pub fn freivalds(b: &mut Builder, a: &[Vec<Lc>], bm: &[Vec<Lc>], c: &[Vec<Lc>], r: &[Lc]) {
    let br: Vec<Lc> = bm
        .iter()
        .map(|row| {
            let prods: Vec<Lc> = row.iter().zip(r).map(|(x, ri)| b.mul(x, ri)).collect();
            sum(&prods)
        })
        .collect();
    for (arow, crow) in a.iter().zip(c) {
        let lhs: Vec<Lc> = arow.iter().zip(&br).map(|(x, y)| b.mul(x, y)).collect();
        let rhs: Vec<Lc> = crow.iter().zip(r).map(|(x, ri)| b.mul(x, ri)).collect();
        b.enforce_equal(&sum(&lhs), &sum(&rhs));
    }
}

/// Bits of range checks on eigenvalues and covariance entries.
pub const SIGNED_BITS: usize = TOTAL_BITS as usize;
/// Bound on eigenvector entries (|v| < 2^21 at scale 2^20).
pub const VEC_BITS: usize = SCALE_BITS as usize + 2;
const RESIDUAL_BITS: usize = 100;
const ORTH_BITS: usize = 28;

/// Eigenpair residual and orthonormality checks; `c` entries at scale
/// 2^20, `lambdas` and `vs` hints at scale 2^20, `trace` = trace of `c`.
pub fn eigenpair_check(b: &mut Builder, c: &[Vec<Lc>], lambdas: &[Lc], vs: &[Vec<Lc>], trace: &Lc) {
    for l in lambdas {
        range_check_signed(b, l, SIGNED_BITS);
    }
    for v in vs.iter().flatten() {
        range_check_signed(b, v, VEC_BITS);
    }
    let bound = trace.scale(field::pow2(SCALE_BITS));
    let tol_inv = Fe::from(EIG_TOL_INV as u64);
    for (lambda, v) in lambdas.iter().zip(vs) {
        for (j, crow) in c.iter().enumerate() {
            let cv: Vec<Lc> = crow.iter().zip(v).map(|(x, y)| b.mul(x, y)).collect();
            let lv = b.mul(lambda, &v[j]);
            let r = (sum(&cv) - lv).scale(tol_inv);
            range_check(b, &(&bound - &r), RESIDUAL_BITS);
            range_check(b, &(&bound + &r), RESIDUAL_BITS);
        }
    }
    let tol = Fe::from(ORTH_TOL_RAW as u64);
    for i in 0..vs.len() {
        for l in i..vs.len() {
            let prods: Vec<Lc> = vs[i].iter().zip(&vs[l]).map(|(x, y)| b.mul(x, y)).collect();
            let target = if i == l { field::pow2(2 * SCALE_BITS) } else { Fe::zero() };
            let e = sum(&prods).add_const(tol - target);
            range_check(b, &e, ORTH_BITS);
            range_check(b, &(Lc::constant(tol + tol) - &e), ORTH_BITS);
        }
    }
}

// ---- exponential check ----

/// Scale of the fractional-exponential accumulator.
pub const EXP_Q: u32 = 28;
/// Scale of the integer-part constants.
const EXP_RB: u32 = 50;
/// Scale of the bracket constants.
const EXP_KB: u32 = 30;
/// Bracket half-width is `2^-EXP_DELTA_SHIFT`.
pub const EXP_DELTA_SHIFT: u32 = 18;
/// Hints must lie in `[-EXP_INT_RANGE, EXP_INT_RANGE)`.
pub const EXP_INT_RANGE: u32 = 16;
const EXP_BRACKET_BITS: usize = 84;

/// `round(e^(num / 2^shift) * 2^out)` by exact series evaluation.
pub fn exp_scaled(num: i64, shift: u32, out: u32) -> BigUint {
    let prec = out + 96;
    let one = BigUint::one() << prec;
    let a = BigUint::from(num.unsigned_abs());
    let mut term = one.clone();
    let mut acc = BigUint::default();
    let mut k = 1u64;
    while !term.is_zero() {
        acc += &term;
        term = term * &a / (BigUint::from(k) << shift);
        k += 1;
    }
    let val = if num >= 0 { acc } else { (BigUint::one() << (2 * prec)) / acc };
    (val + (BigUint::one() << (prec - out - 1))) >> (prec - out)
}

struct ExpConsts {
    frac: Vec<Fe>,
    int: Vec<Fe>,
    k_lo: Fe,
    k_hi: Fe,
}

fn exp_consts() -> &'static ExpConsts {
    static C: OnceLock<ExpConsts> = OnceLock::new();
    C.get_or_init(|| {
        let s = SCALE_BITS;
        let frac = (0..s).map(|j| field::from_biguint(&exp_scaled(1 << j, s, EXP_Q))).collect();
        let int = (0..2 * EXP_INT_RANGE as i64)
            .map(|i| field::from_biguint(&exp_scaled((EXP_INT_RANGE as i64 - i) << 20, 20, EXP_RB)))
            .collect();
        let d = 1i64 << (40 - EXP_DELTA_SHIFT);
        // floor/ceil versions of e^(-+delta) at scale 2^KB, widened by one ulp
        let k_lo = exp_scaled(-d, 40, EXP_KB) - 1u32;
        let k_hi = exp_scaled(d, 40, EXP_KB) + 1u32;
        ExpConsts { frac, int, k_lo: field::from_biguint(&k_lo), k_hi: field::from_biguint(&k_hi) }
    })
}

/// Enforces `|ln(x) - h / 2^20| <= 2^-18` (approximately) for an integer
/// `x` in `[1, e^16)` and hint `h` at scale 2^20.
pub fn exp_check(b: &mut Builder, x: &Lc, h: &Lc) {
    let cst = exp_consts();
    let s = SCALE_BITS as usize;
    let ibits = bits_for(2 * EXP_INT_RANGE as u128 - 1);
    let u = h.add_const(Fe::from((EXP_INT_RANGE as u64) << s));
    let ub = to_bits(b, &u, s + ibits);

    let int_val = ((field::low_u64(&u.value()) >> s) as usize).min(2 * EXP_INT_RANGE as usize - 1);
    let onehot: Vec<Lc> = (0..2 * EXP_INT_RANGE as usize)
        .map(|i| {
            let o = b.alloc(Fe::from((i == int_val) as u64));
            b.enforce(&o, &(Lc::one() - &o), &Lc::zero());
            o
        })
        .collect();
    b.enforce_equal(&sum(&onehot), &Lc::one());
    let weighted: Vec<Lc> = onehot.iter().enumerate().map(|(i, o)| o.scale(Fe::from(i as u64))).collect();
    let int_part: Vec<Lc> = (0..ibits).map(|t| ub[s + t].scale(Fe::from(1u64 << t))).collect();
    b.enforce_equal(&sum(&weighted), &sum(&int_part));
    let r_sel: Vec<Lc> = onehot.iter().zip(&cst.int).map(|(o, r)| o.scale(*r)).collect();
    let r_sel = sum(&r_sel);

    let one_q = field::pow2(EXP_Q);
    let mut f = ub[0].scale(cst.frac[0] - one_q).add_const(one_q);
    for j in 1..s {
        let factor = ub[j].scale(cst.frac[j] - one_q).add_const(one_q);
        let prod = f.value() * factor.value();
        let (qv, rv) = floor_div_hint(prod, 1i128 << EXP_Q);
        let (_, r) = alloc_bits(b, rv, EXP_Q as usize);
        let (_, q) = alloc_bits(b, qv, EXP_Q as usize + 2);
        b.enforce(&f, &factor, &(&q.scale(one_q) + &r));
        f = q;
    }

    let xr = b.mul(x, &r_sel);
    let lhs = xr.scale(field::pow2(EXP_KB));
    let fs = f.scale(field::pow2(EXP_RB - EXP_Q));
    range_check(b, &(&lhs - &fs.scale(cst.k_lo)), EXP_BRACKET_BITS);
    range_check(b, &(&fs.scale(cst.k_hi) - &lhs), EXP_BRACKET_BITS);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::builder::Mode;

    /// Runs `f` in both modes and reports whether the witness satisfies.
    fn satisfied<F: Fn(&mut Builder)>(f: F) -> bool {
        let mut shape = Builder::new(Mode::Shape);
        f(&mut shape);
        let cs = shape.finish_shape();
        let mut wb = Builder::new(Mode::Witness);
        f(&mut wb);
        let (w, fail) = wb.finish_witness();
        let ok = cs.check(&w, &[]).unwrap().is_ok();
        assert_eq!(ok, fail.is_none());
        ok
    }

    fn c(v: i64) -> Fe {
        field::from_i64(v)
    }

    #[test]
    fn exp_constants() {
        assert_eq!(exp_scaled(0, 20, 28), BigUint::one() << 28);
        let e = exp_scaled(1 << 20, 20, 40);
        assert_eq!(e, BigUint::from((std::f64::consts::E * 2f64.powi(40)).round() as u128));
        let inv = exp_scaled(-(1 << 20), 20, 40);
        assert_eq!(inv, BigUint::from((2f64.powi(40) / std::f64::consts::E).round() as u128));
    }

    #[test]
    fn comparisons() {
        for (a, bv, expect) in [(5, 3, 1), (3, 5, 0), (4, 4, 1), (-7, -8, 1), (-(1 << 40), 1 << 40, 0)] {
            let mut wb = Builder::new(Mode::Witness);
            let x = wb.alloc(c(a));
            let y = wb.alloc(c(bv));
            let g = geq(&mut wb, &x, &y);
            assert_eq!(g.value(), Fe::from(expect as u64), "{a} >= {bv}");
            assert!(wb.finish_witness().1.is_none());
        }
    }

    #[test]
    fn range_checks() {
        let rc = |v: i64, n: usize| {
            satisfied(|b| {
                let x = b.alloc(c(v));
                range_check(b, &x, n);
            })
        };
        assert!(rc(255, 8));
        assert!(!rc(256, 8));
        assert!(!rc(-1, 8));
        let is0 = |v: i64| {
            let mut b = Builder::new(Mode::Witness);
            let x = b.alloc(c(v));
            is_zero(&mut b, &x).value()
        };
        assert_eq!(is0(0), Fe::from(1u64));
        assert_eq!(is0(9), Fe::from(0u64));
        assert!(satisfied(|b| {
            let x = b.alloc(c(-17));
            let q = div_floor_const(b, &x, 5, 3, 8);
            assert_eq!(q.value(), c(-4));
        }));
    }

    #[test]
    fn exp_check_examples() {
        let run = |x: u64, h: i64| {
            satisfied(|b| {
                let xv = b.alloc(Fe::from(x));
                let hv = b.alloc(c(h));
                exp_check(b, &xv, &hv);
            })
        };
        assert!(run(1, 0));
        assert!(!run(1, 10486)); // encode(0.01)
        assert!(run(2, 726817));
        assert!(!run(2, 726817 + 16));
        assert!(run(2, 726817 + 3));
        assert!(run(1000, crate::fixed::ln_count_raw(1000)));
        assert!(run(8_000_000, crate::fixed::ln_count_raw(8_000_000)));
        assert!(!run(3, crate::fixed::ln_count_raw(2)));
    }

    #[test]
    fn poseidon_and_mimc_match_native() {
        let ins: Vec<Fe> = (0..5).map(|i| Fe::from(i as u64 * 7 + 1)).collect();
        let mut b = Builder::new(Mode::Witness);
        let vars: Vec<Lc> = ins.iter().map(|v| b.alloc(*v)).collect();
        for len in 0..=5 {
            assert_eq!(poseidon_hash(&mut b, &vars[..len]).value(), poseidon::hash(&ins[..len]));
        }
        let m = mimc7(&mut b, &vars[0], &vars[1]);
        assert_eq!(m.value(), mimc::mimc7(ins[0], ins[1]));
        assert!(b.finish_witness().1.is_none());
        assert!(satisfied(|b| {
            let v: Vec<Lc> = ins.iter().map(|x| b.alloc(*x)).collect();
            poseidon_hash(b, &v);
        }));
    }

    #[test]
    fn curve_gadgets_match_native() {
        use crate::crypto::babyjubjub::Scalar;
        let k = Scalar::from_u64(123456789);
        let pk = Point::generator().mul(&Scalar::from_u64(987654321));
        assert!(satisfied(|b| {
            let bits: Vec<Lc> = k.bits_le().iter().map(|x| b.alloc(Fe::from(*x as u64))).collect();
            let g = fixed_base_mul(b, &bits);
            let mode = b.mode();
            if mode == Mode::Witness {
                let expect = Point::generator().mul(&k);
                assert_eq!((g.x.value(), g.y.value()), (expect.x, expect.y));
            }
            let p = PointLc { x: b.alloc(pk.x), y: b.alloc(pk.y) };
            assert_on_curve(b, &p);
            let s = var_base_mul(b, &bits, &p);
            if mode == Mode::Witness {
                assert_eq!(s.x.value(), pk.mul(&k).x);
            }
        }));
    }

    #[test]
    fn freivalds_detects_corruption() {
        let mk = |b: &mut Builder, m: &[[i64; 2]; 2]| -> Vec<Vec<Lc>> {
            m.iter().map(|r| r.iter().map(|v| b.alloc(c(*v))).collect()).collect()
        };
        let a = [[1, 2], [3, 4]];
        let bm = [[5, 6], [7, 8]];
        let good = [[19, 22], [43, 50]];
        let bad = [[19, 22], [43, 51]];
        for (cm, expect) in [(good, true), (bad, false)] {
            assert_eq!(
                satisfied(|b| {
                    let (am, bmm, cmm) = (mk(b, &a), mk(b, &bm), mk(b, &cm));
                    let r = vec![b.alloc(Fe::from(17u64)), b.alloc(Fe::from(1234567u64))];
                    freivalds(b, &am, &bmm, &cmm, &r);
                }),
                expect
            );
        }
    }
}
