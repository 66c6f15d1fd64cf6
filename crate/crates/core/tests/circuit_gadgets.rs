//! Randomized sweeps over the hint-checking gadgets.

use fiat_core::circuit::builder::{Builder, Lc, Mode};
use fiat_core::circuit::gadgets::{eigenpair_check, exp_check};
use fiat_core::field::from_i64;
use fiat_core::fixed::{ln_count_raw, ONE_RAW};
use fiat_core::Fe;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn witness_ok(f: impl Fn(&mut Builder)) -> bool {
    let mut b = Builder::new(Mode::Witness);
    f(&mut b);
    b.finish_witness().1.is_none()
}

fn exp_ok(x: u64, h: i64) -> bool {
    witness_ok(|b| {
        let x = b.alloc(Fe::from(x));
        let h = b.alloc(from_i64(h));
        exp_check(b, &x, &h);
    })
}

#[test]
fn exp_check_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..1000 {
        let x = rng.gen_range(1..1u64 << 23);
        let h = ln_count_raw(x);
        assert!(exp_ok(x, h), "x = {x}");
        assert!(exp_ok(x, h + 2) && exp_ok(x, h - 2), "x = {x} within half the bracket");
        assert!(!exp_ok(x, h + 8) && !exp_ok(x, h - 8), "x = {x} outside the bracket");
    }
}

fn eigen_ok(c: &[Vec<i64>], lambdas: &[i64], vs: &[Vec<i64>]) -> bool {
    witness_ok(|b| {
        let mut alloc = |m: &[Vec<i64>]| -> Vec<Vec<Lc>> {
            m.iter().map(|r| r.iter().map(|v| b.alloc(from_i64(*v))).collect()).collect()
        };
        let (cm, vv) = (alloc(c), alloc(vs));
        let ls: Vec<Lc> = lambdas.iter().map(|v| b.alloc(from_i64(*v))).collect();
        let trace = b.alloc(from_i64((0..c.len()).map(|i| c[i][i]).sum()));
        eigenpair_check(b, &cm, &ls, &vv, &trace);
    })
}

#[test]
fn eigen_check_tolerances() {
    let one = ONE_RAW;
    let c = vec![vec![4 * one, 0], vec![0, one]];
    let vs = vec![vec![one, 0], vec![0, one]];
    assert!(eigen_ok(&c, &[4 * one, one], &vs));
    // tolerance is 1e-3 of the trace
    let tol = 5 * one / 1000;
    assert!(eigen_ok(&c, &[4 * one + tol / 2, one], &vs));
    assert!(!eigen_ok(&c, &[4 * one + 2 * tol, one], &vs));
    assert!(!eigen_ok(&c, &[4 * one, one - 2 * tol], &vs));
    assert!(!eigen_ok(&c, &[4 * one, one], &[vec![one, 0], vec![one, 0]]));
    assert!(!eigen_ok(&c, &[4 * one, one], &[vec![2 * one, 0], vec![0, one]]));
}

#[test]
fn oracle_eigenpairs_satisfy() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let enc = |v: f64| (v * ONE_RAW as f64).round() as i64;
    for _ in 0..20 {
        let g = DMatrix::from_fn(5, 5, |_, _| rng.gen_range(-2.0..2.0));
        let sym = &g * g.transpose() / 5.0;
        let c: Vec<Vec<i64>> = (0..5).map(|i| (0..5).map(|j| enc(sym[(i, j)])).collect()).collect();
        let cf = DMatrix::from_fn(5, 5, |i, j| c[i][j] as f64 / ONE_RAW as f64);
        let e = SymmetricEigen::new(cf);
        let mut order: Vec<usize> = (0..5).collect();
        order.sort_by(|a, b| e.eigenvalues[*b].partial_cmp(&e.eigenvalues[*a]).unwrap());
        let k = 3;
        let lambdas: Vec<i64> = order[..k].iter().map(|&i| enc(e.eigenvalues[i])).collect();
        let vs: Vec<Vec<i64>> = order[..k].iter().map(|&i| e.eigenvectors.column(i).iter().map(|v| enc(*v)).collect()).collect();
        assert!(eigen_ok(&c, &lambdas, &vs));
    }
}
