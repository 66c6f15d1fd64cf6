//! Covariance and PCA against nalgebra.

use fiat_core::pca::{covariance, FixedPca, PCAModel};
use fiat_core::FixedPoint;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_data(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<Vec<f64>> {
    let scales: Vec<f64> = (0..m).map(|j| 4.0 * 0.5f64.powi(j as i32)).collect();
    let mix = DMatrix::from_fn(m, m, |_, _| rng.gen_range(-1.0..1.0)).qr().q();
    (0..n)
        .map(|_| {
            let z: Vec<f64> = scales.iter().map(|s| s * rng.gen_range(-1.0..1.0)).collect();
            (0..m).map(|i| (0..m).map(|j| mix[(i, j)] * z[j]).sum::<f64>() + 1.5).collect()
        })
        .collect()
}

fn oracle_covariance(x: &[Vec<f64>]) -> DMatrix<f64> {
    let (n, m) = (x.len(), x[0].len());
    let xm = DMatrix::from_fn(n, m, |i, j| x[i][j]);
    let mean = xm.row_mean();
    let centered = DMatrix::from_fn(n, m, |i, j| xm[(i, j)] - mean[j]);
    centered.transpose() * &centered / (n as f64 - 1.0)
}

#[test]
fn covariance_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..50 {
        let (n, m) = (rng.gen_range(2..200), rng.gen_range(1..=9));
        let x = random_data(&mut rng, n, m);
        let (_, c) = covariance(&x).unwrap();
        let want = oracle_covariance(&x);
        for i in 0..m {
            for j in 0..m {
                assert!((c[i][j] - want[(i, j)]).abs() < 1e-9 * (1.0 + want[(i, j)].abs()));
            }
        }
    }
}

#[test]
fn pca_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..30 {
        let m = rng.gen_range(2..=9);
        let x = random_data(&mut rng, 400, m);
        let k = rng.gen_range(1..=m.min(3));
        let model = PCAModel::fit(&x, k, 20).unwrap();
        let mut want: Vec<f64> = SymmetricEigen::new(oracle_covariance(&x)).eigenvalues.iter().copied().collect();
        want.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (got, want) in model.eigenvalues.iter().zip(&want) {
            assert!((got - want).abs() <= 1e-3 * want.abs().max(1e-3), "{got} vs {want}");
        }
        let fx: Vec<Vec<FixedPoint>> =
            x.iter().map(|r| r.iter().map(|v| FixedPoint::encode(*v).unwrap()).collect()).collect();
        let p = FixedPca::fit(&fx, k, 20).unwrap();
        p.check_hints().unwrap();
        for (raw, want) in p.eigenvalues_raw.iter().zip(&want) {
            let got = *raw as f64 / 2f64.powi(20);
            assert!((got - want).abs() <= 1e-3 * want.abs().max(1.0), "{got} vs {want}");
        }
    }
}
