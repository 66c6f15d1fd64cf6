//! PCA by power iteration with Hotelling deflation.
//!
//! `PCAModel` is the plain floating-point fit. `FixedPca` is the fixed-point
//! pipeline whose intermediate values (means, scatter matrix, covariance,
//! eigenpairs, projections) become witness hints for the audit circuit.

use crate::error::{Error, Result};
use crate::fixed::{FixedPoint, ONE_RAW, RAW_BOUND, SCALE_BITS};

pub const DEFAULT_MAX_ITERS: usize = 20;
pub const DEFAULT_K: usize = 3;
/// Eigen residual bound: `EIG_TOL_INV * |C v - lambda v| <= trace(C)`.
pub const EIG_TOL_INV: i128 = 1000;
/// Orthonormality bound 1e-4 at scale 2^40.
pub const ORTH_TOL_RAW: i128 = 109_951_163;
/// Centered values must stay below this bound (raw units) so the scatter
/// matrix is exact in 128-bit arithmetic.
pub const CENTERED_BOUND: i128 = 1 << 44;

#[derive(Clone, Debug, PartialEq)]
pub struct PCAModel {
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub components: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// Set for pairs extracted from an (effectively) zero matrix.
    pub degenerate: Vec<bool>,
}

pub fn covariance(x: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = x.len();
    if n < 2 {
        return Err(Error::DegenerateInput("covariance needs at least two rows".into()));
    }
    let m = x[0].len();
    let mut mean = vec![0.0; m];
    for row in x {
        for (a, v) in mean.iter_mut().zip(row) {
            *a += v;
        }
    }
    mean.iter_mut().for_each(|a| *a /= n as f64);
    let mut c = vec![vec![0.0; m]; m];
    for row in x {
        let d: Vec<f64> = row.iter().zip(&mean).map(|(v, mu)| v - mu).collect();
        for j in 0..m {
            for l in j..m {
                c[j][l] += d[j] * d[l];
            }
        }
    }
    for j in 0..m {
        for l in j..m {
            c[j][l] /= (n - 1) as f64;
            c[l][j] = c[j][l];
        }
    }
    Ok((mean, c))
}

fn matvec(c: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    c.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// First standard basis vector not already spanned by `prev`, orthogonalized.
fn completion(m: usize, prev: &[Vec<f64>]) -> Vec<f64> {
    for i in 0..m {
        let mut v = vec![0.0; m];
        v[i] = 1.0;
        for p in prev {
            let d: f64 = v.iter().zip(p).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(p).for_each(|(a, b)| *a -= d * b);
        }
        let nv = norm(&v);
        if nv > 1e-6 {
            return v.into_iter().map(|a| a / nv).collect();
        }
    }
    vec![0.0; m]
}

/// Deterministic start: the largest column of `a`, normalized. Its overlap
/// with the dominant eigenvector is rarely small, unlike a fixed vector.
/// Falls back to the normalized all-ones vector when `a` is zero.
fn start_vector(a: &[Vec<f64>]) -> Vec<f64> {
    let m = a.len();
    let (j, n) = (0..m).map(|j| (j, norm(&a[j]))).fold((0, 0.0), |best, c| if c.1 > best.1 { c } else { best });
    if n < 1e-12 {
        return vec![1.0 / (m as f64).sqrt(); m];
    }
    a[j].iter().map(|x| x / n).collect()
}

/// Extracts `k` eigenpairs, running exactly `max_iters` iterations each.
pub fn power_iteration(c: &[Vec<f64>], k: usize, max_iters: usize) -> Result<Eigen> {
    let m = c.len();
    if c.iter().any(|r| r.len() != m) {
        return Err(Error::ShapeMismatch("covariance must be square".into()));
    }
    if k == 0 || k > m {
        return Err(Error::DomainError(format!("k = {k} outside 1..={m}")));
    }
    let mut a: Vec<Vec<f64>> = c.to_vec();
    let mut out = Eigen { values: Vec::new(), vectors: Vec::new(), degenerate: Vec::new() };
    for _ in 0..k {
        let mut v = start_vector(&a);
        let degenerate = norm(&matvec(&a, &v)) < 1e-12;
        if degenerate {
            v = completion(m, &out.vectors);
        } else {
            for _ in 0..max_iters {
                let w = matvec(&a, &v);
                let nw = norm(&w);
                if nw == 0.0 {
                    break;
                }
                v = w.into_iter().map(|x| x / nw).collect();
            }
        }
        let lambda: f64 = if degenerate {
            0.0
        } else {
            matvec(&a, &v).iter().zip(&v).map(|(x, y)| x * y).sum()
        };
        let lead = v.iter().copied().fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        for j in 0..m {
            for l in 0..m {
                a[j][l] -= lambda * v[j] * v[l];
            }
        }
        out.values.push(lambda);
        out.vectors.push(v);
        out.degenerate.push(degenerate);
    }
    Ok(out)
}

impl PCAModel {
    pub fn fit(x: &[Vec<f64>], k: usize, max_iters: usize) -> Result<Self> {
        let (mean, covariance) = covariance(x)?;
        let e = power_iteration(&covariance, k, max_iters)?;
        Ok(PCAModel { mean, covariance, eigenvalues: e.values, components: e.vectors })
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }
}

pub fn project(x: &[Vec<f64>], model: &PCAModel) -> Result<Vec<Vec<f64>>> {
    let m = model.mean.len();
    x.iter()
        .map(|row| {
            if row.len() != m {
                return Err(Error::ShapeMismatch(format!("row has {} columns, model {m}", row.len())));
            }
            let d: Vec<f64> = row.iter().zip(&model.mean).map(|(a, b)| a - b).collect();
            Ok(model.components.iter().map(|w| w.iter().zip(&d).map(|(a, b)| a * b).sum()).collect())
        })
        .collect()
}

pub fn decode_matrix(x: &[Vec<FixedPoint>]) -> Vec<Vec<f64>> {
    x.iter().map(|r| r.iter().map(FixedPoint::decode).collect()).collect()
}

/// Fixed-point PCA pipeline mirrored by the circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPca {
    pub rows: usize,
    /// `floor(sum_i x_ij / N)`.
    pub mean_raw: Vec<i64>,
    /// Remainders of the mean division.
    pub mean_rem: Vec<i64>,
    /// `X_c^T X_c` at scale 2^40.
    pub scatter: Vec<Vec<i128>>,
    /// `floor(S / ((N-1) 2^20))`.
    pub cov_raw: Vec<Vec<i64>>,
    pub eigenvalues_raw: Vec<i64>,
    pub components_raw: Vec<Vec<i64>>,
    pub max_iters: usize,
}

fn to_i64(v: i128) -> Result<i64> {
    if v.abs() >= RAW_BOUND {
        Err(Error::RangeOverflow)
    } else {
        Ok(v as i64)
    }
}

fn encode_raw(v: f64) -> Result<i64> {
    Ok(FixedPoint::encode(v)?.raw())
}

impl FixedPca {
    pub fn fit(x: &[Vec<FixedPoint>], k: usize, max_iters: usize) -> Result<Self> {
        let n = x.len();
        if n < 2 {
            return Err(Error::DegenerateInput("PCA needs at least two rows".into()));
        }
        let m = x[0].len();
        let mut mean_raw = Vec::with_capacity(m);
        let mut mean_rem = Vec::with_capacity(m);
        for j in 0..m {
            let sum: i128 = x.iter().map(|r| r[j].raw() as i128).sum();
            mean_raw.push(to_i64(sum.div_euclid(n as i128))?);
            mean_rem.push(sum.rem_euclid(n as i128) as i64);
        }
        let xc = center(x, &mean_raw)?;
        let mut scatter = vec![vec![0i128; m]; m];
        for row in &xc {
            for j in 0..m {
                for l in j..m {
                    scatter[j][l] = scatter[j][l]
                        .checked_add(row[j] * row[l])
                        .ok_or(Error::RangeOverflow)?;
                }
            }
        }
        let den = (n as i128 - 1) << SCALE_BITS;
        let mut cov_raw = vec![vec![0i64; m]; m];
        for j in 0..m {
            for l in j..m {
                scatter[l][j] = scatter[j][l];
                cov_raw[j][l] = to_i64(scatter[j][l].div_euclid(den))?;
                cov_raw[l][j] = cov_raw[j][l];
            }
        }
        let c: Vec<Vec<f64>> =
            cov_raw.iter().map(|r| r.iter().map(|v| *v as f64 / ONE_RAW as f64).collect()).collect();
        let e = power_iteration(&c, k, max_iters)?;
        let eigenvalues_raw = e.values.iter().map(|v| encode_raw(*v)).collect::<Result<_>>()?;
        let components_raw = e
            .vectors
            .iter()
            .map(|v| v.iter().map(|a| encode_raw(*a)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        Ok(FixedPca { rows: n, mean_raw, mean_rem, scatter, cov_raw, eigenvalues_raw, components_raw, max_iters })
    }

    pub fn m(&self) -> usize {
        self.mean_raw.len()
    }

    pub fn k(&self) -> usize {
        self.components_raw.len()
    }

    pub fn trace_raw(&self) -> i128 {
        (0..self.m()).map(|j| self.cov_raw[j][j] as i128).sum()
    }

    /// `C v_i - lambda_i v_i` entries at scale 2^40.
    pub fn residual(&self, i: usize, j: usize) -> i128 {
        let v = &self.components_raw[i];
        let cv: i128 = (0..self.m()).map(|l| self.cov_raw[j][l] as i128 * v[l] as i128).sum();
        cv - self.eigenvalues_raw[i] as i128 * v[j] as i128
    }

    /// `v_i . v_j` at scale 2^40.
    pub fn dot(&self, i: usize, j: usize) -> i128 {
        let (a, b) = (&self.components_raw[i], &self.components_raw[j]);
        a.iter().zip(b).map(|(x, y)| *x as i128 * *y as i128).sum()
    }

    /// Confirms the eigenpair hints pass the circuit's tolerance checks.
    pub fn check_hints(&self) -> Result<()> {
        let bound = self.trace_raw() << SCALE_BITS;
        for i in 0..self.k() {
            for j in 0..self.m() {
                let r = self.residual(i, j);
                if EIG_TOL_INV * r.abs() > bound {
                    return Err(Error::HintFailure(format!(
                        "eigenpair {i} residual {} exceeds tolerance {}",
                        r as f64 / 2f64.powi(40),
                        bound as f64 / 2f64.powi(40) / EIG_TOL_INV as f64
                    )));
                }
            }
            for l in i..self.k() {
                let target = if i == l { 1i128 << (2 * SCALE_BITS) } else { 0 };
                if (self.dot(i, l) - target).abs() > ORTH_TOL_RAW {
                    return Err(Error::HintFailure(format!("eigenvectors {i},{l} not orthonormal")));
                }
            }
        }
        Ok(())
    }

    /// `Y_ij = floor(sum_l v_jl xc_il / 2^20)`.
    pub fn project(&self, x: &[Vec<FixedPoint>]) -> Result<Vec<Vec<FixedPoint>>> {
        let xc = center(x, &self.mean_raw)?;
        xc.iter()
            .map(|row| {
                self.components_raw
                    .iter()
                    .map(|v| {
                        let s: i128 = v.iter().zip(row).map(|(a, b)| *a as i128 * b).sum();
                        FixedPoint::from_raw_scaled(s >> SCALE_BITS, SCALE_BITS)
                    })
                    .collect()
            })
            .collect()
    }

    pub fn to_model(&self) -> PCAModel {
        let s = ONE_RAW as f64;
        let f = |v: i64| v as f64 / s;
        PCAModel {
            mean: self.mean_raw.iter().map(|v| f(*v)).collect(),
            covariance: self.cov_raw.iter().map(|r| r.iter().map(|v| f(*v)).collect()).collect(),
            eigenvalues: self.eigenvalues_raw.iter().map(|v| f(*v)).collect(),
            components: self.components_raw.iter().map(|r| r.iter().map(|v| f(*v)).collect()).collect(),
        }
    }
}

fn center(x: &[Vec<FixedPoint>], mean_raw: &[i64]) -> Result<Vec<Vec<i128>>> {
    x.iter()
        .map(|r| {
            if r.len() != mean_raw.len() {
                return Err(Error::ShapeMismatch("row width differs from model".into()));
            }
            r.iter()
                .zip(mean_raw)
                .map(|(v, mu)| {
                    let d = v.raw() as i128 - *mu as i128;
                    if d.abs() >= CENTERED_BOUND {
                        Err(Error::RangeOverflow)
                    } else {
                        Ok(d)
                    }
                })
                .collect()
        })
        .collect()
}
