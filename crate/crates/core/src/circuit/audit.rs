//! The audit circuit: dataset hash, PCA verification, MI estimation,
//! threshold decision and conditional encryption in one statement.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ark_ff::Field;
use serde::{Deserialize, Serialize};

use super::builder::{sum, Builder, Lc, Mode};
use super::cs::{ConstraintSystem, Satisfaction, Tag, Witness};
use super::gadgets::{self, PointLc};
use super::io;
use crate::crypto::babyjubjub::{Point, Scalar, SCALAR_BITS};
use crate::crypto::ecies::{self, Ciphertext};
use crate::dataset::{self, Dataset, Matrix};
use crate::error::{Error, Result};
use crate::estimator::{self, MIResult};
use crate::field::{self, Fe};
use crate::fixed::{ln_count_raw, FixedPoint, SCALE_BITS};
use crate::pca::{FixedPca, DEFAULT_MAX_ITERS};

/// Number of public inputs.
pub const NUM_PUBLIC: usize = 11;
/// Index of the first dataset cell variable.
pub const DATA_VAR_OFFSET: usize = 1 + NUM_PUBLIC;
/// Largest supported intervals per dimension.
pub const MAX_INTERVALS: usize = 16;
/// Row counts must stay below `2^ROW_BITS`.
pub const ROW_BITS: usize = 23;
/// Width of count fields in packed table entries.
const COUNT_BITS: usize = 25;
/// Spread allowed between a column's minimum and maximum (raw units).
pub const SPREAD_BITS: usize = 56;
/// Bound on centered PCA inputs (signed width).
const CENTERED_BITS: usize = 45;
/// Signed width of the MI quotient.
const MI_QUOTIENT_BITS: usize = 62;

/// Data representation requested by the consumer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algo {
    Raw,
    Pca(usize),
}

impl Algo {
    pub fn id(&self) -> u64 {
        match self {
            Algo::Raw => 0,
            Algo::Pca(_) => 1,
        }
    }

    /// Output dimensionality on data with `m` non-sensitive columns.
    pub fn output_dims(&self, m: usize) -> usize {
        match self {
            Algo::Raw => m,
            Algo::Pca(k) => *k,
        }
    }

    pub fn supports(&self, m: usize) -> bool {
        match self {
            Algo::Raw => m >= 1,
            Algo::Pca(k) => (1..=m).contains(k),
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algo::Raw => f.write_str("raw"),
            Algo::Pca(k) => write!(f, "pca({k})"),
        }
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if t == "raw" || t == "raw_data" {
            return Ok(Algo::Raw);
        }
        let inner = t
            .strip_prefix("pca(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| t.strip_prefix("pca:"))
            .ok_or_else(|| Error::ParseError(format!("unknown algorithm {s:?}")))?;
        let k = inner.trim().parse().map_err(|_| Error::ParseError(format!("bad PCA dimension in {s:?}")))?;
        Ok(Algo::Pca(k))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditShape {
    pub rows: usize,
    pub n: usize,
    pub m: usize,
}

impl AuditShape {
    pub fn of(d: &Dataset) -> Self {
        AuditShape { rows: d.num_rows(), n: d.n(), m: d.m() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditParams {
    pub algo: Algo,
    pub intervals: usize,
    pub max_iters: usize,
    /// Independent Freivalds challenges for the covariance product.
    pub freivalds_reps: usize,
}

impl AuditParams {
    pub fn new(algo: Algo) -> Self {
        AuditParams { algo, intervals: estimator::DEFAULT_INTERVALS, max_iters: DEFAULT_MAX_ITERS, freivalds_reps: 1 }
    }

    pub fn k(&self, shape: &AuditShape) -> usize {
        self.algo.output_dims(shape.m)
    }

    pub fn validate(&self, shape: &AuditShape) -> Result<()> {
        if shape.rows < 2 || shape.n == 0 || shape.m == 0 {
            return Err(Error::ShapeError("need N >= 2 and n, m >= 1".into()));
        }
        if shape.rows >= 1 << ROW_BITS {
            return Err(Error::ShapeError(format!("N must be below 2^{ROW_BITS}")));
        }
        if !self.algo.supports(shape.m) {
            return Err(Error::ShapeError(format!("{} unsupported for m = {}", self.algo, shape.m)));
        }
        if !(2..=MAX_INTERVALS).contains(&self.intervals) {
            return Err(Error::ShapeError(format!("intervals must lie in 2..={MAX_INTERVALS}")));
        }
        if self.freivalds_reps == 0 {
            return Err(Error::ShapeError("at least one Freivalds repetition".into()));
        }
        let dims = shape.n + self.k(shape);
        if table_id_bits(self.intervals, dims) + COUNT_BITS > 126 {
            return Err(Error::ShapeError("too many binned dimensions for the cell tables".into()));
        }
        Ok(())
    }
}

/// Public inputs of the audit circuit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditStatement {
    #[serde(with = "crate::crypto::babyjubjub::fe_serde")]
    pub data_hash: Fe,
    pub threshold: FixedPoint,
    pub pass: bool,
    pub mi: FixedPoint,
    #[serde(with = "crate::crypto::babyjubjub::fe_serde")]
    pub y_enc_digest: Fe,
    pub pk: Point,
    pub algo: Algo,
    pub intervals: usize,
    pub max_iters: usize,
}

impl AuditStatement {
    /// Public input vector in circuit order.
    pub fn to_public_inputs(&self, m: usize) -> Vec<Fe> {
        vec![
            self.data_hash,
            self.threshold.field(),
            Fe::from(self.pass as u64),
            self.mi.field(),
            self.y_enc_digest,
            self.pk.x,
            self.pk.y,
            Fe::from(self.algo.id()),
            Fe::from(self.algo.output_dims(m) as u64),
            Fe::from(self.intervals as u64),
            Fe::from(self.max_iters as u64),
        ]
    }
}

/// A built circuit together with the parameters it encodes.
#[derive(Clone, Debug)]
pub struct AuditCircuit {
    pub shape: AuditShape,
    pub params: AuditParams,
    pub cs: ConstraintSystem,
    pub digest: [u8; 32],
}

impl AuditCircuit {
    pub fn statement_inputs(&self, st: &AuditStatement) -> Vec<Fe> {
        st.to_public_inputs(self.shape.m)
    }
}

/// Outputs of the native pipeline.
#[derive(Clone, Debug)]
pub struct NativeAudit {
    pub pca: Option<FixedPca>,
    pub y: Matrix,
    pub mi: MIResult,
    pub pass: bool,
    pub ciphertext: Option<Ciphertext>,
    pub y_enc_digest: Fe,
}

/// Runs the representation, MI estimate, decision and encryption natively.
pub fn run_native(
    d: &Dataset,
    params: &AuditParams,
    pk: &Point,
    esk: &Scalar,
    threshold: &FixedPoint,
) -> Result<NativeAudit> {
    let (xs, xns) = dataset::split(d);
    let (pca, y) = match params.algo {
        Algo::Raw => (None, xns),
        Algo::Pca(k) => {
            let p = FixedPca::fit(&xns, k, params.max_iters)?;
            p.check_hints()?;
            let y = p.project(&xns)?;
            (Some(p), y)
        }
    };
    let mi = estimator::audit_mi_grid(&xs, &y, params.intervals)?;
    let pass = mi.mi_nats.raw() <= threshold.raw();
    let plain: Vec<Fe> = y.iter().flatten().map(FixedPoint::field).collect();
    let ciphertext = if pass { Some(ecies::ecies_encrypt(pk, &plain, esk)?) } else { None };
    let y_enc_digest = ciphertext.as_ref().map_or_else(|| ecies::zero_digest(plain.len()), Ciphertext::digest);
    Ok(NativeAudit { pca, y, mi, pass, ciphertext, y_enc_digest })
}

/// Hint values consumed by synthesis; all zero when building the shape.
struct Inputs {
    public: Vec<Fe>,
    xs: Vec<Vec<i64>>,
    xns: Vec<Vec<i64>>,
    pca: Option<FixedPca>,
    esk: Fe,
}

impl Inputs {
    fn zeros(shape: &AuditShape) -> Self {
        Inputs {
            public: vec![Fe::from(0u64); NUM_PUBLIC],
            xs: vec![vec![0; shape.n]; shape.rows],
            xns: vec![vec![0; shape.m]; shape.rows],
            pca: None,
            esk: Fe::from(0u64),
        }
    }
}

fn table_id_bits(intervals: usize, dims: usize) -> usize {
    let cells = (intervals as f64).log2() * dims as f64;
    cells.ceil() as usize + 1 + COUNT_BITS
}

fn signed_value(v: Fe) -> i128 {
    field::to_i128(&v).unwrap_or(0)
}

fn consts(vals: &[u64]) -> Vec<Lc> {
    vals.iter().map(|v| Lc::from_u64(*v)).collect()
}

fn synthesize(b: &mut Builder, shape: &AuditShape, params: &AuditParams, inp: &Inputs) {
    let rows = shape.rows;
    let k = params.k(shape);
    let intervals = params.intervals;

    b.set_section(Tag::Glue, "glue.public");
    let public: Vec<Lc> = inp.public.iter().map(|v| b.alloc_public(*v)).collect();
    let (data_hash, threshold, pass_pub, mi_pub, digest_pub) =
        (&public[0], &public[1], &public[2], &public[3], &public[4]);
    let pk = PointLc { x: public[5].clone(), y: public[6].clone() };
    let structural = [params.algo.id(), k as u64, intervals as u64, params.max_iters as u64];
    for (p, c) in public[7..].iter().zip(structural) {
        b.enforce_equal(p, &Lc::from_u64(c));
    }

    b.set_section(Tag::Hash, "hash");
    let xs: Vec<Vec<Lc>> = inp.xs.iter().map(|r| r.iter().map(|v| b.alloc(field::from_i64(*v))).collect()).collect();
    let xns: Vec<Vec<Lc>> = inp.xns.iter().map(|r| r.iter().map(|v| b.alloc(field::from_i64(*v))).collect()).collect();
    let mut flat = consts(&[rows as u64, shape.n as u64, shape.m as u64]);
    flat.extend(xs.iter().flatten().cloned());
    flat.extend(xns.iter().flatten().cloned());
    let h = gadgets::poseidon_hash(b, &flat);
    b.enforce_equal(&h, data_hash);

    b.set_section(Tag::Glue, "glue.seed");
    let mut seed_in = vec![data_hash.clone()];
    seed_in.extend(consts(&structural));
    seed_in.extend(consts(&[rows as u64, shape.n as u64, shape.m as u64]));
    let seed = gadgets::poseidon_hash(b, &seed_in);

    let (y, transcript) = match params.algo {
        Algo::Raw => (xns, Vec::new()),
        Algo::Pca(k) => pca_gadget(b, &xns, k, params.freivalds_reps, &seed, inp.pca.as_ref()),
    };

    let mi = mi_gadget(b, &xs, &y, intervals, &seed, &transcript);
    b.enforce_equal(&mi, mi_pub);

    b.set_section(Tag::Glue, "glue.threshold");
    gadgets::range_check_signed(b, threshold, gadgets::SIGNED_BITS);
    let pass = gadgets::geq(b, threshold, &mi);
    b.enforce_equal(&pass, pass_pub);

    enc_gadget(b, &y, &pk, inp.esk, &pass, digest_pub);
}

/// Returns the projected matrix and the eigenpair hints for the transcript.
fn pca_gadget(
    b: &mut Builder,
    x: &[Vec<Lc>],
    k: usize,
    reps: usize,
    seed: &Lc,
    hints: Option<&FixedPca>,
) -> (Vec<Vec<Lc>>, Vec<Lc>) {
    let rows = x.len();
    let m = x[0].len();
    let hint = |f: &dyn Fn(&FixedPca) -> i128| hints.map_or(0, f);

    b.set_section(Tag::Pca, "pca.mean");
    let mut mean = Vec::with_capacity(m);
    for j in 0..m {
        let mu = b.alloc(field::from_i128(hint(&|p| p.mean_raw[j] as i128)));
        let rem = b.alloc(field::from_i128(hint(&|p| p.mean_rem[j] as i128)));
        gadgets::range_check_signed(b, &mu, gadgets::SIGNED_BITS);
        gadgets::range_check(b, &rem, COUNT_BITS);
        gadgets::range_check(b, &(Lc::from_u64(rows as u64 - 1) - &rem), COUNT_BITS);
        let col: Vec<&Lc> = x.iter().map(|r| &r[j]).collect();
        b.enforce_equal(&sum(col), &(&mu.scale(Fe::from(rows as u64)) + &rem));
        mean.push(mu);
    }
    b.set_section(Tag::Pca, "pca.center");
    let xc: Vec<Vec<Lc>> = x
        .iter()
        .map(|r| {
            r.iter()
                .zip(&mean)
                .map(|(v, mu)| {
                    let c = v - mu;
                    gadgets::range_check_signed(b, &c, CENTERED_BITS);
                    c
                })
                .collect()
        })
        .collect();

    b.set_section(Tag::Pca, "pca.cov");
    let den = ((rows as u128) - 1) << SCALE_BITS;
    let den_bits = ROW_BITS + SCALE_BITS as usize;
    let mut s = vec![vec![Lc::zero(); m]; m];
    let mut c = vec![vec![Lc::zero(); m]; m];
    let mut s_upper = Vec::new();
    for j in 0..m {
        for l in j..m {
            let sv = b.alloc(field::from_i128(hint(&|p| p.scatter[j][l])));
            let cv = b.alloc(field::from_i128(hint(&|p| p.cov_raw[j][l] as i128)));
            let rv = b.alloc(field::from_i128(hint(&|p| p.scatter[j][l].rem_euclid(den as i128))));
            gadgets::range_check_signed(b, &cv, gadgets::SIGNED_BITS);
            gadgets::range_check(b, &rv, den_bits);
            gadgets::range_check(b, &(Lc::constant(Fe::from(den - 1)) - &rv), den_bits);
            b.enforce_equal(&sv, &(&cv.scale(Fe::from(den)) + &rv));
            s_upper.push(sv.clone());
            s[j][l] = sv.clone();
            s[l][j] = sv;
            c[j][l] = cv.clone();
            c[l][j] = cv;
        }
    }
    let xct: Vec<Vec<Lc>> = (0..m).map(|j| xc.iter().map(|r| r[j].clone()).collect()).collect();
    for rep in 0..reps {
        let mut t = vec![seed.clone()];
        t.extend(s_upper.iter().cloned());
        t.extend(consts(&[0, rep as u64]));
        let base = gadgets::poseidon_hash(b, &t);
        let r: Vec<Lc> = (0..m).map(|i| gadgets::poseidon_hash(b, &[base.clone(), Lc::from_u64(i as u64)])).collect();
        gadgets::freivalds(b, &xct, &xc, &s, &r);
    }

    b.set_section(Tag::Pca, "pca.eigen");
    let lambdas: Vec<Lc> =
        (0..k).map(|i| b.alloc(field::from_i128(hint(&|p| p.eigenvalues_raw[i] as i128)))).collect();
    let vs: Vec<Vec<Lc>> = (0..k)
        .map(|i| (0..m).map(|j| b.alloc(field::from_i128(hint(&|p| p.components_raw[i][j] as i128)))).collect())
        .collect();
    let trace = sum((0..m).map(|j| &c[j][j]));
    gadgets::eigenpair_check(b, &c, &lambdas, &vs, &trace);

    b.set_section(Tag::Pca, "pca.project");
    let y: Vec<Vec<Lc>> = xc
        .iter()
        .map(|row| {
            vs.iter()
                .map(|v| {
                    let prods: Vec<Lc> = v.iter().zip(row).map(|(a, xv)| b.mul(a, xv)).collect();
                    let acc = sum(&prods);
                    let (qv, rv) = gadgets::floor_div_hint(acc.value(), 1 << SCALE_BITS);
                    let q = b.alloc(qv);
                    let (_, r) = gadgets::alloc_bits(b, rv, SCALE_BITS as usize);
                    b.enforce_equal(&acc, &(&q.scale(field::pow2(SCALE_BITS)) + &r));
                    q
                })
                .collect()
        })
        .collect();

    let mut transcript = lambdas;
    transcript.extend(vs.into_iter().flatten());
    (y, transcript)
}

/// Interval index of every entry, column by column, against data-derived
/// grids: `min(floor(I (x - min) / span), I - 1)` as a count of boundary
/// comparisons.
fn bin_columns(b: &mut Builder, x: &[Vec<Lc>], intervals: usize) -> Vec<Vec<Lc>> {
    let rows = x.len();
    let dims = x[0].len();
    let mut bins = vec![Vec::with_capacity(dims); rows];
    for d in 0..dims {
        let vals: Vec<i128> = x.iter().map(|r| signed_value(r[d].value())).collect();
        let lo = vals.iter().copied().min().unwrap_or(0);
        let hi = vals.iter().copied().max().unwrap_or(0);
        let mn = b.alloc(field::from_i128(lo));
        let mx = b.alloc(field::from_i128(hi));
        gadgets::range_check_signed(b, &mn, gadgets::SIGNED_BITS);
        let span = &mx - &mn;
        let iv = Fe::from(intervals as u64);
        let mut prod_lo = Lc::one();
        let mut prod_hi = Lc::one();
        for (i, row) in x.iter().enumerate() {
            let a = &row[d] - &mn;
            let c = &mx - &row[d];
            gadgets::range_check(b, &a, SPREAD_BITS);
            gadgets::range_check(b, &c, SPREAD_BITS);
            prod_lo = b.mul(&prod_lo, &a);
            prod_hi = b.mul(&prod_hi, &c);
            let ia = a.scale(iv);
            let g: Vec<Lc> =
                (1..intervals).map(|j| gadgets::geq(b, &ia, &span.scale(Fe::from(j as u64)))).collect();
            bins[i].push(sum(&g));
        }
        b.enforce_zero(&prod_lo);
        b.enforce_zero(&prod_hi);
    }
    bins
}

fn row_ids(bins: &[Vec<Lc>], intervals: usize) -> Vec<Lc> {
    bins.iter()
        .map(|r| {
            let mut w = Fe::from(1u64);
            let mut acc = Lc::zero();
            for bin in r {
                acc = &acc + &bin.scale(w);
                w *= Fe::from(intervals as u64);
            }
            acc
        })
        .collect()
}

struct Table {
    ids: Vec<Lc>,
    counts: Vec<Lc>,
}

/// Sorted `(cell id, count)` slots, one per row, padded with unused ids.
fn count_table(b: &mut Builder, row_ids: &[Lc], cells: u128, id_bits: usize) -> Table {
    let rows = row_ids.len();
    let mut hist: BTreeMap<u128, u64> = BTreeMap::new();
    for id in row_ids {
        *hist.entry(signed_value(id.value()).max(0) as u128).or_default() += 1;
    }
    let mut slots: Vec<(u128, u64)> = hist.into_iter().collect();
    let pad = rows.saturating_sub(slots.len());
    slots.extend((0..pad as u128).map(|j| (cells + j, 0)));
    slots.truncate(rows);

    let mut ids = Vec::with_capacity(rows);
    let mut counts = Vec::with_capacity(rows);
    let mut prev: Option<(u128, Lc)> = None;
    for (id, count) in slots {
        let id_lc = match &prev {
            None => {
                let (_, packed) = gadgets::alloc_bits(b, Fe::from(id), id_bits);
                b.materialize(&packed)
            }
            Some((pid, plc)) => {
                let gap = id.wrapping_sub(*pid).wrapping_sub(1);
                let (_, packed) = gadgets::alloc_bits(b, Fe::from(gap), id_bits);
                b.materialize(&(&packed + plc).add_const(Fe::from(1u64)))
            }
        };
        let (_, c) = gadgets::alloc_bits(b, Fe::from(count), COUNT_BITS);
        counts.push(b.materialize(&c));
        ids.push(id_lc.clone());
        prev = Some((id, id_lc));
    }
    if let Some((_, last)) = &prev {
        gadgets::range_check(b, last, id_bits);
    }
    Table { ids, counts }
}

/// `sum_j 1/(alpha - row_j) = sum_s count_s/(alpha - id_s)`.
fn log_derivative(b: &mut Builder, alpha: &Lc, rows: &[Lc], t: &Table) {
    let one = Lc::one();
    let mut lhs = Vec::with_capacity(rows.len());
    for id in rows {
        let d = alpha - id;
        let inv = b.alloc(Builder::inverse_hint(d.value()));
        b.enforce(&inv, &d, &one);
        lhs.push(inv);
    }
    let mut rhs = Vec::with_capacity(t.ids.len());
    for (id, c) in t.ids.iter().zip(&t.counts) {
        let d = alpha - id;
        let inv = b.alloc(Builder::inverse_hint(d.value()));
        b.enforce(&inv, &d, &one);
        rhs.push(b.mul(c, &inv));
    }
    b.enforce_equal(&sum(&lhs), &sum(&rhs));
}

/// `sum_s c_s ln(c_s)` at scale 2^20 with each logarithm hinted and checked.
fn count_log_sum(b: &mut Builder, t: &Table) -> Lc {
    let mut terms = Vec::with_capacity(t.counts.len());
    for c in &t.counts {
        let z = gadgets::is_zero(b, c);
        let x = c + &z;
        let cv = field::low_u64(&c.value());
        let h = b.alloc(field::from_i64(if cv > 0 { ln_count_raw(cv) } else { 0 }));
        gadgets::exp_check(b, &x, &h);
        terms.push(b.mul(c, &h));
    }
    sum(&terms)
}

fn mi_gadget(b: &mut Builder, xs: &[Vec<Lc>], y: &[Vec<Lc>], intervals: usize, seed: &Lc, transcript: &[Lc]) -> Lc {
    let rows = xs.len();
    let (n, k) = (xs[0].len(), y[0].len());

    b.set_section(Tag::Mi, "mi.bin");
    let bx = bin_columns(b, xs, intervals);
    let by = bin_columns(b, y, intervals);
    let ids_x = row_ids(&bx, intervals);
    let ids_y = row_ids(&by, intervals);
    let shift = Fe::from(intervals as u64).pow([n as u64]);
    let ids_xy: Vec<Lc> = ids_x.iter().zip(&ids_y).map(|(a, c)| a + &c.scale(shift)).collect();

    b.set_section(Tag::Mi, "mi.table");
    let cells = |d: usize| (intervals as u128).pow(d as u32);
    let tables: Vec<(Vec<Lc>, Table)> = [(ids_x, n), (ids_y, k), (ids_xy, n + k)]
        .into_iter()
        .map(|(ids, d)| {
            let t = count_table(b, &ids, cells(d), table_id_bits(intervals, d));
            (ids, t)
        })
        .collect();

    let mut alpha_in = vec![seed.clone()];
    alpha_in.extend(transcript.iter().cloned());
    for (ti, (_, t)) in tables.iter().enumerate() {
        let d = [n, k, n + k][ti];
        let width = table_id_bits(intervals, d) + COUNT_BITS;
        let packed: Vec<Lc> = t.ids.iter().zip(&t.counts).map(|(id, c)| &id.scale(field::pow2(COUNT_BITS as u32)) + c).collect();
        for pair in packed.chunks(2) {
            let mut e = pair[0].clone();
            if let Some(p1) = pair.get(1) {
                e = &e + &p1.scale(field::pow2(width as u32));
            }
            alpha_in.push(e);
        }
    }
    let alpha = gadgets::poseidon_hash(b, &alpha_in);
    for (ids, t) in &tables {
        log_derivative(b, &alpha, ids, t);
    }

    b.set_section(Tag::Mi, "mi.ln");
    let sums: Vec<Lc> = tables.iter().map(|(_, t)| count_log_sum(b, t)).collect();

    b.set_section(Tag::Mi, "mi.sum");
    let numer = &(&sums[2] - &sums[0]) - &sums[1];
    let q = gadgets::div_floor_const(b, &numer, rows as u128, ROW_BITS, MI_QUOTIENT_BITS);
    q.add_const(field::from_i64(ln_count_raw(rows as u64)))
}

fn enc_gadget(b: &mut Builder, y: &[Vec<Lc>], pk: &PointLc, esk: Fe, pass: &Lc, digest_pub: &Lc) {
    b.set_section(Tag::Enc, "enc.ecdh");
    let (bits, _) = gadgets::alloc_bits(b, esk, SCALAR_BITS);
    let epk = gadgets::fixed_base_mul(b, &bits);
    gadgets::assert_on_curve(b, pk);
    let shared = gadgets::var_base_mul(b, &bits, pk).x;

    b.set_section(Tag::Enc, "enc.stream");
    let kc = gadgets::poseidon_hash(b, std::slice::from_ref(&shared));
    let mut out = vec![epk.x, epk.y, kc];
    for (i, v) in y.iter().flatten().enumerate() {
        let ks = gadgets::mimc7(b, &Lc::from_u64(i as u64), &shared);
        out.push(v + &ks);
    }

    b.set_section(Tag::Enc, "enc.digest");
    let masked: Vec<Lc> = out.iter().map(|v| b.mul(pass, v)).collect();
    let digest = gadgets::poseidon_hash(b, &masked);
    b.enforce_equal(&digest, digest_pub);
}

pub fn build_audit_circuit(shape: AuditShape, params: AuditParams) -> Result<AuditCircuit> {
    params.validate(&shape)?;
    let mut b = Builder::new(Mode::Shape);
    synthesize(&mut b, &shape, &params, &Inputs::zeros(&shape));
    let cs = b.finish_shape();
    let digest = io::cs_digest(&cs);
    Ok(AuditCircuit { shape, params, cs, digest })
}

/// Honest witness plus everything the sender learned computing it.
#[derive(Clone, Debug)]
pub struct AuditRun {
    pub witness: Witness,
    pub statement: AuditStatement,
    pub native: NativeAudit,
}

pub fn generate_witness(
    circuit: &AuditCircuit,
    d: &Dataset,
    pk: &Point,
    esk: &Scalar,
    threshold: &FixedPoint,
) -> Result<AuditRun> {
    let shape = AuditShape::of(d);
    if shape != circuit.shape {
        return Err(Error::ShapeError(format!("dataset shape {shape:?} differs from circuit {:?}", circuit.shape)));
    }
    let params = circuit.params;
    let native = run_native(d, &params, pk, esk, threshold)?;
    let statement = AuditStatement {
        data_hash: d.commitment().digest,
        threshold: *threshold,
        pass: native.pass,
        mi: native.mi.mi_nats,
        y_enc_digest: native.y_enc_digest,
        pk: *pk,
        algo: params.algo,
        intervals: params.intervals,
        max_iters: params.max_iters,
    };
    let (xs, xns) = dataset::split(d);
    let raw = |m: &Matrix| m.iter().map(|r| r.iter().map(FixedPoint::raw).collect()).collect();
    let inputs = Inputs {
        public: statement.to_public_inputs(shape.m),
        xs: raw(&xs),
        xns: raw(&xns),
        pca: native.pca.clone(),
        esk: field::from_biguint(esk.value()),
    };
    let mut b = Builder::new(Mode::Witness);
    synthesize(&mut b, &shape, &params, &inputs);
    let (witness, failure) = b.finish_witness();
    if let Some(f) = failure {
        return Err(Error::HintFailure(format!(
            "constraint {} in {} ({}) rejects the native hints",
            f.index, f.section, f.tag
        )));
    }
    if witness.assignment.len() != circuit.cs.num_vars {
        return Err(Error::ShapeError("witness length differs from the circuit".into()));
    }
    Ok(AuditRun { witness, statement, native })
}

/// Checks `w` against `cs` with the public inputs taken from `st`.
pub fn is_satisfied(circuit: &AuditCircuit, w: &Witness, st: &AuditStatement) -> Result<Satisfaction> {
    circuit.cs.check(w, &circuit.statement_inputs(st))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Schema;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dataset(rows: usize, n: usize, m: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<Vec<FixedPoint>> = (0..rows)
            .map(|_| {
                let z: f64 = rng.gen_range(-1.0..1.0);
                (0..n + m)
                    .map(|j| {
                        let scale = 1.0 + j as f64;
                        FixedPoint::encode(z * scale + rng.gen_range(-0.5..0.5) / scale).unwrap()
                    })
                    .collect()
            })
            .collect();
        Dataset::new(Schema::synthetic(n, m), data).unwrap()
    }

    fn keys() -> (Point, Scalar) {
        (Point::generator().mul(&Scalar::from_u64(4242)), Scalar::from_u64(777))
    }

    #[test]
    fn algo_text() {
        assert_eq!("pca(3)".parse::<Algo>().unwrap(), Algo::Pca(3));
        assert_eq!("raw".parse::<Algo>().unwrap(), Algo::Raw);
        assert_eq!(Algo::Pca(2).to_string(), "pca(2)");
        assert!("svd".parse::<Algo>().is_err());
    }

    #[test]
    fn shape_errors() {
        let shape = AuditShape { rows: 10, n: 1, m: 2 };
        assert!(build_audit_circuit(shape, AuditParams::new(Algo::Pca(3))).is_err());
        let mut p = AuditParams::new(Algo::Raw);
        p.intervals = 17;
        assert!(build_audit_circuit(shape, p).is_err());
    }

    #[test]
    fn threshold_equal_to_mi_accepts() {
        let d = dataset(24, 1, 3, 2);
        let (pk, esk) = keys();
        let params = AuditParams::new(Algo::Pca(2));
        let circuit = build_audit_circuit(AuditShape::of(&d), params).unwrap();
        let native = run_native(&d, &params, &pk, &esk, &FixedPoint::ZERO).unwrap();
        let (xs, _) = dataset::split(&d);
        assert_eq!(native.mi, estimator::audit_mi_grid(&xs, &native.y, params.intervals).unwrap());
        let run = generate_witness(&circuit, &d, &pk, &esk, &native.mi.mi_nats).unwrap();
        assert!(run.statement.pass);
        assert_eq!(run.statement.mi, native.mi.mi_nats);
        assert!(is_satisfied(&circuit, &run.witness, &run.statement).unwrap().is_ok());
    }

    #[test]
    fn honest_audit_satisfies_both_branches() {
        let d = dataset(24, 1, 3, 1);
        let (pk, esk) = keys();
        let circuit = build_audit_circuit(AuditShape::of(&d), AuditParams::new(Algo::Pca(2))).unwrap();
        for t in [0.0, 5.0] {
            let run = generate_witness(&circuit, &d, &pk, &esk, &FixedPoint::encode(t).unwrap()).unwrap();
            assert_eq!(run.statement.pass, t > 0.0);
            assert!(is_satisfied(&circuit, &run.witness, &run.statement).unwrap().is_ok());
            let mut bad = run.statement.clone();
            bad.mi = FixedPoint::from_raw(bad.mi.raw() + 1).unwrap();
            assert!(!is_satisfied(&circuit, &run.witness, &bad).unwrap().is_ok());
        }
    }

    #[test]
    fn raw_algorithm_and_data_vars() {
        let d = dataset(12, 2, 2, 2);
        let (pk, esk) = keys();
        let circuit = build_audit_circuit(AuditShape::of(&d), AuditParams::new(Algo::Raw)).unwrap();
        let run = generate_witness(&circuit, &d, &pk, &esk, &FixedPoint::encode(10.0).unwrap()).unwrap();
        assert!(is_satisfied(&circuit, &run.witness, &run.statement).unwrap().is_ok());
        assert_eq!(run.witness.assignment[DATA_VAR_OFFSET], d.rows[0][0].field());
        let mut w = run.witness.clone();
        w.assignment[DATA_VAR_OFFSET + 3] += Fe::from(1u64);
        match is_satisfied(&circuit, &w, &run.statement).unwrap() {
            Satisfaction::Violated(u) => assert_eq!(u.tag, Tag::Hash),
            other => panic!("expected hash violation, got {other}"),
        }
    }

    #[test]
    fn structure_ignores_values() {
        let (pk, esk) = keys();
        let params = AuditParams::new(Algo::Pca(1));
        let a = build_audit_circuit(AuditShape { rows: 16, n: 1, m: 2 }, params).unwrap();
        for seed in 0..3 {
            let d = dataset(16, 1, 2, seed);
            let run = generate_witness(&a, &d, &pk, &esk, &FixedPoint::encode(0.3).unwrap()).unwrap();
            assert!(is_satisfied(&a, &run.witness, &run.statement).unwrap().is_ok());
        }
    }
}
