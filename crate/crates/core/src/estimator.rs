//! Histogram (hypercube) entropy and mutual-information estimation.
//!
//! Every estimate is available in two forms. The float path evaluates the
//! plugin formulas in `f64`. The fixed path works from integer counts with
//! the table `L(c) = round(ln(c) * 2^20)`:
//!
//! ```text
//! H(X)   = L(N) + floor(-(sum_x c L(c)) / N)
//! I(X;Y) = L(N) + floor((sum_xy c L(c) - sum_x c L(c) - sum_y c L(c)) / N)
//! ```
//!
//! which is exactly what the audit circuit computes.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fixed::{ln_count_raw, FixedPoint, SCALE_BITS};

pub const DEFAULT_INTERVALS: usize = 10;
/// Tolerance for fixed-point information quantities.
pub const FXP_SLACK: f64 = 1.0 / 1024.0;

#[derive(Clone, Debug, PartialEq)]
pub struct BinningSpec {
    pub bandwidth: Vec<f64>,
    pub origin: Vec<f64>,
    pub intervals_per_dim: usize,
}

impl BinningSpec {
    pub fn new(bandwidth: Vec<f64>, origin: Vec<f64>, intervals_per_dim: usize) -> Result<Self> {
        if bandwidth.len() != origin.len() {
            return Err(Error::ShapeMismatch("bandwidth and origin lengths differ".into()));
        }
        if bandwidth.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
            return Err(Error::DomainError("bandwidth must be positive".into()));
        }
        if intervals_per_dim < 2 {
            return Err(Error::DomainError("need at least two intervals".into()));
        }
        Ok(BinningSpec { bandwidth, origin, intervals_per_dim })
    }

    /// Same bandwidth in every dimension, grid anchored at zero.
    pub fn uniform(dims: usize, bandwidth: f64, intervals: usize) -> Result<Self> {
        Self::new(vec![bandwidth; dims], vec![0.0; dims], intervals)
    }

    /// Grid covering the data: origin at the column minimum, bandwidth
    /// `range / intervals` (1.0 for a constant column).
    pub fn fit(x: &[Vec<FixedPoint>], intervals: usize) -> Result<Self> {
        let dims = x.first().map_or(0, Vec::len);
        let mut origin = Vec::with_capacity(dims);
        let mut bandwidth = Vec::with_capacity(dims);
        for j in 0..dims {
            let col = x.iter().map(|r| r[j].decode());
            let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            origin.push(lo);
            bandwidth.push(if hi > lo { (hi - lo) / intervals as f64 } else { 1.0 });
        }
        Self::new(bandwidth, origin, intervals)
    }

    pub fn dims(&self) -> usize {
        self.bandwidth.len()
    }
}

pub fn bin_index(x: &[FixedPoint], spec: &BinningSpec) -> Vec<u32> {
    let top = (spec.intervals_per_dim - 1) as f64;
    x.iter()
        .enumerate()
        .map(|(j, v)| ((v.decode() - spec.origin[j]) / spec.bandwidth[j]).floor().clamp(0.0, top) as u32)
        .collect()
}

/// Data-derived grid evaluated in exact integer arithmetic.
///
/// Value `x` falls in interval `#{ j in 1..I : I (x - min) >= j span }`,
/// i.e. `min(floor(I (x - min) / span), I - 1)`; a constant column maps to
/// `I - 1`. The circuit enforces the same rule with comparisons.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedGrid {
    pub min_raw: Vec<i64>,
    pub max_raw: Vec<i64>,
    pub intervals: usize,
}

impl FixedGrid {
    pub fn fit(x: &[Vec<FixedPoint>], intervals: usize) -> Self {
        let dims = x.first().map_or(0, Vec::len);
        let mut min_raw = vec![i64::MAX; dims];
        let mut max_raw = vec![i64::MIN; dims];
        for row in x {
            for (j, v) in row.iter().enumerate() {
                min_raw[j] = min_raw[j].min(v.raw());
                max_raw[j] = max_raw[j].max(v.raw());
            }
        }
        FixedGrid { min_raw, max_raw, intervals }
    }

    pub fn index_of(&self, j: usize, raw: i64) -> u32 {
        let top = self.intervals as i128 - 1;
        let span = self.max_raw[j] as i128 - self.min_raw[j] as i128;
        let off = raw as i128 - self.min_raw[j] as i128;
        if span == 0 {
            return top as u32;
        }
        (self.intervals as i128 * off).div_euclid(span).clamp(0, top) as u32
    }

    pub fn bin(&self, x: &[FixedPoint]) -> Vec<u32> {
        x.iter().enumerate().map(|(j, v)| self.index_of(j, v.raw())).collect()
    }

    /// Float spec describing the same grid.
    pub fn to_spec(&self) -> BinningSpec {
        let s = (SCALE_BITS as f64).exp2();
        let bw = self
            .min_raw
            .iter()
            .zip(&self.max_raw)
            .map(|(lo, hi)| if hi > lo { (hi - lo) as f64 / s / self.intervals as f64 } else { 1.0 })
            .collect();
        BinningSpec {
            bandwidth: bw,
            origin: self.min_raw.iter().map(|v| *v as f64 / s).collect(),
            intervals_per_dim: self.intervals,
        }
    }
}

/// Sparse counts over cells.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Histogram {
    pub cells: BTreeMap<Vec<u32>, u64>,
    pub total: u64,
}

impl Histogram {
    pub fn from_counts<I: IntoIterator<Item = u64>>(counts: I) -> Self {
        let mut h = Histogram::default();
        for (i, c) in counts.into_iter().enumerate() {
            if c > 0 {
                h.cells.insert(vec![i as u32], c);
                h.total += c;
            }
        }
        h
    }

    pub fn counts(&self) -> impl Iterator<Item = u64> + '_ {
        self.cells.values().copied()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct JointHistogram {
    pub cells: BTreeMap<(Vec<u32>, Vec<u32>), u64>,
    pub total: u64,
}

impl JointHistogram {
    pub fn from_cells<I: IntoIterator<Item = ((Vec<u32>, Vec<u32>), u64)>>(cells: I) -> Self {
        let mut h = JointHistogram::default();
        for (k, c) in cells {
            if c > 0 {
                *h.cells.entry(k).or_default() += c;
                h.total += c;
            }
        }
        h
    }

    pub fn from_indices(xi: &[Vec<u32>], yi: &[Vec<u32>]) -> Self {
        Self::from_cells(xi.iter().cloned().zip(yi.iter().cloned()).map(|k| (k, 1)))
    }

    /// Combines counts from disjoint row partitions.
    pub fn merge(&mut self, other: &JointHistogram) {
        for (k, c) in &other.cells {
            *self.cells.entry(k.clone()).or_default() += c;
        }
        self.total += other.total;
    }

    pub fn x_marginal(&self) -> Histogram {
        let mut h = Histogram { total: self.total, ..Default::default() };
        for ((x, _), c) in &self.cells {
            *h.cells.entry(x.clone()).or_default() += c;
        }
        h
    }

    pub fn y_marginal(&self) -> Histogram {
        let mut h = Histogram { total: self.total, ..Default::default() };
        for ((_, y), c) in &self.cells {
            *h.cells.entry(y.clone()).or_default() += c;
        }
        h
    }

    pub fn transpose(&self) -> JointHistogram {
        JointHistogram {
            cells: self.cells.iter().map(|((x, y), c)| ((y.clone(), x.clone()), *c)).collect(),
            total: self.total,
        }
    }
}

pub fn build_histogram(
    x: &[Vec<FixedPoint>],
    y: &[Vec<FixedPoint>],
    spec_x: &BinningSpec,
    spec_y: &BinningSpec,
) -> Result<JointHistogram> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!("{} rows vs {} rows", x.len(), y.len())));
    }
    let xi: Vec<_> = x.iter().map(|r| bin_index(r, spec_x)).collect();
    let yi: Vec<_> = y.iter().map(|r| bin_index(r, spec_y)).collect();
    Ok(JointHistogram::from_indices(&xi, &yi))
}

pub fn build_histogram_grid(
    x: &[Vec<FixedPoint>],
    y: &[Vec<FixedPoint>],
    gx: &FixedGrid,
    gy: &FixedGrid,
) -> Result<JointHistogram> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!("{} rows vs {} rows", x.len(), y.len())));
    }
    let xi: Vec<_> = x.iter().map(|r| gx.bin(r)).collect();
    let yi: Vec<_> = y.iter().map(|r| gy.bin(r)).collect();
    Ok(JointHistogram::from_indices(&xi, &yi))
}

// ---- float path ----

pub fn entropy_f64(h: &Histogram) -> f64 {
    let n = h.total as f64;
    let mut acc = 0.0;
    for c in h.counts() {
        let p = c as f64 / n;
        acc -= p * p.ln();
    }
    acc.max(0.0)
}

pub fn conditional_entropy_f64(h: &JointHistogram) -> f64 {
    let n = h.total as f64;
    let y = h.y_marginal();
    let mut acc = 0.0;
    for ((_, yc), c) in &h.cells {
        let pxy = *c as f64 / n;
        acc -= pxy * (*c as f64 / y.cells[yc] as f64).ln();
    }
    acc.max(0.0)
}

pub fn mutual_information_f64(h: &JointHistogram) -> f64 {
    let n = h.total as f64;
    let (xm, ym) = (h.x_marginal(), h.y_marginal());
    let mut acc = 0.0;
    for ((xc, yc), c) in &h.cells {
        let c = *c as f64;
        acc += c / n * (c * n / (xm.cells[xc] as f64 * ym.cells[yc] as f64)).ln();
    }
    acc.max(0.0)
}

// ---- fixed path ----

/// `sum c * L(c)` over the given counts.
pub fn count_log_sum(counts: impl Iterator<Item = u64>) -> i128 {
    counts.map(|c| c as i128 * ln_count_raw(c) as i128).sum()
}

fn fxp(raw: i128) -> FixedPoint {
    FixedPoint::from_raw_scaled(raw, SCALE_BITS).expect("information quantity fits fixed range")
}

pub fn entropy(h: &Histogram) -> FixedPoint {
    let n = h.total as i128;
    fxp(ln_count_raw(h.total) as i128 + (-count_log_sum(h.counts())).div_euclid(n))
}

pub fn conditional_entropy(h: &JointHistogram) -> FixedPoint {
    let n = h.total as i128;
    let s = count_log_sum(h.y_marginal().counts()) - count_log_sum(h.cells.values().copied());
    fxp(s.div_euclid(n))
}

/// Numerator `S` of the fixed-point MI formula.
pub fn mi_numerator(h: &JointHistogram) -> i128 {
    count_log_sum(h.cells.values().copied())
        - count_log_sum(h.x_marginal().counts())
        - count_log_sum(h.y_marginal().counts())
}

pub fn mutual_information(h: &JointHistogram) -> FixedPoint {
    let n = h.total as i128;
    fxp(ln_count_raw(h.total) as i128 + mi_numerator(h).div_euclid(n))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MIResult {
    pub mi_nats: FixedPoint,
    pub entropy_x_nats: FixedPoint,
    /// `mi / entropy`, 0 when the entropy is 0.
    pub ratio: FixedPoint,
    pub mi_f64: f64,
    pub entropy_f64: f64,
}

impl MIResult {
    fn from_hist(h: &JointHistogram) -> Self {
        let mi = mutual_information(h);
        let hx = entropy(&h.x_marginal());
        let ratio = if hx.raw() > 0 { mi.div(&hx).expect("ratio in range") } else { FixedPoint::ZERO };
        MIResult {
            mi_nats: mi,
            entropy_x_nats: hx,
            ratio,
            mi_f64: mutual_information_f64(h),
            entropy_f64: entropy_f64(&h.x_marginal()),
        }
    }

    pub fn ratio_f64(&self) -> f64 {
        if self.entropy_f64 > 0.0 {
            self.mi_f64 / self.entropy_f64
        } else {
            0.0
        }
    }
}

pub fn audit_mi(
    xs: &[Vec<FixedPoint>],
    y: &[Vec<FixedPoint>],
    spec_x: &BinningSpec,
    spec_y: &BinningSpec,
) -> Result<MIResult> {
    Ok(MIResult::from_hist(&build_histogram(xs, y, spec_x, spec_y)?))
}

/// MI over data-derived grids; the variant the audit circuit proves.
pub fn audit_mi_grid(xs: &[Vec<FixedPoint>], y: &[Vec<FixedPoint>], intervals: usize) -> Result<MIResult> {
    let gx = FixedGrid::fit(xs, intervals);
    let gy = FixedGrid::fit(y, intervals);
    Ok(MIResult::from_hist(&build_histogram_grid(xs, y, &gx, &gy)?))
}

pub fn default_threshold(entropy_x: &FixedPoint) -> FixedPoint {
    threshold_fraction(entropy_x, 0.4)
}

pub fn threshold_fraction(entropy_x: &FixedPoint, fraction: f64) -> FixedPoint {
    let f = FixedPoint::encode(fraction).expect("fraction in range");
    entropy_x.mul(&f).expect("threshold in range")
}

/// Cell id `sum_d b_d I^d` for an index vector.
pub fn cell_id(idx: &[u32], intervals: usize) -> u128 {
    idx.iter().rev().fold(0u128, |acc, b| acc * intervals as u128 + *b as u128)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fx(v: f64) -> FixedPoint {
        FixedPoint::encode(v).unwrap()
    }

    fn joint(cells: &[((u32, u32), u64)]) -> JointHistogram {
        JointHistogram::from_cells(cells.iter().map(|((x, y), c)| ((vec![*x], vec![*y]), *c)))
    }

    #[test]
    fn bin_index_examples() {
        let s1 = BinningSpec::uniform(1, 1.0, 10).unwrap();
        assert_eq!(bin_index(&[fx(0.5)], &s1), vec![0]);
        assert_eq!(bin_index(&[fx(-0.1)], &s1), vec![0]);
        let s2 = BinningSpec::uniform(1, 0.5, 10).unwrap();
        assert_eq!(bin_index(&[fx(3.7)], &s2), vec![7]);
        assert_eq!(bin_index(&[fx(300.0)], &s2), vec![9]);
        assert!(BinningSpec::uniform(1, 0.0, 10).is_err());
        assert!(BinningSpec::uniform(1, 1.0, 1).is_err());
    }

    #[test]
    fn histogram_examples() {
        let s = BinningSpec::uniform(1, 1.0, 10).unwrap();
        let same: Vec<_> = (0..4).map(|_| vec![fx(2.0)]).collect();
        let h = build_histogram(&same, &same, &s, &s).unwrap();
        assert_eq!(h.cells.len(), 1);
        assert_eq!(h.cells.values().next(), Some(&4));
        let x: Vec<_> = [0.0, 0.0, 1.0, 1.0].iter().map(|v| vec![fx(*v)]).collect();
        let y: Vec<_> = [0.0, 1.0, 0.0, 1.0].iter().map(|v| vec![fx(*v)]).collect();
        let h = build_histogram(&x, &y, &s, &s).unwrap();
        assert_eq!(h.cells.len(), 4);
        assert!(h.cells.values().all(|c| *c == 1));
        let hx = build_histogram(&x, &x, &s, &s).unwrap().x_marginal();
        assert_eq!(h.x_marginal(), hx);
        assert!(matches!(build_histogram(&x, &y[..3], &s, &s), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn entropy_examples() {
        let u4 = Histogram::from_counts([1, 1, 1, 1]);
        assert!((entropy(&u4).decode() - 4f64.ln()).abs() < 1e-5);
        assert_eq!(entropy(&Histogram::from_counts([7])).raw(), 0);
        assert!((entropy(&Histogram::from_counts([3, 1])).decode() - 0.562335).abs() < 1e-5);
        assert!((entropy_f64(&Histogram::from_counts([3, 1])) - 0.562335).abs() < 1e-6);
    }

    #[test]
    fn conditional_and_mi_examples() {
        let diag = joint(&[((0, 0), 3), ((1, 1), 5)]);
        assert_eq!(conditional_entropy(&diag).raw(), 0);
        let prod = joint(&[((0, 0), 1), ((0, 1), 1), ((1, 0), 1), ((1, 1), 1)]);
        // the fixed path rounds each log; independence comes out within an ulp
        assert!(mutual_information(&prod).raw().abs() <= 1);
        assert_eq!(mutual_information_f64(&prod), 0.0);
        assert!((conditional_entropy(&prod).decode() - 2f64.ln()).abs() < 1e-5);
        let h = joint(&[((0, 0), 2), ((0, 1), 1), ((1, 0), 1), ((1, 1), 2)]);
        assert!((conditional_entropy(&h).decode() - 0.636514).abs() < 1e-5);
        assert!((conditional_entropy_f64(&h) - 0.636514).abs() < 1e-6);
        assert!((mutual_information(&h).decode() - 0.056633).abs() < 1e-5);
        assert!((mutual_information_f64(&h) - 0.056633).abs() < 1e-6);
        let x2 = joint(&[((0, 0), 2), ((1, 1), 2)]);
        assert!((mutual_information(&x2).decode() - 2f64.ln()).abs() < 1e-5);
    }

    #[test]
    fn audit_mi_examples() {
        let xs: Vec<_> = (0..40).map(|i| vec![fx((i % 4) as f64)]).collect();
        let r = audit_mi_grid(&xs, &xs, 10).unwrap();
        assert!((r.ratio.decode() - 1.0).abs() < 1e-3);
        let constant: Vec<_> = (0..40).map(|_| vec![fx(1.0)]).collect();
        let r = audit_mi_grid(&xs, &constant, 10).unwrap();
        assert_eq!(r.mi_nats.raw(), 0);
        let r = audit_mi_grid(&constant, &xs, 10).unwrap();
        assert_eq!(r.ratio.raw(), 0);
    }

    #[test]
    fn thresholds() {
        assert!((default_threshold(&fx(1.0)).decode() - 0.4).abs() < 1e-6);
        assert_eq!(default_threshold(&fx(0.0)).raw(), 0);
        assert!((default_threshold(&fx(4f64.ln())).decode() - 0.554518).abs() < 1e-5);
    }

    #[test]
    fn grid_matches_float_spec() {
        let x: Vec<_> = [0.0, 1.0, 2.0, 3.0, 4.0, 2.5].iter().map(|v| vec![fx(*v)]).collect();
        let g = FixedGrid::fit(&x, 10);
        let spec = g.to_spec();
        for r in &x {
            assert_eq!(g.bin(r), bin_index(r, &spec));
        }
        assert_eq!(g.bin(&[fx(4.0)]), vec![9]);
        assert_eq!(g.bin(&[fx(0.0)]), vec![0]);
        let c = FixedGrid::fit(&[vec![fx(1.0)], vec![fx(1.0)]], 10);
        assert_eq!(c.bin(&[fx(1.0)]), vec![9]);
    }

    #[test]
    fn cell_ids() {
        assert_eq!(cell_id(&[3, 2, 1], 10), 123);
        assert_eq!(cell_id(&[], 10), 0);
    }

    fn small_joint() -> impl Strategy<Value = JointHistogram> {
        proptest::collection::vec(((0u32..4, 0u32..4), 0u64..30), 1..12).prop_map(|v| {
            let mut h = JointHistogram::from_cells(v.into_iter().map(|((x, y), c)| ((vec![x], vec![y]), c)));
            if h.total == 0 {
                h = JointHistogram::from_cells([((vec![0], vec![0]), 1)]);
            }
            h
        })
    }

    proptest! {
        #[test]
        fn information_identities(h in small_joint()) {
            let mi = mutual_information(&h).decode();
            prop_assert!(mi >= -FXP_SLACK);
            prop_assert!((mutual_information(&h.transpose()).decode() - mi).abs() <= FXP_SLACK);
            let lhs = entropy(&h.x_marginal()).decode() - conditional_entropy(&h).decode();
            prop_assert!((lhs - mi).abs() <= FXP_SLACK);
            prop_assert!((mutual_information_f64(&h) - mi).abs() <= 1e-3);
        }

        #[test]
        fn merge_is_commutative(a in small_joint(), b in small_joint()) {
            let mut ab = a.clone();
            ab.merge(&b);
            let mut ba = b.clone();
            ba.merge(&a);
            prop_assert_eq!(ab, ba);
        }
    }
}
