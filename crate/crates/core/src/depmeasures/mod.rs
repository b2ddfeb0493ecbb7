//! Stochastic dependence estimators between two paired sample series, plus a
//! permutation-based significance test.
//!
//! All estimators are pure functions of their inputs. Signed rank/linear
//! coefficients keep their sign in [`DependencyEstimate::value`]; the
//! magnitude used for influence ranking is [`DependencyEstimate::ranking_value`].

mod knn;
mod mic;

pub use knn::{continuous_mi_knn, digamma, DEFAULT_KNN_K, MIN_KNN_SAMPLES};
pub use mic::{mic, DEFAULT_MIC_EXPONENT};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("empty sample series")]
    Empty,
    #[error("series lengths differ: {x} vs {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("{measure} needs at least {need} samples, got {got}")]
    TooFewSamples {
        measure: Measure,
        need: usize,
        got: usize,
    },
    #[error("discrete mutual information requires discrete input series")]
    DiscreteInputRequired,
    #[error("neighbor count k={k} must satisfy 1 <= k < n={n}")]
    BadNeighborCount { k: usize, n: usize },
    #[error("permutation test needs at least one permutation")]
    NoPermutations,
}

/// What kind of values a series holds. Categorical values must be pre-mapped
/// to numeric codes before any numeric estimator runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SampleKind {
    Categorical,
    DiscreteNumeric,
    Continuous,
}

impl SampleKind {
    pub fn is_discrete(self) -> bool {
        !matches!(self, SampleKind::Continuous)
    }
}

/// An ordered list of scalar observations.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSeries {
    pub values: Vec<f64>,
    pub kind: SampleKind,
}

impl SampleSeries {
    pub fn discrete(values: Vec<f64>) -> Self {
        SampleSeries {
            values,
            kind: SampleKind::DiscreteNumeric,
        }
    }

    pub fn continuous(values: Vec<f64>) -> Self {
        SampleSeries {
            values,
            kind: SampleKind::Continuous,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Two series paired positionally (same time step).
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSamples {
    pub x: SampleSeries,
    pub y: SampleSeries,
}

impl PairedSamples {
    pub fn new(x: SampleSeries, y: SampleSeries) -> Result<Self, MeasureError> {
        if x.is_empty() || y.is_empty() {
            return Err(MeasureError::Empty);
        }
        if x.len() != y.len() {
            return Err(MeasureError::LengthMismatch {
                x: x.len(),
                y: y.len(),
            });
        }
        Ok(PairedSamples { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn swapped(&self) -> PairedSamples {
        PairedSamples {
            x: self.y.clone(),
            y: self.x.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Measure {
    Pearson,
    Kendall,
    Spearman,
    DistanceCorrelation,
    DiscreteMi,
    ContinuousMi,
    Mic,
}

impl Measure {
    pub const ALL: [Measure; 7] = [
        Measure::Pearson,
        Measure::Kendall,
        Measure::Spearman,
        Measure::DistanceCorrelation,
        Measure::DiscreteMi,
        Measure::ContinuousMi,
        Measure::Mic,
    ];

    /// Measures whose values carry a sign; rankings compare their magnitude.
    pub fn is_signed(self) -> bool {
        matches!(self, Measure::Pearson | Measure::Kendall | Measure::Spearman)
    }

    pub fn name(self) -> &'static str {
        match self {
            Measure::Pearson => "pearson",
            Measure::Kendall => "kendall",
            Measure::Spearman => "spearman",
            Measure::DistanceCorrelation => "dcor",
            Measure::DiscreteMi => "discrete_mi",
            Measure::ContinuousMi => "continuous_mi",
            Measure::Mic => "mic",
        }
    }

    pub fn parse(s: &str) -> Option<Measure> {
        Measure::ALL.iter().copied().find(|m| m.name() == s)
    }
}

impl std::fmt::Display for Measure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters for estimators that take any: neighbor count for the kNN
/// mutual-information estimator and the bin-budget exponent for MIC.
#[derive(Debug, Clone, Copy)]
pub struct EstimatorParams {
    pub knn_k: usize,
    pub mic_exponent: f64,
}

impl Default for EstimatorParams {
    fn default() -> Self {
        EstimatorParams {
            knn_k: DEFAULT_KNN_K,
            mic_exponent: DEFAULT_MIC_EXPONENT,
        }
    }
}

/// Result of one dependence estimation.
///
/// `value` is the comparable statistic (normalized distance correlation,
/// clamped kNN mutual information); `raw_value` keeps the unnormalized or
/// unclamped companion quantity (squared distance covariance, unclamped
/// mutual information). `defined` is false when the statistic degenerates,
/// e.g. zero variance or too few samples for the kNN estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DependencyEstimate {
    pub measure: Measure,
    pub value: f64,
    pub raw_value: f64,
    pub sample_count: usize,
    pub defined: bool,
}

impl DependencyEstimate {
    pub fn undefined(measure: Measure, sample_count: usize) -> Self {
        DependencyEstimate {
            measure,
            value: 0.0,
            raw_value: 0.0,
            sample_count,
            defined: false,
        }
    }

    fn defined(measure: Measure, value: f64, raw_value: f64, sample_count: usize) -> Self {
        DependencyEstimate {
            measure,
            value,
            raw_value,
            sample_count,
            defined: true,
        }
    }

    /// Magnitude used when ranking influences; `None` when undefined.
    /// A defined estimate always outranks an undefined one.
    pub fn ranking_value(&self) -> Option<f64> {
        self.defined.then(|| self.value.abs())
    }

    /// Strict comparison used by detection: does `self` score higher than
    /// `other`? Equal values and two undefined estimates do not count.
    pub fn beats(&self, other: &DependencyEstimate) -> bool {
        match (self.ranking_value(), other.ranking_value()) {
            (Some(a), Some(b)) => a > b,
            (Some(_), None) => true,
            (None, _) => false,
        }
    }
}

/// Dispatches to the estimator selected by `measure`.
pub fn estimate(
    measure: Measure,
    p: &PairedSamples,
    params: &EstimatorParams,
) -> Result<DependencyEstimate, MeasureError> {
    match measure {
        Measure::Pearson => pearson(p),
        Measure::Kendall => kendall_tau(p),
        Measure::Spearman => spearman_rho(p),
        Measure::DistanceCorrelation => distance_correlation(p),
        Measure::DiscreteMi => discrete_mi(p),
        Measure::ContinuousMi => continuous_mi_knn(p, params.knn_k),
        Measure::Mic => mic(p, params.mic_exponent),
    }
}

fn require_samples(measure: Measure, p: &PairedSamples, need: usize) -> Result<(), MeasureError> {
    if p.is_empty() {
        return Err(MeasureError::Empty);
    }
    if p.len() < need {
        return Err(MeasureError::TooFewSamples {
            measure,
            need,
            got: p.len(),
        });
    }
    Ok(())
}

/// Pearson correlation coefficient r = cov(x,y) / (sigma_x * sigma_y).
pub fn pearson(p: &PairedSamples) -> Result<DependencyEstimate, MeasureError> {
    require_samples(Measure::Pearson, p, 2)?;
    let n = p.len();
    let (x, y) = (&p.x.values, &p.y.values);
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Ok(DependencyEstimate::undefined(Measure::Pearson, n));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok(DependencyEstimate::defined(Measure::Pearson, r, r, n))
}

/// Kendall rank correlation tau = (concordant - discordant) / (n(n-1)/2).
///
/// Pairs tied in x or y are neither concordant nor discordant; the
/// denominator stays n(n-1)/2. Computed in O(n log n) by counting strict
/// inversions after sorting; the quadratic pair enumeration serves as the
/// test oracle.
pub fn kendall_tau(p: &PairedSamples) -> Result<DependencyEstimate, MeasureError> {
    require_samples(Measure::Kendall, p, 2)?;
    let n = p.len();
    let mut pairs: Vec<(f64, f64)> = p
        .x
        .values
        .iter()
        .copied()
        .zip(p.y.values.iter().copied())
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let n0 = n * (n - 1) / 2;
    // Tie bookkeeping over the x-sorted sequence.
    let mut tied_x = 0usize; // pairs tied in x
    let mut tied_xy = 0usize; // pairs tied in both
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pairs[j + 1].0 == pairs[i].0 {
            j += 1;
        }
        let g = j - i + 1;
        tied_x += g * (g - 1) / 2;
        let mut k = i;
        while k <= j {
            let mut l = k;
            while l + 1 <= j && pairs[l + 1].1 == pairs[k].1 {
                l += 1;
            }
            let h = l - k + 1;
            tied_xy += h * (h - 1) / 2;
            k = l + 1;
        }
        i = j + 1;
    }
    let mut ys: Vec<f64> = pairs.iter().map(|&(_, y)| y).collect();
    let tied_y = {
        let mut sorted = ys.clone();
        sorted.sort_by(f64::total_cmp);
        let mut t = 0usize;
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i;
            while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            let g = j - i + 1;
            t += g * (g - 1) / 2;
            i = j + 1;
        }
        t
    };
    let discordant = count_strict_inversions(&mut ys);
    // Pairs distinct in both coordinates split into concordant + discordant.
    let distinct = n0 + tied_xy - tied_x - tied_y;
    let concordant = distinct - discordant;
    let tau = (concordant as f64 - discordant as f64) / n0 as f64;
    Ok(DependencyEstimate::defined(Measure::Kendall, tau, tau, n))
}

/// Counts pairs i < j with v[i] > v[j] by merge sort. The input must already
/// be ordered so that within tied-x groups y ascends, which keeps tied-x
/// pairs out of the count; tied-y pairs are excluded by the strict compare.
fn count_strict_inversions(v: &mut [f64]) -> usize {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mut buf = v.to_vec();
    merge_count(v, &mut buf)
}

fn merge_count(v: &mut [f64], buf: &mut [f64]) -> usize {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = v.split_at_mut(mid);
    let (bl, br) = buf.split_at_mut(mid);
    let mut inv = merge_count(left, bl) + merge_count(right, br);
    let (mut i, mut j, mut k) = (0, 0, 0);
    while i < left.len() && j < right.len() {
        if left[i] > right[j] {
            inv += left.len() - i;
            buf[k] = right[j];
            j += 1;
        } else {
            buf[k] = left[i];
            i += 1;
        }
        k += 1;
    }
    while i < left.len() {
        buf[k] = left[i];
        i += 1;
        k += 1;
    }
    while j < right.len() {
        buf[k] = right[j];
        j += 1;
        k += 1;
    }
    v.copy_from_slice(&buf[..n]);
    inv
}

/// Fractional ranks with ties receiving the average rank (1-based).
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of the rank vectors.
pub fn spearman_rho(p: &PairedSamples) -> Result<DependencyEstimate, MeasureError> {
    require_samples(Measure::Spearman, p, 2)?;
    let rx = average_ranks(&p.x.values);
    let ry = average_ranks(&p.y.values);
    let ranked = PairedSamples {
        x: SampleSeries::discrete(rx),
        y: SampleSeries::discrete(ry),
    };
    let est = pearson(&ranked)?;
    Ok(DependencyEstimate {
        measure: Measure::Spearman,
        ..est
    })
}

/// Normalized distance correlation from double-centered distance matrices.
///
/// `raw_value` is the squared sample distance covariance (the plain mean of
/// the centered products); `value` is dCov normalized by the geometric mean
/// of the distance variances so scores are comparable across components.
/// Runs in O(n^2) time and O(n) memory.
pub fn distance_correlation(p: &PairedSamples) -> Result<DependencyEstimate, MeasureError> {
    require_samples(Measure::DistanceCorrelation, p, 2)?;
    let n = p.len();
    let nf = n as f64;
    let (x, y) = (&p.x.values, &p.y.values);

    let mut a_row = vec![0.0; n];
    let mut b_row = vec![0.0; n];
    for j in 0..n {
        let mut sa = 0.0;
        let mut sb = 0.0;
        for k in 0..n {
            sa += (x[j] - x[k]).abs();
            sb += (y[j] - y[k]).abs();
        }
        a_row[j] = sa / nf;
        b_row[j] = sb / nf;
    }
    let a_mean = a_row.iter().sum::<f64>() / nf;
    let b_mean = b_row.iter().sum::<f64>() / nf;

    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for j in 0..n {
        for k in 0..n {
            let a = (x[j] - x[k]).abs() - a_row[j] - a_row[k] + a_mean;
            let b = (y[j] - y[k]).abs() - b_row[j] - b_row[k] + b_mean;
            sab += a * b;
            saa += a * a;
            sbb += b * b;
        }
    }
    let dcov2 = sab / (nf * nf);
    let dvar_x = saa / (nf * nf);
    let dvar_y = sbb / (nf * nf);
    if dvar_x <= 0.0 || dvar_y <= 0.0 {
        return Ok(DependencyEstimate {
            raw_value: dcov2,
            ..DependencyEstimate::undefined(Measure::DistanceCorrelation, n)
        });
    }
    let dcor = (dcov2.max(0.0) / (dvar_x * dvar_y).sqrt()).sqrt().min(1.0);
    Ok(DependencyEstimate::defined(
        Measure::DistanceCorrelation,
        dcor,
        dcov2,
        n,
    ))
}

/// Plug-in mutual information for discrete series, in bits.
///
/// Probabilities come from frequency counts; 0 log 0 terms contribute
/// nothing. Terms are summed in a canonical order so the result is exactly
/// symmetric in x and y.
pub fn discrete_mi(p: &PairedSamples) -> Result<DependencyEstimate, MeasureError> {
    if p.is_empty() {
        return Err(MeasureError::Empty);
    }
    if !p.x.kind.is_discrete() || !p.y.kind.is_discrete() {
        return Err(MeasureError::DiscreteInputRequired);
    }
    let n = p.len();
    let xi = value_codes(&p.x.values);
    let yi = value_codes(&p.y.values);
    let nx = xi.iter().max().map_or(0, |&m| m + 1);
    let ny = yi.iter().max().map_or(0, |&m| m + 1);
    let mut joint = std::collections::BTreeMap::<(usize, usize), usize>::new();
    let mut mx = vec![0usize; nx];
    let mut my = vec![0usize; ny];
    for i in 0..n {
        *joint.entry((xi[i], yi[i])).or_insert(0) += 1;
        mx[xi[i]] += 1;
        my[yi[i]] += 1;
    }
    let nf = n as f64;
    let mut terms: Vec<f64> = joint
        .iter()
        .map(|(&(a, b), &c)| {
            let pxy = c as f64 / nf;
            pxy * ((c as f64 * nf) / (mx[a] as f64 * my[b] as f64)).log2()
        })
        .collect();
    terms.sort_by(f64::total_cmp);
    let mi: f64 = terms.iter().sum();
    Ok(DependencyEstimate::defined(
        Measure::DiscreteMi,
        mi.max(0.0),
        mi,
        n,
    ))
}

/// Maps each value to its index in the sorted list of distinct values.
fn value_codes(values: &[f64]) -> Vec<usize> {
    let mut distinct: Vec<f64> = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    values
        .iter()
        .map(|v| distinct.partition_point(|d| d.total_cmp(v).is_lt()))
        .collect()
}

/// Permutation p-value: the smoothed fraction of y-permutations whose
/// estimate magnitude reaches the observed magnitude,
/// (1 + #exceed) / (1 + n_perm). Returns 1.0 when the observed estimate is
/// undefined. Deterministic given the seed.
pub fn permutation_p_value(
    p: &PairedSamples,
    measure: Measure,
    params: &EstimatorParams,
    n_perm: usize,
    rng_seed: u64,
) -> Result<f64, MeasureError> {
    if n_perm == 0 {
        return Err(MeasureError::NoPermutations);
    }
    let observed = estimate(measure, p, params)?;
    if !observed.defined {
        return Ok(1.0);
    }
    let obs = observed.value.abs();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut shuffled = p.clone();
    let mut exceed = 0usize;
    for _ in 0..n_perm {
        shuffled.y.values.shuffle(&mut rng);
        let est = estimate(measure, &shuffled, params)?;
        if est.defined && est.value.abs() >= obs {
            exceed += 1;
        }
    }
    Ok((1 + exceed) as f64 / (1 + n_perm) as f64)
}
