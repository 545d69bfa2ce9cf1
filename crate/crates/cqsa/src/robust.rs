//! Inter-cluster verification: similarity metrics over cluster aggregates and
//! the pluggable Byzantine-robust filters.
//!
//! Every filter operates on per-cluster mean updates (`weight_sum /
//! member_count`) so clusters of unequal size, produced by the remainder
//! merge rule, stay comparable. Because the phase encoding is a positive
//! scalar map, filter decisions are identical in the phase and weight
//! domains.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AggregateError {
    #[error("aggregate list must be non-empty")]
    EmptyInput,
    #[error("vectors have mismatched dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("similarity undefined for a zero vector")]
    ZeroVector,
    #[error("need at least {needed} aggregates for this filter, got {actual}")]
    TooFewAggregates { needed: usize, actual: usize },
    #[error("multi-krum selection count {m} exceeds the scoreable range {max}")]
    SelectionCountTooLarge { m: usize, max: usize },
    #[error("trim fraction {0} outside [0, 0.5)")]
    InvalidTrimFraction(f64),
    #[error("trimming removes every value")]
    OverTrimmed,
    #[error("trusted root update is required for trust-weighted aggregation")]
    MissingRoot,
    #[error("every cluster has zero trust")]
    AllTrustZero,
}

/// One cluster's aggregate in both domains, as decoded by the server.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterAggregate {
    pub cluster_index: usize,
    /// Per-coordinate aggregated phases (radians).
    pub theta_sum: Vec<f64>,
    /// Per-coordinate decoded weight sums (`theta_sum / S`).
    pub weight_sum: Vec<f64>,
    pub member_count: usize,
}

/// The mean update a filter sees: `weight_sum / member_count`.
///
/// Dividing by the member count neutralizes the size difference a merged
/// remainder cluster introduces; scaling every input by the same positive
/// factor never changes an argmin/argmax decision.
pub fn normalize_for_comparison(aggregate: &ClusterAggregate) -> Vec<f64> {
    aggregate
        .weight_sum
        .iter()
        .map(|w| w / aggregate.member_count as f64)
        .collect()
}

/// Accept/reject decision over a round's clusters, with per-filter
/// diagnostics aligned to the input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub accepted: BTreeSet<usize>,
    pub rejected: BTreeSet<usize>,
    pub scores: BTreeMap<String, Vec<f64>>,
    /// Set when no cluster survives; the round must not update the model.
    pub round_failed: bool,
}

impl FilterVerdict {
    fn new(accepted: BTreeSet<usize>, all: &[usize]) -> Self {
        let rejected: BTreeSet<usize> =
            all.iter().copied().filter(|i| !accepted.contains(i)).collect();
        let round_failed = accepted.is_empty();
        Self {
            accepted,
            rejected,
            scores: BTreeMap::new(),
            round_failed,
        }
    }
}

fn check_same_dims(vectors: &[Vec<f64>]) -> Result<usize, AggregateError> {
    let first = vectors.first().ok_or(AggregateError::EmptyInput)?;
    for v in vectors.iter().skip(1) {
        if v.len() != first.len() {
            return Err(AggregateError::DimensionMismatch(first.len(), v.len()));
        }
    }
    Ok(first.len())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn dist_sqr(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Directional alignment of two aggregates, in [-1, 1].
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, AggregateError> {
    if a.len() != b.len() {
        return Err(AggregateError::DimensionMismatch(a.len(), b.len()));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(AggregateError::ZeroVector);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64, AggregateError> {
    if a.len() != b.len() {
        return Err(AggregateError::DimensionMismatch(a.len(), b.len()));
    }
    Ok(dist_sqr(a, b).sqrt())
}

/// Result of a Krum-style selection: chosen indices, the per-candidate
/// scores, and whether `n >= 2f + 3` held so the selection guarantee
/// applies.
#[derive(Debug, Clone, PartialEq)]
pub struct KrumSelection {
    pub selected: Vec<usize>,
    pub scores: Vec<f64>,
    pub guarantee_met: bool,
}

fn krum_scores(vectors: &[Vec<f64>], f: usize) -> Result<(Vec<f64>, bool), AggregateError> {
    let n = vectors.len();
    check_same_dims(vectors)?;
    // Scoring needs n - f - 2 >= 1 neighbors per candidate.
    if n < f + 3 {
        return Err(AggregateError::TooFewAggregates {
            needed: f + 3,
            actual: n,
        });
    }
    let neighbors = n - f - 2;
    let mut scores = Vec::with_capacity(n);
    for i in 0..n {
        let mut dists: Vec<f64> = (0..n)
            .filter(|&j| j != i)
            .map(|j| dist_sqr(&vectors[i], &vectors[j]))
            .collect();
        dists.sort_by(f64::total_cmp);
        scores.push(dists[..neighbors].iter().sum());
    }
    Ok((scores, n >= 2 * f + 3))
}

/// Krum: each candidate is scored by the summed squared distances to its
/// `n - f - 2` nearest neighbors; the lowest score wins, ties broken by
/// lowest index.
pub fn krum(vectors: &[Vec<f64>], f: usize) -> Result<KrumSelection, AggregateError> {
    let (scores, guarantee_met) = krum_scores(vectors, f)?;
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    Ok(KrumSelection {
        selected: vec![best],
        scores,
        guarantee_met,
    })
}

/// Multi-Krum: the `m` lowest-scoring candidates, ties broken by lowest
/// index. Selected indices are returned in ascending order.
pub fn multi_krum(
    vectors: &[Vec<f64>],
    f: usize,
    m: usize,
) -> Result<KrumSelection, AggregateError> {
    let (scores, guarantee_met) = krum_scores(vectors, f)?;
    let max = vectors.len() - f - 2;
    if m == 0 || m > max {
        return Err(AggregateError::SelectionCountTooLarge { m, max });
    }
    let mut order: Vec<usize> = (0..vectors.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let mut selected: Vec<usize> = order[..m].to_vec();
    selected.sort_unstable();
    Ok(KrumSelection {
        selected,
        scores,
        guarantee_met,
    })
}

/// Per-coordinate median (mean of the two middle values for even counts).
pub fn coordinate_median(vectors: &[Vec<f64>]) -> Result<Vec<f64>, AggregateError> {
    let dim = check_same_dims(vectors)?;
    let n = vectors.len();
    let mut out = Vec::with_capacity(dim);
    let mut column = vec![0.0; n];
    for c in 0..dim {
        for (i, v) in vectors.iter().enumerate() {
            column[i] = v[c];
        }
        column.sort_by(f64::total_cmp);
        let mid = n / 2;
        out.push(if n % 2 == 0 {
            (column[mid - 1] + column[mid]) / 2.0
        } else {
            column[mid]
        });
    }
    Ok(out)
}

/// Per-coordinate mean after dropping `floor(beta * n)` values from each
/// tail.
pub fn trimmed_mean(vectors: &[Vec<f64>], beta: f64) -> Result<Vec<f64>, AggregateError> {
    if !(0.0..0.5).contains(&beta) {
        return Err(AggregateError::InvalidTrimFraction(beta));
    }
    let dim = check_same_dims(vectors)?;
    let n = vectors.len();
    let trim = (beta * n as f64).floor() as usize;
    if 2 * trim >= n {
        return Err(AggregateError::OverTrimmed);
    }
    let kept = n - 2 * trim;
    let mut out = Vec::with_capacity(dim);
    let mut column = vec![0.0; n];
    for c in 0..dim {
        for (i, v) in vectors.iter().enumerate() {
            column[i] = v[c];
        }
        column.sort_by(f64::total_cmp);
        out.push(column[trim..n - trim].iter().sum::<f64>() / kept as f64);
    }
    Ok(out)
}

/// Trust-weighted aggregation against a server-held root update.
#[derive(Debug, Clone, PartialEq)]
pub struct FlTrustOutcome {
    pub aggregate: Vec<f64>,
    /// ReLU-clipped cosine similarity to the root, per input.
    pub trust_scores: Vec<f64>,
}

/// Scores each aggregate by `max(0, cos(v, root))`, rescales the trusted
/// ones to the root norm, combines them by trust-weighted average, and
/// rescales the combination back to the root norm, so the output magnitude
/// always matches the trusted reference. Zero-norm inputs get zero trust.
pub fn fltrust_aggregate(
    vectors: &[Vec<f64>],
    root: &[f64],
) -> Result<FlTrustOutcome, AggregateError> {
    let dim = check_same_dims(vectors)?;
    if root.len() != dim {
        return Err(AggregateError::DimensionMismatch(dim, root.len()));
    }
    let root_norm = norm(root);
    if root_norm == 0.0 {
        return Err(AggregateError::ZeroVector);
    }

    let trust_scores: Vec<f64> = vectors
        .iter()
        .map(|v| match cosine_similarity(v, root) {
            Ok(cos) => cos.max(0.0),
            Err(_) => 0.0,
        })
        .collect();
    let total: f64 = trust_scores.iter().sum();
    if total == 0.0 {
        return Err(AggregateError::AllTrustZero);
    }

    let mut combined = vec![0.0; dim];
    for (v, &trust) in vectors.iter().zip(&trust_scores) {
        if trust == 0.0 {
            continue;
        }
        let rescale = root_norm / norm(v);
        for (acc, &x) in combined.iter_mut().zip(v) {
            *acc += trust * rescale * x;
        }
    }
    for x in combined.iter_mut() {
        *x /= total;
    }
    let combined_norm = norm(&combined);
    if combined_norm == 0.0 {
        // Trusted directions cancelled exactly; nothing sensible to emit.
        return Err(AggregateError::AllTrustZero);
    }
    let rescale = root_norm / combined_norm;
    for x in combined.iter_mut() {
        *x *= rescale;
    }
    Ok(FlTrustOutcome {
        aggregate: combined,
        trust_scores,
    })
}

/// Linear-interpolation quantile of a sorted slice.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

fn median_of(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 0 {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    } else {
        sorted[n / 2]
    }
}

const MULTI_STAT_INDICATORS: [&str; 6] = [
    "distance_to_reference",
    "cosine_to_reference",
    "variance",
    "min",
    "max",
    "mad_outlier_count",
];

/// Multi-statistic filter: six indicators per cluster, each screened with a
/// median +- 1.5*IQR fence across clusters; a cluster failing any fence is
/// rejected.
///
/// Indicators, computed on per-cluster mean updates against the
/// coordinate-median reference: Euclidean distance to the reference, cosine
/// similarity to the reference (0 when undefined), coordinate variance,
/// minimum coordinate, maximum coordinate, and the count of coordinates
/// deviating from the per-coordinate median by more than 3x the median
/// absolute deviation.
pub fn multi_stat_filter(vectors: &[Vec<f64>]) -> Result<FilterVerdict, AggregateError> {
    let n = vectors.len();
    if n < 3 {
        return Err(AggregateError::TooFewAggregates { needed: 3, actual: n });
    }
    let dim = check_same_dims(vectors)?;
    let reference = coordinate_median(vectors)?;

    // Per-coordinate median and MAD across clusters, for the count indicator.
    let mut coord_median = vec![0.0; dim];
    let mut coord_mad = vec![0.0; dim];
    let mut column = vec![0.0; n];
    for c in 0..dim {
        for (i, v) in vectors.iter().enumerate() {
            column[i] = v[c];
        }
        coord_median[c] = median_of(&column);
        let deviations: Vec<f64> = column.iter().map(|x| (x - coord_median[c]).abs()).collect();
        coord_mad[c] = median_of(&deviations);
    }

    let mut indicators: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for name in MULTI_STAT_INDICATORS {
        indicators.insert(name.to_string(), Vec::with_capacity(n));
    }
    for v in vectors {
        let distance = euclidean_distance(v, &reference)?;
        let cosine = cosine_similarity(v, &reference).unwrap_or(0.0);
        let mean = v.iter().sum::<f64>() / dim as f64;
        let variance = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / dim as f64;
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let outliers = (0..dim)
            .filter(|&c| (v[c] - coord_median[c]).abs() > 3.0 * coord_mad[c])
            .count() as f64;
        for (name, value) in MULTI_STAT_INDICATORS
            .iter()
            .zip([distance, cosine, variance, min, max, outliers])
        {
            indicators.get_mut(*name).unwrap().push(value);
        }
    }

    let mut accepted: BTreeSet<usize> = (0..n).collect();
    for values in indicators.values() {
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let median = median_of(&sorted);
        let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
        let (lo, hi) = (median - 1.5 * iqr, median + 1.5 * iqr);
        for (i, &value) in values.iter().enumerate() {
            if value < lo || value > hi {
                accepted.remove(&i);
            }
        }
    }

    let all: Vec<usize> = (0..n).collect();
    let mut verdict = FilterVerdict::new(accepted, &all);
    verdict.scores = indicators;
    Ok(verdict)
}

/// Which robust filter a round uses, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterChoice {
    AcceptAll,
    Krum { f: usize },
    MultiKrum { f: usize, m: usize },
    Median,
    TrimmedMean { beta: f64 },
    FlTrust,
    MultiStat,
}

fn weighted_mean(
    means: &[Vec<f64>],
    member_counts: &[usize],
    accepted: &BTreeSet<usize>,
) -> Vec<f64> {
    let dim = means.first().map(Vec::len).unwrap_or(0);
    let mut out = vec![0.0; dim];
    let total: usize = accepted.iter().map(|&i| member_counts[i]).sum();
    if total == 0 {
        return out;
    }
    for &i in accepted {
        let w = member_counts[i] as f64;
        for (acc, &x) in out.iter_mut().zip(&means[i]) {
            *acc += w * x;
        }
    }
    for x in out.iter_mut() {
        *x /= total as f64;
    }
    out
}

/// Runs the chosen filter over per-cluster mean updates and combines the
/// survivors into the round's global update.
///
/// Selection filters combine accepted means by member-count-weighted
/// average; coordinate-wise filters (median, trimmed mean) are themselves
/// the combination and accept every cluster. A verdict with `round_failed`
/// set carries a zero aggregate.
pub fn apply_filter(
    choice: &FilterChoice,
    means: &[Vec<f64>],
    member_counts: &[usize],
    root: Option<&[f64]>,
) -> Result<(Vec<f64>, FilterVerdict), AggregateError> {
    let n = means.len();
    if n == 0 {
        return Err(AggregateError::EmptyInput);
    }
    if member_counts.len() != n {
        return Err(AggregateError::DimensionMismatch(n, member_counts.len()));
    }
    check_same_dims(means)?;
    let all: Vec<usize> = (0..n).collect();
    let all_set: BTreeSet<usize> = all.iter().copied().collect();

    match choice {
        FilterChoice::AcceptAll => {
            let verdict = FilterVerdict::new(all_set.clone(), &all);
            Ok((weighted_mean(means, member_counts, &all_set), verdict))
        }
        FilterChoice::Krum { f } => {
            let selection = krum(means, *f)?;
            let accepted: BTreeSet<usize> = selection.selected.iter().copied().collect();
            let mut verdict = FilterVerdict::new(accepted.clone(), &all);
            verdict.scores.insert("krum_score".into(), selection.scores);
            Ok((weighted_mean(means, member_counts, &accepted), verdict))
        }
        FilterChoice::MultiKrum { f, m } => {
            let selection = multi_krum(means, *f, *m)?;
            let accepted: BTreeSet<usize> = selection.selected.iter().copied().collect();
            let mut verdict = FilterVerdict::new(accepted.clone(), &all);
            verdict.scores.insert("krum_score".into(), selection.scores);
            Ok((weighted_mean(means, member_counts, &accepted), verdict))
        }
        FilterChoice::Median => {
            let aggregate = coordinate_median(means)?;
            Ok((aggregate, FilterVerdict::new(all_set, &all)))
        }
        FilterChoice::TrimmedMean { beta } => {
            let aggregate = trimmed_mean(means, *beta)?;
            Ok((aggregate, FilterVerdict::new(all_set, &all)))
        }
        FilterChoice::FlTrust => {
            let root = root.ok_or(AggregateError::MissingRoot)?;
            match fltrust_aggregate(means, root) {
                Ok(outcome) => {
                    let accepted: BTreeSet<usize> = outcome
                        .trust_scores
                        .iter()
                        .enumerate()
                        .filter(|(_, &t)| t > 0.0)
                        .map(|(i, _)| i)
                        .collect();
                    let mut verdict = FilterVerdict::new(accepted, &all);
                    verdict.scores.insert("trust".into(), outcome.trust_scores);
                    Ok((outcome.aggregate, verdict))
                }
                Err(AggregateError::AllTrustZero) => {
                    let dim = means[0].len();
                    let verdict = FilterVerdict::new(BTreeSet::new(), &all);
                    Ok((vec![0.0; dim], verdict))
                }
                Err(e) => Err(e),
            }
        }
        FilterChoice::MultiStat => {
            let verdict = multi_stat_filter(means)?;
            if verdict.round_failed {
                return Ok((vec![0.0; means[0].len()], verdict));
            }
            Ok((weighted_mean(means, member_counts, &verdict.accepted), verdict))
        }
    }
}
