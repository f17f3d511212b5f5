//! Stress profiling: dataset difficulty signature and requirement derivation.
//!
//! The profile captures four stressors known to break tabular synthesizers —
//! long-tailed marginals, high-cardinality columns, Zipfian category
//! imbalance, and small-sample regimes — plus the density of strong
//! inter-feature correlations. The raw statistics are quantized into a
//! six-level requirement vector that the scoring engine matches against model
//! capabilities.

use serde::{Deserialize, Serialize};

use crate::data::{ColumnKind, Dataset};
use crate::dims::RequirementVector;

/// Flag threshold: any numeric column with |skewness| above this.
pub const SKEW_FLAG_THRESHOLD: f64 = 2.0;
/// Flag threshold: any column with more distinct values than this.
pub const CARDINALITY_FLAG_THRESHOLD: usize = 500;
/// Flag threshold: any categorical column whose top-20% categories hold more
/// than this row fraction.
pub const ZIPF_FLAG_THRESHOLD: f64 = 0.80;
/// Flag threshold: datasets with fewer rows than this.
pub const SMALL_DATA_ROWS: usize = 500;
/// A numeric column pair is "strongly correlated" above this |Pearson r|.
pub const CORRELATION_PAIR_THRESHOLD: f64 = 0.7;

/// Upper bin edges for the skewness requirement (lower-inclusive top bin).
pub const SKEW_BINS: [f64; 4] = [0.5, 1.0, 2.0, 3.0];
/// Upper bin edges for the cardinality requirement.
pub const CARDINALITY_BINS: [usize; 4] = [50, 200, 500, 1000];
/// Upper bin edges for the Zipf-concentration requirement.
pub const ZIPF_BINS: [f64; 4] = [0.5, 0.65, 0.80, 0.90];
/// Lower row-count edges for small-data levels 0..3; below the last edge the
/// requirement is 4.
pub const ROW_BINS: [usize; 4] = [10_000, 5_000, 1_000, 500];
/// Default upper bin edges for the correlation-density requirement.
pub const DEFAULT_CORRELATION_BINS: [f64; 4] = [0.10, 0.25, 0.50, 0.75];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StressFlags {
    pub skew_flag: bool,
    pub cardinality_flag: bool,
    pub zipf_flag: bool,
    pub small_data_flag: bool,
}

/// The dataset difficulty signature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressProfile {
    pub max_abs_skewness: f64,
    pub max_cardinality: usize,
    pub max_zipf_ratio: f64,
    pub row_count: usize,
    pub correlation_density: f64,
    pub flags: StressFlags,
}

/// Adjusted Fisher–Pearson sample skewness.
///
/// With sample moments `m2 = Σ(x−x̄)²/n` and `m3 = Σ(x−x̄)³/n`, the statistic
/// is `√(n(n−1))/(n−2) · m3/m2^{3/2}`. For `[0,0,0,1]`: n=4, x̄=0.25,
/// m2=0.1875, m3=0.09375, so m3/m2^{3/2} = 2/√3 and the correction factor is
/// √12/2 = √3, giving exactly 2.0. Samples with fewer than three values or
/// zero variance return 0 (the moment ratio is undefined there).
pub fn adjusted_skewness(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 3 {
        return 0.0;
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let m2 = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf;
    if m2 == 0.0 {
        return 0.0;
    }
    let m3 = values.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / nf;
    let g1 = m3 / m2.powf(1.5);
    (nf * (nf - 1.0)).sqrt() / (nf - 2.0) * g1
}

/// Maximum |adjusted skewness| over numeric columns; 0 if there are none.
pub fn max_abs_skewness(dataset: &Dataset) -> f64 {
    dataset
        .columns()
        .iter()
        .filter(|c| c.kind() == ColumnKind::Numeric)
        .map(|c| adjusted_skewness(&c.numeric_cells()).abs())
        .fold(0.0, f64::max)
}

/// Maximum distinct non-missing value count over all columns, numeric
/// included.
pub fn max_cardinality(dataset: &Dataset) -> usize {
    dataset
        .columns()
        .iter()
        .map(|c| c.distinct_count())
        .max()
        .unwrap_or(0)
}

/// Maximum top-20% frequency ratio over categorical columns.
///
/// Per column with `k` distinct categories, the `⌈0.2k⌉` most frequent
/// categories (at least one) are summed and divided by the column's
/// non-missing count. Returns 0 if the dataset has no categorical column.
pub fn zipf_concentration(dataset: &Dataset) -> f64 {
    dataset
        .columns()
        .iter()
        .filter_map(|column| {
            let counts = column.category_counts();
            if counts.is_empty() {
                return None;
            }
            let total: usize = counts.values().sum();
            let k = counts.len();
            let take = k.div_ceil(5); // ⌈0.2k⌉, at least 1 for k ≥ 1
            let mut sorted: Vec<usize> = counts.values().copied().collect();
            sorted.sort_unstable_by(|a, b| b.cmp(a));
            let top: usize = sorted.iter().take(take).sum();
            Some(top as f64 / total as f64)
        })
        .fold(0.0, f64::max)
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Fraction of numeric column pairs with |Pearson r| > 0.7.
///
/// Correlations use pairwise-complete observations. Pairs with fewer than two
/// complete rows or zero variance on either side are ineligible and excluded
/// from the denominator; the result is 0 when no pair is eligible.
pub fn correlation_density(dataset: &Dataset) -> f64 {
    let numeric: Vec<&[Option<f64>]> = dataset
        .columns()
        .iter()
        .filter_map(|c| c.numeric_view())
        .collect();
    if numeric.len() < 2 {
        return 0.0;
    }
    let mut eligible = 0usize;
    let mut strong = 0usize;
    for i in 0..numeric.len() {
        for j in (i + 1)..numeric.len() {
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for (a, b) in numeric[i].iter().zip(numeric[j]) {
                if let (Some(a), Some(b)) = (a, b) {
                    xs.push(*a);
                    ys.push(*b);
                }
            }
            if xs.len() < 2 {
                continue;
            }
            if let Some(r) = pearson(&xs, &ys) {
                eligible += 1;
                if r.abs() > CORRELATION_PAIR_THRESHOLD {
                    strong += 1;
                }
            }
        }
    }
    if eligible == 0 {
        0.0
    } else {
        strong as f64 / eligible as f64
    }
}

/// Computes the full stress profile and sets the per-stressor flags.
pub fn stress_profile(dataset: &Dataset) -> StressProfile {
    let max_abs_skewness = max_abs_skewness(dataset);
    let max_cardinality = max_cardinality(dataset);
    let max_zipf_ratio = zipf_concentration(dataset);
    let row_count = dataset.row_count();
    let correlation_density = correlation_density(dataset);
    StressProfile {
        max_abs_skewness,
        max_cardinality,
        max_zipf_ratio,
        row_count,
        correlation_density,
        flags: StressFlags {
            skew_flag: max_abs_skewness > SKEW_FLAG_THRESHOLD,
            cardinality_flag: max_cardinality > CARDINALITY_FLAG_THRESHOLD,
            zipf_flag: max_zipf_ratio > ZIPF_FLAG_THRESHOLD,
            small_data_flag: row_count < SMALL_DATA_ROWS,
        },
    }
}

/// Level in `{0..4}` from four upper bin edges: `value < edges[i]` maps to
/// level `i`, anything at or above the last edge maps to 4.
fn level_from_edges(value: f64, edges: &[f64; 4]) -> u8 {
    for (level, edge) in edges.iter().enumerate() {
        if value < *edge {
            return level as u8;
        }
    }
    4
}

fn small_data_level(rows: usize) -> u8 {
    for (level, edge) in ROW_BINS.iter().enumerate() {
        if rows >= *edge {
            return level as u8;
        }
    }
    4
}

/// Quantizes a stress profile into requirement levels using the default
/// correlation bins.
pub fn requirement_vector(profile: &StressProfile) -> RequirementVector {
    requirement_vector_with_bins(profile, &DEFAULT_CORRELATION_BINS)
}

/// Quantizes a stress profile into requirement levels.
///
/// All bins are half-open with a lower-inclusive cut: a statistic exactly at
/// an edge falls in the higher bin (skew 0.5 → level 1). The privacy
/// dimension is never a data-derived requirement and is always 0; it
/// influences scoring only through intent-conditioned scale factors.
pub fn requirement_vector_with_bins(
    profile: &StressProfile,
    correlation_bins: &[f64; 4],
) -> RequirementVector {
    RequirementVector {
        skew_handling: level_from_edges(profile.max_abs_skewness, &SKEW_BINS),
        cardinality_handling: level_from_edges(
            profile.max_cardinality as f64,
            &[
                CARDINALITY_BINS[0] as f64,
                CARDINALITY_BINS[1] as f64,
                CARDINALITY_BINS[2] as f64,
                CARDINALITY_BINS[3] as f64,
            ],
        ),
        zipfian_handling: level_from_edges(profile.max_zipf_ratio, &ZIPF_BINS),
        small_data: small_data_level(profile.row_count),
        correlation_handling: level_from_edges(profile.correlation_density, correlation_bins),
        privacy_dp: 0,
    }
}

/// Thresholds for the hard-problem detector. The skew and cardinality
/// conditions match the stress flags; the Zipf threshold is configurable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HardProblemConfig {
    pub skew_threshold: f64,
    pub cardinality_threshold: usize,
    pub zipf_threshold: f64,
}

impl Default for HardProblemConfig {
    fn default() -> Self {
        HardProblemConfig {
            skew_threshold: SKEW_FLAG_THRESHOLD,
            cardinality_threshold: CARDINALITY_FLAG_THRESHOLD,
            zipf_threshold: ZIPF_FLAG_THRESHOLD,
        }
    }
}

/// True iff all three stress conditions co-occur (each strictly above its
/// threshold): severe skew, high cardinality, and Zipf concentration.
pub fn detect_hard_problem(profile: &StressProfile, config: &HardProblemConfig) -> bool {
    profile.max_abs_skewness > config.skew_threshold
        && profile.max_cardinality > config.cardinality_threshold
        && profile.max_zipf_ratio > config.zipf_threshold
}
