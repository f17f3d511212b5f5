//! Oracle-ranking construction and the selection / data-quality metrics.
//!
//! Selection quality is measured on (predicted, oracle) ranking pairs:
//! Top-K accuracy, Spearman rank correlation, and NDCG. Spearman and NDCG
//! operate on the overlap of the two rankings with ranks recomputed inside
//! the overlap, which keeps Spearman in [−1, 1] exactly and handles pools
//! where a model is missing from one side.
//!
//! Data quality is measured by the Column Shape Score (per-column marginal
//! similarity: 1 − KS statistic for numeric columns, 1 − total variation
//! distance for categorical ones, averaged) and Proportion Closer to Real
//! (the fraction of synthetic rows whose nearest real neighbor lies in the
//! training table rather than the holdout table — a memorization proxy,
//! lower is better).

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{ColumnKind, Dataset};
use crate::dims::Intent;
use crate::error::{Error, Result};

/// A strict, duplicate-free ordering of model names, best first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ranking(Vec<String>);

impl Ranking {
    pub fn new(names: Vec<String>) -> Result<Ranking> {
        let mut seen = BTreeSet::new();
        for name in &names {
            if !seen.insert(name.clone()) {
                return Err(Error::DuplicateRankingEntry(name.clone()));
            }
        }
        Ok(Ranking(names))
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn best(&self) -> Option<&str> {
        self.0.first().map(|s| s.as_str())
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|n| n == name)
    }

    pub fn reversed(&self) -> Ranking {
        let mut names = self.0.clone();
        names.reverse();
        Ranking(names)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub dataset: String,
    pub model: String,
    pub privacy_pcr: Option<f64>,
    pub fidelity_shape: Option<f64>,
    pub utility_score: Option<f64>,
}

/// Ground-truth metric values per (dataset, model), read from the benchmark
/// fixture file: a CSV with header `dataset,model,metric,value` where
/// `metric` is one of `privacy_pcr`, `fidelity_shape`, `utility_score`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleTable {
    pub rows: Vec<OracleRecord>,
}

impl OracleTable {
    pub fn from_reader(reader: impl Read, source: &str) -> Result<OracleTable> {
        let mut csv_reader = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let mut merged: BTreeMap<(String, String), OracleRecord> = BTreeMap::new();
        for record in csv_reader.records() {
            let record = record.map_err(|e| Error::Csv {
                path: source.to_string(),
                message: e.to_string(),
            })?;
            if record.len() != 4 {
                return Err(Error::Csv {
                    path: source.to_string(),
                    message: format!(
                        "expected 4 fields (dataset,model,metric,value), got {}",
                        record.len()
                    ),
                });
            }
            let dataset = record[0].trim().to_string();
            let model = record[1].trim().to_string();
            let metric = record[2].trim().to_string();
            let value: f64 = record[3].trim().parse().map_err(|_| Error::Csv {
                path: source.to_string(),
                message: format!("unparseable value `{}`", &record[3]),
            })?;
            let entry = merged
                .entry((dataset.clone(), model.clone()))
                .or_insert_with(|| OracleRecord {
                    dataset,
                    model,
                    privacy_pcr: None,
                    fidelity_shape: None,
                    utility_score: None,
                });
            let slot = match metric.as_str() {
                "privacy_pcr" => &mut entry.privacy_pcr,
                "fidelity_shape" => &mut entry.fidelity_shape,
                "utility_score" => &mut entry.utility_score,
                other => {
                    return Err(Error::Csv {
                        path: source.to_string(),
                        message: format!("unknown metric `{other}`"),
                    })
                }
            };
            if slot.is_some() {
                return Err(Error::Csv {
                    path: source.to_string(),
                    message: format!(
                        "duplicate metric `{metric}` for ({}, {})",
                        entry.dataset, entry.model
                    ),
                });
            }
            *slot = Some(value);
        }
        Ok(OracleTable {
            rows: merged.into_values().collect(),
        })
    }

    pub fn from_path(path: &Path) -> Result<OracleTable> {
        let file =
            std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_reader(file, &path.display().to_string())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("dataset,model,metric,value\n");
        for row in &self.rows {
            for (metric, value) in [
                ("privacy_pcr", row.privacy_pcr),
                ("fidelity_shape", row.fidelity_shape),
                ("utility_score", row.utility_score),
            ] {
                if let Some(v) = value {
                    out.push_str(&format!("{},{},{metric},{v}\n", row.dataset, row.model));
                }
            }
        }
        out
    }

    /// Sorted distinct dataset names.
    pub fn datasets(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| r.dataset.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    fn metric_of(record: &OracleRecord, intent: Intent) -> Option<f64> {
        match intent {
            Intent::Privacy => record.privacy_pcr,
            Intent::Fidelity => record.fidelity_shape,
            Intent::Utility => record.utility_score,
        }
    }

    /// Builds the ground-truth ranking for one dataset-intent pair.
    ///
    /// Fidelity and utility rank descending by value. Privacy ranks ascending
    /// by PCR (lower PCR is better privacy, so it takes rank 1). Models
    /// without the intent's metric are omitted; metric ties break
    /// lexicographically by model name.
    pub fn oracle_ranking(&self, dataset: &str, intent: Intent) -> Result<Ranking> {
        let mut scored: Vec<(&str, f64)> = self
            .rows
            .iter()
            .filter(|r| r.dataset == dataset)
            .filter_map(|r| Self::metric_of(r, intent).map(|v| (r.model.as_str(), v)))
            .collect();
        if scored.is_empty() {
            return Err(Error::MissingOracle {
                dataset: dataset.to_string(),
                intent: intent.as_str().to_string(),
            });
        }
        match intent {
            Intent::Privacy => scored.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(b.0))),
            Intent::Fidelity | Intent::Utility => {
                scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)))
            }
        }
        Ranking::new(scored.into_iter().map(|(name, _)| name.to_string()).collect())
    }
}

/// Fraction of pairs whose oracle-best model appears in the first `k`
/// predicted entries.
pub fn top_k_accuracy(pairs: &[(Ranking, Ranking)], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".to_string()));
    }
    if pairs.is_empty() {
        return Err(Error::EmptyPairList);
    }
    let hits = pairs
        .iter()
        .filter(|(predicted, oracle)| {
            oracle
                .best()
                .is_some_and(|best| predicted.names().iter().take(k).any(|n| n == best))
        })
        .count();
    Ok(hits as f64 / pairs.len() as f64)
}

/// Models present in both rankings, as (predicted order, oracle order).
fn overlap(predicted: &Ranking, oracle: &Ranking) -> (Vec<String>, Vec<String>) {
    let oracle_set: BTreeSet<&str> = oracle.names().iter().map(|s| s.as_str()).collect();
    let predicted_set: BTreeSet<&str> = predicted.names().iter().map(|s| s.as_str()).collect();
    let in_both =
        |name: &String| oracle_set.contains(name.as_str()) && predicted_set.contains(name.as_str());
    let pred: Vec<String> = predicted.names().iter().filter(|n| in_both(n)).cloned().collect();
    let orac: Vec<String> = oracle.names().iter().filter(|n| in_both(n)).cloned().collect();
    (pred, orac)
}

/// Spearman rank correlation over the overlap of the two rankings.
///
/// Ranks are recomputed within the overlap; since rankings are strict orders
/// there are no ties and `ρ = 1 − 6Σd²/(n(n²−1))`.
pub fn spearman(predicted: &Ranking, oracle: &Ranking) -> Result<f64> {
    let (pred, orac) = overlap(predicted, oracle);
    let n = pred.len();
    if n < 2 {
        return Err(Error::OverlapTooSmall);
    }
    let oracle_rank: BTreeMap<&str, usize> = orac
        .iter()
        .enumerate()
        .map(|(i, name)| (name.as_str(), i + 1))
        .collect();
    let sum_d2: f64 = pred
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let d = (i + 1) as f64 - oracle_rank[name.as_str()] as f64;
            d * d
        })
        .sum();
    let nf = n as f64;
    Ok(1.0 - 6.0 * sum_d2 / (nf * (nf * nf - 1.0)))
}

/// NDCG with linear relevance gain over the overlap.
///
/// With overlap size `n`, the model at oracle rank `i` (1-based) has
/// relevance `n − i`; `DCG = Σ rel(predicted[i]) / log₂(i + 1)` over 1-based
/// predicted positions, normalized by the oracle-ordered DCG. A single-model
/// overlap carries zero relevance everywhere and is defined as 1.0.
pub fn ndcg(predicted: &Ranking, oracle: &Ranking) -> Result<f64> {
    let (pred, orac) = overlap(predicted, oracle);
    let n = pred.len();
    if n == 0 {
        return Err(Error::OverlapTooSmall);
    }
    if n == 1 {
        return Ok(1.0);
    }
    let relevance: BTreeMap<&str, f64> = orac
        .iter()
        .enumerate()
        .map(|(i, name)| (name.as_str(), (n - (i + 1)) as f64))
        .collect();
    let dcg_of = |order: &[String]| -> f64 {
        order
            .iter()
            .enumerate()
            .map(|(i, name)| relevance[name.as_str()] / ((i + 2) as f64).log2())
            .sum()
    };
    let dcg = dcg_of(&pred);
    let idcg = dcg_of(&orac);
    Ok(dcg / idcg)
}

/// Supremum of the gap between the two empirical CDFs.
fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() || j < ys.len() {
        let value = match (xs.get(i), ys.get(j)) {
            (Some(x), Some(y)) => x.min(*y),
            (Some(x), None) => *x,
            (None, Some(y)) => *y,
            (None, None) => break,
        };
        while i < xs.len() && xs[i] == value {
            i += 1;
        }
        while j < ys.len() && ys[j] == value {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Total variation distance between two category frequency vectors.
/// Categories absent from one side contribute their full mass.
fn total_variation_distance(p: &BTreeMap<&str, usize>, q: &BTreeMap<&str, usize>) -> f64 {
    let p_total: usize = p.values().sum();
    let q_total: usize = q.values().sum();
    let categories: BTreeSet<&str> = p.keys().chain(q.keys()).copied().collect();
    let mut distance = 0.0;
    for category in categories {
        let pf = *p.get(category).unwrap_or(&0) as f64 / p_total as f64;
        let qf = *q.get(category).unwrap_or(&0) as f64 / q_total as f64;
        distance += (pf - qf).abs();
    }
    distance / 2.0
}

fn check_same_schema(a: &Dataset, b: &Dataset, what: &str) -> Result<()> {
    if a.column_count() != b.column_count() {
        return Err(Error::TableMismatch(format!(
            "{what}: column count {} vs {}",
            a.column_count(),
            b.column_count()
        )));
    }
    for column in a.columns() {
        match b.column(column.name()) {
            None => {
                return Err(Error::TableMismatch(format!(
                    "{what}: column `{}` missing",
                    column.name()
                )))
            }
            Some(other) if other.kind() != column.kind() => {
                return Err(Error::TableMismatch(format!(
                    "{what}: column `{}` kind {} vs {}",
                    column.name(),
                    column.kind(),
                    other.kind()
                )))
            }
            Some(_) => {}
        }
    }
    Ok(())
}

/// Per-column marginal fidelity between a real and a synthetic table,
/// averaged over columns: `1 − KS` for numeric columns, `1 − TVD` for
/// categorical ones. Columns are matched by name. A column empty on exactly
/// one side scores 0; empty on both sides scores 1.
pub fn column_shape_score(real: &Dataset, synth: &Dataset) -> Result<f64> {
    check_same_schema(real, synth, "column_shape_score")?;
    let mut total = 0.0;
    for real_column in real.columns() {
        let synth_column = synth.column(real_column.name()).expect("schema checked");
        let score = match real_column.kind() {
            ColumnKind::Numeric => {
                let a = real_column.numeric_cells();
                let b = synth_column.numeric_cells();
                match (a.is_empty(), b.is_empty()) {
                    (true, true) => 1.0,
                    (true, false) | (false, true) => 0.0,
                    (false, false) => 1.0 - ks_statistic(&a, &b),
                }
            }
            ColumnKind::Categorical => {
                let p = real_column.category_counts();
                let q = synth_column.category_counts();
                match (p.is_empty(), q.is_empty()) {
                    (true, true) => 1.0,
                    (true, false) | (false, true) => 0.0,
                    (false, false) => 1.0 - total_variation_distance(&p, &q),
                }
            }
        };
        total += score;
    }
    Ok(total / real.column_count() as f64)
}

/// Row encoding for nearest-neighbor distances: numeric columns min-max
/// scaled by the training table's statistics, categoricals one-hot over the
/// union of observed categories. Missing numerics encode as the scaled
/// midpoint, missing categoricals as an all-zero block.
struct RowEncoder {
    columns: Vec<EncoderColumn>,
}

enum EncoderColumn {
    Numeric { name: String, min: f64, max: f64 },
    Categorical { name: String, categories: Vec<String> },
}

impl RowEncoder {
    fn fit(train: &Dataset, others: &[&Dataset]) -> RowEncoder {
        let columns = train
            .columns()
            .iter()
            .map(|column| match column.kind() {
                ColumnKind::Numeric => {
                    let values = column.numeric_cells();
                    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    EncoderColumn::Numeric {
                        name: column.name().to_string(),
                        min,
                        max,
                    }
                }
                ColumnKind::Categorical => {
                    let mut categories: BTreeSet<String> = column
                        .category_counts()
                        .keys()
                        .map(|s| s.to_string())
                        .collect();
                    for other in others {
                        if let Some(other_column) = other.column(column.name()) {
                            categories.extend(
                                other_column.category_counts().keys().map(|s| s.to_string()),
                            );
                        }
                    }
                    EncoderColumn::Categorical {
                        name: column.name().to_string(),
                        categories: categories.into_iter().collect(),
                    }
                }
            })
            .collect();
        RowEncoder { columns }
    }

    fn encode(&self, dataset: &Dataset) -> Vec<Vec<f64>> {
        let mut rows = vec![Vec::new(); dataset.row_count()];
        for encoder in &self.columns {
            match encoder {
                EncoderColumn::Numeric { name, min, max } => {
                    let column = dataset.column(name).expect("schema checked");
                    let view = column.numeric_view().expect("kind checked");
                    for (row, cell) in rows.iter_mut().zip(view) {
                        let encoded = match cell {
                            Some(v) if max > min => (v - min) / (max - min),
                            Some(_) => 0.5,
                            None => 0.5,
                        };
                        row.push(encoded);
                    }
                }
                EncoderColumn::Categorical { name, categories } => {
                    let column = dataset.column(name).expect("schema checked");
                    let view = column.categorical_view().expect("kind checked");
                    for (row, cell) in rows.iter_mut().zip(view) {
                        let start = row.len();
                        row.resize(start + categories.len(), 0.0);
                        if let Some(value) = cell {
                            if let Ok(idx) = categories.binary_search(value) {
                                row[start + idx] = 1.0;
                            }
                        }
                    }
                }
            }
        }
        rows
    }
}

fn min_squared_distance(point: &[f64], rows: &[Vec<f64>]) -> f64 {
    rows.iter()
        .map(|other| {
            point
                .iter()
                .zip(other)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Proportion Closer to Real: the fraction of synthetic rows strictly closer
/// (Euclidean, on the encoded rows) to the training table than to the
/// holdout table. Exact distance ties count half.
pub fn proportion_closer_to_real(
    synth: &Dataset,
    train: &Dataset,
    holdout: &Dataset,
) -> Result<f64> {
    check_same_schema(train, synth, "proportion_closer_to_real(synth)")?;
    check_same_schema(train, holdout, "proportion_closer_to_real(holdout)")?;
    let encoder = RowEncoder::fit(train, &[synth, holdout]);
    let train_rows = encoder.encode(train);
    let holdout_rows = encoder.encode(holdout);
    let synth_rows = encoder.encode(synth);
    let mut score = 0.0;
    for row in &synth_rows {
        let to_train = min_squared_distance(row, &train_rows);
        let to_holdout = min_squared_distance(row, &holdout_rows);
        if to_train < to_holdout {
            score += 1.0;
        } else if to_train == to_holdout {
            score += 0.5;
        }
    }
    Ok(score / synth_rows.len() as f64)
}

#[cfg(test)]
mod brute {
    //! Definition-level recomputation of the ranking metrics, kept
    //! independent of the implementations above so they can act as test
    //! oracles.

    use super::Ranking;

    /// Pearson correlation of the two rank vectors, from first principles.
    pub fn spearman_by_rank_correlation(predicted: &Ranking, oracle: &Ranking) -> f64 {
        let overlap: Vec<&String> = predicted
            .names()
            .iter()
            .filter(|n| oracle.names().contains(n))
            .collect();
        let n = overlap.len() as f64;
        let pred_ranks: Vec<f64> = (1..=overlap.len()).map(|i| i as f64).collect();
        let oracle_overlap: Vec<&String> = oracle
            .names()
            .iter()
            .filter(|n| predicted.names().contains(n))
            .collect();
        let orac_ranks: Vec<f64> = overlap
            .iter()
            .map(|name| (oracle_overlap.iter().position(|o| o == name).unwrap() + 1) as f64)
            .collect();
        let mean_p = pred_ranks.iter().sum::<f64>() / n;
        let mean_o = orac_ranks.iter().sum::<f64>() / n;
        let mut cov = 0.0;
        let mut var_p = 0.0;
        let mut var_o = 0.0;
        for (p, o) in pred_ranks.iter().zip(&orac_ranks) {
            cov += (p - mean_p) * (o - mean_o);
            var_p += (p - mean_p) * (p - mean_p);
            var_o += (o - mean_o) * (o - mean_o);
        }
        cov / (var_p * var_o).sqrt()
    }

    /// NDCG with the ideal DCG found by maximizing over every permutation of
    /// the overlap, rather than assuming the oracle order is ideal.
    pub fn ndcg_by_enumeration(predicted: &Ranking, oracle: &Ranking) -> f64 {
        let pred_overlap: Vec<&String> = predicted
            .names()
            .iter()
            .filter(|n| oracle.names().contains(n))
            .collect();
        let orac_overlap: Vec<&String> = oracle
            .names()
            .iter()
            .filter(|n| predicted.names().contains(n))
            .collect();
        let n = pred_overlap.len();
        if n == 1 {
            return 1.0;
        }
        let relevance = |name: &String| -> f64 {
            let rank = orac_overlap.iter().position(|o| *o == name).unwrap() + 1;
            (n - rank) as f64
        };
        let dcg = |order: &[&String]| -> f64 {
            order
                .iter()
                .enumerate()
                .map(|(i, name)| relevance(name) / ((i + 2) as f64).log2())
                .sum()
        };
        let actual = dcg(&pred_overlap);
        let mut best: f64 = 0.0;
        let mut working = orac_overlap.clone();
        let len = working.len();
        heap_permute(&mut working, len, &mut |perm| {
            let value = dcg(perm);
            if value > best {
                best = value;
            }
        });
        actual / best
    }

    fn heap_permute<'a>(
        items: &mut Vec<&'a String>,
        k: usize,
        visit: &mut impl FnMut(&[&'a String]),
    ) {
        if k <= 1 {
            visit(items);
            return;
        }
        for i in 0..k {
            heap_permute(items, k - 1, visit);
            if k.is_multiple_of(2) {
                items.swap(i, k - 1);
            } else {
                items.swap(0, k - 1);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Column;
    use proptest::prelude::*;

    fn ranking(names: &[&str]) -> Ranking {
        Ranking::new(names.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    fn oracle_fixture() -> OracleTable {
        let csv = "\
dataset,model,metric,value
d1,A,fidelity_shape,0.9
d1,B,fidelity_shape,0.8
d1,A,privacy_pcr,0.2
d1,B,privacy_pcr,0.9
d1,A,utility_score,0.7
d1,B,utility_score,0.7
d1,C,utility_score,0.9
";
        OracleTable::from_reader(csv.as_bytes(), "inline").unwrap()
    }

    #[test]
    fn fidelity_ranks_descending() {
        let table = oracle_fixture();
        let r = table.oracle_ranking("d1", Intent::Fidelity).unwrap();
        assert_eq!(r.names(), ["A", "B"]);
    }

    #[test]
    fn privacy_ranks_ascending_pcr() {
        let table = oracle_fixture();
        let r = table.oracle_ranking("d1", Intent::Privacy).unwrap();
        assert_eq!(r.names(), ["A", "B"]); // 0.2 is better privacy
    }

    #[test]
    fn utility_ties_break_lexicographically() {
        let table = oracle_fixture();
        let r = table.oracle_ranking("d1", Intent::Utility).unwrap();
        assert_eq!(r.names(), ["C", "A", "B"]);
    }

    #[test]
    fn models_missing_the_metric_are_omitted() {
        let table = oracle_fixture();
        // C has only a utility score.
        let r = table.oracle_ranking("d1", Intent::Fidelity).unwrap();
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn missing_pair_is_an_error() {
        let table = oracle_fixture();
        assert!(matches!(
            table.oracle_ranking("nope", Intent::Fidelity),
            Err(Error::MissingOracle { .. })
        ));
    }

    #[test]
    fn oracle_csv_round_trip() {
        let table = oracle_fixture();
        let csv = table.to_csv_string();
        let back = OracleTable::from_reader(csv.as_bytes(), "round").unwrap();
        assert_eq!(table, back);
    }

    #[test]
    fn duplicate_metric_rows_rejected() {
        let csv = "dataset,model,metric,value\nd,A,privacy_pcr,0.1\nd,A,privacy_pcr,0.2\n";
        assert!(OracleTable::from_reader(csv.as_bytes(), "inline").is_err());
    }

    #[test]
    fn privacy_ranking_matches_negated_fidelity_ranking() {
        // Inversion consistency: ranking ascending by PCR equals ranking
        // descending by −PCR.
        let csv = "\
dataset,model,metric,value
d,A,privacy_pcr,0.31
d,B,privacy_pcr,0.05
d,C,privacy_pcr,0.77
d,D,privacy_pcr,0.18
";
        let table = OracleTable::from_reader(csv.as_bytes(), "inline").unwrap();
        let privacy = table.oracle_ranking("d", Intent::Privacy).unwrap();

        let negated = "\
dataset,model,metric,value
d,A,fidelity_shape,-0.31
d,B,fidelity_shape,-0.05
d,C,fidelity_shape,-0.77
d,D,fidelity_shape,-0.18
";
        let negated_table = OracleTable::from_reader(negated.as_bytes(), "inline").unwrap();
        let fidelity_of_negated = negated_table.oracle_ranking("d", Intent::Fidelity).unwrap();
        assert_eq!(privacy, fidelity_of_negated);
    }

    #[test]
    fn top_k_counts_oracle_best_membership() {
        let pairs = vec![(ranking(&["A", "B", "C"]), ranking(&["B", "A", "C"]))];
        assert_eq!(top_k_accuracy(&pairs, 1).unwrap(), 0.0);
        assert_eq!(top_k_accuracy(&pairs, 3).unwrap(), 1.0);
        assert!(matches!(top_k_accuracy(&[], 1), Err(Error::EmptyPairList)));
    }

    #[test]
    fn four_top1_hits_over_nine_pairs() {
        let pairs: Vec<(Ranking, Ranking)> = (0..9)
            .map(|i| {
                let oracle = ranking(&["A", "B", "C"]);
                let predicted = if i < 4 {
                    ranking(&["A", "B", "C"])
                } else {
                    ranking(&["B", "A", "C"])
                };
                (predicted, oracle)
            })
            .collect();
        let value = top_k_accuracy(&pairs, 1).unwrap();
        assert!((value - 4.0 / 9.0).abs() < 1e-12);
        assert!((value - 0.444).abs() < 1e-3);
    }

    #[test]
    fn top_k_is_monotone_in_k_and_saturates() {
        let pairs = vec![
            (ranking(&["A", "B", "C"]), ranking(&["C", "B", "A"])),
            (ranking(&["B", "A", "C"]), ranking(&["B", "C", "A"])),
        ];
        let mut last = 0.0;
        for k in 1..=3 {
            let value = top_k_accuracy(&pairs, k).unwrap();
            assert!(value >= last);
            last = value;
        }
        assert_eq!(last, 1.0);
    }

    #[test]
    fn spearman_identity_and_reversal() {
        let r = ranking(&["A", "B", "C", "D", "E"]);
        assert_eq!(spearman(&r, &r).unwrap(), 1.0);
        assert_eq!(spearman(&r.reversed(), &r).unwrap(), -1.0);
    }

    #[test]
    fn spearman_adjacent_swap_example() {
        // d² = 0+1+1+0 over n=4: ρ = 1 − 12/60 = 0.8.
        let predicted = ranking(&["A", "B", "C", "D"]);
        let oracle = ranking(&["A", "C", "B", "D"]);
        assert!((spearman(&predicted, &oracle).unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn spearman_needs_two_overlapping() {
        let a = ranking(&["A", "B"]);
        let b = ranking(&["A", "C"]);
        assert!(matches!(spearman(&a, &b), Err(Error::OverlapTooSmall)));
    }

    #[test]
    fn ndcg_identity_reversal_and_singleton() {
        let r = ranking(&["A", "B", "C"]);
        assert_eq!(ndcg(&r, &r).unwrap(), 1.0);

        let two = ranking(&["A", "B"]);
        let expected = 1.0 / 3.0f64.log2();
        assert!((ndcg(&two.reversed(), &two).unwrap() - expected).abs() < 1e-12);
        assert!((ndcg(&two.reversed(), &two).unwrap() - 0.6309297535714574).abs() < 1e-10);

        let one_overlap = (ranking(&["A", "X"]), ranking(&["A", "Y"]));
        assert_eq!(ndcg(&one_overlap.0, &one_overlap.1).unwrap(), 1.0);
    }

    #[test]
    fn metrics_match_brute_force_small() {
        let predicted = ranking(&["C", "A", "D", "B"]);
        let oracle = ranking(&["A", "B", "C", "D"]);
        let fast = spearman(&predicted, &oracle).unwrap();
        let slow = brute::spearman_by_rank_correlation(&predicted, &oracle);
        assert!((fast - slow).abs() < 1e-12);
        let fast = ndcg(&predicted, &oracle).unwrap();
        let slow = brute::ndcg_by_enumeration(&predicted, &oracle);
        assert!((fast - slow).abs() < 1e-12);
    }

    fn numeric_table(name: &str, columns: &[(&str, &[f64])]) -> Dataset {
        Dataset::new(
            name,
            columns
                .iter()
                .map(|(n, v)| Column::numeric(*n, v.iter().map(|x| Some(*x)).collect()))
                .collect(),
        )
        .unwrap()
    }

    fn categorical_table(name: &str, column: &str, cells: &[&str]) -> Dataset {
        Dataset::new(
            name,
            vec![Column::categorical(
                column,
                cells.iter().map(|c| Some(c.to_string())).collect(),
            )],
        )
        .unwrap()
    }

    #[test]
    fn identical_tables_score_one() {
        let t = numeric_table("t", &[("x", &[0.0, 1.0, 2.0, 5.0])]);
        assert_eq!(column_shape_score(&t, &t).unwrap(), 1.0);
    }

    #[test]
    fn disjoint_categories_score_zero() {
        let real = categorical_table("r", "c", &["a", "a", "a"]);
        let synth = categorical_table("s", "c", &["b", "b", "b"]);
        assert_eq!(column_shape_score(&real, &synth).unwrap(), 0.0);
    }

    #[test]
    fn ks_by_brute_force_cdf_sweep() {
        // real = [0, 1], synth = [0.5, 1.5]: evaluate both empirical CDFs on
        // the pooled support and take the largest gap.
        let a = [0.0, 1.0];
        let b = [0.5, 1.5];
        let support = [0.0, 0.5, 1.0, 1.5];
        let cdf = |sample: &[f64], x: f64| {
            sample.iter().filter(|v| **v <= x).count() as f64 / sample.len() as f64
        };
        let expected = support
            .iter()
            .map(|x| (cdf(&a, *x) - cdf(&b, *x)).abs())
            .fold(0.0, f64::max);
        assert_eq!(ks_statistic(&a, &b), expected);
        assert_eq!(expected, 0.5);

        let real = numeric_table("r", &[("x", &a)]);
        let synth = numeric_table("s", &[("x", &b)]);
        assert!((column_shape_score(&real, &synth).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn schema_mismatch_is_an_error() {
        let a = numeric_table("a", &[("x", &[1.0, 2.0])]);
        let b = numeric_table("b", &[("y", &[1.0, 2.0])]);
        assert!(matches!(
            column_shape_score(&a, &b),
            Err(Error::TableMismatch(_))
        ));
        let c = categorical_table("c", "x", &["1", "2"]);
        assert!(matches!(
            column_shape_score(&a, &c),
            Err(Error::TableMismatch(_))
        ));
    }

    #[test]
    fn pcr_copies_hit_the_extremes() {
        let train = numeric_table("train", &[("x", &[0.0, 1.0, 2.0])]);
        let holdout = numeric_table("holdout", &[("x", &[10.0, 11.0, 12.0])]);
        let synth_train = numeric_table("synth", &[("x", &[0.0, 1.0, 2.0])]);
        let synth_holdout = numeric_table("synth", &[("x", &[10.0, 11.0, 12.0])]);
        assert_eq!(
            proportion_closer_to_real(&synth_train, &train, &holdout).unwrap(),
            1.0
        );
        assert_eq!(
            proportion_closer_to_real(&synth_holdout, &train, &holdout).unwrap(),
            0.0
        );
    }

    #[test]
    fn pcr_equidistant_rows_count_half() {
        let train = numeric_table("train", &[("x", &[0.0])]);
        let holdout = numeric_table("holdout", &[("x", &[1.0])]);
        let synth = numeric_table("synth", &[("x", &[0.5])]);
        assert_eq!(
            proportion_closer_to_real(&synth, &train, &holdout).unwrap(),
            0.5
        );
    }

    #[test]
    fn pcr_uses_categorical_columns_too() {
        let train = categorical_table("train", "c", &["a", "a"]);
        let holdout = categorical_table("holdout", "c", &["b", "b"]);
        let synth = categorical_table("synth", "c", &["a", "b"]);
        assert_eq!(
            proportion_closer_to_real(&synth, &train, &holdout).unwrap(),
            0.5
        );
    }

    #[test]
    fn pcr_invariant_under_row_reordering() {
        let train = numeric_table("train", &[("x", &[0.0, 1.0, 2.0, 3.0])]);
        let holdout = numeric_table("holdout", &[("x", &[9.0, 8.0, 7.5, 6.0])]);
        let synth = numeric_table("synth", &[("x", &[0.4, 8.2, 2.2, 5.0])]);
        let shuffled = numeric_table("synth", &[("x", &[5.0, 2.2, 0.4, 8.2])]);
        assert_eq!(
            proportion_closer_to_real(&synth, &train, &holdout).unwrap(),
            proportion_closer_to_real(&shuffled, &train, &holdout).unwrap()
        );
    }

    proptest! {
        #[test]
        fn spearman_self_is_one_and_reverse_is_minus_one(perm in proptest::sample::subsequence(
            vec!["A","B","C","D","E","F","G","H"], 2..8)) {
            let r = ranking(&perm);
            prop_assert!((spearman(&r, &r).unwrap() - 1.0).abs() < 1e-12);
            prop_assert!((spearman(&r.reversed(), &r).unwrap() + 1.0).abs() < 1e-12);
        }

        #[test]
        fn ndcg_stays_in_unit_interval_and_one_iff_equal(
            seed in 0u64..500,
            n in 2usize..7,
        ) {
            use rand::{RngExt, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let names: Vec<String> = (0..n).map(|i| format!("m{i}")).collect();
            let mut shuffled = names.clone();
            for i in (1..shuffled.len()).rev() {
                let j = rng.random_range(0..=i);
                shuffled.swap(i, j);
            }
            let predicted = Ranking::new(shuffled).unwrap();
            let oracle = Ranking::new(names).unwrap();
            let value = ndcg(&predicted, &oracle).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&value));
            if (value - 1.0).abs() < 1e-12 {
                prop_assert_eq!(predicted.names(), oracle.names());
            }
        }

        #[test]
        fn shape_score_invariant_under_row_reordering(seed in 0u64..200) {
            use rand::{RngExt, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let values: Vec<f64> = (0..40).map(|_| rng.random_range(-3.0..3.0)).collect();
            let cats: Vec<&str> = (0..40).map(|i| if i % 3 == 0 { "a" } else { "b" }).collect();
            let real = Dataset::new("r", vec![
                Column::numeric("x", values.iter().map(|v| Some(*v)).collect()),
                Column::categorical("c", cats.iter().map(|c| Some(c.to_string())).collect()),
            ]).unwrap();

            let mut order: Vec<usize> = (0..40).collect();
            for i in (1..order.len()).rev() {
                let j = rng.random_range(0..=i);
                order.swap(i, j);
            }
            let shuffled = Dataset::new("r2", vec![
                Column::numeric("x", order.iter().map(|i| Some(values[*i])).collect()),
                Column::categorical("c", order.iter().map(|i| Some(cats[*i].to_string())).collect()),
            ]).unwrap();

            let synth_values: Vec<f64> = (0..40).map(|_| rng.random_range(-3.0..3.0)).collect();
            let synth = Dataset::new("s", vec![
                Column::numeric("x", synth_values.iter().map(|v| Some(*v)).collect()),
                Column::categorical("c", (0..40).map(|i| Some(if i % 2 == 0 { "a" } else { "b" }.to_string())).collect()),
            ]).unwrap();

            let direct = column_shape_score(&real, &synth).unwrap();
            let reordered = column_shape_score(&shuffled, &synth).unwrap();
            prop_assert!((direct - reordered).abs() < 1e-12);
        }
    }
}
