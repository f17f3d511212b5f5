//! Comparison selectors: static heuristic, uniform random, meta-feature
//! nearest-neighbor, and majority vote.

use std::collections::{BTreeMap, BTreeSet};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::MetaFeatureVector;
use crate::dims::Intent;
use crate::error::{Error, Result};
use crate::metrics::{ndcg, spearman, Ranking};
use crate::registry::{ModelFamily, Registry, UserConstraints};

/// Row threshold below which the static heuristic promotes the statistical
/// family one position.
const SMALL_ROWS_PROMOTION: usize = 1000;

/// Family priority order per intent. Within a family, models rank
/// lexicographically by name.
fn family_priority(intent: Intent) -> [ModelFamily; 4] {
    match intent {
        Intent::Privacy => [
            ModelFamily::DifferentialPrivacy,
            ModelFamily::Statistical,
            ModelFamily::TreeBased,
            ModelFamily::DeepGenerative,
        ],
        Intent::Fidelity | Intent::Utility => [
            ModelFamily::TreeBased,
            ModelFamily::Statistical,
            ModelFamily::DeepGenerative,
            ModelFamily::DifferentialPrivacy,
        ],
    }
}

/// A practitioner-style rule using only row count and intent: tree-based
/// first for utility/fidelity, DP first for privacy, and the statistical
/// family promoted one position on datasets under 1,000 rows.
pub fn static_heuristic(
    dataset_rows: usize,
    intent: Intent,
    registry: &Registry,
) -> Result<Ranking> {
    let mut priority = family_priority(intent).to_vec();
    if dataset_rows < SMALL_ROWS_PROMOTION {
        let position = priority
            .iter()
            .position(|f| *f == ModelFamily::Statistical)
            .expect("statistical family always present");
        if position > 0 {
            priority.swap(position, position - 1);
        }
    }
    let pool = registry.apply_hard_filters(dataset_rows, &UserConstraints::default());
    let mut names = Vec::new();
    for family in priority {
        let mut members: Vec<String> = pool
            .iter()
            .filter(|m| m.family == family)
            .map(|m| m.name.clone())
            .collect();
        members.sort();
        names.extend(members);
    }
    Ranking::new(names)
}

fn shuffled(names: &[String], rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut out = names.to_vec();
    for i in (1..out.len()).rev() {
        let j = rng.random_range(0..=i);
        out.swap(i, j);
    }
    out
}

/// A uniformly random permutation of the pool.
pub fn random_selector(pool: &[String], seed: u64) -> Result<Ranking> {
    if pool.is_empty() {
        return Err(Error::InvalidArgument("empty model pool".to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ranking::new(shuffled(pool, &mut rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomSummary {
    pub top1: f64,
    pub top3: f64,
    pub spearman_mean: f64,
    pub ndcg_mean: f64,
    pub trials: usize,
}

/// Expected metrics of the random selector: for each trial, every pair gets
/// a fresh uniform permutation of its pool; the summary averages over pairs
/// and trials. Seeded and reproducible.
pub fn expected_random_metrics(
    pairs: &[(Vec<String>, Ranking)],
    trials: usize,
    seed: u64,
) -> Result<RandomSummary> {
    if pairs.is_empty() {
        return Err(Error::EmptyPairList);
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut top1 = 0.0;
    let mut top3 = 0.0;
    let mut spearman_sum = 0.0;
    let mut ndcg_sum = 0.0;
    for _ in 0..trials {
        for (pool, oracle) in pairs {
            let predicted = Ranking::new(shuffled(pool, &mut rng))?;
            if let Some(best) = oracle.best() {
                let head: Vec<&String> = predicted.names().iter().take(3).collect();
                if predicted.names().first().is_some_and(|n| n == best) {
                    top1 += 1.0;
                }
                if head.iter().any(|n| *n == best) {
                    top3 += 1.0;
                }
            }
            spearman_sum += spearman(&predicted, oracle)?;
            ndcg_sum += ndcg(&predicted, oracle)?;
        }
    }
    let denominator = (trials * pairs.len()) as f64;
    Ok(RandomSummary {
        top1: top1 / denominator,
        top3: top3 / denominator,
        spearman_mean: spearman_sum / denominator,
        ndcg_mean: ndcg_sum / denominator,
        trials,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub dataset: String,
    pub features: MetaFeatureVector,
    /// Oracle ranking per intent; a dataset may lack some intents.
    pub rankings: BTreeMap<Intent, Ranking>,
}

/// Training-side knowledge for the oracle-informed baselines.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainCorpus {
    pub entries: Vec<CorpusEntry>,
}

impl TrainCorpus {
    pub fn new(entries: Vec<CorpusEntry>) -> Result<TrainCorpus> {
        let mut seen = BTreeSet::new();
        for entry in &entries {
            if !seen.insert(entry.dataset.clone()) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate corpus dataset `{}`",
                    entry.dataset
                )));
            }
        }
        Ok(TrainCorpus { entries })
    }

    fn with_intent(&self, intent: Intent) -> Vec<&CorpusEntry> {
        self.entries
            .iter()
            .filter(|e| e.rankings.contains_key(&intent))
            .collect()
    }
}

/// Nearest-neighbor selector over standardized meta-features.
///
/// Features are z-scored with the corpus mean and (population) standard
/// deviation; zero-variance features are dropped. The `k` nearest corpus
/// datasets by Euclidean distance vote by mean rank position: a model missing
/// from a neighbor's ranking is charged that ranking's length + 1. Distance
/// ties resolve by dataset name; mean-rank ties resolve lexicographically.
pub fn knn_selector(
    query: &MetaFeatureVector,
    corpus: &TrainCorpus,
    intent: Intent,
    k: usize,
) -> Result<Ranking> {
    let entries = corpus.with_intent(intent);
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".to_string()));
    }
    if entries.len() < k {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds the {} corpus datasets with a {intent} ranking",
            entries.len()
        )));
    }

    let features: Vec<[f64; 9]> = entries.iter().map(|e| e.features.to_array()).collect();
    let n = features.len() as f64;
    let mut mean = [0.0; 9];
    for row in &features {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / n;
        }
    }
    let mut std = [0.0; 9];
    for row in &features {
        for j in 0..9 {
            std[j] += (row[j] - mean[j]).powi(2) / n;
        }
    }
    for s in &mut std {
        *s = s.sqrt();
    }

    let standardize = |row: &[f64; 9]| -> Vec<f64> {
        (0..9)
            .filter(|j| std[*j] > 0.0)
            .map(|j| (row[j] - mean[j]) / std[j])
            .collect()
    };
    let query_z = standardize(&query.to_array());
    let mut by_distance: Vec<(f64, &CorpusEntry)> = entries
        .iter()
        .zip(&features)
        .map(|(entry, row)| {
            let z = standardize(row);
            let d2: f64 = z.iter().zip(&query_z).map(|(a, b)| (a - b) * (a - b)).sum();
            (d2, *entry)
        })
        .collect();
    by_distance.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.dataset.cmp(&b.1.dataset)));
    let neighbors = &by_distance[..k];

    let mut models: BTreeSet<&str> = BTreeSet::new();
    for (_, entry) in neighbors {
        models.extend(entry.rankings[&intent].names().iter().map(|s| s.as_str()));
    }
    let mut mean_ranks: Vec<(f64, &str)> = models
        .into_iter()
        .map(|model| {
            let total: f64 = neighbors
                .iter()
                .map(|(_, entry)| {
                    let ranking = &entry.rankings[&intent];
                    match ranking.position(model) {
                        Some(position) => (position + 1) as f64,
                        None => (ranking.len() + 1) as f64,
                    }
                })
                .sum();
            (total / k as f64, model)
        })
        .collect();
    mean_ranks.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    Ranking::new(mean_ranks.into_iter().map(|(_, m)| m.to_string()).collect())
}

/// Ranks models by how often they are oracle-best across the corpus for the
/// intent; ties and zero-win models order lexicographically.
pub fn majority_vote(corpus: &TrainCorpus, intent: Intent) -> Result<Ranking> {
    let entries = corpus.with_intent(intent);
    if entries.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no corpus dataset has a {intent} ranking"
        )));
    }
    let mut wins: BTreeMap<&str, usize> = BTreeMap::new();
    for entry in &entries {
        let ranking = &entry.rankings[&intent];
        for model in ranking.names() {
            wins.entry(model.as_str()).or_insert(0);
        }
        if let Some(best) = ranking.best() {
            *wins.entry(best).or_insert(0) += 1;
        }
    }
    let mut ordered: Vec<(&str, usize)> = wins.into_iter().collect();
    ordered.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Ranking::new(ordered.into_iter().map(|(m, _)| m.to_string()).collect())
}
