//! Benchmark harness: dataset-level splitting, selector evaluation over
//! dataset-intent pairs, ablation runs, and report rendering.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::{
    expected_random_metrics, knn_selector, majority_vote, static_heuristic, CorpusEntry,
    TrainCorpus,
};
use crate::data::{meta_features, Dataset};
use crate::dims::Intent;
use crate::engine::{recommend, AblationFlags, RecommendRequest};
use crate::error::{Error, Result};
use crate::metrics::{ndcg, spearman, OracleTable, Ranking};
use crate::registry::{IntentScaleFactors, Registry};

/// splitmix64, used to drive the split shuffle.
struct SplitMix64(u64);

impl SplitMix64 {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

impl SplitSpec {
    pub fn from_path(path: &Path) -> Result<SplitSpec> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let split: SplitSpec = serde_json::from_str(&text)?;
        for name in &split.train {
            if split.test.contains(name) {
                return Err(Error::InvalidArgument(format!(
                    "dataset `{name}` appears in both train and test"
                )));
            }
        }
        Ok(split)
    }
}

/// Deterministic dataset-level split: names are sorted, shuffled by a
/// splitmix64-seeded Fisher–Yates pass, and the first `train_count` become
/// the training side.
pub fn split_datasets(names: &[String], seed: u64, train_count: usize) -> Result<SplitSpec> {
    let mut sorted = names.to_vec();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != names.len() {
        return Err(Error::InvalidArgument("duplicate dataset names".to_string()));
    }
    if train_count >= sorted.len() {
        return Err(Error::InvalidArgument(format!(
            "train_count {train_count} must be below the {} datasets",
            sorted.len()
        )));
    }
    let mut rng = SplitMix64(seed);
    for i in (1..sorted.len()).rev() {
        let j = (rng.next() % (i as u64 + 1)) as usize;
        sorted.swap(i, j);
    }
    let (train, test) = sorted.split_at(train_count);
    Ok(SplitSpec {
        train: train.to_vec(),
        test: test.to_vec(),
    })
}

/// A selector under evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelectorSpec {
    /// The scoring engine, with optional ablation flags and scale-factor
    /// override.
    Engine {
        label: String,
        flags: AblationFlags,
        scale_factors: Option<IntentScaleFactors>,
    },
    /// Meta-feature nearest neighbor over the training corpus.
    Knn { k: usize },
    /// Expected metrics of uniform random ranking.
    Random { trials: usize },
    StaticHeuristic,
    MajorityVote,
    /// Replays the oracle ranking (diagnostic upper bound).
    OracleReplay,
}

impl SelectorSpec {
    pub fn engine_full(label: &str) -> SelectorSpec {
        SelectorSpec::Engine {
            label: label.to_string(),
            flags: AblationFlags::FULL,
            scale_factors: None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            SelectorSpec::Engine { label, .. } => label.clone(),
            SelectorSpec::Knn { k } => format!("knn(k={k})"),
            SelectorSpec::Random { trials } => format!("random(E[{trials}])"),
            SelectorSpec::StaticHeuristic => "static_heuristic".to_string(),
            SelectorSpec::MajorityVote => "majority_vote".to_string(),
            SelectorSpec::OracleReplay => "oracle_replay".to_string(),
        }
    }
}

/// Everything one benchmark run consumes.
pub struct BenchInputs<'a> {
    /// All datasets by name (train and test sides).
    pub datasets: &'a BTreeMap<String, Dataset>,
    pub oracle: &'a OracleTable,
    pub registry: &'a Registry,
    pub split: &'a SplitSpec,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub dataset: String,
    pub intent: Intent,
    pub top1: f64,
    pub top3: f64,
    pub spearman: f64,
    pub ndcg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPair {
    pub dataset: String,
    pub intent: Intent,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub top1: f64,
    pub top3: f64,
    pub spearman_mean: f64,
    pub ndcg_mean: f64,
    pub pairs: usize,
}

impl EvalSummary {
    /// Unweighted means over per-pair outcomes.
    fn from_outcomes(outcomes: &[PairOutcome]) -> Result<EvalSummary> {
        if outcomes.is_empty() {
            return Err(Error::EmptyPairList);
        }
        let n = outcomes.len() as f64;
        Ok(EvalSummary {
            top1: outcomes.iter().map(|o| o.top1).sum::<f64>() / n,
            top3: outcomes.iter().map(|o| o.top3).sum::<f64>() / n,
            spearman_mean: outcomes.iter().map(|o| o.spearman).sum::<f64>() / n,
            ndcg_mean: outcomes.iter().map(|o| o.ndcg).sum::<f64>() / n,
            pairs: outcomes.len(),
        })
    }
}

/// Per-pair metrics of one (predicted, oracle) ranking pair.
fn score_pair(predicted: &Ranking, oracle: &Ranking) -> Result<(f64, f64, f64, f64)> {
    let best = oracle.best().ok_or(Error::OverlapTooSmall)?;
    let top1 = predicted.names().first().is_some_and(|n| n == best);
    let top3 = predicted.names().iter().take(3).any(|n| n == best);
    Ok((
        if top1 { 1.0 } else { 0.0 },
        if top3 { 1.0 } else { 0.0 },
        spearman(predicted, oracle)?,
        ndcg(predicted, oracle)?,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorReport {
    pub selector: String,
    pub summary: EvalSummary,
    pub per_pair: Vec<PairOutcome>,
    pub skipped: Vec<SkippedPair>,
}

/// Builds the training corpus (meta-features + per-intent oracle rankings)
/// for the oracle-informed baselines.
pub fn build_corpus(inputs: &BenchInputs) -> Result<TrainCorpus> {
    let mut entries = Vec::new();
    for name in &inputs.split.train {
        let dataset = inputs
            .datasets
            .get(name)
            .ok_or_else(|| Error::InvalidArgument(format!("train dataset `{name}` not loaded")))?;
        let mut rankings = BTreeMap::new();
        for intent in Intent::ALL {
            if let Ok(ranking) = inputs.oracle.oracle_ranking(name, intent) {
                rankings.insert(intent, ranking);
            }
        }
        entries.push(CorpusEntry {
            dataset: name.clone(),
            features: meta_features(dataset),
            rankings,
        });
    }
    TrainCorpus::new(entries)
}

/// The evaluated pairs: every test dataset crossed with every intent, in
/// deterministic order.
fn test_pairs(inputs: &BenchInputs) -> Vec<(String, Intent)> {
    let mut names = inputs.split.test.clone();
    names.sort();
    names
        .iter()
        .flat_map(|name| Intent::ALL.iter().map(move |i| (name.clone(), *i)))
        .collect()
}

fn pair_seed(base: u64, index: usize) -> u64 {
    SplitMix64(base ^ (index as u64).wrapping_mul(0xA076_1D64_78BD_642F)).next()
}

/// Evaluates one selector over every test pair. Pairs the selector cannot
/// serve (missing oracle metric, corpus too small, …) are recorded as
/// skipped with the reason; the summary averages the served pairs.
pub fn evaluate_selector(spec: &SelectorSpec, inputs: &BenchInputs) -> Result<SelectorReport> {
    let corpus = build_corpus(inputs)?;
    let mut outcomes = Vec::new();
    let mut skipped = Vec::new();
    for (index, (dataset_name, intent)) in test_pairs(inputs).into_iter().enumerate() {
        let oracle = match inputs.oracle.oracle_ranking(&dataset_name, intent) {
            Ok(r) => r,
            Err(e) => {
                skipped.push(SkippedPair {
                    dataset: dataset_name,
                    intent,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let dataset = inputs.datasets.get(&dataset_name).ok_or_else(|| {
            Error::InvalidArgument(format!("test dataset `{dataset_name}` not loaded"))
        })?;

        let metrics = match spec {
            SelectorSpec::Random { trials } => {
                let pool = oracle.names().to_vec();
                let pairs = vec![(pool, oracle.clone())];
                match expected_random_metrics(&pairs, *trials, pair_seed(inputs.seed, index)) {
                    Ok(summary) => {
                        Ok((summary.top1, summary.top3, summary.spearman_mean, summary.ndcg_mean))
                    }
                    Err(e) => Err(e),
                }
            }
            other => predict(other, inputs, dataset, intent, &corpus)
                .and_then(|predicted| score_pair(&predicted, &oracle)),
        };
        match metrics {
            Ok((top1, top3, rho, gain)) => outcomes.push(PairOutcome {
                dataset: dataset_name,
                intent,
                top1,
                top3,
                spearman: rho,
                ndcg: gain,
            }),
            Err(e) => skipped.push(SkippedPair {
                dataset: dataset_name,
                intent,
                reason: e.to_string(),
            }),
        }
    }
    Ok(SelectorReport {
        selector: spec.label(),
        summary: EvalSummary::from_outcomes(&outcomes)?,
        per_pair: outcomes,
        skipped,
    })
}

fn predict(
    spec: &SelectorSpec,
    inputs: &BenchInputs,
    dataset: &Dataset,
    intent: Intent,
    corpus: &TrainCorpus,
) -> Result<Ranking> {
    match spec {
        SelectorSpec::Engine {
            flags,
            scale_factors,
            ..
        } => {
            let request = RecommendRequest {
                flags: *flags,
                scale_factor_override: scale_factors.as_ref(),
                ..RecommendRequest::new(Some(intent))
            };
            let recommendation = recommend(dataset, inputs.registry, &request)?;
            Ranking::new(recommendation.ranking_names())
        }
        SelectorSpec::Knn { k } => {
            knn_selector(&meta_features(dataset), corpus, intent, *k)
        }
        SelectorSpec::StaticHeuristic => {
            static_heuristic(dataset.row_count(), intent, inputs.registry)
        }
        SelectorSpec::MajorityVote => majority_vote(corpus, intent),
        SelectorSpec::OracleReplay => inputs.oracle.oracle_ranking(dataset.name(), intent),
        SelectorSpec::Random { .. } => unreachable!("random is handled per pair"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: String,
    pub summary: EvalSummary,
}

/// Evaluates the four component ablations with the given calibrated scale
/// factors: bare (no stress, no focus), stress-only, focus-only, full.
pub fn run_ablations(
    inputs: &BenchInputs,
    scale_factors: &IntentScaleFactors,
) -> Result<Vec<AblationRow>> {
    let variants: [(&str, AblationFlags); 4] = [
        ("bare", AblationFlags::BARE),
        ("stress_only", AblationFlags::STRESS_ONLY),
        ("focus_only", AblationFlags::FOCUS_ONLY),
        ("full", AblationFlags::FULL),
    ];
    let mut rows = Vec::new();
    for (name, flags) in variants {
        let spec = SelectorSpec::Engine {
            label: name.to_string(),
            flags,
            scale_factors: Some(*scale_factors),
        };
        let report = evaluate_selector(&spec, inputs)?;
        rows.push(AblationRow {
            variant: name.to_string(),
            summary: report.summary,
        });
    }
    Ok(rows)
}

/// A complete, reproducible benchmark result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRun {
    pub split: SplitSpec,
    pub seed: u64,
    pub selectors: Vec<SelectorReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ablations: Option<Vec<AblationRow>>,
}

pub fn run_benchmark(
    inputs: &BenchInputs,
    specs: &[SelectorSpec],
    ablation_scale_factors: Option<&IntentScaleFactors>,
) -> Result<BenchmarkRun> {
    let selectors: Vec<SelectorReport> = specs
        .iter()
        .map(|spec| evaluate_selector(spec, inputs))
        .collect::<Result<_>>()?;
    let ablations = match ablation_scale_factors {
        Some(sf) => Some(run_ablations(inputs, sf)?),
        None => None,
    };
    Ok(BenchmarkRun {
        split: inputs.split.clone(),
        seed: inputs.seed,
        selectors,
        ablations,
    })
}

/// Plain-text report: one aligned row per selector, plus the ablation table
/// when present.
pub fn render_text_report(run: &BenchmarkRun) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "split: train={} test={} (seed {})\n",
        run.split.train.join("/"),
        run.split.test.join("/"),
        run.seed
    ));
    out.push_str(&format!(
        "{:<24} {:>6} {:>6} {:>9} {:>7} {:>6}\n",
        "selector", "Top-1", "Top-3", "Spearman", "NDCG", "pairs"
    ));
    for report in &run.selectors {
        let s = &report.summary;
        out.push_str(&format!(
            "{:<24} {:>6.3} {:>6.3} {:>9.3} {:>7.3} {:>6}\n",
            report.selector, s.top1, s.top3, s.spearman_mean, s.ndcg_mean, s.pairs
        ));
        for skip in &report.skipped {
            out.push_str(&format!(
                "  skipped {}/{}: {}\n",
                skip.dataset, skip.intent, skip.reason
            ));
        }
    }
    if let Some(ablations) = &run.ablations {
        out.push_str("\nablations:\n");
        out.push_str(&format!(
            "{:<24} {:>6} {:>6} {:>9} {:>7}\n",
            "variant", "Top-1", "Top-3", "Spearman", "NDCG"
        ));
        for row in ablations {
            let s = &row.summary;
            out.push_str(&format!(
                "{:<24} {:>6.3} {:>6.3} {:>9.3} {:>7.3}\n",
                row.variant, s.top1, s.top3, s.spearman_mean, s.ndcg_mean
            ));
        }
    }
    out
}
