//! Deterministic synthetic fixtures: datasets with dialed-in stress
//! characteristics, and planted benchmarks whose oracle rankings are
//! generated by a hidden registry run through the scoring engine.
//!
//! The planted construction gives calibration experiments a recoverable
//! ground truth: perfect parameters exist by construction, so an optimizer's
//! train-side score has a known ceiling of 1.0.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Column, Dataset};
use crate::dims::{Dims, Intent};
use crate::engine::{score_pool, AblationFlags};
use crate::metrics::{OracleRecord, OracleTable};
use crate::registry::{
    EngineConfig, IntentScaleFactors, ModelConstraints, ModelFamily, ModelSpec, Registry,
    UserConstraints,
};
use crate::stress;

/// Knobs for one synthetic dataset.
#[derive(Debug, Clone)]
pub struct StressSpec {
    pub name: String,
    pub rows: usize,
    /// Log-normal sigma for the skewed column; 0 disables it.
    pub skew_sigma: f64,
    /// Adds a code column with this many distinct values.
    pub id_cardinality: Option<usize>,
    /// `(categories, zipf_exponent)`; exponent 0 is uniform.
    pub zipf: Option<(usize, f64)>,
    /// Adds a correlated block: one latent base column plus this many noisy
    /// followers of it (0 disables the block).
    pub correlated_followers: usize,
    /// Independent numeric filler columns.
    pub noise_columns: usize,
    /// Per-cell missing probability applied to the filler columns.
    pub missing_rate: f64,
}

impl StressSpec {
    pub fn mild(name: &str, rows: usize) -> StressSpec {
        StressSpec {
            name: name.to_string(),
            rows,
            skew_sigma: 0.0,
            id_cardinality: None,
            zipf: Some((4, 0.0)),
            correlated_followers: 0,
            noise_columns: 2,
            missing_rate: 0.0,
        }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn zipf_weights(categories: usize, exponent: f64) -> Vec<f64> {
    let raw: Vec<f64> = (1..=categories).map(|r| 1.0 / (r as f64).powf(exponent)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

fn sample_index(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    for (index, w) in weights.iter().enumerate() {
        cumulative += w;
        if u < cumulative {
            return index;
        }
    }
    weights.len() - 1
}

/// Builds one dataset from a spec, deterministically from the seed.
pub fn generate_dataset(spec: &StressSpec, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.rows;
    let mut columns = Vec::new();

    if spec.skew_sigma > 0.0 {
        let cells: Vec<Option<f64>> = (0..n)
            .map(|_| Some((spec.skew_sigma * normal(&mut rng)).exp()))
            .collect();
        columns.push(Column::numeric("skewed", cells));
    }

    if let Some(cardinality) = spec.id_cardinality {
        let cells: Vec<Option<String>> = (0..n)
            .map(|i| {
                // Cycle through the code book so every value appears.
                let code = if i < cardinality { i } else { rng.random_range(0..cardinality) };
                Some(format!("code{code:05}"))
            })
            .collect();
        columns.push(Column::categorical("code", cells));
    }

    if let Some((categories, exponent)) = spec.zipf {
        let weights = zipf_weights(categories, exponent);
        let cells: Vec<Option<String>> = (0..n)
            .map(|_| Some(format!("cat{}", sample_index(&weights, &mut rng))))
            .collect();
        columns.push(Column::categorical("category", cells));
    }

    if spec.correlated_followers > 0 {
        let base: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
        for follower in 0..spec.correlated_followers {
            let cells: Vec<Option<f64>> = base
                .iter()
                .map(|x| Some(x + 0.05 * normal(&mut rng)))
                .collect();
            columns.push(Column::numeric(format!("corr_f{follower}"), cells));
        }
        columns.push(Column::numeric(
            "corr_base",
            base.into_iter().map(Some).collect(),
        ));
    }

    for idx in 0..spec.noise_columns {
        let cells: Vec<Option<f64>> = (0..n)
            .map(|_| {
                if spec.missing_rate > 0.0 && rng.random::<f64>() < spec.missing_rate {
                    None
                } else {
                    Some(rng.random_range(-1.0..1.0) + normal(&mut rng) * 0.1)
                }
            })
            .collect();
        columns.push(Column::numeric(format!("noise{idx}"), cells));
    }

    Dataset::new(spec.name.clone(), columns).expect("spec produces a valid dataset")
}

/// Writes a dataset back out as CSV (numeric cells in Rust float syntax).
pub fn dataset_to_csv(dataset: &Dataset) -> String {
    let mut out = String::new();
    let names: Vec<&str> = dataset.columns().iter().map(|c| c.name()).collect();
    out.push_str(&names.join(","));
    out.push('\n');
    for row in 0..dataset.row_count() {
        let mut fields = Vec::with_capacity(names.len());
        for column in dataset.columns() {
            let cell = match column.values() {
                crate::data::ColumnValues::Numeric(v) => {
                    v[row].map(|x| format!("{x}")).unwrap_or_default()
                }
                crate::data::ColumnValues::Categorical(v) => {
                    v[row].clone().unwrap_or_default()
                }
            };
            fields.push(cell);
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Six dataset specs spanning the stress space: small/large, skewed/mild,
/// high/low cardinality, concentrated/uniform categories, correlated or not.
pub fn planted_dataset_specs() -> Vec<StressSpec> {
    vec![
        StressSpec {
            name: "planted_small_skew".to_string(),
            rows: 380,
            skew_sigma: 1.1,
            id_cardinality: None,
            zipf: Some((6, 0.4)),
            correlated_followers: 0,
            noise_columns: 2,
            missing_rate: 0.0,
        },
        StressSpec {
            name: "planted_wide_codes".to_string(),
            rows: 2600,
            skew_sigma: 0.0,
            id_cardinality: Some(700),
            zipf: Some((8, 0.2)),
            correlated_followers: 0,
            noise_columns: 2,
            missing_rate: 0.0,
        },
        StressSpec {
            name: "planted_zipf_heavy".to_string(),
            rows: 1400,
            skew_sigma: 0.4,
            id_cardinality: None,
            zipf: Some((30, 2.2)),
            correlated_followers: 0,
            noise_columns: 1,
            missing_rate: 0.0,
        },
        StressSpec {
            name: "planted_correlated".to_string(),
            rows: 6000,
            skew_sigma: 0.0,
            id_cardinality: None,
            zipf: None,
            correlated_followers: 3,
            noise_columns: 1,
            missing_rate: 0.0,
        },
        StressSpec {
            name: "planted_mild_large".to_string(),
            rows: 12_000,
            skew_sigma: 0.2,
            id_cardinality: None,
            zipf: Some((5, 0.0)),
            correlated_followers: 0,
            noise_columns: 3,
            missing_rate: 0.0,
        },
        StressSpec {
            name: "planted_mixed_stress".to_string(),
            rows: 900,
            skew_sigma: 0.8,
            id_cardinality: Some(260),
            zipf: Some((12, 1.4)),
            correlated_followers: 1,
            noise_columns: 1,
            missing_rate: 0.02,
        },
    ]
}

/// A planted benchmark: hidden registry + hidden scale factors, datasets,
/// and the oracle table realized from the engine's own rankings.
pub struct PlantedFixture {
    pub datasets: Vec<Dataset>,
    /// The hidden truth the calibrator tries to recover.
    pub registry: Registry,
    pub oracle: OracleTable,
}

/// Neutral model names: the planted registry deliberately avoids the names
/// referenced by tie-break rules and hard-problem routes, so ablation runs
/// stay purely score-driven.
fn planted_model_names() -> Vec<String> {
    (0..10).map(|i| format!("m{i}")).collect()
}

fn random_scale_factors(rng: &mut ChaCha8Rng) -> IntentScaleFactors {
    let mut draw = |_: usize| -> Dims<f64> {
        Dims::from_array([(); 6].map(|_| rng.random_range(1.0..5.5)))
    };
    IntentScaleFactors {
        privacy: draw(0),
        fidelity: draw(1),
        utility: draw(2),
    }
}

/// Builds the hidden registry: tiered capabilities (each model has a base
/// quality level, jittered per dimension — the shape real synthesizer pools
/// take), random scale factors, default engine config, no quality bonuses.
pub fn planted_registry(seed: u64) -> Registry {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let families = [
        ModelFamily::DifferentialPrivacy,
        ModelFamily::DeepGenerative,
        ModelFamily::TreeBased,
        ModelFamily::Statistical,
    ];
    let names = planted_model_names();
    let count = names.len();
    let models: Vec<ModelSpec> = names
        .into_iter()
        .enumerate()
        .map(|(index, name)| {
            let base = 0.3 + 3.4 * index as f64 / (count - 1) as f64;
            let capabilities = Dims::from_array([(); 6].map(|_| {
                let level = base + rng.random_range(-0.6..0.6);
                level.round().clamp(0.0, 4.0) as u8
            }));
            ModelSpec {
                name,
                family: families[index % families.len()],
                capabilities,
                avg_quality_score: 0.0,
                constraints: ModelConstraints::default(),
                extra: Default::default(),
            }
        })
        .collect();
    let registry = Registry {
        version: "planted".to_string(),
        models,
        engine: EngineConfig::default(),
        scale_factors: Some(random_scale_factors(&mut rng)),
        extra: Default::default(),
    };
    registry.validate().expect("planted registry is valid");
    registry
}

/// Ranks a dataset-intent pair with the given registry's scale factors
/// active (full pipeline flags, no user constraints).
pub fn engine_ranking(dataset: &Dataset, intent: Intent, registry: &Registry) -> Vec<String> {
    let profile = stress::stress_profile(dataset);
    let requirements =
        stress::requirement_vector_with_bins(&profile, &registry.engine.correlation_bins);
    let pool = registry.apply_hard_filters(dataset.row_count(), &UserConstraints::default());
    let alphas = registry
        .scale_factors
        .as_ref()
        .map(|sf| *sf.get(intent));
    score_pool(
        &pool,
        &requirements,
        alphas.as_ref(),
        &AblationFlags::FULL,
        &registry.engine,
    )
    .into_iter()
    .map(|m| m.name)
    .collect()
}

/// Realizes a ranking as strictly monotone oracle metric values: fidelity and
/// utility decrease with rank, privacy PCR increases (rank 1 = lowest PCR).
fn record_metrics(ranking: &[String], intent: Intent, rows: &mut Vec<OracleRecord>, dataset: &str) {
    let n = ranking.len() as f64;
    for (position, model) in ranking.iter().enumerate() {
        let rank = (position + 1) as f64;
        let record = match rows
            .iter_mut()
            .find(|r| r.dataset == dataset && r.model == *model)
        {
            Some(existing) => existing,
            None => {
                rows.push(OracleRecord {
                    dataset: dataset.to_string(),
                    model: model.clone(),
                    privacy_pcr: None,
                    fidelity_shape: None,
                    utility_score: None,
                });
                rows.last_mut().unwrap()
            }
        };
        match intent {
            Intent::Privacy => record.privacy_pcr = Some(rank / n),
            Intent::Fidelity => record.fidelity_shape = Some((n - rank + 1.0) / n),
            Intent::Utility => record.utility_score = Some((n - rank + 1.0) / n),
        }
    }
}

/// Builds the full planted benchmark from one seed.
pub fn planted_fixture(seed: u64) -> PlantedFixture {
    let registry = planted_registry(seed);
    let datasets: Vec<Dataset> = planted_dataset_specs()
        .iter()
        .enumerate()
        .map(|(index, spec)| generate_dataset(spec, seed.wrapping_add(1000 + index as u64)))
        .collect();
    let mut rows = Vec::new();
    for dataset in &datasets {
        for intent in Intent::ALL {
            let ranking = engine_ranking(dataset, intent, &registry);
            record_metrics(&ranking, intent, &mut rows, dataset.name());
        }
    }
    PlantedFixture {
        datasets,
        registry,
        oracle: OracleTable { rows },
    }
}

/// Specs for the seven desk-scale demo datasets shipped under `fixtures/`.
/// Names follow common tabular benchmarks; the content is synthetic.
pub fn demo_dataset_specs() -> Vec<StressSpec> {
    vec![
        StressSpec {
            name: "Abalone".to_string(),
            rows: 1200,
            skew_sigma: 0.3,
            id_cardinality: None,
            zipf: Some((3, 0.3)),
            correlated_followers: 2,
            noise_columns: 2,
            missing_rate: 0.0,
        },
        StressSpec {
            name: "Bean".to_string(),
            rows: 2000,
            skew_sigma: 0.5,
            id_cardinality: None,
            zipf: Some((7, 0.6)),
            correlated_followers: 2,
            noise_columns: 3,
            missing_rate: 0.0,
        },
        StressSpec {
            name: "IndianLiverPatient".to_string(),
            rows: 583,
            skew_sigma: 1.3,
            id_cardinality: None,
            zipf: Some((2, 0.5)),
            correlated_followers: 1,
            noise_columns: 3,
            missing_rate: 0.01,
        },
        StressSpec {
            name: "Obesity".to_string(),
            rows: 1000,
            skew_sigma: 0.2,
            id_cardinality: None,
            zipf: Some((7, 1.0)),
            correlated_followers: 0,
            noise_columns: 4,
            missing_rate: 0.0,
        },
        StressSpec {
            name: "faults".to_string(),
            rows: 450,
            skew_sigma: 1.6,
            id_cardinality: Some(60),
            zipf: Some((6, 1.2)),
            correlated_followers: 2,
            noise_columns: 2,
            missing_rate: 0.0,
        },
        StressSpec {
            name: "insurance".to_string(),
            rows: 1338,
            skew_sigma: 0.9,
            id_cardinality: None,
            zipf: Some((4, 0.8)),
            correlated_followers: 1,
            noise_columns: 2,
            missing_rate: 0.0,
        },
        StressSpec {
            name: "wilt".to_string(),
            rows: 1600,
            skew_sigma: 0.6,
            id_cardinality: Some(550),
            zipf: Some((2, 1.5)),
            correlated_followers: 1,
            noise_columns: 2,
            missing_rate: 0.0,
        },
    ]
}

/// The shipped demo benchmark: seven synthetic datasets plus an oracle table
/// generated by a perturbed copy of the given registry (capabilities jittered
/// by ±1, scale factors rescaled), so the shipped engine scores well but not
/// perfectly. The (insurance, SMOTE) pair is dropped, leaving one 9-model
/// ranking among 10-model ones.
pub fn demo_fixture(seed: u64, registry: &Registry) -> (Vec<Dataset>, OracleTable) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hidden = registry.clone();
    for model in &mut hidden.models {
        let mut caps = model.capabilities.to_array();
        for value in &mut caps {
            let delta: i8 = rng.random_range(-1..=1);
            *value = (*value as i8 + delta).clamp(0, 4) as u8;
        }
        model.capabilities = Dims::from_array(caps);
        if model.constraints.dp_certified && model.capabilities.privacy_dp < 3 {
            model.capabilities.privacy_dp = 3;
        }
    }
    if let Some(sf) = &mut hidden.scale_factors {
        for intent in Intent::ALL {
            let factors = sf.get_mut(intent);
            let mut values = factors.to_array();
            for v in &mut values {
                *v = (*v * rng.random_range(0.6..1.4)).clamp(0.0, 10.0);
            }
            *factors = Dims::from_array(values);
        }
    }

    let datasets: Vec<Dataset> = demo_dataset_specs()
        .iter()
        .enumerate()
        .map(|(index, spec)| generate_dataset(spec, seed.wrapping_add(77 + index as u64)))
        .collect();
    let mut rows = Vec::new();
    for dataset in &datasets {
        for intent in Intent::ALL {
            let mut ranking = engine_ranking(dataset, intent, &hidden);
            // Local rank noise so no selector replays the oracle exactly.
            for _ in 0..2 {
                if ranking.len() >= 2 {
                    let i = rng.random_range(0..ranking.len() - 1);
                    ranking.swap(i, i + 1);
                }
            }
            if dataset.name() == "insurance" {
                ranking.retain(|m| m != "SMOTE");
            }
            record_metrics(&ranking, intent, &mut rows, dataset.name());
        }
    }
    (datasets, OracleTable { rows })
}
