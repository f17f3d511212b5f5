//! Bayesian calibration of the scoring system with a from-scratch
//! tree-structured Parzen estimator.
//!
//! Two variants: scale-factors-only (18 float parameters, 3 intents × 6
//! dimensions) and joint (adds the 60 integer capability scores, 10 models ×
//! 6 dimensions). Each trial overwrites the sampled values on a derived copy
//! of the registry, reruns the scoring pipeline on every training pair, and
//! scores the trial by mean Spearman or Top-1 against the oracle rankings.
//!
//! The sampler models each parameter independently. After the random startup
//! phase, trials split into a "good" set (top `gamma_fraction` by objective,
//! maximization) and a "bad" rest. Float parameters get Gaussian-kernel
//! Parzen mixtures over each group (kernel centers at the observed values
//! plus one uniform prior component; bandwidth `range/√n`, floored at 1% of
//! the range); integer parameters get add-one-smoothed categorical
//! frequencies. Candidates are drawn from the good density and the one with
//! the highest good/bad density ratio wins.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dims::{Dims, Intent, RequirementVector, DIMENSION_NAMES};
use crate::engine::{score_pool, AblationFlags};
use crate::error::{Error, Result};
use crate::metrics::{spearman, Ranking};
use crate::registry::{IntentScaleFactors, Registry, UserConstraints};

pub const DEFAULT_GAMMA_FRACTION: f64 = 0.1;
pub const DEFAULT_CANDIDATES_PER_STEP: usize = 24;
/// Cap on the good-set size, mirroring the reference sampler's behavior of
/// keeping the top decile but never more than 25 trials.
pub const DEFAULT_GOOD_SET_CAP: usize = 25;
const BANDWIDTH_FLOOR_FRACTION: f64 = 0.01;
pub const CAPABILITY_PARAM_MAX: i64 = 4;
pub const SCALE_FACTOR_PARAM_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamKind {
    IntegerRange { min: i64, max: i64 },
    FloatRange { min: f64, max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDescriptor {
    pub name: String,
    pub kind: ParamKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub params: Vec<ParamDescriptor>,
}

/// Calibration parameter names: `cap.<model>.<dimension>` for capability
/// scores and `alpha.<intent>.<dimension>` for scale factors.
fn capability_param(model: &str, dimension: &str) -> String {
    format!("cap.{model}.{dimension}")
}

fn alpha_param(intent: Intent, dimension: &str) -> String {
    format!("alpha.{intent}.{dimension}")
}

impl SearchSpace {
    /// 18 float parameters: one scale factor per intent and dimension.
    pub fn sf_only() -> SearchSpace {
        let mut params = Vec::new();
        for intent in Intent::ALL {
            for dimension in DIMENSION_NAMES {
                params.push(ParamDescriptor {
                    name: alpha_param(intent, dimension),
                    kind: ParamKind::FloatRange {
                        min: 0.0,
                        max: SCALE_FACTOR_PARAM_MAX,
                    },
                });
            }
        }
        SearchSpace { params }
    }

    /// Capability integers for every registry model plus the 18 scale
    /// factors (78 parameters for a 10-model registry).
    pub fn joint(model_names: &[String]) -> SearchSpace {
        let mut params = Vec::new();
        for model in model_names {
            for dimension in DIMENSION_NAMES {
                params.push(ParamDescriptor {
                    name: capability_param(model, dimension),
                    kind: ParamKind::IntegerRange {
                        min: 0,
                        max: CAPABILITY_PARAM_MAX,
                    },
                });
            }
        }
        params.extend(SearchSpace::sf_only().params);
        SearchSpace { params }
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Integer(i64),
    Float(f64),
}

impl ParamValue {
    pub fn as_f64(self) -> f64 {
        match self {
            ParamValue::Integer(v) => v as f64,
            ParamValue::Float(v) => v,
        }
    }
}

pub type Params = BTreeMap<String, ParamValue>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    SfOnly,
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    Spearman,
    Top1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub variant: Variant,
    pub trials: usize,
    pub startup_trials: usize,
    pub seed: u64,
    pub objective: ObjectiveKind,
    pub gamma_fraction: f64,
    /// Upper bound on the good-set size (the reference sampler uses 25).
    pub good_set_cap: usize,
    pub candidates_per_step: usize,
}

impl CalibrationConfig {
    /// Scale-factor-only defaults: 200 trials, 20 random startup, Top-1.
    pub fn sf_only() -> CalibrationConfig {
        CalibrationConfig {
            variant: Variant::SfOnly,
            trials: 200,
            startup_trials: 20,
            seed: 42,
            objective: ObjectiveKind::Top1,
            gamma_fraction: DEFAULT_GAMMA_FRACTION,
            good_set_cap: DEFAULT_GOOD_SET_CAP,
            candidates_per_step: DEFAULT_CANDIDATES_PER_STEP,
        }
    }

    /// Joint defaults: 500 trials, 50 random startup, mean Spearman.
    pub fn joint() -> CalibrationConfig {
        CalibrationConfig {
            variant: Variant::Joint,
            trials: 500,
            startup_trials: 50,
            seed: 42,
            objective: ObjectiveKind::Spearman,
            gamma_fraction: DEFAULT_GAMMA_FRACTION,
            good_set_cap: DEFAULT_GOOD_SET_CAP,
            candidates_per_step: DEFAULT_CANDIDATES_PER_STEP,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".to_string()));
        }
        if self.startup_trials > self.trials {
            return Err(Error::InvalidArgument(
                "startup_trials cannot exceed trials".to_string(),
            ));
        }
        if !(0.0 < self.gamma_fraction && self.gamma_fraction <= 1.0) {
            return Err(Error::InvalidArgument(
                "gamma_fraction must lie in (0, 1]".to_string(),
            ));
        }
        if self.candidates_per_step == 0 {
            return Err(Error::InvalidArgument(
                "candidates_per_step must be at least 1".to_string(),
            ));
        }
        if self.good_set_cap == 0 {
            return Err(Error::InvalidArgument(
                "good_set_cap must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub trial_index: usize,
    pub params: Params,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub config: CalibrationConfig,
    pub best_objective: f64,
    pub best_params: Params,
    pub history: Vec<Trial>,
}

/// One training pair: a dataset's precomputed requirements plus the oracle
/// ranking for one intent. The stress profile does not depend on the
/// calibrated parameters, so it is computed once up front.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainPair {
    pub dataset: String,
    pub row_count: usize,
    pub requirements: RequirementVector,
    pub intent: Intent,
    pub oracle: Ranking,
}

/// Applies sampled parameters to a derived copy of the registry: capability
/// overrides for the joint variant, scale factors for both.
pub fn apply_params(registry: &Registry, params: &Params, variant: Variant) -> Result<Registry> {
    let mut derived = registry.clone();
    let mut scale_factors = registry
        .scale_factors
        .unwrap_or_else(|| IntentScaleFactors::uniform(1.0));

    for (name, value) in params {
        let mut parts = name.splitn(3, '.');
        let (group, target, dimension) = match (parts.next(), parts.next(), parts.next()) {
            (Some(g), Some(t), Some(d)) => (g, t, d),
            _ => return Err(Error::invalid_param(name.clone(), "malformed name")),
        };
        let Some(dim_index) = DIMENSION_NAMES.iter().position(|d| *d == dimension) else {
            return Err(Error::invalid_param(name.clone(), "unknown dimension"));
        };
        match group {
            "cap" => {
                if variant != Variant::Joint {
                    return Err(Error::invalid_param(
                        name.clone(),
                        "capability overrides require the joint variant",
                    ));
                }
                let level = match value {
                    ParamValue::Integer(v) if (0..=CAPABILITY_PARAM_MAX).contains(v) => *v as u8,
                    _ => {
                        return Err(Error::invalid_param(name.clone(), "expected integer in 0..=4"))
                    }
                };
                let model = derived
                    .models
                    .iter_mut()
                    .find(|m| m.name == target)
                    .ok_or_else(|| Error::UnknownModel(target.to_string()))?;
                model.capabilities.set(dim_index, level);
            }
            "alpha" => {
                let intent = Intent::parse(target)?;
                let alpha = value.as_f64();
                if !(0.0..=SCALE_FACTOR_PARAM_MAX).contains(&alpha) {
                    return Err(Error::invalid_param(name.clone(), "expected float in [0, 10]"));
                }
                scale_factors.get_mut(intent).set(dim_index, alpha);
            }
            _ => return Err(Error::invalid_param(name.clone(), "unknown parameter group")),
        }
    }
    derived.scale_factors = Some(scale_factors);
    // dp_certified models may receive a privacy capability below 3 during
    // joint search; relax the certification flag rather than rejecting the
    // sample.
    for model in &mut derived.models {
        if model.constraints.dp_certified && model.capabilities.privacy_dp < 3 {
            model.constraints.dp_certified = false;
        }
    }
    Ok(derived)
}

/// Mean Spearman or Top-1 of the derived engine against the oracle rankings
/// over all training pairs. Pure in `(params, pairs, registry)`.
pub fn objective_value(
    params: &Params,
    variant: Variant,
    pairs: &[TrainPair],
    registry: &Registry,
    objective: ObjectiveKind,
) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::NoTrainingPairs);
    }
    let derived = apply_params(registry, params, variant)?;
    let scale_factors = derived.scale_factors.expect("set by apply_params");
    let flags = AblationFlags::FULL;
    let constraints = UserConstraints::default();
    let mut total = 0.0;
    for pair in pairs {
        let pool = derived.apply_hard_filters(pair.row_count, &constraints);
        if pool.is_empty() {
            return Err(Error::EmptyPool);
        }
        let alphas = scale_factors.get(pair.intent);
        let ranked = score_pool(&pool, &pair.requirements, Some(alphas), &flags, &derived.engine);
        let predicted = Ranking::new(ranked.into_iter().map(|m| m.name).collect())?;
        total += match objective {
            ObjectiveKind::Spearman => spearman(&predicted, &pair.oracle)?,
            ObjectiveKind::Top1 => {
                let hit = match (predicted.best(), pair.oracle.best()) {
                    (Some(p), Some(o)) => p == o,
                    _ => false,
                };
                if hit {
                    1.0
                } else {
                    0.0
                }
            }
        };
    }
    Ok(total / pairs.len() as f64)
}

fn uniform_sample(kind: &ParamKind, rng: &mut ChaCha8Rng) -> ParamValue {
    match kind {
        ParamKind::IntegerRange { min, max } => ParamValue::Integer(rng.random_range(*min..=*max)),
        ParamKind::FloatRange { min, max } => ParamValue::Float(rng.random_range(*min..*max)),
    }
}

/// Standard normal via Box–Muller, driven by the calibration RNG.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Parzen mixture over one float parameter: Gaussian kernels at the observed
/// values plus one uniform prior component, all equally weighted.
///
/// Kernel bandwidths adapt to the local spacing of the observed values (the
/// larger gap to a neighboring center), floored at 1% of the range and capped
/// at the range, so the density sharpens where trials cluster.
struct ParzenMixture {
    centers: Vec<f64>,
    bandwidths: Vec<f64>,
    /// Normalized mixture weights; the last entry belongs to the prior.
    weights: Vec<f64>,
    min: f64,
    max: f64,
}

impl ParzenMixture {
    /// `values` come with per-kernel weights (recency ramp); the uniform
    /// prior joins at weight 1.0 before normalization.
    fn fit(values: &[(f64, f64)], min: f64, max: f64) -> ParzenMixture {
        let range = max - min;
        let floor = BANDWIDTH_FLOOR_FRACTION * range;
        let mut pairs = values.to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let centers: Vec<f64> = pairs.iter().map(|(v, _)| *v).collect();
        let n = centers.len();
        let fixed = if n == 0 { range } else { (range / (n as f64).sqrt()).max(floor) };
        let bandwidths: Vec<f64> = (0..n).map(|_| fixed).collect();
        let mut weights: Vec<f64> = pairs.iter().map(|(_, w)| *w).collect();
        weights.push(1.0); // prior
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        ParzenMixture {
            centers,
            bandwidths,
            weights,
            min,
            max,
        }
    }

    fn density(&self, x: f64) -> f64 {
        let uniform = 1.0 / (self.max - self.min);
        let mut total = self.weights[self.centers.len()] * uniform;
        for ((center, bandwidth), weight) in
            self.centers.iter().zip(&self.bandwidths).zip(&self.weights)
        {
            let z = (x - center) / bandwidth;
            total += weight * (-0.5 * z * z).exp() / (bandwidth * (2.0 * PI).sqrt());
        }
        total
    }

    /// Draws from the mixture: pick a component by weight (kernels plus the
    /// prior), then sample it, clamping kernel draws into the range.
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let u: f64 = rng.random();
        let mut cumulative = 0.0;
        let mut component = self.centers.len();
        for (index, weight) in self.weights.iter().enumerate() {
            cumulative += weight;
            if u < cumulative {
                component = index;
                break;
            }
        }
        if component == self.centers.len() {
            rng.random_range(self.min..self.max)
        } else {
            let raw =
                self.centers[component] + self.bandwidths[component] * standard_normal(rng);
            raw.clamp(self.min, self.max)
        }
    }
}

/// Add-one-smoothed categorical frequencies over an integer range.
struct SmoothedCategorical {
    probs: Vec<f64>,
    min: i64,
}

impl SmoothedCategorical {
    fn fit(values: &[(i64, f64)], min: i64, max: i64) -> SmoothedCategorical {
        let cardinality = (max - min + 1) as usize;
        let mut counts = vec![1.0; cardinality]; // additive prior count 1
        for (v, weight) in values {
            counts[(v - min) as usize] += weight;
        }
        let total: f64 = counts.iter().sum();
        SmoothedCategorical {
            probs: counts.into_iter().map(|c| c / total).collect(),
            min,
        }
    }

    fn prob(&self, value: i64) -> f64 {
        self.probs[(value - self.min) as usize]
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> i64 {
        let u: f64 = rng.random();
        let mut cumulative = 0.0;
        for (index, p) in self.probs.iter().enumerate() {
            cumulative += p;
            if u < cumulative {
                return self.min + index as i64;
            }
        }
        self.min + (self.probs.len() - 1) as i64
    }
}

/// Proposes the next parameter assignment.
///
/// Below the startup budget this is a uniform draw per descriptor. Afterwards
/// each parameter independently splits the history into good/bad by
/// objective, draws `candidates_per_step` samples from the good density, and
/// keeps the candidate maximizing the good/bad density ratio.
pub fn tpe_suggest(
    history: &[Trial],
    space: &SearchSpace,
    config: &CalibrationConfig,
    rng: &mut ChaCha8Rng,
) -> Params {
    if history.len() < config.startup_trials.max(1) {
        return space
            .params
            .iter()
            .map(|d| (d.name.clone(), uniform_sample(&d.kind, rng)))
            .collect();
    }

    // Good = top ⌈γ·n⌉ trials by objective (maximization), stable on ties.
    let mut order: Vec<usize> = (0..history.len()).collect();
    order.sort_by(|a, b| {
        history[*b]
            .objective
            .total_cmp(&history[*a].objective)
            .then(history[*a].trial_index.cmp(&history[*b].trial_index))
    });
    let n_good = ((config.gamma_fraction * history.len() as f64).ceil() as usize)
        .min(config.good_set_cap)
        .clamp(1, history.len());
    let good: Vec<&Trial> = order[..n_good].iter().map(|i| &history[*i]).collect();
    let bad: Vec<&Trial> = order[n_good..].iter().map(|i| &history[*i]).collect();

    // Recency ramp: the newest 25 trials carry full weight, older ones fade
    // linearly, so the densities track the current region of the search.
    let n = history.len();
    let recency = |trial_index: usize| -> f64 {
        let full_from = n.saturating_sub(25);
        if trial_index >= full_from {
            1.0
        } else {
            let span = full_from as f64;
            (1.0 / n as f64).max((trial_index as f64 + 1.0) / span)
        }
    };

    let mut suggestion = Params::new();
    for descriptor in &space.params {
        let weighted = |group: &[&Trial]| -> Vec<(f64, f64)> {
            group
                .iter()
                .filter_map(|t| {
                    t.params
                        .get(&descriptor.name)
                        .map(|v| (v.as_f64(), recency(t.trial_index)))
                })
                .collect()
        };
        let good_values = weighted(&good);
        let bad_values = weighted(&bad);
        let value = match descriptor.kind {
            ParamKind::FloatRange { min, max } => {
                let good_mix = ParzenMixture::fit(&good_values, min, max);
                let bad_mix = ParzenMixture::fit(&bad_values, min, max);
                let mut best = f64::NEG_INFINITY;
                let mut best_x = good_mix.sample(rng);
                for _ in 0..config.candidates_per_step {
                    let x = good_mix.sample(rng);
                    let ratio = good_mix.density(x) / bad_mix.density(x);
                    if ratio > best {
                        best = ratio;
                        best_x = x;
                    }
                }
                ParamValue::Float(best_x)
            }
            ParamKind::IntegerRange { min, max } => {
                let to_ints = |values: &[(f64, f64)]| {
                    values
                        .iter()
                        .map(|(v, w)| (*v as i64, *w))
                        .collect::<Vec<(i64, f64)>>()
                };
                let good_cat = SmoothedCategorical::fit(&to_ints(&good_values), min, max);
                let bad_cat = SmoothedCategorical::fit(&to_ints(&bad_values), min, max);
                let mut best = f64::NEG_INFINITY;
                let mut best_v = good_cat.sample(rng);
                for _ in 0..config.candidates_per_step {
                    let v = good_cat.sample(rng);
                    let ratio = good_cat.prob(v) / bad_cat.prob(v);
                    if ratio > best {
                        best = ratio;
                        best_v = v;
                    }
                }
                ParamValue::Integer(best_v)
            }
        };
        suggestion.insert(descriptor.name.clone(), value);
    }
    suggestion
}

/// Runs the full calibration loop. Results are a pure function of the seed,
/// the pairs, and the registry; `best_objective` is the running maximum of
/// the (complete, replayable) history.
pub fn calibrate(
    config: &CalibrationConfig,
    pairs: &[TrainPair],
    registry: &Registry,
) -> Result<CalibrationResult> {
    config.validate()?;
    if pairs.is_empty() {
        return Err(Error::NoTrainingPairs);
    }
    let space = match config.variant {
        Variant::SfOnly => SearchSpace::sf_only(),
        Variant::Joint => SearchSpace::joint(&registry.model_names()),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut history: Vec<Trial> = Vec::with_capacity(config.trials);
    let mut best_params = Params::new();
    let mut best_objective = f64::NEG_INFINITY;
    for trial_index in 0..config.trials {
        let params = tpe_suggest(&history, &space, config, &mut rng);
        let objective = objective_value(&params, config.variant, pairs, registry, config.objective)?;
        if objective > best_objective {
            best_objective = objective;
            best_params = params.clone();
        }
        history.push(Trial {
            trial_index,
            params,
            objective,
        });
    }
    Ok(CalibrationResult {
        config: config.clone(),
        best_objective,
        best_params,
        history,
    })
}

/// Builds training pairs from datasets' requirement vectors and an oracle
/// ranking per intent.
pub fn train_pair(
    dataset: &crate::data::Dataset,
    intent: Intent,
    oracle: Ranking,
    registry: &Registry,
) -> TrainPair {
    let profile = crate::stress::stress_profile(dataset);
    TrainPair {
        dataset: dataset.name().to_string(),
        row_count: dataset.row_count(),
        requirements: crate::stress::requirement_vector_with_bins(
            &profile,
            &registry.engine.correlation_bins,
        ),
        intent,
        oracle,
    }
}

/// Interprets a calibration result as registry overrides: scale factors (and
/// capabilities, for joint results) applied to a derived copy.
pub fn apply_calibration(registry: &Registry, result: &CalibrationResult) -> Result<Registry> {
    apply_params(registry, &result.best_params, result.config.variant)
}

impl From<&Params> for IntentScaleFactors {
    /// Extracts `alpha.*` entries; absent entries default to 1.
    fn from(params: &Params) -> IntentScaleFactors {
        let mut out = IntentScaleFactors::uniform(1.0);
        for intent in Intent::ALL {
            let mut values = [1.0; 6];
            for (j, dimension) in DIMENSION_NAMES.iter().enumerate() {
                if let Some(v) = params.get(&alpha_param(intent, dimension)) {
                    values[j] = v.as_f64();
                }
            }
            *out.get_mut(intent) = Dims::from_array(values);
        }
        out
    }
}
