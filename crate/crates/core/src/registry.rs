//! The model capability registry: per-synthesizer capability vectors,
//! constraints, quality scores, and engine configuration.
//!
//! The registry is a single versioned JSON document. Unknown fields are
//! preserved on load and written back on save, so documents produced by newer
//! tooling survive a round trip.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dims::{CapabilityVector, Intent, ScaleFactors};
use crate::error::{Error, Result};
use crate::stress::{HardProblemConfig, DEFAULT_CORRELATION_BINS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    DifferentialPrivacy,
    DeepGenerative,
    TreeBased,
    Statistical,
}

impl ModelFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelFamily::DifferentialPrivacy => "differential_privacy",
            ModelFamily::DeepGenerative => "deep_generative",
            ModelFamily::TreeBased => "tree_based",
            ModelFamily::Statistical => "statistical",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConstraints {
    pub cpu_only_compatible: bool,
    pub dp_certified: bool,
    pub min_rows: Option<usize>,
    pub max_recommended_rows: Option<usize>,
    pub exclude: bool,
    pub requires_gpu: bool,
}

impl Default for ModelConstraints {
    fn default() -> Self {
        ModelConstraints {
            cpu_only_compatible: true,
            dp_certified: false,
            min_rows: None,
            max_recommended_rows: None,
            exclude: false,
            requires_gpu: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    pub family: ModelFamily,
    pub capabilities: CapabilityVector,
    #[serde(default)]
    pub avg_quality_score: f64,
    #[serde(default)]
    pub constraints: ModelConstraints,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

/// One entry of the ordered tie-break rule list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum TieBreakRule {
    /// Prefer `model` when the dataset has fewer than `row_threshold` rows.
    SmallData { model: String, row_threshold: usize },
    /// Prefer `model` when the caller asked for a speed-optimized pick.
    SpeedIntent { model: String },
}

/// Where hard problems are routed: `model` by default, or
/// `large_dataset_model` once the dataset reaches `large_dataset_rows` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HardProblemRoute {
    pub model: String,
    pub large_dataset_model: Option<String>,
    pub large_dataset_rows: usize,
}

impl Default for HardProblemRoute {
    fn default() -> Self {
        HardProblemRoute {
            model: "GReaT".to_string(),
            large_dataset_model: Some("TabDDPM".to_string()),
            large_dataset_rows: 10_000,
        }
    }
}

pub const DEFAULT_DECAY_CURVE: [f64; 4] = [1.0, 0.7, 0.4, 0.0];
pub const DEFAULT_TIE_THRESHOLD_FRACTION: f64 = 0.05;
pub const DEFAULT_QUALITY_BONUS_FACTOR: f64 = 0.3;
pub const DEFAULT_NON_REQUIRED_BASE_WEIGHT: f64 = 0.1;

fn default_tie_break_rules() -> Vec<TieBreakRule> {
    vec![
        TieBreakRule::SmallData {
            model: "ARF".to_string(),
            row_threshold: 1000,
        },
        TieBreakRule::SpeedIntent {
            model: "CART".to_string(),
        },
    ]
}

/// Scoring-engine configuration stored alongside the models.
///
/// `decay_curve[g]` is the match score for a capability `g` levels below the
/// requirement (`decay_curve[0]` applies when capability meets or exceeds it;
/// gaps of three or more use the last entry).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub decay_curve: [f64; 4],
    pub tie_threshold_fraction: f64,
    pub tie_break_rules: Vec<TieBreakRule>,
    pub hard_problem_route: HardProblemRoute,
    pub quality_bonus_factor: f64,
    pub non_required_base_weight: f64,
    pub hard_problem: HardProblemConfig,
    pub correlation_bins: [f64; 4],
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            decay_curve: DEFAULT_DECAY_CURVE,
            tie_threshold_fraction: DEFAULT_TIE_THRESHOLD_FRACTION,
            tie_break_rules: default_tie_break_rules(),
            hard_problem_route: HardProblemRoute::default(),
            quality_bonus_factor: DEFAULT_QUALITY_BONUS_FACTOR,
            non_required_base_weight: DEFAULT_NON_REQUIRED_BASE_WEIGHT,
            hard_problem: HardProblemConfig::default(),
            correlation_bins: DEFAULT_CORRELATION_BINS,
        }
    }
}

/// Per-intent scale factors, one six-dimensional weight vector per intent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntentScaleFactors {
    pub privacy: ScaleFactors,
    pub fidelity: ScaleFactors,
    pub utility: ScaleFactors,
}

impl IntentScaleFactors {
    pub fn get(&self, intent: Intent) -> &ScaleFactors {
        match intent {
            Intent::Privacy => &self.privacy,
            Intent::Fidelity => &self.fidelity,
            Intent::Utility => &self.utility,
        }
    }

    pub fn get_mut(&mut self, intent: Intent) -> &mut ScaleFactors {
        match intent {
            Intent::Privacy => &mut self.privacy,
            Intent::Fidelity => &mut self.fidelity,
            Intent::Utility => &mut self.utility,
        }
    }

    pub fn uniform(value: f64) -> IntentScaleFactors {
        IntentScaleFactors {
            privacy: ScaleFactors::splat(value),
            fidelity: ScaleFactors::splat(value),
            utility: ScaleFactors::splat(value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Registry {
    #[serde(default = "default_version")]
    pub version: String,
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub engine: EngineConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale_factors: Option<IntentScaleFactors>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

fn default_version() -> String {
    "unversioned".to_string()
}

/// Filters a caller may impose on the eligible pool.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserConstraints {
    pub cpu_only: bool,
    pub strict_dp: bool,
}

impl Registry {
    pub fn from_json_str(text: &str) -> Result<Registry> {
        let registry: Registry = serde_json::from_str(text)?;
        registry.validate()?;
        Ok(registry)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn model(&self, name: &str) -> Option<&ModelSpec> {
        self.models.iter().find(|m| m.name == name)
    }

    pub fn model_names(&self) -> Vec<String> {
        self.models.iter().map(|m| m.name.clone()).collect()
    }

    /// Checks every registry invariant, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        let mut names = BTreeSet::new();
        for model in &self.models {
            if !names.insert(model.name.clone()) {
                return Err(Error::DuplicateModel(model.name.clone()));
            }
            let caps = model.capabilities.to_array();
            for (value, dim) in caps.iter().zip(crate::dims::DIMENSION_NAMES) {
                if *value > 4 {
                    return Err(Error::schema(
                        format!("models[{}].capabilities.{dim}", model.name),
                        format!("capability value {value} outside 0..=4"),
                    ));
                }
            }
            if !(0.0..=1.0).contains(&model.avg_quality_score) {
                return Err(Error::schema(
                    format!("models[{}].avg_quality_score", model.name),
                    format!("{} outside [0, 1]", model.avg_quality_score),
                ));
            }
            if model.constraints.dp_certified && model.capabilities.privacy_dp < 3 {
                return Err(Error::schema(
                    format!("models[{}].constraints.dp_certified", model.name),
                    "dp_certified requires privacy_dp >= 3".to_string(),
                ));
            }
        }

        let curve = &self.engine.decay_curve;
        for (i, score) in curve.iter().enumerate() {
            if !(0.0..=1.0).contains(score) {
                return Err(Error::schema(
                    format!("engine.decay_curve[{i}]"),
                    format!("{score} outside [0, 1]"),
                ));
            }
            if i > 0 && curve[i] > curve[i - 1] {
                return Err(Error::schema(
                    format!("engine.decay_curve[{i}]"),
                    "decay scores must be non-increasing in gap".to_string(),
                ));
            }
        }
        let fraction = self.engine.tie_threshold_fraction;
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::schema(
                "engine.tie_threshold_fraction",
                format!("{fraction} outside (0, 1)"),
            ));
        }
        let bins = &self.engine.correlation_bins;
        if bins.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::schema(
                "engine.correlation_bins",
                "bin edges must be strictly increasing".to_string(),
            ));
        }
        if let Some(sf) = &self.scale_factors {
            for intent in Intent::ALL {
                for (value, dim) in sf.get(intent).to_array().iter().zip(crate::dims::DIMENSION_NAMES) {
                    if !(0.0..=10.0).contains(value) {
                        return Err(Error::schema(
                            format!("scale_factors.{intent}.{dim}"),
                            format!("{value} outside [0, 10]"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Stage-1 hard filters. Removes excluded models, GPU-only models under
    /// `cpu_only`, non-certified models under `strict_dp`, and models whose
    /// row limits the dataset violates. Output preserves registry order; an
    /// empty result is valid here (the engine raises the error).
    pub fn apply_hard_filters(
        &self,
        dataset_rows: usize,
        user: &UserConstraints,
    ) -> Vec<&ModelSpec> {
        self.models
            .iter()
            .filter(|m| !m.constraints.exclude)
            .filter(|m| !user.cpu_only || !m.constraints.requires_gpu)
            .filter(|m| {
                !user.strict_dp
                    || (m.constraints.dp_certified && m.capabilities.privacy_dp >= 3)
            })
            .filter(|m| m.constraints.min_rows.is_none_or(|min| dataset_rows >= min))
            .filter(|m| {
                m.constraints
                    .max_recommended_rows
                    .is_none_or(|max| dataset_rows <= max)
            })
            .collect()
    }
}

/// Loads and validates a registry file.
pub fn load_registry(path: &Path) -> Result<Registry> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Registry::from_json_str(&text)
}

/// The capability registry shipped with the crate (10 models, decay curve,
/// tie-break rules, hard-problem route, and per-intent scale factors).
pub fn builtin_registry() -> Registry {
    Registry::from_json_str(include_str!("../fixtures/registry_v7_fixture.json"))
        .expect("builtin registry fixture is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_registry_json(capability: u8) -> String {
        format!(
            r#"{{
              "version": "test",
              "models": [
                {{
                  "name": "A",
                  "family": "tree_based",
                  "capabilities": {{
                    "skew_handling": {capability},
                    "cardinality_handling": 0,
                    "zipfian_handling": 0,
                    "small_data": 0,
                    "correlation_handling": 0,
                    "privacy_dp": 0
                  }}
                }}
              ]
            }}"#
        )
    }

    #[test]
    fn builtin_fixture_loads_ten_models() {
        let registry = builtin_registry();
        assert_eq!(registry.models.len(), 10);
        assert_eq!(registry.version, "7.0.0");
        assert!(registry.scale_factors.is_some());
        let aim = registry.model("AIM").unwrap();
        assert_eq!(aim.capabilities.to_array(), [3, 0, 1, 2, 3, 4]);
        assert!(aim.constraints.dp_certified);
    }

    #[test]
    fn capability_out_of_range_names_the_field() {
        let err = Registry::from_json_str(&minimal_registry_json(5)).unwrap_err();
        match err {
            Error::Schema { field, .. } => {
                assert_eq!(field, "models[A].capabilities.skew_handling")
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn missing_engine_section_gets_defaults() {
        let registry = Registry::from_json_str(&minimal_registry_json(4)).unwrap();
        assert_eq!(registry.engine.decay_curve, [1.0, 0.7, 0.4, 0.0]);
        assert_eq!(registry.engine.tie_threshold_fraction, 0.05);
        assert_eq!(registry.engine.non_required_base_weight, 0.1);
        assert_eq!(registry.engine.quality_bonus_factor, 0.3);
        assert_eq!(registry.engine.hard_problem.zipf_threshold, 0.80);
    }

    #[test]
    fn duplicate_model_rejected() {
        let json = r#"{
          "models": [
            {"name": "A", "family": "statistical", "capabilities": {
              "skew_handling": 0, "cardinality_handling": 0, "zipfian_handling": 0,
              "small_data": 0, "correlation_handling": 0, "privacy_dp": 0}},
            {"name": "A", "family": "statistical", "capabilities": {
              "skew_handling": 0, "cardinality_handling": 0, "zipfian_handling": 0,
              "small_data": 0, "correlation_handling": 0, "privacy_dp": 0}}
          ]
        }"#;
        assert!(matches!(
            Registry::from_json_str(json),
            Err(Error::DuplicateModel(_))
        ));
    }

    #[test]
    fn dp_certification_requires_privacy_capability() {
        let json = r#"{
          "models": [
            {"name": "A", "family": "differential_privacy",
             "capabilities": {
               "skew_handling": 0, "cardinality_handling": 0, "zipfian_handling": 0,
               "small_data": 0, "correlation_handling": 0, "privacy_dp": 2},
             "constraints": {"dp_certified": true}}
          ]
        }"#;
        assert!(matches!(Registry::from_json_str(json), Err(Error::Schema { .. })));
    }

    #[test]
    fn strict_dp_keeps_only_certified_models() {
        let registry = builtin_registry();
        let pool = registry.apply_hard_filters(
            5000,
            &UserConstraints {
                strict_dp: true,
                ..UserConstraints::default()
            },
        );
        let names: Vec<&str> = pool.iter().map(|m| m.name.as_str()).collect();
        assert_eq!(names, vec!["AIM", "DPCART"]);
        for model in pool {
            assert!(model.constraints.dp_certified);
            assert!(model.capabilities.privacy_dp >= 3);
        }
    }

    #[test]
    fn excluded_models_never_survive_filtering() {
        let mut registry = builtin_registry();
        registry.models[0].constraints.exclude = true;
        let excluded = registry.models[0].name.clone();
        let pool = registry.apply_hard_filters(5000, &UserConstraints::default());
        assert!(pool.iter().all(|m| m.name != excluded));
        assert_eq!(pool.len(), 9);
    }

    #[test]
    fn row_limits_filter_models() {
        let mut registry = builtin_registry();
        registry.models[0].constraints.min_rows = Some(1000);
        registry.models[1].constraints.max_recommended_rows = Some(400);
        let pool = registry.apply_hard_filters(500, &UserConstraints::default());
        assert_eq!(pool.len(), 8);
    }

    #[test]
    fn filtering_is_order_stable_subset() {
        let registry = builtin_registry();
        let pool = registry.apply_hard_filters(5000, &UserConstraints::default());
        let all: Vec<&str> = registry.models.iter().map(|m| m.name.as_str()).collect();
        let mut cursor = 0;
        for model in pool {
            let position = all[cursor..]
                .iter()
                .position(|n| *n == model.name)
                .expect("filter output must be a subset");
            cursor += position + 1;
        }
    }

    #[test]
    fn round_trip_preserves_unknown_fields() {
        let json = r#"{
          "version": "9.9",
          "future_section": {"a": 1},
          "models": [
            {"name": "A", "family": "statistical",
             "capabilities": {
               "skew_handling": 1, "cardinality_handling": 0, "zipfian_handling": 0,
               "small_data": 0, "correlation_handling": 0, "privacy_dp": 0},
             "novel_field": true}
          ]
        }"#;
        let registry = Registry::from_json_str(json).unwrap();
        let round = Registry::from_json_str(&registry.to_json_string().unwrap()).unwrap();
        assert_eq!(registry, round);
        assert_eq!(round.extra["future_section"]["a"], 1);
        assert_eq!(round.models[0].extra["novel_field"], true);
    }

    #[test]
    fn scale_factor_range_validated() {
        let mut registry = builtin_registry();
        registry.scale_factors.as_mut().unwrap().privacy.skew_handling = 11.0;
        assert!(matches!(registry.validate(), Err(Error::Schema { .. })));
    }
}
