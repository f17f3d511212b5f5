//! The rule-based recommendation engine.
//!
//! Pipeline stages: hard filters → empty-pool check → stress profile →
//! hard-problem check → requirement derivation → per-model scoring → ranking
//! → tie-break → output. When intent-conditioned scale factors are active,
//! the hard-problem route and the heuristic tie-break rules are both bypassed
//! so the weighted scoring alone decides (the calibrator depends on this to
//! explore the full scoring space).
//!
//! Per dimension `j`, a model contributes `m_j · w_j · α_j`, where `m_j` is
//! the decay-curve match score against the requirement, `w_j` is 1.0 for
//! required dimensions and a small base weight (default 0.1) otherwise, and
//! `α_j` is the intent's scale factor (1.0 when inactive). Non-required
//! dimensions (requirement 0) use `capability/4` as the match score so models
//! still differentiate on raw strength; this rule applies whether or not
//! scale factors are active, keeping bare and scaled runs comparable.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::dims::{Dims, Intent, RequirementVector, ScaleFactors, DIMENSION_NAMES};
use crate::error::{Error, Result};
use crate::registry::{
    EngineConfig, IntentScaleFactors, ModelSpec, Registry, TieBreakRule, UserConstraints,
    DEFAULT_DECAY_CURVE,
};
use crate::stress::{self, StressProfile};

const CONFIDENCE_EPSILON: f64 = 1e-9;

/// Component switches for ablation runs. Both on in production.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationFlags {
    /// Off: every requirement is treated as 0 (focus-only scoring).
    pub use_stress_profiling: bool,
    /// Off: scale factors are forced to all-ones (stress-only scoring).
    pub use_focus_scaling: bool,
}

impl Default for AblationFlags {
    fn default() -> Self {
        AblationFlags {
            use_stress_profiling: true,
            use_focus_scaling: true,
        }
    }
}

impl AblationFlags {
    pub const FULL: AblationFlags = AblationFlags {
        use_stress_profiling: true,
        use_focus_scaling: true,
    };
    pub const STRESS_ONLY: AblationFlags = AblationFlags {
        use_stress_profiling: true,
        use_focus_scaling: false,
    };
    pub const FOCUS_ONLY: AblationFlags = AblationFlags {
        use_stress_profiling: false,
        use_focus_scaling: true,
    };
    pub const BARE: AblationFlags = AblationFlags {
        use_stress_profiling: false,
        use_focus_scaling: false,
    };
}

/// Match score for a capability `gap = requirement − capability`, using the
/// given decay curve. Gap 0 or negative takes full credit.
fn decay_match(capability: u8, requirement: u8, curve: &[f64; 4]) -> f64 {
    if capability >= requirement {
        curve[0]
    } else {
        let gap = (requirement - capability) as usize;
        curve[gap.min(3)]
    }
}

/// Graded credit for a capability against a requirement: 1.0 when it meets
/// or exceeds it, 0.7 one level below, 0.4 two levels below, 0.0 otherwise.
pub fn match_score(capability: u8, requirement: u8) -> Result<f64> {
    match_score_with_curve(capability, requirement, &DEFAULT_DECAY_CURVE)
}

pub fn match_score_with_curve(capability: u8, requirement: u8, curve: &[f64; 4]) -> Result<f64> {
    if capability > 4 {
        return Err(Error::InvalidArgument(format!(
            "capability {capability} outside 0..=4"
        )));
    }
    if requirement > 4 {
        return Err(Error::InvalidArgument(format!(
            "requirement {requirement} outside 0..=4"
        )));
    }
    Ok(decay_match(capability, requirement, curve))
}

/// One dimension's weighted contribution `m · w · α`.
///
/// Required dimensions (`requirement > 0`) use the decay-curve match with
/// full weight; non-required dimensions use `capability/4` with the base
/// weight from the config. Pass `alpha = 1.0` when scale factors are
/// inactive.
pub fn dimension_contribution(
    capability: u8,
    requirement: u8,
    alpha: f64,
    config: &EngineConfig,
) -> f64 {
    debug_assert!(capability <= 4 && requirement <= 4);
    let (m, w) = if requirement > 0 {
        (decay_match(capability, requirement, &config.decay_curve), 1.0)
    } else {
        (capability as f64 / 4.0, config.non_required_base_weight)
    };
    m * w * alpha
}

/// Scores one model: the six weighted dimension contributions plus the
/// empirical quality bonus (`avg_quality_score × quality_bonus_factor`,
/// added unscaled after the weighted sum).
pub fn model_score(
    model: &ModelSpec,
    requirements: &RequirementVector,
    alphas: Option<&ScaleFactors>,
    flags: &AblationFlags,
    config: &EngineConfig,
) -> (f64, Dims<f64>) {
    let caps = model.capabilities.to_array();
    let reqs = requirements.to_array();
    let alpha_values = match (flags.use_focus_scaling, alphas) {
        (true, Some(a)) => a.to_array(),
        _ => [1.0; 6],
    };
    let mut contributions = [0.0; 6];
    let mut total = 0.0;
    for j in 0..6 {
        let requirement = if flags.use_stress_profiling { reqs[j] } else { 0 };
        let contribution = dimension_contribution(caps[j], requirement, alpha_values[j], config);
        contributions[j] = contribution;
        total += contribution;
    }
    total += model.avg_quality_score * config.quality_bonus_factor;
    (total, Dims::from_array(contributions))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedModel {
    pub name: String,
    pub total_score: f64,
    pub contributions: Dims<f64>,
}

/// Scores a filtered pool and sorts it by descending score; exact score ties
/// fall back to lexicographic model-name order.
pub fn score_pool(
    pool: &[&ModelSpec],
    requirements: &RequirementVector,
    alphas: Option<&ScaleFactors>,
    flags: &AblationFlags,
    config: &EngineConfig,
) -> Vec<RankedModel> {
    let mut ranked: Vec<RankedModel> = pool
        .iter()
        .map(|model| {
            let (total_score, contributions) =
                model_score(model, requirements, alphas, flags, config);
            RankedModel {
                name: model.name.clone(),
                total_score,
                contributions,
            }
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.total_score
            .total_cmp(&a.total_score)
            .then_with(|| a.name.cmp(&b.name))
    });
    ranked
}

/// Spread-based confidence: `(s₁ − s₂) / max(s₁, ε)` clamped to `[0, 1]`;
/// a single-model pool is fully confident.
pub fn confidence(scores: &[f64]) -> f64 {
    match scores {
        [] => 0.0,
        [_] => 1.0,
        [first, second, ..] => ((first - second) / first.max(CONFIDENCE_EPSILON)).clamp(0.0, 1.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TieBreakDecision {
    pub rule: String,
    pub winner: String,
}

/// Applies the ordered tie-break rules to the top two candidates. The caller
/// has already established that the scores are within the tie window.
pub fn tie_break(
    top_two: [&RankedModel; 2],
    dataset_rows: usize,
    prefer_speed: bool,
    config: &EngineConfig,
) -> Option<TieBreakDecision> {
    let names = [top_two[0].name.as_str(), top_two[1].name.as_str()];
    for rule in &config.tie_break_rules {
        match rule {
            TieBreakRule::SmallData {
                model,
                row_threshold,
            } => {
                if dataset_rows < *row_threshold && names.contains(&model.as_str()) {
                    return Some(TieBreakDecision {
                        rule: "small_data".to_string(),
                        winner: model.clone(),
                    });
                }
            }
            TieBreakRule::SpeedIntent { model } => {
                if prefer_speed && names.contains(&model.as_str()) {
                    return Some(TieBreakDecision {
                        rule: "speed_intent".to_string(),
                        winner: model.clone(),
                    });
                }
            }
        }
    }
    None
}

/// One node of the decision flowchart, in execution order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageDecision {
    pub stage: u8,
    pub node: String,
    pub decision: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredModel {
    pub name: String,
    pub reason: String,
}

/// Machine-readable account of every pipeline decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reasoning {
    pub stages: Vec<StageDecision>,
    pub profile: StressProfile,
    /// The requirement vector used for scoring (all zeros when stress
    /// profiling is ablated away).
    pub requirements: RequirementVector,
    pub scale_factors_active: bool,
    pub hard_problem: bool,
    pub routed_to: Option<String>,
    pub tie_break: Option<TieBreakDecision>,
    pub filtered_out: Vec<FilteredModel>,
    /// Required dimensions the primary meets (capability ≥ requirement).
    pub matched_dimensions: Vec<String>,
    /// Required dimensions the primary falls short on.
    pub missed_dimensions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub dataset: String,
    pub intent: Option<Intent>,
    pub primary: String,
    pub confidence: f64,
    /// Full ranking, best first.
    pub ranked: Vec<RankedModel>,
    /// How many alternatives the caller asked to list.
    pub top_n: usize,
    pub reasoning: Reasoning,
}

impl Recommendation {
    /// The ranking truncated to the requested list length.
    pub fn top(&self) -> &[RankedModel] {
        &self.ranked[..self.top_n.min(self.ranked.len())]
    }

    pub fn ranking_names(&self) -> Vec<String> {
        self.ranked.iter().map(|m| m.name.clone()).collect()
    }

    /// A copy with the ranked list cut down to `top_n`, for presentation.
    pub fn clipped(&self) -> Recommendation {
        let mut out = self.clone();
        out.ranked.truncate(self.top_n.max(1));
        out
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RecommendRequest<'a> {
    pub intent: Option<Intent>,
    pub constraints: UserConstraints,
    /// Optional speed-preferring tag; feeds tie-break rule 2 only.
    pub prefer_speed: bool,
    pub flags: AblationFlags,
    pub top_n: usize,
    /// Overrides the registry's scale factors when present.
    pub scale_factor_override: Option<&'a IntentScaleFactors>,
}

impl<'a> RecommendRequest<'a> {
    pub fn new(intent: Option<Intent>) -> Self {
        RecommendRequest {
            intent,
            constraints: UserConstraints::default(),
            prefer_speed: false,
            flags: AblationFlags::default(),
            top_n: 3,
            scale_factor_override: None,
        }
    }
}

fn filter_reasons(registry: &Registry, rows: usize, user: &UserConstraints) -> Vec<FilteredModel> {
    let mut out = Vec::new();
    for m in &registry.models {
        let reason = if m.constraints.exclude {
            Some("excluded by registry flag")
        } else if user.cpu_only && m.constraints.requires_gpu {
            Some("requires a GPU")
        } else if user.strict_dp && !(m.constraints.dp_certified && m.capabilities.privacy_dp >= 3)
        {
            Some("not DP-certified with privacy_dp >= 3")
        } else if m.constraints.min_rows.is_some_and(|min| rows < min) {
            Some("dataset below min_rows")
        } else if m
            .constraints
            .max_recommended_rows
            .is_some_and(|max| rows > max)
        {
            Some("dataset above max_recommended_rows")
        } else {
            None
        };
        if let Some(reason) = reason {
            out.push(FilteredModel {
                name: m.name.clone(),
                reason: reason.to_string(),
            });
        }
    }
    out
}

/// Runs the full recommendation pipeline over a dataset.
pub fn recommend(
    dataset: &Dataset,
    registry: &Registry,
    request: &RecommendRequest,
) -> Result<Recommendation> {
    let profile = stress::stress_profile(dataset);
    recommend_for_profile(dataset.name(), &profile, registry, request)
}

/// Same pipeline, starting from a precomputed stress profile (used by the
/// cache, the RPC server, and the calibrator).
pub fn recommend_for_profile(
    dataset_name: &str,
    profile: &StressProfile,
    registry: &Registry,
    request: &RecommendRequest,
) -> Result<Recommendation> {
    if request.top_n == 0 {
        return Err(Error::InvalidArgument("top_n must be at least 1".to_string()));
    }
    let config = &registry.engine;
    let rows = profile.row_count;
    let mut stages = Vec::new();

    // Stage 1: hard filters.
    let pool = registry.apply_hard_filters(rows, &request.constraints);
    let filtered_out = filter_reasons(registry, rows, &request.constraints);
    stages.push(StageDecision {
        stage: 1,
        node: "hard_filters".to_string(),
        decision: format!(
            "{} of {} models eligible",
            pool.len(),
            registry.models.len()
        ),
    });
    stages.push(StageDecision {
        stage: 1,
        node: "empty_pool_check".to_string(),
        decision: if pool.is_empty() { "empty" } else { "non-empty" }.to_string(),
    });
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }

    // Stage 2: stress profile and hard-problem check.
    stages.push(StageDecision {
        stage: 2,
        node: "stress_profile".to_string(),
        decision: format!(
            "skew={:.3} cardinality={} zipf={:.3} rows={} correlation={:.3}",
            profile.max_abs_skewness,
            profile.max_cardinality,
            profile.max_zipf_ratio,
            profile.row_count,
            profile.correlation_density
        ),
    });

    let sf_set = request
        .scale_factor_override
        .or(registry.scale_factors.as_ref());
    let alphas = match request.intent {
        Some(intent) => sf_set.map(|s| *s.get(intent)),
        None => None,
    };
    let scale_factors_active = request.flags.use_focus_scaling && alphas.is_some();

    let hard_problem = stress::detect_hard_problem(profile, &config.hard_problem);
    let mut routed_to: Option<String> = None;
    let hard_decision = if !hard_problem {
        "not a hard problem".to_string()
    } else if scale_factors_active {
        "hard problem, but routing bypassed (scale factors active)".to_string()
    } else {
        let route = &config.hard_problem_route;
        let target = match (&route.large_dataset_model, rows >= route.large_dataset_rows) {
            (Some(large), true) => large.as_str(),
            _ => route.model.as_str(),
        };
        if pool.iter().any(|m| m.name == target) {
            routed_to = Some(target.to_string());
            format!("hard problem: routed to {target}")
        } else {
            format!("hard problem, but route target {target} not in pool; normal scoring")
        }
    };
    stages.push(StageDecision {
        stage: 2,
        node: "hard_problem_check".to_string(),
        decision: hard_decision,
    });

    // Stage 3: requirement derivation.
    let requirements = if request.flags.use_stress_profiling {
        stress::requirement_vector_with_bins(profile, &config.correlation_bins)
    } else {
        RequirementVector::splat(0)
    };
    stages.push(StageDecision {
        stage: 3,
        node: "requirements".to_string(),
        decision: if request.flags.use_stress_profiling {
            format!("requirement vector {:?}", requirements.to_array())
        } else {
            "stress profiling ablated: requirements zeroed".to_string()
        },
    });

    // Stage 4: scoring.
    let ranked = score_pool(&pool, &requirements, alphas.as_ref(), &request.flags, config);
    stages.push(StageDecision {
        stage: 4,
        node: "scoring".to_string(),
        decision: if scale_factors_active {
            format!("scored {} models with {} scale factors", ranked.len(), request.intent.map(|i| i.as_str()).unwrap_or("?"))
        } else {
            format!("scored {} models with unit scale factors", ranked.len())
        },
    });

    // Stage 5: ranking (plus the route reorder when one fired).
    let mut ranked = ranked;
    if let Some(target) = &routed_to {
        let position = ranked
            .iter()
            .position(|m| &m.name == target)
            .expect("route target verified in pool");
        let routed = ranked.remove(position);
        ranked.insert(0, routed);
        stages.push(StageDecision {
            stage: 5,
            node: "ranking".to_string(),
            decision: format!("{target} first by hard-problem route, remainder by score"),
        });
    } else {
        stages.push(StageDecision {
            stage: 5,
            node: "ranking".to_string(),
            decision: "sorted by descending score".to_string(),
        });
    }

    // Stage 6: tie-break between the top two.
    let mut applied_tie_break = None;
    if routed_to.is_none() && ranked.len() >= 2 {
        let (s1, s2) = (ranked[0].total_score, ranked[1].total_score);
        let within_window = (s1 - s2).abs() <= config.tie_threshold_fraction * s1;
        if !within_window {
            stages.push(StageDecision {
                stage: 6,
                node: "tie_break".to_string(),
                decision: format!(
                    "not invoked: top-2 gap exceeds {:.0}% window",
                    config.tie_threshold_fraction * 100.0
                ),
            });
        } else if scale_factors_active {
            stages.push(StageDecision {
                stage: 6,
                node: "tie_break".to_string(),
                decision: "bypassed (scale factors active)".to_string(),
            });
        } else {
            let decision = tie_break(
                [&ranked[0], &ranked[1]],
                rows,
                request.prefer_speed,
                config,
            );
            match decision {
                Some(tb) => {
                    if ranked[1].name == tb.winner {
                        ranked.swap(0, 1);
                    }
                    stages.push(StageDecision {
                        stage: 6,
                        node: "tie_break".to_string(),
                        decision: format!("rule {} prefers {}", tb.rule, tb.winner),
                    });
                    applied_tie_break = Some(tb);
                }
                None => stages.push(StageDecision {
                    stage: 6,
                    node: "tie_break".to_string(),
                    decision: "within window, no rule fired; score order kept".to_string(),
                }),
            }
        }
    } else {
        stages.push(StageDecision {
            stage: 6,
            node: "tie_break".to_string(),
            decision: if routed_to.is_some() {
                "skipped (hard-problem route)".to_string()
            } else {
                "skipped (single-model pool)".to_string()
            },
        });
    }

    // Stage 7: output.
    let scores: Vec<f64> = ranked.iter().map(|m| m.total_score).collect();
    let conf = confidence(&scores);
    let primary = ranked[0].name.clone();
    stages.push(StageDecision {
        stage: 7,
        node: "output".to_string(),
        decision: format!("primary {primary} with confidence {conf:.3}"),
    });

    let primary_caps = registry
        .model(&primary)
        .map(|m| m.capabilities.to_array())
        .unwrap_or([0; 6]);
    let mut matched_dimensions = Vec::new();
    let mut missed_dimensions = Vec::new();
    for (j, name) in DIMENSION_NAMES.iter().enumerate() {
        let requirement = requirements.to_array()[j];
        if requirement == 0 {
            continue;
        }
        if primary_caps[j] >= requirement {
            matched_dimensions.push(name.to_string());
        } else {
            missed_dimensions.push(name.to_string());
        }
    }

    Ok(Recommendation {
        dataset: dataset_name.to_string(),
        intent: request.intent,
        primary,
        confidence: conf,
        ranked,
        top_n: request.top_n,
        reasoning: Reasoning {
            stages,
            profile: *profile,
            requirements,
            scale_factors_active,
            hard_problem,
            routed_to,
            tie_break: applied_tie_break,
            filtered_out,
            matched_dimensions,
            missed_dimensions,
        },
    })
}
