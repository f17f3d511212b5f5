//! Shared report documents emitted by the CLI and the RPC server.

use serde::{Deserialize, Serialize};

use crate::data::{meta_features, Dataset, MetaFeatureVector};
use crate::dims::RequirementVector;
use crate::registry::EngineConfig;
use crate::stress::{self, StressProfile};

/// The profiling document: stress statistics, flags, the derived requirement
/// vector, and the meta-features, keyed by the dataset's content hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub dataset: String,
    /// SHA-256 of the source file, when profiled from disk.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_id: Option<String>,
    pub row_count: usize,
    pub column_count: usize,
    pub profile: StressProfile,
    pub requirements: RequirementVector,
    pub hard_problem: bool,
    pub meta_features: MetaFeatureVector,
}

impl ProfileReport {
    pub fn build(dataset: &Dataset, config: &EngineConfig, cache_id: Option<String>) -> Self {
        let profile = stress::stress_profile(dataset);
        ProfileReport {
            dataset: dataset.name().to_string(),
            cache_id,
            row_count: dataset.row_count(),
            column_count: dataset.column_count(),
            requirements: stress::requirement_vector_with_bins(
                &profile,
                &config.correlation_bins,
            ),
            hard_problem: stress::detect_hard_problem(&profile, &config.hard_problem),
            meta_features: meta_features(dataset),
            profile,
        }
    }
}
