//! The six capability dimensions and the user intents.
//!
//! Requirement vectors, capability vectors, and scale factors all share the
//! same six-dimensional layout; [`Dims`] is the common carrier. The canonical
//! dimension order is fixed by [`DIMENSION_NAMES`] and used everywhere an
//! array form is exchanged (scoring, calibration parameter names, JSON).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical order of the six capability dimensions.
pub const DIMENSION_NAMES: [&str; 6] = [
    "skew_handling",
    "cardinality_handling",
    "zipfian_handling",
    "small_data",
    "correlation_handling",
    "privacy_dp",
];

/// A value per capability dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dims<T> {
    pub skew_handling: T,
    pub cardinality_handling: T,
    pub zipfian_handling: T,
    pub small_data: T,
    pub correlation_handling: T,
    pub privacy_dp: T,
}

impl<T: Copy> Dims<T> {
    pub fn from_array(values: [T; 6]) -> Self {
        Dims {
            skew_handling: values[0],
            cardinality_handling: values[1],
            zipfian_handling: values[2],
            small_data: values[3],
            correlation_handling: values[4],
            privacy_dp: values[5],
        }
    }

    pub fn splat(value: T) -> Self {
        Dims::from_array([value; 6])
    }

    /// Values in [`DIMENSION_NAMES`] order.
    pub fn to_array(self) -> [T; 6] {
        [
            self.skew_handling,
            self.cardinality_handling,
            self.zipfian_handling,
            self.small_data,
            self.correlation_handling,
            self.privacy_dp,
        ]
    }

    pub fn get(self, index: usize) -> T {
        self.to_array()[index]
    }

    pub fn set(&mut self, index: usize, value: T) {
        let mut values = self.to_array();
        values[index] = value;
        *self = Dims::from_array(values);
    }
}

/// Quantized requirement levels derived from a stress profile, each in `{0..4}`.
pub type RequirementVector = Dims<u8>;

/// A model's capability levels, each in `{0..4}`.
pub type CapabilityVector = Dims<u8>;

/// Intent-conditioned multiplicative weights, each in `[0, 10]`.
pub type ScaleFactors = Dims<f64>;

/// The user's optimization objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intent {
    Privacy,
    Fidelity,
    Utility,
}

impl Intent {
    pub const ALL: [Intent; 3] = [Intent::Privacy, Intent::Fidelity, Intent::Utility];

    pub fn as_str(self) -> &'static str {
        match self {
            Intent::Privacy => "privacy",
            Intent::Fidelity => "fidelity",
            Intent::Utility => "utility",
        }
    }

    pub fn parse(s: &str) -> Result<Intent> {
        match s {
            "privacy" => Ok(Intent::Privacy),
            "fidelity" => Ok(Intent::Fidelity),
            "utility" => Ok(Intent::Utility),
            other => Err(Error::UnknownIntent(other.to_string())),
        }
    }
}

impl std::fmt::Display for Intent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
