//! The decision layer: rewards, rollouts, Monte-Carlo value estimates and
//! the switching rule that picks the best base policy at each dispatch.

mod config;
pub mod mdp;
mod model;
mod native;
mod reward;
mod rollout;
mod value;

use thiserror::Error;

use crate::protection::ProtectionError;

pub use config::SwitchingConfig;
pub use model::{GridModel, Observation, Transition};
pub use native::{NativeModel, NativeState};
pub use reward::{reward, RewardMode, RewardRecord};
pub use rollout::{rollout, RolloutStep, RolloutTrace, StepStatus};
pub use value::{
    check_switching_bound, estimate_value, rollout_seed, select_index, switch, SwitchDecision,
    ValueEstimate,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SwitchingError {
    #[error("invalid switching configuration: {0}")]
    InvalidConfig(String),
    #[error("policy set is empty")]
    EmptyPolicySet,
    #[error("sequence of {len} policies exceeds the horizon of {horizon} dispatches")]
    SequenceTooLong { len: usize, horizon: usize },
    #[error(transparent)]
    Protection(#[from] ProtectionError),
}

/// Non-finite floats as JSON null; null reads back as `-inf`.
pub(crate) mod float_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}
