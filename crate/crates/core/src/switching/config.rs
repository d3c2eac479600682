use serde::{Deserialize, Serialize};

use super::{RewardMode, SwitchingError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwitchingConfig {
    /// Time between dispatch decisions, s.
    pub dispatch_interval: f64,
    /// Number of dispatches looked ahead and simulated.
    pub horizon_dispatches: usize,
    /// Discount factor β.
    pub beta: f64,
    pub rollouts_per_policy: usize,
    /// Declared bound on value-estimate error.
    pub epsilon: f64,
    pub reward_mode: RewardMode,
    /// Relative standard deviation of per-rollout load noise.
    pub load_noise_sigma: f64,
}

impl Default for SwitchingConfig {
    fn default() -> Self {
        SwitchingConfig {
            dispatch_interval: 5.0,
            horizon_dispatches: 3,
            beta: 1.0,
            rollouts_per_policy: 1,
            epsilon: 0.0,
            reward_mode: RewardMode::TableCompatible,
            load_noise_sigma: 0.0,
        }
    }
}

impl SwitchingConfig {
    /// β = 0 is accepted so that a value can be cut down to its first
    /// reward.
    pub fn validate(&self) -> Result<(), SwitchingError> {
        let fail = |m: String| Err(SwitchingError::InvalidConfig(m));
        if !(self.dispatch_interval > 0.0) || !self.dispatch_interval.is_finite() {
            return fail(format!("dispatch_interval must be positive, got {}", self.dispatch_interval));
        }
        if self.horizon_dispatches == 0 {
            return fail("horizon_dispatches must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return fail(format!("beta must lie in [0, 1], got {}", self.beta));
        }
        if self.rollouts_per_policy == 0 {
            return fail("rollouts_per_policy must be at least 1".into());
        }
        if !(self.epsilon >= 0.0) {
            return fail(format!("epsilon must be non-negative, got {}", self.epsilon));
        }
        if !(self.load_noise_sigma >= 0.0) || !self.load_noise_sigma.is_finite() {
            return fail(format!("load_noise_sigma must be non-negative, got {}", self.load_noise_sigma));
        }
        Ok(())
    }
}
