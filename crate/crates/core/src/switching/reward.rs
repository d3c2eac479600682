use serde::{Deserialize, Serialize};

use super::SwitchingError;

/// Which reading of the reward formula to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    /// `L_t / (2 L_total) + B/2`; the arithmetic behind every tabulated reward.
    #[default]
    #[serde(alias = "table")]
    TableCompatible,
    /// `(L_t - L_{t-1}) / (2 L_total) + B/2`, read literally.
    #[serde(alias = "eq4")]
    Eq4Literal,
}

/// Reward of one dispatch.
pub fn reward(l_t: f64, l_prev: f64, saved: bool, l_total: f64, mode: RewardMode) -> Result<f64, SwitchingError> {
    if !(l_total > 0.0) {
        return Err(SwitchingError::InvalidConfig(format!(
            "total load must be positive, got {l_total}"
        )));
    }
    let b = if saved { 0.5 } else { 0.0 };
    let numerator = match mode {
        RewardMode::TableCompatible => l_t,
        RewardMode::Eq4Literal => l_t - l_prev,
    };
    Ok(numerator / (2.0 * l_total) + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardRecord {
    pub clock: f64,
    /// L_t, MVA.
    pub operational_load: f64,
    /// B.
    pub saved: bool,
    pub reward: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const TOTAL: f64 = 6501.0;

    #[test]
    fn table_mode_matches_tabulated_rewards() {
        let r = |l, b| reward(l, 0.0, b, TOTAL, RewardMode::TableCompatible).unwrap();
        assert_abs_diff_eq!(r(5224.0, false), 0.401, epsilon = 1e-3);
        assert_abs_diff_eq!(r(4749.0, true), 0.865, epsilon = 1e-3);
        assert_abs_diff_eq!(r(3848.0, false), 0.296, epsilon = 1e-3);
    }

    #[test]
    fn literal_mode_zero_delta() {
        let r = reward(4000.0, 4000.0, true, TOTAL, RewardMode::Eq4Literal).unwrap();
        assert_eq!(r, 0.5);
    }

    #[test]
    fn literal_mode_goes_negative_on_loss() {
        let r = reward(3000.0, 5000.0, false, TOTAL, RewardMode::Eq4Literal).unwrap();
        assert!(r < 0.0);
    }

    #[test]
    fn rejects_non_positive_total() {
        assert!(reward(1.0, 1.0, true, 0.0, RewardMode::TableCompatible).is_err());
        assert!(reward(1.0, 1.0, true, f64::NAN, RewardMode::TableCompatible).is_err());
    }
}
