use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{reward, GridModel, RewardRecord, SwitchingConfig, SwitchingError};
use crate::case::{LossMetrics, TripEvent};
use crate::protection::{ProtectionError, RasPolicy};

/// What happened to the policy slot of one dispatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    Applied,
    /// The system was already acceptable with nothing pending.
    NotNeeded,
    /// The policy could not be applied (islanding exhausted).
    Unavailable,
    /// The sequence ran out; nothing was applied.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutStep {
    pub dispatch: usize,
    pub policy: String,
    pub status: StepStatus,
    /// Absent for an unavailable step.
    pub record: Option<RewardRecord>,
    pub losses: Option<LossMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutTrace {
    pub steps: Vec<RolloutStep>,
    pub events: Vec<TripEvent>,
    pub feasible: bool,
    /// Σ β^t R_t; `-inf` (serialized as null) when infeasible.
    #[serde(with = "super::float_or_null")]
    pub value: f64,
    /// Reward of the last step that ran.
    pub final_reward: Option<f64>,
}

/// Plays `sequence` forward from `start` for the full horizon.
///
/// Once the system is acceptable with nothing pending, remaining slots are
/// not applied. After the sequence runs out the plant is left alone. A
/// policy that cannot be applied ends the rollout as infeasible.
pub fn rollout<M: GridModel>(
    model: &M,
    start: &M::State,
    sequence: &[RasPolicy],
    cfg: &SwitchingConfig,
    seed: u64,
) -> Result<RolloutTrace, SwitchingError> {
    cfg.validate()?;
    if sequence.len() > cfg.horizon_dispatches {
        return Err(SwitchingError::SequenceTooLong {
            len: sequence.len(),
            horizon: cfg.horizon_dispatches,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = model.perturb(start, cfg.load_noise_sigma, &mut rng);
    let total = model.total_load();
    let idle = RasPolicy::no_action();

    let mut steps = Vec::with_capacity(cfg.horizon_dispatches);
    let mut events = Vec::new();
    let mut value = 0.0;
    let mut discount = 1.0;
    let mut feasible = true;
    let mut prev_load = model.observe(&state).load;

    for t in 0..cfg.horizon_dispatches {
        let settled = model.observe(&state).settled;
        let (policy, status) = match sequence.get(t) {
            Some(_) if settled => (&idle, StepStatus::NotNeeded),
            Some(p) => (p, StepStatus::Applied),
            None => (&idle, StepStatus::Exhausted),
        };
        let label = sequence.get(t).map_or(idle.label(), |p| p.label()).to_string();
        let transition = match model.advance(&state, policy) {
            Ok(tr) => tr,
            Err(ProtectionError::PolicyUnavailable { .. }) => {
                steps.push(RolloutStep {
                    dispatch: t,
                    policy: label,
                    status: StepStatus::Unavailable,
                    record: None,
                    losses: None,
                });
                feasible = false;
                break;
            }
            Err(e) => return Err(e.into()),
        };
        state = transition.state;
        events.extend(transition.events);
        let obs = model.observe(&state);
        let r = reward(obs.load, prev_load, obs.saved, total, cfg.reward_mode)?;
        value += discount * r;
        discount *= cfg.beta;
        prev_load = obs.load;
        steps.push(RolloutStep {
            dispatch: t,
            policy: label,
            status,
            record: Some(RewardRecord {
                clock: obs.clock,
                operational_load: obs.load,
                saved: obs.saved,
                reward: r,
            }),
            losses: Some(obs.losses),
        });
    }

    let final_reward = steps.iter().rev().find_map(|s| s.record.map(|r| r.reward));
    Ok(RolloutTrace {
        steps,
        events,
        feasible,
        value: if feasible { value } else { f64::NEG_INFINITY },
        final_reward,
    })
}
