use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{reward, GridModel, SwitchingConfig, SwitchingError};
use crate::protection::{ProtectionError, RasPolicy};

/// Monte-Carlo value of starting with one policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueEstimate {
    pub policy: RasPolicy,
    /// Sample mean of Σ β^t R_t along the best continuation; `-inf`
    /// (serialized as null) when the policy cannot be applied.
    #[serde(with = "super::float_or_null")]
    pub value: f64,
    pub rollouts: usize,
    /// Sample standard deviation of the per-rollout values.
    pub spread: f64,
    /// Mean reward at the last dispatch of the best continuation.
    #[serde(with = "super::float_or_null")]
    pub final_reward: f64,
}

impl ValueEstimate {
    pub fn is_feasible(&self) -> bool {
        self.value > f64::NEG_INFINITY
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchDecision {
    /// Position of the chosen policy in the set, if any was feasible.
    pub index: Option<usize>,
    pub policy: RasPolicy,
    pub estimates: Vec<ValueEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

/// Best value reachable from a state and the final reward on that path.
#[derive(Debug, Clone, Copy)]
struct Plan {
    value: f64,
    final_reward: f64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one rollout, a function of its coordinates only.
pub fn rollout_seed(seed: u64, dispatch: usize, policy: usize, rollout: usize) -> u64 {
    [dispatch as u64, policy as u64, rollout as u64]
        .iter()
        .fold(splitmix64(seed), |acc, &x| splitmix64(acc ^ splitmix64(x)))
}

/// Index of the largest finite-or-positive value, lowest index on ties.
/// `None` when every value is `-inf` or NaN.
pub fn select_index(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() || v == f64::NEG_INFINITY {
            continue;
        }
        if best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}

/// Closed bound: `switched >= max_i estimate_i - 2 epsilon`.
pub fn check_switching_bound(estimates: &[ValueEstimate], switched_value: f64, epsilon: f64) -> bool {
    let best = estimates
        .iter()
        .map(|e| e.value)
        .fold(f64::NEG_INFINITY, f64::max);
    switched_value >= best - 2.0 * epsilon
}

/// Applies `policy` then the best continuation for `steps - 1` further
/// dispatches. `None` when `policy` cannot be applied here.
fn plan_from<M: GridModel>(
    model: &M,
    state: &M::State,
    policy: &RasPolicy,
    steps: usize,
    set: &[RasPolicy],
    cfg: &SwitchingConfig,
) -> Result<Option<Plan>, SwitchingError> {
    let prev_load = model.observe(state).load;
    let transition = match model.advance(state, policy) {
        Ok(t) => t,
        Err(ProtectionError::PolicyUnavailable { .. }) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let obs = model.observe(&transition.state);
    let r = reward(obs.load, prev_load, obs.saved, model.total_load(), cfg.reward_mode)?;
    if steps <= 1 {
        return Ok(Some(Plan { value: r, final_reward: r }));
    }
    let rest = best_plan(model, &transition.state, steps - 1, set, cfg)?;
    Ok(Some(Plan {
        value: r + cfg.beta * rest.value,
        final_reward: rest.final_reward,
    }))
}

/// Greedy recursive switching over `steps` dispatches. A settled state is
/// left alone; if nothing in the set applies, the plant runs on unaided.
fn best_plan<M: GridModel>(
    model: &M,
    state: &M::State,
    steps: usize,
    set: &[RasPolicy],
    cfg: &SwitchingConfig,
) -> Result<Plan, SwitchingError> {
    let idle = RasPolicy::no_action();
    if !model.observe(state).settled {
        let mut best: Option<Plan> = None;
        for policy in set {
            if let Some(p) = plan_from(model, state, policy, steps, set, cfg)? {
                if best.as_ref().is_none_or(|b| p.value > b.value) {
                    best = Some(p);
                }
            }
        }
        if let Some(b) = best {
            return Ok(b);
        }
    }
    Ok(plan_from(model, state, &idle, steps, set, cfg)?.expect("no-action is always applicable"))
}

/// Value of starting with `set[index]` at dispatch `dispatch`, looking ahead
/// to the end of the horizon.
pub fn estimate_value<M: GridModel>(
    model: &M,
    start: &M::State,
    set: &[RasPolicy],
    index: usize,
    cfg: &SwitchingConfig,
    seed: u64,
    dispatch: usize,
) -> Result<ValueEstimate, SwitchingError> {
    cfg.validate()?;
    let policy = set.get(index).ok_or(SwitchingError::EmptyPolicySet)?;
    let steps = cfg.horizon_dispatches.saturating_sub(dispatch).max(1);
    let n = cfg.rollouts_per_policy;

    let plans: Vec<Option<Plan>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(rollout_seed(seed, dispatch, index, k));
            let perturbed = model.perturb(start, cfg.load_noise_sigma, &mut rng);
            plan_from(model, &perturbed, policy, steps, set, cfg)
        })
        .collect::<Result<_, _>>()?;

    if plans.iter().any(Option::is_none) {
        return Ok(ValueEstimate {
            policy: policy.clone(),
            value: f64::NEG_INFINITY,
            rollouts: n,
            spread: 0.0,
            final_reward: f64::NEG_INFINITY,
        });
    }
    let plans: Vec<Plan> = plans.into_iter().flatten().collect();
    let mean = |f: fn(&Plan) -> f64| plans.iter().map(f).sum::<f64>() / n as f64;
    let value = mean(|p| p.value);
    let spread = if n > 1 {
        let ss: f64 = plans.iter().map(|p| (p.value - value).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(ValueEstimate {
        policy: policy.clone(),
        value,
        rollouts: n,
        spread,
        final_reward: mean(|p| p.final_reward),
    })
}

/// Estimates every policy and picks the best, lowest index on ties.
pub fn switch<M: GridModel>(
    model: &M,
    state: &M::State,
    set: &[RasPolicy],
    cfg: &SwitchingConfig,
    seed: u64,
    dispatch: usize,
) -> Result<SwitchDecision, SwitchingError> {
    if set.is_empty() {
        return Err(SwitchingError::EmptyPolicySet);
    }
    let estimates: Vec<ValueEstimate> = (0..set.len())
        .into_par_iter()
        .map(|i| estimate_value(model, state, set, i, cfg, seed, dispatch))
        .collect::<Result<_, _>>()?;
    let values: Vec<f64> = estimates.iter().map(|e| e.value).collect();
    Ok(match select_index(&values) {
        Some(i) => SwitchDecision {
            index: Some(i),
            policy: set[i].clone(),
            estimates,
            diagnostic: None,
        },
        None => SwitchDecision {
            index: None,
            policy: RasPolicy::no_action(),
            estimates,
            diagnostic: Some("no policy in the set can be applied; holding".into()),
        },
    })
}
