use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ContingencySpec, ExperimentError};
use crate::case::{LossMetrics, TripEvent};
use crate::protection::RasPolicy;
use crate::switching::{
    reward, rollout, switch, GridModel, RewardRecord, RolloutStep, StepStatus, SwitchingConfig,
    ValueEstimate,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchRecord {
    pub dispatch: usize,
    /// Decision instant, s.
    pub clock: f64,
    pub policy: RasPolicy,
    pub status: StepStatus,
    /// Empty when no decision was needed.
    pub estimates: Vec<ValueEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
    /// Outcome at the end of the interval.
    pub record: RewardRecord,
    pub losses: LossMetrics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalOutcome {
    pub saved: bool,
    pub load: f64,
    pub cumulative_value: f64,
    pub final_reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub contingency: ContingencySpec,
    pub detected: bool,
    pub config: SwitchingConfig,
    pub seed: u64,
    pub policy_set: Vec<RasPolicy>,
    pub events: Vec<TripEvent>,
    pub dispatches: Vec<DispatchRecord>,
    #[serde(rename = "final")]
    pub final_outcome: FinalOutcome,
}

impl SimulationTrace {
    /// Labels of the policies actually applied, in order.
    pub fn chosen_sequence(&self) -> Vec<&'static str> {
        self.dispatches
            .iter()
            .filter(|d| d.status == StepStatus::Applied)
            .map(|d| d.policy.label())
            .collect()
    }
}

/// Runs the dispatch loop from a post-contingency state.
///
/// At each dispatch the switching rule picks a policy, which is applied and
/// the plant is run to the next dispatch. Once the system is acceptable
/// with nothing pending no further decisions are made; the remaining
/// dispatches are still simulated, unaided, so that the cumulative value
/// always spans the full horizon.
pub fn run_experiment<M: GridModel>(
    model: &M,
    start: &M::State,
    contingency: ContingencySpec,
    detected: bool,
    initial_events: Vec<TripEvent>,
    policy_set: &[RasPolicy],
    cfg: &SwitchingConfig,
    seed: u64,
) -> Result<SimulationTrace, ExperimentError> {
    cfg.validate()?;
    if policy_set.is_empty() {
        return Err(ExperimentError::Usage("policy set is empty".into()));
    }
    let total = model.total_load();
    let mut state = start.clone();
    let mut events = initial_events;
    let mut dispatches = Vec::with_capacity(cfg.horizon_dispatches);
    let mut cumulative = 0.0;
    let mut discount = 1.0;
    let mut done = false;

    for d in 0..cfg.horizon_dispatches {
        let before = model.observe(&state);
        done = done || before.settled;
        let (policy, status, estimates, diagnostic) = if done {
            (RasPolicy::no_action(), StepStatus::NotNeeded, Vec::new(), None)
        } else {
            let decision = switch(model, &state, policy_set, cfg, seed, d)?;
            let status = if decision.index.is_some() {
                StepStatus::Applied
            } else {
                StepStatus::Exhausted
            };
            (decision.policy, status, decision.estimates, decision.diagnostic)
        };
        let transition = model
            .advance(&state, &policy)
            .map_err(|e| ExperimentError::Switching(e.into()))?;
        state = transition.state;
        events.extend(transition.events);
        let obs = model.observe(&state);
        let r = reward(obs.load, before.load, obs.saved, total, cfg.reward_mode)?;
        cumulative += discount * r;
        discount *= cfg.beta;
        dispatches.push(DispatchRecord {
            dispatch: d,
            clock: before.clock,
            policy,
            status,
            estimates,
            diagnostic,
            record: RewardRecord {
                clock: obs.clock,
                operational_load: obs.load,
                saved: obs.saved,
                reward: r,
            },
            losses: obs.losses,
        });
    }

    let last = model.observe(&state);
    Ok(SimulationTrace {
        contingency,
        detected,
        config: *cfg,
        seed,
        policy_set: policy_set.to_vec(),
        events,
        final_outcome: FinalOutcome {
            saved: last.saved,
            load: last.load,
            cumulative_value: cumulative,
            final_reward: dispatches.last().map_or(0.0, |d| d.record.reward),
        },
        dispatches,
    })
}

/// One forced policy sequence of the enumeration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerationRow {
    pub sequence: Vec<String>,
    pub steps: Vec<RolloutStep>,
    pub feasible: bool,
    #[serde(with = "crate::switching::float_or_null")]
    pub value: f64,
    pub final_reward: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerationTable {
    pub contingency: ContingencySpec,
    pub detected: bool,
    pub config: SwitchingConfig,
    pub seed: u64,
    pub policy_set: Vec<RasPolicy>,
    pub rows: Vec<EnumerationRow>,
}

impl EnumerationTable {
    /// Row with the largest value, lowest index on ties.
    pub fn best_row(&self) -> Option<&EnumerationRow> {
        let values: Vec<f64> = self.rows.iter().map(|r| r.value).collect();
        crate::switching::select_index(&values).map(|i| &self.rows[i])
    }
}

/// Forces every sequence of `horizon_dispatches` labels drawn from the
/// policy set, in lexicographic order of set position. Slots after the
/// system is acceptable are marked not needed; an unavailable policy ends
/// its row.
pub fn enumerate_policy_tree<M: GridModel>(
    model: &M,
    start: &M::State,
    contingency: ContingencySpec,
    detected: bool,
    policy_set: &[RasPolicy],
    cfg: &SwitchingConfig,
    seed: u64,
) -> Result<EnumerationTable, ExperimentError> {
    cfg.validate()?;
    if policy_set.is_empty() {
        return Err(ExperimentError::Usage("policy set is empty".into()));
    }
    let h = cfg.horizon_dispatches;
    let n = policy_set.len();
    let count = n
        .checked_pow(h as u32)
        .filter(|&c| c <= 1 << 16)
        .ok_or_else(|| ExperimentError::Usage(format!("{n}^{h} sequences is too many to enumerate")))?;

    let rows: Vec<EnumerationRow> = (0..count)
        .into_par_iter()
        .map(|code| {
            let mut digits = vec![0; h];
            let mut c = code;
            for slot in digits.iter_mut().rev() {
                *slot = c % n;
                c /= n;
            }
            let sequence: Vec<RasPolicy> = digits.iter().map(|&i| policy_set[i].clone()).collect();
            let trace = rollout(model, start, &sequence, cfg, seed)?;
            Ok(EnumerationRow {
                sequence: sequence.iter().map(|p| p.label().to_string()).collect(),
                steps: trace.steps,
                feasible: trace.feasible,
                value: trace.value,
                final_reward: trace.final_reward,
            })
        })
        .collect::<Result<_, ExperimentError>>()?;

    Ok(EnumerationTable {
        contingency,
        detected,
        config: *cfg,
        seed,
        policy_set: policy_set.to_vec(),
        rows,
    })
}
