//! Experiment harness: contingency injection, the dispatch loop, full
//! policy-tree enumeration, the scripted reference oracle and result files.

mod config;
mod oracle;
mod output;
mod run;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case::{CaseError, ElementKind, NetworkCase, TripCause, TripEvent};
use crate::powerflow::reconcile_islands;
use crate::protection::outside_operating_range;
use crate::switching::{NativeModel, NativeState, SwitchingError};

pub use config::{load_case, parse_branch_pairs, parse_policies, Backend, RunConfig, DEFAULT_CONTINGENCY};
pub use oracle::{OracleEntry, OracleState, ScriptedOracle};
pub use output::{emit_results, summary_csv, SummaryRow};
pub use run::{
    enumerate_policy_tree, run_experiment, DispatchRecord, EnumerationRow, EnumerationTable,
    FinalOutcome, SimulationTrace,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Switching(#[from] SwitchingError),
    #[error("base case does not solve: {0}")]
    BaseCaseUnsolvable(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ExperimentError {
    /// 1 for bad input or configuration, 2 for failures while simulating
    /// or writing results.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Case(_) | ExperimentError::Usage(_) => 1,
            ExperimentError::Switching(SwitchingError::InvalidConfig(_))
            | ExperimentError::Switching(SwitchingError::EmptyPolicySet)
            | ExperimentError::Switching(SwitchingError::SequenceTooLong { .. }) => 1,
            ExperimentError::Switching(SwitchingError::Protection(_)) => 2,
            ExperimentError::BaseCaseUnsolvable(_) | ExperimentError::Io { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContingencyKind {
    Explicit,
    RandomN2,
}

/// Detection fires when some in-service bus leaves the open voltage band or
/// some island fails to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionRule {
    #[default]
    VoltageRange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencySpec {
    pub kind: ContingencyKind,
    /// Explicit: the branches to open. Random: filled in once drawn.
    #[serde(default)]
    pub branch_ids: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub detection: DetectionRule,
}

impl ContingencySpec {
    pub fn explicit(branch_ids: Vec<u32>) -> Self {
        ContingencySpec {
            kind: ContingencyKind::Explicit,
            branch_ids,
            seed: None,
            detection: DetectionRule::VoltageRange,
        }
    }

    pub fn random_n2(seed: u64) -> Self {
        ContingencySpec {
            kind: ContingencyKind::RandomN2,
            branch_ids: Vec::new(),
            seed: Some(seed),
            detection: DetectionRule::VoltageRange,
        }
    }

    /// Branch ids to open in `case`, drawing them for a random spec.
    pub fn resolve(&self, case: &NetworkCase, in_service: &[bool]) -> Result<Vec<u32>, ExperimentError> {
        match self.kind {
            ContingencyKind::Explicit => {
                if self.branch_ids.is_empty() {
                    return Err(ExperimentError::Usage("explicit contingency lists no branches".into()));
                }
                for &id in &self.branch_ids {
                    let pos = case
                        .branch_position(id)
                        .ok_or_else(|| ExperimentError::Usage(format!("no branch with id {id}")))?;
                    if !in_service[pos] {
                        return Err(ExperimentError::Usage(format!("branch {id} is already out of service")));
                    }
                }
                Ok(self.branch_ids.clone())
            }
            ContingencyKind::RandomN2 => {
                let seed = self
                    .seed
                    .ok_or_else(|| ExperimentError::Usage("random N-2 contingency needs a seed".into()))?;
                let live: Vec<u32> = case
                    .branches
                    .iter()
                    .zip(in_service)
                    .filter(|(_, &on)| on)
                    .map(|(b, _)| b.id)
                    .collect();
                if live.len() < 2 {
                    return Err(ExperimentError::Usage("fewer than two branches in service".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut ids: Vec<u32> = sample(&mut rng, live.len(), 2).iter().map(|i| live[i]).collect();
                ids.sort_unstable();
                Ok(ids)
            }
        }
    }
}

/// Opens the contingency branches at the current clock and re-solves.
/// Returns the new state, the trip events, the resolved spec and whether
/// the detection rule fired.
pub fn inject_contingency(
    model: &NativeModel,
    state: &NativeState,
    spec: &ContingencySpec,
) -> Result<(NativeState, Vec<TripEvent>, ContingencySpec, bool), ExperimentError> {
    let case = &state.system.case;
    let ids = spec.resolve(case, &state.system.branch_in_service)?;
    let mut system = state.system.clone();
    let mut events = Vec::new();
    for &id in &ids {
        let pos = case.branch_position(id).expect("resolved branch id");
        system.branch_in_service[pos] = false;
        events.push(TripEvent::new(system.clock, ElementKind::Branch, id, TripCause::Contingency));
    }
    events.extend(reconcile_islands(&mut system));
    let next = model.settle(system);
    let detected = outside_operating_range(&next.system, &next.solution);
    let resolved = ContingencySpec {
        branch_ids: ids,
        ..spec.clone()
    };
    Ok((next, events, resolved, detected))
}
