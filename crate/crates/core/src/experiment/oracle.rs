use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::case::LossMetrics;
use crate::protection::{PolicyKind, ProtectionError, RasPolicy};
use crate::switching::{GridModel, Observation, Transition};

/// Outcome stored for one policy-sequence prefix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleEntry {
    /// Operational load, MVA.
    pub load: f64,
    pub saved: bool,
    pub losses: LossMetrics,
}

/// A plant whose outcomes are looked up rather than simulated. Sequences
/// are keyed by their comma-joined labels ("LS,I"); the empty key is the
/// post-contingency root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedOracle {
    pub total_load: f64,
    pub dispatch_interval: f64,
    pub tree: BTreeMap<String, OracleEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OracleState {
    /// Labels of the policies applied so far.
    pub applied: Vec<&'static str>,
    /// Dispatches elapsed.
    pub dispatches: u32,
}

fn entry(load: f64, saved: bool, buses: usize, generators: usize, loads: usize, lines: usize) -> OracleEntry {
    OracleEntry {
        load,
        saved,
        losses: LossMetrics {
            buses,
            generators,
            loads,
            lines,
        },
    }
}

impl ScriptedOracle {
    /// Reference outcomes of every forced sequence for the 19-20 / 2-25
    /// contingency on the 39-bus system.
    pub fn ieee39_n2() -> Self {
        let rows = [
            ("", entry(6501.0, false, 0, 0, 0, 0)),
            ("I", entry(4759.0, false, 7, 2, 4, 13)),
            ("LS", entry(5224.0, false, 3, 2, 1, 6)),
            ("I,I", entry(3848.0, false, 14, 3, 8, 21)),
            ("I,LS", entry(4283.0, true, 7, 2, 4, 13)),
            ("LS,LS", entry(2922.0, true, 21, 5, 9, 27)),
            ("LS,I", entry(4749.0, true, 5, 2, 3, 9)),
            ("I,I,LS", entry(3463.0, true, 14, 3, 8, 21)),
        ];
        ScriptedOracle {
            total_load: 6501.0,
            dispatch_interval: 5.0,
            tree: rows.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    pub fn root(&self) -> OracleState {
        OracleState {
            applied: Vec::new(),
            dispatches: 0,
        }
    }

    /// Every stored key's prefixes are stored too, and the root exists.
    pub fn is_prefix_closed(&self) -> bool {
        self.tree.contains_key("")
            && self.tree.keys().all(|k| match k.rfind(',') {
                Some(i) => self.tree.contains_key(&k[..i]),
                None => k.is_empty() || self.tree.contains_key(""),
            })
    }

    fn lookup(&self, applied: &[&str]) -> Option<&OracleEntry> {
        self.tree.get(&applied.join(","))
    }
}

impl GridModel for ScriptedOracle {
    type State = OracleState;

    fn total_load(&self) -> f64 {
        self.total_load
    }

    fn observe(&self, state: &OracleState) -> Observation {
        let e = self.lookup(&state.applied).expect("oracle states are always stored");
        Observation {
            clock: state.dispatches as f64 * self.dispatch_interval,
            load: e.load,
            saved: e.saved,
            settled: e.saved,
            losses: e.losses,
        }
    }

    fn advance(&self, state: &OracleState, policy: &RasPolicy) -> Result<Transition<OracleState>, ProtectionError> {
        let mut next = state.clone();
        next.dispatches += 1;
        if policy.kind != PolicyKind::NoAction {
            next.applied.push(policy.label());
            if self.lookup(&next.applied).is_none() {
                let levels = |s: &OracleState| s.applied.iter().filter(|l| **l == "I").count();
                return Err(ProtectionError::PolicyUnavailable {
                    applied: levels(state),
                    available: levels(state),
                });
            }
        }
        Ok(Transition {
            state: next,
            events: Vec::new(),
        })
    }
}
