//! Static network description, the JSON case format, and the dynamic
//! state snapshot shared by the solver, the relays and the controller.

mod events;
mod fixture;
mod metrics;
mod parse;
mod state;
pub mod topology;

pub use events::{ElementKind, ElementRef, TripCause, TripEvent};
pub use fixture::{ieee39, IEEE39_JSON};
pub use metrics::{loss_metrics, total_operational_load, LossMetrics};
pub use parse::{parse_case, to_json, CaseError};
pub use state::{Island, Phasor, RelayCounters, SystemState};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Multiplier applied to each branch rating to obtain the N-1 secure limit.
pub const SECURE_RATING_MARGIN: f64 = 1.1;

pub type BusId = u32;
pub type BranchId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusKind {
    Slack,
    Generation,
    Load,
}

fn default_v_min() -> f64 {
    0.9
}

fn default_v_max() -> f64 {
    1.12
}

fn default_true() -> bool {
    true
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: BusId,
    /// kV
    pub base_kv: f64,
    pub bus_kind: BusKind,
    #[serde(default = "default_v_min")]
    pub v_min: f64,
    #[serde(default = "default_v_max")]
    pub v_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub id: BranchId,
    pub from_bus: BusId,
    pub to_bus: BusId,
    /// Series resistance, pu.
    pub r: f64,
    /// Series reactance, pu. Never zero.
    pub x: f64,
    /// Total line charging susceptance, pu.
    pub b_shunt: f64,
    /// Thermal rating, MVA.
    pub rating: f64,
    /// Always `SECURE_RATING_MARGIN * rating`. Optional in case files; a
    /// value that disagrees with the rating is rejected.
    #[serde(default)]
    pub secure_rating: f64,
    #[serde(default = "default_true")]
    pub in_service: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub id: u32,
    pub bus: BusId,
    /// MW
    pub p_set: f64,
    /// MVAr
    pub q_min: f64,
    /// MVAr
    pub q_max: f64,
    /// pu
    pub v_setpoint: f64,
    /// MW
    pub p_max: f64,
    #[serde(default = "default_true")]
    pub in_service: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Load {
    pub id: u32,
    pub bus: BusId,
    /// MW
    pub p_demand: f64,
    /// MVAr
    pub q_demand: f64,
    /// Shed multiplier in [0, 1].
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default = "default_true")]
    pub in_service: bool,
}

impl Load {
    /// Apparent demand at the given scale, MVA.
    pub fn apparent(&self, scale: f64) -> f64 {
        scale * self.p_demand.hypot(self.q_demand)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IslandLevel {
    pub partitions: Vec<Vec<BusId>>,
    pub tie_branches: Vec<BranchId>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IslandingScheme {
    pub levels: Vec<IslandLevel>,
}

/// Maximum number of islanding levels a scheme may declare.
pub const MAX_ISLANDING_LEVELS: usize = 2;

/// Immutable grid description. Build one with [`parse_case`] or
/// [`NetworkCase::validated`]; both check every structural invariant.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkCase {
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
    pub loads: Vec<Load>,
    #[serde(default)]
    pub islanding_scheme: IslandingScheme,
    #[serde(skip)]
    bus_index: HashMap<BusId, usize>,
    #[serde(skip)]
    branch_index: HashMap<BranchId, usize>,
}

impl PartialEq for NetworkCase {
    fn eq(&self, other: &Self) -> bool {
        self.base_mva == other.base_mva
            && self.buses == other.buses
            && self.branches == other.branches
            && self.generators == other.generators
            && self.loads == other.loads
            && self.islanding_scheme == other.islanding_scheme
    }
}

impl NetworkCase {
    /// Assembles a case from parts and checks all invariants.
    pub fn validated(
        base_mva: f64,
        buses: Vec<Bus>,
        branches: Vec<Branch>,
        generators: Vec<Generator>,
        loads: Vec<Load>,
        islanding_scheme: IslandingScheme,
    ) -> Result<Self, CaseError> {
        let mut case = NetworkCase {
            base_mva,
            buses,
            branches,
            generators,
            loads,
            islanding_scheme,
            bus_index: HashMap::new(),
            branch_index: HashMap::new(),
        };
        parse::check_invariants(&mut case)?;
        Ok(case)
    }

    /// Position of a bus in `buses`.
    pub fn bus_position(&self, id: BusId) -> Option<usize> {
        self.bus_index.get(&id).copied()
    }

    /// Position of a branch in `branches`.
    pub fn branch_position(&self, id: BranchId) -> Option<usize> {
        self.branch_index.get(&id).copied()
    }

    /// Index of the case-wide reference bus.
    pub fn slack_position(&self) -> usize {
        self.buses
            .iter()
            .position(|b| b.bus_kind == BusKind::Slack)
            .expect("validated case has a slack bus")
    }

    /// Nominal apparent demand of every load in the case, MVA.
    pub fn total_load_mva(&self) -> f64 {
        self.loads.iter().map(|l| l.apparent(l.scale)).sum()
    }

    pub fn total_load_mw(&self) -> f64 {
        self.loads.iter().map(|l| l.scale * l.p_demand).sum()
    }

    /// Branch ids opened cumulatively by islanding levels `1..=level`.
    pub fn cumulative_tie_branches(&self, level: usize) -> Vec<BranchId> {
        let mut ties: Vec<BranchId> = self
            .islanding_scheme
            .levels
            .iter()
            .take(level)
            .flat_map(|l| l.tie_branches.iter().copied())
            .collect();
        ties.sort_unstable();
        ties.dedup();
        ties
    }
}
