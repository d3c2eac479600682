//! Quasi-steady-state network solution: island detection, slack
//! assignment, a polar Newton-Raphson power flow and branch loading.

mod islands;
mod loading;
mod newton;

pub use islands::{assign_island_slacks, de_energize, find_islands, reconcile_islands};
pub use loading::branch_loading;
pub use newton::solve_powerflow;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::case::{BusId, Phasor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Largest acceptable |ΔP| or |ΔQ|, pu.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Start from 1.0 pu / 0 rad (generator buses at their setpoints)
    /// instead of the voltages stored in the state.
    pub flat_start: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-6,
            max_iterations: 20,
            flat_start: true,
        }
    }
}

impl SolverOptions {
    pub fn warm(self) -> Self {
        SolverOptions {
            flat_start: false,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IslandStatus {
    Converged,
    /// Iteration limit reached or the iterate left the physical domain.
    Diverged,
    SingularJacobian,
    /// The island converged electrically but its demand plus losses exceed
    /// the summed `p_max` of its in-service generators.
    CapacityExceeded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IslandSolution {
    pub buses: Vec<BusId>,
    pub slack: BusId,
    pub status: IslandStatus,
    pub iterations: usize,
    /// Max |ΔP|, |ΔQ| of the last iterate, pu. Infinite for a singular
    /// Jacobian.
    pub mismatch: f64,
    /// Total generator output needed by the island, MW.
    pub generation_mw: f64,
    /// Summed `p_max` of in-service generators in the island, MW.
    pub capacity_mw: f64,
}

impl IslandSolution {
    pub fn converged(&self) -> bool {
        self.status == IslandStatus::Converged
    }
}

/// Complex power entering a branch at each end, MVA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchFlow {
    pub from: Complex64,
    pub to: Complex64,
}

impl BranchFlow {
    pub fn max_apparent(&self) -> f64 {
        self.from.norm().max(self.to.norm())
    }

    /// Series and shunt losses, MVA.
    pub fn losses(&self) -> Complex64 {
        self.from + self.to
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowSolution {
    /// True iff every energized island converged.
    pub converged: bool,
    /// Indexed by bus position; de-energized buses read zero.
    pub voltages: Vec<Phasor>,
    /// Indexed by branch position; `None` for branches outside every island.
    pub branch_flows: Vec<Option<BranchFlow>>,
    /// Output of each generator (MW + j MVAr), `None` when out of service.
    pub generation: Vec<Option<Complex64>>,
    /// Worst mismatch over all islands, pu.
    pub mismatch: f64,
    /// Most iterations used by any island.
    pub iterations: usize,
    pub islands: Vec<IslandSolution>,
}

impl PowerFlowSolution {
    pub fn island_of(&self, bus: BusId) -> Option<&IslandSolution> {
        self.islands.iter().find(|i| i.buses.binary_search(&bus).is_ok())
    }
}
