use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{BusId, NetworkCase};

/// Bus voltage in polar form: magnitude in pu, angle in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phasor {
    pub magnitude: f64,
    pub angle: f64,
}

impl Phasor {
    pub const FLAT: Phasor = Phasor {
        magnitude: 1.0,
        angle: 0.0,
    };
    pub const DEAD: Phasor = Phasor {
        magnitude: 0.0,
        angle: 0.0,
    };
}

/// An energized connected component and its reference bus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Island {
    /// Bus ids, ascending.
    pub buses: Vec<BusId>,
    pub slack: BusId,
}

/// Consecutive-scan violation counters kept by the relays, indexed like the
/// case's buses and branches.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RelayCounters {
    pub bus_voltage: Vec<u32>,
    pub branch_overload: Vec<u32>,
}

impl RelayCounters {
    pub fn is_idle(&self) -> bool {
        self.bus_voltage.iter().chain(&self.branch_overload).all(|&c| c == 0)
    }
}

/// Dynamic snapshot of the grid. Per-element vectors are indexed by the
/// element's position in the corresponding `NetworkCase` list.
///
/// Cloning is cheap relative to a power-flow solve; the case itself is
/// shared.
#[derive(Debug, Clone)]
pub struct SystemState {
    pub case: Arc<NetworkCase>,
    pub bus_in_service: Vec<bool>,
    pub branch_in_service: Vec<bool>,
    pub gen_in_service: Vec<bool>,
    pub load_in_service: Vec<bool>,
    pub load_scale: Vec<f64>,
    pub voltages: Vec<Phasor>,
    /// Energized islands, ordered by smallest bus id.
    pub islands: Vec<Island>,
    /// Seconds since the start of the experiment.
    pub clock: f64,
    pub islanding_level_applied: usize,
    pub relay: RelayCounters,
}

impl SystemState {
    /// State mirroring the case's own service flags, flat voltages and a
    /// single island list that still has to be computed by the solver layer.
    pub fn pristine(case: Arc<NetworkCase>) -> Self {
        let bus_in_service = vec![true; case.buses.len()];
        let branch_in_service = case.branches.iter().map(|b| b.in_service).collect();
        let gen_in_service = case.generators.iter().map(|g| g.in_service).collect();
        let load_in_service = case.loads.iter().map(|l| l.in_service).collect();
        let load_scale = case.loads.iter().map(|l| l.scale).collect();
        let voltages = vec![Phasor::FLAT; case.buses.len()];
        let relay = RelayCounters {
            bus_voltage: vec![0; case.buses.len()],
            branch_overload: vec![0; case.branches.len()],
        };
        SystemState {
            case,
            bus_in_service,
            branch_in_service,
            gen_in_service,
            load_in_service,
            load_scale,
            voltages,
            islands: Vec::new(),
            clock: 0.0,
            islanding_level_applied: 0,
            relay,
        }
    }

    pub fn same_case(&self, other: &SystemState) -> bool {
        Arc::ptr_eq(&self.case, &other.case) || *self.case == *other.case
    }

    /// Takes a bus and everything attached to it out of service.
    pub fn de_energize_bus(&mut self, pos: usize) {
        let case = Arc::clone(&self.case);
        let id = case.buses[pos].id;
        self.bus_in_service[pos] = false;
        self.voltages[pos] = Phasor::DEAD;
        self.relay.bus_voltage[pos] = 0;
        for (i, br) in case.branches.iter().enumerate() {
            if br.from_bus == id || br.to_bus == id {
                self.branch_in_service[i] = false;
                self.relay.branch_overload[i] = 0;
            }
        }
        for (i, g) in case.generators.iter().enumerate() {
            if g.bus == id {
                self.gen_in_service[i] = false;
            }
        }
        for (i, l) in case.loads.iter().enumerate() {
            if l.bus == id {
                self.load_in_service[i] = false;
            }
        }
    }

    pub fn in_service_buses(&self) -> usize {
        self.bus_in_service.iter().filter(|&&b| b).count()
    }
}
