use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::case::{ElementKind, SystemState, TripCause, TripEvent};
use crate::powerflow::{branch_loading, de_energize, reconcile_islands, PowerFlowSolution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RelayOptions {
    /// Relay evaluation cadence, s.
    pub relay_step: f64,
    /// Consecutive out-of-range scans before a bus is stripped.
    pub voltage_trip_delay_steps: u32,
    /// Consecutive overloaded scans before a branch opens.
    pub overload_trip_delay_steps: u32,
}

impl Default for RelayOptions {
    fn default() -> Self {
        RelayOptions {
            relay_step: 0.1,
            voltage_trip_delay_steps: 3,
            overload_trip_delay_steps: 3,
        }
    }
}

/// One relay evaluation against a solution of `state`.
///
/// Order: collapsed islands are de-energized first, then bus voltage
/// relays, then branch overload relays. Islands are recomputed whenever
/// anything tripped.
pub fn relay_scan(
    state: &SystemState,
    solution: &PowerFlowSolution,
    opts: &RelayOptions,
) -> (SystemState, Vec<TripEvent>) {
    let case = Arc::clone(&state.case);
    let mut next = state.clone();
    let mut events = Vec::new();
    let clock = state.clock;

    for island in solution.islands.iter().filter(|i| !i.converged()) {
        events.extend(de_energize(&mut next, &island.buses, TripCause::IslandCollapse));
    }

    for (pos, bus) in case.buses.iter().enumerate() {
        if !next.bus_in_service[pos] {
            continue;
        }
        let v = solution.voltages[pos].magnitude;
        let cause = if v < bus.v_min {
            TripCause::Undervoltage
        } else if v > bus.v_max {
            TripCause::Overvoltage
        } else {
            next.relay.bus_voltage[pos] = 0;
            continue;
        };
        next.relay.bus_voltage[pos] += 1;
        if next.relay.bus_voltage[pos] < opts.voltage_trip_delay_steps {
            continue;
        }
        next.relay.bus_voltage[pos] = 0;
        for (i, load) in case.loads.iter().enumerate() {
            if load.bus == bus.id && next.load_in_service[i] {
                next.load_in_service[i] = false;
                events.push(TripEvent::new(clock, ElementKind::Load, load.id, cause));
            }
        }
        for (i, gen) in case.generators.iter().enumerate() {
            if gen.bus == bus.id && next.gen_in_service[i] {
                next.gen_in_service[i] = false;
                events.push(TripEvent::new(clock, ElementKind::Generator, gen.id, cause));
            }
        }
    }

    let loading = branch_loading(solution, &case);
    for (i, br) in case.branches.iter().enumerate() {
        if !next.branch_in_service[i] {
            next.relay.branch_overload[i] = 0;
            continue;
        }
        match loading[i] {
            Some(ratio) if ratio > 1.0 => {
                next.relay.branch_overload[i] += 1;
                if next.relay.branch_overload[i] >= opts.overload_trip_delay_steps {
                    next.relay.branch_overload[i] = 0;
                    next.branch_in_service[i] = false;
                    events.push(TripEvent::new(clock, ElementKind::Branch, br.id, TripCause::Overload));
                }
            }
            _ => next.relay.branch_overload[i] = 0,
        }
    }

    if !events.is_empty() {
        events.extend(reconcile_islands(&mut next));
    }
    (next, events)
}

/// The B flag: some island is energized, every energized island converged,
/// and every in-service bus voltage lies in the closed band
/// `[v_min, v_max]`.
pub fn is_stable_and_acceptable(state: &SystemState, solution: &PowerFlowSolution) -> bool {
    if state.islands.is_empty() || !solution.converged {
        return false;
    }
    state
        .case
        .buses
        .iter()
        .enumerate()
        .filter(|(pos, _)| state.bus_in_service[*pos])
        .all(|(pos, bus)| {
            let v = solution.voltages[pos].magnitude;
            bus.v_min <= v && v <= bus.v_max
        })
}

/// Contingency detection: some island failed to solve, or some in-service
/// bus sits on or outside the open band `(v_min, v_max)`.
pub fn outside_operating_range(state: &SystemState, solution: &PowerFlowSolution) -> bool {
    if !solution.converged {
        return true;
    }
    state
        .case
        .buses
        .iter()
        .enumerate()
        .filter(|(pos, _)| state.bus_in_service[*pos])
        .any(|(pos, bus)| {
            let v = solution.voltages[pos].magnitude;
            !(bus.v_min < v && v < bus.v_max)
        })
}

/// Anything that would make the next relay scans act: active counters, an
/// overloaded branch, or an unacceptable solution.
pub fn has_pending_violations(state: &SystemState, solution: &PowerFlowSolution) -> bool {
    if !state.relay.is_idle() || !is_stable_and_acceptable(state, solution) {
        return true;
    }
    branch_loading(solution, &state.case)
        .iter()
        .zip(&state.branch_in_service)
        .any(|(r, &on)| on && r.is_some_and(|r| r > 1.0))
}
