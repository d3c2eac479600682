use std::sync::Arc;

use crate::case::topology::components;
use crate::case::{BusId, ElementKind, Island, SystemState, TripCause, TripEvent};

/// Connected components of in-service buses joined by in-service branches,
/// each sorted ascending and ordered by smallest bus id.
pub fn find_islands(state: &SystemState) -> Vec<Vec<BusId>> {
    let case = &state.case;
    let edges = case
        .branches
        .iter()
        .enumerate()
        .filter(|(i, _)| state.branch_in_service[*i])
        .map(|(_, br)| {
            (
                case.bus_position(br.from_bus).expect("validated"),
                case.bus_position(br.to_bus).expect("validated"),
            )
        });
    let mut comps: Vec<Vec<BusId>> = components(&state.bus_in_service, edges)
        .into_iter()
        .map(|c| c.into_iter().map(|i| case.buses[i].id).collect())
        .collect();
    // positions and ids need not share an order
    for c in &mut comps {
        c.sort_unstable();
    }
    comps.sort_by_key(|c| c[0]);
    comps
}

/// Recomputes islands, keeps or picks a slack per island and de-energizes
/// islands with no in-service generator.
pub fn assign_island_slacks(state: &SystemState) -> SystemState {
    let mut next = state.clone();
    reconcile_islands(&mut next);
    next
}

/// In-place form of [`assign_island_slacks`] that also reports every element
/// taken out of service by de-energization.
pub fn reconcile_islands(state: &mut SystemState) -> Vec<TripEvent> {
    let case = Arc::clone(&state.case);
    let case_slack = case.buses[case.slack_position()].id;
    let mut events = Vec::new();
    let mut islands = Vec::new();

    for comp in find_islands(state) {
        let gens: Vec<usize> = case
            .generators
            .iter()
            .enumerate()
            .filter(|(i, g)| state.gen_in_service[*i] && comp.binary_search(&g.bus).is_ok())
            .map(|(i, _)| i)
            .collect();

        if gens.is_empty() {
            events.extend(de_energize(state, &comp, TripCause::IslandCollapse));
            continue;
        }

        let hosts_case_slack = gens.iter().any(|&g| case.generators[g].bus == case_slack);
        let slack = if hosts_case_slack {
            case_slack
        } else {
            // first generator wins ties
            let mut best = gens[0];
            for &g in &gens[1..] {
                if case.generators[g].p_max > case.generators[best].p_max {
                    best = g;
                }
            }
            case.generators[best].bus
        };
        islands.push(Island { buses: comp, slack });
    }
    state.islands = islands;
    events
}

/// Takes every bus of `buses` out of service together with all attached
/// elements, returning one event per element that was in service.
pub fn de_energize(state: &mut SystemState, buses: &[BusId], cause: TripCause) -> Vec<TripEvent> {
    let case = Arc::clone(&state.case);
    let clock = state.clock;
    let mut events = Vec::new();
    let member = |id: BusId| buses.binary_search(&id).is_ok();
    debug_assert!(buses.windows(2).all(|w| w[0] < w[1]));

    for (i, bus) in case.buses.iter().enumerate() {
        if state.bus_in_service[i] && member(bus.id) {
            events.push(TripEvent::new(clock, ElementKind::Bus, bus.id, cause));
        }
    }
    for (i, br) in case.branches.iter().enumerate() {
        if state.branch_in_service[i] && (member(br.from_bus) || member(br.to_bus)) {
            events.push(TripEvent::new(clock, ElementKind::Branch, br.id, cause));
        }
    }
    for (i, g) in case.generators.iter().enumerate() {
        if state.gen_in_service[i] && member(g.bus) {
            events.push(TripEvent::new(clock, ElementKind::Generator, g.id, cause));
        }
    }
    for (i, l) in case.loads.iter().enumerate() {
        if state.load_in_service[i] && member(l.bus) {
            events.push(TripEvent::new(clock, ElementKind::Load, l.id, cause));
        }
    }
    for &id in buses {
        if let Some(pos) = case.bus_position(id) {
            state.de_energize_bus(pos);
        }
    }
    events
}
