//! Relays that turn electrical violations into trips, and the two base
//! remedial action schemes: uniform load shedding and staged islanding.

mod policy;
mod relay;

pub use policy::{PolicyKind, RasPolicy};
pub use relay::{
    has_pending_violations, is_stable_and_acceptable, outside_operating_range, relay_scan,
    RelayOptions,
};

pub use crate::case::{ElementKind, ElementRef, TripCause, TripEvent};

use std::collections::HashSet;
use std::sync::Arc;

use thiserror::Error;

use crate::case::SystemState;
use crate::powerflow::reconcile_islands;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtectionError {
    #[error("shed ratio must lie in (0, 1), got {0}")]
    InvalidShedRatio(f64),
    #[error("no islanding level left: {applied} of {available} already applied")]
    PolicyUnavailable { applied: usize, available: usize },
}

/// Scales every in-service load by `1 - shed_ratio`. Topology, voltages and
/// service flags are untouched.
pub fn apply_load_shedding(state: &SystemState, shed_ratio: f64) -> Result<SystemState, ProtectionError> {
    if !(shed_ratio > 0.0 && shed_ratio < 1.0) {
        return Err(ProtectionError::InvalidShedRatio(shed_ratio));
    }
    let mut next = state.clone();
    for (scale, &on) in next.load_scale.iter_mut().zip(&state.load_in_service) {
        if on {
            *scale *= 1.0 - shed_ratio;
        }
    }
    Ok(next)
}

/// Opens the tie branches of the next islanding level, then recomputes
/// islands and slacks. Generator-less islands are de-energized and reported
/// after the `islanding_action` events.
pub fn apply_islanding(state: &SystemState) -> Result<(SystemState, Vec<TripEvent>), ProtectionError> {
    let case = Arc::clone(&state.case);
    let available = case.islanding_scheme.levels.len();
    if state.islanding_level_applied >= available {
        return Err(ProtectionError::PolicyUnavailable {
            applied: state.islanding_level_applied,
            available,
        });
    }
    let level = &case.islanding_scheme.levels[state.islanding_level_applied];
    let ties: HashSet<u32> = level.tie_branches.iter().copied().collect();

    let mut next = state.clone();
    let mut events = Vec::new();
    for (i, br) in case.branches.iter().enumerate() {
        if next.branch_in_service[i] && ties.contains(&br.id) {
            next.branch_in_service[i] = false;
            next.relay.branch_overload[i] = 0;
            events.push(TripEvent::new(
                next.clock,
                ElementKind::Branch,
                br.id,
                TripCause::IslandingAction,
            ));
        }
    }
    next.islanding_level_applied += 1;
    events.extend(reconcile_islands(&mut next));
    Ok((next, events))
}
