use serde::{Deserialize, Serialize};

use super::{CaseError, SystemState};

/// Sum of scaled apparent demand over in-service loads, MVA.
pub fn total_operational_load(state: &SystemState) -> f64 {
    state
        .case
        .loads
        .iter()
        .enumerate()
        .filter(|(i, _)| state.load_in_service[*i])
        .map(|(i, l)| l.apparent(state.load_scale[i]))
        .sum()
}

/// Elements in service in a baseline state but lost in a later one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossMetrics {
    pub buses: usize,
    pub generators: usize,
    /// Loads fully lost: out of service or shed to zero.
    pub loads: usize,
    pub lines: usize,
}

fn lost(baseline: &[bool], now: &[bool]) -> usize {
    baseline.iter().zip(now).filter(|(&b, &n)| b && !n).count()
}

pub fn loss_metrics(state: &SystemState, baseline: &SystemState) -> Result<LossMetrics, CaseError> {
    if !state.same_case(baseline) {
        return Err(CaseError::Usage(
            "loss metrics need two states of the same case".into(),
        ));
    }
    let load_alive = |s: &SystemState| -> Vec<bool> {
        s.load_in_service
            .iter()
            .zip(&s.load_scale)
            .map(|(&on, &scale)| on && scale > 0.0)
            .collect()
    };
    Ok(LossMetrics {
        buses: lost(&baseline.bus_in_service, &state.bus_in_service),
        generators: lost(&baseline.gen_in_service, &state.gen_in_service),
        loads: lost(&load_alive(baseline), &load_alive(state)),
        lines: lost(&baseline.branch_in_service, &state.branch_in_service),
    })
}
