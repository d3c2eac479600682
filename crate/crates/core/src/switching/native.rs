use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::model::{GridModel, Observation, Transition};
use crate::case::{loss_metrics, total_operational_load, SystemState};
use crate::powerflow::{solve_powerflow, PowerFlowSolution, SolverOptions};
use crate::protection::{
    apply_islanding, apply_load_shedding, has_pending_violations, is_stable_and_acceptable,
    relay_scan, PolicyKind, ProtectionError, RasPolicy, RelayOptions,
};

/// A system state together with its power-flow solution.
#[derive(Debug, Clone)]
pub struct NativeState {
    pub system: SystemState,
    pub solution: PowerFlowSolution,
}

/// Quasi-steady-state plant: every relay step re-solves the network and
/// lets the relays act on the result.
#[derive(Debug, Clone)]
pub struct NativeModel {
    /// Reference for loss counting, normally the pre-contingency state.
    pub baseline: SystemState,
    pub dispatch_interval: f64,
    pub relay: RelayOptions,
    pub solver: SolverOptions,
}

impl NativeModel {
    pub fn new(baseline: SystemState, dispatch_interval: f64, relay: RelayOptions, solver: SolverOptions) -> Self {
        NativeModel {
            baseline,
            dispatch_interval,
            relay,
            solver,
        }
    }

    /// Warm-started solve, retried from a flat start when some island fails.
    pub fn solve(&self, system: &SystemState) -> PowerFlowSolution {
        let warm = solve_powerflow(system, &self.solver.warm());
        if warm.converged {
            return warm;
        }
        let flat = solve_powerflow(system, &SolverOptions { flat_start: true, ..self.solver });
        let ok = |s: &PowerFlowSolution| s.islands.iter().filter(|i| i.converged()).count();
        if ok(&flat) > ok(&warm) {
            flat
        } else {
            warm
        }
    }

    pub fn settle(&self, mut system: SystemState) -> NativeState {
        let solution = self.solve(&system);
        system.voltages.clone_from(&solution.voltages);
        NativeState { system, solution }
    }

    fn relay_steps(&self) -> usize {
        ((self.dispatch_interval / self.relay.relay_step).round() as usize).max(1)
    }
}

impl GridModel for NativeModel {
    type State = NativeState;

    fn total_load(&self) -> f64 {
        total_operational_load(&self.baseline)
    }

    fn observe(&self, state: &NativeState) -> Observation {
        let saved = is_stable_and_acceptable(&state.system, &state.solution);
        Observation {
            clock: state.system.clock,
            load: total_operational_load(&state.system),
            saved,
            settled: saved && !has_pending_violations(&state.system, &state.solution),
            losses: loss_metrics(&state.system, &self.baseline).unwrap_or_default(),
        }
    }

    fn advance(&self, state: &NativeState, policy: &RasPolicy) -> Result<Transition<NativeState>, ProtectionError> {
        let mut events = Vec::new();
        let mut sys = match policy.kind {
            PolicyKind::LoadShed => {
                let ratio = policy.shed_ratio.ok_or(ProtectionError::InvalidShedRatio(f64::NAN))?;
                apply_load_shedding(&state.system, ratio)?
            }
            PolicyKind::Island => {
                let (next, ev) = apply_islanding(&state.system)?;
                events.extend(ev);
                next
            }
            PolicyKind::NoAction => state.system.clone(),
        };

        let start = sys.clock;
        let steps = self.relay_steps();
        let mut sol = if policy.kind == PolicyKind::NoAction {
            state.solution.clone()
        } else {
            self.solve(&sys)
        };
        sys.voltages.clone_from(&sol.voltages);

        for k in 1..=steps {
            sys.clock = start + k as f64 * self.relay.relay_step;
            let (next, ev) = relay_scan(&sys, &sol, &self.relay);
            sys = next;
            if !ev.is_empty() {
                events.extend(ev);
                sol = self.solve(&sys);
                sys.voltages.clone_from(&sol.voltages);
            } else if sys.relay.is_idle() {
                // nothing can change until the next dispatch
                sys.clock = start + steps as f64 * self.relay.relay_step;
                break;
            }
        }
        Ok(Transition {
            state: NativeState {
                system: sys,
                solution: sol,
            },
            events,
        })
    }

    /// Multiplies each in-service load's scale by `1 + sigma * z`,
    /// `z ~ N(0, 1)`, clamped to `[0, 1]`, then re-solves.
    fn perturb(&self, state: &NativeState, sigma: f64, rng: &mut ChaCha8Rng) -> NativeState {
        if sigma <= 0.0 {
            return state.clone();
        }
        let mut sys = state.system.clone();
        for (scale, &on) in sys.load_scale.iter_mut().zip(&state.system.load_in_service) {
            let z: f64 = StandardNormal.sample(rng);
            if on {
                *scale = (*scale * (1.0 + sigma * z)).clamp(0.0, 1.0);
            }
        }
        self.settle(sys)
    }
}
