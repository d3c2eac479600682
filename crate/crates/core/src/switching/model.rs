use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::case::{LossMetrics, TripEvent};
use crate::protection::{ProtectionError, RasPolicy};

/// What the controller can see of a state at a dispatch instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub clock: f64,
    /// Operational load L_t, MVA.
    pub load: f64,
    /// The B flag.
    pub saved: bool,
    /// Saved with nothing pending: any further action is unnecessary.
    pub settled: bool,
    pub losses: LossMetrics,
}

/// Result of one dispatch interval.
#[derive(Debug, Clone)]
pub struct Transition<S> {
    pub state: S,
    pub events: Vec<TripEvent>,
}

/// A simulator the controller can roll policies forward on. `advance`
/// applies a policy at the current dispatch instant and runs the plant up
/// to the next one.
///
/// Implementations must be deterministic given their inputs; all
/// randomness enters through [`GridModel::perturb`].
pub trait GridModel: Sync {
    type State: Clone + Send + Sync;

    /// L_total, MVA.
    fn total_load(&self) -> f64;

    fn observe(&self, state: &Self::State) -> Observation;

    fn advance(
        &self,
        state: &Self::State,
        policy: &RasPolicy,
    ) -> Result<Transition<Self::State>, ProtectionError>;

    /// Rollout-start randomization with relative magnitude `sigma`.
    fn perturb(&self, state: &Self::State, _sigma: f64, _rng: &mut ChaCha8Rng) -> Self::State {
        state.clone()
    }
}
