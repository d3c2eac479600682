use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Bus,
    Branch,
    Generator,
    Load,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementRef {
    pub kind: ElementKind,
    pub id: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripCause {
    Undervoltage,
    Overvoltage,
    Overload,
    IslandCollapse,
    Contingency,
    IslandingAction,
}

/// One element taken out of service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripEvent {
    /// Simulation time, s.
    pub clock: f64,
    pub element: ElementRef,
    pub cause: TripCause,
}

impl TripEvent {
    pub fn new(clock: f64, kind: ElementKind, id: u32, cause: TripCause) -> Self {
        debug_assert!(clock >= 0.0);
        TripEvent {
            clock,
            element: ElementRef { kind, id },
            cause,
        }
    }
}
