//! Contingency simulation and policy-switching control for load-shedding
//! and islanding remedial action schemes.

pub mod case;
pub mod experiment;
pub mod powerflow;
pub mod protection;
pub mod switching;
