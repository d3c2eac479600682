use super::{parse_case, NetworkCase};

/// The IEEE 39-bus (New England) case with its two-level islanding scheme.
/// Ships at `crates/core/data/ieee39.json`.
pub const IEEE39_JSON: &str = include_str!("../../data/ieee39.json");

pub fn ieee39() -> NetworkCase {
    parse_case(IEEE39_JSON).expect("bundled IEEE-39 fixture is valid")
}
