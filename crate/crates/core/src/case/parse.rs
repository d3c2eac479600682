use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

use super::topology::components;
use super::{BusKind, NetworkCase, MAX_ISLANDING_LEVELS, SECURE_RATING_MARGIN};

#[derive(Debug, Error)]
pub enum CaseError {
    /// The text is not valid against the case schema.
    #[error("case parse error at line {line}, column {column}: {message}")]
    Parse {
        message: String,
        line: usize,
        column: usize,
    },
    /// The text parsed but violates a structural invariant.
    #[error("case integrity error: {0}")]
    Integrity(String),
    /// Two inputs that must describe the same case do not.
    #[error("usage error: {0}")]
    Usage(String),
}

fn integrity(msg: impl Into<String>) -> CaseError {
    CaseError::Integrity(msg.into())
}

/// Parses and validates a JSON case file.
pub fn parse_case(text: &str) -> Result<NetworkCase, CaseError> {
    let mut case: NetworkCase = serde_json::from_str(text).map_err(|e| CaseError::Parse {
        message: e.to_string(),
        line: e.line(),
        column: e.column(),
    })?;
    check_invariants(&mut case)?;
    Ok(case)
}

/// Serializes a case in the same schema [`parse_case`] accepts.
pub fn to_json(case: &NetworkCase) -> String {
    serde_json::to_string_pretty(case).expect("case serialization is infallible")
}

fn unique<I: IntoIterator<Item = u32>>(what: &str, ids: I) -> Result<(), CaseError> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(integrity(format!("duplicate {what} id {id}")));
        }
    }
    Ok(())
}

pub(super) fn check_invariants(case: &mut NetworkCase) -> Result<(), CaseError> {
    if !(case.base_mva > 0.0 && case.base_mva.is_finite()) {
        return Err(integrity(format!("base_mva must be positive, got {}", case.base_mva)));
    }
    if case.buses.is_empty() {
        return Err(integrity("case has no buses"));
    }

    unique("bus", case.buses.iter().map(|b| b.id))?;
    unique("branch", case.branches.iter().map(|b| b.id))?;
    unique("generator", case.generators.iter().map(|g| g.id))?;
    unique("load", case.loads.iter().map(|l| l.id))?;

    case.bus_index = case.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
    case.branch_index = case.branches.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
    let bus_index = &case.bus_index;
    let known_bus = |id: u32, owner: String| -> Result<(), CaseError> {
        if bus_index.contains_key(&id) {
            Ok(())
        } else {
            Err(integrity(format!("{owner} references missing bus {id}")))
        }
    };

    let slacks = case.buses.iter().filter(|b| b.bus_kind == BusKind::Slack).count();
    if slacks != 1 {
        return Err(integrity(format!("expected exactly one slack bus, found {slacks}")));
    }
    for bus in &case.buses {
        if !(bus.v_min > 0.0 && bus.v_min < bus.v_max) {
            return Err(integrity(format!(
                "bus {}: voltage limits must satisfy 0 < v_min < v_max",
                bus.id
            )));
        }
    }

    for br in &mut case.branches {
        known_bus(br.from_bus, format!("branch {}", br.id))?;
        known_bus(br.to_bus, format!("branch {}", br.id))?;
        if br.from_bus == br.to_bus {
            return Err(integrity(format!("branch {} connects bus {} to itself", br.id, br.from_bus)));
        }
        if br.x == 0.0 || !br.x.is_finite() {
            return Err(integrity(format!("branch {} has zero reactance", br.id)));
        }
        if !(br.rating >= 0.0) {
            return Err(integrity(format!("branch {} has a negative rating", br.id)));
        }
        let secure = SECURE_RATING_MARGIN * br.rating;
        if br.secure_rating != 0.0 && (br.secure_rating - secure).abs() > 1e-9 * secure.max(1.0) {
            return Err(integrity(format!(
                "branch {}: secure_rating {} != {} x rating",
                br.id, br.secure_rating, SECURE_RATING_MARGIN
            )));
        }
        br.secure_rating = secure;
    }

    for g in &case.generators {
        known_bus(g.bus, format!("generator {}", g.id))?;
        if g.q_min > g.q_max {
            return Err(integrity(format!("generator {}: q_min > q_max", g.id)));
        }
        if !(0.0 <= g.p_set && g.p_set <= g.p_max) {
            return Err(integrity(format!("generator {}: need 0 <= p_set <= p_max", g.id)));
        }
        if !(g.v_setpoint > 0.0) {
            return Err(integrity(format!("generator {}: v_setpoint must be positive", g.id)));
        }
    }

    for l in &case.loads {
        known_bus(l.bus, format!("load {}", l.id))?;
        if !(0.0..=1.0).contains(&l.scale) {
            return Err(integrity(format!("load {}: scale {} outside [0, 1]", l.id, l.scale)));
        }
    }

    check_scheme(case)
}

fn check_scheme(case: &NetworkCase) -> Result<(), CaseError> {
    let levels = &case.islanding_scheme.levels;
    if levels.len() > MAX_ISLANDING_LEVELS {
        return Err(integrity(format!(
            "islanding scheme declares {} levels, at most {MAX_ISLANDING_LEVELS} allowed",
            levels.len()
        )));
    }
    let all_buses: Vec<bool> = vec![true; case.buses.len()];
    for (k, level) in levels.iter().enumerate() {
        let mut seen = HashSet::new();
        for part in &level.partitions {
            for &bus in part {
                if case.bus_position(bus).is_none() {
                    return Err(integrity(format!("islanding level {}: unknown bus {bus}", k + 1)));
                }
                if !seen.insert(bus) {
                    return Err(integrity(format!(
                        "islanding level {}: bus {bus} appears in more than one partition",
                        k + 1
                    )));
                }
            }
        }
        for &br in &level.tie_branches {
            if case.branch_position(br).is_none() {
                return Err(integrity(format!("islanding level {}: unknown branch {br}", k + 1)));
            }
        }

        let open: HashSet<u32> = case.cumulative_tie_branches(k + 1).into_iter().collect();
        let edges = case
            .branches
            .iter()
            .filter(|b| b.in_service && !open.contains(&b.id))
            .map(|b| (case.bus_index[&b.from_bus], case.bus_index[&b.to_bus]));
        let found: BTreeSet<BTreeSet<u32>> = components(&all_buses, edges)
            .into_iter()
            .map(|c| c.into_iter().map(|i| case.buses[i].id).collect())
            .collect();
        let declared: BTreeSet<BTreeSet<u32>> = level
            .partitions
            .iter()
            .map(|p| p.iter().copied().collect())
            .collect();
        if found != declared {
            return Err(integrity(format!(
                "islanding level {}: opening its tie branches yields {} components that do not match the {} declared partitions",
                k + 1,
                found.len(),
                declared.len()
            )));
        }
    }
    Ok(())
}
