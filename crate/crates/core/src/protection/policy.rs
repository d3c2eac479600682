use std::fmt;

use serde::{Deserialize, Serialize};

use super::ProtectionError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    LoadShed,
    Island,
    NoAction,
}

/// One base remedial action scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasPolicy {
    pub kind: PolicyKind,
    /// Present iff `kind == LoadShed`; lies in (0, 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shed_ratio: Option<f64>,
    pub description: String,
}

impl RasPolicy {
    pub fn load_shed(shed_ratio: f64) -> Result<Self, ProtectionError> {
        if !(shed_ratio > 0.0 && shed_ratio < 1.0) {
            return Err(ProtectionError::InvalidShedRatio(shed_ratio));
        }
        Ok(RasPolicy {
            kind: PolicyKind::LoadShed,
            shed_ratio: Some(shed_ratio),
            description: format!("uniform load shedding, R = {shed_ratio}"),
        })
    }

    pub fn island() -> Self {
        RasPolicy {
            kind: PolicyKind::Island,
            shed_ratio: None,
            description: "open the next islanding level".into(),
        }
    }

    pub fn no_action() -> Self {
        RasPolicy {
            kind: PolicyKind::NoAction,
            shed_ratio: None,
            description: "no remedial action".into(),
        }
    }

    /// Short tag used in tables and CSV output.
    pub fn label(&self) -> &'static str {
        match self.kind {
            PolicyKind::LoadShed => "LS",
            PolicyKind::Island => "I",
            PolicyKind::NoAction => "NA",
        }
    }
}

impl fmt::Display for RasPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}
