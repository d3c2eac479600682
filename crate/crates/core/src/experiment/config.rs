use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    emit_results, enumerate_policy_tree, inject_contingency, run_experiment, ContingencyKind,
    ContingencySpec, ExperimentError, ScriptedOracle,
};
use crate::case::{ieee39, parse_case, NetworkCase, SystemState};
use crate::powerflow::{reconcile_islands, SolverOptions};
use crate::protection::{RasPolicy, RelayOptions};
use crate::switching::{NativeModel, RewardMode, SwitchingConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Native,
    Scripted,
}

/// Everything a `run` or `enumerate` invocation needs. Field names match
/// the command-line flags with `-` replaced by `_`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Case file; the built-in 39-bus case when absent.
    pub case: Option<PathBuf>,
    /// Bus pairs such as `"19-20,2-25"`.
    pub contingency: Option<String>,
    pub random_n2: bool,
    pub seed: u64,
    pub policies: String,
    pub shed_ratio: f64,
    pub horizon: usize,
    pub dispatch_interval: f64,
    pub relay_step: f64,
    pub rollouts: usize,
    pub noise: f64,
    pub epsilon: f64,
    pub beta: f64,
    pub reward_mode: RewardMode,
    pub backend: Backend,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sw = SwitchingConfig::default();
        RunConfig {
            case: None,
            contingency: None,
            random_n2: false,
            seed: 0,
            policies: "i,ls".into(),
            shed_ratio: 0.2,
            horizon: sw.horizon_dispatches,
            dispatch_interval: sw.dispatch_interval,
            relay_step: RelayOptions::default().relay_step,
            rollouts: sw.rollouts_per_policy,
            noise: sw.load_noise_sigma,
            epsilon: sw.epsilon,
            beta: sw.beta,
            reward_mode: sw.reward_mode,
            backend: Backend::Native,
            out: PathBuf::from("out"),
        }
    }
}

/// The contingency used when none is given.
pub const DEFAULT_CONTINGENCY: &str = "19-20,2-25";

/// Resolves `"a-b,c-d"` bus pairs to branch ids. Bare integers are taken as
/// branch ids.
pub fn parse_branch_pairs(case: &NetworkCase, text: &str) -> Result<Vec<u32>, ExperimentError> {
    let bad = |m: String| ExperimentError::Usage(m);
    let mut ids = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let id = match item.split_once('-') {
            Some((a, b)) => {
                let parse = |s: &str| {
                    s.trim()
                        .parse::<u32>()
                        .map_err(|_| bad(format!("bad bus id in {item:?}")))
                };
                let (a, b) = (parse(a)?, parse(b)?);
                let found: Vec<u32> = case
                    .branches
                    .iter()
                    .filter(|br| (br.from_bus, br.to_bus) == (a, b) || (br.from_bus, br.to_bus) == (b, a))
                    .map(|br| br.id)
                    .collect();
                match found[..] {
                    [id] => id,
                    [] => return Err(bad(format!("no branch between buses {a} and {b}"))),
                    _ => return Err(bad(format!("several branches join buses {a} and {b}; give branch ids"))),
                }
            }
            None => item
                .parse::<u32>()
                .map_err(|_| bad(format!("bad branch reference {item:?}")))?,
        };
        if ids.contains(&id) {
            return Err(bad(format!("branch {id} listed twice")));
        }
        ids.push(id);
    }
    if ids.is_empty() {
        return Err(bad("contingency lists no branches".into()));
    }
    Ok(ids)
}

/// Parses `"i,ls"`; `na` stands for no action.
pub fn parse_policies(text: &str, shed_ratio: f64) -> Result<Vec<RasPolicy>, ExperimentError> {
    let set: Vec<RasPolicy> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|tok| match tok.to_ascii_lowercase().as_str() {
            "i" | "island" => Ok(RasPolicy::island()),
            "ls" | "load_shed" => RasPolicy::load_shed(shed_ratio).map_err(|e| ExperimentError::Usage(e.to_string())),
            "na" | "none" | "no_action" => Ok(RasPolicy::no_action()),
            other => Err(ExperimentError::Usage(format!("unknown policy {other:?}"))),
        })
        .collect::<Result<_, _>>()?;
    if set.is_empty() {
        return Err(ExperimentError::Usage("policy set is empty".into()));
    }
    Ok(set)
}

pub fn load_case(path: Option<&Path>) -> Result<NetworkCase, ExperimentError> {
    match path {
        None => Ok(ieee39()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| ExperimentError::Usage(format!("{}: {e}", p.display())))?;
            Ok(parse_case(&text)?)
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        serde_json::from_str(text).map_err(|e| ExperimentError::Usage(format!("config: {e}")))
    }

    pub fn switching(&self) -> SwitchingConfig {
        SwitchingConfig {
            dispatch_interval: self.dispatch_interval,
            horizon_dispatches: self.horizon,
            beta: self.beta,
            rollouts_per_policy: self.rollouts,
            epsilon: self.epsilon,
            reward_mode: self.reward_mode,
            load_noise_sigma: self.noise,
        }
    }

    pub fn relay(&self) -> Result<RelayOptions, ExperimentError> {
        if !(self.relay_step > 0.0) || !self.relay_step.is_finite() {
            return Err(ExperimentError::Usage(format!("relay step must be positive, got {}", self.relay_step)));
        }
        Ok(RelayOptions {
            relay_step: self.relay_step,
            ..RelayOptions::default()
        })
    }

    fn contingency_spec(&self, case: &NetworkCase) -> Result<ContingencySpec, ExperimentError> {
        match (&self.contingency, self.random_n2) {
            (Some(_), true) => Err(ExperimentError::Usage(
                "give either an explicit contingency or random N-2, not both".into(),
            )),
            (None, true) => Ok(ContingencySpec::random_n2(self.seed)),
            (Some(text), false) => Ok(ContingencySpec::explicit(parse_branch_pairs(case, text)?)),
            (None, false) => Ok(ContingencySpec::explicit(parse_branch_pairs(case, DEFAULT_CONTINGENCY)?)),
        }
    }

    /// Runs the experiment (or the enumeration) and writes the result files
    /// into `out`. Returns the serialized trace.
    pub fn execute(&self, enumerate: bool) -> Result<serde_json::Value, ExperimentError> {
        let sw = self.switching();
        sw.validate()?;
        let policies = parse_policies(&self.policies, self.shed_ratio)?;
        let case = Arc::new(load_case(self.case.as_deref())?);
        let spec = self.contingency_spec(&case)?;

        macro_rules! finish {
            ($model:expr, $start:expr, $spec:expr, $detected:expr, $events:expr) => {{
                if enumerate {
                    let table = enumerate_policy_tree($model, $start, $spec, $detected, &policies, &sw, self.seed)?;
                    emit_results(&self.out, &table, &table.summary_rows())?;
                    serde_json::to_value(&table)
                } else {
                    let trace = run_experiment($model, $start, $spec, $detected, $events, &policies, &sw, self.seed)?;
                    emit_results(&self.out, &trace, &trace.summary_rows())?;
                    serde_json::to_value(&trace)
                }
                .expect("traces serialize")
            }};
        }

        Ok(match self.backend {
            Backend::Native => {
                let mut system = SystemState::pristine(Arc::clone(&case));
                reconcile_islands(&mut system);
                let probe = NativeModel::new(system.clone(), sw.dispatch_interval, self.relay()?, SolverOptions::default());
                let base = probe.settle(system);
                if !base.solution.converged {
                    return Err(ExperimentError::BaseCaseUnsolvable(format!(
                        "max mismatch {:.3e} pu after {} iterations",
                        base.solution.mismatch, base.solution.iterations
                    )));
                }
                let model = NativeModel { baseline: base.system.clone(), ..probe };
                let (post, events, spec, detected) = inject_contingency(&model, &base, &spec)?;
                finish!(&model, &post, spec, detected, events)
            }
            Backend::Scripted => {
                let scripted = parse_branch_pairs(&ieee39(), DEFAULT_CONTINGENCY)?;
                if spec.kind != ContingencyKind::Explicit || spec.branch_ids != scripted {
                    return Err(ExperimentError::Usage(format!(
                        "the scripted backend only knows the {DEFAULT_CONTINGENCY} contingency"
                    )));
                }
                let oracle = ScriptedOracle {
                    dispatch_interval: sw.dispatch_interval,
                    ..ScriptedOracle::ieee39_n2()
                };
                let root = oracle.root();
                finish!(&oracle, &root, spec, true, Vec::new())
            }
        })
    }
}
