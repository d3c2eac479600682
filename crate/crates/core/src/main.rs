use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rasswitch::case::SystemState;
use rasswitch::experiment::{load_case, Backend, ExperimentError, RunConfig};
use rasswitch::powerflow::{reconcile_islands, solve_powerflow, SolverOptions};
use rasswitch::protection::is_stable_and_acceptable;
use rasswitch::switching::RewardMode;

#[derive(Parser)]
#[command(name = "rasswitch", version, about = "Contingency simulation with policy-switching remedial action control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the dispatch loop with policy switching.
    Run(RunArgs),
    /// Force every policy sequence over the horizon and tabulate outcomes.
    Enumerate(RunArgs),
    /// Parse and check a case file, then solve its base case.
    ValidateCase {
        #[arg(long)]
        case: PathBuf,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum RewardArg {
    Table,
    Eq4,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum BackendArg {
    Native,
    Scripted,
}

#[derive(Args)]
struct RunArgs {
    /// JSON file with any of the options below; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    case: Option<PathBuf>,
    /// Branches to open, as bus pairs: "19-20,2-25".
    #[arg(long, conflicts_with = "random_n2")]
    contingency: Option<String>,
    /// Open two in-service branches drawn uniformly with --seed.
    #[arg(long)]
    random_n2: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated policy set: i, ls, na.
    #[arg(long)]
    policies: Option<String>,
    #[arg(long)]
    shed_ratio: Option<f64>,
    /// Dispatches simulated and looked ahead.
    #[arg(long)]
    horizon: Option<usize>,
    /// Seconds between dispatches.
    #[arg(long)]
    dispatch_interval: Option<f64>,
    /// Seconds between relay scans.
    #[arg(long)]
    relay_step: Option<f64>,
    /// Monte-Carlo rollouts per policy.
    #[arg(long)]
    rollouts: Option<usize>,
    /// Relative load noise per rollout.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, value_enum)]
    reward_mode: Option<RewardArg>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(self) -> Result<RunConfig, ExperimentError> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ExperimentError::Usage(format!("{}: {e}", path.display())))?;
                RunConfig::from_json(&text)?
            }
            None => RunConfig::default(),
        };
        if self.case.is_some() {
            cfg.case = self.case;
        }
        if self.contingency.is_some() {
            cfg.contingency = self.contingency;
            cfg.random_n2 = false;
        }
        if self.random_n2 {
            cfg.random_n2 = true;
            cfg.contingency = None;
        }
        macro_rules! take {
            ($($field:ident),*) => { $(if let Some(v) = self.$field { cfg.$field = v; })* };
        }
        take!(seed, policies, shed_ratio, horizon, dispatch_interval, relay_step, rollouts, noise, out);
        if let Some(m) = self.reward_mode {
            cfg.reward_mode = match m {
                RewardArg::Table => RewardMode::TableCompatible,
                RewardArg::Eq4 => RewardMode::Eq4Literal,
            };
        }
        if let Some(b) = self.backend {
            cfg.backend = match b {
                BackendArg::Native => Backend::Native,
                BackendArg::Scripted => Backend::Scripted,
            };
        }
        Ok(cfg)
    }
}

fn validate_case(path: PathBuf) -> Result<(), ExperimentError> {
    let case = std::sync::Arc::new(load_case(Some(&path))?);
    println!(
        "{}: {} buses, {} branches, {} generators, {} loads, {} islanding levels, total load {:.1} MVA",
        path.display(),
        case.buses.len(),
        case.branches.len(),
        case.generators.len(),
        case.loads.len(),
        case.islanding_scheme.levels.len(),
        case.total_load_mva()
    );
    let mut state = SystemState::pristine(case);
    reconcile_islands(&mut state);
    let sol = solve_powerflow(&state, &SolverOptions::default());
    if !sol.converged {
        return Err(ExperimentError::BaseCaseUnsolvable(format!(
            "max mismatch {:.3e} pu after {} iterations",
            sol.mismatch, sol.iterations
        )));
    }
    println!(
        "base case converged in {} iterations, max mismatch {:.2e} pu, voltages acceptable: {}",
        sol.iterations,
        sol.mismatch,
        is_stable_and_acceptable(&state, &sol)
    );
    Ok(())
}

fn run(args: RunArgs, enumerate: bool) -> Result<(), ExperimentError> {
    let cfg = args.resolve()?;
    let trace = cfg.execute(enumerate)?;
    if enumerate {
        let rows = trace["rows"].as_array().map_or(0, Vec::len);
        println!("{rows} sequences written to {}", cfg.out.display());
    } else {
        let last = &trace["final"];
        let chosen: Vec<&str> = trace["dispatches"]
            .as_array()
            .into_iter()
            .flatten()
            .filter(|d| d["status"] == "applied")
            .filter_map(|d| d["policy"]["kind"].as_str())
            .collect();
        println!(
            "detected={} chosen={:?} saved={} load={:.1} MVA cumulative_value={:.4} final_reward={:.4}; results in {}",
            trace["detected"],
            chosen,
            last["saved"],
            last["load"].as_f64().unwrap_or(f64::NAN),
            last["cumulative_value"].as_f64().unwrap_or(f64::NAN),
            last["final_reward"].as_f64().unwrap_or(f64::NAN),
            cfg.out.display()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(args, false),
        Command::Enumerate(args) => run(args, true),
        Command::ValidateCase { case } => validate_case(case),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
