//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use rasswitch::case::{ieee39, total_operational_load, BusKind, IslandingScheme, NetworkCase};
use rasswitch::experiment::{
    enumerate_policy_tree, run_experiment, Backend, ContingencySpec, RunConfig, ScriptedOracle,
};
use rasswitch::powerflow::{find_islands, solve_powerflow, SolverOptions};
use rasswitch::protection::{apply_islanding, apply_load_shedding, RasPolicy};
use rasswitch::switching::mdp::MockMdp;
use rasswitch::switching::{reward, GridModel, RewardMode, StepStatus, SwitchingConfig};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn reward_arithmetic() -> Outcome {
    let mut cells: Vec<(f64, bool, f64)> = Vec::new();
    let columns = tabulated_columns();
    for depth in 0..3 {
        for (_, col) in &columns {
            if let Some((l, b, r, _)) = col[depth] {
                cells.push((l, b, r));
            }
        }
    }
    cells.extend(TABULATED_EXPERIMENTS);
    let mut worst: f64 = 0.0;
    for &(l, b, tab) in &cells {
        let r = reward(l, 0.0, b, TABULATED_TOTAL, RewardMode::TableCompatible).map_err(|e| e.to_string())?;
        worst = worst.max((r - tab).abs());
        ensure((r - tab).abs() <= 1e-3, || format!("L={l} B={b}: {r:.4} vs {tab}"))?;
    }
    ensure(cells.len() == 20, || format!("{} cells", cells.len()))?;
    Ok(format!("{} rewards, worst error {worst:.5}", cells.len()))
}

fn scripted_reproduction() -> Outcome {
    let start = Instant::now();
    let oracle = ScriptedOracle::ieee39_n2();
    let root = oracle.root();
    let set = [RasPolicy::island(), RasPolicy::load_shed(0.2).unwrap()];
    let cfg = SwitchingConfig::default();
    let spec = ContingencySpec::explicit(vec![]);
    let err = |e: rasswitch::experiment::ExperimentError| e.to_string();

    let table = enumerate_policy_tree(&oracle, &root, spec.clone(), true, &set, &cfg, 0).map_err(err)?;
    let expected = tabulated_columns();
    ensure(table.rows.len() == expected.len(), || format!("{} rows", table.rows.len()))?;
    for (seq, cells) in &expected {
        let row = table
            .rows
            .iter()
            .find(|r| r.sequence == seq)
            .ok_or_else(|| format!("no row {seq:?}"))?;
        for (step, cell) in row.steps.iter().zip(cells) {
            match (cell, step.status) {
                (Some((l, b, r, lost)), StepStatus::Applied) => {
                    let rec = step.record.unwrap();
                    let got = step.losses.unwrap();
                    ensure(
                        rec.operational_load == *l
                            && rec.saved == *b
                            && (rec.reward - r).abs() <= 1e-3
                            && [got.buses, got.generators, got.loads, got.lines] == *lost,
                        || format!("{seq:?} dispatch {}: {rec:?} {got:?}", step.dispatch),
                    )?;
                }
                (None, StepStatus::NotNeeded | StepStatus::Unavailable) => {}
                (cell, status) => return Err(format!("{seq:?} dispatch {}: {status:?} vs {cell:?}", step.dispatch)),
            }
        }
    }

    let trace = run_experiment(&oracle, &root, spec, true, vec![], &set, &cfg, 0).map_err(err)?;
    let chosen = trace.chosen_sequence();
    let fin = &trace.final_outcome;
    ensure(chosen == ["LS", "I"], || format!("chose {chosen:?}"))?;
    ensure((fin.final_reward - 0.865).abs() <= 1e-3, || format!("final reward {}", fin.final_reward))?;
    ensure(fin.load == 4749.0 && fin.saved, || format!("final {fin:?}"))?;
    let elapsed = start.elapsed().as_secs_f64();
    ensure(elapsed < 1.0, || format!("{elapsed:.2}s"))?;
    Ok(format!("8 columns match, chose LS>I, final reward {:.4}, {elapsed:.3}s", fin.final_reward))
}

fn switching_guarantee() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let eps = 0.1;
    let (mut exact_ok, mut noisy_ok, mut compound_ok, mut strict_2eps) = (0, 0, 0, 0);
    let n = 500;
    for _ in 0..n {
        let m = MockMdp::random(&mut rng, 6, 3);
        let s = rng.gen_range(0..m.states());
        let h = rng.gen_range(1..=6);
        let best = m.best_policy_value(s, h);
        let tol = 1e-12;
        if m.switching_value(s, h, |_, _, _| 0.0) >= best - tol {
            exact_ok += 1;
        }
        // one noisy decision, exact estimates afterwards
        let mut noise = ChaCha8Rng::seed_from_u64(rng.gen());
        let v = m.switching_value(s, h, |t, _, _| if t == 0 { noise.gen_range(-eps..=eps) } else { 0.0 });
        if v >= best - 2.0 * eps - tol {
            noisy_ok += 1;
        }
        // noisy at every decision
        let v = m.switching_value(s, h, |_, _, _| noise.gen_range(-eps..=eps));
        if v >= best - 2.0 * eps * h as f64 - tol {
            compound_ok += 1;
        }
        if v >= best - 2.0 * eps - tol {
            strict_2eps += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let detail = format!(
        "exact {exact_ok}/{n}, noisy first decision {noisy_ok}/{n} (eps={eps}), \
         noisy every decision {compound_ok}/{n} within 2*eps*H and {strict_2eps}/{n} within 2*eps, {elapsed:.2}s"
    );
    ensure(exact_ok == n && noisy_ok == n && compound_ok == n && strict_2eps == n && elapsed < 60.0, || detail.clone())?;
    Ok(detail)
}

fn native_dominance() -> Outcome {
    let start = Instant::now();
    let setup = native_setup(5.0);
    let cfg = SwitchingConfig::default();
    let ls = RasPolicy::load_shed(0.2).unwrap();
    let run = |set: &[RasPolicy]| {
        run_experiment(&setup.model, &setup.post, setup.spec.clone(), setup.detected, setup.events.clone(), set, &cfg, 0)
            .map(|t| t.final_outcome)
            .map_err(|e| e.to_string())
    };
    let both = run(&[RasPolicy::island(), ls.clone()])?;
    let only_i = run(&[RasPolicy::island()])?;
    let only_ls = run(&[ls])?;
    let detail = format!(
        "switching {:.4} (B={}), I {:.4}, LS {:.4}, {:.1}s",
        both.cumulative_value,
        both.saved as u8,
        only_i.cumulative_value,
        only_ls.cumulative_value,
        start.elapsed().as_secs_f64()
    );
    ensure(
        setup.detected
            && both.saved
            && both.cumulative_value >= only_i.cumulative_value
            && both.cumulative_value >= only_ls.cumulative_value
            && start.elapsed().as_secs_f64() < 60.0,
        || detail.clone(),
    )?;
    Ok(detail)
}

fn powerflow_correctness() -> Outcome {
    let state = energized(ieee39());
    let sol = solve_powerflow(&state, &SolverOptions::default());
    ensure(sol.converged && sol.iterations <= 15 && sol.mismatch < 1e-6, || {
        format!("converged={} iterations={} mismatch={:e}", sol.converged, sol.iterations, sol.mismatch)
    })?;
    let gs = gauss_seidel(&state);
    let dv = gs
        .iter()
        .zip(&sol.voltages)
        .map(|((vm, _), v)| (vm - v.magnitude).abs())
        .fold(0.0, f64::max);
    ensure(dv <= 1e-4, || format!("voltage gap to Gauss-Seidel {dv:e}"))?;

    // balance over every state reached by forced sequences on the outage
    let setup = native_setup(5.0);
    let set = [RasPolicy::island(), RasPolicy::load_shed(0.2).unwrap(), RasPolicy::no_action()];
    let mut solves = vec![(state.clone(), sol.clone()), (setup.post.system.clone(), setup.post.solution.clone())];
    for a in &set {
        let Ok(t) = setup.model.advance(&setup.post, a) else { continue };
        solves.push((t.state.system.clone(), t.state.solution.clone()));
        for b in &set {
            if let Ok(u) = setup.model.advance(&t.state, b) {
                solves.push((u.state.system.clone(), u.state.solution.clone()));
            }
        }
    }
    let worst = solves
        .iter()
        .map(|(s, p)| island_balance_residual(s, p))
        .fold(0.0, f64::max);
    ensure(worst < 1e-5, || format!("balance residual {worst:e}"))?;
    Ok(format!(
        "{} iterations, mismatch {:.1e}, Gauss-Seidel gap {dv:.1e}, worst balance {worst:.1e} over {} solves",
        sol.iterations,
        sol.mismatch,
        solves.len()
    ))
}

fn island_detection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for k in 0..1000 {
        let n = rng.gen_range(1..=50);
        let (case, state) = random_topology(&mut rng, n);
        let edges: Vec<(usize, usize)> = case
            .branches
            .iter()
            .enumerate()
            .filter(|(i, _)| state.branch_in_service[*i])
            .map(|(_, b)| (case.bus_position(b.from_bus).unwrap(), case.bus_position(b.to_bus).unwrap()))
            .collect();
        let mut expected: Vec<Vec<u32>> = bfs_components(&state.bus_in_service, &edges)
            .into_iter()
            .map(|c| {
                let mut ids: Vec<u32> = c.into_iter().map(|p| case.buses[p].id).collect();
                ids.sort_unstable();
                ids
            })
            .collect();
        expected.sort_by_key(|c| c[0]);
        ensure(find_islands(&state) == expected, || format!("topology {k} disagrees"))?;
    }

    let range = |a: u32, b: u32| a..=b;
    let set = |parts: &[std::ops::RangeInclusive<u32>]| -> BTreeSet<u32> { parts.iter().cloned().flatten().collect() };
    let level1 = vec![set(&[range(1, 14), range(25, 32), range(37, 39)]), set(&[range(15, 24), range(33, 36)])];
    let level2 = vec![
        set(&[range(1, 3), range(25, 30), range(37, 39)]),
        set(&[range(4, 14), range(31, 32)]),
        set(&[range(15, 22), range(33, 35)]),
        set(&[range(23, 24), range(36, 36)]),
    ];
    let partition = |s: &rasswitch::case::SystemState| -> BTreeSet<BTreeSet<u32>> {
        s.islands.iter().map(|i| i.buses.iter().copied().collect()).collect()
    };
    let base = energized(ieee39());
    let (one, _) = apply_islanding(&base).map_err(|e| e.to_string())?;
    ensure(partition(&one) == level1.into_iter().collect(), || format!("level 1 gives {:?}", partition(&one)))?;
    let (two, _) = apply_islanding(&one).map_err(|e| e.to_string())?;
    ensure(partition(&two) == level2.into_iter().collect(), || format!("level 2 gives {:?}", partition(&two)))?;
    ensure(apply_islanding(&two).is_err(), || "a third level applied".into())?;
    Ok("1000/1000 random topologies agree, both islanding levels reproduce their partitions".into())
}

fn shedding_property() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let count = rng.gen_range(1..=40);
        let loads = (0..count)
            .map(|i| load(i + 1, 2, rng.gen_range(0.0..800.0), rng.gen_range(-150.0..300.0)))
            .collect();
        let case = NetworkCase::validated(
            100.0,
            vec![bus(1, BusKind::Slack), bus(2, BusKind::Load)],
            vec![branch(1, 1, 2, 0.01, 0.1, 100.0)],
            vec![generator(1, 1, 0.0, 1e6, 1.0)],
            loads,
            IslandingScheme::default(),
        )
        .map_err(|e| e.to_string())?;
        let state = energized(case);
        let ratio = rng.gen_range(1e-6..1.0 - 1e-6);
        let before = total_operational_load(&state);
        let after = total_operational_load(&apply_load_shedding(&state, ratio).map_err(|e| e.to_string())?);
        let rel = (after - (1.0 - ratio) * before).abs() / before;
        worst = worst.max(rel);
        ensure(rel <= 1e-9, || format!("set {k}: relative error {rel:e}"))?;
    }
    Ok(format!("100 load sets, worst relative error {worst:.1e}"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let configs = [
        ("default", RunConfig::default()),
        (
            "noisy",
            RunConfig {
                rollouts: 4,
                noise: 0.03,
                seed: 17,
                ..RunConfig::default()
            },
        ),
        (
            "random",
            RunConfig {
                random_n2: true,
                seed: 5,
                ..RunConfig::default()
            },
        ),
        (
            "scripted",
            RunConfig {
                backend: Backend::Scripted,
                ..RunConfig::default()
            },
        ),
    ];
    for (name, cfg) in &configs {
        let mut outputs: Vec<Vec<u8>> = Vec::new();
        for (k, workers) in [1, 1, 2, 8].into_iter().enumerate() {
            let out = dir.path().join(format!("{name}-{k}"));
            let cfg = RunConfig {
                out: out.clone(),
                ..cfg.clone()
            };
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| e.to_string())?;
            pool.install(|| cfg.execute(false)).map_err(|e| e.to_string())?;
            outputs.push(std::fs::read(out.join("trace.json")).map_err(|e| e.to_string())?);
        }
        ensure(outputs.windows(2).all(|w| w[0] == w[1]), || format!("{name}: traces differ"))?;
    }
    Ok(format!("{} configurations byte-identical over repeat runs and 1, 2, 8 workers", configs.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("reward arithmetic", reward_arithmetic),
        ("scripted table reproduction", scripted_reproduction),
        ("switching guarantee on mock MDPs", switching_guarantee),
        ("native dominance", native_dominance),
        ("power flow", powerflow_correctness),
        ("island detection", island_detection),
        ("load shedding", shedding_property),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {detail}", n + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
