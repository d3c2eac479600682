#![allow(dead_code)]

use std::collections::VecDeque;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use rasswitch::case::{
    Branch, Bus, BusKind, Generator, IslandingScheme, Load, NetworkCase, SystemState,
};
use rasswitch::experiment::{inject_contingency, parse_branch_pairs, ContingencySpec, DEFAULT_CONTINGENCY};
use rasswitch::powerflow::{reconcile_islands, PowerFlowSolution, SolverOptions};
use rasswitch::protection::RelayOptions;
use rasswitch::switching::{NativeModel, NativeState};

pub fn bus(id: u32, kind: BusKind) -> Bus {
    Bus {
        id,
        base_kv: 345.0,
        bus_kind: kind,
        v_min: 0.9,
        v_max: 1.12,
    }
}

pub fn branch(id: u32, from: u32, to: u32, r: f64, x: f64, rating: f64) -> Branch {
    Branch {
        id,
        from_bus: from,
        to_bus: to,
        r,
        x,
        b_shunt: 0.0,
        rating,
        secure_rating: 0.0,
        in_service: true,
    }
}

pub fn generator(id: u32, bus: u32, p_set: f64, p_max: f64, v: f64) -> Generator {
    Generator {
        id,
        bus,
        p_set,
        q_min: -9999.0,
        q_max: 9999.0,
        v_setpoint: v,
        p_max,
        in_service: true,
    }
}

pub fn load(id: u32, bus: u32, p: f64, q: f64) -> Load {
    Load {
        id,
        bus,
        p_demand: p,
        q_demand: q,
        scale: 1.0,
        in_service: true,
    }
}

/// Slack at bus 1 behind a single line feeding a PQ load at bus 2.
pub fn two_bus_case(r: f64, x: f64, p_mw: f64, q_mvar: f64) -> NetworkCase {
    NetworkCase::validated(
        100.0,
        vec![bus(1, BusKind::Slack), bus(2, BusKind::Load)],
        vec![branch(1, 1, 2, r, x, 1000.0)],
        vec![generator(1, 1, 0.0, 10_000.0, 1.0)],
        vec![load(1, 2, p_mw, q_mvar)],
        IslandingScheme::default(),
    )
    .expect("valid two-bus case")
}

/// Closed-form receiving-end voltage magnitude of a lossy line fed at
/// 1.0 pu, all quantities in pu.
pub fn two_bus_voltage(r: f64, x: f64, p: f64, q: f64) -> f64 {
    let a = 1.0 - 2.0 * (p * r + q * x);
    let c = (p * p + q * q) * (r * r + x * x);
    ((a + (a * a - 4.0 * c).sqrt()) / 2.0).sqrt()
}

pub fn energized(case: NetworkCase) -> SystemState {
    let mut s = SystemState::pristine(Arc::new(case));
    reconcile_islands(&mut s);
    s
}

/// Breadth-first components of the active nodes, each sorted, ordered by
/// smallest member.
pub fn bfs_components(active: &[bool], edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let n = active.len();
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        if active[a] && active[b] {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if !active[s] || seen[s] {
            continue;
        }
        let mut comp = vec![s];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out.sort_by_key(|c| c[0]);
    out
}

/// A random case of `n` buses with shuffled bus ids, plus a state with
/// random bus and branch service.
pub fn random_topology<R: Rng>(rng: &mut R, n: usize) -> (NetworkCase, SystemState) {
    let mut ids: Vec<u32> = (1..=n as u32 * 3).collect();
    for i in (1..ids.len()).rev() {
        ids.swap(i, rng.gen_range(0..=i));
    }
    ids.truncate(n);
    let buses = ids
        .iter()
        .enumerate()
        .map(|(i, &id)| bus(id, if i == 0 { BusKind::Slack } else { BusKind::Load }))
        .collect();
    let m = rng.gen_range(0..=2 * n);
    let mut branches = Vec::new();
    for k in 0..m {
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n);
        if a == b {
            b = (a + 1) % n;
        }
        if a == b {
            continue;
        }
        branches.push(branch(k as u32 + 1, ids[a], ids[b], 0.01, 0.1, 100.0));
    }
    let case = NetworkCase::validated(100.0, buses, branches, vec![], vec![], IslandingScheme::default())
        .expect("valid random case");
    let mut state = SystemState::pristine(Arc::new(case.clone()));
    for b in state.bus_in_service.iter_mut() {
        *b = rng.gen_bool(0.85);
    }
    for b in state.branch_in_service.iter_mut() {
        *b = rng.gen_bool(0.7);
    }
    (case, state)
}

/// Largest |generation - load - losses| over converged islands, pu.
pub fn island_balance_residual(state: &SystemState, sol: &PowerFlowSolution) -> f64 {
    let case = &state.case;
    let base = case.base_mva;
    let mut worst: f64 = 0.0;
    for island in &state.islands {
        if !sol.island_of(island.slack).is_some_and(|i| i.converged()) {
            continue;
        }
        let inside = |id: u32| island.buses.binary_search(&id).is_ok();
        let mut total = Complex64::new(0.0, 0.0);
        for (k, g) in case.generators.iter().enumerate() {
            if inside(g.bus) {
                if let Some(s) = sol.generation[k] {
                    total += s;
                }
            }
        }
        for (k, l) in case.loads.iter().enumerate() {
            if state.load_in_service[k] && inside(l.bus) {
                total -= Complex64::new(l.p_demand, l.q_demand) * state.load_scale[k];
            }
        }
        for (k, br) in case.branches.iter().enumerate() {
            if inside(br.from_bus) {
                if let Some(f) = sol.branch_flows[k] {
                    total -= f.losses();
                }
            }
        }
        worst = worst.max(total.norm() / base);
    }
    worst
}

/// Independent Gauss-Seidel power flow on the same case data and dispatch
/// rules: pro-rata governor sharing, generator buses held at their setpoint
/// until their reactive output leaves its limits, then fixed at the limit.
/// Returns (magnitude, angle) per bus position; dead buses read (0, 0).
pub fn gauss_seidel(state: &SystemState) -> Vec<(f64, f64)> {
    let case = &state.case;
    let base = case.base_mva;
    let nb = case.buses.len();
    let pos = |id: u32| case.bus_position(id).unwrap();
    let mut out = vec![(0.0, 0.0); nb];

    for island in &state.islands {
        let members: Vec<usize> = island.buses.iter().map(|&id| pos(id)).collect();
        let n = members.len();
        let local = |p: usize| members.iter().position(|&m| m == p);

        let mut y = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for (k, br) in case.branches.iter().enumerate() {
            if !state.branch_in_service[k] {
                continue;
            }
            let (Some(f), Some(t)) = (local(pos(br.from_bus)), local(pos(br.to_bus))) else {
                continue;
            };
            let ys = Complex64::new(br.r, br.x).inv();
            let ysh = Complex64::new(0.0, br.b_shunt / 2.0);
            y[f][f] += ys + ysh;
            y[t][t] += ys + ysh;
            y[f][t] -= ys;
            y[t][f] -= ys;
        }

        let gens: Vec<usize> = (0..case.generators.len())
            .filter(|&k| state.gen_in_service[k] && local(pos(case.generators[k].bus)).is_some())
            .collect();
        let cap: f64 = gens.iter().map(|&k| case.generators[k].p_max).sum();
        let mut demand_p = vec![0.0; n];
        let mut demand_q = vec![0.0; n];
        for (k, l) in case.loads.iter().enumerate() {
            if state.load_in_service[k] {
                if let Some(i) = local(pos(l.bus)) {
                    demand_p[i] += state.load_scale[k] * l.p_demand;
                    demand_q[i] += state.load_scale[k] * l.q_demand;
                }
            }
        }
        let scheduled: f64 = gens.iter().map(|&k| case.generators[k].p_set).sum();
        let short = demand_p.iter().sum::<f64>() - scheduled;
        let mut gen_p = vec![0.0; n];
        let mut qlo = vec![0.0; n];
        let mut qhi = vec![0.0; n];
        let mut vset = vec![None; n];
        for &k in &gens {
            let g = &case.generators[k];
            let i = local(pos(g.bus)).unwrap();
            gen_p[i] += (g.p_set + short * g.p_max / cap).clamp(0.0, g.p_max);
            qlo[i] += g.q_min;
            qhi[i] += g.q_max;
            vset[i].get_or_insert(g.v_setpoint);
        }
        let slack = local(pos(island.slack)).unwrap();
        let p: Vec<f64> = (0..n).map(|i| (gen_p[i] - demand_p[i]) / base).collect();
        let mut q: Vec<f64> = (0..n).map(|i| -demand_q[i] / base).collect();
        let mut pv: Vec<bool> = (0..n).map(|i| vset[i].is_some() && i != slack).collect();
        let mut v: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(vset[i].unwrap_or(1.0), 0.0))
            .collect();

        let injection = |v: &[Complex64], i: usize| -> Complex64 {
            let current: Complex64 = (0..n).map(|j| y[i][j] * v[j]).sum();
            v[i] * current.conj()
        };

        loop {
            for _sweep in 0..200_000 {
                let mut delta: f64 = 0.0;
                for i in 0..n {
                    if i == slack {
                        continue;
                    }
                    let qi = if pv[i] { injection(&v, i).im } else { q[i] };
                    let others: Complex64 = (0..n).filter(|&j| j != i).map(|j| y[i][j] * v[j]).sum();
                    let mut vi = (Complex64::new(p[i], -qi) / v[i].conj() - others) / y[i][i];
                    if pv[i] {
                        vi = Complex64::from_polar(vset[i].unwrap(), vi.arg());
                    }
                    delta = delta.max((vi - v[i]).norm());
                    v[i] = vi;
                }
                if delta < 1e-13 {
                    break;
                }
            }
            let mut changed = false;
            for i in 0..n {
                if !pv[i] {
                    continue;
                }
                let q_gen = injection(&v, i).im * base + demand_q[i];
                let limit = if q_gen > qhi[i] + 1e-4 {
                    Some(qhi[i])
                } else if q_gen < qlo[i] - 1e-4 {
                    Some(qlo[i])
                } else {
                    None
                };
                if let Some(lim) = limit {
                    pv[i] = false;
                    q[i] = (lim - demand_q[i]) / base;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for (i, &p) in members.iter().enumerate() {
            out[p] = (v[i].norm(), v[i].arg());
        }
    }
    out
}

pub struct NativeSetup {
    pub model: NativeModel,
    pub base: NativeState,
    pub post: NativeState,
    pub events: Vec<rasswitch::case::TripEvent>,
    pub spec: ContingencySpec,
    pub detected: bool,
}

/// The built-in 39-bus case, solved, with the default N-2 applied.
pub fn native_setup(interval: f64) -> NativeSetup {
    let case = Arc::new(rasswitch::case::ieee39());
    let mut system = SystemState::pristine(Arc::clone(&case));
    reconcile_islands(&mut system);
    let probe = NativeModel::new(system.clone(), interval, RelayOptions::default(), SolverOptions::default());
    let base = probe.settle(system);
    let model = NativeModel {
        baseline: base.system.clone(),
        ..probe
    };
    let ids = parse_branch_pairs(&case, DEFAULT_CONTINGENCY).unwrap();
    let (post, events, spec, detected) =
        inject_contingency(&model, &base, &ContingencySpec::explicit(ids)).unwrap();
    NativeSetup {
        model,
        base,
        post,
        events,
        spec,
        detected,
    }
}

/// One tabulated dispatch: load MVA, saved, reward, and buses / generators /
/// loads / lines lost.
pub type Cell = (f64, bool, f64, [usize; 4]);

/// The reference enumeration of the 19-20 / 2-25 outage: forced
/// sequence and the tabulated cell of each dispatch, `None` where the table
/// shows a dash.
pub fn tabulated_columns() -> Vec<([&'static str; 3], [Option<Cell>; 3])> {
    let i1 = Some((4759.0, false, 0.366, [7, 2, 4, 13]));
    let ls1 = Some((5224.0, false, 0.401, [3, 2, 1, 6]));
    vec![
        (["I", "I", "I"], [i1, Some((3848.0, false, 0.296, [14, 3, 8, 21])), None]),
        (["LS", "LS", "LS"], [ls1, Some((2922.0, true, 0.725, [21, 5, 9, 27])), None]),
        (
            ["I", "I", "LS"],
            [
                i1,
                Some((3848.0, false, 0.296, [14, 3, 8, 21])),
                Some((3463.0, true, 0.766, [14, 3, 8, 21])),
            ],
        ),
        (["I", "LS", "I"], [i1, Some((4283.0, true, 0.829, [7, 2, 4, 13])), None]),
        (["I", "LS", "LS"], [i1, Some((4283.0, true, 0.829, [7, 2, 4, 13])), None]),
        (["LS", "LS", "I"], [ls1, Some((2922.0, true, 0.725, [21, 5, 9, 27])), None]),
        (["LS", "I", "LS"], [ls1, Some((4749.0, true, 0.865, [5, 2, 3, 9])), None]),
        (["LS", "I", "I"], [ls1, Some((4749.0, true, 0.865, [5, 2, 3, 9])), None]),
    ]
}

/// The value-function summary: (load MVA, saved, reward) of the final state
/// under {I}, {LS} and {I, LS}.
pub const TABULATED_EXPERIMENTS: [(f64, bool, f64); 3] =
    [(3848.0, false, 0.296), (2922.0, true, 0.725), (4749.0, true, 0.865)];

pub const TABULATED_TOTAL: f64 = 6501.0;
