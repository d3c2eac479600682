use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{BranchFlow, IslandSolution, IslandStatus, PowerFlowSolution, SolverOptions};
use crate::case::{Island, NetworkCase, Phasor, SystemState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Slack,
    Pv,
    Pq,
}

/// Per-island working data in local bus numbering.
struct IslandModel<'a> {
    case: &'a NetworkCase,
    /// Case bus positions, ascending by bus id.
    positions: Vec<usize>,
    g: DMatrix<f64>,
    b: DMatrix<f64>,
    kind: Vec<Kind>,
    /// Scheduled net injections, pu.
    p_spec: Vec<f64>,
    q_spec: Vec<f64>,
    /// Load at each bus, pu.
    p_load: Vec<f64>,
    q_load: Vec<f64>,
    v_set: Vec<f64>,
    q_min: Vec<f64>,
    q_max: Vec<f64>,
    slack: usize,
    capacity_mw: f64,
}

impl<'a> IslandModel<'a> {
    fn build(state: &'a SystemState, island: &Island) -> Self {
        let case: &NetworkCase = &state.case;
        let base = case.base_mva;
        let positions: Vec<usize> = island
            .buses
            .iter()
            .map(|&id| case.bus_position(id).expect("island bus exists"))
            .collect();
        let n = positions.len();
        let local = |bus_id: u32| island.buses.binary_search(&bus_id).ok();

        let mut g = DMatrix::zeros(n, n);
        let mut b = DMatrix::zeros(n, n);
        for (k, br) in case.branches.iter().enumerate() {
            if !state.branch_in_service[k] {
                continue;
            }
            let (Some(f), Some(t)) = (local(br.from_bus), local(br.to_bus)) else {
                continue;
            };
            let y = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
            let half_b = br.b_shunt / 2.0;
            g[(f, f)] += y.re;
            g[(t, t)] += y.re;
            b[(f, f)] += y.im + half_b;
            b[(t, t)] += y.im + half_b;
            g[(f, t)] -= y.re;
            g[(t, f)] -= y.re;
            b[(f, t)] -= y.im;
            b[(t, f)] -= y.im;
        }

        let mut kind = vec![Kind::Pq; n];
        let mut p_spec = vec![0.0; n];
        let mut p_load = vec![0.0; n];
        let mut q_load = vec![0.0; n];
        let mut v_set = vec![1.0; n];
        let mut q_min = vec![0.0; n];
        let mut q_max = vec![0.0; n];
        let mut has_gen = vec![false; n];
        let mut capacity_mw = 0.0;
        let slack = local(island.slack).expect("slack inside island");

        for (k, gen) in case.generators.iter().enumerate() {
            if !state.gen_in_service[k] {
                continue;
            }
            let Some(i) = local(gen.bus) else { continue };
            if !has_gen[i] {
                v_set[i] = gen.v_setpoint;
                has_gen[i] = true;
            }
            p_spec[i] += gen.p_set / base;
            q_min[i] += gen.q_min / base;
            q_max[i] += gen.q_max / base;
            capacity_mw += gen.p_max;
        }
        for (k, load) in case.loads.iter().enumerate() {
            if !state.load_in_service[k] {
                continue;
            }
            let Some(i) = local(load.bus) else { continue };
            let scale = state.load_scale[k];
            p_load[i] += scale * load.p_demand / base;
            q_load[i] += scale * load.q_demand / base;
        }
        // settled governor response: the island's scheduled imbalance is
        // shared by all units pro rata to p_max; the slack keeps the losses
        let imbalance: f64 = p_load.iter().sum::<f64>() - p_spec.iter().sum::<f64>();
        if capacity_mw > 0.0 && imbalance != 0.0 {
            for (k, gen) in case.generators.iter().enumerate() {
                if !state.gen_in_service[k] {
                    continue;
                }
                let Some(i) = local(gen.bus) else { continue };
                let set = gen.p_set / base;
                let share = imbalance * gen.p_max / capacity_mw;
                let dispatched = (set + share).clamp(0.0, gen.p_max / base);
                p_spec[i] += dispatched - set;
            }
        }
        for i in 0..n {
            if has_gen[i] {
                kind[i] = Kind::Pv;
            }
            p_spec[i] -= p_load[i];
        }
        kind[slack] = Kind::Slack;
        let q_spec = q_load.iter().map(|q| -q).collect();

        IslandModel {
            case,
            positions,
            g,
            b,
            kind,
            p_spec,
            q_spec,
            p_load,
            q_load,
            v_set,
            q_min,
            q_max,
            slack,
            capacity_mw,
        }
    }

    fn injections(&self, vm: &[f64], va: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = vm.len();
        let mut p = vec![0.0; n];
        let mut q = vec![0.0; n];
        for i in 0..n {
            let (mut pi, mut qi) = (0.0, 0.0);
            for j in 0..n {
                let (gij, bij) = (self.g[(i, j)], self.b[(i, j)]);
                if gij == 0.0 && bij == 0.0 {
                    continue;
                }
                let (s, c) = (va[i] - va[j]).sin_cos();
                pi += vm[j] * (gij * c + bij * s);
                qi += vm[j] * (gij * s - bij * c);
            }
            p[i] = vm[i] * pi;
            q[i] = vm[i] * qi;
        }
        (p, q)
    }

    /// Newton-Raphson on the current bus classification. Returns status,
    /// iterations and final mismatch; `vm`/`va` hold the last iterate.
    fn newton(&self, vm: &mut [f64], va: &mut [f64], opts: &SolverOptions) -> (IslandStatus, usize, f64) {
        let n = vm.len();
        // unknown ordering: angles of all non-slack buses, then magnitudes of PQ buses
        let ang: Vec<usize> = (0..n).filter(|&i| self.kind[i] != Kind::Slack).collect();
        let mag: Vec<usize> = (0..n).filter(|&i| self.kind[i] == Kind::Pq).collect();
        let dim = ang.len() + mag.len();

        let mut mismatch = f64::INFINITY;
        for it in 0..=opts.max_iterations {
            let (p, q) = self.injections(vm, va);
            let mut f = DVector::zeros(dim);
            for (r, &i) in ang.iter().enumerate() {
                f[r] = self.p_spec[i] - p[i];
            }
            for (r, &i) in mag.iter().enumerate() {
                f[ang.len() + r] = self.q_spec[i] - q[i];
            }
            mismatch = f.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            if !mismatch.is_finite() {
                return (IslandStatus::Diverged, it, f64::INFINITY);
            }
            if mismatch <= opts.tolerance {
                return (IslandStatus::Converged, it, mismatch);
            }
            if it == opts.max_iterations {
                break;
            }

            let jac = self.jacobian(vm, va, &p, &q, &ang, &mag);
            let Some(dx) = jac.lu().solve(&f) else {
                return (IslandStatus::SingularJacobian, it, f64::INFINITY);
            };
            if dx.iter().any(|x| !x.is_finite()) {
                return (IslandStatus::SingularJacobian, it, f64::INFINITY);
            }
            for (r, &i) in ang.iter().enumerate() {
                va[i] += dx[r];
            }
            for (r, &i) in mag.iter().enumerate() {
                vm[i] += dx[ang.len() + r];
            }
            if vm.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return (IslandStatus::Diverged, it + 1, mismatch);
            }
        }
        (IslandStatus::Diverged, opts.max_iterations, mismatch)
    }

    fn jacobian(
        &self,
        vm: &[f64],
        va: &[f64],
        p: &[f64],
        q: &[f64],
        ang: &[usize],
        mag: &[usize],
    ) -> DMatrix<f64> {
        let na = ang.len();
        let dim = na + mag.len();
        let mut jac = DMatrix::zeros(dim, dim);

        // dP/dθ and dQ/dθ columns
        for (c, &j) in ang.iter().enumerate() {
            for (r, &i) in ang.iter().enumerate() {
                jac[(r, c)] = self.dp_dtheta(i, j, vm, va, q);
            }
            for (r, &i) in mag.iter().enumerate() {
                jac[(na + r, c)] = self.dq_dtheta(i, j, vm, va, p);
            }
        }
        // dP/dV and dQ/dV columns
        for (c, &j) in mag.iter().enumerate() {
            for (r, &i) in ang.iter().enumerate() {
                jac[(r, na + c)] = self.dp_dv(i, j, vm, va, p);
            }
            for (r, &i) in mag.iter().enumerate() {
                jac[(na + r, na + c)] = self.dq_dv(i, j, vm, va, q);
            }
        }
        jac
    }

    fn dp_dtheta(&self, i: usize, j: usize, vm: &[f64], va: &[f64], q: &[f64]) -> f64 {
        if i == j {
            -q[i] - self.b[(i, i)] * vm[i] * vm[i]
        } else {
            let (s, c) = (va[i] - va[j]).sin_cos();
            vm[i] * vm[j] * (self.g[(i, j)] * s - self.b[(i, j)] * c)
        }
    }

    fn dq_dtheta(&self, i: usize, j: usize, vm: &[f64], va: &[f64], p: &[f64]) -> f64 {
        if i == j {
            p[i] - self.g[(i, i)] * vm[i] * vm[i]
        } else {
            let (s, c) = (va[i] - va[j]).sin_cos();
            -vm[i] * vm[j] * (self.g[(i, j)] * c + self.b[(i, j)] * s)
        }
    }

    fn dp_dv(&self, i: usize, j: usize, vm: &[f64], va: &[f64], p: &[f64]) -> f64 {
        if i == j {
            p[i] / vm[i] + self.g[(i, i)] * vm[i]
        } else {
            let (s, c) = (va[i] - va[j]).sin_cos();
            vm[i] * (self.g[(i, j)] * c + self.b[(i, j)] * s)
        }
    }

    fn dq_dv(&self, i: usize, j: usize, vm: &[f64], va: &[f64], q: &[f64]) -> f64 {
        if i == j {
            q[i] / vm[i] - self.b[(i, i)] * vm[i]
        } else {
            let (s, c) = (va[i] - va[j]).sin_cos();
            vm[i] * (self.g[(i, j)] * s - self.b[(i, j)] * c)
        }
    }
}

struct IslandResult {
    solution: IslandSolution,
    vm: Vec<f64>,
    va: Vec<f64>,
    /// Net generation per local bus (MW + j MVAr).
    bus_generation: Vec<Complex64>,
}

fn solve_island(state: &SystemState, island: &Island, opts: &SolverOptions) -> IslandResult {
    let mut model = IslandModel::build(state, island);
    let n = model.positions.len();
    let base = model.case.base_mva;

    let mut vm = vec![1.0; n];
    let mut va = vec![0.0; n];
    if !opts.flat_start {
        let slack_angle = state.voltages[model.positions[model.slack]].angle;
        for (i, &pos) in model.positions.iter().enumerate() {
            let v = state.voltages[pos];
            if v.magnitude > 0.0 && v.magnitude.is_finite() && v.angle.is_finite() {
                vm[i] = v.magnitude;
                va[i] = v.angle - slack_angle;
            }
        }
    }
    for i in 0..n {
        if model.kind[i] != Kind::Pq {
            vm[i] = model.v_set[i];
        }
    }
    va[model.slack] = 0.0;

    let mut iterations = 0;
    let (status, mismatch) = loop {
        let (status, its, mismatch) = model.newton(&mut vm, &mut va, opts);
        iterations += its;
        if status != IslandStatus::Converged {
            break (status, mismatch);
        }
        // PV -> PQ switching at reactive limits
        let (_, q) = model.injections(&vm, &va);
        let mut switched = false;
        for i in 0..n {
            if model.kind[i] != Kind::Pv {
                continue;
            }
            let q_gen = q[i] + model.q_load[i];
            let limit = if q_gen > model.q_max[i] + opts.tolerance {
                Some(model.q_max[i])
            } else if q_gen < model.q_min[i] - opts.tolerance {
                Some(model.q_min[i])
            } else {
                None
            };
            if let Some(lim) = limit {
                model.kind[i] = Kind::Pq;
                model.q_spec[i] = lim - model.q_load[i];
                switched = true;
            }
        }
        if !switched {
            break (status, mismatch);
        }
    };

    let (p, q) = model.injections(&vm, &va);
    let bus_generation: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(p[i] + model.p_load[i], q[i] + model.q_load[i]) * base)
        .collect();
    let generation_mw: f64 = bus_generation.iter().map(|s| s.re).sum();

    let status = if status == IslandStatus::Converged
        && generation_mw > model.capacity_mw + opts.tolerance * base
    {
        IslandStatus::CapacityExceeded
    } else {
        status
    };

    IslandResult {
        solution: IslandSolution {
            buses: island.buses.clone(),
            slack: island.slack,
            status,
            iterations,
            mismatch,
            generation_mw,
            capacity_mw: model.capacity_mw,
        },
        vm,
        va,
        bus_generation,
    }
}

/// Solves every energized island of `state` independently and merges the
/// results. Non-convergence is reported through the solution, never as an
/// error.
pub fn solve_powerflow(state: &SystemState, opts: &SolverOptions) -> PowerFlowSolution {
    let case: &NetworkCase = &state.case;
    let base = case.base_mva;
    let mut voltages = vec![Phasor::DEAD; case.buses.len()];
    let mut generation: Vec<Option<Complex64>> = vec![None; case.generators.len()];
    let mut islands = Vec::with_capacity(state.islands.len());

    for island in &state.islands {
        let res = solve_island(state, island, opts);
        for (i, &id) in island.buses.iter().enumerate() {
            let pos = case.bus_position(id).expect("island bus exists");
            voltages[pos] = Phasor {
                magnitude: res.vm[i],
                angle: res.va[i],
            };
            split_generation(state, id, res.bus_generation[i], &mut generation);
        }
        islands.push(res.solution);
    }

    let branch_flows = case
        .branches
        .iter()
        .enumerate()
        .map(|(k, br)| {
            if !state.branch_in_service[k] {
                return None;
            }
            let f = case.bus_position(br.from_bus)?;
            let t = case.bus_position(br.to_bus)?;
            if !(state.bus_in_service[f] && state.bus_in_service[t]) {
                return None;
            }
            let vf = Complex64::from_polar(voltages[f].magnitude, voltages[f].angle);
            let vt = Complex64::from_polar(voltages[t].magnitude, voltages[t].angle);
            let y = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
            let ysh = Complex64::new(0.0, br.b_shunt / 2.0);
            let i_from = (vf - vt) * y + vf * ysh;
            let i_to = (vt - vf) * y + vt * ysh;
            Some(BranchFlow {
                from: vf * i_from.conj() * base,
                to: vt * i_to.conj() * base,
            })
        })
        .collect();

    let converged = islands.iter().all(|i| i.converged());
    let mismatch = islands.iter().map(|i| i.mismatch).fold(0.0, f64::max);
    let iterations = islands.iter().map(|i| i.iterations).max().unwrap_or(0);
    PowerFlowSolution {
        converged,
        voltages,
        branch_flows,
        generation,
        mismatch,
        iterations,
        islands,
    }
}

/// Shares a bus's generation among its in-service units: real power pro
/// rata to `p_max`, reactive power pro rata to reactive range above `q_min`.
fn split_generation(state: &SystemState, bus: u32, total: Complex64, out: &mut [Option<Complex64>]) {
    let case = &state.case;
    let units: Vec<usize> = case
        .generators
        .iter()
        .enumerate()
        .filter(|(k, g)| state.gen_in_service[*k] && g.bus == bus)
        .map(|(k, _)| k)
        .collect();
    match units.as_slice() {
        [] => {}
        [only] => out[*only] = Some(total),
        many => {
            let p_cap: f64 = many.iter().map(|&k| case.generators[k].p_max).sum();
            let q_lo: f64 = many.iter().map(|&k| case.generators[k].q_min).sum();
            let q_range: f64 = many
                .iter()
                .map(|&k| case.generators[k].q_max - case.generators[k].q_min)
                .sum();
            for &k in many {
                let gen = &case.generators[k];
                let p_share = if p_cap > 0.0 { gen.p_max / p_cap } else { 1.0 / many.len() as f64 };
                let q = if q_range > 0.0 {
                    gen.q_min + (total.im - q_lo) * (gen.q_max - gen.q_min) / q_range
                } else {
                    total.im / many.len() as f64
                };
                out[k] = Some(Complex64::new(total.re * p_share, q));
            }
        }
    }
}
