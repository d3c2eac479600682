//! Small deterministic finite-horizon MDPs with exactly computable policy
//! values, used to check the switching guarantee independently of any grid.

use rand::Rng;

use super::select_index;

#[derive(Debug, Clone, PartialEq)]
pub struct MockMdp {
    /// `next[s][a]`.
    pub next: Vec<Vec<usize>>,
    /// `reward[s][a]`, in `[0, 1]`.
    pub reward: Vec<Vec<f64>>,
    /// Stationary base policies, `policies[i][s]` = action.
    pub policies: Vec<Vec<usize>>,
}

impl MockMdp {
    /// Up to `max_states` states, 2 or 3 actions and up to `max_policies`
    /// base policies.
    pub fn random<R: Rng>(rng: &mut R, max_states: usize, max_policies: usize) -> Self {
        let n = rng.gen_range(2..=max_states.max(2));
        let actions = rng.gen_range(2..=3);
        let next = (0..n)
            .map(|_| (0..actions).map(|_| rng.gen_range(0..n)).collect())
            .collect();
        let reward = (0..n)
            .map(|_| (0..actions).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let k = rng.gen_range(1..=max_policies.max(1));
        let policies = (0..k)
            .map(|_| (0..n).map(|_| rng.gen_range(0..actions)).collect())
            .collect();
        MockMdp {
            next,
            reward,
            policies,
        }
    }

    pub fn states(&self) -> usize {
        self.next.len()
    }

    /// Exact value of following policy `i` for `steps` steps from `s`.
    pub fn policy_value(&self, i: usize, mut s: usize, steps: usize) -> f64 {
        let mut total = 0.0;
        for _ in 0..steps {
            let a = self.policies[i][s];
            total += self.reward[s][a];
            s = self.next[s][a];
        }
        total
    }

    /// Best value over every action sequence, by exhaustive enumeration.
    pub fn optimal_value(&self, s: usize, steps: usize) -> f64 {
        if steps == 0 {
            return 0.0;
        }
        (0..self.reward[s].len())
            .map(|a| self.reward[s][a] + self.optimal_value(self.next[s][a], steps - 1))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Realized value of policy switching from `s`: at every step, estimate
    /// each base policy's value for the remaining steps, add
    /// `noise(step, state, policy)`, and act as the argmax policy would.
    pub fn switching_value<F>(&self, mut s: usize, steps: usize, mut noise: F) -> f64
    where
        F: FnMut(usize, usize, usize) -> f64,
    {
        let mut total = 0.0;
        for t in 0..steps {
            let estimates: Vec<f64> = (0..self.policies.len())
                .map(|i| self.policy_value(i, s, steps - t) + noise(t, s, i))
                .collect();
            let i = select_index(&estimates).expect("finite estimates");
            let a = self.policies[i][s];
            total += self.reward[s][a];
            s = self.next[s][a];
        }
        total
    }

    pub fn best_policy_value(&self, s: usize, steps: usize) -> f64 {
        (0..self.policies.len())
            .map(|i| self.policy_value(i, s, steps))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
