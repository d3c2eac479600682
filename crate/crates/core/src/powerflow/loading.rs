use super::PowerFlowSolution;
use crate::case::NetworkCase;

/// Per-branch loading relative to the secure rating: the larger end flow
/// divided by `secure_rating`. `None` for branches that carry no solution.
pub fn branch_loading(solution: &PowerFlowSolution, case: &NetworkCase) -> Vec<Option<f64>> {
    solution
        .branch_flows
        .iter()
        .zip(&case.branches)
        .map(|(flow, br)| {
            flow.map(|f| {
                let s = f.max_apparent();
                if br.secure_rating > 0.0 {
                    s / br.secure_rating
                } else if s > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            })
        })
        .collect()
}
