use serde::Serialize;

use super::values::CoalitionValues;
use crate::error::{Error, Result};
use crate::mcg::{CoalitionMask, TabularMdp};
use crate::numeric::CompensatedSum;

#[derive(Debug, Clone, Serialize)]
pub struct CoalitionSlack {
    pub coalition: CoalitionMask,
    /// `Σ_{i∈C} x_i(s) - max V^{π_C}(s)` per state.
    pub slack: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoreReport {
    pub slacks: Vec<CoalitionSlack>,
    pub min_slack: f64,
    pub tol: f64,
    pub in_core: bool,
}

impl CoreReport {
    pub fn slack(&self, c: CoalitionMask) -> Option<&[f64]> {
        self.slacks.iter().find(|e| e.coalition == c).map(|e| e.slack.as_slice())
    }
}

pub(crate) fn check_payoff_shape(payoffs: &[Vec<f64>], n_agents: usize, n_states: usize) -> Result<()> {
    if payoffs.len() != n_agents {
        return Err(Error::Shape(format!("{} payoff rows for {n_agents} agents", payoffs.len())));
    }
    if let Some((i, row)) = payoffs.iter().enumerate().find(|(_, r)| r.len() != n_states) {
        return Err(Error::Shape(format!("payoff row {i} has {} entries for {n_states} states", row.len())));
    }
    Ok(())
}

/// Slack of every nonempty coalition at every state for payoffs `x[i][s]`.
pub fn check_markov_core(values: &CoalitionValues<'_>, payoffs: &[Vec<f64>], tol: f64) -> Result<CoreReport> {
    let n = values.n_agents();
    let n_states = values.game().n_states();
    check_payoff_shape(payoffs, n, n_states)?;
    let mut slacks = Vec::with_capacity((1 << n) - 1);
    let mut min_slack = f64::INFINITY;
    for c in CoalitionMask::all(n).filter(|c| !c.is_empty()) {
        let members = c.members();
        let slack: Vec<f64> = (0..n_states)
            .map(|s| {
                let mut total = CompensatedSum::new();
                members.iter().for_each(|&i| total.add(payoffs[i][s]));
                total.add(-values.value(c, s));
                total.value()
            })
            .collect();
        min_slack = slack.iter().copied().fold(min_slack, f64::min);
        slacks.push(CoalitionSlack { coalition: c, slack });
    }
    Ok(CoreReport { slacks, min_slack, tol, in_core: min_slack >= -tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::fixtures;
    use crate::mcg::SolveOptions;
    use crate::shapley::exact::exact_msq_table;

    #[test]
    fn g1_shapley_is_in_core() {
        let g = fixtures::g1();
        let values = CoalitionValues::solve(&g, SolveOptions::default()).unwrap();
        let x = vec![vec![1.5, 0.0], vec![2.5, 0.0]];
        let r = check_markov_core(&values, &x, 1e-8).unwrap();
        assert!(r.in_core);
        let s = |bits| r.slack(CoalitionMask::new(bits, 2).unwrap()).unwrap()[0];
        assert!((s(0b01) - 0.5).abs() < 1e-9);
        assert!((s(0b10) - 0.5).abs() < 1e-9);
        assert!(s(0b11).abs() < 1e-9);
    }

    #[test]
    fn majority_shapley_is_not_in_core() {
        let g = fixtures::g_majority();
        let values = CoalitionValues::solve(&g, SolveOptions::default()).unwrap();
        let x = exact_msq_table(&values).unwrap().v;
        let r = check_markov_core(&values, &x, 1e-8).unwrap();
        assert!(!r.in_core);
        let pair = r.slack(CoalitionMask::from_members(3, &[0, 1]).unwrap()).unwrap()[0];
        assert!((pair + 1.0 / 3.0).abs() < 1e-9, "{pair}");
        assert!((r.min_slack + 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn worker_takes_everything_on_dummy_fixture() {
        let g = fixtures::g_dummy();
        let values = CoalitionValues::solve(&g, SolveOptions::default()).unwrap();
        let grand = values.table(CoalitionMask::grand(2)).v.clone();
        let x = vec![vec![0.0; 2], grand];
        assert!(check_markov_core(&values, &x, 1e-8).unwrap().in_core);
    }

    #[test]
    fn wrong_shape_is_rejected() {
        let g = fixtures::g1();
        let values = CoalitionValues::solve(&g, SolveOptions::default()).unwrap();
        assert!(matches!(check_markov_core(&values, &[vec![0.0; 2]], 1e-8), Err(Error::Shape(_))));
        assert!(matches!(check_markov_core(&values, &[vec![0.0; 2], vec![0.0]], 1e-8), Err(Error::Shape(_))));
    }
}
