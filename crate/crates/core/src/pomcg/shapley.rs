use serde::Serialize;

use super::model::Pomcg;
use super::reachable::reachable_beliefs;
use super::solve::{posvi, BeliefMdp, PosviResult};
use crate::error::{Error, Result};
use crate::mcg::{CoalitionMask, SolveOptions};
use crate::numeric::CompensatedSum;
use crate::shapley::coalition_weight;

/// Optimal belief values of every coalition, indexed by mask.
#[derive(Debug, Clone, Serialize)]
pub struct BeliefCoalitionValues {
    pub n_agents: usize,
    pub results: Vec<PosviResult>,
}

impl BeliefCoalitionValues {
    /// `max V^{π_C}(b)` at the belief with probabilities `probs`.
    pub fn value(&self, c: CoalitionMask, probs: &[f64]) -> Result<f64> {
        let r = &self.results[c.index()];
        let key = super::belief::BeliefState { probs: probs.to_vec(), cs_tag: 0 }.key().1;
        r.beliefs
            .iter()
            .position(|b| b.key().1 == key)
            .map(|i| r.v[i])
            .ok_or_else(|| Error::InvalidArgument(format!("belief {probs:?} is not in the set of coalition {c}")))
    }
}

/// Solves POSVI for every coalition on its beliefs reachable within `horizon`.
pub fn solve_all_coalitions(pomcg: &Pomcg, horizon: usize, cap: usize, opts: SolveOptions) -> Result<BeliefCoalitionValues> {
    let n = pomcg.n_agents();
    let results = CoalitionMask::all(n)
        .map(|c| {
            let set = reachable_beliefs(pomcg, c, horizon, cap)?;
            posvi(&BeliefMdp::build(pomcg, set)?, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BeliefCoalitionValues { n_agents: n, results })
}

#[derive(Debug, Clone, Serialize)]
pub struct BeliefCoreReport {
    pub probs: Vec<f64>,
    pub msv: Vec<f64>,
    /// `|Σ_i msv_i - V_N(b)|`
    pub efficiency_gap: f64,
    pub min_slack: f64,
    pub in_core: bool,
}

/// Shapley values at a belief, built from the coalition belief values.
pub fn belief_msv(values: &BeliefCoalitionValues, probs: &[f64]) -> Result<Vec<f64>> {
    let n = values.n_agents;
    (0..n)
        .map(|i| {
            let mut acc = CompensatedSum::new();
            for c in CoalitionMask::grand(n).without(i).subsets() {
                let phi = values.value(c.with(i), probs)? - values.value(c, probs)?;
                acc.add(coalition_weight(n, c.len())? * phi);
            }
            Ok(acc.value())
        })
        .collect()
}

/// Core slack `Σ_{i∈C} msv_i - V_C(b)` over every nonempty coalition.
pub fn belief_core(values: &BeliefCoalitionValues, probs: &[f64], tol: f64) -> Result<BeliefCoreReport> {
    let n = values.n_agents;
    let msv = belief_msv(values, probs)?;
    let mut min_slack = f64::INFINITY;
    for c in CoalitionMask::all(n).filter(|c| !c.is_empty()) {
        let share: f64 = c.members().iter().map(|&i| msv[i]).sum();
        min_slack = min_slack.min(share - values.value(c, probs)?);
    }
    let total: f64 = msv.iter().sum();
    let efficiency_gap = (total - values.value(CoalitionMask::grand(n), probs)?).abs();
    Ok(BeliefCoreReport { probs: probs.to_vec(), msv, efficiency_gap, min_slack, in_core: min_slack >= -tol })
}
