use serde::Serialize;

use super::marginal::{coalition_weight, max_with_member_fixed};
use super::values::CoalitionValues;
use crate::error::{Error, Result};
use crate::mcg::{CoalitionMask, TabularMdp};
use crate::numeric::{argmax, CompensatedSum};

/// Largest agent count accepted by the exact estimator.
pub const EXACT_MAX_AGENTS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SampleMode {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

/// Per-agent Markov Shapley values `v[i][s]` and Q-values `q[i][s][a_i]`.
#[derive(Debug, Clone, Serialize)]
pub struct MsvTable {
    pub v: Vec<Vec<f64>>,
    pub q: Vec<Vec<Vec<f64>>>,
    pub sample_mode: SampleMode,
    pub source_tol: f64,
}

impl MsvTable {
    pub fn n_agents(&self) -> usize {
        self.v.len()
    }

    pub fn n_states(&self) -> usize {
        self.v.first().map_or(0, Vec::len)
    }

    /// `max_{a_i} Q^φ_i(s, a_i)`
    pub fn greedy_value(&self, i: usize, s: usize) -> f64 {
        self.q[i][s].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Lowest-index maximizer of `Q^φ_i(s, ·)`.
    pub fn greedy_action(&self, i: usize, s: usize) -> usize {
        argmax(&self.q[i][s])
    }
}

/// One state of the exact table: `(v_i(s), q_i(s, ·))` per agent.
#[derive(Debug, Clone, PartialEq)]
pub struct MsqSlice {
    pub v: Vec<f64>,
    pub q: Vec<Vec<f64>>,
}

fn check_capacity(n: usize) -> Result<()> {
    if n > EXACT_MAX_AGENTS {
        return Err(Error::Capacity(format!(
            "exact Shapley values need 2^(n-1) coalitions per agent; {n} agents exceed {EXACT_MAX_AGENTS}, use Monte-Carlo sampling"
        )));
    }
    Ok(())
}

/// Exact Shapley (Q-)values of every agent at state `s`.
pub fn exact_msq(values: &CoalitionValues<'_>, s: usize) -> Result<MsqSlice> {
    let n = values.n_agents();
    check_capacity(n)?;
    values.check_state(s)?;
    let actions = values.game().actions_per_agent();
    let grand = CoalitionMask::grand(n);
    let mut v = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    for i in 0..n {
        let mut vi = CompensatedSum::new();
        let mut qi: Vec<CompensatedSum> = vec![CompensatedSum::new(); actions[i]];
        for c in grand.without(i).subsets() {
            let w = coalition_weight(n, c.len())?;
            let base = values.value(c, s);
            let joined = c.with(i);
            vi.add(w * (values.value(joined, s) - base));
            for (a, acc) in qi.iter_mut().enumerate() {
                acc.add(w * (max_with_member_fixed(values, joined, i, a, s) - base));
            }
        }
        v.push(vi.value());
        q.push(qi.iter().map(CompensatedSum::value).collect());
    }
    Ok(MsqSlice { v, q })
}

/// Exact table over all states.
pub fn exact_msq_table(values: &CoalitionValues<'_>) -> Result<MsvTable> {
    let n = values.n_agents();
    check_capacity(n)?;
    let n_states = values.game().n_states();
    let mut v = vec![Vec::with_capacity(n_states); n];
    let mut q = vec![Vec::with_capacity(n_states); n];
    for s in 0..n_states {
        let slice = exact_msq(values, s)?;
        for i in 0..n {
            v[i].push(slice.v[i]);
            q[i].push(slice.q[i].clone());
        }
    }
    Ok(MsvTable { v, q, sample_mode: SampleMode::Exact, source_tol: values.solve_tol() })
}
