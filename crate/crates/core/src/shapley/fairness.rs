use serde::Serialize;

use super::exact::MsvTable;
use super::values::CoalitionValues;
use crate::error::{Error, Result};
use crate::mcg::{CoalitionMask, TabularMdp};
use crate::numeric::{argmax_with_ties, TIE_EPS};

#[derive(Debug, Clone, Serialize)]
pub struct FairnessReport {
    /// `|Σ_i max_{a_i} Q^φ_i(s, a_i) - max_a Q*(s, a)|` per state.
    pub efficiency_gap: Vec<f64>,
    pub efficiency: bool,
    /// Agents whose actions never affect reward or transition.
    pub dummies: Vec<usize>,
    pub dummy: bool,
    /// Largest `|v_i(s) - v_j(s)|` for each declared symmetric pair.
    pub symmetry_gap: Vec<((usize, usize), f64)>,
    pub symmetry: bool,
    pub tol: f64,
}

impl FairnessReport {
    pub fn passes(&self) -> bool {
        self.efficiency && self.dummy && self.symmetry
    }
}

pub fn verify_fairness(
    values: &CoalitionValues<'_>,
    msv: &MsvTable,
    symmetric_pairs: &[(usize, usize)],
    tol: f64,
) -> Result<FairnessReport> {
    let game = values.game();
    let n = game.n_agents();
    let n_states = game.n_states();
    super::core::check_payoff_shape(&msv.v, n, n_states)?;
    if msv.q.len() != n || msv.q.iter().any(|qi| qi.len() != n_states) {
        return Err(Error::Shape("Shapley Q-table does not match the game".into()));
    }
    let grand = values.table(CoalitionMask::grand(n));
    let efficiency_gap: Vec<f64> = (0..n_states)
        .map(|s| {
            let best = grand.q_row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let total: f64 = (0..n).map(|i| msv.greedy_value(i, s)).sum();
            (total - best).abs()
        })
        .collect();
    let dummies: Vec<usize> = (0..n).filter(|&i| game.is_dummy(i)).collect();
    let dummy = dummies.iter().all(|&i| msv.v[i].iter().all(|x| x.abs() <= tol));
    let mut symmetry_gap = Vec::with_capacity(symmetric_pairs.len());
    for &(i, j) in symmetric_pairs {
        if i >= n || j >= n {
            return Err(Error::InvalidArgument(format!("symmetric pair ({i}, {j}) names an unknown agent")));
        }
        let gap = (0..n_states).map(|s| (msv.v[i][s] - msv.v[j][s]).abs()).fold(0.0, f64::max);
        symmetry_gap.push(((i, j), gap));
    }
    Ok(FairnessReport {
        efficiency: efficiency_gap.iter().all(|&g| g <= tol),
        efficiency_gap,
        dummy,
        dummies,
        symmetry: symmetry_gap.iter().all(|&(_, g)| g <= tol),
        symmetry_gap,
        tol,
    })
}

/// Per state, whether the joint argmax is the tuple of per-agent argmaxes.
///
/// `joint_q[s][a]` uses the game's joint indexing (agent 0 fastest);
/// `per_agent[i][s][a_i]`. Ties go to the lowest index on both sides.
pub fn check_igm(actions_per_agent: &[usize], joint_q: &[Vec<f64>], per_agent: &[Vec<Vec<f64>>]) -> Result<Vec<bool>> {
    let n_joint: usize = actions_per_agent.iter().product();
    if per_agent.len() != actions_per_agent.len() {
        return Err(Error::Shape(format!(
            "{} per-agent tables for {} agents",
            per_agent.len(),
            actions_per_agent.len()
        )));
    }
    let n_states = joint_q.len();
    for (i, table) in per_agent.iter().enumerate() {
        if table.len() != n_states || table.iter().any(|row| row.len() != actions_per_agent[i]) {
            return Err(Error::Shape(format!("per-agent table {i} does not match the joint table")));
        }
    }
    if joint_q.iter().any(|row| row.len() != n_joint) {
        return Err(Error::Shape(format!("joint rows must have {n_joint} entries")));
    }
    Ok((0..n_states)
        .map(|s| {
            let mut rest = argmax_with_ties(&joint_q[s], TIE_EPS);
            per_agent.iter().zip(actions_per_agent).all(|(table, &k)| {
                let a = rest % k;
                rest /= k;
                a == argmax_with_ties(&table[s], TIE_EPS)
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::fixtures;
    use crate::mcg::SolveOptions;
    use crate::shapley::exact::exact_msq_table;

    fn joint_rows(values: &CoalitionValues<'_>) -> Vec<Vec<f64>> {
        let t = values.table(CoalitionMask::grand(values.n_agents()));
        (0..values.game().n_states()).map(|s| t.q_row(s).to_vec()).collect()
    }

    #[test]
    fn catalog_is_fair() {
        for f in fixtures::catalog() {
            let values = CoalitionValues::solve(&f.game, SolveOptions::default()).unwrap();
            let msv = exact_msq_table(&values).unwrap();
            let r = verify_fairness(&values, &msv, &f.symmetric_pairs, 1e-8).unwrap();
            assert!(r.passes(), "{}: {r:?}", f.name);
        }
    }

    #[test]
    fn dummy_is_detected() {
        let g = fixtures::g_dummy();
        let values = CoalitionValues::solve(&g, SolveOptions::default()).unwrap();
        let msv = exact_msq_table(&values).unwrap();
        let r = verify_fairness(&values, &msv, &[], 1e-10).unwrap();
        assert_eq!(r.dummies, vec![0]);
        assert!(r.dummy);
    }

    #[test]
    fn unequal_payoffs_break_symmetry() {
        let g = fixtures::g_sym();
        let values = CoalitionValues::solve(&g, SolveOptions::default()).unwrap();
        let mut msv = exact_msq_table(&values).unwrap();
        msv.v[0][0] += 0.5;
        let r = verify_fairness(&values, &msv, &[(0, 1)], 1e-8).unwrap();
        assert!(!r.symmetry);
    }

    #[test]
    fn g1_shapley_tables_satisfy_igm() {
        let g = fixtures::g1();
        let values = CoalitionValues::solve(&g, SolveOptions::default()).unwrap();
        let msv = exact_msq_table(&values).unwrap();
        let ok = check_igm(g.actions_per_agent(), &joint_rows(&values), &msv.q).unwrap();
        assert!(ok.iter().all(|&b| b));
    }

    #[test]
    fn zero_tables_miss_a_working_optimum() {
        let g = fixtures::g1();
        let values = CoalitionValues::solve(&g, SolveOptions::default()).unwrap();
        let zeros = vec![vec![vec![0.0; 2]; 2]; 2];
        let ok = check_igm(g.actions_per_agent(), &joint_rows(&values), &zeros).unwrap();
        assert!(!ok[0]);
    }

    #[test]
    fn single_agent_always_holds() {
        let joint = vec![vec![0.3, 0.9, 0.1], vec![2.0, 2.0, 1.0]];
        let ok = check_igm(&[3], &joint, &[joint.clone()]).unwrap();
        assert_eq!(ok, vec![true, true]);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        assert!(check_igm(&[2, 2], &[vec![0.0; 4]], &[vec![vec![0.0; 2]]]).is_err());
        assert!(check_igm(&[2], &[vec![0.0; 3]], &[vec![vec![0.0; 2]]]).is_err());
    }
}
