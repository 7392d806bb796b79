use rayon::prelude::*;
use serde::Serialize;

use super::weights::{contraction_condition, SboWeights};
use crate::error::{Error, Result};
use crate::mcg::{joint_value_iteration, MarkovConvexGame, SolveOptions, TabularMdp};
use crate::numeric::{argmax_with_ties, max_of, TIE_EPS};

/// Denominators below this are too noisy for a contraction-ratio reading.
const RATIO_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SboOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SboOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iters: 100_000 }
    }
}

/// One application of the operator.
#[derive(Debug, Clone)]
pub struct SboStep {
    pub q: Vec<Vec<Vec<f64>>>,
    /// Greedy actions of the input table that fixed the other agents.
    pub greedy: Vec<Vec<usize>>,
    pub contracting: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SboSolution {
    /// `q[i][s][a_i]`
    pub q: Vec<Vec<Vec<f64>>>,
    /// `‖T q - q‖` of the returned table.
    pub residual: f64,
    pub iters: usize,
    /// `greedy_policy[s][i]`
    pub greedy_policy: Vec<Vec<usize>>,
    /// Per-sweep ratios measured while the greedy policy was unchanged.
    pub contraction_ratios: Vec<f64>,
    /// `γ · max_s Σ_i max_{a_i} w_i`
    pub contraction_bound: f64,
    pub weights: SboWeights,
}

impl SboSolution {
    pub fn max_ratio(&self) -> Option<f64> {
        self.contraction_ratios.iter().copied().reduce(f64::max)
    }

    /// `Σ_i max_{a_i} q_i(s, a_i)` per state.
    pub fn total_value(&self) -> Vec<f64> {
        let ns = self.greedy_policy.len();
        (0..ns).map(|s| self.q.iter().map(|qi| max_of(&qi[s])).sum()).collect()
    }
}

/// `max_s Σ_i max_{a_i} |x_i(s, a_i) - y_i(s, a_i)|`
pub fn sbo_norm(x: &[Vec<Vec<f64>>], y: &[Vec<Vec<f64>>]) -> f64 {
    let ns = x.first().map_or(0, Vec::len);
    (0..ns)
        .map(|s| {
            x.iter()
                .zip(y)
                .map(|(xi, yi)| xi[s].iter().zip(&yi[s]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// `greedy[i][s]`, lowest index among near-ties.
pub fn greedy_actions(q: &[Vec<Vec<f64>>]) -> Vec<Vec<usize>> {
    q.iter().map(|qi| qi.iter().map(|row| argmax_with_ties(row, TIE_EPS)).collect()).collect()
}

fn check_table(game: &MarkovConvexGame, q: &[Vec<Vec<f64>>]) -> Result<()> {
    let ok = q.len() == game.n_agents()
        && q.iter().enumerate().all(|(i, qi)| {
            qi.len() == game.n_states() && qi.iter().all(|row| row.len() == game.actions_per_agent()[i])
        });
    if ok {
        Ok(())
    } else {
        Err(Error::Shape("per-agent Q table does not match the game".into()))
    }
}

/// `q'_i(s, a_i) = w_i(s, a_i) Σ_{s'} P(s'|s, a)[R(s, a) + γ Σ_j max q_j(s')] - b_i(s)`
/// with `a` = (`a_i`, the other agents' greedy actions).
pub fn apply_sbo(game: &MarkovConvexGame, weights: &SboWeights, q: &[Vec<Vec<f64>>]) -> Result<SboStep> {
    check_table(game, q)?;
    weights.validate(game)?;
    let n = game.n_agents();
    let gamma = game.gamma();
    let greedy = greedy_actions(q);
    let v: Vec<f64> = (0..game.n_states()).map(|s| q.iter().map(|qi| max_of(&qi[s])).sum()).collect();
    let next: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|i| {
            (0..game.n_states())
                .into_par_iter()
                .map(|s| {
                    let mut joint: Vec<usize> = (0..n).map(|j| greedy[j][s]).collect();
                    (0..game.actions_per_agent()[i])
                        .map(|a_i| {
                            joint[i] = a_i;
                            let a = game.joint_index(&joint);
                            let future: f64 = game.transition_row(s, a).iter().zip(&v).map(|(p, x)| p * x).sum();
                            let target = game.reward(s, a) + gamma * future;
                            weights.weight(i, s, a_i, greedy[i][s]) * target - weights.b[i][s]
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(SboStep { q: next, greedy, contracting: contraction_condition(weights, gamma).ok })
}

/// Fixed point from `q ≡ 0`.
pub fn solve_sboe(game: &MarkovConvexGame, weights: &SboWeights, opts: SboOptions) -> Result<SboSolution> {
    let init = game.actions_per_agent().iter().map(|&k| vec![vec![0.0; k]; game.n_states()]).collect();
    solve_sboe_from(game, weights, init, opts)
}

/// Iterates until the returned table is within `tol` of the fixed point.
pub fn solve_sboe_from(
    game: &MarkovConvexGame,
    weights: &SboWeights,
    init: Vec<Vec<Vec<f64>>>,
    opts: SboOptions,
) -> Result<SboSolution> {
    if !(opts.tol > 0.0) || opts.max_iters == 0 {
        return Err(Error::InvalidArgument("tolerance and iteration budget must be positive".into()));
    }
    check_table(game, &init)?;
    weights.validate(game)?;
    let check = contraction_condition(weights, game.gamma());
    if !check.ok {
        return Err(Error::ContractionViolated { margin: check.margin });
    }
    let delta = game.gamma() * check.weight_mass;
    let stop = opts.tol * (1.0 - delta);

    let mut q = init;
    let mut ratios = Vec::new();
    let mut previous: Option<(f64, Vec<Vec<usize>>)> = None;
    let mut residual = f64::INFINITY;
    for iters in 0..opts.max_iters {
        let step = apply_sbo(game, weights, &q)?;
        residual = sbo_norm(&step.q, &q);
        if residual <= stop {
            let greedy = step.greedy;
            let greedy_policy = (0..game.n_states()).map(|s| greedy.iter().map(|g| g[s]).collect()).collect();
            return Ok(SboSolution {
                q,
                residual,
                iters,
                greedy_policy,
                contraction_ratios: ratios,
                contraction_bound: delta,
                weights: weights.clone(),
            });
        }
        if let Some((prev, prev_greedy)) = &previous {
            if *prev >= RATIO_FLOOR && *prev_greedy == step.greedy {
                ratios.push(residual / prev);
            }
        }
        previous = Some((residual, step.greedy));
        q = step.q;
    }
    Err(Error::NonConvergence { iterations: opts.max_iters, residual })
}

/// `max_{i,s} |q_i(s, a_i*) - max_a Q*(s, a)/n|` for an equal-credit solution.
pub fn equal_credit_gap(solution: &SboSolution, game: &MarkovConvexGame) -> Result<f64> {
    if !solution.weights.is_equal_credit() {
        return Err(Error::Inapplicable(
            "equal credit needs weight 1/n on greedy actions and zero offsets".into(),
        ));
    }
    let n = game.n_agents() as f64;
    let joint = joint_value_iteration(game, SolveOptions::with_tol(1e-12))?;
    Ok(solution
        .q
        .iter()
        .flat_map(|qi| qi.iter().enumerate().map(|(s, row)| (max_of(row) - joint.v[s] / n).abs()))
        .fold(0.0, f64::max))
}

pub fn equal_credit_check(solution: &SboSolution, game: &MarkovConvexGame, tol: f64) -> Result<bool> {
    Ok(equal_credit_gap(solution, game)? <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::fixtures;
    use crate::mcg::greedy_joint_policy;

    fn bandit(gamma: f64) -> MarkovConvexGame {
        MarkovConvexGame::new(1, vec![2], vec![1.0, 1.0], vec![0.0, 1.0], gamma).unwrap()
    }

    #[test]
    fn single_agent_reduces_to_bellman() {
        let single = bandit(0.9);
        let w = SboWeights::uniform(&single, 1.0).unwrap();
        let q = vec![vec![vec![3.0, -1.0]]];
        let step = apply_sbo(&single, &w, &q).unwrap();
        assert_eq!(step.q[0][0], vec![0.9 * 3.0, 1.0 + 0.9 * 3.0]);
    }

    #[test]
    fn bandit_fixed_point() {
        let g = bandit(0.9);
        let sol = solve_sboe(&g, &SboWeights::equal_credit(&g), SboOptions::default()).unwrap();
        assert!((sol.q[0][0][0] - 9.0).abs() < 1e-8, "{:?}", sol.q);
        assert!((sol.q[0][0][1] - 10.0).abs() < 1e-8);
    }

    #[test]
    fn myopic_g1_equal_credit() {
        let g = fixtures::g1().with_gamma(0.0).unwrap();
        let sol = solve_sboe(&g, &SboWeights::equal_credit(&g), SboOptions::default()).unwrap();
        assert_eq!(sol.q[0][0][fixtures::WORK], 2.0);
        assert_eq!(sol.q[1][0][fixtures::WORK], 2.0);
        assert!(equal_credit_check(&sol, &g, 1e-12).unwrap());
    }

    #[test]
    fn fixed_point_is_stationary() {
        let g = fixtures::g4();
        let w = SboWeights::equal_credit(&g);
        let sol = solve_sboe(&g, &w, SboOptions { tol: 1e-13, ..SboOptions::default() }).unwrap();
        let step = apply_sbo(&g, &w, &sol.q).unwrap();
        assert!(sbo_norm(&step.q, &sol.q) <= 1e-12);
    }

    #[test]
    fn supermodular_catalog_matches_joint_optimum() {
        for f in fixtures::catalog().into_iter().filter(|f| f.supermodular) {
            let g = &f.game;
            let sol = solve_sboe(g, &SboWeights::equal_credit(g), SboOptions::default()).unwrap();
            let joint = joint_value_iteration(g, SolveOptions::with_tol(1e-12)).unwrap();
            assert_eq!(sol.greedy_policy, greedy_joint_policy(g, &joint), "{}", f.name);
            for (s, total) in sol.total_value().into_iter().enumerate() {
                assert!((total - joint.v[s]).abs() <= 1e-8, "{} s={s}", f.name);
            }
            assert!(equal_credit_check(&sol, g, 1e-8).unwrap(), "{}", f.name);
            if let Some(r) = sol.max_ratio() {
                assert!(r <= sol.contraction_bound + 1e-6, "{}: {r}", f.name);
            }
        }
    }

    #[test]
    fn majority_stalls_at_the_null_profile() {
        // No single agent gains by working alone, so the all-idle table is a fixed point.
        let g = fixtures::g_majority();
        let sol = solve_sboe(&g, &SboWeights::equal_credit(&g), SboOptions::default()).unwrap();
        assert_eq!(sol.greedy_policy[0], vec![0, 0, 0]);
        assert_eq!(sol.total_value()[0], 0.0);
    }

    #[test]
    fn violated_contraction_is_refused() {
        let g = fixtures::g1().with_gamma(0.99).unwrap();
        let w = SboWeights::uniform(&g, 0.6).unwrap();
        assert!(matches!(solve_sboe(&g, &w, SboOptions::default()), Err(Error::ContractionViolated { .. })));
        assert!(!apply_sbo(&g, &w, &solve_init(&g)).unwrap().contracting);
    }

    #[test]
    fn inapplicable_without_equal_credit_weights() {
        let g = fixtures::g1();
        let sol = solve_sboe(&g, &SboWeights::uniform(&g, 0.5).unwrap(), SboOptions::default()).unwrap();
        assert!(matches!(equal_credit_check(&sol, &g, 1e-8), Err(Error::Inapplicable(_))));
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let g = fixtures::g4();
        let r = solve_sboe(&g, &SboWeights::equal_credit(&g), SboOptions { tol: 1e-8, max_iters: 3 });
        assert!(matches!(r, Err(Error::NonConvergence { .. })));
    }

    fn solve_init(g: &MarkovConvexGame) -> Vec<Vec<Vec<f64>>> {
        g.actions_per_agent().iter().map(|&k| vec![vec![0.0; k]; g.n_states()]).collect()
    }
}
