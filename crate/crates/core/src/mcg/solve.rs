use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coalition::CoalitionMask;
use super::game::{MarkovConvexGame, TabularMdp};
use super::subgame::build_coalition_subgame;
use crate::error::{Error, Result};
use crate::numeric::{argmax_with_ties, max_of, sup_distance, TIE_EPS};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Target accuracy of the returned values in sup norm.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_iters: DEFAULT_MAX_ITERS }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    fn check(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }

    /// Sweep-to-sweep change that guarantees `tol` accuracy for a
    /// `gamma`-contraction.
    fn stopping_change(&self, gamma: f64) -> f64 {
        if gamma == 0.0 {
            self.tol
        } else {
            self.tol * (1.0 - gamma) / gamma
        }
    }
}

/// Optimal values of one coalition (non-members at their null action).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoalitionValueTable {
    pub coalition: CoalitionMask,
    pub n_actions: usize,
    /// `v[s] = max_a q[s][a]`
    pub v: Vec<f64>,
    /// Row-major `[s][coalition action]`.
    pub q: Vec<f64>,
    pub solve_tol: f64,
    pub iterations: usize,
    /// Sup-norm change of the last sweep.
    pub residual: f64,
}

impl CoalitionValueTable {
    pub fn q_row(&self, s: usize) -> &[f64] {
        &self.q[s * self.n_actions..(s + 1) * self.n_actions]
    }

    /// Greedy coalition action per state, lowest index on ties.
    pub fn greedy(&self) -> Vec<usize> {
        (0..self.v.len()).map(|s| argmax_with_ties(self.q_row(s), TIE_EPS)).collect()
    }
}

/// One application of the Bellman optimality operator on a Q table.
pub fn bellman_backup<M: TabularMdp + ?Sized>(mdp: &M, q: &[f64]) -> Vec<f64> {
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let v: Vec<f64> = (0..ns).map(|s| max_of(&q[s * na..(s + 1) * na])).collect();
    let mut next = vec![0.0; ns * na];
    for s in 0..ns {
        for a in 0..na {
            let expected: f64 = mdp.transition_row(s, a).iter().zip(&v).map(|(p, vs)| p * vs).sum();
            next[s * na + a] = mdp.reward(s, a) + mdp.gamma() * expected;
        }
    }
    next
}

/// Q-value iteration from `Q = 0` on any tabular MDP.
pub fn q_value_iteration<M: TabularMdp + ?Sized>(
    mdp: &M,
    opts: SolveOptions,
) -> Result<(Vec<f64>, usize, f64)> {
    opts.check()?;
    let stop = opts.stopping_change(mdp.gamma());
    let mut q = vec![0.0; mdp.n_states() * mdp.n_actions()];
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iters {
        let next = bellman_backup(mdp, &q);
        residual = sup_distance(&next, &q);
        q = next;
        if residual <= stop {
            return Ok((q, it, residual));
        }
    }
    Err(Error::NonConvergence { iterations: opts.max_iters, residual })
}

fn table_from_q<M: TabularMdp + ?Sized>(
    mdp: &M,
    coalition: CoalitionMask,
    q: Vec<f64>,
    opts: SolveOptions,
    iterations: usize,
    residual: f64,
) -> CoalitionValueTable {
    let na = mdp.n_actions();
    let v = (0..mdp.n_states()).map(|s| max_of(&q[s * na..(s + 1) * na])).collect();
    CoalitionValueTable { coalition, n_actions: na, v, q, solve_tol: opts.tol, iterations, residual }
}

/// Optimal joint Q/V for the grand coalition.
pub fn joint_value_iteration(game: &MarkovConvexGame, opts: SolveOptions) -> Result<CoalitionValueTable> {
    let (q, it, res) = q_value_iteration(game, opts)?;
    Ok(table_from_q(game, game.grand(), q, opts, it, res))
}

/// Optimal values of `coalition`, with every non-member at its null action.
pub fn optimal_coalition_value(
    game: &MarkovConvexGame,
    coalition: CoalitionMask,
    opts: SolveOptions,
) -> Result<CoalitionValueTable> {
    let sub = build_coalition_subgame(game, coalition)?;
    let (q, it, res) = q_value_iteration(&sub, opts)?;
    Ok(table_from_q(&sub, coalition, q, opts, it, res))
}

/// Solves every one of the `2^n` coalitions, indexed by mask bits.
///
/// Each solve is independent, so the result does not depend on scheduling.
pub fn all_coalition_values(game: &MarkovConvexGame, opts: SolveOptions) -> Result<Vec<CoalitionValueTable>> {
    let masks: Vec<CoalitionMask> = CoalitionMask::all(game.n_agents()).collect();
    masks.into_par_iter().map(|c| optimal_coalition_value(game, c, opts)).collect()
}

fn evaluate_actions<M: TabularMdp + ?Sized>(mdp: &M, actions: &[usize], opts: SolveOptions) -> Result<Vec<f64>> {
    opts.check()?;
    let stop = opts.stopping_change(mdp.gamma());
    let ns = mdp.n_states();
    let mut v = vec![0.0; ns];
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iters {
        let next: Vec<f64> = (0..ns)
            .map(|s| {
                let a = actions[s];
                let expected: f64 = mdp.transition_row(s, a).iter().zip(&v).map(|(p, x)| p * x).sum();
                mdp.reward(s, a) + mdp.gamma() * expected
            })
            .collect();
        residual = sup_distance(&next, &v);
        v = next;
        if residual <= stop {
            return Ok(v);
        }
    }
    Err(Error::NonConvergence { iterations: opts.max_iters, residual })
}

/// Value of a deterministic joint policy given as `policy[s][agent]`.
pub fn policy_evaluation(game: &MarkovConvexGame, policy: &[Vec<usize>], opts: SolveOptions) -> Result<Vec<f64>> {
    let joint = joint_policy(game, policy)?;
    evaluate_actions(game, &joint, opts)
}

fn joint_policy(game: &MarkovConvexGame, policy: &[Vec<usize>]) -> Result<Vec<usize>> {
    if policy.len() != game.n_states() {
        return Err(Error::Shape(format!(
            "policy covers {} states, game has {}",
            policy.len(),
            game.n_states()
        )));
    }
    policy
        .iter()
        .enumerate()
        .map(|(s, acts)| {
            if acts.len() != game.n_agents() {
                return Err(Error::Shape(format!("policy at state {s} has {} actions", acts.len())));
            }
            for (i, (&a, &k)) in acts.iter().zip(game.actions_per_agent()).enumerate() {
                if a >= k {
                    return Err(Error::InvalidArgument(format!(
                        "policy action {a} of agent {i} at state {s} is outside 0..{k}"
                    )));
                }
            }
            Ok(game.joint_index(acts))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyIterationResult {
    /// `policy[s][agent]`
    pub policy: Vec<Vec<usize>>,
    pub v: Vec<f64>,
    pub improvements: usize,
}

/// Howard policy iteration starting from the all-null policy.
pub fn policy_iteration(game: &MarkovConvexGame, opts: SolveOptions) -> Result<PolicyIterationResult> {
    let ns = game.n_states();
    let mut actions = vec![game.null_joint(); ns];
    for improvements in 0..opts.max_iters {
        let v = evaluate_actions(game, &actions, opts)?;
        let q = backup_from_v(game, &v);
        let na = game.n_joint_actions();
        let next: Vec<usize> = (0..ns).map(|s| argmax_with_ties(&q[s * na..(s + 1) * na], TIE_EPS)).collect();
        if next == actions {
            let policy = actions.iter().map(|&a| game.decode_joint(a)).collect();
            return Ok(PolicyIterationResult { policy, v, improvements });
        }
        actions = next;
    }
    Err(Error::NonConvergence { iterations: opts.max_iters, residual: f64::NAN })
}

fn backup_from_v<M: TabularMdp + ?Sized>(mdp: &M, v: &[f64]) -> Vec<f64> {
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let mut q = vec![0.0; ns * na];
    for s in 0..ns {
        for a in 0..na {
            let expected: f64 = mdp.transition_row(s, a).iter().zip(v).map(|(p, x)| p * x).sum();
            q[s * na + a] = mdp.reward(s, a) + mdp.gamma() * expected;
        }
    }
    q
}

/// Greedy joint policy `[s][agent]` of a grand-coalition table.
pub fn greedy_joint_policy(game: &MarkovConvexGame, table: &CoalitionValueTable) -> Vec<Vec<usize>> {
    table.greedy().into_iter().map(|a| game.decode_joint(a)).collect()
}

/// Largest violation of the Bellman optimality equation by `v`.
pub fn bellman_residual<M: TabularMdp + ?Sized>(mdp: &M, v: &[f64]) -> f64 {
    let q = backup_from_v(mdp, v);
    let na = mdp.n_actions();
    (0..mdp.n_states())
        .map(|s| (max_of(&q[s * na..(s + 1) * na]) - v[s]).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::fixtures;

    fn single_agent_bandit(gamma: f64) -> MarkovConvexGame {
        MarkovConvexGame::new(1, vec![2], vec![1.0, 1.0], vec![0.0, 1.0], gamma).unwrap()
    }

    #[test]
    fn geometric_series_bandit() {
        let t = joint_value_iteration(&single_agent_bandit(0.9), SolveOptions::default()).unwrap();
        assert!((t.q[0] - 9.0).abs() < 1e-9, "{:?}", t.q);
        assert!((t.q[1] - 10.0).abs() < 1e-9);
        assert!(bellman_residual(&single_agent_bandit(0.9), &t.v) <= 1e-10 * 1.9 / 0.1);
    }

    #[test]
    fn myopic_game_returns_rewards() {
        let g = fixtures::g4().with_gamma(0.0).unwrap();
        let t = joint_value_iteration(&g, SolveOptions::default()).unwrap();
        for s in 0..g.n_states() {
            for a in 0..g.n_joint_actions() {
                assert_eq!(t.q[s * g.n_joint_actions() + a], g.reward(s, a));
            }
        }
    }

    #[test]
    fn non_convergence_reports_residual() {
        let opts = SolveOptions { tol: 1e-12, max_iters: 3 };
        match joint_value_iteration(&single_agent_bandit(0.99), opts) {
            Err(Error::NonConvergence { iterations: 3, residual }) => assert!(residual > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn g1_coalition_values() {
        let g = fixtures::g1();
        let opts = SolveOptions::default();
        let v = |members: &[usize]| {
            let c = CoalitionMask::from_members(2, members).unwrap();
            optimal_coalition_value(&g, c, opts).unwrap().v[0]
        };
        assert!((v(&[]) - 0.0).abs() < 1e-12);
        assert!((v(&[0]) - 1.0).abs() < 1e-12);
        assert!((v(&[1]) - 2.0).abs() < 1e-12);
        assert!((v(&[0, 1]) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn policy_evaluation_of_greedy_policy_matches_optimum() {
        let g = fixtures::g4();
        let opts = SolveOptions::default();
        let t = joint_value_iteration(&g, opts).unwrap();
        let v = policy_evaluation(&g, &greedy_joint_policy(&g, &t), opts).unwrap();
        assert!(sup_distance(&v, &t.v) <= 2.0 * opts.tol);
    }

    #[test]
    fn policy_evaluation_myopic_is_immediate_reward() {
        let g = fixtures::g4().with_gamma(0.0).unwrap();
        let policy = vec![vec![1, 0], vec![0, 1]];
        let v = policy_evaluation(&g, &policy, SolveOptions::default()).unwrap();
        assert_eq!(v[0], g.reward(0, g.joint_index(&[1, 0])));
        assert_eq!(v[1], g.reward(1, g.joint_index(&[0, 1])));
    }

    #[test]
    fn policy_evaluation_rejects_bad_shapes() {
        let g = fixtures::g1();
        assert!(policy_evaluation(&g, &[vec![0, 0]], SolveOptions::default()).is_err());
        assert!(policy_evaluation(&g, &[vec![0, 5], vec![0, 0]], SolveOptions::default()).is_err());
    }

    #[test]
    fn policy_iteration_agrees_with_value_iteration() {
        for g in [fixtures::g1(), fixtures::g4(), fixtures::g_majority(), single_agent_bandit(0.9)] {
            let opts = SolveOptions::default();
            let vi = joint_value_iteration(&g, opts).unwrap();
            let pi = policy_iteration(&g, opts).unwrap();
            assert!(sup_distance(&vi.v, &pi.v) <= 2.0 * opts.tol);
            assert_eq!(pi.policy, greedy_joint_policy(&g, &vi));
        }
    }
}
