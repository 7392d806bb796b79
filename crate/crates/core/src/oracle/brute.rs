//! Brute-force references. Nothing here calls into the solvers it checks.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::mcg::{CoalitionMask, MarkovConvexGame, TabularMdp};
use crate::pomcg::Pomcg;
use crate::shapley::{CoalitionSlack, CoreReport};

pub const MAX_ORACLE_AGENTS: usize = 8;
pub const MAX_ORACLE_HORIZON: usize = 12;

fn check_agents(n: usize) -> Result<()> {
    if n > MAX_ORACLE_AGENTS {
        return Err(Error::Capacity(format!("oracles handle at most {MAX_ORACLE_AGENTS} agents, got {n}")));
    }
    Ok(())
}

fn check_horizon(h: usize) -> Result<()> {
    if h > MAX_ORACLE_HORIZON {
        return Err(Error::Capacity(format!("oracles expand at most {MAX_ORACLE_HORIZON} steps, got {h}")));
    }
    Ok(())
}

/// Full joint-action indices reachable by `members`, others at their null action.
fn coalition_joints(game: &MarkovConvexGame, members: &[usize]) -> Vec<usize> {
    let k = game.actions_per_agent();
    let mut stride = vec![1usize; k.len()];
    for i in 1..k.len() {
        stride[i] = stride[i - 1] * k[i - 1];
    }
    let base: usize = game.null_action().iter().zip(&stride).map(|(a, st)| a * st).sum();
    let mut joints = vec![base];
    for &m in members {
        let null = game.null_action()[m];
        let mut next = Vec::with_capacity(joints.len() * k[m]);
        for a in 0..k[m] {
            for &j in &joints {
                next.push(j - null * stride[m] + a * stride[m]);
            }
        }
        joints = next;
    }
    joints
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("non-empty column");
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::InvalidArgument("singular policy-evaluation system".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Ok(x)
}

/// Exact value of the deterministic policy `choice[s]` (a full joint index).
fn evaluate_exactly(game: &MarkovConvexGame, choice: &[usize]) -> Result<Vec<f64>> {
    let ns = game.n_states();
    let gamma = game.gamma();
    let mut a = vec![vec![0.0; ns]; ns];
    let mut b = vec![0.0; ns];
    for s in 0..ns {
        a[s][s] = 1.0;
        for (t, p) in game.transition_row(s, choice[s]).iter().enumerate() {
            a[s][t] -= gamma * p;
        }
        b[s] = game.reward(s, choice[s]);
    }
    gauss_solve(a, b)
}

/// Optimal value of one coalition by policy iteration with exact evaluation.
pub fn coalition_value(game: &MarkovConvexGame, coalition: CoalitionMask) -> Result<Vec<f64>> {
    check_agents(game.n_agents())?;
    let joints = coalition_joints(game, &coalition.members());
    let ns = game.n_states();
    let mut choice = vec![joints[0]; ns];
    for _ in 0..10_000 {
        let v = evaluate_exactly(game, &choice)?;
        let mut changed = false;
        for s in 0..ns {
            let q = |j: usize| -> f64 {
                game.reward(s, j) + game.gamma() * game.transition_row(s, j).iter().zip(&v).map(|(p, x)| p * x).sum::<f64>()
            };
            let current = q(choice[s]);
            let mut best = (choice[s], current);
            for &j in &joints {
                let value = q(j);
                if value > best.1 + 1e-12 * (1.0 + current.abs()) {
                    best = (j, value);
                }
            }
            if best.0 != choice[s] {
                choice[s] = best.0;
                changed = true;
            }
        }
        if !changed {
            return Ok(v);
        }
    }
    Err(Error::NonConvergence { iterations: 10_000, residual: f64::NAN })
}

/// `values[mask][s]` for every coalition.
pub fn all_values(game: &MarkovConvexGame) -> Result<Vec<Vec<f64>>> {
    check_agents(game.n_agents())?;
    CoalitionMask::all(game.n_agents()).map(|c| coalition_value(game, c)).collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                extend(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// Shapley value at `s` as the average marginal contribution over all orderings.
pub fn perm_shapley(game: &MarkovConvexGame, s: usize) -> Result<Vec<f64>> {
    let values = all_values(game)?;
    perm_shapley_from(&values, game.n_agents(), s)
}

pub fn perm_shapley_from(values: &[Vec<f64>], n: usize, s: usize) -> Result<Vec<f64>> {
    check_agents(n)?;
    let orders = permutations(n);
    let mut total = vec![0.0; n];
    for order in &orders {
        let mut mask = 0usize;
        for &i in order {
            let before = values[mask][s];
            mask |= 1 << i;
            total[i] += values[mask][s] - before;
        }
    }
    Ok(total.into_iter().map(|t| t / orders.len() as f64).collect())
}

/// Best `horizon`-step discounted return of `coalition` from `start`.
pub fn expectimax(game: &MarkovConvexGame, coalition: CoalitionMask, start: usize, horizon: usize) -> Result<f64> {
    check_agents(game.n_agents())?;
    check_horizon(horizon)?;
    let joints = coalition_joints(game, &coalition.members());
    let mut memo = HashMap::new();
    Ok(expand(game, &joints, start, horizon, &mut memo))
}

fn expand(
    game: &MarkovConvexGame,
    joints: &[usize],
    s: usize,
    h: usize,
    memo: &mut HashMap<(usize, usize), f64>,
) -> f64 {
    if h == 0 {
        return 0.0;
    }
    if let Some(v) = memo.get(&(s, h)) {
        return *v;
    }
    let mut best = f64::NEG_INFINITY;
    for &j in joints {
        let mut value = game.reward(s, j);
        for (t, &p) in game.transition_row(s, j).iter().enumerate() {
            if p > 0.0 {
                value += game.gamma() * p * expand(game, joints, t, h - 1, memo);
            }
        }
        best = best.max(value);
    }
    memo.insert((s, h), best);
    best
}

/// Best `horizon`-step return of `coalition` from belief `probs` in a
/// partially observable game, with its own Bayes filter.
pub fn belief_expectimax(pomcg: &Pomcg, coalition: CoalitionMask, probs: &[f64], horizon: usize) -> Result<f64> {
    let game = pomcg.base();
    check_agents(game.n_agents())?;
    check_horizon(horizon)?;
    if probs.len() != game.n_states() {
        return Err(Error::Shape(format!("belief over {} states for a {}-state game", probs.len(), game.n_states())));
    }
    let joints = coalition_joints(game, &coalition.members());
    let tag = pomcg.tag_for(coalition);
    let mut memo = HashMap::new();
    Ok(belief_expand(pomcg, tag, &joints, probs, horizon, &mut memo))
}

fn belief_expand(
    pomcg: &Pomcg,
    tag: usize,
    joints: &[usize],
    b: &[f64],
    h: usize,
    memo: &mut HashMap<(usize, Vec<i64>), f64>,
) -> f64 {
    if h == 0 {
        return 0.0;
    }
    let key = (h, b.iter().map(|p| (p * 1e12).round() as i64).collect::<Vec<_>>());
    if let Some(v) = memo.get(&key) {
        return *v;
    }
    let game = pomcg.base();
    let ns = game.n_states();
    let mut best = f64::NEG_INFINITY;
    for &j in joints {
        let mut value: f64 = (0..ns).map(|s| b[s] * game.reward(s, j)).sum();
        let predicted: Vec<f64> =
            (0..ns).map(|t| (0..ns).map(|s| b[s] * game.transition_row(s, j)[t]).sum()).collect();
        for o in 0..pomcg.n_obs() {
            let joint_obs: Vec<f64> = (0..ns).map(|t| predicted[t] * pomcg.obs_row(tag, t, j)[o]).collect();
            let p_obs: f64 = joint_obs.iter().sum();
            if p_obs <= 0.0 {
                continue;
            }
            let next: Vec<f64> = joint_obs.iter().map(|x| x / p_obs).collect();
            value += game.gamma() * p_obs * belief_expand(pomcg, tag, joints, &next, h - 1, memo);
        }
        best = best.max(value);
    }
    memo.insert(key, best);
    best
}

/// Slack of every coalition inequality, enumerated member list by member list.
pub fn enumerate_core(game: &MarkovConvexGame, payoffs: &[Vec<f64>], tol: f64) -> Result<CoreReport> {
    let n = game.n_agents();
    check_agents(n)?;
    if payoffs.len() != n || payoffs.iter().any(|row| row.len() != game.n_states()) {
        return Err(Error::Shape("payoffs must be [agent][state]".into()));
    }
    let mut slacks = Vec::new();
    let mut min_slack = f64::INFINITY;
    for size in 1..=n {
        let mut members: Vec<usize> = (0..size).collect();
        loop {
            let coalition = CoalitionMask::from_members(n, &members)?;
            let v = coalition_value(game, coalition)?;
            let slack: Vec<f64> = (0..game.n_states())
                .map(|s| members.iter().map(|&i| payoffs[i][s]).sum::<f64>() - v[s])
                .collect();
            min_slack = slack.iter().copied().fold(min_slack, f64::min);
            slacks.push(CoalitionSlack { coalition, slack });
            // next combination in lexicographic order
            let Some(pos) = (0..size).rev().find(|&k| members[k] < n - size + k) else { break };
            members[pos] += 1;
            for k in pos + 1..size {
                members[k] = members[k - 1] + 1;
            }
        }
    }
    Ok(CoreReport { slacks, min_slack, tol, in_core: min_slack >= -tol })
}
