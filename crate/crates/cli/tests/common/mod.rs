//! Test-local references, written without calling the solvers they check.

#![allow(dead_code)]

use markov_shapley::mcg::{CoalitionMask, MarkovConvexGame, TabularMdp};
use markov_shapley::pomcg::Pomcg;

pub fn decode(k: &[usize], mut joint: usize) -> Vec<usize> {
    k.iter()
        .map(|&ki| {
            let a = joint % ki;
            joint /= ki;
            a
        })
        .collect()
}

/// Joint actions in which every agent outside `mask` plays its null action.
pub fn allowed(game: &MarkovConvexGame, mask: u32) -> Vec<usize> {
    let k = game.actions_per_agent();
    let null = game.null_action();
    let total: usize = k.iter().product();
    (0..total)
        .filter(|&j| decode(k, j).iter().enumerate().all(|(i, &a)| (mask >> i) & 1 == 1 || a == null[i]))
        .collect()
}

fn backup(game: &MarkovConvexGame, v: &[f64], s: usize, a: usize) -> f64 {
    let future: f64 = game.transition_row(s, a).iter().zip(v).map(|(p, x)| p * x).sum();
    game.reward(s, a) + game.gamma() * future
}

pub fn coalition_values(game: &MarkovConvexGame, mask: u32) -> Vec<f64> {
    let joints = allowed(game, mask);
    let mut v = vec![0.0; game.n_states()];
    for _ in 0..200_000 {
        let next: Vec<f64> = (0..game.n_states())
            .map(|s| joints.iter().map(|&a| backup(game, &v, s, a)).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let change = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if change <= 1e-14 {
            break;
        }
    }
    v
}

/// `values[mask][s]` for every mask.
pub fn all_values(game: &MarkovConvexGame) -> Vec<Vec<f64>> {
    (0..1u32 << game.n_agents()).map(|m| coalition_values(game, m)).collect()
}

fn permutations(items: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Average marginal contribution over every ordering of the agents.
pub fn perm_shapley(values: &[Vec<f64>], n: usize, s: usize) -> Vec<f64> {
    let mut total = vec![0.0; n];
    let mut count = 0usize;
    let mut order: Vec<usize> = (0..n).collect();
    permutations(&mut order, 0, &mut |perm| {
        let mut mask = 0usize;
        for &i in perm {
            total[i] += values[mask | 1 << i][s] - values[mask][s];
            mask |= 1 << i;
        }
        count += 1;
    });
    total.iter().map(|t| t / count as f64).collect()
}

/// Smallest `Σ_{i∈C} x_i(s) - V_C(s)` over nonempty coalitions, with the coalition.
pub fn min_core_slack(values: &[Vec<f64>], x: &[Vec<f64>], s: usize) -> (f64, usize) {
    let n = x.len();
    (1..1usize << n)
        .map(|m| ((0..n).filter(|i| (m >> i) & 1 == 1).map(|i| x[i][s]).sum::<f64>() - values[m][s], m))
        .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
}

/// Joint argmax of the grand Q-function per state, lowest index within `eps`.
pub fn greedy_joint(game: &MarkovConvexGame, eps: f64) -> Vec<Vec<usize>> {
    let v = coalition_values(game, (1 << game.n_agents()) - 1);
    (0..game.n_states())
        .map(|s| {
            let q: Vec<f64> = (0..game.n_joint_actions()).map(|a| backup(game, &v, s, a)).collect();
            let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let a = q.iter().position(|&x| x >= best - eps).unwrap();
            decode(game.actions_per_agent(), a)
        })
        .collect()
}

/// Optimal `horizon`-step value of a coalition from belief `b`, by full expansion.
pub fn belief_value(p: &Pomcg, mask: u32, b: &[f64], horizon: usize) -> f64 {
    if horizon == 0 {
        return 0.0;
    }
    let game = p.base();
    let n_states = game.n_states();
    let tag = p.tag_for(CoalitionMask::new(mask, game.n_agents()).unwrap());
    let mut best = f64::NEG_INFINITY;
    for a in allowed(game, mask) {
        let mut value: f64 = (0..n_states).map(|s| b[s] * game.reward(s, a)).sum();
        for o in 0..p.n_obs() {
            let mut joint = vec![0.0; n_states];
            for (s, bs) in b.iter().enumerate() {
                for (t, pt) in game.transition_row(s, a).iter().enumerate() {
                    joint[t] += bs * pt * p.obs_row(tag, t, a)[o];
                }
            }
            let po: f64 = joint.iter().sum();
            if po > 1e-15 {
                let next: Vec<f64> = joint.iter().map(|x| x / po).collect();
                value += game.gamma() * po * belief_value(p, mask, &next, horizon - 1);
            }
        }
        best = best.max(value);
    }
    best
}

/// Voltages of a radial chain fed at 1.0 p.u., bus by bus from the slack.
pub fn chain_voltages(r: f64, x: f64, p_net: &[f64], q_net: &[f64]) -> Option<Vec<f64>> {
    let mut v = vec![1.0];
    for k in 0..p_net.len() {
        let dp: f64 = p_net[k..].iter().sum();
        let dq: f64 = q_net[k..].iter().sum();
        let up = v[k];
        let disc = up * up - 4.0 * (r * dp + x * dq);
        if disc < 0.0 {
            return None;
        }
        v.push((up + disc.sqrt()) / 2.0);
    }
    Some(v)
}

/// Cells a predator can reach on a `w × h` grid, by breadth-first search.
pub fn reachable_cells(w: usize, h: usize, from: usize) -> Vec<bool> {
    let mut seen = vec![false; w * h];
    let mut queue = std::collections::VecDeque::from([from]);
    seen[from] = true;
    while let Some(c) = queue.pop_front() {
        let (x, y) = (c % w, c / w);
        let mut next = Vec::new();
        if x > 0 {
            next.push(c - 1);
        }
        if x + 1 < w {
            next.push(c + 1);
        }
        if y > 0 {
            next.push(c - w);
        }
        if y + 1 < h {
            next.push(c + w);
        }
        for n in next {
            if !seen[n] {
                seen[n] = true;
                queue.push_back(n);
            }
        }
    }
    seen
}
