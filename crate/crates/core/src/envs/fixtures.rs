//! Small hand-built games with known coalition values.
//!
//! Every agent has the actions `{0 = idle (null), 1 = work}` unless stated
//! otherwise. The one-shot fixtures start in state 0 and move to an
//! absorbing zero-reward state 1, so their state-0 values do not depend on
//! the discount factor.

use rand::Rng;

use crate::mcg::MarkovConvexGame;

pub const IDLE: usize = 0;
pub const WORK: usize = 1;

const ONE_SHOT_GAMMA: f64 = 0.9;

/// A fixture together with the structure its tests rely on.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub game: MarkovConvexGame,
    /// Declared agent swaps under which the game is invariant.
    pub symmetric_pairs: Vec<(usize, usize)>,
    pub supermodular: bool,
}

pub fn catalog() -> Vec<Fixture> {
    vec![
        Fixture { name: "g1", game: g1(), symmetric_pairs: vec![], supermodular: true },
        Fixture { name: "g-dummy", game: g_dummy(), symmetric_pairs: vec![], supermodular: true },
        Fixture { name: "g-sym", game: g_sym(), symmetric_pairs: vec![(0, 1)], supermodular: true },
        Fixture { name: "g-majority", game: g_majority(), symmetric_pairs: vec![(0, 1), (1, 2)], supermodular: false },
        Fixture { name: "g3-convex", game: g3_convex(), symmetric_pairs: vec![], supermodular: true },
        Fixture { name: "g4", game: g4(), symmetric_pairs: vec![], supermodular: true },
    ]
}

pub fn by_name(name: &str) -> Option<Fixture> {
    catalog().into_iter().find(|f| f.name == name)
}

/// Two-state episode: reward `f(a)` in state 0, then absorption.
pub fn one_shot(actions_per_agent: Vec<usize>, gamma: f64, f: impl Fn(&[usize]) -> f64) -> MarkovConvexGame {
    let n_joint: usize = actions_per_agent.iter().product();
    let probe = MarkovConvexGame::new(1, actions_per_agent.clone(), vec![1.0; n_joint], vec![0.0; n_joint], 0.0)
        .expect("probe game");
    let mut reward = vec![0.0; 2 * n_joint];
    for a in 0..n_joint {
        reward[a] = f(&probe.decode_joint(a));
    }
    let mut transition = vec![0.0; 2 * n_joint * 2];
    for s in 0..2 {
        for a in 0..n_joint {
            transition[(s * n_joint + a) * 2 + 1] = 1.0;
        }
    }
    MarkovConvexGame::new(2, actions_per_agent, transition, reward, gamma).expect("valid one-shot game")
}

fn works(a: &[usize]) -> usize {
    a.iter().filter(|&&x| x == WORK).count()
}

/// Convex two-agent game: `1·[a0 works] + 2·[a1 works] + 1·[both work]`.
/// Coalition values `(∅, {0}, {1}, N) = (0, 1, 2, 4)`.
pub fn g1() -> MarkovConvexGame {
    one_shot(vec![2, 2], ONE_SHOT_GAMMA, |a| {
        let w0 = (a[0] == WORK) as u8 as f64;
        let w1 = (a[1] == WORK) as u8 as f64;
        w0 + 2.0 * w1 + w0 * w1
    })
}

/// Agent 0 is a dummy: reward `3·[a1 works]`.
pub fn g_dummy() -> MarkovConvexGame {
    one_shot(vec![2, 2], ONE_SHOT_GAMMA, |a| if a[1] == WORK { 3.0 } else { 0.0 })
}

/// Two interchangeable agents: `1·[a0] + 1·[a1] + 2·[both]`.
pub fn g_sym() -> MarkovConvexGame {
    one_shot(vec![2, 2], ONE_SHOT_GAMMA, |a| match works(a) {
        0 => 0.0,
        1 => 1.0,
        _ => 4.0,
    })
}

/// Three-agent majority game: any two workers earn 1, the grand coalition 1.
pub fn g_majority() -> MarkovConvexGame {
    one_shot(vec![2, 2, 2], ONE_SHOT_GAMMA, |a| if works(a) >= 2 { 1.0 } else { 0.0 })
}

/// Three-agent supermodular game built from nonnegative dividends:
/// singletons `(1, 2, 3)`, every pair `1`, the triple `2`.
pub fn g3_convex() -> MarkovConvexGame {
    one_shot(vec![2, 2, 2], ONE_SHOT_GAMMA, |a| {
        let w: Vec<f64> = a.iter().map(|&x| (x == WORK) as u8 as f64).collect();
        w[0] + 2.0 * w[1] + 3.0 * w[2] + w[0] * w[1] + w[0] * w[2] + w[1] * w[2] + 2.0 * w[0] * w[1] * w[2]
    })
}

/// Two-state chain with action-dependent dynamics, `gamma = 0.9`.
///
/// State 0 pays like [`g1`]; state 1 pays `2·[a0] + 2·[a1] + 2·[both]`.
/// Each worker raises the chance of reaching (or staying in) state 1.
pub fn g4() -> MarkovConvexGame {
    let actions = vec![2usize, 2];
    let n_joint = 4;
    let mut reward = vec![0.0; 2 * n_joint];
    let mut transition = vec![0.0; 2 * n_joint * 2];
    for a in 0..n_joint {
        let w0 = (a & 1) as f64;
        let w1 = ((a >> 1) & 1) as f64;
        reward[a] = w0 + 2.0 * w1 + w0 * w1;
        reward[n_joint + a] = 2.0 * w0 + 2.0 * w1 + 2.0 * w0 * w1;
        let up = 0.3 + 0.2 * w0 + 0.2 * w1;
        transition[a * 2] = 1.0 - up;
        transition[a * 2 + 1] = up;
        let stay = 0.5 + 0.2 * w0 + 0.2 * w1;
        transition[(n_joint + a) * 2] = 1.0 - stay;
        transition[(n_joint + a) * 2 + 1] = stay;
    }
    MarkovConvexGame::new(2, actions, transition, reward, 0.9).expect("valid g4")
}

/// Single-state game whose reward is additive across agents: agent `i`
/// contributes `i + 1` when working.
pub fn additive(n_agents: usize, gamma: f64) -> MarkovConvexGame {
    let actions = vec![2usize; n_agents];
    let n_joint = 1usize << n_agents;
    let reward = (0..n_joint)
        .map(|a| (0..n_agents).filter(|i| (a >> i) & 1 == 1).map(|i| (i + 1) as f64).sum())
        .collect();
    MarkovConvexGame::new(1, actions, vec![1.0; n_joint], reward, gamma).expect("valid additive game")
}

/// Random supermodular game.
///
/// The stage reward in every state is `Σ_T d_s(T) Π_{i∈T} g_i(a_i)` over
/// nonempty agent subsets with dividends `d_s(T) >= 0`, per-agent gains
/// `g_i(null) = 0`, `g_i ∈ [0, 1]`, and `g_i = 1` on one shared best action.
/// Transitions do not depend on actions, so each coalition's value is the
/// discounted sum of its stage values and inherits supermodularity.
pub fn random_convex_game<R: Rng>(
    rng: &mut R,
    n_agents: usize,
    n_states: usize,
    max_actions: usize,
    gamma: f64,
) -> MarkovConvexGame {
    let actions: Vec<usize> = (0..n_agents).map(|_| rng.gen_range(2..=max_actions.max(2))).collect();
    let gains: Vec<Vec<f64>> = actions
        .iter()
        .map(|&k| {
            let best = rng.gen_range(1..k);
            (0..k)
                .map(|a| match a {
                    0 => 0.0,
                    a if a == best => 1.0,
                    _ => rng.gen_range(0.0..1.0),
                })
                .collect()
        })
        .collect();
    let n_subsets = 1usize << n_agents;
    let dividends: Vec<Vec<f64>> = (0..n_states)
        .map(|_| {
            (0..n_subsets).map(|t| if t == 0 { 0.0 } else { rng.gen_range(0.0..2.0) }).collect()
        })
        .collect();
    let kernel: Vec<Vec<f64>> = (0..n_states)
        .map(|_| {
            let raw: Vec<f64> = (0..n_states).map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / total).collect()
        })
        .collect();

    let n_joint: usize = actions.iter().product();
    let probe = MarkovConvexGame::new(1, actions.clone(), vec![1.0; n_joint], vec![0.0; n_joint], 0.0)
        .expect("probe game");
    let mut reward = Vec::with_capacity(n_states * n_joint);
    let mut transition = Vec::with_capacity(n_states * n_joint * n_states);
    for s in 0..n_states {
        for a in 0..n_joint {
            let acts = probe.decode_joint(a);
            let r: f64 = (1..n_subsets)
                .map(|t| {
                    let prod: f64 = (0..n_agents).filter(|i| (t >> i) & 1 == 1).map(|i| gains[i][acts[i]]).product();
                    dividends[s][t] * prod
                })
                .sum();
            reward.push(r);
            transition.extend_from_slice(&kernel[s]);
        }
    }
    // Renormalize rows exactly so they pass the 1e-12 row-sum check.
    for row in transition.chunks_mut(n_states) {
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= total);
    }
    MarkovConvexGame::new(n_states, actions, transition, reward, gamma).expect("valid random game")
}
