//! Small partially observable games.

use super::model::Pomcg;
use crate::mcg::{CoalitionMask, MarkovConvexGame, TabularMdp};

/// Stage payoff shared by the two-state fixtures: state 0 pays like G1,
/// state 1 pays 2 only when both agents work.
fn two_state_payoff(s: usize, a: usize) -> f64 {
    let (w0, w1) = ((a & 1) as f64, ((a >> 1) & 1) as f64);
    if s == 0 {
        w0 + 2.0 * w1 + w0 * w1
    } else {
        2.0 * w0 * w1
    }
}

fn two_state_game(kernel: [[f64; 2]; 2], gamma: f64) -> MarkovConvexGame {
    let mut transition = Vec::with_capacity(16);
    let mut reward = Vec::with_capacity(8);
    for (s, row) in kernel.iter().enumerate() {
        for a in 0..4 {
            transition.extend_from_slice(row);
            reward.push(two_state_payoff(s, a));
        }
    }
    MarkovConvexGame::new(2, vec![2, 2], transition, reward, gamma).expect("valid two-state game")
}

fn grand_and_singletons() -> Vec<Vec<CoalitionMask>> {
    vec![
        vec![CoalitionMask::grand(2)],
        vec![CoalitionMask::singleton(2, 0).unwrap(), CoalitionMask::singleton(2, 1).unwrap()],
    ]
}

/// Agent 0 sees the state through the observation index; everyone else sees nothing.
pub fn fully_observable(game: MarkovConvexGame, initial: Vec<f64>) -> Pomcg {
    let (ns, na) = (game.n_states(), game.n_joint_actions());
    let mut obs_per_agent = vec![1; game.n_agents()];
    obs_per_agent[0] = ns;
    let mut table = vec![0.0; ns * na * ns];
    for s in 0..ns {
        for a in 0..na {
            table[(s * na + a) * ns + s] = 1.0;
        }
    }
    let tags = vec![vec![CoalitionMask::grand(game.n_agents())]];
    Pomcg::new(game, obs_per_agent, vec![table], initial, tags).expect("valid fully observable model")
}

/// Two states with a sticky action-independent chain and a noisy state
/// signal: correct with probability 0.8 for the grand coalition and 0.6
/// for singletons. The reachable belief set is infinite.
pub fn noisy() -> Pomcg {
    let game = two_state_game([[0.9, 0.1], [0.2, 0.8]], 0.9);
    let kernel = |accuracy: f64| -> Vec<f64> {
        let mut t = Vec::with_capacity(16);
        for s in 0..2 {
            for _ in 0..4 {
                let row = if s == 0 { [accuracy, 1.0 - accuracy] } else { [1.0 - accuracy, accuracy] };
                t.extend_from_slice(&row);
            }
        }
        t
    };
    Pomcg::new(game, vec![2, 1], vec![kernel(0.8), kernel(0.6)], vec![0.5, 0.5], grand_and_singletons())
        .expect("valid noisy model")
}

/// States are redrawn i.i.d. from (0.6, 0.4) every step and revealed with
/// probability 0.8 (grand coalition) or 0.5 (singletons), otherwise an
/// empty signal arrives. Reachable beliefs: the prior, (0.6, 0.4) and the
/// two point masses.
pub fn glimpse() -> Pomcg {
    revealing(two_state_game([[0.6, 0.4], [0.6, 0.4]], 0.9), 0.8, 0.5)
}

/// Like [`glimpse`] but every worker also pays on its own in both states.
pub fn rewarding() -> Pomcg {
    let mut reward = Vec::with_capacity(8);
    for s in 0..2 {
        for a in 0..4 {
            let (w0, w1) = ((a & 1) as f64, ((a >> 1) & 1) as f64);
            reward.push(if s == 0 { w0 + 2.0 * w1 + w0 * w1 } else { 0.5 * w0 + 0.5 * w1 + 2.0 * w0 * w1 });
        }
    }
    let transition = [0.6, 0.4].repeat(8);
    let game = MarkovConvexGame::new(2, vec![2, 2], transition, reward, 0.9).expect("valid rewarding game");
    revealing(game, 0.8, 0.5)
}

/// Wraps a two-state, two-agent game: the grand coalition sees the next
/// state with probability `grand_reveal`, singletons with `singleton_reveal`,
/// otherwise observation 2 (nothing) arrives.
pub fn revealing(game: MarkovConvexGame, grand_reveal: f64, singleton_reveal: f64) -> Pomcg {
    let na = game.n_joint_actions();
    let kernel = |reveal: f64| -> Vec<f64> {
        let mut t = Vec::with_capacity(6 * na);
        for s in 0..2 {
            for _ in 0..na {
                let mut row = [0.0, 0.0, 1.0 - reveal];
                row[s] = reveal;
                t.extend_from_slice(&row);
            }
        }
        t
    };
    let tables = vec![kernel(grand_reveal), kernel(singleton_reveal)];
    Pomcg::new(game, vec![3, 1], tables, vec![0.5, 0.5], grand_and_singletons()).expect("valid revealing model")
}
