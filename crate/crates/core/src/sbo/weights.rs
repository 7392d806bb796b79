use serde::Serialize;

use crate::error::{Error, Result};
use crate::mcg::{MarkovConvexGame, TabularMdp};

/// Per-agent weights `w_i(s, a_i) > 0` and offsets `b_i(s) >= 0`.
///
/// With `greedy_weight = Some(g)`, the weight of whichever action is
/// currently greedy for an agent is `g` and the table entry is used for the
/// other actions only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SboWeights {
    pub w: Vec<Vec<Vec<f64>>>,
    pub b: Vec<Vec<f64>>,
    pub greedy_weight: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionCheck {
    pub ok: bool,
    pub margin: f64,
    /// `max_s Σ_i max_{a_i} w_i(s, a_i)`
    pub weight_mass: f64,
}

impl SboWeights {
    /// `w = 1/n` on greedy actions, `1/(n α)` elsewhere, `b = 0`.
    pub fn with_alpha(game: &MarkovConvexGame, alpha: &[Vec<Vec<f64>>]) -> Result<Self> {
        let n = game.n_agents() as f64;
        let shaped = alpha.len() == game.n_agents()
            && alpha.iter().enumerate().all(|(i, ai)| {
                ai.len() == game.n_states() && ai.iter().all(|row| row.len() == game.actions_per_agent()[i])
            });
        if !shaped {
            return Err(Error::Shape("alpha table does not match the game".into()));
        }
        if let Some(a) = alpha.iter().flatten().flatten().find(|a| !(**a >= 1.0) || !a.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha must be finite and at least 1, got {a}")));
        }
        let w = alpha
            .iter()
            .map(|ai| ai.iter().map(|row| row.iter().map(|a| 1.0 / (n * a)).collect()).collect())
            .collect();
        let weights = Self { w, b: zero_offsets(game), greedy_weight: Some(1.0 / n) };
        weights.validate(game)?;
        Ok(weights)
    }

    /// The `α ≡ 1` member: every action weighs `1/n`.
    pub fn equal_credit(game: &MarkovConvexGame) -> Self {
        let alpha: Vec<Vec<Vec<f64>>> = game
            .actions_per_agent()
            .iter()
            .map(|&k| vec![vec![1.0; k]; game.n_states()])
            .collect();
        Self::with_alpha(game, &alpha).expect("unit alpha is valid")
    }

    /// Constant weight `w` on every entry, `b = 0`.
    pub fn uniform(game: &MarkovConvexGame, w: f64) -> Result<Self> {
        let table = game.actions_per_agent().iter().map(|&k| vec![vec![w; k]; game.n_states()]).collect();
        Self::fixed(game, table, zero_offsets(game))
    }

    pub fn fixed(game: &MarkovConvexGame, w: Vec<Vec<Vec<f64>>>, b: Vec<Vec<f64>>) -> Result<Self> {
        let weights = Self { w, b, greedy_weight: None };
        weights.validate(game)?;
        Ok(weights)
    }

    pub fn validate(&self, game: &MarkovConvexGame) -> Result<()> {
        let (n, ns) = (game.n_agents(), game.n_states());
        let shaped = self.w.len() == n
            && self.b.len() == n
            && self.b.iter().all(|bi| bi.len() == ns)
            && self.w.iter().enumerate().all(|(i, wi)| {
                wi.len() == ns && wi.iter().all(|row| row.len() == game.actions_per_agent()[i])
            });
        if !shaped {
            return Err(Error::Shape("weight or offset table does not match the game".into()));
        }
        let all_w = self.w.iter().flatten().flatten().chain(self.greedy_weight.iter());
        if let Some(w) = all_w.into_iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument(format!("weights must be positive and finite, got {w}")));
        }
        if let Some(b) = self.b.iter().flatten().find(|b| !(**b >= 0.0) || !b.is_finite()) {
            return Err(Error::InvalidArgument(format!("offsets must be nonnegative and finite, got {b}")));
        }
        if let Some((s, r)) = self.constraint_residual().into_iter().enumerate().find(|(_, r)| r.abs() > 1e-12) {
            return Err(Error::InvalidArgument(format!("offset constraint violated at state {s}: residual {r}")));
        }
        Ok(())
    }

    pub fn n_agents(&self) -> usize {
        self.w.len()
    }

    /// Weight of `a_i` when `greedy` is agent `i`'s current greedy action.
    pub fn weight(&self, i: usize, s: usize, a_i: usize, greedy: usize) -> f64 {
        match self.greedy_weight {
            Some(g) if a_i == greedy => g,
            _ => self.w[i][s][a_i],
        }
    }

    /// Largest weight agent `i` can receive at `s` over all greedy choices.
    pub fn max_weight(&self, i: usize, s: usize) -> f64 {
        let table = self.w[i][s].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.greedy_weight.map_or(table, |g| table.max(g))
    }

    /// `Σ_i b_i(s) / max_{a_i} w_i(s, a_i)` per state.
    pub fn constraint_residual(&self) -> Vec<f64> {
        let ns = self.b.first().map_or(0, Vec::len);
        (0..ns)
            .map(|s| (0..self.n_agents()).map(|i| self.b[i][s] / self.max_weight(i, s)).sum())
            .collect()
    }

    pub fn is_equal_credit(&self) -> bool {
        let n = self.n_agents() as f64;
        self.greedy_weight.is_some_and(|g| (g - 1.0 / n).abs() <= 1e-15) && self.b.iter().flatten().all(|&b| b == 0.0)
    }
}

fn zero_offsets(game: &MarkovConvexGame) -> Vec<Vec<f64>> {
    vec![vec![0.0; game.n_states()]; game.n_agents()]
}

/// `margin = 1/γ - max_s Σ_i max_{a_i} w_i(s, a_i)`, infinite for `γ = 0`.
pub fn contraction_condition(weights: &SboWeights, gamma: f64) -> ContractionCheck {
    let ns = weights.b.first().map_or(0, Vec::len);
    let weight_mass = (0..ns)
        .map(|s| (0..weights.n_agents()).map(|i| weights.max_weight(i, s)).sum::<f64>())
        .fold(0.0, f64::max);
    let margin = if gamma == 0.0 { f64::INFINITY } else { 1.0 / gamma - weight_mass };
    ContractionCheck { ok: margin > 0.0, margin, weight_mass }
}
