use serde::Serialize;

use super::model::Pomcg;
use crate::error::{Error, Result};
use crate::mcg::TabularMdp;

/// Resolution at which two beliefs count as the same.
pub const BELIEF_RESOLUTION: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeliefState {
    pub probs: Vec<f64>,
    pub cs_tag: usize,
}

/// Canonical identity of a belief: its tag and probabilities quantized to [`BELIEF_RESOLUTION`].
pub type BeliefKey = (usize, Vec<i64>);

impl BeliefState {
    pub fn new(probs: Vec<f64>, cs_tag: usize) -> Result<Self> {
        let total: f64 = probs.iter().sum();
        if probs.is_empty() || probs.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("belief {probs:?} is not a distribution")));
        }
        Ok(Self { probs, cs_tag })
    }

    pub fn point(n_states: usize, s: usize, cs_tag: usize) -> Self {
        let mut probs = vec![0.0; n_states];
        probs[s] = 1.0;
        Self { probs, cs_tag }
    }

    pub fn key(&self) -> BeliefKey {
        (self.cs_tag, self.probs.iter().map(|p| (p / BELIEF_RESOLUTION).round() as i64).collect())
    }
}

fn predicted(pomcg: &Pomcg, b: &BeliefState, joint: usize) -> Vec<f64> {
    let ns = pomcg.n_states();
    let mut next = vec![0.0; ns];
    for (s, &p) in b.probs.iter().enumerate().filter(|(_, p)| **p > 0.0) {
        for (t, q) in pomcg.base().transition_row(s, joint).iter().enumerate() {
            next[t] += p * q;
        }
    }
    next
}

fn check(pomcg: &Pomcg, b: &BeliefState, joint: usize) -> Result<()> {
    if b.probs.len() != pomcg.n_states() || b.cs_tag >= pomcg.cs_tags().len() {
        return Err(Error::Shape("belief does not match the model".into()));
    }
    if joint >= pomcg.base().n_joint_actions() {
        return Err(Error::InvalidArgument(format!("joint action {joint} is out of range")));
    }
    Ok(())
}

/// `Pr(o' | b, a)` for every joint observation.
pub fn observation_likelihood(pomcg: &Pomcg, b: &BeliefState, joint: usize) -> Result<Vec<f64>> {
    check(pomcg, b, joint)?;
    let pred = predicted(pomcg, b, joint);
    let mut out = vec![0.0; pomcg.n_obs()];
    for (t, &p) in pred.iter().enumerate().filter(|(_, p)| **p > 0.0) {
        for (o, q) in pomcg.obs_row(b.cs_tag, t, joint).iter().enumerate() {
            out[o] += p * q;
        }
    }
    Ok(out)
}

/// `b'(s') ∝ Ω(o'|s', a) Σ_s Pr(s'|s, a) b(s)`
pub fn belief_update(pomcg: &Pomcg, b: &BeliefState, joint: usize, obs: usize) -> Result<BeliefState> {
    check(pomcg, b, joint)?;
    if obs >= pomcg.n_obs() {
        return Err(Error::InvalidArgument(format!("observation {obs} is out of range")));
    }
    let pred = predicted(pomcg, b, joint);
    let mut probs: Vec<f64> =
        pred.iter().enumerate().map(|(t, p)| p * pomcg.obs_row(b.cs_tag, t, joint)[obs]).collect();
    let total: f64 = probs.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ImpossibleObservation { observation: obs });
    }
    probs.iter_mut().for_each(|p| *p /= total);
    Ok(BeliefState { probs, cs_tag: b.cs_tag })
}

/// `R_b(b, a) = Σ_s b(s) R(s, a)`
pub fn belief_reward(pomcg: &Pomcg, b: &BeliefState, joint: usize) -> Result<f64> {
    check(pomcg, b, joint)?;
    Ok(b.probs.iter().enumerate().map(|(s, p)| p * pomcg.base().reward(s, joint)).sum())
}
