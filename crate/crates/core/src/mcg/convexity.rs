use serde::{Deserialize, Serialize};

use super::coalition::CoalitionMask;
use super::game::MarkovConvexGame;
use super::solve::{all_coalition_values, SolveOptions};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvexityMode {
    /// `V(C ∪ D) >= V(C) + V(D)` for disjoint `C`, `D`.
    Superadditive,
    /// `V(C ∪ D) + V(C ∩ D) >= V(C) + V(D)` for all `C`, `D`.
    Supermodular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityViolation {
    pub c: CoalitionMask,
    pub d: CoalitionMask,
    pub state: usize,
    /// Left-hand side minus right-hand side; negative means violated.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub mode: ConvexityMode,
    pub checked: usize,
    pub min_slack: f64,
    pub max_abs_slack: f64,
    pub violations: Vec<ConvexityViolation>,
}

impl ConvexityReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_convexity(game: &MarkovConvexGame, mode: ConvexityMode, opts: SolveOptions) -> Result<ConvexityReport> {
    game.ensure_nonnegative_rewards()?;
    let values = all_coalition_values(game, opts)?;
    Ok(check_convexity_with(&values, game.n_agents(), mode, opts.tol))
}

/// Convexity check against precomputed coalition values indexed by mask.
pub fn check_convexity_with(
    values: &[super::solve::CoalitionValueTable],
    n_agents: usize,
    mode: ConvexityMode,
    tol: f64,
) -> ConvexityReport {
    let n_states = values[0].v.len();
    let mut report = ConvexityReport {
        mode,
        checked: 0,
        min_slack: f64::INFINITY,
        max_abs_slack: 0.0,
        violations: Vec::new(),
    };
    // Pairs are unordered, so only c <= d is visited.
    for c in CoalitionMask::all(n_agents) {
        for d in CoalitionMask::all(n_agents).filter(|d| d.bits() >= c.bits()) {
            if mode == ConvexityMode::Superadditive && !c.is_disjoint(d) {
                continue;
            }
            let union = c.union(d);
            let inter = c.intersection(d);
            for s in 0..n_states {
                let lhs = match mode {
                    ConvexityMode::Superadditive => values[union.index()].v[s],
                    ConvexityMode::Supermodular => values[union.index()].v[s] + values[inter.index()].v[s],
                };
                let slack = lhs - values[c.index()].v[s] - values[d.index()].v[s];
                report.checked += 1;
                report.min_slack = report.min_slack.min(slack);
                report.max_abs_slack = report.max_abs_slack.max(slack.abs());
                if slack < -tol {
                    report.violations.push(ConvexityViolation { c, d, state: s, slack });
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::fixtures;

    const TOL: f64 = 1e-9;

    #[test]
    fn g1_passes_both_modes() {
        let g = fixtures::g1();
        for mode in [ConvexityMode::Superadditive, ConvexityMode::Supermodular] {
            let r = check_convexity(&g, mode, SolveOptions::default()).unwrap();
            assert!(r.passes(), "{mode:?}: {:?}", r.violations);
        }
    }

    #[test]
    fn majority_is_superadditive_not_supermodular() {
        let g = fixtures::g_majority();
        let opts = SolveOptions::default();
        assert!(check_convexity(&g, ConvexityMode::Superadditive, opts).unwrap().passes());
        let r = check_convexity(&g, ConvexityMode::Supermodular, opts).unwrap();
        assert!(!r.passes());
        // Two overlapping pairs: 1 + 0 - 1 - 1 = -1.
        assert!(r.violations.iter().all(|v| (v.slack + 1.0).abs() < TOL));
        assert!(r.violations.iter().all(|v| v.c.len() == 2 && v.d.len() == 2));
    }

    #[test]
    fn additive_rewards_have_zero_slack() {
        let g = fixtures::additive(3, 0.8);
        for mode in [ConvexityMode::Superadditive, ConvexityMode::Supermodular] {
            let r = check_convexity(&g, mode, SolveOptions::default()).unwrap();
            assert!(r.passes());
            assert!(r.max_abs_slack < TOL, "{mode:?} slack {}", r.max_abs_slack);
        }
    }

    #[test]
    fn negative_rewards_need_a_shift() {
        let g = MarkovConvexGame::new(1, vec![2], vec![1.0, 1.0], vec![-1.0, 0.0], 0.5).unwrap();
        assert!(check_convexity(&g, ConvexityMode::Superadditive, SolveOptions::default()).is_err());
    }
}
