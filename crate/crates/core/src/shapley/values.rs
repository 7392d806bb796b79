use crate::error::{Error, Result};
use crate::mcg::{all_coalition_values, CoalitionMask, CoalitionValueTable, MarkovConvexGame, SolveOptions, TabularMdp};

/// Optimal values of every coalition of one game, solved once and keyed by
/// coalition mask.
///
/// All marginal contributions are differences of entries of this one cache,
/// so sums along a permutation telescope exactly.
#[derive(Debug, Clone)]
pub struct CoalitionValues<'g> {
    pub(crate) game: &'g MarkovConvexGame,
    pub(crate) tables: Vec<CoalitionValueTable>,
    pub(crate) opts: SolveOptions,
}

impl<'g> CoalitionValues<'g> {
    pub fn solve(game: &'g MarkovConvexGame, opts: SolveOptions) -> Result<Self> {
        let tables = all_coalition_values(game, opts)?;
        Ok(Self { game, tables, opts })
    }

    pub fn game(&self) -> &'g MarkovConvexGame {
        self.game
    }

    pub fn n_agents(&self) -> usize {
        self.game.n_agents()
    }

    pub fn solve_tol(&self) -> f64 {
        self.opts.tol
    }

    pub fn table(&self, c: CoalitionMask) -> &CoalitionValueTable {
        &self.tables[c.index()]
    }

    pub fn tables(&self) -> &[CoalitionValueTable] {
        &self.tables
    }

    /// `max_{π_C} V^{π_C}(s)`
    pub fn value(&self, c: CoalitionMask, s: usize) -> f64 {
        self.tables[c.index()].v[s]
    }

    pub(crate) fn check_agent_outside(&self, i: usize, c: CoalitionMask) -> Result<()> {
        let n = self.n_agents();
        if c.n_agents() != n {
            return Err(Error::InvalidCoalition { mask: c.bits(), n_agents: n });
        }
        if i >= n {
            return Err(Error::InvalidArgument(format!("agent {i} is outside 0..{n}")));
        }
        if c.contains(i) {
            return Err(Error::InvalidArgument(format!("agent {i} already belongs to coalition {c}")));
        }
        Ok(())
    }

    pub(crate) fn check_state(&self, s: usize) -> Result<()> {
        if s >= self.game.n_states() {
            return Err(Error::InvalidArgument(format!("state {s} is outside 0..{}", self.game.n_states())));
        }
        Ok(())
    }
}
