use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_AGENTS: usize = 16;

/// A set of agents, stored as a bitset over at most [`MAX_AGENTS`] agents.
///
/// The empty mask is the empty coalition and the full mask is the grand
/// coalition; both are valid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CoalitionMask {
    bits: u32,
    n_agents: usize,
}

impl CoalitionMask {
    pub fn new(bits: u32, n_agents: usize) -> Result<Self> {
        if n_agents > MAX_AGENTS {
            return Err(Error::Capacity(format!(
                "{n_agents} agents exceeds the {MAX_AGENTS}-agent limit"
            )));
        }
        if bits >> n_agents != 0 {
            return Err(Error::InvalidCoalition { mask: bits, n_agents });
        }
        Ok(Self { bits, n_agents })
    }

    pub fn empty(n_agents: usize) -> Self {
        Self { bits: 0, n_agents }
    }

    pub fn grand(n_agents: usize) -> Self {
        Self { bits: full_bits(n_agents), n_agents }
    }

    pub fn singleton(n_agents: usize, agent: usize) -> Result<Self> {
        if agent >= n_agents {
            return Err(Error::InvalidCoalition { mask: 1u32.wrapping_shl(agent as u32), n_agents });
        }
        Ok(Self { bits: 1 << agent, n_agents })
    }

    pub fn from_members(n_agents: usize, members: &[usize]) -> Result<Self> {
        let mut bits = 0u32;
        for &m in members {
            if m >= n_agents || m >= MAX_AGENTS {
                return Err(Error::InvalidCoalition { mask: bits | 1u32.wrapping_shl(m as u32), n_agents });
            }
            bits |= 1 << m;
        }
        Self::new(bits, n_agents)
    }

    /// Every coalition of `n_agents` agents, in increasing bit order.
    pub fn all(n_agents: usize) -> impl Iterator<Item = CoalitionMask> {
        (0..=full_bits(n_agents)).map(move |bits| CoalitionMask { bits, n_agents })
    }

    /// Every subset of `self`, including the empty set and `self`.
    pub fn subsets(self) -> impl Iterator<Item = CoalitionMask> {
        let full = self.bits;
        let n = self.n_agents;
        let mut next = Some(0u32);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == full { None } else { Some(((cur | !full).wrapping_add(1)) & full) };
            Some(CoalitionMask { bits: cur, n_agents: n })
        })
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    pub fn index(self) -> usize {
        self.bits as usize
    }

    pub fn n_agents(self) -> usize {
        self.n_agents
    }

    pub fn len(self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    pub fn is_grand(self) -> bool {
        self.bits == full_bits(self.n_agents)
    }

    pub fn contains(self, agent: usize) -> bool {
        agent < self.n_agents && self.bits & (1 << agent) != 0
    }

    pub fn with(self, agent: usize) -> Self {
        debug_assert!(agent < self.n_agents);
        Self { bits: self.bits | (1 << agent), ..self }
    }

    pub fn without(self, agent: usize) -> Self {
        Self { bits: self.bits & !(1u32.wrapping_shl(agent as u32)), ..self }
    }

    pub fn union(self, other: Self) -> Self {
        Self { bits: self.bits | other.bits, ..self }
    }

    pub fn intersection(self, other: Self) -> Self {
        Self { bits: self.bits & other.bits, ..self }
    }

    pub fn complement(self) -> Self {
        Self { bits: !self.bits & full_bits(self.n_agents), ..self }
    }

    pub fn is_disjoint(self, other: Self) -> bool {
        self.bits & other.bits == 0
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.bits & !other.bits == 0
    }

    /// Members in increasing agent order.
    pub fn members(self) -> Vec<usize> {
        (0..self.n_agents).filter(|&i| self.contains(i)).collect()
    }
}

impl fmt::Display for CoalitionMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, m) in self.members().iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, "}}")
    }
}

fn full_bits(n_agents: usize) -> u32 {
    if n_agents >= 32 {
        u32::MAX
    } else {
        (1u32 << n_agents) - 1
    }
}
