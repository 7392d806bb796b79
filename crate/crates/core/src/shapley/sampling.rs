use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::marginal::{coalition_weight, max_with_member_fixed};
use super::values::CoalitionValues;
use crate::error::{Error, Result};
use crate::mcg::CoalitionMask;
use crate::numeric::CompensatedSum;

/// How predecessor coalitions are generated for a Monte-Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McSampling {
    /// `samples` uniform permutations; sample `m` draws from stream `m` of `seed`.
    Permutations { samples: usize, seed: u64 },
    /// Every subset of the other agents, weighted by its exact probability.
    Exhaustive,
}

/// Predecessors of `i` in a uniformly random ordering of `n` agents.
pub fn sample_coalition<R: Rng + ?Sized>(i: usize, n: usize, rng: &mut R) -> CoalitionMask {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut c = CoalitionMask::empty(n);
    for &j in order.iter().take_while(|&&j| j != i) {
        c = c.with(j);
    }
    c
}

/// Generator for sample `m`; independent of how samples are split across threads.
pub fn sample_rng(seed: u64, m: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(m as u64);
    rng
}

/// Monte-Carlo estimate of `Q^φ_i(s, a_i)`.
pub fn mc_msq(values: &CoalitionValues<'_>, i: usize, s: usize, a_i: usize, sampling: McSampling) -> Result<f64> {
    check(values, i, s)?;
    let k = values.game().actions_per_agent()[i];
    if a_i >= k {
        return Err(Error::InvalidArgument(format!("action {a_i} of agent {i} is outside 0..{k}")));
    }
    estimate(values, i, sampling, |c| {
        max_with_member_fixed(values, c.with(i), i, a_i, s) - values.value(c, s)
    })
}

/// Monte-Carlo estimate of `V^φ_i(s)`.
pub fn mc_msv(values: &CoalitionValues<'_>, i: usize, s: usize, sampling: McSampling) -> Result<f64> {
    check(values, i, s)?;
    estimate(values, i, sampling, |c| values.value(c.with(i), s) - values.value(c, s))
}

fn check(values: &CoalitionValues<'_>, i: usize, s: usize) -> Result<()> {
    values.check_agent_outside(i, CoalitionMask::empty(values.n_agents()))?;
    values.check_state(s)
}

fn estimate(
    values: &CoalitionValues<'_>,
    i: usize,
    sampling: McSampling,
    contribution: impl Fn(CoalitionMask) -> f64 + Sync,
) -> Result<f64> {
    let n = values.n_agents();
    match sampling {
        McSampling::Permutations { samples: 0, .. } => {
            Err(Error::InvalidArgument("Monte-Carlo estimate needs at least one sample".into()))
        }
        McSampling::Permutations { samples, seed } => {
            let draws: Vec<f64> = (0..samples)
                .into_par_iter()
                .map(|m| contribution(sample_coalition(i, n, &mut sample_rng(seed, m))))
                .collect();
            let mut total = CompensatedSum::new();
            draws.into_iter().for_each(|x| total.add(x));
            Ok(total.value() / samples as f64)
        }
        McSampling::Exhaustive => {
            let mut total = CompensatedSum::new();
            for c in CoalitionMask::grand(n).without(i).subsets() {
                total.add(coalition_weight(n, c.len())? * contribution(c));
            }
            Ok(total.value())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::fixtures;
    use crate::mcg::SolveOptions;
    use crate::shapley::exact::exact_msq;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn two_agents_split_evenly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 20_000;
        let empty = (0..draws).filter(|_| sample_coalition(0, 2, &mut rng).is_empty()).count();
        let p = empty as f64 / draws as f64;
        assert!((p - 0.5).abs() < 0.02, "{p}");
    }

    #[test]
    fn single_agent_has_no_predecessors() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10 {
            assert!(sample_coalition(0, 1, &mut rng).is_empty());
        }
    }

    #[test]
    fn subset_histogram_matches_weights() {
        let n = 4;
        let i = 2;
        let draws = 100_000usize;
        let mut counts = vec![0usize; 1 << n];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..draws {
            counts[sample_coalition(i, n, &mut rng).index()] += 1;
        }
        let mut stat = 0.0;
        let mut cells = 0;
        for c in CoalitionMask::grand(n).without(i).subsets() {
            let expected = coalition_weight(n, c.len()).unwrap() * draws as f64;
            stat += (counts[c.index()] as f64 - expected).powi(2) / expected;
            cells += 1;
        }
        let p = 1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat);
        assert!(p > 0.01, "chi-square p = {p}");
    }

    #[test]
    fn three_agent_sizes_are_uniform() {
        let draws = 100_000usize;
        let mut sizes = [0usize; 3];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..draws {
            sizes[sample_coalition(0, 3, &mut rng).len()] += 1;
        }
        let expected = draws as f64 / 3.0;
        let stat: f64 = sizes.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
        let p = 1.0 - ChiSquared::new(2.0).unwrap().cdf(stat);
        assert!(p > 0.01, "chi-square p = {p}");
    }

    #[test]
    fn exhaustive_matches_exact() {
        for f in fixtures::catalog() {
            let values = CoalitionValues::solve(&f.game, SolveOptions::default()).unwrap();
            let exact = exact_msq(&values, 0).unwrap();
            for i in 0..f.game.n_agents() {
                let v = mc_msv(&values, i, 0, McSampling::Exhaustive).unwrap();
                assert!((v - exact.v[i]).abs() <= 1e-12, "{}", f.name);
                for a in 0..f.game.actions_per_agent()[i] {
                    let q = mc_msq(&values, i, 0, a, McSampling::Exhaustive).unwrap();
                    assert!((q - exact.q[i][a]).abs() <= 1e-12, "{}", f.name);
                }
            }
        }
    }

    #[test]
    fn g1_estimate_is_close() {
        let g = fixtures::g1();
        let values = CoalitionValues::solve(&g, SolveOptions::default()).unwrap();
        let hits = (0..20)
            .filter(|&seed| {
                let est = mc_msq(&values, 0, 0, fixtures::WORK, McSampling::Permutations { samples: 100_000, seed })
                    .unwrap();
                (est - 1.5).abs() <= 0.01
            })
            .count();
        assert!(hits >= 19, "{hits}/20");
    }

    #[test]
    fn dummy_estimate_is_exactly_zero() {
        let g = fixtures::g_dummy();
        let values = CoalitionValues::solve(&g, SolveOptions::default()).unwrap();
        for a in 0..2 {
            let est = mc_msq(&values, 0, 0, a, McSampling::Permutations { samples: 37, seed: 9 }).unwrap();
            assert_eq!(est, 0.0);
        }
    }

    #[test]
    fn zero_samples_is_rejected() {
        let g = fixtures::g1();
        let values = CoalitionValues::solve(&g, SolveOptions::default()).unwrap();
        let r = mc_msq(&values, 0, 0, 0, McSampling::Permutations { samples: 0, seed: 0 });
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn estimate_is_independent_of_thread_count() {
        let g = fixtures::g3_convex();
        let values = CoalitionValues::solve(&g, SolveOptions::default()).unwrap();
        let sampling = McSampling::Permutations { samples: 500, seed: 42 };
        let parallel = mc_msv(&values, 1, 0, sampling).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let serial = pool.install(|| mc_msv(&values, 1, 0, sampling).unwrap());
        assert_eq!(parallel.to_bits(), serial.to_bits());
    }
}
