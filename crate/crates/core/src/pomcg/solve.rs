use rayon::prelude::*;
use serde::Serialize;

use super::belief::{belief_reward, belief_update, observation_likelihood, BeliefState};
use super::model::Pomcg;
use super::reachable::BeliefSet;
use crate::error::{Error, Result};
use crate::mcg::{build_coalition_subgame, CoalitionMask, CoalitionSubgame, SolveOptions, TabularMdp};
use crate::numeric::{max_of, sup_distance, TIE_EPS};

/// One observation branch of a belief-action pair.
#[derive(Debug, Clone)]
pub struct Branch {
    pub obs: usize,
    pub prob: f64,
    /// Index of the successor belief, `None` when it lies outside the set.
    pub next: Option<usize>,
    pub successor: BeliefState,
}

/// The belief MDP of one coalition over a fixed belief set.
#[derive(Debug)]
pub struct BeliefMdp<'p> {
    pub pomcg: &'p Pomcg,
    pub sub: CoalitionSubgame<'p>,
    pub set: BeliefSet,
    /// `reward[b][c]`
    pub reward: Vec<Vec<f64>>,
    /// `branches[b][c]`
    pub branches: Vec<Vec<Vec<Branch>>>,
}

impl<'p> BeliefMdp<'p> {
    pub fn build(pomcg: &'p Pomcg, set: BeliefSet) -> Result<Self> {
        let sub = build_coalition_subgame(pomcg.base(), set.coalition)?;
        if set.cs_tag != pomcg.tag_for(set.coalition) {
            return Err(Error::InvalidArgument("belief set carries the wrong coalition structure".into()));
        }
        let na = sub.n_actions();
        let mut reward = Vec::with_capacity(set.len());
        let mut branches = Vec::with_capacity(set.len());
        for b in set.beliefs() {
            let mut rb = Vec::with_capacity(na);
            let mut bb = Vec::with_capacity(na);
            for c in 0..na {
                let joint = sub.full_joint(c);
                rb.push(belief_reward(pomcg, b, joint)?);
                let mut list = Vec::new();
                for (obs, prob) in observation_likelihood(pomcg, b, joint)?.into_iter().enumerate() {
                    if prob > 0.0 {
                        let successor = belief_update(pomcg, b, joint, obs)?;
                        list.push(Branch { obs, prob, next: set.find(&successor), successor });
                    }
                }
                bb.push(list);
            }
            reward.push(rb);
            branches.push(bb);
        }
        Ok(Self { pomcg, sub, set, reward, branches })
    }

    pub fn n_beliefs(&self) -> usize {
        self.set.len()
    }

    pub fn n_actions(&self) -> usize {
        self.sub.n_actions()
    }

    pub fn gamma(&self) -> f64 {
        self.pomcg.base().gamma()
    }

    /// First branch leaving the set.
    pub fn open_branch(&self) -> Option<&Branch> {
        self.branches.iter().flatten().flatten().find(|br| br.next.is_none())
    }

    fn ensure_closed(&self) -> Result<()> {
        match self.open_branch() {
            Some(br) => Err(Error::OpenBeliefSet { belief: br.successor.probs.clone(), cs_tag: br.successor.cs_tag }),
            None => Ok(()),
        }
    }

    /// `R_b(b, c) + γ Σ_o Pr(o|b, c) v(τ(b, c, o))` on a closed set.
    fn lookahead(&self, v: &[f64], b: usize, c: usize) -> f64 {
        let future: f64 = self.branches[b][c].iter().map(|br| br.prob * v[br.next.expect("closed set")]).sum();
        self.reward[b][c] + self.gamma() * future
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PosviResult {
    pub coalition: CoalitionMask,
    pub beliefs: Vec<BeliefState>,
    /// `q[b][c]`
    pub q: Vec<Vec<f64>>,
    pub v: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub tol: f64,
}

fn stop_threshold(gamma: f64, tol: f64) -> f64 {
    if gamma == 0.0 {
        f64::INFINITY
    } else {
        tol * (1.0 - gamma) / gamma
    }
}

/// Value iteration on a closed belief set, accurate to `opts.tol` in sup norm.
pub fn posvi(mdp: &BeliefMdp<'_>, opts: SolveOptions) -> Result<PosviResult> {
    mdp.ensure_closed()?;
    let (nb, na) = (mdp.n_beliefs(), mdp.n_actions());
    let stop = stop_threshold(mdp.gamma(), opts.tol);
    let mut v = vec![0.0; nb];
    for it in 1..=opts.max_iters {
        let q: Vec<Vec<f64>> =
            (0..nb).into_par_iter().map(|b| (0..na).map(|c| mdp.lookahead(&v, b, c)).collect()).collect();
        let next: Vec<f64> = q.iter().map(|row| max_of(row)).collect();
        let change = sup_distance(&next, &v);
        v = next;
        if change <= stop {
            return Ok(PosviResult {
                coalition: mdp.set.coalition,
                beliefs: mdp.set.beliefs().to_vec(),
                q,
                v,
                iterations: it,
                residual: change,
                tol: opts.tol,
            });
        }
    }
    let residual = (0..nb)
        .map(|b| ((0..na).map(|c| mdp.lookahead(&v, b, c)).fold(f64::NEG_INFINITY, f64::max) - v[b]).abs())
        .fold(0.0, f64::max);
    Err(Error::NonConvergence { iterations: opts.max_iters, residual })
}

/// Horizon-`h` optimal values; `None` where the lookahead leaves the set.
pub fn posvi_finite(mdp: &BeliefMdp<'_>, horizon: usize) -> Vec<Option<f64>> {
    let (nb, na) = (mdp.n_beliefs(), mdp.n_actions());
    let mut v: Vec<Option<f64>> = vec![Some(0.0); nb];
    for m in 1..=horizon {
        v = (0..nb)
            .map(|b| {
                let mut best = f64::NEG_INFINITY;
                for c in 0..na {
                    let mut future = 0.0;
                    for br in &mdp.branches[b][c] {
                        let succ = if m == 1 { Some(0.0) } else { br.next.and_then(|j| v[j]) };
                        future += br.prob * succ?;
                    }
                    best = best.max(mdp.reward[b][c] + mdp.gamma() * future);
                }
                Some(best)
            })
            .collect();
    }
    v
}

/// `Q(b, c) ← (1-η) Q(b, c) + η [R(s, c) + γ max_{c'} Q(τ(b, c, o), c')]` for a sampled `(s, o)`.
pub fn sampled_belief_q_update(
    mdp: &BeliefMdp<'_>,
    q: &mut [Vec<f64>],
    b: usize,
    c: usize,
    s: usize,
    obs: usize,
    step: f64,
) -> Result<()> {
    let br = mdp.branches[b][c]
        .iter()
        .find(|br| br.obs == obs)
        .ok_or(Error::ImpossibleObservation { observation: obs })?;
    let next = br.next.ok_or_else(|| Error::OpenBeliefSet {
        belief: br.successor.probs.clone(),
        cs_tag: br.successor.cs_tag,
    })?;
    let target = mdp.pomcg.base().reward(s, mdp.sub.full_joint(c)) + mdp.gamma() * max_of(&q[next]);
    q[b][c] += step * (target - q[b][c]);
    Ok(())
}

/// Expected sampled target `R_b + γ Σ_o Pr(o) max Q(τ, ·)`: the exact backup of `q`.
pub fn belief_q_backup(mdp: &BeliefMdp<'_>, q: &[Vec<f64>], b: usize, c: usize) -> Result<f64> {
    mdp.ensure_closed()?;
    let v: Vec<f64> = q.iter().map(|row| max_of(row)).collect();
    Ok(mdp.lookahead(&v, b, c))
}

#[derive(Debug, Clone, Serialize)]
pub struct PospiResult {
    /// `policy[b][i]` on the grand coalition's beliefs.
    pub policy: Vec<Vec<usize>>,
    /// Coalition values under the final policy, indexed by mask.
    pub values: Vec<Vec<f64>>,
    /// Grand-coalition values after each evaluation.
    pub history: Vec<Vec<f64>>,
    pub improvements: usize,
}

/// Policy iteration over coalition belief MDPs, one per mask.
///
/// Coalition `C` follows the grand policy's actions for its members at the
/// belief with the same probabilities. Agents improve one after another by
/// maximizing their weighted marginal-contribution sum.
pub fn pospi(mdps: &[BeliefMdp<'_>], opts: SolveOptions) -> Result<PospiResult> {
    let n = mdps.first().map(|m| m.pomcg.n_agents()).ok_or_else(|| Error::InvalidArgument("no coalitions".into()))?;
    if mdps.len() != 1 << n || mdps.iter().enumerate().any(|(k, m)| m.set.coalition.index() != k) {
        return Err(Error::InvalidArgument("need one belief MDP per coalition, in mask order".into()));
    }
    for m in mdps {
        m.ensure_closed()?;
    }
    let grand = &mdps[(1 << n) - 1];
    let actions = grand.pomcg.base().actions_per_agent().to_vec();
    let null = grand.pomcg.base().null_action().to_vec();
    // Grand-belief index for every belief of every coalition.
    let links: Vec<Vec<usize>> = mdps
        .iter()
        .map(|m| {
            m.set
                .beliefs()
                .iter()
                .map(|b| {
                    grand.set.find_probs(&b.probs).ok_or_else(|| {
                        Error::Inapplicable("coalition belief supports differ from the grand coalition's".into())
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let weights: Vec<f64> = (0..n).map(|k| crate::shapley::coalition_weight(n, k)).collect::<Result<_>>()?;

    let mut policy: Vec<Vec<usize>> = vec![null.clone(); grand.n_beliefs()];
    let mut history = Vec::new();
    for improvements in 0..opts.max_iters {
        let values: Vec<Vec<f64>> = mdps
            .par_iter()
            .enumerate()
            .map(|(k, m)| {
                let acts = coalition_actions(m, &links[k], &policy);
                evaluate(m, &acts, opts)
            })
            .collect::<Result<_>>()?;
        history.push(values[(1 << n) - 1].clone());

        let mut next = policy.clone();
        for i in 0..n {
            for gb in 0..grand.n_beliefs() {
                let probs = &grand.set.belief(gb).probs;
                let score = |a_i: usize| -> f64 {
                    CoalitionMask::grand(n)
                        .without(i)
                        .subsets()
                        .map(|c| {
                            let with = c.with(i);
                            let (mw, mc) = (&mdps[with.index()], &mdps[c.index()]);
                            let bw = mw.set.find_probs(probs).expect("linked support");
                            let bc = mc.set.find_probs(probs).expect("linked support");
                            let mut joint = null.clone();
                            for m in c.members() {
                                joint[m] = next[gb][m];
                            }
                            joint[i] = a_i;
                            let cw = coalition_index(mw, &joint);
                            weights[c.len()] * (mw.lookahead(&values[with.index()], bw, cw) - values[c.index()][bc])
                        })
                        .sum()
                };
                let current = next[gb][i];
                let base = score(current);
                let (best, best_score) = (0..actions[i])
                    .map(|a| (a, score(a)))
                    .fold((current, base), |acc, x| if x.1 > acc.1 + TIE_EPS { x } else { acc });
                if best_score > base + TIE_EPS {
                    next[gb][i] = best;
                }
            }
        }
        if next == policy {
            return Ok(PospiResult { policy, values, history, improvements });
        }
        policy = next;
    }
    Err(Error::NonConvergence { iterations: opts.max_iters, residual: f64::NAN })
}

fn coalition_index(m: &BeliefMdp<'_>, joint: &[usize]) -> usize {
    m.sub.members().iter().zip(m.sub.member_actions()).rev().fold(0, |acc, (&agent, &k)| acc * k + joint[agent])
}

fn coalition_actions(m: &BeliefMdp<'_>, link: &[usize], policy: &[Vec<usize>]) -> Vec<usize> {
    link.iter().map(|&gb| coalition_index(m, &policy[gb])).collect()
}

/// Value of a fixed coalition action per belief, accurate to `opts.tol`.
fn evaluate(m: &BeliefMdp<'_>, acts: &[usize], opts: SolveOptions) -> Result<Vec<f64>> {
    let stop = stop_threshold(m.gamma(), opts.tol);
    let mut v = vec![0.0; m.n_beliefs()];
    for _ in 0..opts.max_iters {
        let next: Vec<f64> = (0..m.n_beliefs()).map(|b| m.lookahead(&v, b, acts[b])).collect();
        let change = sup_distance(&next, &v);
        v = next;
        if change <= stop {
            return Ok(v);
        }
    }
    Err(Error::NonConvergence { iterations: opts.max_iters, residual: f64::NAN })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::fixtures as games;
    use crate::mcg::{joint_value_iteration, optimal_coalition_value};
    use crate::pomcg::{fixtures, reachable_beliefs, DEFAULT_BELIEF_CAP};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mdp(p: &Pomcg, c: CoalitionMask, horizon: usize) -> BeliefMdp<'_> {
        BeliefMdp::build(p, reachable_beliefs(p, c, horizon, DEFAULT_BELIEF_CAP).unwrap()).unwrap()
    }

    fn all_mdps(p: &Pomcg, horizon: usize) -> Vec<BeliefMdp<'_>> {
        CoalitionMask::all(p.n_agents()).map(|c| mdp(p, c, horizon)).collect()
    }

    #[test]
    fn fully_observable_matches_mdp_values() {
        let g = games::g4();
        let p = fixtures::fully_observable(g.clone(), vec![0.5, 0.5]);
        let opts = SolveOptions::with_tol(1e-12);
        for c in CoalitionMask::all(2) {
            let m = mdp(&p, c, 3);
            let r = posvi(&m, opts).unwrap();
            let exact = optimal_coalition_value(&g, c, opts).unwrap();
            for s in 0..2 {
                let b = m.set.find_probs(&BeliefState::point(2, s, 0).probs).unwrap();
                assert!((r.v[b] - exact.v[s]).abs() <= 1e-10, "{c} s={s}");
            }
        }
    }

    #[test]
    fn myopic_values_are_belief_rewards() {
        let p = fixtures::glimpse();
        let base = p.base().with_gamma(0.0).unwrap();
        let mut obs = Vec::new();
        for t in 0..2 {
            let mut flat = Vec::new();
            for s in 0..2 {
                for a in 0..4 {
                    flat.extend_from_slice(p.obs_row(t, s, a));
                }
            }
            obs.push(flat);
        }
        let q = Pomcg::new(base, p.observations_per_agent().to_vec(), obs, p.initial().to_vec(), p.cs_tags().to_vec())
            .unwrap();
        let m = mdp(&q, CoalitionMask::grand(2), 4);
        let r = posvi(&m, SolveOptions::default()).unwrap();
        for b in 0..m.n_beliefs() {
            assert_eq!(r.q[b], m.reward[b]);
        }
    }

    #[test]
    fn open_sets_are_refused() {
        let p = fixtures::noisy();
        let m = mdp(&p, CoalitionMask::grand(2), 3);
        assert!(matches!(posvi(&m, SolveOptions::default()), Err(Error::OpenBeliefSet { .. })));
    }

    #[test]
    fn finite_horizon_converges_to_closed_solution() {
        let p = fixtures::glimpse();
        let m = mdp(&p, CoalitionMask::grand(2), 4);
        let r = posvi(&m, SolveOptions::with_tol(1e-12)).unwrap();
        let h = 300;
        let finite = posvi_finite(&m, h);
        let tail = 0.9f64.powi(h as i32) * 4.0 / 0.1;
        for b in 0..m.n_beliefs() {
            assert!((finite[b].unwrap() - r.v[b]).abs() <= tail + 1e-10);
        }
    }

    #[test]
    fn finite_horizon_is_defined_near_the_root() {
        let p = fixtures::noisy();
        let m = mdp(&p, CoalitionMask::grand(2), 6);
        let v = posvi_finite(&m, 3);
        for b in 0..m.n_beliefs() {
            assert_eq!(v[b].is_some(), m.set.depth(b) <= 4, "depth {}", m.set.depth(b));
        }
    }

    fn assert_pospi_matches_posvi(p: &Pomcg, tol: f64) {
        let opts = SolveOptions::with_tol(tol);
        let mdps = all_mdps(p, 6);
        let pi = pospi(&mdps, opts).unwrap();
        for (k, m) in mdps.iter().enumerate() {
            let vi = posvi(m, opts).unwrap();
            for b in 0..m.n_beliefs() {
                assert!((pi.values[k][b] - vi.v[b]).abs() <= 2.0 * tol, "mask {k} belief {b}");
            }
        }
        let grand = &mdps[3];
        let vi = posvi(grand, opts).unwrap();
        for b in 0..grand.n_beliefs() {
            let greedy = crate::numeric::argmax_with_ties(&vi.q[b], TIE_EPS);
            assert_eq!(grand.sub.decode(greedy), pi.policy[b]);
        }
        for w in pi.history.windows(2) {
            assert!(w[1].iter().zip(&w[0]).all(|(new, old)| *new >= old - 2.0 * tol));
        }
    }

    #[test]
    fn pospi_agrees_with_posvi() {
        assert_pospi_matches_posvi(&fixtures::fully_observable(games::g4(), vec![0.5, 0.5]), 1e-10);
        assert_pospi_matches_posvi(&fixtures::fully_observable(games::g1(), vec![1.0, 0.0]), 1e-10);
        assert_pospi_matches_posvi(&fixtures::rewarding(), 1e-10);
    }

    #[test]
    fn pospi_stalls_when_only_joint_work_pays() {
        let tol = 1e-10;
        let p = fixtures::glimpse();
        let mdps = all_mdps(&p, 6);
        let pi = pospi(&mdps, SolveOptions::with_tol(tol)).unwrap();
        let vi = posvi(&mdps[3], SolveOptions::with_tol(tol)).unwrap();
        let b = mdps[3].set.find_probs(&[0.0, 1.0]).unwrap();
        assert_eq!(pi.policy[b], vec![0, 0]);
        assert!(vi.v[b] - pi.values[3][b] > 1.0);
    }

    #[test]
    fn fully_observable_pospi_matches_policy_iteration() {
        let g = games::g4();
        let p = fixtures::fully_observable(g.clone(), vec![0.5, 0.5]);
        let mdps = all_mdps(&p, 3);
        let pi = pospi(&mdps, SolveOptions::with_tol(1e-11)).unwrap();
        let reference = crate::mcg::policy_iteration(&g, SolveOptions::with_tol(1e-11)).unwrap();
        for s in 0..2 {
            let b = mdps[3].set.find_probs(&BeliefState::point(2, s, 0).probs).unwrap();
            assert_eq!(pi.policy[b], reference.policy[s]);
            assert!((pi.values[3][b] - reference.v[s]).abs() < 1e-9);
        }
        let joint = joint_value_iteration(&g, SolveOptions::default()).unwrap();
        assert!(joint.v.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn sampled_update_on_a_deterministic_step_is_the_backup() {
        let p = fixtures::fully_observable(games::g1(), vec![1.0, 0.0]);
        let m = mdp(&p, CoalitionMask::grand(2), 2);
        let mut q = vec![vec![0.5; 4]; m.n_beliefs()];
        let b = m.set.find_probs(&[1.0, 0.0]).unwrap();
        let expected = belief_q_backup(&m, &q, b, 3).unwrap();
        sampled_belief_q_update(&m, &mut q, b, 3, 0, 1, 1.0).unwrap();
        assert!((q[b][3] - expected).abs() < 1e-15);
    }

    #[test]
    fn fixed_point_is_unchanged_by_sampled_updates() {
        let p = fixtures::fully_observable(games::g1(), vec![1.0, 0.0]);
        let m = mdp(&p, CoalitionMask::grand(2), 2);
        let r = posvi(&m, SolveOptions::with_tol(1e-13)).unwrap();
        let mut q = r.q.clone();
        let b = m.set.find_probs(&[1.0, 0.0]).unwrap();
        sampled_belief_q_update(&m, &mut q, b, 3, 0, 1, 0.5).unwrap();
        assert!((q[b][3] - r.q[b][3]).abs() < 1e-11);
    }

    #[test]
    fn sampled_targets_average_to_the_backup() {
        let p = fixtures::glimpse();
        let m = mdp(&p, CoalitionMask::grand(2), 4);
        let r = posvi(&m, SolveOptions::with_tol(1e-12)).unwrap();
        let b = m.set.find_probs(&[0.5, 0.5]).unwrap();
        let c = 3;
        let exact = belief_q_backup(&m, &r.q, b, c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let draws = 10_000;
        let mut total = 0.0;
        for _ in 0..draws {
            let s = if rng.gen::<f64>() < 0.5 { 0 } else { 1 };
            let next = if rng.gen::<f64>() < 0.6 { 0 } else { 1 };
            let joint = m.sub.full_joint(c);
            let row = p.obs_row(m.set.cs_tag, next, joint);
            let u: f64 = rng.gen();
            let obs = if u < row[0] { 0 } else if u < row[0] + row[1] { 1 } else { 2 };
            let mut q = r.q.clone();
            q[b][c] = 0.0;
            sampled_belief_q_update(&m, &mut q, b, c, s, obs, 1.0).unwrap();
            total += q[b][c];
        }
        assert!((total / draws as f64 - exact).abs() <= 0.02);
    }
}
