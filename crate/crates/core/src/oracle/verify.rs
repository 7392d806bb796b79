//! Cross-checks of every solver against the brute-force references.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::brute;
use crate::envs::feeder::{action_grid, droop_rollout, grid_search, DEFAULT_DROOP_SLOPE, DEFAULT_EPISODE_LEN};
use crate::envs::fixtures::{self, Fixture};
use crate::envs::voltage::{barrier_eval, solve_bus_voltage, zero_deviation_q, Barrier};
use crate::envs::{FeederModel, FeederTrace, GameEnv, GridPredatorPrey, PredatorPreyConfig, TabularEnv};
use crate::error::{Error, Result};
use crate::mcg::{greedy_joint_policy, joint_value_iteration, CoalitionMask, MarkovConvexGame, SolveOptions, TabularMdp};
use crate::numeric::max_of;
use crate::pomcg::{self, pospi, posvi, posvi_finite, reachable_beliefs, BeliefMdp, BeliefState, Pomcg};
use crate::sbo::{solve_sboe, solve_sboe_from, SboOptions, SboSolution, SboWeights};
use crate::shapley::{check_markov_core, exact_msq_table, mc_msq, CoalitionValues, McSampling, MsvTable};
use crate::shaq::presets::{
    feeder_config, feeder_env, g1_config, predator_prey_config, run_feeder, run_predator_prey, G1_STEPS,
    PREDATOR_PREY_STEPS, PREDATOR_PREY_SUCCESS, FEEDER_STEPS,
};
use crate::shaq::{extract_policy, shaq_step, train, ShaqMode, ShaqState, Transition};

const RANDOM_GAMES: u64 = 20;
const MC_SEEDS: u64 = 50;
const MC_SAMPLES: [usize; 3] = [10, 100, 1000];
const LEARNING_SEEDS: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Shapley,
    Sbo,
    Pomcg,
    Envs,
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::All => "all",
            Suite::Shapley => "shapley",
            Suite::Sbo => "sbo",
            Suite::Pomcg => "pomcg",
            Suite::Envs => "envs",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Suite::All),
            "shapley" => Ok(Suite::Shapley),
            "sbo" => Ok(Suite::Sbo),
            "pomcg" => Ok(Suite::Pomcg),
            "envs" => Ok(Suite::Envs),
            _ => Err(Error::InvalidArgument(format!("unknown suite {s:?}; expected all|shapley|sbo|pomcg|envs"))),
        }
    }
}

/// Outcome of one cross-check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub target: String,
    pub max_abs_deviation: f64,
    pub worst_case: String,
    pub tol: f64,
    pub pass: bool,
    /// Set when the check is known not to hold; such failures do not count against the run.
    pub known_limitation: Option<String>,
}

impl OracleReport {
    fn measured(target: impl Into<String>, deviation: f64, worst_case: impl Into<String>, tol: f64) -> Self {
        Self {
            target: target.into(),
            max_abs_deviation: deviation,
            worst_case: worst_case.into(),
            tol,
            pass: deviation <= tol,
            known_limitation: None,
        }
    }

    /// A yes/no check; the deviation is 1 on failure.
    fn holds(target: impl Into<String>, ok: bool, worst_case: impl Into<String>) -> Self {
        Self::measured(target, if ok { 0.0 } else { 1.0 }, worst_case, 0.0)
    }

    fn limited(mut self, note: &str) -> Self {
        if !self.pass {
            self.known_limitation = Some(note.to_string());
        }
        self
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: deviation {:.3e} (tol {:.1e}) at {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.target,
            self.max_abs_deviation,
            self.tol,
            self.worst_case
        )?;
        if let Some(note) = &self.known_limitation {
            write!(f, " [known limitation: {note}]")?;
        }
        Ok(())
    }
}

/// True when every report passes or is a known limitation.
pub fn all_pass(reports: &[OracleReport]) -> bool {
    reports.iter().all(|r| r.pass || r.known_limitation.is_some())
}

pub fn verify(suite: Suite) -> Result<Vec<OracleReport>> {
    let mut reports = Vec::new();
    if matches!(suite, Suite::All | Suite::Shapley) {
        shapley_suite(&mut reports)?;
    }
    if matches!(suite, Suite::All | Suite::Sbo) {
        sbo_suite(&mut reports)?;
    }
    if matches!(suite, Suite::All | Suite::Pomcg) {
        pomcg_suite(&mut reports)?;
    }
    if matches!(suite, Suite::All | Suite::Envs) {
        envs_suite(&mut reports)?;
    }
    Ok(reports)
}

fn tight() -> SolveOptions {
    SolveOptions::with_tol(1e-12)
}

/// Keeps the largest deviation and where it happened.
#[derive(Default)]
struct Worst {
    deviation: f64,
    case: String,
}

impl Worst {
    fn see(&mut self, deviation: f64, case: impl FnOnce() -> String) {
        let deviation = if deviation.is_nan() { f64::INFINITY } else { deviation };
        if self.case.is_empty() || deviation > self.deviation {
            self.deviation = deviation;
            self.case = case();
        }
    }

    fn report(self, target: &str, tol: f64) -> OracleReport {
        OracleReport::measured(target, self.deviation, if self.case.is_empty() { "-".into() } else { self.case }, tol)
    }
}

pub(crate) fn random_games() -> Vec<MarkovConvexGame> {
    (0..RANDOM_GAMES)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(2..=4);
            let ns = rng.gen_range(1..=5);
            fixtures::random_convex_game(&mut rng, n, ns, 3, 0.9)
        })
        .collect()
}

fn msv_of(game: &MarkovConvexGame) -> Result<(CoalitionValues<'_>, MsvTable)> {
    let values = CoalitionValues::solve(game, tight())?;
    let table = exact_msq_table(&values)?;
    Ok((values, table))
}

fn payoffs(table: &MsvTable) -> Vec<Vec<f64>> {
    (0..table.n_agents()).map(|i| (0..table.n_states()).map(|s| table.greedy_value(i, s)).collect()).collect()
}

fn shapley_suite(out: &mut Vec<OracleReport>) -> Result<()> {
    let catalog = fixtures::catalog();
    let randoms = random_games();
    let mut named: Vec<(String, &MarkovConvexGame)> = catalog.iter().map(|f| (f.name.to_string(), &f.game)).collect();
    named.extend(randoms.iter().enumerate().map(|(k, g)| (format!("random-{k}"), g)));

    let mut perm = Worst::default();
    for (name, game) in &named {
        let (_, table) = msv_of(game)?;
        let oracle = brute::all_values(game)?;
        for s in 0..game.n_states() {
            let sh = brute::perm_shapley_from(&oracle, game.n_agents(), s)?;
            for (i, x) in sh.iter().enumerate() {
                perm.see((x - table.greedy_value(i, s)).abs(), || format!("{name} agent {i} state {s}"));
            }
        }
    }
    out.push(perm.report("exact MSV vs permutation Shapley", 1e-9));

    let started = Instant::now();
    let mut efficiency = Worst::default();
    for (k, game) in randoms.iter().enumerate() {
        let (_, table) = msv_of(game)?;
        let grand = brute::coalition_value(game, game.grand())?;
        for (s, v) in grand.iter().enumerate() {
            let total: f64 = (0..game.n_agents()).map(|i| table.greedy_value(i, s)).sum();
            efficiency.see((total - v).abs(), || format!("random-{k} state {s}"));
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    out.push(efficiency.report("efficiency on 20 random convex games", 1e-8));
    out.push(OracleReport::measured("efficiency runtime (s)", elapsed, format!("{elapsed:.2}s"), 30.0));

    let dummy = fixtures::g_dummy();
    let (_, table) = msv_of(&dummy)?;
    let mut worst = Worst::default();
    for s in 0..dummy.n_states() {
        worst.see(table.greedy_value(0, s).abs(), || format!("g-dummy state {s}"));
    }
    out.push(worst.report("dummy agent MSV is zero", 1e-10));

    let mut worst = Worst::default();
    for f in catalog.iter().filter(|f| !f.symmetric_pairs.is_empty()) {
        let (_, table) = msv_of(&f.game)?;
        for &(i, j) in &f.symmetric_pairs {
            for s in 0..f.game.n_states() {
                let d = (table.greedy_value(i, s) - table.greedy_value(j, s)).abs();
                worst.see(d, || format!("{} agents {i},{j} state {s}", f.name));
            }
        }
    }
    out.push(worst.report("symmetric agents get equal MSV", 1e-10));

    core_checks(&catalog, out)?;
    monte_carlo_checks(&catalog, out)?;
    Ok(())
}

fn core_checks(catalog: &[Fixture], out: &mut Vec<OracleReport>) -> Result<()> {
    let mut slack = Worst::default();
    let mut agreement = Worst::default();
    for f in catalog {
        let (values, table) = msv_of(&f.game)?;
        let x = payoffs(&table);
        let lib = check_markov_core(&values, &x, 1e-8)?;
        let oracle = brute::enumerate_core(&f.game, &x, 1e-8)?;
        let mut d = (lib.min_slack - oracle.min_slack).abs();
        if lib.in_core != oracle.in_core {
            d = f64::INFINITY;
        }
        agreement.see(d, || f.name.to_string());
        if f.supermodular {
            slack.see((-oracle.min_slack).max(0.0), || format!("{} min slack {:.3e}", f.name, oracle.min_slack));
        }
    }
    out.push(slack.report("optimal MSV in the Markov core on supermodular fixtures", 1e-8));
    out.push(agreement.report("core check vs enumerated inequalities", 1e-9));

    let majority = fixtures::g_majority();
    let (_, table) = msv_of(&majority)?;
    let report = brute::enumerate_core(&majority, &payoffs(&table), 1e-8)?;
    let pair = CoalitionMask::from_members(3, &[0, 1])?;
    let s = report.slack(pair).map(|v| v[0]).unwrap_or(f64::NAN);
    out.push(OracleReport::holds("g-majority is outside the core", !report.in_core, format!("min slack {:.6}", report.min_slack)));
    out.push(OracleReport::measured("g-majority pair slack is -1/3", (s + 1.0 / 3.0).abs(), format!("slack {s:.12}"), 1e-9));
    Ok(())
}

/// Per-agent RMSE of the sampled greedy MSQ at state 0, one entry per sample size.
pub(crate) fn mc_rmse(values: &CoalitionValues<'_>, table: &MsvTable) -> Result<Vec<Vec<f64>>> {
    let n = table.n_agents();
    MC_SAMPLES
        .iter()
        .map(|&samples| {
            (0..n)
                .map(|i| {
                    let exact = table.greedy_value(i, 0);
                    let a = table.greedy_action(i, 0);
                    let mut sq = 0.0;
                    for seed in 0..MC_SEEDS {
                        let est = mc_msq(values, i, 0, a, McSampling::Permutations { samples, seed })?;
                        sq += (est - exact) * (est - exact);
                    }
                    Ok((sq / MC_SEEDS as f64).sqrt())
                })
                .collect()
        })
        .collect()
}

fn monte_carlo_checks(catalog: &[Fixture], out: &mut Vec<OracleReport>) -> Result<()> {
    let mut decrease = Worst::default();
    let mut relative = Worst::default();
    for f in catalog.iter().filter(|f| f.game.n_agents() == 3) {
        let (values, table) = msv_of(&f.game)?;
        let rmse = mc_rmse(&values, &table)?;
        let total: Vec<f64> = rmse.iter().map(|row| row.iter().map(|e| e * e).sum::<f64>().sqrt()).collect();
        for w in 0..total.len() - 1 {
            let rise = if total[w + 1] < total[w] { 0.0 } else { (total[w + 1] - total[w]).max(f64::MIN_POSITIVE) };
            decrease.see(rise, || format!("{} M={} -> {}: {:.4e} -> {:.4e}", f.name, MC_SAMPLES[w], MC_SAMPLES[w + 1], total[w], total[w + 1]));
        }
        let last = rmse.last().expect("sample sizes");
        for (i, e) in last.iter().enumerate() {
            let exact = table.greedy_value(i, 0).abs();
            let r = if exact > 0.0 { e / exact } else { *e };
            relative.see(r, || format!("{} agent {i}", f.name));
        }
    }
    out.push(decrease.report("Monte-Carlo RMSE strictly decreases with samples", 0.0));
    out.push(relative.report("Monte-Carlo relative error at 1000 samples", 0.05));
    Ok(())
}

fn random_init(game: &MarkovConvexGame, seed: u64) -> Vec<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    game.actions_per_agent()
        .iter()
        .map(|&k| (0..game.n_states()).map(|_| (0..k).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect())
        .collect()
}

fn sup_gap(a: &SboSolution, b: &SboSolution) -> f64 {
    a.q.iter()
        .zip(&b.q)
        .flat_map(|(x, y)| x.iter().zip(y).flat_map(|(r, t)| r.iter().zip(t).map(|(u, v)| (u - v).abs())))
        .fold(0.0, f64::max)
}

const MAJORITY_NOTE: &str = "per-agent greedy projection stalls at the all-idle profile on g-majority";

fn sbo_suite(out: &mut Vec<OracleReport>) -> Result<()> {
    let opts = SboOptions::default();
    for f in fixtures::catalog() {
        let g = &f.game;
        let weights = SboWeights::equal_credit(g);
        let sol = solve_sboe(g, &weights, opts)?;
        let note = (f.name == "g-majority").then_some(MAJORITY_NOTE);
        let limit = |r: OracleReport| match note {
            Some(n) => r.limited(n),
            None => r,
        };
        out.push(OracleReport::measured(format!("SBO residual on {}", f.name), sol.residual, "fixed point", 1e-8));
        let ratio = sol.max_ratio().unwrap_or(0.0);
        out.push(OracleReport::measured(
            format!("SBO contraction ratio on {}", f.name),
            (ratio - sol.contraction_bound).max(0.0),
            format!("ratio {ratio:.6} bound {:.6}", sol.contraction_bound),
            1e-6,
        ));
        let joint = greedy_joint_policy(g, &joint_value_iteration(g, tight())?);
        let mismatched: Vec<usize> = (0..g.n_states()).filter(|&s| sol.greedy_policy[s] != joint[s]).collect();
        out.push(limit(OracleReport::measured(
            format!("SBO greedy policy equals joint argmax on {}", f.name),
            mismatched.len() as f64,
            format!("mismatched states {mismatched:?}"),
            0.0,
        )));
        let a = solve_sboe_from(g, &weights, random_init(g, 1), opts)?;
        let b = solve_sboe_from(g, &weights, random_init(g, 2), opts)?;
        out.push(limit(OracleReport::measured(
            format!("SBO random starts agree on {}", f.name),
            sup_gap(&a, &b),
            "seeds 1 and 2",
            2e-8,
        )));
        let grand = brute::coalition_value(g, g.grand())?;
        let n = g.n_agents() as f64;
        let mut worst = Worst::default();
        for (i, qi) in sol.q.iter().enumerate() {
            for (s, row) in qi.iter().enumerate() {
                worst.see((max_of(row) - grand[s] / n).abs(), || format!("agent {i} state {s}"));
            }
        }
        out.push(limit(worst.report(&format!("SBO equal credit on {}", f.name), 1e-8)));
    }
    Ok(())
}

fn belief_mdps(p: &Pomcg, horizon: usize) -> Result<Vec<BeliefMdp<'_>>> {
    CoalitionMask::all(p.n_agents())
        .map(|c| BeliefMdp::build(p, reachable_beliefs(p, c, horizon, pomcg::DEFAULT_BELIEF_CAP)?))
        .collect()
}

const POSPI_NOTE: &str = "sequential per-agent improvement stalls where only joint work pays";

fn pomcg_suite(out: &mut Vec<OracleReport>) -> Result<()> {
    let mut worst = Worst::default();
    for (name, game) in [("g1", fixtures::g1()), ("g4", fixtures::g4())] {
        let ns = game.n_states();
        for start in 0..ns {
            let p = pomcg::fixtures::fully_observable(game.clone(), BeliefState::point(ns, start, 0).probs);
            for (k, m) in belief_mdps(&p, ns + 1)?.iter().enumerate() {
                let exact = brute::coalition_value(&game, m.set.coalition)?;
                let r = posvi(m, tight())?;
                for (s, v) in exact.iter().enumerate() {
                    if let Some(b) = m.set.find_probs(&BeliefState::point(ns, s, 0).probs) {
                        worst.see((r.v[b] - v).abs(), || format!("{name} mask {k} state {s}"));
                    }
                }
            }
        }
    }
    out.push(worst.report("fully observable POSVI vs MDP values", 1e-10));

    let noisy = pomcg::fixtures::noisy();
    let mut worst = Worst::default();
    let mut checked = 0usize;
    for (k, m) in belief_mdps(&noisy, 10)?.iter().enumerate() {
        let finite = posvi_finite(m, 5);
        for b in 0..m.n_beliefs() {
            if m.set.depth(b) > 5 {
                continue;
            }
            let probs = &m.set.belief(b).probs;
            let oracle = brute::belief_expectimax(&noisy, m.set.coalition, probs, 5)?;
            let d = finite[b].map_or(f64::INFINITY, |v| (v - oracle).abs());
            checked += 1;
            worst.see(d, || format!("mask {k} belief {probs:?}"));
        }
    }
    let mut report = worst.report("noisy horizon-5 values vs belief expectimax", 1e-6);
    report.worst_case = format!("{} ({checked} beliefs)", report.worst_case);
    out.push(report);

    let tol = 1e-10;
    let opts = SolveOptions::with_tol(tol);
    let fixtures = [
        ("fully observable g1", pomcg::fixtures::fully_observable(fixtures::g1(), vec![1.0, 0.0])),
        ("fully observable g4", pomcg::fixtures::fully_observable(fixtures::g4(), vec![0.5, 0.5])),
        ("rewarding", pomcg::fixtures::rewarding()),
        ("glimpse", pomcg::fixtures::glimpse()),
    ];
    for (name, p) in &fixtures {
        let mdps = belief_mdps(p, 6)?;
        let pi = pospi(&mdps, opts)?;
        let mut worst = Worst::default();
        for (k, m) in mdps.iter().enumerate() {
            let vi = posvi(m, opts)?;
            for b in 0..m.n_beliefs() {
                worst.see((pi.values[k][b] - vi.v[b]).abs(), || format!("mask {k} belief {:?}", m.set.belief(b).probs));
            }
        }
        let report = worst.report(&format!("POSPI vs POSVI on {name}"), 2.0 * tol);
        out.push(if *name == "glimpse" { report.limited(POSPI_NOTE) } else { report });
    }
    Ok(())
}

fn envs_suite(out: &mut Vec<OracleReport>) -> Result<()> {
    let bowl_ref = barrier_eval(Barrier::Bowl, 1.0)?;
    let direct = 0.04 - 0.01 / (0.1 * (2.0 * std::f64::consts::PI).sqrt());
    out.push(OracleReport::measured("Bowl at reference vs direct evaluation", (bowl_ref - direct).abs(), format!("{bowl_ref:.10e}"), 1e-12));
    out.push(OracleReport::measured("Bowl at reference is 1.05772e-4", (bowl_ref - 1.05772e-4).abs(), format!("{bowl_ref:.10e}"), 1e-9));
    let mut worst = Worst::default();
    for v in [0.9, 1.1] {
        worst.see((barrier_eval(Barrier::Bowl, v)? - 0.105).abs(), || format!("v = {v}"));
    }
    out.push(worst.report("Bowl at |dv| = 0.1 is 0.105", 1e-12));

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut zero = Worst::default();
    let mut consistency = Worst::default();
    let mut drawn = 0;
    while drawn < 10_000 {
        let (v_up, r, x) = (rng.gen_range(0.9..1.1), rng.gen_range(0.001..0.3), rng.gen_range(0.001..0.3));
        let (dp, dq) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let k = r * dp + x * dq;
        if v_up * v_up - 4.0 * k < 0.0 {
            continue;
        }
        drawn += 1;
        let v = solve_bus_voltage(v_up, r, x, dp, dq)?;
        consistency.see(((v_up - v) * v - k).abs(), || format!("v_up {v_up:.4} r {r:.4} x {x:.4} dp {dp:.4} dq {dq:.4}"));
        let (p_load, p_pv, q_load) = (rng.gen_range(0.0..0.5), rng.gen_range(0.0..0.5), rng.gen_range(0.0..0.2));
        let q = zero_deviation_q(r, x, p_load, p_pv, q_load);
        if let Ok(v) = solve_bus_voltage(1.0, r, x, p_load - p_pv, q_load - q) {
            zero.see((v - 1.0).abs(), || format!("r {r:.4} x {x:.4} p {p_load:.4} pv {p_pv:.4}"));
        }
    }
    out.push(zero.report("zero-deviation reactive power cancels the drop", 1e-9));
    out.push(consistency.report("bus voltage self-consistency on 10^4 inputs", 1e-12));

    feeder_checks(out)?;
    learning_checks(out)?;
    Ok(())
}

fn feeder_checks(out: &mut Vec<OracleReport>) -> Result<()> {
    let model = FeederModel::three_bus(Barrier::L1);
    let trace = FeederTrace::benign(&model, DEFAULT_EPISODE_LEN);
    let droop = droop_rollout(&model, &trace, DEFAULT_EPISODE_LEN, DEFAULT_DROOP_SLOPE)?.metrics;
    let cr = droop.controlled_rate();
    out.push(OracleReport::measured("droop keeps every bus in band", 1.0 - cr, format!("CR {cr:.4}"), 0.0));
    let search = grid_search(&model, &trace, DEFAULT_EPISODE_LEN, &action_grid(9, 1.0)?)?;
    let infeasible = search.feasible.iter().filter(|f| !**f).count();
    out.push(OracleReport::measured(
        "exhaustive grid search finds an in-band action at every step",
        infeasible as f64,
        format!("{infeasible} infeasible steps"),
        0.0,
    ));
    Ok(())
}

fn count_report(target: &str, hits: usize, need: usize, detail: String) -> OracleReport {
    OracleReport::measured(target, need.saturating_sub(hits) as f64, format!("{hits}/{LEARNING_SEEDS} seeds; {detail}"), 0.0)
}

const EQUAL_CREDIT_NOTE: &str = "additive updates conserve the agents' table difference while G1 has an interaction term";

fn learning_checks(out: &mut Vec<OracleReport>) -> Result<()> {
    let g1 = fixtures::g1();
    let optimum = brute::coalition_value(&g1, g1.grand())?[0];
    let runs: Vec<(bool, f64)> = (0..LEARNING_SEEDS)
        .into_par_iter()
        .map(|seed| -> Result<(bool, f64)> {
            let mut env = GameEnv::episodic(g1.clone(), 0, 1)?;
            let mut st = ShaqState::new(env.actions_per_agent(), env.n_states(), env.gamma(), g1_config(ShaqMode::Shaq, seed))?;
            train(&mut env, &mut st, G1_STEPS)?;
            let p = extract_policy(&st);
            let joint = g1.joint_index(&[p[0][0], p[1][0]]);
            let optimal = (g1.reward(0, joint) - optimum).abs() <= 1e-12;
            let (a, b) = (max_of(&st.q[0][0]), max_of(&st.q[1][0]));
            Ok((optimal, (a - b).abs() / a.abs().max(b.abs())))
        })
        .collect::<Result<_>>()?;
    let hits = runs.iter().filter(|r| r.0).count();
    out.push(count_report("SHAQ finds the optimal joint action on G1", hits, 4, format!("optimum {optimum}")));
    let gap = runs.iter().map(|r| r.1).fold(0.0, f64::max);
    out.push(OracleReport::measured("SHAQ greedy MSQs on G1 within 5% of each other", gap, "worst seed", 0.05).limited(EQUAL_CREDIT_NOTE));

    let vdn = vdn_matches_reference(&g1)?;
    out.push(OracleReport::holds("VDN updates are bitwise the additive TD step", vdn.0, vdn.1));

    let prey = GridPredatorPrey::new(PredatorPreyConfig::default())?;
    let capture = prey.capture_probability(50);
    let shortfall = (0..prey.n_states())
        .filter(|&s| prey.is_start_state(s))
        .map(|s| 1.0 - capture[s])
        .fold(0.0, f64::max);
    out.push(OracleReport::measured("predator-prey capture is certain within 50 steps", shortfall, "worst start", 1e-9));
    let rates: Vec<f64> = (0..LEARNING_SEEDS)
        .into_par_iter()
        .map(|seed| run_predator_prey(predator_prey_config(seed), PREDATOR_PREY_STEPS).map(|r| r.capture_rate))
        .collect::<Result<_>>()?;
    let hits = rates.iter().filter(|&&r| r >= PREDATOR_PREY_SUCCESS).count();
    out.push(count_report("SHAQ captures the prey on predator-prey", hits, 4, format!("capture rates {rates:?}")));

    let results: Vec<(f64, f64)> = (0..LEARNING_SEEDS)
        .into_par_iter()
        .map(|seed| {
            let run = run_feeder(feeder_env(Barrier::L1)?, feeder_config(seed), FEEDER_STEPS)?;
            Ok((run.learned.controlled_rate(), run.loss_ratio()))
        })
        .collect::<Result<_>>()?;
    let hits = results.iter().filter(|(cr, pl)| *cr >= 0.95 && *pl <= 1.1).count();
    let detail = results.iter().map(|(cr, pl)| format!("CR {cr:.3} PL x{pl:.3}")).collect::<Vec<_>>().join(", ");
    out.push(count_report("SHAQ controls the three-bus feeder", hits, 3, detail));
    Ok(())
}

/// Drives a VDN learner and a hand-written additive step on the same transitions.
fn vdn_matches_reference(game: &MarkovConvexGame) -> Result<(bool, String)> {
    let mut env = GameEnv::episodic(game.clone(), 0, 1)?;
    let config = g1_config(ShaqMode::Vdn, 3);
    let mut st = ShaqState::new(env.actions_per_agent(), env.n_states(), env.gamma(), config)?;
    let mut reference = st.q.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = game.n_agents();
    let mut s = env.reset(&mut rng);
    for step in 0..2_000u64 {
        let actions: Vec<usize> = (0..n).map(|i| rng.gen_range(0..game.actions_per_agent()[i])).collect();
        let o = env.step(&actions, &mut rng)?;
        let t = Transition { s, actions: actions.clone(), reward: o.reward, next: o.next_state, terminal: o.terminal };
        let lr = st.config.lr_q.at(st.visits(s, &actions));
        let mut target = 0.0;
        if !o.terminal {
            for qi in &reference {
                target += max_of(&qi[o.next_state]);
            }
        }
        let mut predicted = 0.0;
        for (qi, &a) in reference.iter().zip(&actions) {
            predicted += qi[s][a];
        }
        let delta = o.reward + st.gamma * target - predicted;
        for (qi, &a) in reference.iter_mut().zip(&actions) {
            qi[s][a] += lr * delta / n as f64;
        }
        shaq_step(&mut st, &t);
        let same = st.q.iter().flatten().flatten().zip(reference.iter().flatten().flatten()).all(|(x, y)| x.to_bits() == y.to_bits());
        if !same {
            return Ok((false, format!("diverged at step {step}")));
        }
        s = if o.terminal { env.reset(&mut rng) } else { o.next_state };
    }
    Ok((true, "2000 steps".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names() {
        assert_eq!("pomcg".parse::<Suite>().unwrap(), Suite::Pomcg);
        assert!("everything".parse::<Suite>().is_err());
    }

    #[test]
    fn known_limitations_do_not_fail_the_run() {
        let bad = OracleReport::measured("x", 1.0, "-", 0.0);
        assert!(!all_pass(&[bad.clone()]));
        let noted = bad.limited("why");
        assert!(all_pass(&[noted.clone()]));
        assert!(noted.to_string().starts_with("FAIL x"));
        assert!(OracleReport::measured("y", 0.0, "-", 0.0).limited("why").known_limitation.is_none());
    }

    #[test]
    fn analytic_suites_pass() {
        for suite in [Suite::Shapley, Suite::Sbo, Suite::Pomcg] {
            let reports = verify(suite).unwrap();
            assert!(all_pass(&reports), "{:#?}", reports.iter().filter(|r| !r.pass).collect::<Vec<_>>());
        }
    }

    #[test]
    fn expected_limitations_are_the_only_failures() {
        let failing: Vec<String> =
            verify(Suite::Sbo).unwrap().into_iter().filter(|r| !r.pass).map(|r| r.target).collect();
        assert!(failing.iter().all(|t| t.ends_with("g-majority")), "{failing:?}");
    }
}
