//! Radial feeder built from chained two-bus approximations.
//!
//! Bus 0 is the slack bus. Line `k` joins bus `k` to bus `k + 1` and carries
//! the net demand of every bus downstream of it.

use std::io::{Read, Write};
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tabular::{check_actions, EnvStep, TabularEnv};
use super::voltage::{
    droop_control, in_safe_band, line_loss, reward_eval, solve_bus_voltage, Barrier, VIOLATION_PENALTY,
};
use crate::error::{Error, Result};

pub const DEFAULT_DROOP_SLOPE: f64 = 5.0;
pub const DEFAULT_EPISODE_LEN: usize = 240;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub r: f64,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeederModel {
    pub lines: Vec<Line>,
    pub v0: f64,
    /// Bus index of each PV inverter; PV `i` is agent `i`.
    pub pv_buses: Vec<usize>,
    pub s_max: Vec<f64>,
    /// Bound `c` on the reactive-power ratio each agent may request.
    pub action_bound: f64,
    pub barrier: Barrier,
    pub alpha_reward: f64,
}

impl FeederModel {
    /// Chain with identical lines and a PV on every non-slack bus.
    pub fn chain(n_buses: usize, line: Line, s_max: f64, barrier: Barrier) -> Result<Self> {
        let model = FeederModel {
            lines: vec![line; n_buses.saturating_sub(1)],
            v0: 1.0,
            pv_buses: (1..n_buses).collect(),
            s_max: vec![s_max; n_buses.saturating_sub(1)],
            action_bound: 1.0,
            barrier,
            alpha_reward: 0.1,
        };
        model.validate()?;
        Ok(model)
    }

    /// Three buses, two PVs: the desk-scale training feeder.
    pub fn three_bus(barrier: Barrier) -> Self {
        Self::chain(3, Line { r: 0.04, x: 0.1 }, 1.0, barrier).expect("valid three-bus feeder")
    }

    pub fn n_buses(&self) -> usize {
        self.lines.len() + 1
    }

    pub fn n_pv(&self) -> usize {
        self.pv_buses.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("feeder: {m}")));
        if self.lines.is_empty() {
            return bad("need at least two buses");
        }
        if self.lines.iter().any(|l| !(l.r > 0.0 && l.x > 0.0)) {
            return bad("line r and x must be positive");
        }
        if !(self.v0 > 0.0) {
            return bad("slack voltage must be positive");
        }
        if self.pv_buses.is_empty() || self.pv_buses.len() != self.s_max.len() {
            return bad("need one s_max per PV and at least one PV");
        }
        if self.pv_buses.iter().any(|&b| b == 0 || b >= self.n_buses()) {
            return bad("PVs sit on non-slack buses");
        }
        if self.s_max.iter().any(|s| !(*s > 0.0)) || !(self.action_bound > 0.0) || self.alpha_reward < 0.0 {
            return bad("s_max, action bound and alpha must be positive");
        }
        Ok(())
    }

    /// Largest reactive power PV `i` can supply at active output `p_pv`.
    pub fn q_capacity(&self, i: usize, p_pv: f64) -> Result<f64> {
        let s = self.s_max[i];
        if p_pv > s + 1e-12 {
            return Err(Error::InvalidArgument(format!("PV {i} output {p_pv} exceeds s_max {s}")));
        }
        Ok((s * s - p_pv * p_pv).max(0.0).sqrt())
    }
}

/// Loads and PV output for one time step; loads are per non-slack bus.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub p_load: Vec<f64>,
    pub q_load: Vec<f64>,
    pub p_pv: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeederTrace {
    pub rows: Vec<TraceRow>,
}

impl FeederTrace {
    /// Smooth half-day profile: PV peaks at midday, load rises into the evening.
    pub fn benign(model: &FeederModel, len: usize) -> Self {
        let loads = model.n_buses() - 1;
        let rows = (0..len)
            .map(|t| {
                let x = (t as f64 + 0.5) / len as f64;
                let sun = (std::f64::consts::PI * x).sin().max(0.0);
                let morning = (-((x - 0.15) / 0.08).powi(2)).exp();
                let p_load: Vec<f64> = (0..loads).map(|_| 0.12 + 0.05 * morning + 0.23 * x.powi(3)).collect();
                let q_load = p_load.iter().map(|p| 0.3 * p).collect();
                let p_pv = (0..model.n_pv()).map(|i| 0.8 * model.s_max[i] * sun.powf(1.5)).collect();
                TraceRow { p_load, q_load, p_pv }
            })
            .collect();
        FeederTrace { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn check(&self, model: &FeederModel) -> Result<()> {
        let loads = model.n_buses() - 1;
        for (t, row) in self.rows.iter().enumerate() {
            if row.p_load.len() != loads || row.q_load.len() != loads || row.p_pv.len() != model.n_pv() {
                return Err(Error::Shape(format!("trace row {t} does not match the feeder")));
            }
            for i in 0..model.n_pv() {
                model.q_capacity(i, row.p_pv[i])?;
            }
        }
        Ok(())
    }

    fn header(loads: usize, pvs: usize) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend((1..=loads).map(|b| format!("p_load_{b}")));
        h.extend((1..=loads).map(|b| format!("q_load_{b}")));
        h.extend((0..pvs).map(|i| format!("p_pv_{i}")));
        h
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let (loads, pvs) = match self.rows.first() {
            Some(r) => (r.p_load.len(), r.p_pv.len()),
            None => (0, 0),
        };
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::header(loads, pvs))?;
        for (t, row) in self.rows.iter().enumerate() {
            let mut rec = vec![t.to_string()];
            rec.extend(row.p_load.iter().chain(&row.q_load).chain(&row.p_pv).map(|v| v.to_string()));
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
        let headers = r.headers()?.clone();
        let loads = headers.iter().filter(|h| h.starts_with("p_load_")).count();
        let pvs = headers.iter().filter(|h| h.starts_with("p_pv_")).count();
        let expected = Self::header(loads, pvs);
        if headers.iter().ne(expected.iter().map(String::as_str)) {
            return Err(Error::Shape(format!("trace header must be {}", expected.join(","))));
        }
        let mut rows = Vec::new();
        for (k, rec) in r.records().enumerate() {
            let rec = rec?;
            let vals: Vec<f64> = rec
                .iter()
                .skip(1)
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Shape(format!("trace row {k}: {e}")))?;
            rows.push(TraceRow {
                p_load: vals[..loads].to_vec(),
                q_load: vals[loads..2 * loads].to_vec(),
                p_pv: vals[2 * loads..].to_vec(),
            });
        }
        Ok(FeederTrace { rows })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Bus voltages (slack first) and total line loss for given reactive injections.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlow {
    pub voltages: Vec<f64>,
    pub loss: f64,
}

pub fn power_flow(model: &FeederModel, row: &TraceRow, q_pv: &[f64]) -> Result<PowerFlow> {
    let n = model.n_buses();
    let mut net_p = vec![0.0; n];
    let mut net_q = vec![0.0; n];
    for b in 1..n {
        net_p[b] = row.p_load[b - 1];
        net_q[b] = row.q_load[b - 1];
    }
    for (i, &b) in model.pv_buses.iter().enumerate() {
        net_p[b] -= row.p_pv[i];
        net_q[b] -= q_pv[i];
    }
    let mut voltages = vec![model.v0; n];
    let mut loss = 0.0;
    let (mut dp, mut dq): (f64, f64) = (net_p.iter().sum(), net_q.iter().sum());
    for (k, line) in model.lines.iter().enumerate() {
        voltages[k + 1] = solve_bus_voltage(voltages[k], line.r, line.x, dp, dq)?;
        loss += line_loss(line.r, dp, dq, model.v0);
        dp -= net_p[k + 1];
        dq -= net_q[k + 1];
    }
    Ok(PowerFlow { voltages, loss })
}

/// What an agent sees: its bus voltage, load, PV output, last reactive power
/// and the voltage one bus upstream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionObservation {
    pub v: f64,
    pub p_load: f64,
    pub q_load: f64,
    pub p_pv: f64,
    pub prev_q: f64,
    pub v_upstream: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeederOutcome {
    pub observations: Vec<RegionObservation>,
    pub reward: f64,
    pub terminal: bool,
    /// Empty after a collapse.
    pub voltages: Vec<f64>,
    pub q_pv: Vec<f64>,
    pub loss: f64,
    pub in_band: bool,
}

/// Applies reactive-power ratios `actions` (one per PV) under `row`.
pub fn feeder_step(model: &FeederModel, actions: &[f64], row: &TraceRow) -> Result<FeederOutcome> {
    if actions.len() != model.n_pv() {
        return Err(Error::Shape(format!("{} actions for {} PVs", actions.len(), model.n_pv())));
    }
    if let Some(a) = actions.iter().find(|a| !(a.abs() <= model.action_bound + 1e-12)) {
        return Err(Error::InvalidArgument(format!("action {a} outside ±{}", model.action_bound)));
    }
    let q_pv: Vec<f64> = actions
        .iter()
        .enumerate()
        .map(|(i, a)| Ok(a * model.q_capacity(i, row.p_pv[i])?))
        .collect::<Result<_>>()?;
    let flow = match power_flow(model, row, &q_pv) {
        Ok(f) => f,
        Err(Error::VoltageCollapse { .. }) => {
            return Ok(FeederOutcome {
                observations: Vec::new(),
                reward: VIOLATION_PENALTY,
                terminal: true,
                voltages: Vec::new(),
                q_pv,
                loss: f64::NAN,
                in_band: false,
            })
        }
        Err(e) => return Err(e),
    };
    let reward = reward_eval(model.barrier, model.alpha_reward, &flow.voltages[1..], &q_pv)?;
    let observations = model
        .pv_buses
        .iter()
        .enumerate()
        .map(|(i, &b)| RegionObservation {
            v: flow.voltages[b],
            p_load: row.p_load[b - 1],
            q_load: row.q_load[b - 1],
            p_pv: row.p_pv[i],
            prev_q: q_pv[i],
            v_upstream: flow.voltages[b - 1],
        })
        .collect();
    Ok(FeederOutcome {
        observations,
        reward,
        terminal: false,
        in_band: flow.voltages.iter().all(|&v| in_safe_band(v)),
        voltages: flow.voltages,
        q_pv,
        loss: flow.loss,
    })
}

/// Controlled-rate and power-loss counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct FeederMetrics {
    pub steps: usize,
    pub in_band_steps: usize,
    pub total_loss: f64,
    pub total_reward: f64,
}

impl FeederMetrics {
    pub fn record(&mut self, outcome: &FeederOutcome) {
        self.steps += 1;
        self.in_band_steps += outcome.in_band as usize;
        if outcome.loss.is_finite() {
            self.total_loss += outcome.loss;
        }
        self.total_reward += outcome.reward;
    }

    /// Fraction of steps with every bus inside the safe band.
    pub fn controlled_rate(&self) -> f64 {
        if self.steps == 0 {
            return 0.0;
        }
        self.in_band_steps as f64 / self.steps as f64
    }

    /// Mean line loss per step.
    pub fn power_loss(&self) -> f64 {
        if self.steps == 0 {
            return 0.0;
        }
        self.total_loss / self.steps as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeederRollout {
    pub outcomes: Vec<FeederOutcome>,
    pub metrics: FeederMetrics,
}

impl FeederRollout {
    /// Per-step CSV: `t, v_1.., q_0.., reward, loss, cr_flag`.
    pub fn write_csv<W: Write>(&self, mut out: W, comments: &[String], model: &FeederModel) -> Result<()> {
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..model.n_buses()).map(|b| format!("v_{b}")));
        header.extend((0..model.n_pv()).map(|i| format!("q_{i}")));
        header.extend(["reward", "loss", "cr_flag"].map(String::from));
        w.write_record(&header)?;
        for (t, o) in self.outcomes.iter().enumerate() {
            let mut rec = vec![t.to_string()];
            if o.voltages.is_empty() {
                rec.extend((1..model.n_buses()).map(|_| "nan".to_string()));
            } else {
                rec.extend(o.voltages[1..].iter().map(|v| v.to_string()));
            }
            rec.extend(o.q_pv.iter().map(|q| q.to_string()));
            rec.push(o.reward.to_string());
            rec.push(o.loss.to_string());
            rec.push((o.in_band as u8).to_string());
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs `policy(t, row) -> ratios` over the first `len` rows of `trace`.
pub fn rollout(
    model: &FeederModel,
    trace: &FeederTrace,
    len: usize,
    mut policy: impl FnMut(usize, &TraceRow) -> Result<Vec<f64>>,
) -> Result<FeederRollout> {
    trace.check(model)?;
    if len > trace.len() {
        return Err(Error::InvalidArgument(format!("episode of {len} steps on a {}-row trace", trace.len())));
    }
    let mut outcomes = Vec::with_capacity(len);
    let mut metrics = FeederMetrics::default();
    for (t, row) in trace.rows.iter().take(len).enumerate() {
        let actions = policy(t, row)?;
        let outcome = feeder_step(model, &actions, row)?;
        metrics.record(&outcome);
        let stop = outcome.terminal;
        outcomes.push(outcome);
        if stop {
            break;
        }
    }
    Ok(FeederRollout { outcomes, metrics })
}

/// Reactive-power ratios at which every PV's droop law agrees with its own
/// bus voltage; found by damped fixed-point iteration.
pub fn droop_ratios(model: &FeederModel, row: &TraceRow, slope: f64) -> Result<Vec<f64>> {
    let caps: Vec<f64> = (0..model.n_pv()).map(|i| model.q_capacity(i, row.p_pv[i])).collect::<Result<_>>()?;
    let mut q = vec![0.0; model.n_pv()];
    for _ in 0..10_000 {
        let flow = power_flow(model, row, &q)?;
        let mut change: f64 = 0.0;
        for (i, &b) in model.pv_buses.iter().enumerate() {
            let target = droop_control(flow.voltages[b], slope, -caps[i], caps[i]);
            let next = 0.5 * q[i] + 0.5 * target;
            change = change.max((next - q[i]).abs());
            q[i] = next;
        }
        if change <= 1e-13 {
            let bound = model.action_bound;
            return Ok(q
                .iter()
                .zip(&caps)
                .map(|(q, c)| if *c > 0.0 { (q / c).clamp(-bound, bound) } else { 0.0 })
                .collect());
        }
    }
    Err(Error::NonConvergence { iterations: 10_000, residual: f64::NAN })
}

pub fn droop_rollout(model: &FeederModel, trace: &FeederTrace, len: usize, slope: f64) -> Result<FeederRollout> {
    rollout(model, trace, len, |_, row| droop_ratios(model, row, slope))
}

/// Odd grid of `points` ratios spanning `[-bound, bound]`, zero included.
pub fn action_grid(points: usize, bound: f64) -> Result<Vec<f64>> {
    if points < 3 || points % 2 == 0 {
        return Err(Error::InvalidArgument(format!("action grid needs an odd number of points ≥ 3, got {points}")));
    }
    let half = (points / 2) as f64;
    Ok((0..points).map(|k| bound * (k as f64 - half) / half).collect())
}

/// Per-step exhaustive search over the joint action grid. Actions do not
/// influence later rows, so this covers every deterministic grid policy.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSearch {
    /// Whether some joint grid action keeps every bus in band at step `t`.
    pub feasible: Vec<bool>,
    /// Lowest-loss in-band joint action, else the highest-reward one.
    pub safest: Vec<Vec<usize>>,
    /// Highest-reward joint action.
    pub reward_greedy: Vec<Vec<usize>>,
}

impl GridSearch {
    pub fn all_feasible(&self) -> bool {
        self.feasible.iter().all(|&f| f)
    }
}

pub fn grid_search(model: &FeederModel, trace: &FeederTrace, len: usize, grid: &[f64]) -> Result<GridSearch> {
    trace.check(model)?;
    let n = model.n_pv();
    let joint = grid.len().pow(n as u32);
    let mut search = GridSearch { feasible: Vec::new(), safest: Vec::new(), reward_greedy: Vec::new() };
    for row in trace.rows.iter().take(len) {
        let mut best_safe: Option<(f64, Vec<usize>)> = None;
        let mut best_reward: Option<(f64, Vec<usize>)> = None;
        for code in 0..joint {
            let idx: Vec<usize> = (0..n).map(|i| code / grid.len().pow(i as u32) % grid.len()).collect();
            let ratios: Vec<f64> = idx.iter().map(|&k| grid[k]).collect();
            let o = feeder_step(model, &ratios, row)?;
            if best_reward.as_ref().map_or(true, |(r, _)| o.reward > *r) {
                best_reward = Some((o.reward, idx.clone()));
            }
            if o.in_band && best_safe.as_ref().map_or(true, |(l, _)| o.loss < *l) {
                best_safe = Some((o.loss, idx));
            }
        }
        let greedy = best_reward.expect("non-empty grid").1;
        search.feasible.push(best_safe.is_some());
        search.safest.push(best_safe.map_or_else(|| greedy.clone(), |b| b.1));
        search.reward_greedy.push(greedy);
    }
    Ok(search)
}

/// The feeder as a finite game: the state is the time step, each agent
/// picks a ratio from `grid`.
#[derive(Debug, Clone)]
pub struct DiscreteFeeder {
    model: FeederModel,
    trace: FeederTrace,
    grid: Vec<f64>,
    actions: Vec<usize>,
    len: usize,
    gamma: f64,
    t: usize,
}

impl DiscreteFeeder {
    pub fn new(model: FeederModel, trace: FeederTrace, grid: Vec<f64>, len: usize, gamma: f64) -> Result<Self> {
        model.validate()?;
        trace.check(&model)?;
        if len == 0 || len > trace.len() {
            return Err(Error::InvalidArgument(format!("episode of {len} steps on a {}-row trace", trace.len())));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidArgument(format!("gamma {gamma} outside [0, 1)")));
        }
        if grid.iter().any(|a| a.abs() > model.action_bound + 1e-12) {
            return Err(Error::InvalidArgument("grid exceeds the action bound".into()));
        }
        let actions = vec![grid.len(); model.n_pv()];
        Ok(DiscreteFeeder { model, trace, grid, actions, len, gamma, t: 0 })
    }

    pub fn model(&self) -> &FeederModel {
        &self.model
    }

    pub fn trace(&self) -> &FeederTrace {
        &self.trace
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn ratios(&self, actions: &[usize]) -> Vec<f64> {
        actions.iter().map(|&a| self.grid[a]).collect()
    }

    /// Plays `policy[t]` (grid indices) for one episode.
    pub fn evaluate(&self, policy: &[Vec<usize>]) -> Result<FeederRollout> {
        rollout(&self.model, &self.trace, self.len, |t, _| Ok(self.ratios(&policy[t])))
    }
}

impl TabularEnv for DiscreteFeeder {
    fn n_agents(&self) -> usize {
        self.model.n_pv()
    }

    fn actions_per_agent(&self) -> &[usize] {
        &self.actions
    }

    /// One state per step plus an absorbing end state.
    fn n_states(&self) -> usize {
        self.len + 1
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn episode_limit(&self) -> usize {
        self.len
    }

    fn reset(&mut self, _rng: &mut ChaCha8Rng) -> usize {
        self.t = 0;
        0
    }

    fn step(&mut self, actions: &[usize], _rng: &mut ChaCha8Rng) -> Result<EnvStep> {
        check_actions(actions, &self.actions)?;
        if self.t >= self.len {
            return Err(Error::Env("episode already finished".into()));
        }
        let o = feeder_step(&self.model, &self.ratios(actions), &self.trace.rows[self.t])?;
        self.t = if o.terminal { self.len } else { self.t + 1 };
        Ok(EnvStep { next_state: self.t, reward: o.reward, terminal: self.t == self.len })
    }
}
