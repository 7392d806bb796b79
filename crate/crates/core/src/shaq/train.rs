use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::state::{extract_policy, shaq_step, ShaqState, Transition};
use crate::envs::TabularEnv;
use crate::error::{Error, Result};

/// One finished (or truncated) episode of a learning curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRecord {
    pub step: u64,
    pub episode: u64,
    #[serde(rename = "return")]
    pub ret: f64,
    pub epsilon: f64,
    /// `q_i(probe, a)` flattened agent-major.
    pub probe_q: Vec<f64>,
}

fn check_env<E: TabularEnv + ?Sized>(env: &E, state: &ShaqState) -> Result<()> {
    let shaped = env.actions_per_agent() == state.actions_per_agent.as_slice()
        && state.q.iter().all(|qi| qi.len() == env.n_states());
    if !shaped {
        return Err(Error::Shape("learner tables do not match the environment".into()));
    }
    Ok(())
}

/// Runs `steps` environment steps of ε-greedy SHAQ.
pub fn train<E: TabularEnv + ?Sized>(env: &mut E, state: &mut ShaqState, steps: u64) -> Result<Vec<CurveRecord>> {
    check_env(env, state)?;
    let mut records = Vec::new();
    let mut replay: Vec<Transition> = Vec::with_capacity(state.config.replay_capacity);
    let mut episode = 0u64;
    let mut ret = 0.0;
    let mut length = 0usize;
    let mut s = if steps > 0 { env.reset(&mut state.rng) } else { 0 };
    for _ in 0..steps {
        let actions = state.act(s);
        let out = env.step(&actions, &mut state.rng)?;
        let t = Transition { s, actions, reward: out.reward, next: out.next_state, terminal: out.terminal };
        shaq_step(state, &t);
        let capacity = state.config.replay_capacity;
        if capacity > 0 {
            if replay.len() < capacity {
                replay.push(t);
            } else {
                let slot = (state.steps % capacity as u64) as usize;
                replay[slot] = t;
            }
            let pick = state.rng.gen_range(0..replay.len());
            let sample = replay[pick].clone();
            shaq_step(state, &sample);
        }
        state.steps += 1;
        ret += out.reward;
        length += 1;
        s = out.next_state;
        if out.terminal || length >= env.episode_limit() {
            records.push(CurveRecord {
                step: state.steps,
                episode,
                ret,
                epsilon: state.epsilon(),
                probe_q: probe(state, env.probe_state()),
            });
            episode += 1;
            ret = 0.0;
            length = 0;
            s = env.reset(&mut state.rng);
        }
    }
    Ok(records)
}

fn probe(state: &ShaqState, s: usize) -> Vec<f64> {
    state.q.iter().flat_map(|qi| qi[s].iter().copied()).collect()
}

/// Column names of a learning-curve CSV.
pub fn curve_header(actions_per_agent: &[usize]) -> Vec<String> {
    let mut cols: Vec<String> = ["step", "episode", "return", "epsilon"].iter().map(|c| c.to_string()).collect();
    for (i, &k) in actions_per_agent.iter().enumerate() {
        cols.extend((0..k).map(|a| format!("q{i}_{a}")));
    }
    cols
}

/// Writes `# comment` lines followed by the curve as CSV.
pub fn write_curve_csv<W: Write>(
    mut out: W,
    comments: &[String],
    actions_per_agent: &[usize],
    records: &[CurveRecord],
) -> Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(curve_header(actions_per_agent))?;
    for r in records {
        let mut row = vec![r.step.to_string(), r.episode.to_string(), r.ret.to_string(), r.epsilon.to_string()];
        row.extend(r.probe_q.iter().map(f64::to_string));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOutcome {
    pub ret: f64,
    pub length: usize,
    pub terminal: bool,
}

/// Rolls out the greedy policy for `episodes` episodes with its own generator.
pub fn evaluate_greedy<E: TabularEnv + ?Sized>(
    env: &mut E,
    state: &ShaqState,
    episodes: usize,
    seed: u64,
) -> Result<Vec<EpisodeOutcome>> {
    check_env(env, state)?;
    let policy = extract_policy(state);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outcomes = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut s = env.reset(&mut rng);
        let mut outcome = EpisodeOutcome { ret: 0.0, length: 0, terminal: false };
        while outcome.length < env.episode_limit() {
            let actions: Vec<usize> = policy.iter().map(|p| p[s]).collect();
            let out = env.step(&actions, &mut rng)?;
            outcome.ret += out.reward;
            outcome.length += 1;
            s = out.next_state;
            if out.terminal {
                outcome.terminal = true;
                break;
            }
        }
        outcomes.push(outcome);
    }
    Ok(outcomes)
}
