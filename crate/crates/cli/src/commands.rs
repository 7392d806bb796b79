use std::fs;
use std::io::Write;
use std::path::Path;

use markov_shapley::envs::feeder::{droop_ratios, rollout, Line};
use markov_shapley::envs::{fixtures, FeederModel, FeederTrace, GameEnv, GridPredatorPrey, PredatorPreyConfig, TabularEnv};
use markov_shapley::mcg::{greedy_joint_policy, joint_value_iteration, MarkovConvexGame, SolveOptions};
use markov_shapley::oracle::{all_pass, verify};
use markov_shapley::pomcg::{
    belief_core, posvi, posvi_finite, reachable_beliefs, solve_all_coalitions, BeliefMdp, Pomcg,
};
use markov_shapley::sbo::{equal_credit_gap, solve_sboe, SboOptions, SboWeights};
use markov_shapley::shapley::{check_markov_core, exact_msq_table, verify_fairness, CoalitionValues};
use markov_shapley::shaq::presets::{
    feeder_config, feeder_env, g1_config, predator_prey_config, FEEDER_STEPS, G1_STEPS, PREDATOR_PREY_STEPS,
};
use markov_shapley::shaq::{train, write_curve_csv, EpsSchedule, LrSchedule, ShaqConfig, ShaqMode, ShaqState};
use markov_shapley::Error as CoreError;
use serde_json::{json, Value};

use crate::config::{
    config_hash, parse_pair, Algo, Baseline, ExperimentConfig, FeederArgs, PosviArgs, SboArgs, SolveArgs, TrainArgs,
    VerifyArgs,
};
use crate::exit::{CliError, CliResult};

const CORE_TOL: f64 = 1e-8;
const FEEDER_LINE: Line = Line { r: 0.04, x: 0.1 };
const DEFAULT_EPISODE_LIMIT: usize = 100;

fn open_out(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            Ok(Box::new(std::io::BufWriter::new(fs::File::create(p)?)))
        }
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

fn emit_json(path: Option<&Path>, hash: &str, mut value: Value) -> CliResult<()> {
    if let Some(map) = value.as_object_mut() {
        map.insert("_config_hash".into(), Value::String(hash.to_string()));
    }
    let mut out = open_out(path)?;
    let text = serde_json::to_string_pretty(&value).map_err(|e| CliError::Runtime(e.to_string()))?;
    writeln!(out, "{text}")?;
    out.flush()?;
    Ok(())
}

fn to_json<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report serializes")
}

fn load_game(path: &Path) -> CliResult<MarkovConvexGame> {
    MarkovConvexGame::from_json_file(path).map_err(|e| CliError::input(path, e))
}

fn context(name: &'static str) -> impl Fn(CoreError) -> CliError {
    move |e| CliError::solver(name, e)
}

pub fn solve(args: &SolveArgs) -> CliResult<()> {
    let hash = config_hash("solve", args);
    let game = load_game(&args.game)?;
    let pairs = args.symmetric.iter().map(|p| parse_pair(p)).collect::<CliResult<Vec<_>>>()?;
    let values = CoalitionValues::solve(&game, SolveOptions::with_tol(args.tol)).map_err(context("solve"))?;
    let msv = exact_msq_table(&values).map_err(context("solve"))?;
    let coalition_values: serde_json::Map<String, Value> =
        values.tables().iter().map(|t| (t.coalition.bits().to_string(), to_json(&t.v))).collect();
    let core = match check_markov_core(&values, &msv.v, CORE_TOL) {
        Ok(report) => to_json(&report),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let fairness = verify_fairness(&values, &msv, &pairs, CORE_TOL).map_err(context("solve"))?;
    emit_json(
        args.out.as_deref(),
        &hash,
        json!({
            "coalition_values": coalition_values,
            "msv": msv.v,
            "msq": msv.q,
            "core": core,
            "fairness": fairness,
        }),
    )
}

pub fn sbo(args: &SboArgs) -> CliResult<()> {
    let hash = config_hash("sbo", args);
    let mut game = load_game(&args.game)?;
    if let Some(gamma) = args.gamma_override {
        game = game.with_gamma(gamma).map_err(|e| CliError::input(&args.game, e))?;
    }
    let weights = SboWeights::equal_credit(&game);
    let opts = SboOptions { tol: args.tol, max_iters: args.max_iters };
    let solution = solve_sboe(&game, &weights, opts).map_err(context("sbo"))?;
    let joint = joint_value_iteration(&game, SolveOptions::with_tol(1e-12)).map_err(context("sbo"))?;
    let joint_policy = greedy_joint_policy(&game, &joint);
    let mut report = to_json(&solution);
    let map = report.as_object_mut().expect("solution is an object");
    map.insert("total_value".into(), to_json(&solution.total_value()));
    map.insert("joint_value".into(), to_json(&joint.v));
    map.insert("matches_joint_greedy".into(), Value::Bool(solution.greedy_policy == joint_policy));
    map.insert("equal_credit_gap".into(), to_json(&equal_credit_gap(&solution, &game).map_err(context("sbo"))?));
    emit_json(args.out.as_deref(), &hash, report)
}

fn learner_config(args: &TrainArgs, base: ShaqConfig) -> ShaqConfig {
    let mut c = base;
    c.mode = match args.algo {
        Algo::Shaq => ShaqMode::Shaq,
        Algo::Vdn => ShaqMode::Vdn,
    };
    c.seed = args.seed;
    if let Some(lr) = args.lr_q {
        c.lr_q = LrSchedule::constant(lr);
    }
    if let Some(lr) = args.lr_alpha {
        c.lr_alpha = lr;
    }
    if let Some(m) = args.alpha_max {
        c.alpha_max = m;
    }
    c.epsilon = EpsSchedule {
        start: args.eps_start.unwrap_or(c.epsilon.start),
        end: args.eps_end.unwrap_or(c.epsilon.end),
        anneal_steps: args.anneal_steps.unwrap_or(c.epsilon.anneal_steps),
    };
    c
}

pub fn train_cmd(args: &TrainArgs) -> CliResult<()> {
    let hash = config_hash("train", args);
    let mode = match args.algo {
        Algo::Shaq => ShaqMode::Shaq,
        Algo::Vdn => ShaqMode::Vdn,
    };
    let limit = args.episode_limit.unwrap_or(DEFAULT_EPISODE_LIMIT);
    let (mut env, base, steps): (Box<dyn TabularEnv>, ShaqConfig, u64) = match args.env.as_str() {
        "predator-prey" => {
            let env = GridPredatorPrey::new(PredatorPreyConfig::default()).map_err(context("train"))?;
            (Box::new(env), predator_prey_config(args.seed), PREDATOR_PREY_STEPS)
        }
        "feeder" => {
            let env = feeder_env(markov_shapley::envs::Barrier::L1).map_err(context("train"))?;
            (Box::new(env), feeder_config(args.seed), FEEDER_STEPS)
        }
        name => {
            let game = match fixtures::by_name(name) {
                Some(f) => f.game,
                None if name.ends_with(".json") => load_game(Path::new(name))?,
                None => {
                    return Err(CliError::Config(format!(
                        "unknown environment `{name}`; use a fixture name, predator-prey, feeder or a .json game"
                    )))
                }
            };
            let env = GameEnv::episodic(game, 0, limit).map_err(context("train"))?;
            (Box::new(env), g1_config(mode, args.seed), G1_STEPS)
        }
    };
    let config = learner_config(args, base);
    let mut state = ShaqState::new(env.actions_per_agent(), env.n_states(), env.gamma(), config)
        .map_err(|e| CliError::Config(format!("train: {e}")))?;
    let records = train(env.as_mut(), &mut state, args.steps.unwrap_or(steps)).map_err(context("train"))?;
    let mut out = open_out(args.out.as_deref())?;
    write_curve_csv(&mut out, &[format!("config-hash: {hash}")], env.actions_per_agent(), &records)
        .map_err(context("train"))?;
    out.flush()?;
    Ok(())
}

pub fn posvi_cmd(args: &PosviArgs) -> CliResult<()> {
    let hash = config_hash("posvi", args);
    let pomcg = Pomcg::from_json_file(&args.pomdp).map_err(|e| CliError::input(&args.pomdp, e))?;
    let opts = SolveOptions::with_tol(args.tol);
    let mut coalitions = Vec::new();
    let mut all_closed = true;
    for c in markov_shapley::mcg::CoalitionMask::all(pomcg.n_agents()) {
        let set = reachable_beliefs(&pomcg, c, args.horizon, args.belief_cap).map_err(context("posvi"))?;
        let depths: Vec<usize> = (0..set.len()).map(|b| set.depth(b)).collect();
        let mdp = BeliefMdp::build(&pomcg, set).map_err(context("posvi"))?;
        let entry = if mdp.open_branch().is_none() {
            let r = posvi(&mdp, opts).map_err(context("posvi"))?;
            let beliefs: Vec<Value> = r
                .beliefs
                .iter()
                .zip(&r.v)
                .zip(&depths)
                .map(|((b, v), d)| json!({ "probs": b.probs, "depth": d, "v": v }))
                .collect();
            json!({ "mask": c.bits(), "closed": true, "iterations": r.iterations, "beliefs": beliefs })
        } else {
            all_closed = false;
            let h = args.horizon / 2;
            let values = posvi_finite(&mdp, h);
            let beliefs: Vec<Value> = mdp
                .set
                .beliefs()
                .iter()
                .zip(&values)
                .zip(&depths)
                .map(|((b, v), d)| json!({ "probs": b.probs, "depth": d, "v": v }))
                .collect();
            json!({ "mask": c.bits(), "closed": false, "finite_horizon": h, "beliefs": beliefs })
        };
        coalitions.push(entry);
    }
    let initial = if all_closed {
        let values = solve_all_coalitions(&pomcg, args.horizon, args.belief_cap, opts).map_err(context("posvi"))?;
        to_json(&belief_core(&values, pomcg.initial(), CORE_TOL).map_err(context("posvi"))?)
    } else {
        Value::Null
    };
    emit_json(args.out.as_deref(), &hash, json!({ "coalitions": coalitions, "initial": initial }))
}

pub fn feeder(args: &FeederArgs) -> CliResult<()> {
    let hash = config_hash("feeder", args);
    let model = FeederModel::chain(args.buses, FEEDER_LINE, 1.0, args.barrier).map_err(context("feeder"))?;
    let trace = match &args.trace {
        Some(p) => FeederTrace::from_file(p).map_err(|e| CliError::input(p, e))?,
        None => FeederTrace::benign(&model, args.episode_len),
    };
    let run = match args.baseline {
        Baseline::Droop => rollout(&model, &trace, args.episode_len, |_, row| droop_ratios(&model, row, args.slope)),
        Baseline::None => rollout(&model, &trace, args.episode_len, |_, _| Ok(vec![0.0; model.n_pv()])),
    }
    .map_err(context("feeder"))?;
    let out = open_out(args.out.as_deref())?;
    run.write_csv(out, &[format!("config-hash: {hash}")], &model).map_err(context("feeder"))?;
    let m = run.metrics;
    let summary = json!({
        "baseline": args.baseline,
        "barrier": args.barrier,
        "buses": args.buses,
        "steps": m.steps,
        "cr": m.controlled_rate(),
        "pl": m.power_loss(),
        "total_reward": m.total_reward,
    });
    match (&args.summary, &args.out) {
        (Some(p), _) => emit_json(Some(p), &hash, summary),
        (None, Some(_)) => emit_json(None, &hash, summary),
        (None, None) => Ok(()),
    }
}

pub fn verify_cmd(args: &VerifyArgs) -> CliResult<()> {
    let hash = config_hash("verify", args);
    let reports = verify(args.suite).map_err(context("verify"))?;
    for r in &reports {
        println!("{r}");
    }
    if let Some(p) = &args.out {
        emit_json(Some(p), &hash, json!({ "suite": args.suite, "reports": reports }))?;
    }
    let failing = reports.iter().filter(|r| !r.pass && r.known_limitation.is_none()).count();
    let limited = reports.iter().filter(|r| r.known_limitation.is_some()).count();
    println!("{} checks, {} failing, {} known limitations", reports.len(), failing, limited);
    if all_pass(&reports) {
        Ok(())
    } else {
        Err(CliError::Verification(failing))
    }
}

pub fn run(config: &ExperimentConfig) -> CliResult<()> {
    if let Some(a) = &config.solve {
        solve(a)?;
    }
    if let Some(a) = &config.sbo {
        sbo(a)?;
    }
    if let Some(a) = &config.train {
        train_cmd(a)?;
    }
    if let Some(a) = &config.posvi {
        posvi_cmd(a)?;
    }
    if let Some(a) = &config.feeder {
        feeder(a)?;
    }
    if let Some(a) = &config.verify {
        verify_cmd(a)?;
    }
    Ok(())
}
