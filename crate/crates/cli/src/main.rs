use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use openworld::harness::{self, AgentVariant, EnvName, ExperimentConfig};
use openworld::ir::{ground, DistanceSpec, GroundedModel, Plan, Trajectory};
use openworld::monitors::InconsistencyConfig;
use openworld::pddl::{parse_domain_named, parse_problem_named};
use openworld::planner::PlannerConfig;
use openworld::presets::{cartpole_pose_distance, craft_inventory_distance};
use openworld::repair::{focused_repair_search, repair_search, RepairParam, RepairSearchConfig, RepairSpace};
use openworld::sim::{self, SimConfig};

#[derive(Parser)]
#[command(name = "openworld", version, about = "Novelty experiments, plan validation and offline model repair")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run T trials of N episodes and write episodes.ndjson, summary.csv and config.json.
    Run(RunArgs),
    /// Simulate a plan against a domain and problem and check the goal.
    Validate(ValidateArgs),
    /// Search for a model repair that explains a logged trajectory.
    Repair(RepairArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment config (TOML, or JSON as written by a previous run).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    env: Option<EnvName>,
    #[arg(long)]
    novelty: Option<String>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    novelty_episode: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    agent: Option<AgentVariant>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory; the config's `out` or `out/` when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ValidateArgs {
    #[arg(long)]
    domain: PathBuf,
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    plan: PathBuf,
    #[arg(long, default_value_t = 0.02)]
    delta_t: f64,
    /// Seconds to simulate; the last plan timestamp plus one step when absent.
    #[arg(long)]
    horizon: Option<f64>,
    /// Write the simulated trajectory here as ndjson.
    #[arg(long)]
    trajectory_out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct RepairArgs {
    #[arg(long)]
    domain: PathBuf,
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    plan: PathBuf,
    /// Observed trajectory, one state per line.
    #[arg(long)]
    trajectory: PathBuf,
    /// `cartpole`, `craft`, or a TOML/JSON repair config file.
    #[arg(long)]
    space: String,
}

/// Offline repair settings. A preset fills every field it leaves unset.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RepairFile {
    preset: Option<String>,
    params: Option<Vec<RepairParam>>,
    distance: Option<DistanceSpec>,
    c_th: Option<f64>,
    gamma: Option<f64>,
    delta_t: Option<f64>,
    focused: Option<bool>,
    lambda: Option<f64>,
    node_budget: Option<usize>,
    max_repair_length: Option<usize>,
}

enum Failure {
    Input(String),
    Outcome(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Outcome(_) => 2,
        }
    }
}

fn input<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> Failure {
    move |e| Failure::Input(format!("{context}: {e}"))
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(input(path.display()))
}

fn load_model(domain: &Path, problem: &Path) -> Result<GroundedModel, Failure> {
    let d = parse_domain_named(&read(domain)?, &domain.display().to_string()).map_err(input("domain"))?;
    let p = parse_problem_named(&read(problem)?, &d, &problem.display().to_string()).map_err(input("problem"))?;
    ground(&d, &p).map_err(input("grounding"))
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = read(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(input(path.display()))
    } else {
        ExperimentConfig::from_toml(&text).map_err(input(path.display()))
    }
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let mut cfg = load_config(&args.config)?;
    if let Some(v) = args.env {
        cfg.env = v;
    }
    if let Some(v) = args.novelty {
        cfg.novelty = v;
    }
    if let Some(v) = args.episodes {
        cfg.episodes = v;
    }
    if let Some(v) = args.novelty_episode {
        cfg.novelty_episode = v;
    }
    if let Some(v) = args.trials {
        cfg.trials = v;
    }
    if let Some(v) = args.agent {
        cfg.agent = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.jobs {
        cfg.jobs = v;
    }
    if let Some(v) = args.out {
        cfg.out = Some(v.display().to_string());
    }
    cfg.validate().map_err(input("config"))?;
    let dir = PathBuf::from(cfg.out.clone().unwrap_or_else(|| "out".into()));
    let result = harness::run_experiment(&cfg).map_err(input("config"))?;
    harness::write_outputs(&dir, &cfg, &result).map_err(input(dir.display()))?;
    for s in &result.summary.episodes {
        println!(
            "episode {:>3}  reward {:.4} ± {:.4}  detections {}  repairs {}",
            s.episode, s.mean_reward, s.ci95, s.detections, s.repairs
        );
    }
    let aborted: Vec<_> = result.trials.iter().filter_map(|t| t.aborted.as_ref().map(|m| (t.trial, m))).collect();
    if aborted.is_empty() {
        return Ok(());
    }
    for (t, m) in &aborted {
        eprintln!("trial {t} aborted: {m}");
    }
    Err(Failure::Outcome(format!("{} of {} trials aborted", aborted.len(), cfg.trials)))
}

fn validate(args: ValidateArgs) -> Result<(), Failure> {
    let model = load_model(&args.domain, &args.problem)?;
    let plan = Plan::parse(&read(&args.plan)?, &model).map_err(input(args.plan.display()))?;
    if !(args.delta_t > 0.0 && args.delta_t.is_finite()) {
        return Err(Failure::Input("--delta-t must be positive".into()));
    }
    let last = plan.steps.last().map_or(0.0, |s| s.time);
    let cfg = SimConfig {
        delta_t: args.delta_t,
        horizon: args.horizon.unwrap_or(last + args.delta_t),
        ..SimConfig::default()
    };
    let s0 = model.initial_state();
    let (traj, outcome) = match sim::validate(&model, s0, &plan, model.goal(), &cfg) {
        Ok(v) if v.reaches_goal => (v.trajectory, Ok(())),
        Ok(v) => (v.trajectory, Err(Failure::Outcome("plan executes but the goal does not hold".into()))),
        Err(f) => (f.partial, Err(Failure::Outcome(format!("plan fails: {}", f.error)))),
    };
    if let Some(path) = &args.trajectory_out {
        fs::write(path, traj.to_ndjson(&model)).map_err(input(path.display()))?;
    }
    if outcome.is_ok() {
        println!("valid: goal holds after {} states", traj.len());
    }
    outcome
}

fn load_repair_file(spec: &str) -> Result<RepairFile, Failure> {
    if RepairSpace::preset(spec).is_some() {
        return Ok(RepairFile {
            preset: Some(spec.into()),
            ..Default::default()
        });
    }
    let path = Path::new(spec);
    let text = read(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(input(spec))
    } else {
        toml::from_str(&text).map_err(input(spec))
    }
}

fn repair(args: RepairArgs) -> Result<(), Failure> {
    let model = load_model(&args.domain, &args.problem)?;
    let plan = Plan::parse(&read(&args.plan)?, &model).map_err(input(args.plan.display()))?;
    let tau = Trajectory::from_ndjson(&read(&args.trajectory)?, &model).map_err(input(args.trajectory.display()))?;
    if tau.states.is_empty() {
        return Err(Failure::Input("trajectory is empty".into()));
    }
    let file = load_repair_file(&args.space)?;
    let (space, distance, c_th, sim) = match file.preset.as_deref() {
        Some("cartpole") => (RepairSpace::cartpole(), Some(cartpole_pose_distance()), Some(0.009), PlannerConfig::cartpole().sim),
        Some("craft") => (RepairSpace::craft(), Some(craft_inventory_distance()), Some(2.0), PlannerConfig::craft().sim),
        Some(other) => return Err(Failure::Input(format!("unknown repair preset `{other}`"))),
        None => (RepairSpace { params: Vec::new() }, None, None, SimConfig::default()),
    };
    let space = file.params.map(|params| RepairSpace { params }).unwrap_or(space);
    let distance = file
        .distance
        .or(distance)
        .ok_or_else(|| Failure::Input("repair config needs `distance`".into()))?;
    let c_th = file
        .c_th
        .or(c_th)
        .ok_or_else(|| Failure::Input("repair config needs `c_th`".into()))?;
    let sim = SimConfig {
        delta_t: file.delta_t.unwrap_or(sim.delta_t),
        ..sim
    };
    let mut icfg = InconsistencyConfig::new(distance, c_th, sim);
    if let Some(g) = file.gamma {
        icfg.gamma = g;
    }
    let mut rcfg = RepairSearchConfig::new(c_th);
    rcfg.lambda = file.lambda.or(rcfg.lambda);
    rcfg.node_budget = file.node_budget.unwrap_or(rcfg.node_budget);
    rcfg.max_repair_length = file.max_repair_length.unwrap_or(rcfg.max_repair_length);
    rcfg.focused = file.focused.unwrap_or(true);
    let search = if rcfg.focused { focused_repair_search } else { repair_search };
    let outcome = search(&space, &model, &plan, &tau, &rcfg, &icfg).map_err(input("repair"))?;
    println!("{}", outcome.best.log_line(&space, outcome.c_best));
    let json = serde_json::to_string_pretty(&outcome).map_err(input("repair"))?;
    println!("{json}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Validate(a) => validate(a),
        Command::Repair(a) => repair(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Input(m) | Failure::Outcome(m)) = &f;
            eprintln!("error: {m}");
            ExitCode::from(f.code())
        }
    }
}
