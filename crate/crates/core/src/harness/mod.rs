//! Experiment protocol: trials of episodes with a novelty injected part-way,
//! aggregated into per-episode summaries.

mod config;

pub use config::{AgentVariant, ConfigError, EnvName, ExperimentConfig, MonitorSettings, RepairSettings};

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{cartpole_tasks, craft_tasks, Agent, AgentError, EpisodeRecord, TaskRules};
use crate::env::{CartPoleEnv, CartPoleParams, CraftEnv, CraftParams, Environment, NoveltySpec};
use crate::monitors::{FeatureMap, RewardSample, StateActionFeatures};
use crate::presets::{cartpole_model, craft_model};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub episodes: Vec<EpisodeRecord>,
    /// Error that ended the trial early, if any.
    pub aborted: Option<String>,
    /// First episode at which novelty was declared.
    pub detection_episode: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub episode: usize,
    pub mean_reward: f64,
    pub ci95: f64,
    pub detections: usize,
    pub repairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub episodes: Vec<EpisodeSummary>,
    pub detection_episodes: Vec<Option<usize>>,
    pub aborted_trials: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub trials: Vec<TrialRecord>,
    pub summary: ExperimentSummary,
}

/// Seed of trial `trial`.
pub fn trial_seed(base: u64, trial: usize) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(trial as u64)
}

/// Reset seed of one episode within a trial.
pub fn episode_seed(trial_seed: u64, episode: usize) -> u64 {
    trial_seed.wrapping_mul(1_000_003).wrapping_add(episode as u64)
}

/// A fresh agent and environment for one trial.
pub fn build(cfg: &ExperimentConfig) -> Result<(Agent, Box<dyn Environment>), AgentError> {
    let (model, tasks, rules, env): (_, _, _, Box<dyn Environment>) = match cfg.env {
        EnvName::Cartpole => {
            let m = cartpole_model();
            let t = cartpole_tasks(&m);
            (m, t, TaskRules::default(), Box::new(CartPoleEnv::new(CartPoleParams::default(), cfg.init_noise)))
        }
        EnvName::Craft => {
            let m = craft_model();
            let t = craft_tasks(&m);
            (m, t, TaskRules::craft(), Box::new(CraftEnv::shuffled(CraftParams::default())))
        }
    };
    let agent = Agent::new(model, tasks, rules, cfg.background(), cfg.agent_config())?;
    Ok((agent, env))
}

/// Runs one trial from a nominal agent and environment.
pub fn run_trial(cfg: &ExperimentConfig, trial: usize) -> TrialRecord {
    let seed = trial_seed(cfg.seed, trial);
    let mut rec = TrialRecord {
        trial,
        seed,
        episodes: Vec::new(),
        aborted: None,
        detection_episode: None,
    };
    let novelty = match cfg.novelty_spec() {
        Ok(n) => n,
        Err(e) => {
            rec.aborted = Some(e.to_string());
            return rec;
        }
    };
    let (mut agent, mut env) = match build(cfg) {
        Ok(x) => x,
        Err(e) => {
            rec.aborted = Some(e.to_string());
            return rec;
        }
    };
    for ep in 0..cfg.episodes {
        let result = env
            .configure_episode(Some(&novelty), ep)
            .map_err(AgentError::from)
            .and_then(|_| agent.run_episode(env.as_mut(), ep, episode_seed(seed, ep)));
        match result {
            Ok(r) => {
                if r.novelty_detected && rec.detection_episode.is_none() {
                    rec.detection_episode = Some(ep);
                }
                rec.episodes.push(r);
            }
            Err(e) => {
                rec.aborted = Some(format!("episode {ep}: {e}"));
                break;
            }
        }
    }
    rec
}

/// Mean and 1.96 standard errors (sample standard deviation); zero width
/// for fewer than two values.
pub fn mean_ci95(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * (var / n as f64).sqrt())
}

pub fn summarize(trials: &[TrialRecord], episodes: usize) -> ExperimentSummary {
    let rows = (0..episodes)
        .map(|ep| {
            let recs: Vec<&EpisodeRecord> = trials.iter().filter_map(|t| t.episodes.get(ep)).collect();
            let rewards: Vec<f64> = recs.iter().map(|r| r.reward).collect();
            let (mean_reward, ci95) = mean_ci95(&rewards);
            EpisodeSummary {
                episode: ep,
                mean_reward,
                ci95,
                detections: recs.iter().filter(|r| r.novelty_detected).count(),
                repairs: recs
                    .iter()
                    .filter(|r| r.repair.as_ref().is_some_and(|x| !x.net_delta.is_empty()))
                    .count(),
            }
        })
        .collect();
    ExperimentSummary {
        episodes: rows,
        detection_episodes: trials.iter().map(|t| t.detection_episode).collect(),
        aborted_trials: trials.iter().filter(|t| t.aborted.is_some()).map(|t| t.trial).collect(),
    }
}

/// Runs every trial (in parallel up to `cfg.jobs`) and aggregates them.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, ConfigError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let trials: Vec<TrialRecord> = pool.install(|| (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, t)).collect());
    let summary = summarize(&trials, cfg.episodes);
    Ok(ExperimentResult { trials, summary })
}

#[derive(Serialize)]
struct EpisodeLine<'a> {
    trial: usize,
    #[serde(flatten)]
    record: &'a EpisodeRecord,
}

/// One JSON object per episode, trials in order.
pub fn episodes_ndjson(trials: &[TrialRecord]) -> String {
    let mut out = String::new();
    for t in trials {
        for r in &t.episodes {
            let line = serde_json::to_string(&EpisodeLine { trial: t.trial, record: r }).expect("records serialize");
            out.push_str(&line);
            out.push('\n');
        }
    }
    out
}

pub fn summary_csv(summary: &ExperimentSummary) -> String {
    let mut out = String::from("episode,mean_reward,ci95,detections,repairs\n");
    for r in &summary.episodes {
        let _ = writeln!(out, "{},{},{},{},{}", r.episode, r.mean_reward, r.ci95, r.detections, r.repairs);
    }
    out
}

/// Writes `episodes.ndjson`, `summary.csv` and `config.json` into `dir`.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, result: &ExperimentResult) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("episodes.ndjson"), episodes_ndjson(&result.trials))?;
    fs::write(dir.join("summary.csv"), summary_csv(&result.summary))?;
    let echo = serde_json::to_string_pretty(cfg).expect("config serializes");
    fs::write(dir.join("config.json"), echo + "\n")?;
    Ok(())
}

/// Reward range of the nominal crafting environment: a plain step maps to
/// 0 and the crafting step to 1.
pub fn craft_reward_range() -> (f64, f64) {
    let p = CraftParams::default();
    (-p.action_cost, p.goal_reward - p.action_cost)
}

/// `(features, normalized reward)` tuples from one crafting episode on the
/// map drawn from `seed`, with `novelty` active when given. Rewards are
/// normalized with the nominal range.
pub fn craft_episode_samples(seed: u64, novelty: Option<&NoveltySpec>) -> Result<Vec<RewardSample>, AgentError> {
    let (lo, hi) = craft_reward_range();
    let fm = StateActionFeatures;
    let cfg = ExperimentConfig::craft_logs(1, 1, AgentVariant::PlanningStatic);
    let (mut agent, mut env) = build(&cfg)?;
    env.configure_episode(novelty, 0)?;
    let rec = agent.run_episode(env.as_mut(), 0, seed)?;
    Ok(rec
        .trajectory
        .transitions()
        .zip(&rec.rewards)
        .map(|(t, r)| RewardSample {
            features: fm.features(agent.model(), t.from, t.action),
            reward: (r - lo) / (hi - lo),
        })
        .collect())
}

/// Nominal samples from one episode per seed.
pub fn craft_reward_samples(seeds: std::ops::Range<u64>) -> Result<Vec<RewardSample>, AgentError> {
    let mut out = Vec::new();
    for seed in seeds {
        out.extend(craft_episode_samples(seed, None)?);
    }
    Ok(out)
}
