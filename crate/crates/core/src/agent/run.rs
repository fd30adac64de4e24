use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::tasks::{relevant_tasks, select_task, TaskDef, TaskOutcome, TaskRules};
use super::{infer_state, strip_unknown, BackgroundFacts, InferError};
use crate::env::{EnvError, Environment, Observation};
use crate::ir::{fluent_distance, holds, FluentId, GroundedModel, ModelError, Plan, PlanStep, ResolvedDistance, State, Trajectory};
use crate::monitors::{
    determine, inconsistency_score, reward_divergence, unknown_entity_check, DeterminationRule, FeatureMap,
    InconsistencyConfig, MonitorError, MonitorSignal, RewardEstimator, SignalHistory, INCONSISTENCY,
    REWARD_DIVERGENCE,
};
use crate::planner::{plan, PlannerConfig, PlanningError};
use crate::repair::{do_repair, focused_repair_search, repair_search, RepairError, RepairSearchConfig, RepairSpace};
use crate::sim::step;

/// A fitted reward model plus the scaling that maps raw step rewards onto
/// the range it was trained on.
pub struct RewardMonitor {
    pub estimator: RewardEstimator,
    pub features: Box<dyn FeatureMap>,
    /// Raw rewards `lo` and `hi` map to 0 and 1.
    pub reward_range: (f64, f64),
    pub threshold: f64,
}

impl RewardMonitor {
    pub fn normalize(&self, r: f64) -> f64 {
        let (lo, hi) = self.reward_range;
        (r - lo) / (hi - lo)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub planner: PlannerConfig,
    /// Decisions executed from each plan before replanning anyway; `None`
    /// runs plans to completion.
    pub execute_prefix: Option<usize>,
    /// Per-step distance above which the agent replans; `None` means
    /// `c_th * (1 - gamma)` of the inconsistency monitor.
    pub step_tolerance: Option<f64>,
    pub inconsistency: InconsistencyConfig,
    pub known_entities: BTreeSet<String>,
    pub entity_confidence: f64,
    pub determination: DeterminationRule,
    pub repair_space: RepairSpace,
    pub repair: RepairSearchConfig,
    /// Whether a detection triggers model repair.
    pub adaptive: bool,
}

impl AgentConfig {
    pub fn step_tolerance(&self) -> f64 {
        self.step_tolerance
            .unwrap_or(self.inconsistency.c_th * (1.0 - self.inconsistency.gamma))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairRecord {
    pub log: String,
    pub net_delta: BTreeMap<String, f64>,
    /// Net edits of the installed model relative to the original one.
    pub installed: BTreeMap<String, f64>,
    pub c_best: f64,
    pub c_empty: f64,
    pub nodes_expanded: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeOutcome {
    Success,
    Failure,
    /// No task was relevant or every task failed to plan.
    Idle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    /// Episode reward divided by the environment's normalizer.
    pub reward: f64,
    pub score: f64,
    pub steps: usize,
    pub actions: Vec<Option<String>>,
    pub rewards: Vec<f64>,
    pub plans: usize,
    pub task: Option<String>,
    pub outcome: EpisodeOutcome,
    pub signals: Vec<MonitorSignal>,
    pub inconsistency: f64,
    pub novelty_detected: bool,
    pub repair: Option<RepairRecord>,
    #[serde(skip)]
    pub trajectory: Trajectory,
    #[serde(skip)]
    pub executed: Plan,
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Infer(#[from] InferError),
    #[error(transparent)]
    Planning(#[from] PlanningError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error(transparent)]
    Repair(#[from] RepairError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The planning agent with its novelty meta-reasoning state.
pub struct Agent {
    pub cfg: AgentConfig,
    model: GroundedModel,
    tasks: Vec<TaskDef>,
    rules: TaskRules,
    background: BackgroundFacts,
    reward_monitor: Option<RewardMonitor>,
    history: SignalHistory,
    last_outcome: Option<TaskOutcome>,
    novelty_detected: bool,
    distance: ResolvedDistance,
}

impl Agent {
    pub fn new(
        model: GroundedModel,
        tasks: Vec<TaskDef>,
        rules: TaskRules,
        background: BackgroundFacts,
        cfg: AgentConfig,
    ) -> Result<Self, AgentError> {
        cfg.inconsistency.check()?;
        cfg.repair_space.check(&model)?;
        let distance = cfg.inconsistency.distance.resolve(&model)?;
        Ok(Agent {
            cfg,
            model,
            tasks,
            rules,
            background,
            reward_monitor: None,
            history: SignalHistory::new(),
            last_outcome: None,
            novelty_detected: false,
            distance,
        })
    }

    pub fn with_reward_monitor(mut self, m: RewardMonitor) -> Self {
        self.reward_monitor = Some(m);
        self
    }

    pub fn model(&self) -> &GroundedModel {
        &self.model
    }

    pub fn history(&self) -> &SignalHistory {
        &self.history
    }

    /// Names of the monitors that report every episode.
    pub fn monitor_names(&self) -> Vec<&'static str> {
        let mut v = vec![crate::monitors::UNKNOWN_ENTITY, INCONSISTENCY];
        if self.reward_monitor.is_some() {
            v.push(REWARD_DIVERGENCE);
        }
        v
    }

    fn perceive(&self, mut obs: Observation, unknown: &mut BTreeSet<FluentId>) -> Result<State, AgentError> {
        for f in strip_unknown(&mut obs, &self.model) {
            unknown.insert(f);
        }
        let mut s = infer_state(&obs, &self.background, &self.model)?;
        if self.novelty_detected {
            if let Some(slot) = self.model.bool_slot(&FluentId::nullary("novelty_detected")) {
                s.bools[slot] = true;
            }
        }
        Ok(s)
    }

    /// Plans for the chosen task; returns per-step actions to execute.
    fn plan_task(&self, task: &TaskDef, s: &State) -> Result<Option<VecDeque<Option<usize>>>, AgentError> {
        let domain = task.domain(&self.model);
        let cfg = &self.cfg.planner;
        let steps = match plan(&domain, s, &task.goal, cfg) {
            Ok(out) => out.plan,
            Err(PlanningError::Failed(f)) if cfg.lookahead.is_some() => f.best_partial,
            Err(PlanningError::Failed(_)) => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let horizon = match cfg.lookahead {
            Some(l) => l,
            None => steps.steps.len(),
        };
        let mut queue = vec![None; horizon.max(1)];
        let mut next = 0;
        for st in &steps.steps {
            let i = cfg.sim.steps_in(st.time - s.time).max(next);
            if i >= queue.len() {
                queue.resize(i + 1, None);
            }
            queue[i] = Some(st.action);
            next = i + 1;
        }
        if cfg.lookahead.is_none() {
            queue.truncate(next.max(1));
        }
        if let Some(p) = self.cfg.execute_prefix {
            queue.truncate(p.max(1));
        }
        Ok(Some(queue.into()))
    }

    fn choose_and_plan(
        &self,
        s: &State,
        failed: &mut Vec<String>,
        plans: &mut usize,
        current: &mut Option<String>,
    ) -> Result<Option<VecDeque<Option<usize>>>, AgentError> {
        loop {
            let relevant: Vec<&TaskDef> = relevant_tasks(&self.tasks, s)
                .into_iter()
                .filter(|t| !failed.contains(&t.name))
                .collect();
            let last = match (failed.last(), &self.last_outcome) {
                (Some(f), _) => Some(TaskOutcome {
                    task: f.clone(),
                    success: false,
                }),
                (None, o) => o.clone(),
            };
            let Some(task) = select_task(&relevant, &self.rules, last.as_ref()) else {
                return Ok(None);
            };
            *plans += 1;
            match self.plan_task(task, s)? {
                Some(q) => {
                    *current = Some(task.name.clone());
                    return Ok(Some(q));
                }
                None => failed.push(task.name.clone()),
            }
        }
    }

    /// Runs one episode on an environment already configured for it, then
    /// evaluates monitors and, if warranted, repairs the model.
    pub fn run_episode(&mut self, env: &mut dyn Environment, episode: usize, seed: u64) -> Result<EpisodeRecord, AgentError> {
        let started = Instant::now();
        let mut unknown = BTreeSet::new();
        let obs = env.reset(seed);
        let mut labels: BTreeMap<String, f64> = BTreeMap::new();
        let mut note = |o: &Observation| {
            for (l, c) in &o.entities {
                let e = labels.entry(l.clone()).or_insert(*c);
                *e = e.min(*c);
            }
        };
        note(&obs);
        let mut s = self.perceive(obs, &mut unknown)?;
        let mut tau = Trajectory::from_initial(s.clone());
        let mut executed = Vec::new();
        let (mut actions, mut rewards) = (Vec::new(), Vec::new());
        let mut failed_tasks = Vec::new();
        let mut plans = 0;
        let mut task = None;
        let mut queue: VecDeque<Option<usize>> = VecDeque::new();
        let tolerance = self.cfg.step_tolerance();
        let mut idle = false;
        let mut terminal = false;
        while !terminal {
            if queue.is_empty() {
                match self.choose_and_plan(&s, &mut failed_tasks, &mut plans, &mut task)? {
                    Some(q) => queue = q,
                    None => {
                        idle = true;
                        break;
                    }
                }
            }
            let a = queue.pop_front().expect("nonempty queue");
            let expected = match step(&self.model, &s, a, &self.cfg.planner.sim) {
                Ok(e) => Some(e),
                Err(e) if e.is_plan_failure() => {
                    queue.clear();
                    continue;
                }
                Err(_) => None,
            };
            let name = a.map(|a| self.model.happening(a).name());
            let out = env.step(name.as_deref())?;
            note(&out.observation);
            let next = self.perceive(out.observation, &mut unknown)?;
            if let Some(a) = a {
                executed.push(PlanStep { time: s.time, action: a });
            }
            actions.push(name);
            rewards.push(out.reward);
            terminal = out.terminal;
            let drifted = match &expected {
                Some(e) => fluent_distance(e, &next, &self.distance) > tolerance,
                None => true,
            };
            if drifted {
                queue.clear();
            }
            tau.push(a, next.clone());
            s = next;
        }
        let score: f64 = rewards.iter().sum();
        let goal_met = match task.as_ref().and_then(|t| self.tasks.iter().find(|d| &d.name == t)) {
            Some(t) => holds(&s, &t.goal).unwrap_or(false),
            None => false,
        };
        let outcome = if goal_met {
            EpisodeOutcome::Success
        } else if idle && rewards.is_empty() {
            EpisodeOutcome::Idle
        } else {
            EpisodeOutcome::Failure
        };
        if let Some(t) = &task {
            self.last_outcome = Some(TaskOutcome {
                task: t.clone(),
                success: goal_met,
            });
        } else if let Some(f) = failed_tasks.last() {
            self.last_outcome = Some(TaskOutcome {
                task: f.clone(),
                success: false,
            });
        }
        let executed = Plan::new(executed);

        let mut observed: Vec<(String, f64)> = labels.into_iter().collect();
        observed.extend(unknown.iter().map(|f| (f.to_string(), 1.0)));
        let mut signals = vec![unknown_entity_check(
            episode,
            &observed,
            &self.cfg.known_entities,
            self.cfg.entity_confidence,
        )];
        let c = inconsistency_score(&executed, &self.model, &tau, &self.cfg.inconsistency)?;
        signals.push(MonitorSignal {
            monitor: INCONSISTENCY.into(),
            episode,
            score: c,
            fired: c >= self.cfg.inconsistency.c_th,
        });
        if let Some(rm) = &self.reward_monitor {
            let n = rewards.len().max(1) as f64;
            let div: f64 = tau
                .transitions()
                .zip(&rewards)
                .map(|(t, &r)| {
                    let f = rm.features.features(&self.model, t.from, t.action);
                    reward_divergence(&rm.estimator, &f, rm.normalize(r))
                })
                .sum::<f64>()
                / n;
            signals.push(MonitorSignal {
                monitor: REWARD_DIVERGENCE.into(),
                episode,
                score: div,
                fired: div >= rm.threshold,
            });
        }
        for sig in &signals {
            self.history.entry(sig.monitor.clone()).or_default().push(sig.clone());
        }
        let verdict = determine(&self.history, &self.cfg.determination);
        if verdict.fired {
            self.novelty_detected = true;
        }
        let mut repair = None;
        if verdict.fired && self.cfg.adaptive && c >= self.cfg.inconsistency.c_th {
            let search = if self.cfg.repair.focused {
                focused_repair_search
            } else {
                repair_search
            };
            let out = search(
                &self.cfg.repair_space,
                &self.model,
                &executed,
                &tau,
                &self.cfg.repair,
                &self.cfg.inconsistency,
            )?;
            if !out.best.is_empty() {
                self.model = do_repair(&self.model, &out.best)?;
            }
            repair = Some(RepairRecord {
                log: out.best.log_line(&self.cfg.repair_space, out.c_best),
                net_delta: out.best.net_delta().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
                installed: self.model.net_edits().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
                c_best: out.c_best,
                c_empty: out.c_empty,
                nodes_expanded: out.nodes_expanded,
            });
        }
        Ok(EpisodeRecord {
            episode,
            reward: score / env.reward_normalizer(),
            score,
            steps: rewards.len(),
            actions,
            rewards,
            plans,
            task,
            outcome,
            signals,
            inconsistency: c,
            novelty_detected: verdict.fired,
            repair,
            trajectory: tau,
            executed,
            wall_time: started.elapsed(),
        })
    }
}

/// Free-function form of [`Agent::run_episode`].
pub fn run_episode(env: &mut dyn Environment, agent: &mut Agent, episode: usize, seed: u64) -> Result<EpisodeRecord, AgentError> {
    agent.run_episode(env, episode, seed)
}

/// Repair search settings for `c_th`, focused or general.
pub fn repair_config(c_th: f64, focused: bool) -> RepairSearchConfig {
    RepairSearchConfig {
        focused,
        ..RepairSearchConfig::new(c_th)
    }
}
