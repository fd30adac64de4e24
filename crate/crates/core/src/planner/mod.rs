//! Forward best-first search over the discretized transition system.
//!
//! Nodes are expanded by applying each applicable action (or letting time
//! pass) and simulating `plan_delta_t` seconds. The frontier is ordered by
//! `g + weight * h`, ties broken by insertion order; states are deduplicated
//! on a quantized key that ignores simulated time.

mod heuristic;

pub use heuristic::{Blind, GoalCount, Heuristic, HeuristicSpec, PoleBalance};

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{holds, Condition, GroundedModel, ModelError, Plan, PlanStep, State};
use crate::sim::{step, SimConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub node_budget: usize,
    /// Wall-clock limit in seconds. Results depend on it only when it is hit.
    pub time_budget: f64,
    pub plan_delta_t: f64,
    pub state_quantization: f64,
    pub heuristic: HeuristicSpec,
    pub heuristic_weight: f64,
    /// Cost charged per decision.
    pub step_cost: f64,
    /// Receding-horizon mode: any node this many decisions deep that
    /// satisfies the invariant counts as a goal.
    pub lookahead: Option<usize>,
    /// Whether "let time pass" is a successor at every node.
    pub allow_wait: bool,
    pub sim: SimConfig,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            node_budget: 50_000,
            time_budget: 60.0,
            plan_delta_t: 0.02,
            state_quantization: 1e-3,
            heuristic: HeuristicSpec::GoalCount,
            heuristic_weight: 1.0,
            step_cost: 1.0,
            lookahead: None,
            allow_wait: true,
            sim: SimConfig::default(),
        }
    }
}

impl PlannerConfig {
    pub fn cartpole() -> Self {
        PlannerConfig {
            node_budget: 4_000,
            heuristic: HeuristicSpec::cartpole(40),
            heuristic_weight: 2.0,
            lookahead: Some(40),
            ..Default::default()
        }
    }

    pub fn craft() -> Self {
        PlannerConfig {
            node_budget: 200_000,
            plan_delta_t: 1.0,
            state_quantization: 1e-6,
            allow_wait: false,
            sim: SimConfig {
                delta_t: 1.0,
                max_event_cascade: 4,
                horizon: 0.0,
            },
            ..Default::default()
        }
    }

    fn steps_per_decision(&self) -> Result<usize, PlanningError> {
        let k = self.plan_delta_t / self.sim.delta_t;
        let r = k.round();
        if r < 1.0 || (k - r).abs() > 1e-9 {
            return Err(PlanningError::Config(
                "plan_delta_t must be a positive integer multiple of the simulation step".into(),
            ));
        }
        Ok(r as usize)
    }
}

/// The search problem: reach `goal`, never leaving `invariant`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanQuery {
    pub goal: Condition<usize>,
    pub invariant: Condition<usize>,
}

impl PlanQuery {
    pub fn goal(goal: Condition<usize>) -> Self {
        PlanQuery {
            goal,
            invariant: Condition::empty(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureReason {
    NodeBudget,
    TimeBudget,
    /// Every reachable state was expanded without meeting the goal.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("planning failed ({reason:?}) after {nodes_expanded} expansions")]
pub struct PlanningFailure {
    pub reason: FailureReason,
    /// Plan to the expanded node with the lowest heuristic value.
    pub best_partial: Plan,
    pub nodes_expanded: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanningError {
    #[error(transparent)]
    Failed(#[from] PlanningFailure),
    #[error("bad planner configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl PlanningError {
    pub fn nodes_expanded(&self) -> usize {
        match self {
            PlanningError::Failed(f) => f.nodes_expanded,
            _ => 0,
        }
    }
}

/// A plan plus search statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub plan: Plan,
    pub nodes_expanded: usize,
    /// Model states at each decision point, starting with the root.
    pub expected: Vec<State>,
}

struct Node {
    state: State,
    parent: Option<usize>,
    action: Option<usize>,
    depth: usize,
    g: f64,
    h: f64,
}

#[derive(PartialEq)]
struct Entry {
    f: f64,
    seq: usize,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on (f, seq).
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn quantize(s: &State, q: f64) -> (Vec<bool>, Vec<i64>) {
    let nums = s.nums.iter().map(|v| (v / q).round() as i64).collect();
    (s.bools.clone(), nums)
}

fn extract(nodes: &[Node], mut i: usize, s0_time: f64, delta: f64) -> (Plan, Vec<State>) {
    let mut chain = Vec::new();
    loop {
        chain.push(i);
        match nodes[i].parent {
            Some(p) => i = p,
            None => break,
        }
    }
    chain.reverse();
    let mut steps = Vec::new();
    let mut states = Vec::new();
    for &n in &chain {
        states.push(nodes[n].state.clone());
        if let Some(a) = nodes[n].action {
            steps.push(PlanStep {
                time: s0_time + (nodes[n].depth - 1) as f64 * delta,
                action: a,
            });
        }
    }
    (Plan::new(steps), states)
}

/// Plans to `goal` from `s0`.
pub fn plan(model: &GroundedModel, s0: &State, goal: &Condition<usize>, cfg: &PlannerConfig) -> Result<PlanOutcome, PlanningError> {
    plan_with(model, s0, &PlanQuery::goal(goal.clone()), cfg)
}

/// Mid-episode replanning; identical to [`plan`] seeded at `current`.
pub fn replan_from(model: &GroundedModel, current: &State, goal: &Condition<usize>, cfg: &PlannerConfig) -> Result<PlanOutcome, PlanningError> {
    plan(model, current, goal, cfg)
}

pub fn plan_with(model: &GroundedModel, s0: &State, query: &PlanQuery, cfg: &PlannerConfig) -> Result<PlanOutcome, PlanningError> {
    if cfg.node_budget == 0 || cfg.time_budget <= 0.0 || cfg.state_quantization <= 0.0 {
        return Err(PlanningError::Config("budgets and quantization must be positive".into()));
    }
    let k = cfg.steps_per_decision()?;
    let h = cfg.heuristic.build(model, &query.goal)?;
    let started = Instant::now();
    let is_goal = |s: &State, depth: usize| -> bool {
        if holds(s, &query.goal).unwrap_or(false) {
            return true;
        }
        matches!(cfg.lookahead, Some(l) if depth >= l) && holds(s, &query.invariant).unwrap_or(false)
    };
    let mut nodes = vec![Node {
        state: s0.clone(),
        parent: None,
        action: None,
        depth: 0,
        g: 0.0,
        h: h.estimate(s0, 0),
    }];
    let mut open = BinaryHeap::new();
    open.push(Entry {
        f: cfg.heuristic_weight * nodes[0].h,
        seq: 0,
        node: 0,
    });
    let mut seen = HashSet::new();
    seen.insert(quantize(s0, cfg.state_quantization));
    let mut seq = 1;
    let mut expanded = 0;
    let mut best = 0;
    let mut successors: Vec<Option<usize>> = model.actions().iter().map(|&a| Some(a)).collect();
    if cfg.allow_wait {
        successors.push(None);
    }
    let finish = |nodes: &[Node], i: usize, expanded: usize| {
        let (plan, expected) = extract(nodes, i, s0.time, cfg.plan_delta_t);
        PlanOutcome {
            plan,
            nodes_expanded: expanded,
            expected,
        }
    };
    let fail = |nodes: &[Node], best: usize, expanded: usize, reason| {
        PlanningError::Failed(PlanningFailure {
            reason,
            best_partial: extract(nodes, best, s0.time, cfg.plan_delta_t).0,
            nodes_expanded: expanded,
        })
    };
    while let Some(Entry { node: cur, .. }) = open.pop() {
        if is_goal(&nodes[cur].state, nodes[cur].depth) {
            return Ok(finish(&nodes, cur, expanded));
        }
        if expanded >= cfg.node_budget {
            return Err(fail(&nodes, best, expanded, FailureReason::NodeBudget));
        }
        if expanded % 256 == 255 && started.elapsed().as_secs_f64() > cfg.time_budget {
            return Err(fail(&nodes, best, expanded, FailureReason::TimeBudget));
        }
        expanded += 1;
        if nodes[cur].h < nodes[best].h {
            best = cur;
        }
        for &a in &successors {
            if let Some(a) = a {
                let pre = &model.happening(a).precondition;
                if !holds(&nodes[cur].state, pre).unwrap_or(false) {
                    continue;
                }
            }
            let mut s = match step(model, &nodes[cur].state, a, &cfg.sim) {
                Ok(s) => s,
                Err(_) => continue,
            };
            let mut ok = true;
            for _ in 1..k {
                match step(model, &s, None, &cfg.sim) {
                    Ok(n) => s = n,
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok || !holds(&s, &query.invariant).unwrap_or(false) {
                continue;
            }
            if !seen.insert(quantize(&s, cfg.state_quantization)) {
                continue;
            }
            let depth = nodes[cur].depth + 1;
            let g = nodes[cur].g + cfg.step_cost;
            let hv = h.estimate(&s, depth);
            nodes.push(Node {
                state: s,
                parent: Some(cur),
                action: a,
                depth,
                g,
                h: hv,
            });
            open.push(Entry {
                f: g + cfg.heuristic_weight * hv,
                seq,
                node: nodes.len() - 1,
            });
            seq += 1;
        }
    }
    Err(fail(&nodes, best, expanded, FailureReason::Exhausted))
}
