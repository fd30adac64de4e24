use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{do_repair, Mmo, Repair, RepairError, RepairSpace};
use crate::ir::{GroundedModel, Plan, Trajectory};
use crate::monitors::{scored_simulation, InconsistencyConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairSearchConfig {
    /// Search stops once the best score drops below this.
    pub c_th: f64,
    /// Weight of repair length in the frontier key; `None` means `0.001 * c_th`.
    pub lambda: Option<f64>,
    pub node_budget: usize,
    pub max_repair_length: usize,
    /// Which search the agent runs; the search functions themselves ignore it.
    pub focused: bool,
}

impl RepairSearchConfig {
    pub fn new(c_th: f64) -> Self {
        RepairSearchConfig {
            c_th,
            lambda: None,
            node_budget: 10_000,
            max_repair_length: 20,
            focused: false,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.unwrap_or(0.001 * self.c_th)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HaltReason {
    BelowThreshold,
    NodeBudget,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairOutcome {
    pub best: Repair,
    pub c_best: f64,
    /// Score of the unrepaired model.
    pub c_empty: f64,
    pub nodes_expanded: usize,
    pub candidates_scored: usize,
    pub halt: HaltReason,
}

struct Node {
    counts: Vec<i64>,
    /// MMO index that produced this node.
    via: Option<usize>,
}

#[derive(PartialEq)]
struct Entry {
    f: f64,
    seq: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
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

/// MMO indices (into [`RepairSpace::mmos`]) tried when expanding a node
/// reached via `via`.
pub fn successor_mmos(space: &RepairSpace, via: Option<usize>, focused: bool) -> Vec<usize> {
    match (focused, via) {
        (true, Some(i)) => vec![i],
        _ => (0..space.params.len() * 2).collect(),
    }
}

fn to_repair(space: &RepairSpace, counts: &[i64]) -> Repair {
    let mut mmos = Vec::new();
    for (p, &c) in space.params.iter().zip(counts) {
        let d = if c > 0 { p.delta } else { -p.delta };
        for _ in 0..c.unsigned_abs() {
            mmos.push(Mmo {
                target: p.fluent.clone(),
                delta: d,
            });
        }
    }
    Repair { mmos }
}

fn size(counts: &[i64]) -> usize {
    counts.iter().map(|c| c.unsigned_abs() as usize).sum()
}

/// Scores a candidate; `None` when the repaired model cannot be simulated
/// for reasons other than an ordinary precondition failure, or when it
/// predicts fewer observed states than `min_compared`.
fn score(
    model: &GroundedModel,
    repair: &Repair,
    plan: &Plan,
    tau: &Trajectory,
    icfg: &InconsistencyConfig,
    min_compared: usize,
) -> Result<Option<(f64, usize)>, RepairError> {
    let m = do_repair(model, repair)?;
    let s = scored_simulation(plan, &m, tau, icfg)?;
    Ok(match s.error {
        Some(e) if !e.is_plan_failure() => None,
        _ if s.compared < min_compared => None,
        _ => Some((s.score, s.compared)),
    })
}

/// Best-first search for the repair that best explains `tau`, expanding
/// every MMO at every node (`cfg.focused` is ignored).
///
/// Nodes are net-delta vectors, so MMO sequences that differ only in order
/// or in cancelling pairs are one node. A candidate must predict at least
/// as much of `tau` as the unrepaired model.
pub fn repair_search(
    space: &RepairSpace,
    model: &GroundedModel,
    plan: &Plan,
    tau: &Trajectory,
    cfg: &RepairSearchConfig,
    icfg: &InconsistencyConfig,
) -> Result<RepairOutcome, RepairError> {
    search(space, model, plan, tau, cfg, icfg, false)
}

fn search(
    space: &RepairSpace,
    model: &GroundedModel,
    plan: &Plan,
    tau: &Trajectory,
    cfg: &RepairSearchConfig,
    icfg: &InconsistencyConfig,
    focused: bool,
) -> Result<RepairOutcome, RepairError> {
    space.check(model)?;
    let lambda = cfg.lambda();
    if cfg.node_budget == 0 || lambda.is_nan() || lambda < 0.0 {
        return Err(RepairError::BadConfig);
    }
    let n = space.params.len();
    let root = vec![0i64; n];
    let (c_empty, min_compared) = score(model, &Repair::default(), plan, tau, icfg, 0)?.unwrap_or((f64::INFINITY, 0));
    let mut nodes = vec![Node {
        counts: root.clone(),
        via: None,
    }];
    let mut best = 0;
    let mut c_best = c_empty;
    let mut open = BinaryHeap::new();
    open.push((Entry { f: c_empty, seq: 0 }, 0usize));
    let mut seen = HashSet::new();
    seen.insert(root);
    let mut expanded = 0;
    let mut scored = 0;
    let halt = loop {
        if c_best < cfg.c_th {
            break HaltReason::BelowThreshold;
        }
        let Some((_, cur)) = open.pop() else {
            break HaltReason::Exhausted;
        };
        if expanded >= cfg.node_budget {
            break HaltReason::NodeBudget;
        }
        expanded += 1;
        let mut children = Vec::new();
        for i in successor_mmos(space, nodes[cur].via, focused) {
            let mut c = nodes[cur].counts.clone();
            c[i / 2] += if i % 2 == 0 { 1 } else { -1 };
            if size(&c) > cfg.max_repair_length || !seen.insert(c.clone()) {
                continue;
            }
            children.push((i, c));
        }
        let scores: Vec<Result<Option<(f64, usize)>, RepairError>> = children
            .par_iter()
            .map(|(_, c)| score(model, &to_repair(space, c), plan, tau, icfg, min_compared))
            .collect();
        for ((i, c), s) in children.into_iter().zip(scores) {
            let Some((s, _)) = s? else { continue };
            scored += 1;
            let len = size(&c);
            nodes.push(Node {
                counts: c,
                via: Some(i),
            });
            let id = nodes.len() - 1;
            if s < c_best {
                c_best = s;
                best = id;
            }
            open.push((
                Entry {
                    f: s + lambda * len as f64,
                    seq: id,
                },
                id,
            ));
        }
    };
    Ok(RepairOutcome {
        best: to_repair(space, &nodes[best].counts),
        c_best,
        c_empty,
        nodes_expanded: expanded,
        candidates_scored: scored,
        halt,
    })
}

/// [`repair_search`] restricted to repairs that repeat a single MMO.
pub fn focused_repair_search(
    space: &RepairSpace,
    model: &GroundedModel,
    plan: &Plan,
    tau: &Trajectory,
    cfg: &RepairSearchConfig,
    icfg: &InconsistencyConfig,
) -> Result<RepairOutcome, RepairError> {
    search(space, model, plan, tau, cfg, icfg, true)
}
