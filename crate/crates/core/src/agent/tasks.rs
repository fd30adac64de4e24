use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{holds, Condition, GroundedModel, ModelError, State};
use crate::pddl::{parse_condition, ParseError};
use crate::presets::{cartpole_domain, craft_domain};

/// A task: when it applies, which actions it may use, and what it achieves.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskDef {
    pub name: String,
    pub precondition: Condition<usize>,
    /// Action schemas the task may use; `None` keeps every action.
    pub actions: Option<Vec<String>>,
    pub goal: Condition<usize>,
}

impl TaskDef {
    /// The sub-model the planner sees for this task.
    pub fn domain(&self, model: &GroundedModel) -> GroundedModel {
        match &self.actions {
            Some(a) => model.restrict_actions(a),
            None => model.clone(),
        }
    }
}

/// Textual task definition, resolved with [`TaskSource::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSource {
    pub name: String,
    pub precondition: String,
    pub actions: Option<Vec<String>>,
    pub goal: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TaskError {
    #[error("task `{task}`: {source}")]
    Parse {
        task: String,
        #[source]
        source: ParseError,
    },
    #[error("task `{task}`: {source}")]
    Model {
        task: String,
        #[source]
        source: ModelError,
    },
}

impl TaskSource {
    fn new(name: &str, pre: &str, actions: Option<&[&str]>, goal: &str) -> Self {
        TaskSource {
            name: name.into(),
            precondition: pre.into(),
            actions: actions.map(|a| a.iter().map(|s| s.to_string()).collect()),
            goal: goal.into(),
        }
    }

    pub fn resolve(&self, domain: &crate::ir::DomainModel, model: &GroundedModel) -> Result<TaskDef, TaskError> {
        let cond = |text: &str| {
            let lifted = parse_condition(text, domain).map_err(|source| TaskError::Parse {
                task: self.name.clone(),
                source,
            })?;
            model.ground_condition(&lifted).map_err(|source| TaskError::Model {
                task: self.name.clone(),
                source,
            })
        };
        Ok(TaskDef {
            name: self.name.clone(),
            precondition: cond(&self.precondition)?,
            actions: self.actions.clone(),
            goal: cond(&self.goal)?,
        })
    }
}

const CRAFT_MOVES: [&str; 4] = ["move_north", "move_south", "move_east", "move_west"];

pub fn craft_task_sources() -> Vec<TaskSource> {
    let gather: Vec<&str> = CRAFT_MOVES
        .iter()
        .copied()
        .chain(["break_tree", "break_platinum", "break_diamond", "collect_sapling", "craft_pogostick"])
        .collect();
    let explore: Vec<&str> = CRAFT_MOVES.iter().copied().chain(["scan"]).collect();
    vec![
        TaskSource::new("craft-pogo", "()", Some(&gather), "(>= (pogosticks) 1)"),
        TaskSource::new("interact-traders", "()", Some(&[]), "(traded)"),
        TaskSource::new("explore", "(novelty_detected)", Some(&explore), "(explored)"),
        TaskSource::new("open-safe", "(novelty_detected)", Some(&CRAFT_MOVES), "(safe_open)"),
        TaskSource::new("mine-novel", "(novelty_detected)", Some(&CRAFT_MOVES), "(novel_mined)"),
    ]
}

/// The crafting suite bound to `model`.
pub fn craft_tasks(model: &GroundedModel) -> Vec<TaskDef> {
    let d = craft_domain();
    craft_task_sources()
        .iter()
        .map(|t| t.resolve(&d, model).expect("bundled task resolves"))
        .collect()
}

pub fn cartpole_tasks(model: &GroundedModel) -> Vec<TaskDef> {
    let d = cartpole_domain();
    vec![TaskSource::new("balance", "()", None, "(>= (elapsed_steps) 200)")
        .resolve(&d, model)
        .expect("bundled task resolves")]
}

/// Tasks whose precondition holds and whose goal does not.
pub fn relevant_tasks<'a>(tasks: &'a [TaskDef], s: &State) -> Vec<&'a TaskDef> {
    tasks
        .iter()
        .filter(|t| holds(s, &t.precondition).unwrap_or(false) && !holds(s, &t.goal).unwrap_or(false))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskOutcome {
    pub task: String,
    pub success: bool,
}

/// Picks `choose` when the last attempt was a failure of `after_failure`
/// (any outcome when `None`) and `choose` is relevant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRule {
    pub after_failure: Option<String>,
    pub choose: String,
}

/// Ordered rules; when none applies the first relevant task is chosen.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskRules {
    pub rules: Vec<TaskRule>,
}

impl TaskRules {
    pub fn craft() -> Self {
        let rule = |after: Option<&str>, choose: &str| TaskRule {
            after_failure: after.map(str::to_string),
            choose: choose.into(),
        };
        TaskRules {
            rules: vec![
                rule(Some("craft-pogo"), "explore"),
                rule(Some("interact-traders"), "explore"),
                rule(Some("explore"), "open-safe"),
                rule(Some("open-safe"), "mine-novel"),
                rule(None, "craft-pogo"),
                rule(None, "interact-traders"),
            ],
        }
    }
}

/// Applies `rules` to the relevant tasks; `None` when nothing is relevant.
pub fn select_task<'a>(relevant: &[&'a TaskDef], rules: &TaskRules, last: Option<&TaskOutcome>) -> Option<&'a TaskDef> {
    let failed = last.filter(|o| !o.success).map(|o| o.task.as_str());
    for r in &rules.rules {
        let applies = match &r.after_failure {
            Some(t) => failed == Some(t.as_str()),
            None => true,
        };
        if applies {
            if let Some(t) = relevant.iter().find(|t| t.name == r.choose) {
                return Some(t);
            }
        }
    }
    relevant.first().copied()
}
