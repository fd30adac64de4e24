//! The perceive-decide-act loop: state inference, task selection, planning,
//! monitored execution and between-episode repair.

mod infer;
mod run;
mod tasks;

pub use infer::{infer_state, strip_unknown, BackgroundFacts, InferError};
pub use run::{repair_config, run_episode, Agent, AgentConfig, AgentError, EpisodeOutcome, EpisodeRecord, RepairRecord, RewardMonitor};
pub use tasks::{
    cartpole_tasks, craft_task_sources, craft_tasks, relevant_tasks, select_task, TaskDef, TaskError, TaskOutcome,
    TaskRule, TaskRules, TaskSource,
};
