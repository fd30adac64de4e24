//! Ground-truth environments the agent perceives only through fluent maps.

mod cartpole;
mod craft;
mod novelty;

pub use cartpole::{CartPoleEnv, CartPoleParams, Plane, MAX_STEPS as CARTPOLE_MAX_STEPS};
pub use craft::{CraftEnv, CraftMap, CraftParams};
pub use novelty::{NoveltySpec, Override};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ir::FluentId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObsValue {
    Bool(bool),
    Num(f64),
}

/// What the agent sees after a reset or step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Observation {
    pub fluents: BTreeMap<FluentId, ObsValue>,
    /// Detected entities as (type label, classifier confidence).
    pub entities: Vec<(String, f64)>,
    pub time: f64,
}

impl Observation {
    pub fn set_num(&mut self, name: &str, v: f64) {
        self.fluents.insert(name.parse().expect("fluent id"), ObsValue::Num(v));
    }

    pub fn set_bool(&mut self, name: &str, v: bool) {
        self.fluents.insert(name.parse().expect("fluent id"), ObsValue::Bool(v));
    }

    pub fn num(&self, name: &str) -> Option<f64> {
        match self.fluents.get(&name.parse().ok()?) {
            Some(ObsValue::Num(v)) => Some(*v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub terminal: bool,
    /// False when the action had no effect because it was inapplicable.
    pub applied: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("action `{0}` is not in the environment's vocabulary")]
    UnknownAction(String),
    #[error("episode is over")]
    Terminal,
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
}

pub trait Environment: Send {
    fn name(&self) -> &str;

    fn reset(&mut self, seed: u64) -> Observation;

    /// Applies one action (`None` lets time pass) and returns the outcome.
    fn step(&mut self, action: Option<&str>) -> Result<StepOutcome, EnvError>;

    fn action_vocabulary(&self) -> Vec<String>;

    /// Restores nominal parameters, then applies `spec` if `episode >= spec.episode`.
    fn configure_episode(&mut self, spec: Option<&NoveltySpec>, episode: usize) -> Result<(), EnvError>;

    /// Largest possible episode reward, used to normalize.
    fn reward_normalizer(&self) -> f64;
}

/// Applies `spec` to `env` for `episode_index`; before activation the
/// environment stays nominal.
pub fn inject_novelty(env: &mut dyn Environment, spec: &NoveltySpec, episode_index: usize) -> Result<(), EnvError> {
    env.configure_episode(Some(spec), episode_index)
}
