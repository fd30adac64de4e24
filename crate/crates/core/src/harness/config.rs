use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{AgentConfig, BackgroundFacts};
use crate::env::NoveltySpec;
use crate::monitors::{DeterminationRule, InconsistencyConfig};
use crate::planner::PlannerConfig;
use crate::presets::{cartpole_pose_distance, craft_inventory_distance};
use crate::repair::{RepairSearchConfig, RepairSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgentVariant {
    #[serde(rename = "planning-static")]
    PlanningStatic,
    #[serde(rename = "planning-adaptive")]
    PlanningAdaptive,
}

impl fmt::Display for AgentVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgentVariant::PlanningStatic => "planning-static",
            AgentVariant::PlanningAdaptive => "planning-adaptive",
        })
    }
}

impl FromStr for AgentVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "planning-static" => Ok(AgentVariant::PlanningStatic),
            "planning-adaptive" => Ok(AgentVariant::PlanningAdaptive),
            other => Err(format!("unknown agent variant `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvName {
    Cartpole,
    Craft,
}

impl FromStr for EnvName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cartpole" => Ok(EnvName::Cartpole),
            "craft" => Ok(EnvName::Craft),
            other => Err(format!("unknown environment `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorSettings {
    pub gamma: f64,
    pub c_th: Option<f64>,
    /// Consecutive exceeding episodes before the inconsistency monitor
    /// counts as a detection.
    pub window: usize,
    pub short_circuit: bool,
    pub entity_confidence: f64,
}

impl Default for MonitorSettings {
    fn default() -> Self {
        MonitorSettings {
            gamma: 0.9,
            c_th: None,
            window: 1,
            short_circuit: true,
            entity_confidence: 0.65,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RepairSettings {
    pub focused: bool,
    pub lambda: Option<f64>,
    pub node_budget: usize,
    pub max_repair_length: usize,
    /// Custom repair space; the environment's preset when absent.
    pub space: Option<RepairSpace>,
}

impl Default for RepairSettings {
    fn default() -> Self {
        RepairSettings {
            focused: true,
            lambda: None,
            node_budget: 10_000,
            max_repair_length: 20,
            space: None,
        }
    }
}

/// One experiment: `trials` runs of `episodes` episodes each, with the
/// novelty active from episode index `novelty_episode` (0-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvName,
    /// Preset name, or `custom` with `overrides`.
    pub novelty: String,
    #[serde(default)]
    pub overrides: Vec<crate::env::Override>,
    pub episodes: usize,
    pub novelty_episode: usize,
    pub trials: usize,
    pub agent: AgentVariant,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub jobs: usize,
    #[serde(default)]
    pub out: Option<String>,
    /// Half-width of the cart-pole's uniform reset noise.
    #[serde(default = "default_noise")]
    pub init_noise: f64,
    #[serde(default)]
    pub monitor: MonitorSettings,
    #[serde(default)]
    pub repair: RepairSettings,
}

fn default_noise() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(String),
    #[error("bad config: {0}")]
    Syntax(String),
    #[error("unknown novelty `{0}`")]
    UnknownNovelty(String),
    #[error("novelty episode must lie in 1..=episodes (got {k} of {n})")]
    NoveltyEpisode { k: usize, n: usize },
    #[error("at least one trial and one episode are required")]
    Empty,
    #[error("{0}")]
    Invalid(String),
}

impl ExperimentConfig {
    pub fn cartpole_mass(trials: usize, episodes: usize, variant: AgentVariant) -> Self {
        ExperimentConfig {
            env: EnvName::Cartpole,
            novelty: "mass_cart_x10".into(),
            overrides: Vec::new(),
            episodes,
            novelty_episode: 8,
            trials,
            agent: variant,
            seed: 0,
            jobs: 0,
            out: None,
            init_noise: default_noise(),
            monitor: MonitorSettings {
                c_th: Some(0.009),
                ..Default::default()
            },
            repair: RepairSettings::default(),
        }
    }

    pub fn craft_logs(trials: usize, episodes: usize, variant: AgentVariant) -> Self {
        ExperimentConfig {
            env: EnvName::Craft,
            novelty: "logs_x5".into(),
            novelty_episode: 1,
            monitor: MonitorSettings {
                c_th: Some(2.0),
                ..Default::default()
            },
            ..ExperimentConfig::cartpole_mass(trials, episodes, variant)
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.trials == 0 || self.episodes == 0 {
            return Err(ConfigError::Empty);
        }
        if self.novelty_episode < 1 || self.novelty_episode > self.episodes {
            return Err(ConfigError::NoveltyEpisode {
                k: self.novelty_episode,
                n: self.episodes,
            });
        }
        self.novelty_spec()?;
        if !(self.monitor.gamma > 0.0 && self.monitor.gamma < 1.0) {
            return Err(ConfigError::Invalid("gamma must lie in (0, 1)".into()));
        }
        if self.monitor.c_th.is_some_and(|c| c.is_nan() || c < 0.0) {
            return Err(ConfigError::Invalid("c_th must be nonnegative".into()));
        }
        if self.repair.node_budget == 0 || self.repair.max_repair_length == 0 {
            return Err(ConfigError::Invalid("repair budgets must be positive".into()));
        }
        Ok(())
    }

    pub fn novelty_spec(&self) -> Result<NoveltySpec, ConfigError> {
        if self.novelty == "custom" {
            return Ok(NoveltySpec {
                name: "custom".into(),
                episode: self.novelty_episode,
                overrides: self.overrides.clone(),
            });
        }
        NoveltySpec::preset(&self.novelty, self.novelty_episode).ok_or_else(|| ConfigError::UnknownNovelty(self.novelty.clone()))
    }

    pub fn c_th(&self) -> f64 {
        self.monitor.c_th.unwrap_or(match self.env {
            EnvName::Cartpole => 0.009,
            EnvName::Craft => 2.0,
        })
    }

    /// The agent configuration this experiment implies.
    pub fn agent_config(&self) -> AgentConfig {
        let c_th = self.c_th();
        let (planner, prefix, distance, known, space) = match self.env {
            EnvName::Cartpole => (
                PlannerConfig::cartpole(),
                Some(10),
                cartpole_pose_distance(),
                ["cart", "pole"].as_slice(),
                RepairSpace::cartpole(),
            ),
            EnvName::Craft => (
                PlannerConfig::craft(),
                None,
                craft_inventory_distance(),
                ["tree", "platinum_ore", "diamond_ore", "sapling_bush", "crafting_table"].as_slice(),
                RepairSpace::craft(),
            ),
        };
        let mut inconsistency = InconsistencyConfig::new(distance, c_th, planner.sim);
        inconsistency.gamma = self.monitor.gamma;
        let mut determination = DeterminationRule::single(crate::monitors::INCONSISTENCY, c_th, self.monitor.window);
        determination.short_circuit = self.monitor.short_circuit;
        AgentConfig {
            planner,
            execute_prefix: prefix,
            step_tolerance: None,
            inconsistency,
            known_entities: known.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>(),
            entity_confidence: self.monitor.entity_confidence,
            determination,
            repair_space: self.repair.space.clone().unwrap_or(space),
            repair: RepairSearchConfig {
                c_th,
                lambda: self.repair.lambda,
                node_budget: self.repair.node_budget,
                max_repair_length: self.repair.max_repair_length,
                focused: self.repair.focused,
            },
            adaptive: self.agent == AgentVariant::PlanningAdaptive,
        }
    }

    pub fn background(&self) -> BackgroundFacts {
        match self.env {
            EnvName::Cartpole => BackgroundFacts::default()
                .with_bool("ready", true)
                .with_num("force_x", 0.0)
                .with_num("force_y", 0.0)
                .with_copy("tick_time", "elapsed_time"),
            EnvName::Craft => BackgroundFacts::default(),
        }
    }
}
