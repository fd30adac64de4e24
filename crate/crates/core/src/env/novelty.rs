use serde::{Deserialize, Serialize};

/// One change to the ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Override {
    Set { param: String, value: f64 },
    Scale { param: String, factor: f64 },
    /// An object type the agent has never seen appears in observations.
    NewEntity { label: String },
}

/// A persistent novelty active from episode `episode` (0-based) onwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoveltySpec {
    pub name: String,
    pub episode: usize,
    pub overrides: Vec<Override>,
}

impl NoveltySpec {
    pub fn active(&self, episode: usize) -> bool {
        episode >= self.episode
    }

    pub fn new_entities(&self) -> impl Iterator<Item = &str> {
        self.overrides.iter().filter_map(|o| match o {
            Override::NewEntity { label } => Some(label.as_str()),
            _ => None,
        })
    }

    /// Named presets; `episode` is the activation episode.
    pub fn preset(name: &str, episode: usize) -> Option<NoveltySpec> {
        let overrides = match name {
            "none" => vec![],
            "mass_cart_x10" => vec![Override::Scale {
                param: "mass_cart".into(),
                factor: 10.0,
            }],
            "gravity_neg40" => vec![Override::Set {
                param: "gravity".into(),
                value: -40.0,
            }],
            "pole_length_x2" => vec![Override::Scale {
                param: "length_pole".into(),
                factor: 2.0,
            }],
            "mass_cart_and_pole" => vec![
                Override::Scale {
                    param: "mass_cart".into(),
                    factor: 10.0,
                },
                Override::Set {
                    param: "length_pole".into(),
                    value: 0.8,
                },
            ],
            "logs_x5" => vec![Override::Scale {
                param: "break_log".into(),
                factor: 5.0,
            }],
            "reward_x1_5" => vec![Override::Scale {
                param: "reward_scale".into(),
                factor: 1.5,
            }],
            "unknown_entity" => vec![Override::NewEntity {
                label: "rival_pogoist".into(),
            }],
            _ => return None,
        };
        Some(NoveltySpec {
            name: name.to_string(),
            episode,
            overrides,
        })
    }
}
