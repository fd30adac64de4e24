//! Novelty monitors and the determination rule that aggregates them.

mod determine;
mod entity;
mod inconsistency;
mod reward;

pub use determine::{auc, determine, first_detection, Combination, DeterminationRule, MonitorRule, NoveltyVerdict, SignalHistory};
pub use entity::{unknown_entity_check, UNKNOWN_ENTITY};
pub use inconsistency::{discounted_mean, expected_trajectory, inconsistency_score, scored_simulation, InconsistencyConfig, ScoredSimulation, INCONSISTENCY};
pub use reward::{fit_estimator, reward_divergence, EstimatorConfig, FeatureMap, RewardEstimator, RewardSample, StateActionFeatures, REWARD_DIVERGENCE};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::ModelError;

/// One monitor's output for one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorSignal {
    pub monitor: String,
    pub episode: usize,
    pub score: f64,
    pub fired: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonitorError {
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("discount must lie in (0, 1), got {0}")]
    BadDiscount(f64),
    #[error("threshold must be nonnegative, got {0}")]
    BadThreshold(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no training data")]
    NoData,
    #[error("feature vectors have inconsistent lengths")]
    Ragged,
    #[error("every feature column is constant")]
    Degenerate,
}
