use serde::{Deserialize, Serialize};

use super::MonitorError;
use crate::ir::{fluent_distance, DistanceSpec, GroundedModel, Plan, Trajectory};
use crate::sim::{simulate_lenient, SimConfig, SimError};

pub const INCONSISTENCY: &str = "inconsistency";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InconsistencyConfig {
    pub gamma: f64,
    pub c_th: f64,
    pub distance: DistanceSpec,
    /// Integration settings used to re-simulate the plan.
    pub sim: SimConfig,
}

impl InconsistencyConfig {
    pub fn new(distance: DistanceSpec, c_th: f64, sim: SimConfig) -> Self {
        InconsistencyConfig {
            gamma: 0.9,
            c_th,
            distance,
            sim,
        }
    }

    pub fn check(&self) -> Result<(), MonitorError> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(MonitorError::BadDiscount(self.gamma));
        }
        if self.c_th.is_nan() || self.c_th < 0.0 {
            return Err(MonitorError::BadThreshold(self.c_th));
        }
        Ok(())
    }
}

/// `(1/len) * sum_i gamma^i * d_i` over the available distances.
pub fn discounted_mean(distances: &[f64], len: usize, gamma: f64) -> f64 {
    let mut w = 1.0;
    let mut sum = 0.0;
    for d in distances {
        sum += w * d;
        w *= gamma;
    }
    sum / len as f64
}

/// What the model predicts for `plan`, started from the observed initial
/// state with the model's own parameter values, over the span of `tau`.
/// Simulation stops early at the first failure.
pub fn expected_trajectory(model: &GroundedModel, plan: &Plan, tau: &Trajectory, sim: &SimConfig) -> Result<(Trajectory, Option<SimError>), MonitorError> {
    let first = tau.states.first().ok_or(MonitorError::EmptyTrajectory)?;
    let last = tau.last().expect("nonempty");
    let s0 = model.rebase(first);
    let cfg = sim.with_horizon(last.time - first.time);
    Ok(simulate_lenient(model, &s0, plan, &cfg))
}

/// Discounted mean distance between the observed trajectory and the model's
/// prediction. States past the end of a failed simulation are not compared
/// but still count in the normalizer.
pub fn inconsistency_score(plan: &Plan, model: &GroundedModel, tau: &Trajectory, cfg: &InconsistencyConfig) -> Result<f64, MonitorError> {
    scored_simulation(plan, model, tau, cfg).map(|s| s.score)
}

/// A score together with how much of the observation it covers.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSimulation {
    pub score: f64,
    /// Number of observed states that had a predicted counterpart.
    pub compared: usize,
    /// Error that cut the simulation short, if any.
    pub error: Option<SimError>,
}

/// [`inconsistency_score`] with coverage and simulation details.
pub fn scored_simulation(plan: &Plan, model: &GroundedModel, tau: &Trajectory, cfg: &InconsistencyConfig) -> Result<ScoredSimulation, MonitorError> {
    cfg.check()?;
    let (expected, error) = expected_trajectory(model, plan, tau, &cfg.sim)?;
    let dist = cfg.distance.resolve(model)?;
    let d: Vec<f64> = tau
        .states
        .iter()
        .zip(&expected.states)
        .map(|(a, b)| fluent_distance(a, b, &dist))
        .collect();
    Ok(ScoredSimulation {
        score: discounted_mean(&d, tau.len(), cfg.gamma),
        compared: d.len(),
        error,
    })
}
