use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::MonitorError;
use crate::ir::{GroundedModel, State};

pub const REWARD_DIVERGENCE: &str = "reward_divergence";

/// Turns a (state, action) pair into a flat feature vector.
pub trait FeatureMap: Send + Sync {
    fn name(&self) -> &str;
    fn features(&self, model: &GroundedModel, state: &State, action: Option<usize>) -> Vec<f64>;
}

/// Every numeric fluent, every boolean as 0/1, and a one-hot action code
/// whose last slot stands for "no action".
pub struct StateActionFeatures;

impl FeatureMap for StateActionFeatures {
    fn name(&self) -> &str {
        "state_action"
    }

    fn features(&self, model: &GroundedModel, state: &State, action: Option<usize>) -> Vec<f64> {
        let mut f = state.nums.clone();
        f.extend(state.bools.iter().map(|&b| if b { 1.0 } else { 0.0 }));
        let acts = model.actions();
        let mut onehot = vec![0.0; acts.len() + 1];
        let idx = action
            .and_then(|a| acts.iter().position(|&x| x == a))
            .unwrap_or(acts.len());
        onehot[idx] = 1.0;
        f.extend(onehot);
        f
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardSample {
    pub features: Vec<f64>,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub ridge: f64,
    pub feature_map: String,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            ridge: 1e-6,
            feature_map: "state_action".into(),
        }
    }
}

/// Ridge regression on standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardEstimator {
    pub feature_map: String,
    pub fingerprint: u64,
    pub train_rmse: f64,
    mean: Vec<f64>,
    scale: Vec<f64>,
    weights: Vec<f64>,
    intercept: f64,
}

impl RewardEstimator {
    pub fn predict(&self, features: &[f64]) -> f64 {
        let mut y = self.intercept;
        for (j, x) in features.iter().enumerate().take(self.weights.len()) {
            if self.scale[j] > 0.0 {
                y += self.weights[j] * (x - self.mean[j]) / self.scale[j];
            }
        }
        y
    }

    pub fn rmse(&self, data: &[RewardSample]) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let se: f64 = data
            .iter()
            .map(|s| (self.predict(&s.features) - s.reward).powi(2))
            .sum();
        (se / data.len() as f64).sqrt()
    }
}

fn fingerprint(data: &[RewardSample]) -> u64 {
    let mut h = DefaultHasher::new();
    for s in data {
        for x in &s.features {
            x.to_bits().hash(&mut h);
        }
        s.reward.to_bits().hash(&mut h);
    }
    h.finish()
}

/// Fits the reward predictor by minimizing squared error plus a small ridge
/// penalty. Constant feature columns are ignored.
pub fn fit_estimator(data: &[RewardSample], cfg: &EstimatorConfig) -> Result<RewardEstimator, MonitorError> {
    let n = data.len();
    if n == 0 {
        return Err(MonitorError::NoData);
    }
    let p = data[0].features.len();
    if data.iter().any(|s| s.features.len() != p) {
        return Err(MonitorError::Ragged);
    }
    let mut mean = vec![0.0; p];
    for s in data {
        for (m, x) in mean.iter_mut().zip(&s.features) {
            *m += x / n as f64;
        }
    }
    let mut scale = vec![0.0; p];
    for s in data {
        for j in 0..p {
            scale[j] += (s.features[j] - mean[j]).powi(2) / n as f64;
        }
    }
    for v in &mut scale {
        *v = if *v > 1e-24 { v.sqrt() } else { 0.0 };
    }
    let live: Vec<usize> = (0..p).filter(|&j| scale[j] > 0.0).collect();
    let y_mean = data.iter().map(|s| s.reward).sum::<f64>() / n as f64;
    let mut weights = vec![0.0; p];
    let constant_target = data.iter().all(|s| s.reward == data[0].reward);
    if live.is_empty() && !constant_target {
        return Err(MonitorError::Degenerate);
    }
    if !live.is_empty() {
        let x = DMatrix::from_fn(n, live.len(), |i, k| {
            let j = live[k];
            (data[i].features[j] - mean[j]) / scale[j]
        });
        let y = DVector::from_iterator(n, data.iter().map(|s| s.reward - y_mean));
        let mut a = x.transpose() * &x;
        for k in 0..live.len() {
            a[(k, k)] += cfg.ridge * n as f64;
        }
        let b = x.transpose() * y;
        let w = match a.clone().cholesky() {
            Some(c) => c.solve(&b),
            None => a
                .svd(true, true)
                .solve(&b, 1e-12)
                .map_err(|_| MonitorError::Degenerate)?,
        };
        for (k, &j) in live.iter().enumerate() {
            weights[j] = w[k];
        }
    }
    let mut est = RewardEstimator {
        feature_map: cfg.feature_map.clone(),
        fingerprint: fingerprint(data),
        train_rmse: 0.0,
        mean,
        scale,
        weights,
        intercept: y_mean,
    };
    est.train_rmse = est.rmse(data);
    Ok(est)
}

/// Absolute error between predicted and observed reward.
pub fn reward_divergence(est: &RewardEstimator, features: &[f64], reward: f64) -> f64 {
    (est.predict(features) - reward).abs()
}
