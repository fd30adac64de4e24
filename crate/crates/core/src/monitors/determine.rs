use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{MonitorSignal, UNKNOWN_ENTITY};

/// Per-monitor signal series, indexed by position (one entry per episode).
pub type SignalHistory = BTreeMap<String, Vec<MonitorSignal>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combination {
    AnyOf,
    AllOf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorRule {
    pub monitor: String,
    pub threshold: f64,
    /// Consecutive exceeding episodes required.
    pub window: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterminationRule {
    pub monitors: Vec<MonitorRule>,
    pub combination: Combination,
    /// Any unknown-entity firing is a detection by itself.
    pub short_circuit: bool,
}

impl DeterminationRule {
    pub fn single(monitor: &str, threshold: f64, window: usize) -> Self {
        DeterminationRule {
            monitors: vec![MonitorRule {
                monitor: monitor.into(),
                threshold,
                window: window.max(1),
            }],
            combination: Combination::AnyOf,
            short_circuit: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoveltyVerdict {
    pub fired: bool,
    /// Episode of the latest signal considered.
    pub episode: Option<usize>,
    pub reasons: Vec<String>,
}

fn trailing_run(series: &[MonitorSignal], threshold: f64) -> usize {
    series.iter().rev().take_while(|s| s.score >= threshold).count()
}

/// Verdict for the most recent episode in `history`.
pub fn determine(history: &SignalHistory, rule: &DeterminationRule) -> NoveltyVerdict {
    let episode = history
        .values()
        .filter_map(|s| s.last().map(|x| x.episode))
        .max();
    let mut reasons = Vec::new();
    if rule.short_circuit {
        if let Some(last) = history.get(UNKNOWN_ENTITY).and_then(|s| s.last()) {
            if last.fired {
                reasons.push(UNKNOWN_ENTITY.to_string());
            }
        }
    }
    let hits: Vec<bool> = rule
        .monitors
        .iter()
        .map(|m| {
            let run = history
                .get(&m.monitor)
                .map(|s| trailing_run(s, m.threshold))
                .unwrap_or(0);
            run >= m.window.max(1)
        })
        .collect();
    let combined = match rule.combination {
        Combination::AnyOf => hits.iter().any(|&h| h),
        Combination::AllOf => !hits.is_empty() && hits.iter().all(|&h| h),
    };
    if combined {
        for (m, &h) in rule.monitors.iter().zip(&hits) {
            if h {
                reasons.push(m.monitor.clone());
            }
        }
    }
    NoveltyVerdict {
        fired: !reasons.is_empty(),
        episode,
        reasons,
    }
}

/// First episode at which [`determine`] fires when replayed over growing
/// prefixes of `history`.
pub fn first_detection(history: &SignalHistory, rule: &DeterminationRule) -> Option<usize> {
    let len = history.values().map(Vec::len).max().unwrap_or(0);
    (1..=len).find_map(|n| {
        let prefix: SignalHistory = history
            .iter()
            .map(|(k, v)| (k.clone(), v[..n.min(v.len())].to_vec()))
            .collect();
        let v = determine(&prefix, rule);
        if v.fired {
            v.episode
        } else {
            None
        }
    })
}

/// Area under the ROC curve for separating `positives` from `negatives` by
/// score; ties count one half.
pub fn auc(negatives: &[f64], positives: &[f64]) -> f64 {
    if negatives.is_empty() || positives.is_empty() {
        return f64::NAN;
    }
    let mut wins = 0.0;
    for p in positives {
        for n in negatives {
            wins += match p.partial_cmp(n) {
                Some(std::cmp::Ordering::Greater) => 1.0,
                Some(std::cmp::Ordering::Equal) => 0.5,
                _ => 0.0,
            };
        }
    }
    wins / (negatives.len() * positives.len()) as f64
}
