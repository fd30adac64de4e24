use thiserror::Error;

use crate::env::{ObsValue, Observation};
use crate::ir::{FluentId, FluentKind, GroundedModel, State};

/// A-priori facts merged into every inferred state, plus copy rules that
/// derive one numeric fluent from another after merging.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BackgroundFacts {
    pub facts: Vec<(FluentId, ObsValue)>,
    /// `(target, source)`: after filling, `target := source`.
    pub copies: Vec<(FluentId, FluentId)>,
}

impl BackgroundFacts {
    pub fn with_bool(mut self, name: &str, v: bool) -> Self {
        self.facts.push((name.parse().expect("fluent id"), ObsValue::Bool(v)));
        self
    }

    pub fn with_num(mut self, name: &str, v: f64) -> Self {
        self.facts.push((name.parse().expect("fluent id"), ObsValue::Num(v)));
        self
    }

    pub fn with_copy(mut self, target: &str, source: &str) -> Self {
        self.copies
            .push((target.parse().expect("fluent id"), source.parse().expect("fluent id")));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferError {
    #[error("observation contains fluents unknown to the model: {}", .0.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(", "))]
    UnknownFluents(Vec<FluentId>),
    #[error("`{0}` has the wrong kind")]
    KindMismatch(FluentId),
}

fn write(state: &mut State, model: &GroundedModel, id: &FluentId, v: ObsValue) -> Result<bool, InferError> {
    let Some(info) = model.fluent(id) else {
        return Ok(false);
    };
    match (&info.kind, v) {
        (FluentKind::Boolean, ObsValue::Bool(b)) => state.bools[info.slot] = b,
        (FluentKind::Numeric, ObsValue::Num(x)) => state.nums[info.slot] = x,
        _ => return Err(InferError::KindMismatch(id.clone())),
    }
    Ok(true)
}

/// Builds a total state: observation values win over background facts, which
/// win over the model's initial values. Copy rules run last.
pub fn infer_state(obs: &Observation, background: &BackgroundFacts, model: &GroundedModel) -> Result<State, InferError> {
    let unknown: Vec<FluentId> = obs
        .fluents
        .keys()
        .filter(|id| model.fluent(id).is_none())
        .cloned()
        .collect();
    if !unknown.is_empty() {
        return Err(InferError::UnknownFluents(unknown));
    }
    let mut s = model.initial_state().clone();
    s.time = obs.time;
    for (id, v) in &background.facts {
        if !obs.fluents.contains_key(id) {
            write(&mut s, model, id, *v)?;
        }
    }
    for (id, v) in &obs.fluents {
        write(&mut s, model, id, *v)?;
    }
    for (target, source) in &background.copies {
        let (Some(t), Some(src)) = (model.numeric_slot(target), model.numeric_slot(source)) else {
            return Err(InferError::KindMismatch(target.clone()));
        };
        s.nums[t] = s.nums[src];
    }
    Ok(s)
}

/// Drops observed fluents the model does not know, returning them.
pub fn strip_unknown(obs: &mut Observation, model: &GroundedModel) -> Vec<FluentId> {
    let unknown: Vec<FluentId> = obs
        .fluents
        .keys()
        .filter(|id| model.fluent(id).is_none())
        .cloned()
        .collect();
    for id in &unknown {
        obs.fluents.remove(id);
    }
    unknown
}
