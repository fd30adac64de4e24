//! Model repair by best-first search over sequences of parameter nudges.

mod search;

pub use search::{focused_repair_search, repair_search, successor_mmos, HaltReason, RepairOutcome, RepairSearchConfig};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{FluentId, GroundedModel};
use crate::monitors::MonitorError;

/// Adds `delta` to the initial value of `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mmo {
    pub target: FluentId,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairParam {
    pub fluent: FluentId,
    pub nominal: f64,
    pub delta: f64,
}

/// The repairable fluents and their step sizes; each yields MMOs `+delta`
/// and `-delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairSpace {
    pub params: Vec<RepairParam>,
}

impl RepairSpace {
    fn from_rows(rows: &[(&str, f64, f64)]) -> Self {
        RepairSpace {
            params: rows
                .iter()
                .map(|&(f, nominal, delta)| RepairParam {
                    fluent: FluentId::nullary(f),
                    nominal,
                    delta,
                })
                .collect(),
        }
    }

    pub fn cartpole() -> Self {
        RepairSpace::from_rows(&[
            ("length_pole", 0.5, 0.1),
            ("mass_pole", 0.1, 0.1),
            ("mass_cart", 1.0, 1.0),
            ("force_mag", 10.0, 1.0),
            ("gravity", 9.81, 1.0),
            ("pole_angle_limit", 0.165, 0.01),
            ("push_force_left", 10.0, 1.0),
            ("push_force_right", 10.0, 1.0),
            ("push_force_fwd", 10.0, 1.0),
            ("push_force_back", 10.0, 1.0),
            ("pole_vel_scale_x", 1.0, 1.0),
            ("pole_vel_scale_y", 1.0, 1.0),
            ("cart_vel_scale_x", 1.0, 1.0),
            ("cart_vel_scale_y", 1.0, 1.0),
        ])
    }

    pub fn craft() -> Self {
        RepairSpace::from_rows(&[
            ("break_log", 2.0, 1.0),
            ("break_platinum", 1.0, 1.0),
            ("break_diamond", 9.0, 1.0),
            ("collect_saplings", 1.0, 1.0),
        ])
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "cartpole" => Some(RepairSpace::cartpole()),
            "craft" => Some(RepairSpace::craft()),
            _ => None,
        }
    }

    /// MMOs in search order: `+delta` then `-delta` for each parameter.
    pub fn mmos(&self) -> Vec<Mmo> {
        self.params
            .iter()
            .flat_map(|p| {
                [p.delta, -p.delta].map(|d| Mmo {
                    target: p.fluent.clone(),
                    delta: d,
                })
            })
            .collect()
    }

    pub fn check(&self, model: &GroundedModel) -> Result<(), RepairError> {
        if self.params.is_empty() {
            return Err(RepairError::EmptySpace);
        }
        for p in &self.params {
            if !(p.delta > 0.0 && p.delta.is_finite()) {
                return Err(RepairError::BadDelta(p.fluent.to_string()));
            }
            slot_of(model, &p.fluent)?;
        }
        Ok(())
    }
}

/// An ordered multiset of MMOs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Repair {
    pub mmos: Vec<Mmo>,
}

impl Repair {
    pub fn len(&self) -> usize {
        self.mmos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mmos.is_empty()
    }

    pub fn net_delta(&self) -> BTreeMap<FluentId, f64> {
        let mut counts: BTreeMap<(FluentId, u64), i64> = BTreeMap::new();
        for m in &self.mmos {
            *counts
                .entry((m.target.clone(), m.delta.abs().to_bits()))
                .or_insert(0) += m.delta.signum() as i64;
        }
        let mut out = BTreeMap::new();
        for ((f, bits), c) in counts {
            *out.entry(f).or_insert(0.0) += c as f64 * f64::from_bits(bits);
        }
        out
    }

    /// `repair:[f: d, ...]; resulting consistency: c` with one entry per
    /// parameter of `space`.
    pub fn log_line(&self, space: &RepairSpace, consistency: f64) -> String {
        let net = self.net_delta();
        let mut s = String::from("repair:[");
        for (i, p) in space.params.iter().enumerate() {
            if i > 0 {
                s.push_str(", ");
            }
            let d = net.get(&p.fluent).copied().unwrap_or(0.0);
            if d == 0.0 {
                let _ = write!(s, "{}: 0", p.fluent);
            } else {
                let _ = write!(s, "{}: {:?}", p.fluent, d);
            }
        }
        let _ = write!(s, "]; resulting consistency: {consistency}");
        s
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RepairError {
    #[error("repair space is empty")]
    EmptySpace,
    #[error("`{0}` is not a numeric model parameter")]
    NotRepairable(String),
    #[error("step size of `{0}` must be positive and finite")]
    BadDelta(String),
    #[error("search budgets must be positive and lambda nonnegative")]
    BadConfig,
    #[error(transparent)]
    Monitor(#[from] MonitorError),
}

fn slot_of(model: &GroundedModel, f: &FluentId) -> Result<usize, RepairError> {
    model
        .numeric_slot(f)
        .filter(|s| model.parameter_slots().contains(s))
        .ok_or_else(|| RepairError::NotRepairable(f.to_string()))
}

fn apply(model: &GroundedModel, repair: &Repair, sign: i64) -> Result<GroundedModel, RepairError> {
    let mut edits = model.edits().clone();
    for m in &repair.mmos {
        let slot = slot_of(model, &m.target)?;
        let key = (slot, m.delta.abs().to_bits());
        let c = edits.entry(key).or_insert(0);
        *c += sign * m.delta.signum() as i64;
        if *c == 0 {
            edits.remove(&key);
        }
    }
    let mut out = model.clone();
    out.set_edits(edits);
    Ok(out)
}

/// The model with every MMO of `repair` applied to its initial state.
pub fn do_repair(model: &GroundedModel, repair: &Repair) -> Result<GroundedModel, RepairError> {
    apply(model, repair, 1)
}

/// Inverse of [`do_repair`]; the result is bit-identical to the original.
pub fn undo_repair(model: &GroundedModel, repair: &Repair) -> Result<GroundedModel, RepairError> {
    apply(model, repair, -1)
}
