//! Discrete-time execution of a grounded model.
//!
//! One [`step`] applies, in order: the action's instantaneous effects, events
//! to a fixpoint, one explicit-Euler update of all active processes, the time
//! advance, and a single post-integration round of events.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{
    eval_expr, holds, Condition, Effect, EvalError, GroundedModel, HappeningKind, Plan, State,
    Trajectory,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub delta_t: f64,
    pub max_event_cascade: usize,
    /// Simulated seconds past the initial state that `simulate_plan` covers.
    pub horizon: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            delta_t: 0.02,
            max_event_cascade: 16,
            horizon: 4.0,
        }
    }
}

impl SimConfig {
    pub fn with_horizon(self, horizon: f64) -> Self {
        SimConfig { horizon, ..self }
    }

    /// Number of whole steps in `seconds`.
    pub fn steps_in(&self, seconds: f64) -> usize {
        (seconds / self.delta_t).round().max(0.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("precondition of `{action}` does not hold at t={time}")]
    PreconditionFailed { action: String, time: f64 },
    #[error("happening {0} is not an action")]
    NotAnAction(usize),
    #[error("events still firing after {0} cascade rounds")]
    CascadeOverflow(usize),
    #[error("conflicting instantaneous writes to `{0}`")]
    Conflict(String),
    #[error("fluent `{fluent}` became non-finite ({value})")]
    NonFinite { fluent: String, value: f64 },
    #[error("in `{happening}`: {source}")]
    Eval {
        happening: String,
        #[source]
        source: EvalError,
    },
}

impl SimError {
    /// Whether the error is an ordinary plan failure rather than a fault of
    /// the model itself.
    pub fn is_plan_failure(&self) -> bool {
        matches!(self, SimError::PreconditionFailed { .. })
    }
}

/// A failed simulation together with everything simulated before the failure.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{error} (after {} state(s))", partial.len())]
pub struct SimFailure {
    pub error: SimError,
    pub partial: Trajectory,
}

enum Write {
    Bool(usize, bool),
    Assign(usize, f64),
    Add(usize, f64),
}

fn eval_in(model: &GroundedModel, h: usize, s: &State, e: &crate::ir::Expr<usize>) -> Result<f64, SimError> {
    eval_expr(s, e).map_err(|source| SimError::Eval {
        happening: model.happening(h).name(),
        source,
    })
}

fn holds_in(model: &GroundedModel, h: usize, s: &State, c: &Condition<usize>) -> Result<bool, SimError> {
    holds(s, c).map_err(|source| SimError::Eval {
        happening: model.happening(h).name(),
        source,
    })
}

/// Applies the instantaneous effects of `happenings` simultaneously: every
/// right-hand side is evaluated in `s`.
fn apply_instant(model: &GroundedModel, s: &State, happenings: &[usize]) -> Result<State, SimError> {
    let mut writes: Vec<Write> = Vec::new();
    for &h in happenings {
        for e in &model.happening(h).effects {
            writes.push(match e {
                Effect::SetBool(slot, v) => Write::Bool(*slot, *v),
                Effect::Assign(slot, x) => Write::Assign(*slot, eval_in(model, h, s, x)?),
                Effect::Increase(slot, x) => Write::Add(*slot, eval_in(model, h, s, x)?),
                Effect::Decrease(slot, x) => Write::Add(*slot, -eval_in(model, h, s, x)?),
                Effect::Rate(..) => continue,
            });
        }
    }
    let mut next = s.clone();
    for (i, w) in writes.iter().enumerate() {
        for other in &writes[..i] {
            let clash = match (w, other) {
                (Write::Bool(a, x), Write::Bool(b, y)) => a == b && x != y,
                (Write::Assign(a, x), Write::Assign(b, y)) => a == b && x.to_bits() != y.to_bits(),
                (Write::Assign(a, _), Write::Add(b, _)) | (Write::Add(a, _), Write::Assign(b, _)) => a == b,
                _ => false,
            };
            if clash {
                let name = match w {
                    Write::Bool(slot, _) => model.bool_fluent_id(*slot),
                    Write::Assign(slot, _) | Write::Add(slot, _) => model.num_fluent_id(*slot),
                };
                return Err(SimError::Conflict(name.to_string()));
            }
        }
    }
    // Assignments first, then the summed increments on top of the pre-state.
    for w in &writes {
        match w {
            Write::Bool(slot, v) => next.bools[*slot] = *v,
            Write::Assign(slot, v) => next.nums[*slot] = *v,
            Write::Add(..) => {}
        }
    }
    let mut sums: Vec<(usize, f64)> = Vec::new();
    for w in &writes {
        if let Write::Add(slot, v) = w {
            match sums.iter_mut().find(|(s, _)| s == slot) {
                Some((_, acc)) => *acc += v,
                None => sums.push((*slot, *v)),
            }
        }
    }
    for (slot, d) in sums {
        next.nums[slot] = s.nums[slot] + d;
    }
    Ok(next)
}

fn enabled_events(model: &GroundedModel, s: &State) -> Result<Vec<usize>, SimError> {
    let mut out = Vec::new();
    for &e in model.events() {
        if holds_in(model, e, s, &model.happening(e).precondition)? {
            out.push(e);
        }
    }
    Ok(out)
}

fn cascade(model: &GroundedModel, mut s: State, cfg: &SimConfig) -> Result<State, SimError> {
    for _ in 0..cfg.max_event_cascade {
        let fired = enabled_events(model, &s)?;
        if fired.is_empty() {
            return Ok(s);
        }
        s = apply_instant(model, &s, &fired)?;
    }
    if enabled_events(model, &s)?.is_empty() {
        Ok(s)
    } else {
        Err(SimError::CascadeOverflow(cfg.max_event_cascade))
    }
}

fn integrate(model: &GroundedModel, s: &State, dt: f64) -> Result<State, SimError> {
    let mut rates: Vec<(usize, f64)> = Vec::new();
    for &p in model.processes() {
        let h = model.happening(p);
        if !holds_in(model, p, s, &h.precondition)? {
            continue;
        }
        for e in &h.effects {
            if let Effect::Rate(slot, x) = e {
                let r = eval_in(model, p, s, x)?;
                match rates.iter_mut().find(|(s, _)| s == slot) {
                    Some((_, acc)) => *acc += r,
                    None => rates.push((*slot, 0.0 + r)),
                }
            }
        }
    }
    let mut next = s.clone();
    for (slot, rate) in rates {
        next.nums[slot] = s.nums[slot] + dt * rate;
    }
    Ok(next)
}

/// Advances `s` by one `delta_t`, optionally applying `action` first.
pub fn step(model: &GroundedModel, s: &State, action: Option<usize>, cfg: &SimConfig) -> Result<State, SimError> {
    let mut cur = match action {
        Some(a) => {
            let h = model.happening(a);
            if h.kind != HappeningKind::Action {
                return Err(SimError::NotAnAction(a));
            }
            if !holds_in(model, a, s, &h.precondition)? {
                return Err(SimError::PreconditionFailed {
                    action: h.name(),
                    time: s.time,
                });
            }
            apply_instant(model, s, &[a])?
        }
        None => s.clone(),
    };
    cur = cascade(model, cur, cfg)?;
    cur = integrate(model, &cur, cfg.delta_t)?;
    cur.time = s.time + cfg.delta_t;
    let fired = enabled_events(model, &cur)?;
    if !fired.is_empty() {
        cur = apply_instant(model, &cur, &fired)?;
    }
    if let Some((slot, value)) = cur.first_non_finite() {
        return Err(SimError::NonFinite {
            fluent: model.num_fluent_id(slot).to_string(),
            value,
        });
    }
    Ok(cur)
}

/// Executes `plan` from `s0`: each action runs at step `round((t - t0)/dt)`
/// (or the next free step), with time passing in between and afterwards
/// until `horizon` seconds after `s0`.
pub fn simulate_plan(model: &GroundedModel, s0: &State, plan: &Plan, cfg: &SimConfig) -> Result<Trajectory, SimFailure> {
    let mut traj = Trajectory::from_initial(s0.clone());
    let mut k = 0usize;
    let advance = |traj: &mut Trajectory, action: Option<usize>| -> Result<(), SimFailure> {
        let cur = traj.last().expect("nonempty");
        match step(model, cur, action, cfg) {
            Ok(next) => {
                traj.push(action, next);
                Ok(())
            }
            Err(error) => Err(SimFailure {
                error,
                partial: traj.clone(),
            }),
        }
    };
    for ps in &plan.steps {
        let target = cfg.steps_in(ps.time - s0.time).max(k);
        while k < target {
            advance(&mut traj, None)?;
            k += 1;
        }
        advance(&mut traj, Some(ps.action))?;
        k += 1;
    }
    let end = cfg.steps_in(cfg.horizon);
    while k < end {
        advance(&mut traj, None)?;
        k += 1;
    }
    Ok(traj)
}

/// Like [`simulate_plan`] but stops at the first failure without error,
/// returning the partial trajectory and the error.
pub fn simulate_lenient(model: &GroundedModel, s0: &State, plan: &Plan, cfg: &SimConfig) -> (Trajectory, Option<SimError>) {
    match simulate_plan(model, s0, plan, cfg) {
        Ok(t) => (t, None),
        Err(f) => (f.partial, Some(f.error)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub reaches_goal: bool,
    pub trajectory: Trajectory,
}

pub fn validate(model: &GroundedModel, s0: &State, plan: &Plan, goal: &Condition<usize>, cfg: &SimConfig) -> Result<Validation, SimFailure> {
    let trajectory = simulate_plan(model, s0, plan, cfg)?;
    let last = trajectory.last().expect("nonempty");
    let reaches_goal = holds(last, goal).map_err(|source| SimFailure {
        error: SimError::Eval {
            happening: "goal".into(),
            source,
        },
        partial: trajectory.clone(),
    })?;
    Ok(Validation {
        reaches_goal,
        trajectory,
    })
}
