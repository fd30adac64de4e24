use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{BinOp, Condition, EvalError, Expr, FluentId, FluentKind, GroundedModel, Literal, ModelError};

/// Dense assignment over a grounded model's fluent table plus simulated time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct State {
    pub bools: Vec<bool>,
    pub nums: Vec<f64>,
    pub time: f64,
}

impl State {
    pub fn new(bools: Vec<bool>, nums: Vec<f64>, time: f64) -> Self {
        State { bools, nums, time }
    }

    /// Equality on bit patterns, so `-0.0 != 0.0` and NaN equals itself.
    pub fn bitwise_eq(&self, other: &State) -> bool {
        self.bools == other.bools
            && self.time.to_bits() == other.time.to_bits()
            && self.nums.len() == other.nums.len()
            && self
                .nums
                .iter()
                .zip(&other.nums)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    pub fn first_non_finite(&self) -> Option<(usize, f64)> {
        self.nums
            .iter()
            .copied()
            .enumerate()
            .find(|(_, v)| !v.is_finite())
    }

    /// Fluent map keyed by display form; booleans as JSON bools.
    pub fn to_fluent_map(&self, model: &GroundedModel) -> BTreeMap<String, Value> {
        let mut out = BTreeMap::new();
        for f in model.fluents() {
            let v = match f.kind {
                FluentKind::Boolean => Value::Bool(self.bools[f.slot]),
                FluentKind::Numeric => serde_json::Number::from_f64(self.nums[f.slot])
                    .map(Value::Number)
                    .unwrap_or(Value::Null),
            };
            out.insert(f.id.to_string(), v);
        }
        out
    }

    /// Inverse of [`to_fluent_map`](Self::to_fluent_map); every model fluent
    /// must be present.
    pub fn from_fluent_map(
        model: &GroundedModel,
        map: &BTreeMap<String, Value>,
        time: f64,
    ) -> Result<State, ModelError> {
        let mut state = State::new(vec![false; model.num_bools()], vec![0.0; model.num_nums()], time);
        let mut seen = 0;
        for (key, value) in map {
            let id: FluentId = key
                .parse()
                .map_err(|_| ModelError::UnknownFluent(key.clone()))?;
            let info = model
                .fluent(&id)
                .ok_or_else(|| ModelError::UnknownFluent(key.clone()))?;
            match (&info.kind, value) {
                (FluentKind::Boolean, Value::Bool(b)) => state.bools[info.slot] = *b,
                (FluentKind::Boolean, Value::Number(n)) => {
                    state.bools[info.slot] = n.as_f64().is_some_and(|x| x != 0.0)
                }
                (FluentKind::Numeric, Value::Number(n)) => {
                    state.nums[info.slot] = n.as_f64().unwrap_or(f64::NAN)
                }
                _ => return Err(ModelError::KindMismatch(key.clone())),
            }
            seen += 1;
        }
        if seen != model.fluents().len() {
            let missing = model
                .fluents()
                .iter()
                .find(|f| !map.contains_key(&f.id.to_string()))
                .map(|f| f.id.to_string())
                .unwrap_or_default();
            return Err(ModelError::Uninitialized(missing));
        }
        Ok(state)
    }
}

pub fn eval_expr(state: &State, expr: &Expr<usize>) -> Result<f64, EvalError> {
    let v = eval_raw(state, expr)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite(v))
    }
}

fn eval_raw(state: &State, expr: &Expr<usize>) -> Result<f64, EvalError> {
    Ok(match expr {
        Expr::Const(c) => *c,
        Expr::Fluent(slot) => *state.nums.get(*slot).ok_or(EvalError::UnknownFluent(*slot))?,
        Expr::Neg(e) => -eval_raw(state, e)?,
        Expr::Func(f, e) => f.apply(eval_raw(state, e)?),
        Expr::Bin(op, a, b) => {
            let a = eval_raw(state, a)?;
            let b = eval_raw(state, b)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    a / b
                }
            }
        }
        Expr::TimeDelta => return Err(EvalError::TimeMarker),
    })
}

pub fn holds(state: &State, cond: &Condition<usize>) -> Result<bool, EvalError> {
    for lit in &cond.literals {
        let ok = match lit {
            Literal::Atom { fluent, positive } => {
                *state.bools.get(*fluent).ok_or(EvalError::UnknownFluent(*fluent))? == *positive
            }
            Literal::Compare { op, lhs, rhs } => op.test(eval_expr(state, lhs)?, eval_expr(state, rhs)?),
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Which fluents a distance looks at, with optional weights (default 1).
///
/// Booleans contribute 0 or 1 per mismatch before weighting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSpec {
    pub fluents: Vec<FluentId>,
    #[serde(default)]
    pub weights: BTreeMap<FluentId, f64>,
}

impl DistanceSpec {
    pub fn unweighted(fluents: &[&str]) -> Self {
        DistanceSpec {
            fluents: fluents.iter().map(|f| f.parse().expect("fluent id")).collect(),
            weights: BTreeMap::new(),
        }
    }

    pub fn with_weight(mut self, fluent: &str, weight: f64) -> Self {
        self.weights.insert(fluent.parse().expect("fluent id"), weight);
        self
    }

    pub fn resolve(&self, model: &GroundedModel) -> Result<ResolvedDistance, ModelError> {
        let mut out = ResolvedDistance::default();
        for id in &self.fluents {
            let info = model
                .fluent(id)
                .ok_or_else(|| ModelError::UnknownFluent(id.to_string()))?;
            let w = self.weights.get(id).copied().unwrap_or(1.0);
            match info.kind {
                FluentKind::Boolean => out.bools.push((info.slot, w)),
                FluentKind::Numeric => out.nums.push((info.slot, w)),
            }
        }
        Ok(out)
    }
}

/// A [`DistanceSpec`] bound to slots of one model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResolvedDistance {
    pub bools: Vec<(usize, f64)>,
    pub nums: Vec<(usize, f64)>,
}

/// Weighted Euclidean distance `sqrt(sum w * (a - b)^2)` over the selected fluents.
pub fn fluent_distance(a: &State, b: &State, spec: &ResolvedDistance) -> f64 {
    let mut sum = 0.0;
    for &(slot, w) in &spec.nums {
        let d = a.nums[slot] - b.nums[slot];
        sum += w * d * d;
    }
    for &(slot, w) in &spec.bools {
        if a.bools[slot] != b.bools[slot] {
            sum += w;
        }
    }
    sum.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanStep {
    pub time: f64,
    /// Index into [`GroundedModel::happenings`].
    pub action: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PlanFileError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown action `{name}`")]
    UnknownAction { line: usize, name: String },
    #[error("line {line}: timestamps must be nondecreasing")]
    Order { line: usize },
}

impl Plan {
    pub fn new(steps: Vec<PlanStep>) -> Self {
        Plan { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn is_time_ordered(&self) -> bool {
        self.steps.windows(2).all(|w| w[0].time <= w[1].time)
    }

    /// One `t=<seconds> <action> <args>` line per step.
    pub fn to_text(&self, model: &GroundedModel) -> String {
        let mut out = String::new();
        for s in &self.steps {
            let _ = writeln!(out, "t={} {}", s.time, model.happening(s.action).name());
        }
        out
    }

    pub fn parse(text: &str, model: &GroundedModel) -> Result<Plan, PlanFileError> {
        let mut steps: Vec<PlanStep> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split(';').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (t, rest) = line.split_once(char::is_whitespace).ok_or(PlanFileError::Syntax {
                line: line_no,
                message: "expected `t=<seconds> <action>`".into(),
            })?;
            let time: f64 = t
                .strip_prefix("t=")
                .and_then(|v| v.parse().ok())
                .filter(|v: &f64| v.is_finite() && *v >= 0.0)
                .ok_or_else(|| PlanFileError::Syntax {
                    line: line_no,
                    message: format!("bad timestamp `{t}`"),
                })?;
            let name = rest.trim().trim_start_matches('(').trim_end_matches(')').trim();
            let action = model
                .find_action_by_name(name)
                .ok_or_else(|| PlanFileError::UnknownAction {
                    line: line_no,
                    name: name.to_string(),
                })?;
            if steps.last().is_some_and(|p| p.time > time) {
                return Err(PlanFileError::Order { line: line_no });
            }
            steps.push(PlanStep { time, action });
        }
        Ok(Plan { steps })
    }
}

/// One `<s_i, a_i, s_{i+1}>` triple; `action == None` is a pure time-pass.
#[derive(Debug, Clone, Copy)]
pub struct Transition<'a> {
    pub from: &'a State,
    pub action: Option<usize>,
    pub to: &'a State,
}

/// A chained state sequence: `actions[i]` leads from `states[i]` to
/// `states[i + 1]`. `|τ|` is the number of states.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub actions: Vec<Option<usize>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryLine {
    t: f64,
    #[serde(default)]
    action: Option<String>,
    fluents: BTreeMap<String, Value>,
}

impl Trajectory {
    pub fn from_initial(s0: State) -> Self {
        Trajectory {
            states: vec![s0],
            actions: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn push(&mut self, action: Option<usize>, next: State) {
        self.actions.push(action);
        self.states.push(next);
    }

    pub fn last(&self) -> Option<&State> {
        self.states.last()
    }

    pub fn transitions(&self) -> impl Iterator<Item = Transition<'_>> {
        self.actions.iter().enumerate().map(move |(i, a)| Transition {
            from: &self.states[i],
            action: *a,
            to: &self.states[i + 1],
        })
    }

    /// Newline-delimited JSON, one state per line. `action` on line `i` is
    /// the happening that produced that state (absent on the first line).
    pub fn to_ndjson(&self, model: &GroundedModel) -> String {
        let mut out = String::new();
        for (i, s) in self.states.iter().enumerate() {
            let action = if i == 0 {
                None
            } else {
                self.actions[i - 1].map(|a| model.happening(a).name())
            };
            let line = TrajectoryLine {
                t: s.time,
                action,
                fluents: s.to_fluent_map(model),
            };
            out.push_str(&serde_json::to_string(&line).expect("serializable"));
            out.push('\n');
        }
        out
    }

    pub fn from_ndjson(text: &str, model: &GroundedModel) -> Result<Trajectory, String> {
        let mut traj = Trajectory::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: TrajectoryLine =
                serde_json::from_str(line).map_err(|e| format!("line {}: {e}", i + 1))?;
            let state = State::from_fluent_map(model, &parsed.fluents, parsed.t)
                .map_err(|e| format!("line {}: {e}", i + 1))?;
            if traj.states.is_empty() {
                traj.states.push(state);
            } else {
                let action = match parsed.action {
                    None => None,
                    Some(name) => Some(
                        model
                            .find_action_by_name(&name)
                            .ok_or_else(|| format!("line {}: unknown action `{name}`", i + 1))?,
                    ),
                };
                traj.push(action, state);
            }
        }
        Ok(traj)
    }
}
