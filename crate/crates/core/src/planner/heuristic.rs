use serde::{Deserialize, Serialize};

use crate::ir::{eval_expr, Condition, FluentId, GroundedModel, Literal, ModelError, State};

/// A goal-distance estimate used to order the search frontier.
pub trait Heuristic: Send + Sync {
    fn name(&self) -> &str;

    /// `depth` is the number of decisions taken from the search root.
    fn estimate(&self, state: &State, depth: usize) -> f64;
}

/// Serializable choice of heuristic, resolved against a model and goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HeuristicSpec {
    Blind,
    /// Number of goal literals not yet satisfied.
    GoalCount,
    /// Remaining lookahead decisions plus, for every (angle, rate) pair,
    /// `|angle + rate_weight * rate|`.
    PoleBalance {
        poles: Vec<(FluentId, FluentId)>,
        rate_weight: f64,
        horizon: usize,
    },
}

impl HeuristicSpec {
    pub fn cartpole(horizon: usize) -> Self {
        HeuristicSpec::PoleBalance {
            poles: vec![
                (FluentId::nullary("theta_x"), FluentId::nullary("theta_x_dot")),
                (FluentId::nullary("theta_y"), FluentId::nullary("theta_y_dot")),
            ],
            rate_weight: 0.1,
            horizon,
        }
    }

    pub fn build(&self, model: &GroundedModel, goal: &Condition<usize>) -> Result<Box<dyn Heuristic>, ModelError> {
        Ok(match self {
            HeuristicSpec::Blind => Box::new(Blind),
            HeuristicSpec::GoalCount => Box::new(GoalCount { goal: goal.clone() }),
            HeuristicSpec::PoleBalance {
                poles,
                rate_weight,
                horizon,
            } => {
                let slot = |id: &FluentId| {
                    model
                        .numeric_slot(id)
                        .ok_or_else(|| ModelError::UnknownFluent(id.to_string()))
                };
                Box::new(PoleBalance {
                    poles: poles
                        .iter()
                        .map(|(a, r)| Ok((slot(a)?, slot(r)?)))
                        .collect::<Result<_, ModelError>>()?,
                    rate_weight: *rate_weight,
                    horizon: *horizon,
                })
            }
        })
    }
}

pub struct Blind;

impl Heuristic for Blind {
    fn name(&self) -> &str {
        "blind"
    }

    fn estimate(&self, _: &State, _: usize) -> f64 {
        0.0
    }
}

pub struct GoalCount {
    goal: Condition<usize>,
}

impl Heuristic for GoalCount {
    fn name(&self) -> &str {
        "goal_count"
    }

    fn estimate(&self, state: &State, _: usize) -> f64 {
        self.goal
            .literals
            .iter()
            .filter(|lit| {
                let ok = match lit {
                    Literal::Atom { fluent, positive } => state.bools[*fluent] == *positive,
                    Literal::Compare { op, lhs, rhs } => match (eval_expr(state, lhs), eval_expr(state, rhs)) {
                        (Ok(a), Ok(b)) => op.test(a, b),
                        _ => false,
                    },
                };
                !ok
            })
            .count() as f64
    }
}

pub struct PoleBalance {
    poles: Vec<(usize, usize)>,
    rate_weight: f64,
    horizon: usize,
}

impl Heuristic for PoleBalance {
    fn name(&self) -> &str {
        "pole_balance"
    }

    fn estimate(&self, state: &State, depth: usize) -> f64 {
        let remaining = self.horizon.saturating_sub(depth) as f64;
        let tilt: f64 = self
            .poles
            .iter()
            .map(|&(a, r)| (state.nums[a] + self.rate_weight * state.nums[r]).abs())
            .sum();
        remaining + tilt
    }
}
