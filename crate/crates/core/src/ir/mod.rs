//! Typed intermediate representation of the supported PDDL+ subset.
//!
//! The lifted layer (`DomainModel`, `ProblemSpec`) mirrors the text format:
//! fluents are referenced by name and argument terms. Grounding produces a
//! [`GroundedModel`] in which every fluent reference has been resolved to a
//! dense slot, so states are plain vectors and evaluation never touches a map.
//!
//! Expression, condition and effect trees are generic over the fluent
//! reference type so both layers share one definition.

mod expr;
mod ground;
mod state;

pub use expr::{BinOp, CmpOp, Condition, Effect, Expr, Literal, MathFn};
pub use ground::{ground, FluentInfo, GroundHappening, GroundedModel};
pub use state::{
    eval_expr, fluent_distance, holds, DistanceSpec, Plan, PlanFileError, PlanStep, ResolvedDistance, State,
    Trajectory, Transition,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The root type every declared type implicitly belongs to.
pub const ROOT_TYPE: &str = "object";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FluentKind {
    Boolean,
    Numeric,
}

/// A grounded state variable: a predicate or function name applied to objects.
///
/// Displayed as `name` for zero-arity fluents and `name(a,b)` otherwise; the
/// same form is accepted by [`FromStr`], which is how fluents are keyed in
/// JSON observations and trajectory dumps.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FluentId {
    pub name: String,
    pub args: Vec<String>,
}

impl FluentId {
    pub fn new(name: impl Into<String>, args: &[&str]) -> Self {
        FluentId {
            name: name.into(),
            args: args.iter().map(|a| a.to_string()).collect(),
        }
    }

    pub fn nullary(name: impl Into<String>) -> Self {
        FluentId {
            name: name.into(),
            args: Vec::new(),
        }
    }
}

impl fmt::Display for FluentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            write!(f, "{}", self.name)
        } else {
            write!(f, "{}({})", self.name, self.args.join(","))
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("malformed fluent id `{0}`")]
pub struct FluentIdParseError(pub String);

impl FromStr for FluentId {
    type Err = FluentIdParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || FluentIdParseError(s.to_string());
        match s.find('(') {
            None => {
                if s.is_empty() || s.contains([')', ',', ' ']) {
                    return Err(bad());
                }
                Ok(FluentId::nullary(s))
            }
            Some(open) => {
                let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
                let name = &s[..open];
                if name.is_empty() {
                    return Err(bad());
                }
                let args: Vec<String> = inner.split(',').map(|a| a.trim().to_string()).collect();
                if args.iter().any(|a| a.is_empty()) {
                    return Err(bad());
                }
                Ok(FluentId {
                    name: name.to_string(),
                    args,
                })
            }
        }
    }
}

impl Serialize for FluentId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FluentId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A term in a lifted atom: a `?variable` or an object name.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Object(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Object(o) => write!(f, "{o}"),
        }
    }
}

/// A lifted fluent reference, e.g. `(tree_x ?t)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub name: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(name: impl Into<String>, args: Vec<Term>) -> Self {
        Atom {
            name: name.into(),
            args,
        }
    }

    pub fn nullary(name: impl Into<String>) -> Self {
        Atom::new(name, Vec::new())
    }
}

pub type NumericExpr = Expr<Atom>;
pub type LiftedCondition = Condition<Atom>;
pub type EffectOp = Effect<Atom>;

/// A typed parameter `?name - type`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedParam {
    pub name: String,
    pub ty: String,
}

/// Declaration of a predicate or function: its name and parameter types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FluentSchema {
    pub name: String,
    pub params: Vec<TypedParam>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HappeningKind {
    Action,
    Event,
    Process,
}

impl fmt::Display for HappeningKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HappeningKind::Action => "action",
            HappeningKind::Event => "event",
            HappeningKind::Process => "process",
        })
    }
}

/// A lifted action, event or process.
#[derive(Debug, Clone, PartialEq)]
pub struct Happening {
    pub name: String,
    pub kind: HappeningKind,
    pub params: Vec<TypedParam>,
    pub precondition: LiftedCondition,
    pub effects: Vec<EffectOp>,
}

impl Happening {
    /// Checks the kind/effect discipline: processes carry only rates, actions
    /// and events carry no rates.
    pub fn check_effect_kinds(&self) -> Result<(), ModelError> {
        for effect in &self.effects {
            let is_rate = matches!(effect, Effect::Rate(..));
            match (self.kind, is_rate) {
                (HappeningKind::Process, false) => {
                    return Err(ModelError::EffectKind {
                        happening: self.name.clone(),
                        message: "processes may only contain continuous-rate effects".into(),
                    })
                }
                (HappeningKind::Action | HappeningKind::Event, true) => {
                    return Err(ModelError::EffectKind {
                        happening: self.name.clone(),
                        message: format!("continuous-rate effect in {}", self.kind),
                    })
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainModel {
    pub name: String,
    pub requirements: Vec<String>,
    /// Flat type names; every type's parent is [`ROOT_TYPE`].
    pub types: Vec<String>,
    pub predicates: Vec<FluentSchema>,
    pub functions: Vec<FluentSchema>,
    pub happenings: Vec<Happening>,
}

impl DomainModel {
    pub fn empty(name: impl Into<String>) -> Self {
        DomainModel {
            name: name.into(),
            requirements: Vec::new(),
            types: Vec::new(),
            predicates: Vec::new(),
            functions: Vec::new(),
            happenings: Vec::new(),
        }
    }

    pub fn has_type(&self, ty: &str) -> bool {
        ty == ROOT_TYPE || self.types.iter().any(|t| t == ty)
    }

    pub fn predicate(&self, name: &str) -> Option<&FluentSchema> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn function(&self, name: &str) -> Option<&FluentSchema> {
        self.functions.iter().find(|p| p.name == name)
    }

    pub fn happening(&self, name: &str) -> Option<&Happening> {
        self.happenings.iter().find(|h| h.name == name)
    }
}

/// One `:init` entry.
#[derive(Debug, Clone, PartialEq)]
pub enum InitFact {
    Bool { atom: Atom, value: bool },
    Numeric { atom: Atom, value: f64 },
}

impl InitFact {
    pub fn atom(&self) -> &Atom {
        match self {
            InitFact::Bool { atom, .. } | InitFact::Numeric { atom, .. } => atom,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub name: String,
    pub domain: String,
    pub objects: Vec<TypedParam>,
    pub init: Vec<InitFact>,
    pub goal: LiftedCondition,
}

impl ProblemSpec {
    /// Replaces the value of a numeric init fact, returning whether it existed.
    pub fn set_numeric(&mut self, id: &FluentId, new_value: f64) -> bool {
        for fact in &mut self.init {
            if let InitFact::Numeric { atom, value } = fact {
                if atom.name == id.name
                    && atom.args.len() == id.args.len()
                    && atom
                        .args
                        .iter()
                        .zip(&id.args)
                        .all(|(t, a)| matches!(t, Term::Object(o) if o == a))
                {
                    *value = new_value;
                    return true;
                }
            }
        }
        false
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("undeclared type `{0}`")]
    UndeclaredType(String),
    #[error("undeclared object `{0}`")]
    UndeclaredObject(String),
    #[error("unknown fluent `{0}`")]
    UnknownFluent(String),
    #[error("`{name}` expects {expected} argument(s), got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("unbound variable `?{0}`")]
    UnboundVariable(String),
    #[error("`{0}` is used as both a predicate and a function")]
    KindMismatch(String),
    #[error("fluent `{0}` is assigned more than once in the initial state")]
    DuplicateInit(String),
    #[error("numeric fluent `{0}` has no initial value")]
    Uninitialized(String),
    #[error("`{happening}`: {message}")]
    EffectKind { happening: String, message: String },
    #[error("time increment `#t` outside a process rate")]
    TimeMarker,
    #[error("problem is for domain `{problem}`, not `{domain}`")]
    DomainMismatch { domain: String, problem: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("unknown fluent slot {0}")]
    UnknownFluent(usize),
    #[error("non-finite result {0}")]
    NonFinite(f64),
    #[error("time increment `#t` cannot be evaluated outside a process rate")]
    TimeMarker,
}
