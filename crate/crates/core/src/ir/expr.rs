use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

/// Unary math functions. The cart-pole dynamics need `sin`/`cos`; nothing
/// else is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MathFn {
    Sin,
    Cos,
}

impl MathFn {
    pub fn name(self) -> &'static str {
        match self {
            MathFn::Sin => "sin",
            MathFn::Cos => "cos",
        }
    }

    pub fn apply(self, x: f64) -> f64 {
        match self {
            MathFn::Sin => x.sin(),
            MathFn::Cos => x.cos(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }

    /// Exact comparison on stored values; no epsilon.
    pub fn test(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Eq => a == b,
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
        }
    }
}

/// Numeric expression tree, generic over how fluents are referenced.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr<R> {
    Const(f64),
    Fluent(R),
    Neg(Box<Expr<R>>),
    Bin(BinOp, Box<Expr<R>>, Box<Expr<R>>),
    Func(MathFn, Box<Expr<R>>),
    /// The `#t` time-increment marker. Only legal inside a process rate
    /// before parsing strips it; it never reaches evaluation.
    TimeDelta,
}

impl<R> Expr<R> {
    pub fn bin(op: BinOp, a: Expr<R>, b: Expr<R>) -> Self {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn contains_time_delta(&self) -> bool {
        match self {
            Expr::TimeDelta => true,
            Expr::Const(_) | Expr::Fluent(_) => false,
            Expr::Neg(e) | Expr::Func(_, e) => e.contains_time_delta(),
            Expr::Bin(_, a, b) => a.contains_time_delta() || b.contains_time_delta(),
        }
    }

    pub fn try_map<S, E>(&self, f: &mut impl FnMut(&R) -> Result<S, E>) -> Result<Expr<S>, E> {
        Ok(match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Fluent(r) => Expr::Fluent(f(r)?),
            Expr::Neg(e) => Expr::Neg(Box::new(e.try_map(f)?)),
            Expr::Bin(op, a, b) => Expr::Bin(*op, Box::new(a.try_map(f)?), Box::new(b.try_map(f)?)),
            Expr::Func(func, e) => Expr::Func(*func, Box::new(e.try_map(f)?)),
            Expr::TimeDelta => Expr::TimeDelta,
        })
    }

    pub fn for_each_fluent(&self, f: &mut impl FnMut(&R)) {
        match self {
            Expr::Fluent(r) => f(r),
            Expr::Const(_) | Expr::TimeDelta => {}
            Expr::Neg(e) | Expr::Func(_, e) => e.for_each_fluent(f),
            Expr::Bin(_, a, b) => {
                a.for_each_fluent(f);
                b.for_each_fluent(f);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal<R> {
    /// Boolean fluent test, negated when `positive` is false.
    Atom { fluent: R, positive: bool },
    Compare {
        op: CmpOp,
        lhs: Expr<R>,
        rhs: Expr<R>,
    },
}

/// A conjunction of literals. The empty conjunction holds everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition<R> {
    pub literals: Vec<Literal<R>>,
}

impl<R> Default for Condition<R> {
    fn default() -> Self {
        Condition {
            literals: Vec::new(),
        }
    }
}

impl<R> Condition<R> {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(literals: Vec<Literal<R>>) -> Self {
        Condition { literals }
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn try_map<S, E>(
        &self,
        boolean: &mut impl FnMut(&R) -> Result<S, E>,
        numeric: &mut impl FnMut(&R) -> Result<S, E>,
    ) -> Result<Condition<S>, E> {
        let literals = self
            .literals
            .iter()
            .map(|lit| {
                Ok(match lit {
                    Literal::Atom { fluent, positive } => Literal::Atom {
                        fluent: boolean(fluent)?,
                        positive: *positive,
                    },
                    Literal::Compare { op, lhs, rhs } => Literal::Compare {
                        op: *op,
                        lhs: lhs.try_map(numeric)?,
                        rhs: rhs.try_map(numeric)?,
                    },
                })
            })
            .collect::<Result<_, E>>()?;
        Ok(Condition { literals })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Effect<R> {
    SetBool(R, bool),
    Assign(R, Expr<R>),
    Increase(R, Expr<R>),
    Decrease(R, Expr<R>),
    /// Continuous change `d target / dt = rate`; processes only.
    Rate(R, Expr<R>),
}

impl<R> Effect<R> {
    pub fn target(&self) -> &R {
        match self {
            Effect::SetBool(r, _)
            | Effect::Assign(r, _)
            | Effect::Increase(r, _)
            | Effect::Decrease(r, _)
            | Effect::Rate(r, _) => r,
        }
    }

    pub fn try_map<S, E>(
        &self,
        boolean: &mut impl FnMut(&R) -> Result<S, E>,
        numeric: &mut impl FnMut(&R) -> Result<S, E>,
    ) -> Result<Effect<S>, E> {
        Ok(match self {
            Effect::SetBool(r, v) => Effect::SetBool(boolean(r)?, *v),
            Effect::Assign(r, e) => Effect::Assign(numeric(r)?, e.try_map(numeric)?),
            Effect::Increase(r, e) => Effect::Increase(numeric(r)?, e.try_map(numeric)?),
            Effect::Decrease(r, e) => Effect::Decrease(numeric(r)?, e.try_map(numeric)?),
            Effect::Rate(r, e) => Effect::Rate(numeric(r)?, e.try_map(numeric)?),
        })
    }
}

impl fmt::Display for super::Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}
