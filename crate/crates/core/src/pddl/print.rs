use std::fmt::Write as _;

use crate::ir::{
    Atom, Condition, DomainModel, Effect, Expr, FluentSchema, Happening, InitFact, Literal,
    ProblemSpec, TypedParam, ROOT_TYPE,
};

/// Shortest decimal that parses back to the same `f64`.
pub fn format_number(v: f64) -> String {
    let s = format!("{v:?}");
    if let Some(stripped) = s.strip_suffix(".0") {
        stripped.to_string()
    } else {
        s
    }
}

fn params(out: &mut String, ps: &[TypedParam], var: bool) {
    let prefix = if var { "?" } else { "" };
    for (i, p) in ps.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{prefix}{}", p.name);
        if p.ty != ROOT_TYPE {
            let _ = write!(out, " - {}", p.ty);
        }
    }
}

fn expr(out: &mut String, e: &Expr<Atom>) {
    match e {
        Expr::Const(c) => out.push_str(&format_number(*c)),
        Expr::Fluent(a) => {
            let _ = write!(out, "{a}");
        }
        Expr::Neg(x) => {
            out.push_str("(- ");
            expr(out, x);
            out.push(')');
        }
        Expr::Bin(op, a, b) => {
            let _ = write!(out, "({} ", op.symbol());
            expr(out, a);
            out.push(' ');
            expr(out, b);
            out.push(')');
        }
        Expr::Func(f, x) => {
            let _ = write!(out, "({} ", f.name());
            expr(out, x);
            out.push(')');
        }
        Expr::TimeDelta => out.push_str("#t"),
    }
}

fn literal(out: &mut String, l: &Literal<Atom>) {
    match l {
        Literal::Atom { fluent, positive: true } => {
            let _ = write!(out, "{fluent}");
        }
        Literal::Atom { fluent, positive: false } => {
            let _ = write!(out, "(not {fluent})");
        }
        Literal::Compare { op, lhs, rhs } => {
            let _ = write!(out, "({} ", op.symbol());
            expr(out, lhs);
            out.push(' ');
            expr(out, rhs);
            out.push(')');
        }
    }
}

fn condition(out: &mut String, c: &Condition<Atom>, indent: &str) {
    out.push_str("(and");
    for l in &c.literals {
        let _ = write!(out, "\n{indent}  ");
        literal(out, l);
    }
    out.push(')');
}

fn effect(out: &mut String, e: &Effect<Atom>) {
    match e {
        Effect::SetBool(a, true) => {
            let _ = write!(out, "{a}");
        }
        Effect::SetBool(a, false) => {
            let _ = write!(out, "(not {a})");
        }
        Effect::Assign(a, x) | Effect::Increase(a, x) | Effect::Decrease(a, x) => {
            let op = match e {
                Effect::Assign(..) => "assign",
                Effect::Increase(..) => "increase",
                _ => "decrease",
            };
            let _ = write!(out, "({op} {a} ");
            expr(out, x);
            out.push(')');
        }
        Effect::Rate(a, Expr::Neg(x)) => {
            let _ = write!(out, "(decrease {a} (* #t ");
            expr(out, x);
            out.push_str("))");
        }
        Effect::Rate(a, x) => {
            let _ = write!(out, "(increase {a} (* #t ");
            expr(out, x);
            out.push_str("))");
        }
    }
}

fn schemas(out: &mut String, section: &str, list: &[FluentSchema]) {
    let _ = write!(out, "  ({section}");
    for s in list {
        let _ = write!(out, "\n    ({}", s.name);
        if !s.params.is_empty() {
            out.push(' ');
            params(out, &s.params, true);
        }
        out.push(')');
    }
    out.push_str(")\n");
}

fn happening(out: &mut String, h: &Happening) {
    let _ = write!(out, "\n  (:{} {}\n    :parameters (", h.kind, h.name);
    params(out, &h.params, true);
    out.push_str(")\n    :precondition ");
    condition(out, &h.precondition, "    ");
    out.push_str("\n    :effect (and");
    for e in &h.effects {
        out.push_str("\n      ");
        effect(out, e);
    }
    out.push_str("))\n");
}

/// Canonical text form. Re-parsing yields a structurally equal model.
pub fn print_domain(d: &DomainModel) -> String {
    let mut out = format!("(define (domain {})\n", d.name);
    if !d.requirements.is_empty() {
        let _ = writeln!(out, "  (:requirements {})", d.requirements.join(" "));
    }
    let _ = write!(out, "  (:types");
    for t in &d.types {
        let _ = write!(out, " {t}");
    }
    out.push_str(")\n");
    schemas(&mut out, ":predicates", &d.predicates);
    schemas(&mut out, ":functions", &d.functions);
    for h in &d.happenings {
        happening(&mut out, h);
    }
    out.push_str(")\n");
    out
}

pub fn print_problem(p: &ProblemSpec) -> String {
    let mut out = format!("(define (problem {})\n  (:domain {})\n  (:objects", p.name, p.domain);
    if !p.objects.is_empty() {
        out.push(' ');
        params(&mut out, &p.objects, false);
    }
    out.push_str(")\n  (:init");
    for f in &p.init {
        out.push_str("\n    ");
        match f {
            InitFact::Bool { atom, value: true } => {
                let _ = write!(out, "{atom}");
            }
            InitFact::Bool { atom, value: false } => {
                let _ = write!(out, "(not {atom})");
            }
            InitFact::Numeric { atom, value } => {
                let _ = write!(out, "(= {atom} {})", format_number(*value));
            }
        }
    }
    out.push_str(")\n  (:goal ");
    condition(&mut out, &p.goal, "  ");
    out.push_str("))\n");
    out
}
