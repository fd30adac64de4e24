use std::collections::HashSet;

use super::sexpr::{read, SExpr};
use super::{ParseError, SourceSpan};
use crate::ir::{
    Atom, BinOp, CmpOp, Condition, DomainModel, Effect, Expr, FluentSchema, Happening,
    HappeningKind, InitFact, Literal, MathFn, ProblemSpec, Term, TypedParam, ROOT_TYPE,
};

type PResult<T> = Result<T, ParseError>;

fn err<T>(span: &SourceSpan, message: impl Into<String>, expected: Option<&str>) -> PResult<T> {
    Err(ParseError::new(span.clone(), message, expected))
}

fn list<'a>(e: &'a SExpr, what: &str) -> PResult<&'a [SExpr]> {
    e.as_list().map_or_else(
        || err(e.span(), format!("expected {what}"), Some("`(`")),
        Ok,
    )
}

fn ident<'a>(e: &'a SExpr, what: &str) -> PResult<&'a str> {
    match e.as_atom() {
        Some(a) if !a.starts_with('?') && !a.starts_with(':') && parse_number(a).is_none() => Ok(a),
        _ => err(e.span(), format!("expected {what}"), Some("identifier")),
    }
}

/// Finite decimal literal. Rejects the `inf`/`nan` spellings `f64::from_str`
/// would otherwise accept.
pub(crate) fn parse_number(s: &str) -> Option<f64> {
    let first = s.chars().next()?;
    if !(first.is_ascii_digit() || matches!(first, '-' | '+' | '.')) {
        return None;
    }
    if !s.chars().any(|c| c.is_ascii_digit()) {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Splits `(define (<kind> <name>) sections...)`.
fn header<'a>(root: &'a SExpr, kind: &str) -> PResult<(String, &'a [SExpr])> {
    let items = list(root, "`(define ...)`")?;
    match items.first() {
        Some(d) if d.is_keyword("define") => {}
        Some(d) => return err(d.span(), "expected `define`", Some("`define`")),
        None => return err(root.span(), "empty top-level form", Some("`define`")),
    }
    let Some(head) = items.get(1) else {
        return err(root.span(), format!("missing `({kind} <name>)`"), Some(kind));
    };
    let hl = list(head, &format!("`({kind} <name>)`"))?;
    if hl.len() != 2 || !hl[0].is_keyword(kind) {
        return err(head.span(), format!("expected `({kind} <name>)`"), Some(kind));
    }
    let name = ident(&hl[1], &format!("{kind} name"))?.to_string();
    Ok((name, &items[2..]))
}

fn section_name(sec: &SExpr) -> PResult<(String, &[SExpr])> {
    let items = list(sec, "a section")?;
    let Some(first) = items.first() else {
        return err(sec.span(), "empty section", Some("`:keyword`"));
    };
    match first.as_atom() {
        Some(k) if k.starts_with(':') => Ok((k.to_ascii_lowercase(), &items[1..])),
        _ => err(first.span(), "expected a section keyword", Some("`:keyword`")),
    }
}

/// Parses `?a ?b - t ?c` (or, with `vars=false`, `a b - t c`); untyped
/// entries get the root type.
fn typed_list(items: &[SExpr], vars: bool, domain: Option<&DomainModel>) -> PResult<Vec<TypedParam>> {
    let mut out: Vec<TypedParam> = Vec::new();
    let mut pending: Vec<(String, &SourceSpan)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let it = &items[i];
        if it.as_atom() == Some("-") {
            let Some(ty_e) = items.get(i + 1) else {
                return err(it.span(), "`-` must be followed by a type", Some("type name"));
            };
            let ty = ident(ty_e, "type name")?;
            if pending.is_empty() {
                return err(it.span(), "type annotation without names", None);
            }
            if let Some(d) = domain {
                if !d.has_type(ty) {
                    return err(ty_e.span(), format!("undeclared type `{ty}`"), None);
                }
            }
            for (n, _) in pending.drain(..) {
                out.push(TypedParam {
                    name: n,
                    ty: ty.to_string(),
                });
            }
            i += 2;
            continue;
        }
        let name = match it.as_atom() {
            Some(a) if vars && a.len() > 1 && a.starts_with('?') => a[1..].to_string(),
            Some(_) if !vars => ident(it, "object name")?.to_string(),
            _ => return err(it.span(), "expected a `?variable`", Some("`?name`")),
        };
        if out.iter().any(|p| p.name == name) || pending.iter().any(|(n, _)| *n == name) {
            return err(it.span(), format!("duplicate name `{name}`"), None);
        }
        pending.push((name, it.span()));
        i += 1;
    }
    for (n, _) in pending {
        out.push(TypedParam {
            name: n,
            ty: ROOT_TYPE.to_string(),
        });
    }
    Ok(out)
}

fn schema_list(items: &[SExpr], domain: &DomainModel, numeric: bool) -> PResult<Vec<FluentSchema>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let it = &items[i];
        let decl = list(it, "a fluent declaration `(name ?p - type ...)`")?;
        let Some(first) = decl.first() else {
            return err(it.span(), "empty fluent declaration", Some("name"));
        };
        let name = ident(first, "fluent name")?;
        if domain.predicate(name).is_some()
            || domain.function(name).is_some()
            || out.iter().any(|s: &FluentSchema| s.name == name)
        {
            return err(first.span(), format!("fluent `{name}` declared twice"), None);
        }
        let params = typed_list(&decl[1..], true, Some(domain))?;
        out.push(FluentSchema {
            name: name.to_string(),
            params,
        });
        i += 1;
        // Optional `- number` result type on functions.
        if numeric && items.get(i).and_then(SExpr::as_atom) == Some("-") {
            match items.get(i + 1) {
                Some(t) if t.is_keyword("number") => i += 2,
                Some(t) => return err(t.span(), "functions must have type `number`", Some("number")),
                None => return err(items[i].span(), "dangling `-`", Some("number")),
            }
        }
    }
    Ok(out)
}

/// Name and argument terms of `(f t1 t2 ...)`.
struct AtomRef<'a> {
    atom: Atom,
    span: &'a SourceSpan,
}

fn atom_ref(e: &SExpr) -> PResult<AtomRef<'_>> {
    let items = list(e, "a fluent reference `(name args...)`")?;
    let Some(first) = items.first() else {
        return err(e.span(), "empty fluent reference", Some("fluent name"));
    };
    let name = ident(first, "fluent name")?;
    let args = items[1..]
        .iter()
        .map(|a| match a.as_atom() {
            Some(v) if v.len() > 1 && v.starts_with('?') => Ok(Term::Var(v[1..].to_string())),
            Some(_) => Ok(Term::Object(ident(a, "object name")?.to_string())),
            None => err(a.span(), "nested expression in argument position", Some("object or `?var`")),
        })
        .collect::<PResult<_>>()?;
    Ok(AtomRef {
        atom: Atom::new(name, args),
        span: first.span(),
    })
}

/// Name resolution context for a happening body or problem section.
struct Scope<'a> {
    domain: &'a DomainModel,
    vars: HashSet<String>,
    objects: Option<HashSet<String>>,
}

impl Scope<'_> {
    fn check(&self, r: &AtomRef, numeric: bool) -> PResult<()> {
        let (own, other) = if numeric {
            (self.domain.function(&r.atom.name), self.domain.predicate(&r.atom.name))
        } else {
            (self.domain.predicate(&r.atom.name), self.domain.function(&r.atom.name))
        };
        let schema = match (own, other) {
            (Some(s), _) => s,
            (None, Some(_)) => {
                let what = if numeric { "a predicate" } else { "a function" };
                return err(r.span, format!("`{}` is {what} here", r.atom.name), None);
            }
            (None, None) => {
                return err(r.span, format!("undeclared fluent `{}`", r.atom.name), None);
            }
        };
        if schema.params.len() != r.atom.args.len() {
            return err(
                r.span,
                format!(
                    "`{}` expects {} argument(s), got {}",
                    r.atom.name,
                    schema.params.len(),
                    r.atom.args.len()
                ),
                None,
            );
        }
        for t in &r.atom.args {
            match t {
                Term::Var(v) if !self.vars.contains(v) => {
                    return err(r.span, format!("unbound variable `?{v}`"), None);
                }
                Term::Object(o) => {
                    if let Some(objs) = &self.objects {
                        if !objs.contains(o) {
                            return err(r.span, format!("undeclared object `{o}`"), None);
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn expr(&self, e: &SExpr, allow_time: bool) -> PResult<Expr<Atom>> {
        match e {
            SExpr::Atom(a, span) => {
                if a == "#t" {
                    if !allow_time {
                        return err(span, "`#t` is only allowed in process rate effects", None);
                    }
                    return Ok(Expr::TimeDelta);
                }
                match parse_number(a) {
                    Some(v) => Ok(Expr::Const(v)),
                    None => err(span, format!("expected a number or `(fluent ...)`, found `{a}`"), Some("expression")),
                }
            }
            SExpr::List(items, span) => {
                let Some(head) = items.first().and_then(SExpr::as_atom) else {
                    return err(span, "expected an operator or fluent name", Some("expression"));
                };
                let args = &items[1..];
                let bin = match head {
                    "+" => Some(BinOp::Add),
                    "-" => Some(BinOp::Sub),
                    "*" => Some(BinOp::Mul),
                    "/" => Some(BinOp::Div),
                    _ => None,
                };
                if let Some(op) = bin {
                    let parsed = args
                        .iter()
                        .map(|a| self.expr(a, allow_time))
                        .collect::<PResult<Vec<_>>>()?;
                    return match (op, parsed.len()) {
                        (BinOp::Sub, 1) => Ok(Expr::Neg(Box::new(parsed.into_iter().next().unwrap()))),
                        (BinOp::Sub | BinOp::Div, 2) => {
                            let mut it = parsed.into_iter();
                            Ok(Expr::bin(op, it.next().unwrap(), it.next().unwrap()))
                        }
                        (BinOp::Add | BinOp::Mul, n) if n >= 2 => {
                            let mut it = parsed.into_iter();
                            let first = it.next().unwrap();
                            Ok(it.fold(first, |acc, x| Expr::bin(op, acc, x)))
                        }
                        _ => err(span, format!("wrong number of operands for `{head}`"), None),
                    };
                }
                let func = match head.to_ascii_lowercase().as_str() {
                    "sin" => Some(MathFn::Sin),
                    "cos" => Some(MathFn::Cos),
                    _ => None,
                };
                if let Some(f) = func {
                    if self.domain.function(head).is_none() {
                        if args.len() != 1 {
                            return err(span, format!("`{head}` takes one operand"), None);
                        }
                        return Ok(Expr::Func(f, Box::new(self.expr(&args[0], allow_time)?)));
                    }
                }
                let r = atom_ref(e)?;
                self.check(&r, true)?;
                Ok(Expr::Fluent(r.atom))
            }
        }
    }

    fn literal(&self, e: &SExpr, out: &mut Vec<Literal<Atom>>) -> PResult<()> {
        let items = list(e, "a condition")?;
        let Some(head) = items.first() else {
            return err(e.span(), "empty condition", Some("literal"));
        };
        if head.is_keyword("and") {
            for c in &items[1..] {
                self.literal(c, out)?;
            }
            return Ok(());
        }
        if head.is_keyword("not") {
            if items.len() != 2 {
                return err(e.span(), "`not` takes one predicate", None);
            }
            let r = atom_ref(&items[1])?;
            self.check(&r, false)?;
            out.push(Literal::Atom {
                fluent: r.atom,
                positive: false,
            });
            return Ok(());
        }
        if head.is_keyword("or") || head.is_keyword("forall") || head.is_keyword("exists") || head.is_keyword("imply") {
            return err(head.span(), "only conjunctions of literals are supported", Some("`and`"));
        }
        let cmp = match head.as_atom() {
            Some("<") => Some(CmpOp::Lt),
            Some("<=") => Some(CmpOp::Le),
            Some("=") => Some(CmpOp::Eq),
            Some(">=") => Some(CmpOp::Ge),
            Some(">") => Some(CmpOp::Gt),
            _ => None,
        };
        if let Some(op) = cmp {
            if items.len() != 3 {
                return err(e.span(), "comparisons take two operands", None);
            }
            out.push(Literal::Compare {
                op,
                lhs: self.expr(&items[1], false)?,
                rhs: self.expr(&items[2], false)?,
            });
            return Ok(());
        }
        let r = atom_ref(e)?;
        self.check(&r, false)?;
        out.push(Literal::Atom {
            fluent: r.atom,
            positive: true,
        });
        Ok(())
    }

    fn condition(&self, e: &SExpr) -> PResult<Condition<Atom>> {
        let mut lits = Vec::new();
        if e.as_list().is_some_and(<[SExpr]>::is_empty) {
            return Ok(Condition::empty());
        }
        self.literal(e, &mut lits)?;
        Ok(Condition::new(lits))
    }

    fn effects(&self, e: &SExpr, kind: HappeningKind, out: &mut Vec<Effect<Atom>>) -> PResult<()> {
        let items = list(e, "an effect")?;
        let Some(head) = items.first() else {
            return Ok(());
        };
        if head.is_keyword("and") {
            for c in &items[1..] {
                self.effects(c, kind, out)?;
            }
            return Ok(());
        }
        if head.is_keyword("not") {
            if items.len() != 2 {
                return err(e.span(), "`not` takes one predicate", None);
            }
            return self.instant(e, kind, |s| {
                let r = atom_ref(&items[1])?;
                s.check(&r, false)?;
                Ok(Effect::SetBool(r.atom, false))
            }, out);
        }
        let op = head.as_atom().map(str::to_ascii_lowercase);
        match op.as_deref() {
            Some(k @ ("assign" | "increase" | "decrease" | "scale-up" | "scale-down")) => {
                if k.starts_with("scale") {
                    return err(head.span(), format!("`{k}` is not supported"), Some("assign/increase/decrease"));
                }
                if items.len() != 3 {
                    return err(e.span(), format!("`{k}` takes a fluent and an expression"), None);
                }
                let target = atom_ref(&items[1])?;
                self.check(&target, true)?;
                let value = self.expr(&items[2], true)?;
                if value.contains_time_delta() {
                    if kind != HappeningKind::Process {
                        return err(items[2].span(), format!("continuous-rate effect in {kind}"), None);
                    }
                    if k == "assign" {
                        return err(items[2].span(), "`#t` cannot appear in `assign`", None);
                    }
                    let rate = strip_time(value).ok_or_else(|| {
                        ParseError::new(
                            items[2].span().clone(),
                            "rate must have the form `(* #t expr)`",
                            Some("`(* #t expr)`"),
                        )
                    })?;
                    let rate = if k == "decrease" { Expr::Neg(Box::new(rate)) } else { rate };
                    out.push(Effect::Rate(target.atom, rate));
                    return Ok(());
                }
                if kind == HappeningKind::Process {
                    return err(e.span(), "instantaneous effect in a process", Some("`(increase f (* #t expr))`"));
                }
                out.push(match k {
                    "assign" => Effect::Assign(target.atom, value),
                    "increase" => Effect::Increase(target.atom, value),
                    _ => Effect::Decrease(target.atom, value),
                });
                Ok(())
            }
            Some("when" | "forall") => err(head.span(), "conditional and quantified effects are not supported", None),
            _ => self.instant(e, kind, |s| {
                let r = atom_ref(e)?;
                s.check(&r, false)?;
                Ok(Effect::SetBool(r.atom, true))
            }, out),
        }
    }

    fn instant(
        &self,
        e: &SExpr,
        kind: HappeningKind,
        make: impl FnOnce(&Self) -> PResult<Effect<Atom>>,
        out: &mut Vec<Effect<Atom>>,
    ) -> PResult<()> {
        if kind == HappeningKind::Process {
            return err(e.span(), "instantaneous effect in a process", Some("`(increase f (* #t expr))`"));
        }
        out.push(make(self)?);
        Ok(())
    }
}

/// `(* #t e)` or `(* e #t)` to `e`; a bare `#t` is a unit rate.
fn strip_time(e: Expr<Atom>) -> Option<Expr<Atom>> {
    match e {
        Expr::TimeDelta => Some(Expr::Const(1.0)),
        Expr::Bin(BinOp::Mul, a, b) => match (*a, *b) {
            (Expr::TimeDelta, x) | (x, Expr::TimeDelta) if !x.contains_time_delta() => Some(x),
            _ => None,
        },
        _ => None,
    }
}

fn happening(items: &[SExpr], span: &SourceSpan, kind: HappeningKind, domain: &DomainModel) -> PResult<Happening> {
    let Some(name_e) = items.first() else {
        return err(span, format!("{kind} needs a name"), Some("name"));
    };
    let name = ident(name_e, &format!("{kind} name"))?;
    if domain.happening(name).is_some() {
        return err(name_e.span(), format!("happening `{name}` defined twice"), None);
    }
    let mut params = Vec::new();
    let mut pre_e = None;
    let mut eff_e = None;
    let mut i = 1;
    while i < items.len() {
        let key = &items[i];
        let Some(val) = items.get(i + 1) else {
            return err(key.span(), "keyword without a value", None);
        };
        match key.as_atom().map(str::to_ascii_lowercase).as_deref() {
            Some(":parameters") => params = typed_list(list(val, "a parameter list")?, true, Some(domain))?,
            Some(":precondition") => pre_e = Some(val),
            Some(":effect") => eff_e = Some(val),
            _ => {
                return err(
                    key.span(),
                    format!("unknown {kind} keyword"),
                    Some("`:parameters`, `:precondition` or `:effect`"),
                )
            }
        }
        i += 2;
    }
    let scope = Scope {
        domain,
        vars: params.iter().map(|p| p.name.clone()).collect(),
        objects: None,
    };
    let precondition = match pre_e {
        Some(e) => scope.condition(e)?,
        None => Condition::empty(),
    };
    let mut effects = Vec::new();
    if let Some(e) = eff_e {
        scope.effects(e, kind, &mut effects)?;
    }
    Ok(Happening {
        name: name.to_string(),
        kind,
        params,
        precondition,
        effects,
    })
}

pub fn parse_domain(text: &str) -> Result<DomainModel, ParseError> {
    parse_domain_named(text, "<domain>")
}

/// As [`parse_domain`], with `file` recorded in error spans.
pub fn parse_domain_named(text: &str, file: &str) -> Result<DomainModel, ParseError> {
    let root = read(text, file)?;
    let (name, sections) = header(&root, "domain")?;
    let mut d = DomainModel::empty(name);
    let mut seen: HashSet<String> = HashSet::new();
    for sec in sections {
        let (key, body) = section_name(sec)?;
        let once = matches!(key.as_str(), ":requirements" | ":types" | ":predicates" | ":functions");
        if once && !seen.insert(key.clone()) {
            return err(sec.span(), format!("duplicate `{key}` section"), None);
        }
        match key.as_str() {
            ":requirements" => {
                for r in body {
                    match r.as_atom() {
                        Some(a) if a.starts_with(':') => d.requirements.push(a.to_ascii_lowercase()),
                        _ => return err(r.span(), "expected a requirement flag", Some("`:flag`")),
                    }
                }
            }
            ":types" => {
                let types = typed_list(body, false, None)?;
                for t in types {
                    if t.ty != ROOT_TYPE {
                        return err(sec.span(), format!("type `{}` has parent `{}`; only flat types are supported", t.name, t.ty), Some("`- object`"));
                    }
                    if t.name != ROOT_TYPE {
                        d.types.push(t.name);
                    }
                }
            }
            ":predicates" => d.predicates = schema_list(body, &d, false)?,
            ":functions" => d.functions = schema_list(body, &d, true)?,
            ":action" | ":event" | ":process" => {
                let kind = match key.as_str() {
                    ":action" => HappeningKind::Action,
                    ":event" => HappeningKind::Event,
                    _ => HappeningKind::Process,
                };
                let h = happening(body, sec.span(), kind, &d)?;
                d.happenings.push(h);
            }
            _ => {
                return err(
                    sec.span(),
                    format!("unknown domain section `{key}`"),
                    Some("`:requirements`, `:types`, `:predicates`, `:functions`, `:action`, `:event` or `:process`"),
                )
            }
        }
    }
    Ok(d)
}

/// Parses a problem against `domain`, so that init facts and goal literals
/// can be checked for undeclared fluents and objects with source spans.
pub fn parse_problem(text: &str, domain: &DomainModel) -> Result<ProblemSpec, ParseError> {
    parse_problem_named(text, domain, "<problem>")
}

pub fn parse_problem_named(text: &str, domain: &DomainModel, file: &str) -> Result<ProblemSpec, ParseError> {
    let root = read(text, file)?;
    let (name, sections) = header(&root, "problem")?;
    let mut p = ProblemSpec {
        name,
        domain: String::new(),
        objects: Vec::new(),
        init: Vec::new(),
        goal: Condition::empty(),
    };
    let mut seen: HashSet<String> = HashSet::new();
    let mut goal_seen = false;
    for sec in sections {
        let (key, body) = section_name(sec)?;
        if !seen.insert(key.clone()) {
            return err(sec.span(), format!("duplicate `{key}` section"), None);
        }
        let scope = Scope {
            domain,
            vars: HashSet::new(),
            objects: Some(p.objects.iter().map(|o| o.name.clone()).collect()),
        };
        match key.as_str() {
            ":domain" => {
                let [d] = body else {
                    return err(sec.span(), "expected `(:domain <name>)`", Some("domain name"));
                };
                let dn = ident(d, "domain name")?;
                if !dn.eq_ignore_ascii_case(&domain.name) {
                    return err(d.span(), format!("problem is for domain `{dn}`, not `{}`", domain.name), None);
                }
                p.domain = dn.to_string();
            }
            ":objects" => p.objects = typed_list(body, false, Some(domain))?,
            ":init" => {
                let mut assigned: HashSet<(String, Vec<Term>)> = HashSet::new();
                for f in body {
                    let fact = init_fact(f, &scope)?;
                    let a = fact.atom();
                    if !assigned.insert((a.name.clone(), a.args.clone())) {
                        return err(f.span(), format!("duplicate init assignment for `{a}`"), None);
                    }
                    p.init.push(fact);
                }
            }
            ":goal" => {
                goal_seen = true;
                let [g] = body else {
                    return err(sec.span(), "`:goal` requires exactly one condition", Some("condition"));
                };
                p.goal = scope.condition(g)?;
                if p.goal.is_empty() {
                    return err(sec.span(), "goal is empty", Some("a goal condition"));
                }
            }
            _ => {
                return err(
                    sec.span(),
                    format!("unknown problem section `{key}`"),
                    Some("`:domain`, `:objects`, `:init` or `:goal`"),
                )
            }
        }
    }
    if p.domain.is_empty() {
        return err(root.span(), "missing `(:domain <name>)`", Some("`:domain`"));
    }
    if !goal_seen {
        return err(root.span(), "missing `:goal`", Some("`:goal`"));
    }
    Ok(p)
}

fn init_fact(f: &SExpr, scope: &Scope) -> PResult<InitFact> {
    let items = list(f, "an init fact")?;
    match items.first() {
        Some(h) if h.as_atom() == Some("=") => {
            if items.len() != 3 {
                return err(f.span(), "expected `(= (f args) value)`", None);
            }
            let r = atom_ref(&items[1])?;
            scope.check(&r, true)?;
            if r.atom.args.iter().any(|t| matches!(t, Term::Var(_))) {
                return err(r.span, "variables are not allowed in init", None);
            }
            let value = items[2]
                .as_atom()
                .and_then(parse_number)
                .ok_or_else(|| ParseError::new(items[2].span().clone(), "expected a number", Some("number")))?;
            Ok(InitFact::Numeric { atom: r.atom, value })
        }
        Some(h) if h.is_keyword("not") => {
            if items.len() != 2 {
                return err(f.span(), "`not` takes one predicate", None);
            }
            let r = atom_ref(&items[1])?;
            scope.check(&r, false)?;
            Ok(InitFact::Bool { atom: r.atom, value: false })
        }
        _ => {
            let r = atom_ref(f)?;
            scope.check(&r, false)?;
            if r.atom.args.iter().any(|t| matches!(t, Term::Var(_))) {
                return err(r.span, "variables are not allowed in init", None);
            }
            Ok(InitFact::Bool { atom: r.atom, value: true })
        }
    }
}

/// Parses a closed condition such as `(and (present t0) (>= (logs) 6))`
/// against `domain`. `()` is the empty condition.
pub fn parse_condition(text: &str, domain: &DomainModel) -> Result<Condition<Atom>, ParseError> {
    let root = read(text, "<condition>")?;
    let scope = Scope {
        domain,
        vars: HashSet::new(),
        objects: None,
    };
    scope.condition(&root)
}
