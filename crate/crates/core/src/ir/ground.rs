use std::collections::{BTreeMap, HashMap, HashSet};

use super::{
    Atom, Condition, DomainModel, Effect, Expr, FluentId, FluentKind, FluentSchema, Happening,
    HappeningKind, InitFact, ModelError, ProblemSpec, State, Term, TypedParam,
};

#[derive(Debug, Clone, PartialEq)]
pub struct FluentInfo {
    pub id: FluentId,
    pub kind: FluentKind,
    /// Index into `State::bools` or `State::nums` depending on `kind`.
    pub slot: usize,
}

/// A happening instantiated over concrete objects. Boolean references index
/// `State::bools`, numeric references index `State::nums`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundHappening {
    pub schema: String,
    pub args: Vec<String>,
    pub kind: HappeningKind,
    pub precondition: Condition<usize>,
    pub effects: Vec<Effect<usize>>,
}

impl GroundHappening {
    /// `schema` or `schema arg1 arg2`, the form used in plan files.
    pub fn name(&self) -> String {
        if self.args.is_empty() {
            self.schema.clone()
        } else {
            format!("{} {}", self.schema, self.args.join(" "))
        }
    }
}

/// Net repair edits applied on top of the problem's initial values, keyed by
/// (numeric slot, |delta| bit pattern) with a signed MMO count.
///
/// Effective values are always recomputed from the untouched base, so removing
/// edits restores the original values bit for bit.
pub(crate) type EditLedger = BTreeMap<(usize, u64), i64>;

/// A fully grounded planning model: flattened fluent table, grounded
/// happenings and the initial state.
#[derive(Debug, Clone)]
pub struct GroundedModel {
    pub domain_name: String,
    pub problem_name: String,
    pub objects: Vec<TypedParam>,
    fluents: Vec<FluentInfo>,
    index: HashMap<FluentId, usize>,
    bool_fluents: Vec<usize>,
    num_fluents: Vec<usize>,
    happenings: Vec<GroundHappening>,
    actions: Vec<usize>,
    events: Vec<usize>,
    processes: Vec<usize>,
    /// Numeric slots never written by any effect.
    static_nums: Vec<bool>,
    base_initial: State,
    initial: State,
    edits: EditLedger,
    goal: Condition<usize>,
}

impl PartialEq for GroundedModel {
    fn eq(&self, other: &Self) -> bool {
        self.domain_name == other.domain_name
            && self.problem_name == other.problem_name
            && self.fluents == other.fluents
            && self.happenings == other.happenings
            && self.initial.bitwise_eq(&other.initial)
            && self.goal == other.goal
    }
}

impl GroundedModel {
    pub fn fluents(&self) -> &[FluentInfo] {
        &self.fluents
    }

    pub fn fluent(&self, id: &FluentId) -> Option<&FluentInfo> {
        self.index.get(id).map(|&i| &self.fluents[i])
    }

    pub fn numeric_slot(&self, id: &FluentId) -> Option<usize> {
        self.fluent(id)
            .filter(|f| f.kind == FluentKind::Numeric)
            .map(|f| f.slot)
    }

    pub fn bool_slot(&self, id: &FluentId) -> Option<usize> {
        self.fluent(id)
            .filter(|f| f.kind == FluentKind::Boolean)
            .map(|f| f.slot)
    }

    pub fn bool_fluent_id(&self, slot: usize) -> &FluentId {
        &self.fluents[self.bool_fluents[slot]].id
    }

    pub fn num_fluent_id(&self, slot: usize) -> &FluentId {
        &self.fluents[self.num_fluents[slot]].id
    }

    pub fn num_bools(&self) -> usize {
        self.bool_fluents.len()
    }

    pub fn num_nums(&self) -> usize {
        self.num_fluents.len()
    }

    pub fn happenings(&self) -> &[GroundHappening] {
        &self.happenings
    }

    pub fn happening(&self, index: usize) -> &GroundHappening {
        &self.happenings[index]
    }

    /// Indices (into [`happenings`](Self::happenings)) of grounded actions.
    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn events(&self) -> &[usize] {
        &self.events
    }

    pub fn processes(&self) -> &[usize] {
        &self.processes
    }

    /// Finds a grounded action by its plan-file name (`schema arg...`).
    pub fn find_action(&self, schema: &str, args: &[String]) -> Option<usize> {
        self.actions.iter().copied().find(|&i| {
            let h = &self.happenings[i];
            h.schema.eq_ignore_ascii_case(schema) && h.args == args
        })
    }

    pub fn find_action_by_name(&self, name: &str) -> Option<usize> {
        let mut parts = name.split_whitespace();
        let schema = parts.next()?;
        let args: Vec<String> = parts.map(str::to_string).collect();
        self.find_action(schema, &args)
    }

    pub fn initial_state(&self) -> &State {
        &self.initial
    }

    pub fn goal(&self) -> &Condition<usize> {
        &self.goal
    }

    pub fn is_static_numeric(&self, slot: usize) -> bool {
        self.static_nums[slot]
    }

    /// Zero-arity numeric fluents no effect ever writes: the model's
    /// constants. These are what repair edits and what the agent never
    /// observes directly.
    pub fn parameter_slots(&self) -> Vec<usize> {
        (0..self.num_fluents.len())
            .filter(|&s| self.static_nums[s] && self.num_fluent_id(s).args.is_empty())
            .collect()
    }

    /// Copies the model's parameter values into `state`.
    pub fn rebase(&self, state: &State) -> State {
        let mut out = state.clone();
        for slot in self.parameter_slots() {
            out.nums[slot] = self.initial.nums[slot];
        }
        out
    }

    pub(crate) fn edits(&self) -> &EditLedger {
        &self.edits
    }

    /// Net amount added to each edited parameter's original value.
    pub fn net_edits(&self) -> BTreeMap<FluentId, f64> {
        let mut out = BTreeMap::new();
        for (&(slot, bits), &count) in &self.edits {
            if count != 0 {
                *out.entry(self.num_fluent_id(slot).clone()).or_insert(0.0) += count as f64 * f64::from_bits(bits);
            }
        }
        out
    }

    pub(crate) fn set_edits(&mut self, edits: EditLedger) {
        self.edits = edits;
        self.recompute_initial();
    }

    fn recompute_initial(&mut self) {
        let mut initial = self.base_initial.clone();
        let mut per_slot: BTreeMap<usize, f64> = BTreeMap::new();
        for (&(slot, bits), &count) in &self.edits {
            if count != 0 {
                *per_slot.entry(slot).or_insert(0.0) += count as f64 * f64::from_bits(bits);
            }
        }
        for (slot, delta) in per_slot {
            initial.nums[slot] = self.base_initial.nums[slot] + delta;
        }
        self.initial = initial;
    }

    /// Restricts the model to a subset of action schemas (events and
    /// processes are always kept, as is the full fluent table).
    #[must_use]
    pub fn restrict_actions(&self, schemas: &[String]) -> GroundedModel {
        let mut out = self.clone();
        out.actions = self
            .actions
            .iter()
            .copied()
            .filter(|&i| schemas.iter().any(|s| s == &self.happenings[i].schema))
            .collect();
        out
    }

    /// Resolves a closed (object-only) lifted condition against this model.
    pub fn ground_condition(&self, cond: &Condition<Atom>) -> Result<Condition<usize>, ModelError> {
        let empty = HashMap::new();
        cond.try_map(
            &mut |a| self.resolve(a, &empty, FluentKind::Boolean),
            &mut |a| self.resolve(a, &empty, FluentKind::Numeric),
        )
    }

    pub fn ground_expr(&self, expr: &Expr<Atom>) -> Result<Expr<usize>, ModelError> {
        let empty = HashMap::new();
        expr.try_map(&mut |a| self.resolve(a, &empty, FluentKind::Numeric))
    }

    fn resolve(
        &self,
        atom: &Atom,
        binding: &HashMap<&str, &str>,
        kind: FluentKind,
    ) -> Result<usize, ModelError> {
        let id = bind_atom(atom, binding)?;
        let info = self
            .fluent(&id)
            .ok_or_else(|| ModelError::UnknownFluent(id.to_string()))?;
        if info.kind != kind {
            return Err(ModelError::KindMismatch(id.to_string()));
        }
        Ok(info.slot)
    }
}

fn bind_atom(atom: &Atom, binding: &HashMap<&str, &str>) -> Result<FluentId, ModelError> {
    let args = atom
        .args
        .iter()
        .map(|t| match t {
            Term::Object(o) => Ok(o.clone()),
            Term::Var(v) => binding
                .get(v.as_str())
                .map(|o| o.to_string())
                .ok_or_else(|| ModelError::UnboundVariable(v.clone())),
        })
        .collect::<Result<_, _>>()?;
    Ok(FluentId {
        name: atom.name.clone(),
        args,
    })
}

/// Enumerates every tuple of objects matching `params`' types, in a stable
/// order (objects in declaration order, last parameter varying fastest).
fn object_tuples<'a>(
    params: &[TypedParam],
    by_type: &BTreeMap<&str, Vec<&'a str>>,
    all: &[&'a str],
) -> Vec<Vec<&'a str>> {
    let mut tuples: Vec<Vec<&str>> = vec![Vec::new()];
    for p in params {
        let candidates: &[&str] = if p.ty == super::ROOT_TYPE {
            all
        } else {
            by_type.get(p.ty.as_str()).map(Vec::as_slice).unwrap_or(&[])
        };
        let mut next = Vec::with_capacity(tuples.len() * candidates.len());
        for t in &tuples {
            for c in candidates {
                let mut t2 = t.clone();
                t2.push(*c);
                next.push(t2);
            }
        }
        tuples = next;
    }
    tuples
}

fn check_schema_types(domain: &DomainModel, schema: &FluentSchema) -> Result<(), ModelError> {
    for p in &schema.params {
        if !domain.has_type(&p.ty) {
            return Err(ModelError::UndeclaredType(p.ty.clone()));
        }
    }
    Ok(())
}

/// Instantiates every lifted happening over type-compatible object tuples and
/// builds the dense fluent table and initial state.
pub fn ground(domain: &DomainModel, problem: &ProblemSpec) -> Result<GroundedModel, ModelError> {
    if !problem.domain.eq_ignore_ascii_case(&domain.name) {
        return Err(ModelError::DomainMismatch {
            domain: domain.name.clone(),
            problem: problem.domain.clone(),
        });
    }
    for o in &problem.objects {
        if !domain.has_type(&o.ty) {
            return Err(ModelError::UndeclaredType(o.ty.clone()));
        }
    }
    let mut by_type: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for o in &problem.objects {
        by_type.entry(o.ty.as_str()).or_default().push(o.name.as_str());
    }
    let all_objects: Vec<&str> = problem.objects.iter().map(|o| o.name.as_str()).collect();

    for p in &domain.predicates {
        if domain.function(&p.name).is_some() {
            return Err(ModelError::KindMismatch(p.name.clone()));
        }
    }

    // Fluent table: predicates first, then functions, each over object tuples.
    let mut fluents = Vec::new();
    let mut index = HashMap::new();
    let mut bool_fluents = Vec::new();
    let mut num_fluents = Vec::new();
    for (schemas, kind) in [
        (&domain.predicates, FluentKind::Boolean),
        (&domain.functions, FluentKind::Numeric),
    ] {
        for schema in schemas {
            check_schema_types(domain, schema)?;
            for tuple in object_tuples(&schema.params, &by_type, &all_objects) {
                let id = FluentId {
                    name: schema.name.clone(),
                    args: tuple.iter().map(|s| s.to_string()).collect(),
                };
                let slot = match kind {
                    FluentKind::Boolean => {
                        bool_fluents.push(fluents.len());
                        bool_fluents.len() - 1
                    }
                    FluentKind::Numeric => {
                        num_fluents.push(fluents.len());
                        num_fluents.len() - 1
                    }
                };
                index.insert(id.clone(), fluents.len());
                fluents.push(super::FluentInfo {
                    id,
                    kind: kind.clone(),
                    slot,
                });
            }
        }
    }

    let mut model = GroundedModel {
        domain_name: domain.name.clone(),
        problem_name: problem.name.clone(),
        objects: problem.objects.clone(),
        fluents,
        index,
        bool_fluents,
        num_fluents,
        happenings: Vec::new(),
        actions: Vec::new(),
        events: Vec::new(),
        processes: Vec::new(),
        static_nums: Vec::new(),
        base_initial: State::default(),
        initial: State::default(),
        edits: BTreeMap::new(),
        goal: Condition::empty(),
    };

    let object_types: HashMap<&str, &str> = problem
        .objects
        .iter()
        .map(|o| (o.name.as_str(), o.ty.as_str()))
        .collect();
    let check_atom = |atom: &Atom, kind: FluentKind| -> Result<(), ModelError> {
        let schema = match kind {
            FluentKind::Boolean => domain.predicate(&atom.name),
            FluentKind::Numeric => domain.function(&atom.name),
        };
        let schema = match schema {
            Some(s) => s,
            None => {
                let other = match kind {
                    FluentKind::Boolean => domain.function(&atom.name),
                    FluentKind::Numeric => domain.predicate(&atom.name),
                };
                return Err(if other.is_some() {
                    ModelError::KindMismatch(atom.name.clone())
                } else {
                    ModelError::UnknownFluent(atom.name.clone())
                });
            }
        };
        if schema.params.len() != atom.args.len() {
            return Err(ModelError::Arity {
                name: atom.name.clone(),
                expected: schema.params.len(),
                got: atom.args.len(),
            });
        }
        for t in &atom.args {
            if let Term::Object(o) = t {
                if !object_types.contains_key(o.as_str()) {
                    return Err(ModelError::UndeclaredObject(o.clone()));
                }
            }
        }
        Ok(())
    };

    let mut happenings = Vec::new();
    for h in &domain.happenings {
        h.check_effect_kinds()?;
        for p in &h.params {
            if !domain.has_type(&p.ty) {
                return Err(ModelError::UndeclaredType(p.ty.clone()));
            }
        }
        // Arity and kind checks happen once on the lifted form so that an
        // action with zero instances still reports malformed atoms.
        check_lifted_happening(h, &check_atom)?;
        for tuple in object_tuples(&h.params, &by_type, &all_objects) {
            let binding: HashMap<&str, &str> = h
                .params
                .iter()
                .map(|p| p.name.as_str())
                .zip(tuple.iter().copied())
                .collect();
            let precondition = h.precondition.try_map(
                &mut |a| model.resolve(a, &binding, FluentKind::Boolean),
                &mut |a| model.resolve(a, &binding, FluentKind::Numeric),
            )?;
            let effects = h
                .effects
                .iter()
                .map(|e| {
                    e.try_map(
                        &mut |a| model.resolve(a, &binding, FluentKind::Boolean),
                        &mut |a| model.resolve(a, &binding, FluentKind::Numeric),
                    )
                })
                .collect::<Result<Vec<_>, _>>()?;
            happenings.push(GroundHappening {
                schema: h.name.clone(),
                args: tuple.iter().map(|s| s.to_string()).collect(),
                kind: h.kind,
                precondition,
                effects,
            });
        }
    }
    for (i, h) in happenings.iter().enumerate() {
        match h.kind {
            HappeningKind::Action => model.actions.push(i),
            HappeningKind::Event => model.events.push(i),
            HappeningKind::Process => model.processes.push(i),
        }
    }
    let mut static_nums = vec![true; model.num_fluents.len()];
    for h in &happenings {
        for e in &h.effects {
            if !matches!(e, Effect::SetBool(..)) {
                static_nums[*e.target()] = false;
            }
        }
    }
    model.happenings = happenings;
    model.static_nums = static_nums;

    // Initial state: booleans default to false, numerics must be assigned.
    let mut bools = vec![false; model.bool_fluents.len()];
    let mut nums = vec![f64::NAN; model.num_fluents.len()];
    let mut seen = HashSet::new();
    let empty = HashMap::new();
    for fact in &problem.init {
        let (kind, atom) = match fact {
            InitFact::Bool { atom, .. } => (FluentKind::Boolean, atom),
            InitFact::Numeric { atom, .. } => (FluentKind::Numeric, atom),
        };
        check_atom(atom, kind.clone())?;
        let id = bind_atom(atom, &empty)?;
        if !seen.insert(id.clone()) {
            return Err(ModelError::DuplicateInit(id.to_string()));
        }
        let slot = model.resolve(atom, &empty, kind)?;
        match fact {
            InitFact::Bool { value, .. } => bools[slot] = *value,
            InitFact::Numeric { value, .. } => nums[slot] = *value,
        }
    }
    if let Some(slot) = nums.iter().position(|v| v.is_nan()) {
        return Err(ModelError::Uninitialized(model.num_fluent_id(slot).to_string()));
    }
    model.base_initial = State::new(bools, nums, 0.0);
    model.initial = model.base_initial.clone();

    let goal = &problem.goal;
    let mut goal_check = Ok(());
    for lit in &goal.literals {
        match lit {
            super::Literal::Atom { fluent, .. } => {
                if goal_check.is_ok() {
                    goal_check = check_atom(fluent, FluentKind::Boolean);
                }
            }
            super::Literal::Compare { lhs, rhs, .. } => {
                for e in [lhs, rhs] {
                    e.for_each_fluent(&mut |a: &Atom| {
                        if goal_check.is_ok() {
                            goal_check = check_atom(a, FluentKind::Numeric);
                        }
                    });
                }
            }
        }
    }
    goal_check?;
    model.goal = model.ground_condition(goal)?;
    Ok(model)
}

fn check_lifted_happening(
    h: &Happening,
    check_atom: &impl Fn(&Atom, FluentKind) -> Result<(), ModelError>,
) -> Result<(), ModelError> {
    let vars: HashSet<&str> = h.params.iter().map(|p| p.name.as_str()).collect();
    let mut result = Ok(());
    let mut visit = |a: &Atom, kind: FluentKind| {
        if result.is_err() {
            return;
        }
        result = check_atom(a, kind);
        if result.is_ok() {
            for t in &a.args {
                if let Term::Var(v) = t {
                    if !vars.contains(v.as_str()) {
                        result = Err(ModelError::UnboundVariable(v.clone()));
                        return;
                    }
                }
            }
        }
    };
    for lit in &h.precondition.literals {
        match lit {
            super::Literal::Atom { fluent, .. } => visit(fluent, FluentKind::Boolean),
            super::Literal::Compare { lhs, rhs, .. } => {
                lhs.for_each_fluent(&mut |a| visit(a, FluentKind::Numeric));
                rhs.for_each_fluent(&mut |a| visit(a, FluentKind::Numeric));
            }
        }
    }
    for e in &h.effects {
        match e {
            Effect::SetBool(a, _) => visit(a, FluentKind::Boolean),
            Effect::Assign(a, x) | Effect::Increase(a, x) | Effect::Decrease(a, x) | Effect::Rate(a, x) => {
                visit(a, FluentKind::Numeric);
                x.for_each_fluent(&mut |a| visit(a, FluentKind::Numeric));
                if !matches!(e, Effect::Rate(..)) && x.contains_time_delta() {
                    return Err(ModelError::TimeMarker);
                }
            }
        }
    }
    result
}
