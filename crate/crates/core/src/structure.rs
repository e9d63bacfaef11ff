//! Syntactic structures `⟨I, C, O⟩`.
//!
//! Individuals, concepts and operators share one namespace. Every structure
//! carries the distinguished individuals `true`, `false`, `undefined`, the
//! concepts `Bool`, `RuleC`, `DerivationC`, `AssertionC`, and the builtin
//! operators `Pr`, `Seq`, `|` (conditional assertion) and `•` (string
//! concatenation). The arithmetic flag adds `Real` and `+ - * /`.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use indexmap::{IndexMap, IndexSet};

use crate::term::{ops, sym, Sym, Value, EMPTY_DERIVATION, FALSE, TRUE, UNDEFINED};

pub const BOOL: &str = "Bool";
pub const REAL: &str = "Real";
pub const RULE_C: &str = "RuleC";
pub const DERIVATION_C: &str = "DerivationC";
pub const ASSERTION_C: &str = "AssertionC";
/// Union of the three reification concepts; the domain of `Pr`.
pub const REIFIED: &str = "Reified";

/// Hard cap on materialized concept sizes.
pub const MAX_ENUMERATION: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConceptKind {
    /// Explicit member list, in declaration order.
    Finite(Vec<Sym>),
    /// Strings over the members of `alphabet`, optionally length-bounded.
    Strings { alphabet: Sym, max_len: Option<usize> },
    /// Constructor terms over `atoms`, optionally depth-bounded.
    Terms { atoms: Sym, constructors: Vec<Sym>, max_depth: Option<usize> },
    Real,
    Bool,
    /// Reification concepts: explicit members plus structural membership.
    Reified(Vec<Sym>),
    /// `RuleC ∪ DerivationC ∪ AssertionC`.
    AnyReified,
}

#[derive(Debug, Clone)]
pub struct Concept {
    pub name: Sym,
    pub kind: ConceptKind,
    members: OnceLock<Result<Vec<Value>, StructureError>>,
    index: OnceLock<HashMap<Value, usize>>,
}

impl PartialEq for Concept {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.kind == other.kind
    }
}

impl Concept {
    pub fn new(name: &str, kind: ConceptKind) -> Concept {
        Concept { name: sym(name), kind, members: OnceLock::new(), index: OnceLock::new() }
    }

    pub fn finite(name: &str, members: &[&str]) -> Concept {
        Concept::new(name, ConceptKind::Finite(members.iter().map(|m| sym(m)).collect()))
    }

    fn reset_caches(&mut self) {
        self.members = OnceLock::new();
        self.index = OnceLock::new();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    /// Valued by the world state.
    Fluent,
    /// Builds a structured individual from its arguments.
    Constructor,
    /// Arithmetic and concatenation.
    Builtin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    pub name: Sym,
    pub domain: Vec<Sym>,
    /// Concept values written to this operator must belong to. Required for constructors.
    pub range: Option<Sym>,
    pub kind: OperatorKind,
}

impl Operator {
    pub fn fluent(name: &str, domain: &[&str], range: Option<&str>) -> Operator {
        Operator {
            name: sym(name),
            domain: domain.iter().map(|d| sym(d)).collect(),
            range: range.map(sym),
            kind: OperatorKind::Fluent,
        }
    }

    pub fn constructor(name: &str, domain: &[&str], range: &str) -> Operator {
        Operator {
            name: sym(name),
            domain: domain.iter().map(|d| sym(d)).collect(),
            range: Some(sym(range)),
            kind: OperatorKind::Constructor,
        }
    }

    pub fn arity(&self) -> usize {
        self.domain.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StructureError {
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("concept `{0}` is infinite and cannot be enumerated")]
    InfiniteConcept(String),
    #[error("concept `{0}` has more than {MAX_ENUMERATION} members")]
    TooLarge(String),
    #[error("name `{0}` is already declared")]
    Duplicate(String),
}

/// Why a structure is ill-formed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub entity: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Structure {
    individuals: IndexSet<Sym>,
    concepts: IndexMap<Sym, Concept>,
    operators: IndexMap<Sym, Operator>,
    arithmetic: bool,
    rule_ids: IndexSet<Sym>,
}

impl Default for Structure {
    fn default() -> Self {
        Structure::new()
    }
}

impl Structure {
    /// A structure holding only the builtins, with arithmetic enabled.
    pub fn new() -> Structure {
        Structure::with_arithmetic(true)
    }

    pub fn with_arithmetic(arithmetic: bool) -> Structure {
        let mut s = Structure {
            individuals: IndexSet::new(),
            concepts: IndexMap::new(),
            operators: IndexMap::new(),
            arithmetic,
            rule_ids: IndexSet::new(),
        };
        for i in [TRUE, FALSE, UNDEFINED, EMPTY_DERIVATION] {
            s.individuals.insert(sym(i));
        }
        s.push_concept(Concept::new(BOOL, ConceptKind::Bool));
        s.push_concept(Concept::new(RULE_C, ConceptKind::Reified(Vec::new())));
        s.push_concept(Concept::new(DERIVATION_C, ConceptKind::Reified(vec![sym(EMPTY_DERIVATION)])));
        s.push_concept(Concept::new(ASSERTION_C, ConceptKind::Reified(Vec::new())));
        s.push_concept(Concept::new(REIFIED, ConceptKind::AnyReified));
        s.push_operator(Operator::fluent(ops::PR, &[REIFIED], arithmetic.then_some(REAL)));
        s.push_operator(Operator::fluent(ops::CD, &[], Some(DERIVATION_C)));
        s.push_operator(Operator::constructor(ops::SEQ, &[DERIVATION_C, RULE_C], DERIVATION_C));
        s.push_operator(Operator::constructor(ops::GIVEN, &[ASSERTION_C, ASSERTION_C], ASSERTION_C));
        s.push_operator(Operator { name: sym(ops::CONCAT), domain: vec![], range: None, kind: OperatorKind::Builtin });
        if arithmetic {
            s.push_concept(Concept::new(REAL, ConceptKind::Real));
            for op in [ops::ADD, ops::SUB, ops::MUL, ops::DIV] {
                s.push_operator(Operator {
                    name: sym(op),
                    domain: vec![sym(REAL), sym(REAL)],
                    range: Some(sym(REAL)),
                    kind: OperatorKind::Builtin,
                });
            }
        }
        s
    }

    fn push_concept(&mut self, c: Concept) {
        self.concepts.insert(c.name.clone(), c);
    }

    fn push_operator(&mut self, o: Operator) {
        self.operators.insert(o.name.clone(), o);
    }

    pub fn has_arithmetic(&self) -> bool {
        self.arithmetic
    }

    pub fn is_builtin_name(name: &str) -> bool {
        matches!(
            name,
            TRUE | FALSE
                | UNDEFINED
                | EMPTY_DERIVATION
                | BOOL
                | REAL
                | RULE_C
                | DERIVATION_C
                | ASSERTION_C
                | REIFIED
                | ops::PR
                | ops::CD
                | ops::SEQ
                | ops::GIVEN
                | ops::CONCAT
                | ops::ADD
                | ops::SUB
                | ops::MUL
                | ops::DIV
        )
    }

    fn name_taken(&self, name: &str) -> bool {
        self.individuals.contains(name) || self.concepts.contains_key(name) || self.operators.contains_key(name)
    }

    /// Adds an individual. Re-adding an existing individual is a no-op.
    pub fn add_individual(&mut self, name: &str) -> Result<(), StructureError> {
        if self.individuals.contains(name) {
            return Ok(());
        }
        if self.name_taken(name) {
            return Err(StructureError::Duplicate(name.to_string()));
        }
        self.individuals.insert(sym(name));
        Ok(())
    }

    /// Adds a concept. Finite members are declared as individuals if new.
    pub fn add_concept(&mut self, concept: Concept) -> Result<(), StructureError> {
        if self.name_taken(&concept.name) {
            return Err(StructureError::Duplicate(concept.name.to_string()));
        }
        if let ConceptKind::Finite(ms) = &concept.kind {
            for m in ms {
                self.add_individual(m)?;
            }
        }
        self.push_concept(concept);
        Ok(())
    }

    /// Adds a concept without checking anything; for building invalid structures in tests
    /// and for the DSL, which reports problems through `validate_structure`.
    pub fn add_concept_unchecked(&mut self, concept: Concept) {
        self.push_concept(concept);
    }

    pub fn add_operator(&mut self, op: Operator) -> Result<(), StructureError> {
        if self.name_taken(&op.name) {
            return Err(StructureError::Duplicate(op.name.to_string()));
        }
        self.push_operator(op);
        Ok(())
    }

    /// Adds the operator unless one with the same name exists (used by transforms).
    pub fn ensure_operator(&mut self, op: Operator) {
        if !self.operators.contains_key(&op.name) {
            self.push_operator(op);
        }
    }

    pub fn add_operator_unchecked(&mut self, op: Operator) {
        self.push_operator(op);
    }

    /// Adds an individual to one of the reification concepts (e.g. an assertion id).
    pub fn add_reified_member(&mut self, concept: &str, name: &str) -> Result<(), StructureError> {
        self.add_individual(name)?;
        let c = self
            .concepts
            .get_mut(concept)
            .ok_or_else(|| StructureError::UnknownConcept(concept.to_string()))?;
        if let ConceptKind::Reified(ms) = &mut c.kind {
            if !ms.iter().any(|m| &**m == name) {
                ms.push(sym(name));
            }
            c.reset_caches();
            Ok(())
        } else {
            Err(StructureError::UnknownConcept(concept.to_string()))
        }
    }

    /// Registers rule ids; they become members of `RuleC`.
    pub fn register_rule_id(&mut self, id: &str) {
        self.rule_ids.insert(sym(id));
        if let Some(c) = self.concepts.get_mut(RULE_C) {
            if let ConceptKind::Reified(ms) = &mut c.kind {
                if !ms.iter().any(|m| &**m == id) {
                    ms.push(sym(id));
                }
            }
            c.reset_caches();
        }
    }

    pub fn is_rule_id(&self, id: &str) -> bool {
        self.rule_ids.contains(id)
    }

    pub fn rule_ids(&self) -> impl Iterator<Item = &Sym> {
        self.rule_ids.iter()
    }

    pub fn individuals(&self) -> impl Iterator<Item = &Sym> {
        self.individuals.iter()
    }

    pub fn concepts(&self) -> impl Iterator<Item = &Concept> {
        self.concepts.values()
    }

    pub fn operators(&self) -> impl Iterator<Item = &Operator> {
        self.operators.values()
    }

    pub fn has_individual(&self, name: &str) -> bool {
        self.individuals.contains(name)
    }

    pub fn concept(&self, name: &str) -> Option<&Concept> {
        self.concepts.get(name)
    }

    pub fn operator(&self, name: &str) -> Option<&Operator> {
        self.operators.get(name)
    }

    /// Membership of a value in a concept. `undefined` belongs to nothing.
    pub fn contains(&self, concept: &str, value: &Value) -> bool {
        let Some(c) = self.concepts.get(concept) else {
            return false;
        };
        if value.is_undefined() {
            return false;
        }
        match &c.kind {
            ConceptKind::Finite(ms) => match value {
                Value::Ind(v) => ms.contains(v),
                Value::App(op, _) => self.constructed_into(op, concept),
                _ => false,
            },
            ConceptKind::Real => matches!(value, Value::Real(_)),
            ConceptKind::Bool => matches!(value, Value::Ind(v) if &**v == TRUE || &**v == FALSE),
            ConceptKind::Strings { alphabet, max_len } => match value {
                Value::Str(s) => {
                    max_len.is_none_or(|m| s.len() <= m)
                        && s.iter().all(|x| self.contains(alphabet, &Value::Ind(x.clone())))
                }
                _ => false,
            },
            ConceptKind::Terms { atoms, constructors, max_depth } => {
                self.term_member(value, atoms, constructors, *max_depth)
            }
            ConceptKind::Reified(ms) => match value {
                Value::Ind(v) => {
                    ms.contains(v) || (concept == RULE_C && self.is_rule_instance_id(v))
                }
                Value::App(op, _) => self.constructed_into(op, concept),
                _ => false,
            },
            ConceptKind::AnyReified => {
                self.contains(RULE_C, value) || self.contains(DERIVATION_C, value) || self.contains(ASSERTION_C, value)
            }
        }
    }

    fn constructed_into(&self, op: &str, concept: &str) -> bool {
        self.operators
            .get(op)
            .is_some_and(|o| o.kind == OperatorKind::Constructor && o.range.as_deref() == Some(concept))
    }

    fn is_rule_instance_id(&self, v: &str) -> bool {
        match v.find('[') {
            Some(i) if v.ends_with(']') => self.rule_ids.contains(&v[..i]),
            _ => false,
        }
    }

    fn term_member(&self, value: &Value, atoms: &str, ctors: &[Sym], max_depth: Option<usize>) -> bool {
        fn depth(
            s: &Structure,
            v: &Value,
            atoms: &str,
            ctors: &[Sym],
        ) -> Option<usize> {
            match v {
                Value::Ind(_) => s.contains(atoms, v).then_some(0),
                Value::App(op, args) if ctors.contains(op) => {
                    let o = s.operators.get(op)?;
                    if o.arity() != args.len() {
                        return None;
                    }
                    let mut d = 0;
                    for a in args {
                        d = d.max(depth(s, a, atoms, ctors)?);
                    }
                    Some(d + 1)
                }
                _ => None,
            }
        }
        match depth(self, value, atoms, ctors) {
            Some(d) => max_depth.is_none_or(|m| d <= m),
            None => false,
        }
    }

    /// Depth of a constructor term (atoms have depth 0).
    pub fn term_depth(value: &Value) -> usize {
        match value {
            Value::App(_, args) => 1 + args.iter().map(Structure::term_depth).max().unwrap_or(0),
            _ => 0,
        }
    }

    /// Members in enumeration order. Cached per concept.
    pub fn members(&self, concept: &str) -> Result<&[Value], StructureError> {
        let c = self
            .concepts
            .get(concept)
            .ok_or_else(|| StructureError::UnknownConcept(concept.to_string()))?;
        let res = c.members.get_or_init(|| self.compute_members(c));
        match res {
            Ok(v) => Ok(v.as_slice()),
            Err(e) => Err(e.clone()),
        }
    }

    /// Position of `value` in the concept's enumeration order, when enumerable.
    pub fn rank(&self, concept: &str, value: &Value) -> Option<usize> {
        let c = self.concepts.get(concept)?;
        if let ConceptKind::Strings { alphabet, .. } = &c.kind {
            // length-lexicographic rank without materializing the concept
            let alpha = self.members(alphabet).ok()?;
            let Value::Str(s) = value else { return None };
            let k = alpha.len();
            let mut below = 0usize;
            let mut pow = 1usize;
            for _ in 0..s.len() {
                below = below.checked_add(pow)?;
                pow = pow.checked_mul(k)?;
            }
            let mut within = 0usize;
            for x in s {
                let i = alpha.iter().position(|a| matches!(a, Value::Ind(n) if n == x))?;
                within = within.checked_mul(k)?.checked_add(i)?;
            }
            return below.checked_add(within);
        }
        self.members(concept).ok()?;
        let idx = c.index.get_or_init(|| {
            let ms = c.members.get().and_then(|r| r.as_ref().ok()).cloned().unwrap_or_default();
            ms.into_iter().enumerate().map(|(i, v)| (v, i)).collect()
        });
        idx.get(value).copied()
    }

    fn compute_members(&self, c: &Concept) -> Result<Vec<Value>, StructureError> {
        let name = c.name.to_string();
        match &c.kind {
            ConceptKind::Finite(ms) | ConceptKind::Reified(ms) => Ok(ms.iter().map(|m| Value::Ind(m.clone())).collect()),
            ConceptKind::Bool => Ok(vec![Value::truth(true), Value::truth(false)]),
            ConceptKind::Real | ConceptKind::AnyReified => Err(StructureError::InfiniteConcept(name)),
            ConceptKind::Strings { alphabet, max_len } => {
                let Some(max) = max_len else {
                    return Err(StructureError::InfiniteConcept(name));
                };
                let alpha: Vec<Sym> = self
                    .members(alphabet)?
                    .iter()
                    .filter_map(|v| match v {
                        Value::Ind(s) => Some(s.clone()),
                        _ => None,
                    })
                    .collect();
                let mut out = vec![Value::Str(Vec::new())];
                let mut layer: Vec<Vec<Sym>> = vec![Vec::new()];
                for _ in 0..*max {
                    let mut next = Vec::with_capacity(layer.len() * alpha.len());
                    for prefix in &layer {
                        for a in &alpha {
                            let mut s = prefix.clone();
                            s.push(a.clone());
                            next.push(s);
                        }
                    }
                    if out.len() + next.len() > MAX_ENUMERATION {
                        return Err(StructureError::TooLarge(name));
                    }
                    out.extend(next.iter().cloned().map(Value::Str));
                    layer = next;
                }
                Ok(out)
            }
            ConceptKind::Terms { atoms, constructors, max_depth } => {
                let Some(max) = max_depth else {
                    return Err(StructureError::InfiniteConcept(name));
                };
                // layers[d] = terms of depth exactly d
                let mut layers: Vec<Vec<Value>> = vec![self.members(atoms)?.to_vec()];
                let mut total = layers[0].len();
                for d in 1..=*max {
                    let below: Vec<Value> = layers.iter().flatten().cloned().collect();
                    let mut layer = Vec::new();
                    for ctor in constructors {
                        let arity = self.operators.get(ctor).map(|o| o.arity()).unwrap_or(0);
                        if arity == 0 {
                            continue;
                        }
                        if below.is_empty() {
                            continue;
                        }
                        let mut idx = vec![0usize; arity];
                        'odometer: loop {
                            let args: Vec<Value> = idx.iter().map(|&i| below[i].clone()).collect();
                            if args.iter().any(|a| Structure::term_depth(a) == d - 1) {
                                layer.push(Value::App(ctor.clone(), args));
                                if total + layer.len() > MAX_ENUMERATION {
                                    return Err(StructureError::TooLarge(name));
                                }
                            }
                            let mut k = arity;
                            loop {
                                if k == 0 {
                                    break 'odometer;
                                }
                                k -= 1;
                                idx[k] += 1;
                                if idx[k] < below.len() {
                                    break;
                                }
                                idx[k] = 0;
                            }
                        }
                    }
                    total += layer.len();
                    layers.push(layer);
                }
                Ok(layers.into_iter().flatten().collect())
            }
        }
    }
}

/// Checks concept and operator invariants; empty iff the structure is well formed.
pub fn validate_structure(s: &Structure) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut diag = |entity: &str, message: String| out.push(Diagnostic { entity: entity.to_string(), message });

    for c in s.concepts.values() {
        if s.individuals.contains(&c.name) {
            diag(&c.name, "concept name clashes with an individual".into());
        }
        match &c.kind {
            ConceptKind::Finite(ms) | ConceptKind::Reified(ms) => {
                let mut seen = IndexSet::new();
                for m in ms {
                    if !s.individuals.contains(m) {
                        diag(&c.name, format!("member `{m}` is not a declared individual"));
                    }
                    if !seen.insert(m) {
                        diag(&c.name, format!("member `{m}` listed twice"));
                    }
                }
            }
            ConceptKind::Strings { alphabet, .. } => {
                if !s.concepts.contains_key(alphabet) {
                    diag(&c.name, format!("alphabet concept `{alphabet}` does not exist"));
                }
            }
            ConceptKind::Terms { atoms, constructors, .. } => {
                if !s.concepts.contains_key(atoms) {
                    diag(&c.name, format!("atom concept `{atoms}` does not exist"));
                }
                for k in constructors {
                    match s.operators.get(k) {
                        Some(o) if o.kind == OperatorKind::Constructor => {}
                        _ => diag(&c.name, format!("`{k}` is not a constructor")),
                    }
                }
            }
            _ => {}
        }
    }
    for o in s.operators.values() {
        if s.individuals.contains(&o.name) || s.concepts.contains_key(&o.name) {
            diag(&o.name, "operator name clashes with another declaration".into());
        }
        for d in &o.domain {
            if !s.concepts.contains_key(d) {
                diag(&o.name, format!("domain concept `{d}` does not exist"));
            }
        }
        match (&o.range, o.kind) {
            (Some(r), _) if !s.concepts.contains_key(r) => {
                diag(&o.name, format!("range concept `{r}` does not exist"));
            }
            (None, OperatorKind::Constructor) => diag(&o.name, "constructor needs a range concept".into()),
            _ => {}
        }
    }
    out
}
