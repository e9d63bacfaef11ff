//! Ground and schema production rules.

use std::fmt;

use crate::eval::{holds_all, EvalError};
use crate::state::WorldState;
use crate::structure::{OperatorKind, Structure, StructureError, MAX_ENUMERATION};
use crate::term::{sym, Assertion, Sym, Term, Value};

pub mod matching;

/// `x : C`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub var: Sym,
    pub concept: Sym,
}

impl VarDecl {
    pub fn new(var: &str, concept: &str) -> VarDecl {
        VarDecl { var: sym(var), concept: sym(concept) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundRule {
    pub id: Sym,
    pub antecedent: Vec<Assertion>,
    pub consequent: Assertion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemaRule {
    pub id: Sym,
    pub decls: Vec<VarDecl>,
    pub antecedent: Vec<Assertion>,
    pub consequent: Assertion,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rule {
    Ground(GroundRule),
    Schema(SchemaRule),
}

/// One value per declared variable, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Assignment(pub Vec<(Sym, Value)>);

impl Assignment {
    pub fn get(&self, var: &str) -> Option<&Value> {
        self.0.iter().find(|(v, _)| &**v == var).map(|(_, val)| val)
    }

    pub fn lookup(&self) -> impl Fn(&str) -> Option<Term> + '_ {
        move |v| self.get(v).map(Value::to_term)
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (v, val)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}={val}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RuleError {
    #[error("rule `{rule}`: variable `{var}` is not declared")]
    UndeclaredVariable { rule: String, var: String },
    #[error("rule `{rule}`: variable `{var}` declared twice")]
    DuplicateVariable { rule: String, var: String },
    #[error("rule `{rule}`: no value for variable `{var}`")]
    MissingVariable { rule: String, var: String },
    #[error("rule `{rule}`: `{var}` is not a declared variable")]
    ExtraVariable { rule: String, var: String },
    #[error("rule `{rule}`: `{value}` is not in concept `{concept}`")]
    OutOfConcept { rule: String, value: String, concept: String },
    #[error("rule `{rule}`: consequent `{lhs}` is not assignable")]
    NotAssignable { rule: String, lhs: String },
    #[error("rule `{rule}`: negated consequent")]
    NegatedConsequent { rule: String },
    #[error("rule `{rule}` has more than {limit} instances")]
    TooManyInstances { rule: String, limit: usize },
    #[error("rule `{rule}`: {source}")]
    Structure { rule: String, source: StructureError },
    #[error("rule `{rule}`: {source}")]
    Eval { rule: String, source: EvalError },
}

/// Assignable terms: fluent applications, or tuples of them.
pub fn is_assignable(t: &Term, s: &Structure) -> bool {
    match t {
        Term::App(op, _) => s.operator(op).is_some_and(|o| o.kind == OperatorKind::Fluent),
        Term::Tuple(items) => items.iter().all(|i| is_assignable(i, s)),
        _ => false,
    }
}

fn check_consequent(id: &str, c: &Assertion, s: &Structure) -> Result<(), RuleError> {
    if c.negated {
        return Err(RuleError::NegatedConsequent { rule: id.to_string() });
    }
    if !is_assignable(&c.lhs, s) {
        return Err(RuleError::NotAssignable { rule: id.to_string(), lhs: c.lhs.to_string() });
    }
    Ok(())
}

impl GroundRule {
    pub fn new(id: &str, antecedent: Vec<Assertion>, consequent: Assertion) -> GroundRule {
        GroundRule { id: sym(id), antecedent, consequent }
    }

    pub fn validate(&self, s: &Structure) -> Result<(), RuleError> {
        let mut vars = Vec::new();
        self.antecedent.iter().for_each(|a| a.vars(&mut vars));
        self.consequent.vars(&mut vars);
        if let Some(v) = vars.first() {
            return Err(RuleError::UndeclaredVariable { rule: self.id.to_string(), var: v.to_string() });
        }
        check_consequent(&self.id, &self.consequent, s)
    }

    pub fn as_schema(&self) -> SchemaRule {
        SchemaRule {
            id: self.id.clone(),
            decls: Vec::new(),
            antecedent: self.antecedent.clone(),
            consequent: self.consequent.clone(),
        }
    }
}

impl SchemaRule {
    pub fn new(id: &str, decls: Vec<VarDecl>, antecedent: Vec<Assertion>, consequent: Assertion) -> SchemaRule {
        SchemaRule { id: sym(id), decls, antecedent, consequent }
    }

    pub fn vars(&self) -> Vec<Sym> {
        let mut vars = Vec::new();
        self.antecedent.iter().for_each(|a| a.vars(&mut vars));
        self.consequent.vars(&mut vars);
        vars
    }

    pub fn validate(&self, s: &Structure) -> Result<(), RuleError> {
        let id = self.id.to_string();
        for (i, d) in self.decls.iter().enumerate() {
            if self.decls[..i].iter().any(|e| e.var == d.var) {
                return Err(RuleError::DuplicateVariable { rule: id, var: d.var.to_string() });
            }
            if s.concept(&d.concept).is_none() {
                return Err(RuleError::Structure { rule: id, source: StructureError::UnknownConcept(d.concept.to_string()) });
            }
        }
        for v in self.vars() {
            if !self.decls.iter().any(|d| d.var == v) {
                return Err(RuleError::UndeclaredVariable { rule: id, var: v.to_string() });
            }
        }
        check_consequent(&self.id, &self.consequent, s)
    }

    /// Instance id `id[x1=d1,...]`; a rule without declarations keeps its id.
    pub fn instance_id(&self, a: &Assignment) -> Sym {
        if self.decls.is_empty() {
            self.id.clone()
        } else {
            sym(&format!("{}[{}]", self.id, a))
        }
    }

    /// Substitutes an assignment. Checks coverage and concept membership.
    pub fn ground_instance(&self, a: &Assignment, s: &Structure) -> Result<GroundRule, RuleError> {
        let id = self.id.to_string();
        for (v, _) in &a.0 {
            if !self.decls.iter().any(|d| &d.var == v) {
                return Err(RuleError::ExtraVariable { rule: id, var: v.to_string() });
            }
        }
        let mut ordered = Vec::with_capacity(self.decls.len());
        for d in &self.decls {
            let val = a
                .get(&d.var)
                .ok_or_else(|| RuleError::MissingVariable { rule: id.clone(), var: d.var.to_string() })?;
            if !s.contains(&d.concept, val) {
                return Err(RuleError::OutOfConcept { rule: id, value: val.to_string(), concept: d.concept.to_string() });
            }
            ordered.push((d.var.clone(), val.clone()));
        }
        let ordered = Assignment(ordered);
        Ok(self.instantiate(&ordered))
    }

    /// Substitution without checks; `a` must be in declaration order.
    pub(crate) fn instantiate(&self, a: &Assignment) -> GroundRule {
        let lookup = a.lookup();
        GroundRule {
            id: self.instance_id(a),
            antecedent: self.antecedent.iter().map(|x| x.substitute(&lookup)).collect(),
            consequent: self.consequent.substitute(&lookup),
        }
    }

    /// All assignments in lexicographic order of concept member order.
    pub fn assignments(&self, s: &Structure) -> Result<Vec<Assignment>, RuleError> {
        let mut domains = Vec::with_capacity(self.decls.len());
        for d in &self.decls {
            let ms = s
                .members(&d.concept)
                .map_err(|e| RuleError::Structure { rule: self.id.to_string(), source: e })?;
            domains.push(ms);
        }
        let mut out = Vec::new();
        if domains.iter().any(|d| d.is_empty()) {
            return Ok(out);
        }
        let total = domains.iter().try_fold(1usize, |acc, d| acc.checked_mul(d.len()));
        if total.is_none_or(|t| t > MAX_ENUMERATION) {
            return Err(RuleError::TooManyInstances { rule: self.id.to_string(), limit: MAX_ENUMERATION });
        }
        let mut idx = vec![0usize; domains.len()];
        loop {
            out.push(Assignment(
                self.decls.iter().zip(&idx).zip(&domains).map(|((d, &i), dom)| (d.var.clone(), dom[i].clone())).collect(),
            ));
            let mut k = idx.len();
            loop {
                if k == 0 {
                    return Ok(out);
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < domains[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    /// Every ground instance, in assignment order.
    pub fn enumerate_instances(&self, s: &Structure) -> Result<Vec<GroundRule>, RuleError> {
        Ok(self.assignments(s)?.iter().map(|a| self.instantiate(a)).collect())
    }
}

/// True iff every antecedent assertion holds.
pub fn is_triggered(r: &GroundRule, w: &WorldState, s: &Structure) -> Result<bool, EvalError> {
    holds_all(&r.antecedent, w, s)
}

impl Rule {
    pub fn id(&self) -> &Sym {
        match self {
            Rule::Ground(g) => &g.id,
            Rule::Schema(r) => &r.id,
        }
    }

    pub fn antecedent(&self) -> &[Assertion] {
        match self {
            Rule::Ground(g) => &g.antecedent,
            Rule::Schema(r) => &r.antecedent,
        }
    }

    pub fn consequent(&self) -> &Assertion {
        match self {
            Rule::Ground(g) => &g.consequent,
            Rule::Schema(r) => &r.consequent,
        }
    }

    pub fn decls(&self) -> &[VarDecl] {
        match self {
            Rule::Ground(_) => &[],
            Rule::Schema(r) => &r.decls,
        }
    }

    pub fn to_schema(&self) -> SchemaRule {
        match self {
            Rule::Ground(g) => g.as_schema(),
            Rule::Schema(r) => r.clone(),
        }
    }

    pub fn validate(&self, s: &Structure) -> Result<(), RuleError> {
        match self {
            Rule::Ground(g) => g.validate(s),
            Rule::Schema(r) => r.validate(s),
        }
    }

    /// Ground instances (a ground rule is its own single instance).
    pub fn instances(&self, s: &Structure) -> Result<Vec<GroundRule>, RuleError> {
        match self {
            Rule::Ground(g) => Ok(vec![g.clone()]),
            Rule::Schema(r) => r.enumerate_instances(s),
        }
    }

    /// Renames the rule.
    pub fn with_id(mut self, id: Sym) -> Rule {
        match &mut self {
            Rule::Ground(g) => g.id = id,
            Rule::Schema(r) => r.id = id,
        }
        self
    }

    /// Replaces antecedent and consequent, keeping id and declarations.
    pub fn with_body(&self, antecedent: Vec<Assertion>, consequent: Assertion) -> Rule {
        match self {
            Rule::Ground(g) => Rule::Ground(GroundRule { id: g.id.clone(), antecedent, consequent }),
            Rule::Schema(r) => Rule::Schema(SchemaRule { id: r.id.clone(), decls: r.decls.clone(), antecedent, consequent }),
        }
    }
}

impl From<GroundRule> for Rule {
    fn from(g: GroundRule) -> Rule {
        Rule::Ground(g)
    }
}

impl From<SchemaRule> for Rule {
    fn from(r: SchemaRule) -> Rule {
        if r.decls.is_empty() {
            Rule::Ground(GroundRule { id: r.id, antecedent: r.antecedent, consequent: r.consequent })
        } else {
            Rule::Schema(r)
        }
    }
}

fn write_body(f: &mut fmt::Formatter<'_>, ante: &[Assertion], cons: &Assertion) -> fmt::Result {
    for (i, a) in ante.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        } else {
            f.write_str(" ")?;
        }
        write!(f, "{a}")?;
    }
    write!(f, " -> {cons}")
}

impl fmt::Display for GroundRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule {}:", self.id)?;
        write_body(f, &self.antecedent, &self.consequent)?;
        f.write_str(";")
    }
}

impl fmt::Display for SchemaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kw = if self.decls.is_empty() { "rule" } else { "schema" };
        write!(f, "{kw} {}:", self.id)?;
        write_body(f, &self.antecedent, &self.consequent)?;
        for (i, d) in self.decls.iter().enumerate() {
            f.write_str(if i == 0 { " where " } else { ", " })?;
            write!(f, "{}: {}", d.var, d.concept)?;
        }
        f.write_str(";")
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Ground(g) => g.fmt(f),
            Rule::Schema(r) => r.fmt(f),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Key;
    use crate::structure::{Concept, Operator};

    fn door(n: usize) -> Structure {
        let mut s = Structure::new();
        let names: Vec<String> = (1..=n).map(|i| format!("door_{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        s.add_concept(Concept::finite("Door", &refs)).unwrap();
        s.add_concept(Concept::finite("StatusV", &["o", "c"])).unwrap();
        s.add_concept(Concept::finite("Action", &[])).unwrap();
        s.add_operator(Operator::fluent("Status", &["Door"], Some("StatusV"))).unwrap();
        s.add_operator(Operator::constructor("Close", &["Door"], "Action")).unwrap();
        s.add_operator(Operator::constructor("Open", &["Door"], "Action")).unwrap();
        s.add_operator(Operator::fluent("Do", &["Action"], Some("Bool"))).unwrap();
        s.add_operator(Operator::fluent("t", &[], Some("Real"))).unwrap();
        s
    }

    fn status(x: Term) -> Term {
        Term::app("Status", vec![x])
    }

    fn door_schemas() -> Vec<SchemaRule> {
        let x = || Term::var("x");
        let mk = |id: &str, from: &str, act: &str, to: &str| {
            SchemaRule::new(
                id,
                vec![VarDecl::new("x", "Door")],
                vec![
                    Assertion::eq(status(x()), Term::ind(from)),
                    Assertion::holds_true(Term::app("Do", vec![Term::app(act, vec![x()])])),
                ],
                Assertion::eq(status(x()), Term::ind(to)),
            )
        };
        vec![
            mk("close_open", "o", "Close", "c"),
            mk("close_closed", "c", "Close", "c"),
            mk("open_open", "o", "Open", "o"),
            mk("open_closed", "c", "Open", "o"),
        ]
    }

    #[test]
    fn ground_instance_matches_worked_rule() {
        let s = door(2);
        let r = &door_schemas()[0];
        let a = Assignment(vec![(sym("x"), Value::ind("door_1"))]);
        let g = r.ground_instance(&a, &s).unwrap();
        assert_eq!(g.id.as_ref(), "close_open[x=door_1]");
        assert_eq!(
            g.to_string(),
            "rule close_open[x=door_1]: Status(door_1) = o, Do(Close(door_1)) -> Status(door_1) = c;"
        );
        g.validate(&s).unwrap();
    }

    #[test]
    fn zero_declaration_schema_is_itself() {
        let s = door(1);
        let clock = SchemaRule::new(
            "clock",
            vec![],
            vec![],
            Assertion::eq(Term::constant("t"), Term::app("+", vec![Term::constant("t"), Term::Real(1.0)])),
        );
        let g = clock.ground_instance(&Assignment::default(), &s).unwrap();
        assert_eq!(g.id.as_ref(), "clock");
        assert_eq!(g.as_schema(), clock);
        assert_eq!(clock.enumerate_instances(&s).unwrap().len(), 1);
    }

    #[test]
    fn out_of_concept_and_coverage_errors() {
        let s = door(2);
        let r = &door_schemas()[0];
        let bad = Assignment(vec![(sym("x"), Value::ind("o"))]);
        assert!(matches!(r.ground_instance(&bad, &s), Err(RuleError::OutOfConcept { .. })));
        assert!(matches!(r.ground_instance(&Assignment::default(), &s), Err(RuleError::MissingVariable { .. })));
        let extra = Assignment(vec![(sym("x"), Value::ind("door_1")), (sym("y"), Value::ind("door_1"))]);
        assert!(matches!(r.ground_instance(&extra, &s), Err(RuleError::ExtraVariable { .. })));
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(door_schemas()[0].enumerate_instances(&door(2)).unwrap().len(), 2);
        let s = door(10);
        let total: usize = door_schemas().iter().map(|r| r.enumerate_instances(&s).unwrap().len()).sum();
        assert_eq!(total, 40);
        let ids: Vec<_> = door_schemas()[0].enumerate_instances(&s).unwrap().into_iter().map(|g| g.id).collect();
        assert_eq!(ids[0].as_ref(), "close_open[x=door_1]");
        assert_eq!(ids[9].as_ref(), "close_open[x=door_10]");
    }

    #[test]
    fn empty_concept_has_no_instances() {
        let mut s = door(1);
        s.add_concept(Concept::finite("Nothing", &[])).unwrap();
        let r = SchemaRule::new("r", vec![VarDecl::new("x", "Nothing")], vec![], Assertion::eq(Term::constant("t"), Term::Real(0.0)));
        assert!(r.enumerate_instances(&s).unwrap().is_empty());
    }

    #[test]
    fn undeclared_variable_rejected() {
        let s = door(1);
        let r = SchemaRule::new("r", vec![], vec![Assertion::eq(status(Term::var("x")), Term::ind("o"))], Assertion::eq(status(Term::var("x")), Term::ind("c")));
        assert!(matches!(r.validate(&s), Err(RuleError::UndeclaredVariable { .. })));
    }

    #[test]
    fn triggering() {
        let s = door(1);
        let g = door_schemas()[0]
            .ground_instance(&Assignment(vec![(sym("x"), Value::ind("door_1"))]), &s)
            .unwrap();
        let mut w = WorldState::new();
        w.set(Key::new(sym("Status"), vec![Value::ind("door_1")]), Value::ind("o"));
        w.set(Key::new(sym("Do"), vec![Value::App(sym("Close"), vec![Value::ind("door_1")])]), Value::truth(true));
        assert!(is_triggered(&g, &w, &s).unwrap());
        w.set(Key::new(sym("Status"), vec![Value::ind("door_1")]), Value::ind("c"));
        assert!(!is_triggered(&g, &w, &s).unwrap());
        let clock = GroundRule::new("clock", vec![], Assertion::eq(Term::constant("t"), Term::Real(0.0)));
        assert!(is_triggered(&clock, &WorldState::new(), &s).unwrap());
    }

    #[test]
    fn instance_ids_are_injective() {
        let s = door(5);
        let r = &door_schemas()[2];
        let ids: std::collections::HashSet<_> = r.enumerate_instances(&s).unwrap().into_iter().map(|g| g.id).collect();
        assert_eq!(ids.len(), 5);
    }

    #[test]
    fn bare_individual_consequent_rejected() {
        let s = door(1);
        let g = GroundRule::new("g", vec![], Assertion::eq(Term::ind("o"), Term::ind("c")));
        assert!(matches!(g.validate(&s), Err(RuleError::NotAssignable { .. })));
    }

    #[test]
    fn instance_enumeration_is_bounded() {
        let s = door(200);
        let decls = vec![VarDecl::new("x", "Door"), VarDecl::new("y", "Door"), VarDecl::new("z", "Door")];
        let r = SchemaRule::new("big", decls, vec![], Assertion::eq(status(Term::var("x")), Term::ind("o")));
        assert!(matches!(r.assignments(&s), Err(RuleError::TooManyInstances { .. })));
        let w = WorldState::new();
        let err = crate::rules::matching::triggered_assignments(&r, &w, &s).unwrap_err();
        assert!(err.to_string().contains("more than"), "{err}");
    }
}
