//! From syntax to a [`Program`]: name resolution, static domain checks and
//! rule invariants, with every problem reported at its position.

use std::collections::HashMap;

use super::ast::*;
use super::Diagnostic;
use crate::eval::eval_term;
use crate::program::{PolicyChoice, Program, Settings, StrategyMode};
use crate::rules::{is_assignable, GroundRule, Rule, SchemaRule, VarDecl};
use crate::state::WorldState;
use crate::strategies::{GroupDecl, StrategySpec};
use crate::structure::{
    validate_structure, Concept, ConceptKind, Operator, OperatorKind, Structure, ASSERTION_C, DERIVATION_C, REIFIED,
};
use crate::term::{ops, sym, Assertion, Sym, Term};
use crate::uncertainty::ProbabilityMode;

type Scope = Vec<(String, String)>;

struct Lowerer {
    s: Structure,
    diags: Vec<Diagnostic>,
    /// Declaration position of every structure name.
    names: HashMap<String, Pos>,
}

fn op_symbol(op: &str) -> &str {
    match op {
        "|" => ops::GIVEN,
        "•" => ops::CONCAT,
        other => other,
    }
}

impl Lowerer {
    fn diag(&mut self, pos: Pos, msg: impl Into<String>) {
        self.diags.push(Diagnostic::new(pos, msg));
    }

    fn declare(&mut self, id: &Ident) -> bool {
        if Structure::is_builtin_name(&id.name) {
            self.diag(id.pos, format!("`{}` is a builtin name", id.name));
            false
        } else if let Some(prev) = self.names.get(&id.name) {
            let prev = *prev;
            self.diag(id.pos, format!("`{}` is already declared at {prev}", id.name));
            false
        } else {
            self.names.insert(id.name.clone(), id.pos);
            true
        }
    }

    fn concept_ref(&mut self, id: &Ident) -> bool {
        if self.s.concept(&id.name).is_some() {
            true
        } else {
            self.diag(id.pos, format!("unknown concept `{}`", id.name));
            false
        }
    }

    /// Best static guess of the concept a term's value lies in.
    fn static_concept(&self, t: &Term, scope: &Scope) -> Option<Sym> {
        match t {
            Term::Var(v) => scope.iter().find(|(n, _)| **n == **v).map(|(_, c)| sym(c)),
            Term::Real(_) => Some(sym(crate::structure::REAL)),
            Term::App(op, _) => {
                let o = self.s.operator(op)?;
                match o.kind {
                    OperatorKind::Builtin if &**op != ops::CONCAT => Some(sym(crate::structure::REAL)),
                    OperatorKind::Builtin => None,
                    _ => o.range.clone(),
                }
            }
            _ => None,
        }
    }

    fn finite_members(&self, c: &str) -> Option<&[Sym]> {
        match &self.s.concept(c)?.kind {
            ConceptKind::Finite(ms) => Some(ms),
            _ => None,
        }
    }

    fn check_arg(&mut self, op: &str, i: usize, domain: &str, t: &Term, pos: Pos, scope: &Scope) {
        let value = match t {
            Term::Ind(_) | Term::Real(_) | Term::Str(_) => Some(eval_term(t, &WorldState::new(), &self.s)),
            _ => None,
        };
        let mismatch = match value {
            Some(Ok(v)) => !self.s.contains(domain, &v),
            Some(Err(_)) => true,
            None => match self.static_concept(t, scope) {
                Some(c) if *c == *domain => false,
                Some(c) => match (self.finite_members(&c), self.finite_members(domain)) {
                    (Some(a), Some(b)) => !a.iter().all(|m| b.contains(m)),
                    (Some(_), None) | (None, Some(_)) => {
                        let structural = matches!(
                            self.s.concept(domain).map(|c| &c.kind),
                            Some(ConceptKind::Reified(_) | ConceptKind::AnyReified | ConceptKind::Terms { .. })
                        );
                        !structural && *c == *crate::structure::REAL
                    }
                    (None, None) => false,
                },
                None => false,
            },
        };
        if mismatch {
            self.diag(pos, format!("argument {} of `{op}` is `{t}`, which does not fit domain `{domain}`", i + 1));
        }
    }

    fn term(&mut self, e: &Expr, scope: &Scope) -> Option<Term> {
        match e {
            Expr::Num(n, _) => Some(Term::Real(*n)),
            Expr::Str(syms, pos) => {
                for x in syms {
                    if !self.s.has_individual(x) {
                        self.diag(*pos, format!("string symbol `{x}` is not an individual"));
                        return None;
                    }
                }
                Some(Term::Str(syms.iter().map(|x| sym(x)).collect()))
            }
            Expr::Name(id) => {
                let n = id.name.as_str();
                if scope.iter().any(|(v, _)| v == n) {
                    return Some(Term::var(n));
                }
                if let Some(o) = self.s.operator(n) {
                    if o.arity() == 0 && o.kind != OperatorKind::Builtin {
                        return Some(Term::constant(n));
                    }
                    let arity = o.arity();
                    self.diag(id.pos, format!("`{n}` expects {arity} arguments"));
                    return None;
                }
                if self.s.has_individual(n) || self.s.is_rule_id(n) {
                    return Some(Term::ind(n));
                }
                if self.s.concept(n).is_some() {
                    self.diag(id.pos, format!("concept `{n}` used as a term"));
                } else {
                    self.diag(id.pos, format!("undeclared variable or unknown name `{n}`"));
                }
                None
            }
            Expr::Call(id, args) => {
                let Some(o) = self.s.operator(&id.name).cloned() else {
                    self.diag(id.pos, format!("unknown operator `{}`", id.name));
                    return None;
                };
                if o.kind == OperatorKind::Builtin {
                    self.diag(id.pos, format!("`{}` is written infix", id.name));
                    return None;
                }
                if o.arity() != args.len() {
                    self.diag(id.pos, format!("`{}` expects {} arguments, got {}", id.name, o.arity(), args.len()));
                    return None;
                }
                let mut out = Vec::with_capacity(args.len());
                for (i, (a, d)) in args.iter().zip(&o.domain).enumerate() {
                    let t = self.term(a, scope)?;
                    self.check_arg(&id.name, i, d, &t, a.pos(), scope);
                    out.push(t);
                }
                Some(Term::App(o.name.clone(), out))
            }
            Expr::Op(op, args, pos) => {
                let name = op_symbol(op);
                if self.s.operator(name).is_none() {
                    self.diag(*pos, format!("operator `{op}` needs arithmetic enabled"));
                    return None;
                }
                let out = args.iter().map(|a| self.term(a, scope)).collect::<Option<Vec<_>>>()?;
                Some(Term::app(name, out))
            }
            Expr::Tuple(items, _) => Some(Term::Tuple(items.iter().map(|a| self.term(a, scope)).collect::<Option<_>>()?)),
            Expr::If(cond, t, f, _) => {
                let c = cond.iter().map(|a| self.assertion(a, scope)).collect::<Option<Vec<_>>>()?;
                Some(Term::cond(c, self.term(t, scope)?, self.term(f, scope)?))
            }
            Expr::RuleRef(id, binds) => {
                if !self.s.is_rule_id(&id.name) {
                    self.diag(id.pos, format!("unknown rule `{}`", id.name));
                    return None;
                }
                let mut out = Vec::new();
                for (v, t) in binds {
                    out.push((sym(&v.name), self.term(t, scope)?));
                }
                Some(Term::RuleRef(sym(&id.name), out))
            }
        }
    }

    fn assertion(&mut self, a: &AssertionAst, scope: &Scope) -> Option<Assertion> {
        let lhs = self.term(&a.lhs, scope)?;
        let rhs = match &a.rhs {
            Some(r) => self.term(r, scope)?,
            None => Term::truth(),
        };
        Some(Assertion { lhs, rhs, negated: a.negated })
    }

    /// Several assertions as one, pairing sides into tuples.
    fn conjoined(&mut self, xs: &[AssertionAst], scope: &Scope, pos: Pos) -> Option<Assertion> {
        let lowered = xs.iter().map(|a| self.assertion(a, scope)).collect::<Option<Vec<_>>>()?;
        if lowered.iter().any(|a| a.negated) {
            self.diag(pos, "a consequent cannot be negated");
            return None;
        }
        if lowered.len() == 1 {
            return lowered.into_iter().next();
        }
        let (ls, rs): (Vec<_>, Vec<_>) = lowered.into_iter().map(|a| (a.lhs, a.rhs)).unzip();
        Some(Assertion::eq(Term::Tuple(ls), Term::Tuple(rs)))
    }

    fn ground_assignment(&mut self, a: &AssertionAst) -> Option<Assertion> {
        let x = self.assertion(a, &Vec::new())?;
        if x.negated || !is_assignable(&x.lhs, &self.s) {
            self.diag(a.lhs.pos(), format!("`{x}` does not assign a fluent"));
            return None;
        }
        Some(x)
    }

    fn rule(&mut self, r: &RuleDecl) -> Option<Rule> {
        let mut scope = Scope::new();
        let mut ok = true;
        for (v, c) in &r.decls {
            if scope.iter().any(|(n, _)| *n == v.name) {
                self.diag(v.pos, format!("variable `{}` declared twice", v.name));
                ok = false;
            }
            ok &= self.concept_ref(c);
            scope.push((v.name.clone(), c.name.clone()));
        }
        let antecedent = r.antecedent.iter().map(|a| self.assertion(a, &scope)).collect::<Vec<_>>();
        let consequent = self.conjoined(&r.consequent, &scope, r.id.pos);
        if !ok || antecedent.iter().any(Option::is_none) {
            return None;
        }
        let antecedent: Vec<_> = antecedent.into_iter().flatten().collect();
        let consequent = consequent?;
        let rule: Rule = if r.decls.is_empty() {
            GroundRule::new(&r.id.name, antecedent, consequent).into()
        } else {
            let decls = r.decls.iter().map(|(v, c)| VarDecl::new(&v.name, &c.name)).collect();
            SchemaRule::new(&r.id.name, decls, antecedent, consequent).into()
        };
        if let Err(e) = rule.validate(&self.s) {
            self.diag(r.id.pos, e.to_string());
            return None;
        }
        Some(rule)
    }

    fn rule_ref(&mut self, id: &Ident) -> Sym {
        self.strategy_ref(id, &[])
    }

    /// A rule id, or the id of a group declared anywhere in the file.
    fn strategy_ref(&mut self, id: &Ident, groups: &[&str]) -> Sym {
        if !self.s.is_rule_id(&id.name) && !groups.contains(&id.name.as_str()) {
            self.diag(id.pos, format!("unknown rule `{}`", id.name));
        }
        sym(&id.name)
    }

    fn settings(&mut self, kvs: &[(Ident, ConfigValue)], out: &mut Settings) {
        for (k, v) in kvs {
            let bad = |l: &mut Lowerer, what: &str| l.diag(k.pos, format!("`{}` expects {what}", k.name));
            let int = |v: &ConfigValue| match v {
                ConfigValue::Num(n) if *n >= 0.0 && n.fract() == 0.0 => Some(*n as u64),
                _ => None,
            };
            let word = |v: &ConfigValue| match v {
                ConfigValue::Word(w) => Some(w.clone()),
                _ => None,
            };
            match k.name.as_str() {
                "max_steps" => match int(v) {
                    Some(n) if n >= 1 => out.max_steps = Some(n as usize),
                    _ => bad(self, "a positive integer"),
                },
                "seed" => match int(v) {
                    Some(n) => out.seed = Some(n),
                    None => bad(self, "a non-negative integer"),
                },
                "policy" => match word(v).as_deref() {
                    Some("first") => out.policy = Some(PolicyChoice::First),
                    Some("random") => out.policy = Some(PolicyChoice::Random),
                    _ => bad(self, "`first` or `random`"),
                },
                "probability" => match word(v).as_deref() {
                    Some("default") => out.probability = Some(ProbabilityMode::Default),
                    Some("strict") => out.probability = Some(ProbabilityMode::Strict),
                    _ => bad(self, "`default` or `strict`"),
                },
                "strategy" => match word(v).as_deref() {
                    Some("basic") => out.strategy = Some(StrategyMode::Basic),
                    Some("transformed") => out.strategy = Some(StrategyMode::Transformed),
                    _ => bad(self, "`basic` or `transformed`"),
                },
                "arithmetic" => {
                    if !matches!(word(v).as_deref(), Some("on" | "off")) {
                        bad(self, "`on` or `off`");
                    }
                }
                other => self.diag(k.pos, format!("unknown setting `{other}`")),
            }
        }
    }
}

fn arithmetic_flag(doc: &Document) -> bool {
    !doc.items.iter().any(|it| match it {
        Item::Config(kvs) => kvs.iter().any(|(k, v)| k.name == "arithmetic" && *v == ConfigValue::Word("off".into())),
        _ => false,
    })
}

/// Lowers a parsed document; all diagnostics are collected.
pub fn lower(doc: &Document) -> Result<Program, Vec<Diagnostic>> {
    let mut l = Lowerer { s: Structure::with_arithmetic(arithmetic_flag(doc)), diags: Vec::new(), names: HashMap::new() };

    // structure
    for it in &doc.items {
        match it {
            Item::Concept { name, body } => {
                if !l.declare(name) {
                    continue;
                }
                let kind = match body {
                    ConceptBody::Members(ms) => {
                        for m in ms {
                            if !l.s.has_individual(&m.name) {
                                l.declare(m);
                                if l.s.add_individual(&m.name).is_err() {
                                    l.diag(m.pos, format!("`{}` is already declared", m.name));
                                }
                            }
                        }
                        ConceptKind::Finite(ms.iter().map(|m| sym(&m.name)).collect())
                    }
                    ConceptBody::Strings { alphabet, max } => {
                        ConceptKind::Strings { alphabet: sym(&alphabet.name), max_len: *max }
                    }
                    ConceptBody::Terms { atoms, constructors, max } => ConceptKind::Terms {
                        atoms: sym(&atoms.name),
                        constructors: constructors.iter().map(|c| sym(&c.name)).collect(),
                        max_depth: *max,
                    },
                };
                l.s.add_concept_unchecked(Concept::new(&name.name, kind));
            }
            Item::Individual { names, concept } => {
                for n in names {
                    if l.s.has_individual(&n.name) && concept.is_some() {
                        // already declared through a concept; only the membership is new
                    } else {
                        l.declare(n);
                    }
                    match concept.as_ref().map(|c| c.name.as_str()) {
                        None => {
                            if l.s.add_individual(&n.name).is_err() {
                                l.diag(n.pos, format!("`{}` is already declared", n.name));
                            }
                        }
                        Some(c @ (ASSERTION_C | DERIVATION_C)) => {
                            if let Err(e) = l.s.add_reified_member(c, &n.name) {
                                l.diag(n.pos, e.to_string());
                            }
                        }
                        Some(_) => {
                            let c = concept.as_ref().unwrap();
                            l.diag(c.pos, "individuals can only be added to `AssertionC` or `DerivationC`");
                        }
                    }
                }
            }
            Item::Operator { constructor, name, domain, range } => {
                if !l.declare(name) {
                    continue;
                }
                let dom: Vec<&str> = domain.iter().map(|d| d.name.as_str()).collect();
                let op = if *constructor {
                    match range {
                        Some(r) => Operator::constructor(&name.name, &dom, &r.name),
                        None => {
                            l.diag(name.pos, format!("constructor `{}` needs a range concept", name.name));
                            continue;
                        }
                    }
                } else {
                    Operator::fluent(&name.name, &dom, range.as_ref().map(|r| r.name.as_str()))
                };
                l.s.add_operator_unchecked(op);
            }
            _ => {}
        }
    }
    for d in validate_structure(&l.s) {
        let pos = l.names.get(&d.entity).copied().unwrap_or_default();
        l.diag(pos, d.to_string());
    }

    for it in &doc.items {
        if let Item::Rule(r) = it {
            if l.s.is_rule_id(&r.id.name) {
                l.diag(r.id.pos, format!("rule `{}` is declared twice", r.id.name));
            } else if l.names.contains_key(&r.id.name) || Structure::is_builtin_name(&r.id.name) {
                l.diag(r.id.pos, format!("rule id `{}` clashes with a structure name", r.id.name));
            }
            l.s.register_rule_id(&r.id.name);
        }
    }
    if !l.diags.is_empty() {
        return Err(l.diags);
    }

    let mut rules = Vec::new();
    let mut strategy = StrategySpec::default();
    let mut probabilities = Vec::new();
    let mut init = Vec::new();
    let mut events = Vec::new();
    let mut settings = Settings::default();
    let group_ids: Vec<&str> = doc
        .items
        .iter()
        .filter_map(|it| match it {
            Item::Group { id, .. } => Some(id.name.as_str()),
            _ => None,
        })
        .collect();
    for it in &doc.items {
        match it {
            Item::Rule(r) => {
                if let Some(rule) = l.rule(r) {
                    rules.push(rule);
                }
            }
            Item::Constant(ids) => {
                for id in ids {
                    let r = l.strategy_ref(id, &group_ids);
                    strategy.constants.push(r);
                }
            }
            Item::Group { id, members } => {
                if l.names.contains_key(&id.name) || l.s.is_rule_id(&id.name) {
                    l.diag(id.pos, format!("group id `{}` is already declared", id.name));
                }
                let members = members.iter().map(|m| l.rule_ref(m)).collect();
                strategy.groups.push(GroupDecl { id: sym(&id.name), members });
            }
            Item::Prefer(a, b) => {
                let pair = (l.strategy_ref(a, &group_ids), l.strategy_ref(b, &group_ids));
                strategy.prefer.push(pair);
            }
            Item::Order(a, b) => {
                let pair = (l.strategy_ref(a, &group_ids), l.strategy_ref(b, &group_ids));
                strategy.order.push(pair);
            }
            Item::Pr { subject, value } => {
                let pos = subject.pos();
                let Some(t) = l.term(subject, &Vec::new()) else { continue };
                match eval_term(&t, &WorldState::new(), &l.s) {
                    Ok(v) if l.s.contains(REIFIED, &v) => {}
                    _ => l.diag(pos, format!("`{t}` is not a rule, derivation or assertion")),
                }
                if !(0.0..=1.0).contains(value) {
                    l.diag(pos, format!("probability {value} is outside [0,1]"));
                }
                if !l.s.has_arithmetic() {
                    l.diag(pos, "probabilities need arithmetic enabled");
                }
                probabilities.push((t, *value));
            }
            Item::Init(xs) => {
                for a in xs {
                    if let Some(x) = l.ground_assignment(a) {
                        init.push(x);
                    }
                }
            }
            Item::Events(steps) => {
                for step in steps {
                    let lowered: Vec<_> = step.iter().filter_map(|a| l.ground_assignment(a)).collect();
                    events.push(lowered);
                }
            }
            Item::Config(kvs) => l.settings(kvs, &mut settings),
            _ => {}
        }
    }
    if !l.diags.is_empty() {
        return Err(l.diags);
    }
    let mut p = Program::new(l.s);
    p.rules = rules;
    p.strategy = strategy;
    p.probabilities = probabilities;
    p.init = init;
    p.events = events;
    p.settings = settings;
    Ok(p)
}

/// Lowers a ground assertion (an event) against a program's structure.
pub fn lower_ground_assertion(a: &AssertionAst, s: &Structure) -> Result<Assertion, Vec<Diagnostic>> {
    let mut l = Lowerer { s: s.clone(), diags: Vec::new(), names: HashMap::new() };
    match l.ground_assignment(a) {
        Some(x) if l.diags.is_empty() => Ok(x),
        _ => Err(l.diags),
    }
}

#[cfg(test)]
mod tests {
    use super::super::load;

    const DOOR: &str = r#"
        concept Door = {door_1, door_2};
        concept StatusV = {o, c};
        concept Action = {};
        operator Status(Door) -> StatusV;
        constructor Close(Door) -> Action;
        constructor Open(Door) -> Action;
        operator Do(Action) -> Bool;
        schema close_open: Status(x) = o, Do(Close(x)) -> Status(x) = c where x: Door;
        schema close_closed: Status(x) = c, Do(Close(x)) -> Status(x) = c where x: Door;
        schema open_closed: Status(x) = c, Do(Open(x)) -> Status(x) = o where x: Door;
        schema open_open: Status(x) = o, Do(Open(x)) -> Status(x) = o where x: Door;
        init { Status(door_1) = o; Status(door_2) = c; }
        events { [Do(Close(door_1))] }
    "#;

    #[test]
    fn door_file_lowers_to_four_schemas() {
        let p = load(DOOR).unwrap();
        assert_eq!(p.rules.len(), 4);
        assert!(p.rules.iter().all(|r| !r.decls().is_empty()));
        assert_eq!(p.events.len(), 1);
    }

    #[test]
    fn missing_where_is_an_unresolved_variable() {
        let src = DOOR.replace("where x: Door;\n        schema close_closed", ";\n        schema close_closed");
        let errs = load(&src).unwrap_err();
        assert!(errs.iter().any(|d| d.message == "undeclared variable or unknown name `x`"), "{errs:?}");
        assert_eq!(errs[0].pos.line, 9);
    }

    #[test]
    fn domain_mismatches_are_reported() {
        let errs = load(&format!("{DOOR}\nrule bad: -> Status(o) = c;")).unwrap_err();
        assert!(errs[0].message.contains("does not fit domain `Door`"), "{errs:?}");
        let errs = load(&format!("{DOOR}\nschema bad: -> Status(y) = c where y: StatusV;")).unwrap_err();
        assert!(errs[0].message.contains("does not fit domain `Door`"), "{errs:?}");
    }

    #[test]
    fn duplicate_names_and_unknown_rules() {
        let errs = load("concept A = {a}; individual a; operator A -> Bool;").unwrap_err();
        assert_eq!(errs.len(), 2, "{errs:?}");
        let errs = load("prefer r1 > r2;").unwrap_err();
        assert_eq!(errs.len(), 2);
    }
}
