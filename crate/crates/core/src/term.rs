//! Terms, assertions and the runtime values they evaluate to.
//!
//! Every term has a canonical textual form (`Op(a,b)`, bare individuals,
//! `(a,b)` tuples, `if φ then t1 else t2` conditionals). The same syntax is
//! used by the DSL printer, trace files and valuation keys.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

/// Interned-ish symbol. Cheap to clone.
pub type Sym = Arc<str>;

pub fn sym(s: &str) -> Sym {
    Arc::from(s)
}

pub const TRUE: &str = "true";
pub const FALSE: &str = "false";
pub const UNDEFINED: &str = "undefined";
/// The empty derivation.
pub const EMPTY_DERIVATION: &str = "empty";

/// Builtin operator names.
pub mod ops {
    pub const ADD: &str = "+";
    pub const SUB: &str = "-";
    pub const MUL: &str = "*";
    pub const DIV: &str = "/";
    pub const CONCAT: &str = "•";
    pub const GIVEN: &str = "|";
    pub const SEQ: &str = "Seq";
    pub const PR: &str = "Pr";
    pub const APPLICABLE: &str = "Applicable";
    pub const APPLIED: &str = "Applied";
    /// Current derivation (nullary fluent).
    pub const CD: &str = "cd";

    pub fn is_infix(name: &str) -> bool {
        matches!(name, ADD | SUB | MUL | DIV | CONCAT | GIVEN)
    }
}

/// The value of a ground term.
#[derive(Debug, Clone)]
pub enum Value {
    Ind(Sym),
    Real(f64),
    /// A constructor application, e.g. the action individual `Close(door_1)`.
    App(Sym, Vec<Value>),
    Tuple(Vec<Value>),
    /// A string of symbols (used for grammars).
    Str(Vec<Sym>),
}

impl Value {
    pub fn ind(name: &str) -> Value {
        Value::Ind(sym(name))
    }

    pub fn undefined() -> Value {
        Value::ind(UNDEFINED)
    }

    pub fn truth(b: bool) -> Value {
        Value::ind(if b { TRUE } else { FALSE })
    }

    pub fn is_undefined(&self) -> bool {
        matches!(self, Value::Ind(s) if &**s == UNDEFINED)
    }

    /// Defined all the way down; a tuple with an undefined component is not.
    pub fn is_defined(&self) -> bool {
        match self {
            Value::Ind(s) => &**s != UNDEFINED,
            Value::Tuple(vs) => vs.iter().all(Value::is_defined),
            _ => true,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Ind(_) => 0,
            Value::Real(_) => 1,
            Value::App(..) => 2,
            Value::Tuple(_) => 3,
            Value::Str(_) => 4,
        }
    }

    /// Term denoting this value.
    pub fn to_term(&self) -> Term {
        match self {
            Value::Ind(s) => Term::Ind(s.clone()),
            Value::Real(r) => Term::Real(*r),
            Value::App(op, args) => Term::App(op.clone(), args.iter().map(Value::to_term).collect()),
            Value::Tuple(vs) => Term::Tuple(vs.iter().map(Value::to_term).collect()),
            Value::Str(s) => Term::Str(s.clone()),
        }
    }
}

fn real_bits(r: f64) -> u64 {
    // -0.0 and 0.0 are the same real.
    if r == 0.0 {
        0
    } else {
        r.to_bits()
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Value::Ind(s) => s.hash(state),
            Value::Real(r) => real_bits(*r).hash(state),
            Value::App(op, args) => {
                op.hash(state);
                args.hash(state);
            }
            Value::Tuple(vs) => vs.hash(state),
            Value::Str(s) => s.hash(state),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Ind(a), Value::Ind(b)) => a.cmp(b),
            (Value::Real(a), Value::Real(b)) => {
                let (a, b) = (if *a == 0.0 { 0.0 } else { *a }, if *b == 0.0 { 0.0 } else { *b });
                a.total_cmp(&b)
            }
            (Value::App(o1, a1), Value::App(o2, a2)) => o1.cmp(o2).then_with(|| a1.cmp(a2)),
            (Value::Tuple(a), Value::Tuple(b)) => a.cmp(b),
            (Value::Str(a), Value::Str(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

/// Conditional term `⟨φ, then, else⟩`; φ is a conjunction (empty = true).
#[derive(Debug, Clone, PartialEq)]
pub struct Conditional {
    pub condition: Vec<Assertion>,
    pub then_term: Term,
    pub else_term: Term,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Ind(Sym),
    Var(Sym),
    Real(f64),
    Str(Vec<Sym>),
    /// Operator application. Nullary fluents are `App(name, [])`.
    App(Sym, Vec<Term>),
    Cond(Box<Conditional>),
    Tuple(Vec<Term>),
    /// Reference to a rule instance, `r[x=t,...]`; evaluates to the instance id.
    RuleRef(Sym, Vec<(Sym, Term)>),
}

impl Term {
    pub fn ind(name: &str) -> Term {
        Term::Ind(sym(name))
    }

    pub fn var(name: &str) -> Term {
        Term::Var(sym(name))
    }

    pub fn app(op: &str, args: Vec<Term>) -> Term {
        Term::App(sym(op), args)
    }

    pub fn constant(op: &str) -> Term {
        Term::App(sym(op), Vec::new())
    }

    pub fn truth() -> Term {
        Term::ind(TRUE)
    }

    pub fn cond(condition: Vec<Assertion>, then_term: Term, else_term: Term) -> Term {
        Term::Cond(Box::new(Conditional { condition, then_term, else_term }))
    }

    /// Tuple with nested tuples spliced in and singletons unwrapped.
    pub fn flat_tuple(items: Vec<Term>) -> Term {
        let mut out = Vec::with_capacity(items.len());
        for t in items {
            match t {
                Term::Tuple(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        if out.len() == 1 {
            out.pop().unwrap()
        } else {
            Term::Tuple(out)
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Ind(_) | Term::Real(_) | Term::Str(_) => true,
            Term::App(_, args) | Term::Tuple(args) => args.iter().all(Term::is_ground),
            Term::Cond(c) => {
                c.then_term.is_ground()
                    && c.else_term.is_ground()
                    && c.condition.iter().all(Assertion::is_ground)
            }
            Term::RuleRef(_, bs) => bs.iter().all(|(_, t)| t.is_ground()),
        }
    }

    /// Free variables in first-occurrence order.
    pub fn vars(&self, out: &mut Vec<Sym>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Ind(_) | Term::Real(_) | Term::Str(_) => {}
            Term::App(_, args) | Term::Tuple(args) => args.iter().for_each(|t| t.vars(out)),
            Term::Cond(c) => {
                c.condition.iter().for_each(|a| a.vars(out));
                c.then_term.vars(out);
                c.else_term.vars(out);
            }
            Term::RuleRef(_, bs) => bs.iter().for_each(|(_, t)| t.vars(out)),
        }
    }

    pub fn substitute(&self, lookup: &dyn Fn(&str) -> Option<Term>) -> Term {
        match self {
            Term::Var(v) => lookup(v).unwrap_or_else(|| self.clone()),
            Term::Ind(_) | Term::Real(_) | Term::Str(_) => self.clone(),
            Term::App(op, args) => Term::App(op.clone(), args.iter().map(|t| t.substitute(lookup)).collect()),
            Term::Tuple(args) => Term::Tuple(args.iter().map(|t| t.substitute(lookup)).collect()),
            Term::Cond(c) => Term::cond(
                c.condition.iter().map(|a| a.substitute(lookup)).collect(),
                c.then_term.substitute(lookup),
                c.else_term.substitute(lookup),
            ),
            Term::RuleRef(r, bs) => Term::RuleRef(
                r.clone(),
                bs.iter().map(|(v, t)| (v.clone(), t.substitute(lookup))).collect(),
            ),
        }
    }

    /// Operator names used anywhere in the term.
    pub fn operators(&self, out: &mut Vec<Sym>) {
        match self {
            Term::App(op, args) => {
                if !out.contains(op) {
                    out.push(op.clone());
                }
                args.iter().for_each(|t| t.operators(out));
            }
            Term::Tuple(args) => args.iter().for_each(|t| t.operators(out)),
            Term::Cond(c) => {
                c.condition.iter().for_each(|a| {
                    a.lhs.operators(out);
                    a.rhs.operators(out);
                });
                c.then_term.operators(out);
                c.else_term.operators(out);
            }
            Term::RuleRef(_, bs) => bs.iter().for_each(|(_, t)| t.operators(out)),
            _ => {}
        }
    }

    /// Individuals named anywhere in the term.
    pub fn individuals(&self, out: &mut Vec<Sym>) {
        match self {
            Term::Ind(s) => {
                if !out.contains(s) {
                    out.push(s.clone());
                }
            }
            Term::App(_, args) | Term::Tuple(args) => args.iter().for_each(|t| t.individuals(out)),
            Term::Cond(c) => {
                c.condition.iter().for_each(|a| {
                    a.lhs.individuals(out);
                    a.rhs.individuals(out);
                });
                c.then_term.individuals(out);
                c.else_term.individuals(out);
            }
            Term::RuleRef(_, bs) => bs.iter().for_each(|(_, t)| t.individuals(out)),
            _ => {}
        }
    }
}

/// Rendering used for reals everywhere: shortest round-trip form.
pub fn format_real(r: f64) -> String {
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r}")
}

fn write_str_literal(f: &mut fmt::Formatter<'_>, syms: &[Sym]) -> fmt::Result {
    f.write_str("\"")?;
    for (i, s) in syms.iter().enumerate() {
        if i > 0 {
            f.write_str(" ")?;
        }
        f.write_str(s)?;
    }
    f.write_str("\"")
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Ind(s) | Term::Var(s) => f.write_str(s),
            Term::Real(r) => f.write_str(&format_real(*r)),
            Term::Str(s) => write_str_literal(f, s),
            Term::App(op, args) if ops::is_infix(op) && args.len() >= 2 => {
                f.write_str("(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Term::App(op, args) => {
                f.write_str(op)?;
                if !args.is_empty() {
                    f.write_str("(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(",")?;
                        }
                        write!(f, "{a}")?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
            Term::Tuple(items) => {
                f.write_str("(")?;
                for (i, a) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Term::Cond(c) => {
                f.write_str("(if ")?;
                if c.condition.is_empty() {
                    f.write_str(TRUE)?;
                }
                for (i, a) in c.condition.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" and ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, " then {} else {})", c.then_term, c.else_term)
            }
            Term::RuleRef(r, bs) => {
                write!(f, "{r}[")?;
                for (i, (v, t)) in bs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}={t}")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// `lhs = rhs`, or its negation. The shorthand `t` is `t = true`.
#[derive(Debug, Clone, PartialEq)]
pub struct Assertion {
    pub lhs: Term,
    pub rhs: Term,
    pub negated: bool,
}

impl Assertion {
    pub fn eq(lhs: Term, rhs: Term) -> Assertion {
        Assertion { lhs, rhs, negated: false }
    }

    /// Shorthand `t` for `t = true`.
    pub fn holds_true(t: Term) -> Assertion {
        Assertion::eq(t, Term::truth())
    }

    pub fn negate(mut self) -> Assertion {
        self.negated = !self.negated;
        self
    }

    pub fn is_ground(&self) -> bool {
        self.lhs.is_ground() && self.rhs.is_ground()
    }

    pub fn vars(&self, out: &mut Vec<Sym>) {
        self.lhs.vars(out);
        self.rhs.vars(out);
    }

    pub fn substitute(&self, lookup: &dyn Fn(&str) -> Option<Term>) -> Assertion {
        Assertion {
            lhs: self.lhs.substitute(lookup),
            rhs: self.rhs.substitute(lookup),
            negated: self.negated,
        }
    }
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("not ")?;
        }
        if matches!(&self.rhs, Term::Ind(s) if &**s == TRUE) {
            write!(f, "{}", self.lhs)
        } else {
            write!(f, "{} = {}", self.lhs, self.rhs)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("term `{0}` is not ground")]
pub struct NonGround(pub String);

/// Canonical key of a ground term. Injective over term trees.
pub fn canonical_form(t: &Term) -> Result<String, NonGround> {
    if !t.is_ground() {
        return Err(NonGround(t.to_string()));
    }
    Ok(t.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_examples() {
        let open = Term::app("Open", vec![Term::ind("door_1")]);
        assert_eq!(canonical_form(&open).unwrap(), "Open(door_1)");
        let nested = Term::app("Do", vec![Term::app("Close", vec![Term::ind("door_1")])]);
        assert_eq!(canonical_form(&nested).unwrap(), "Do(Close(door_1))");
        let tuple = Term::Tuple(vec![Term::ind("a"), Term::ind("b")]);
        assert_eq!(canonical_form(&tuple).unwrap(), "(a,b)");
        assert!(canonical_form(&Term::var("x")).is_err());
    }

    #[test]
    fn shorthand_assertion_prints_bare() {
        let a = Assertion::holds_true(Term::app("Do", vec![Term::ind("x")]));
        assert_eq!(a.to_string(), "Do(x)");
        assert_eq!(a.clone().negate().to_string(), "not Do(x)");
    }

    #[test]
    fn flat_tuple_splices() {
        let t = Term::flat_tuple(vec![
            Term::Tuple(vec![Term::ind("a"), Term::ind("b")]),
            Term::ind("c"),
        ]);
        assert_eq!(t.to_string(), "(a,b,c)");
        assert_eq!(Term::flat_tuple(vec![Term::ind("a")]), Term::ind("a"));
    }

    #[test]
    fn zero_signs_are_one_real() {
        assert_eq!(Value::Real(0.0), Value::Real(-0.0));
        assert_eq!(format_real(-0.0), "0");
        assert_eq!(format_real(0.1), "0.1");
        assert_eq!(format_real(3.0), "3");
    }
}
