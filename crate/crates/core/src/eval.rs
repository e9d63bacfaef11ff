//! Evaluation of ground terms and assertions against a world state.

use crate::state::{Key, WorldState};
use crate::structure::{OperatorKind, Structure};
use crate::term::{ops, Assertion, Sym, Term, Value};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("term `{0}` is not ground")]
    NonGround(String),
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("`{op}` expects {expected} arguments, got {got}")]
    Arity { op: String, expected: usize, got: usize },
    #[error("argument {position} of `{op}` is `{value}`, which is not in `{concept}`")]
    Domain { op: String, position: usize, value: String, concept: String },
    #[error("division by zero in `{0}`")]
    DivisionByZero(String),
    #[error("arithmetic on non-real value in `{0}`")]
    NotReal(String),
    #[error("concatenation of non-string value in `{0}`")]
    NotString(String),
}

/// Evaluates a ground term. Operator applications with an `undefined`
/// argument evaluate to `undefined`.
pub fn eval_term(t: &Term, w: &WorldState, s: &Structure) -> Result<Value, EvalError> {
    match t {
        Term::Ind(n) => Ok(Value::Ind(n.clone())),
        Term::Real(r) => Ok(Value::Real(*r)),
        Term::Str(v) => Ok(Value::Str(v.clone())),
        Term::Var(_) => Err(EvalError::NonGround(t.to_string())),
        Term::Tuple(items) => items.iter().map(|i| eval_term(i, w, s)).collect::<Result<_, _>>().map(Value::Tuple),
        Term::Cond(c) => {
            if holds_all(&c.condition, w, s)? {
                eval_term(&c.then_term, w, s)
            } else {
                eval_term(&c.else_term, w, s)
            }
        }
        Term::RuleRef(r, bindings) if bindings.is_empty() => Ok(Value::Ind(r.clone())),
        Term::RuleRef(r, bindings) => {
            let mut id = format!("{r}[");
            for (i, (v, t)) in bindings.iter().enumerate() {
                let val = eval_term(t, w, s)?;
                if !val.is_defined() {
                    return Ok(Value::undefined());
                }
                if i > 0 {
                    id.push(',');
                }
                id.push_str(&format!("{v}={val}"));
            }
            id.push(']');
            Ok(Value::Ind(id.into()))
        }
        Term::App(op, args) => {
            let vals = args.iter().map(|a| eval_term(a, w, s)).collect::<Result<Vec<_>, _>>()?;
            apply_operator(op, vals, t, w, s)
        }
    }
}

/// Applies an operator to already evaluated arguments.
pub fn apply_operator(
    op: &Sym,
    vals: Vec<Value>,
    t: &Term,
    w: &WorldState,
    s: &Structure,
) -> Result<Value, EvalError> {
    let o = s.operator(op).ok_or_else(|| EvalError::UnknownOperator(op.to_string()))?;
    if vals.iter().any(|v| !v.is_defined()) {
        return Ok(Value::undefined());
    }
    if o.kind == OperatorKind::Builtin {
        return builtin(op, &vals, t);
    }
    if o.arity() != vals.len() {
        return Err(EvalError::Arity { op: op.to_string(), expected: o.arity(), got: vals.len() });
    }
    for (i, (v, c)) in vals.iter().zip(&o.domain).enumerate() {
        if !s.contains(c, v) {
            return Err(EvalError::Domain {
                op: op.to_string(),
                position: i + 1,
                value: v.to_string(),
                concept: c.to_string(),
            });
        }
    }
    match o.kind {
        OperatorKind::Constructor => Ok(Value::App(op.clone(), vals)),
        _ => Ok(w.get(&Key::new(op.clone(), vals))),
    }
}

fn builtin(op: &str, vals: &[Value], t: &Term) -> Result<Value, EvalError> {
    if op == ops::CONCAT {
        let mut out = Vec::new();
        for v in vals {
            match v {
                Value::Str(s) => out.extend(s.iter().cloned()),
                Value::Ind(x) => out.push(x.clone()),
                _ => return Err(EvalError::NotString(t.to_string())),
            }
        }
        return Ok(Value::Str(out));
    }
    let mut nums = Vec::with_capacity(vals.len());
    for v in vals {
        nums.push(v.as_real().ok_or_else(|| EvalError::NotReal(t.to_string()))?);
    }
    let (first, rest) = nums.split_first().ok_or_else(|| EvalError::NotReal(t.to_string()))?;
    let mut acc = *first;
    for x in rest {
        acc = match op {
            ops::ADD => acc + x,
            ops::SUB => acc - x,
            ops::MUL => acc * x,
            ops::DIV => {
                if *x == 0.0 {
                    return Err(EvalError::DivisionByZero(t.to_string()));
                }
                acc / x
            }
            _ => return Err(EvalError::UnknownOperator(op.to_string())),
        };
    }
    Ok(Value::Real(acc))
}

/// Positive assertions hold when both sides are defined and equal; a
/// negated assertion holds when its positive form does not.
pub fn holds(a: &Assertion, w: &WorldState, s: &Structure) -> Result<bool, EvalError> {
    let l = eval_term(&a.lhs, w, s)?;
    let r = eval_term(&a.rhs, w, s)?;
    let positive = l.is_defined() && r.is_defined() && l == r;
    Ok(positive != a.negated)
}

/// Conjunction with short-circuit evaluation; empty is true.
pub fn holds_all(conj: &[Assertion], w: &WorldState, s: &Structure) -> Result<bool, EvalError> {
    for a in conj {
        if !holds(a, w, s)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{Concept, Operator};
    use crate::term::sym;
    use proptest::prelude::*;

    fn door() -> Structure {
        let mut s = Structure::new();
        s.add_concept(Concept::finite("Door", &["door_1", "door_2"])).unwrap();
        s.add_concept(Concept::finite("StatusV", &["o", "c"])).unwrap();
        s.add_operator(Operator::fluent("Status", &["Door"], Some("StatusV"))).unwrap();
        s.add_operator(Operator::constructor("Close", &["Door"], "Action")).unwrap();
        s.add_operator(Operator::constructor("Open", &["Door"], "Action")).unwrap();
        s.add_concept(Concept::finite("Action", &[])).unwrap();
        s.add_operator(Operator::fluent("Do", &["Action"], Some("Bool"))).unwrap();
        s
    }

    fn status(d: &str) -> Term {
        Term::app("Status", vec![Term::ind(d)])
    }

    fn key(op: &str, args: &[&str]) -> Key {
        Key::new(sym(op), args.iter().map(|a| Value::ind(a)).collect())
    }

    #[test]
    fn fluent_lookup_and_undefined_fallback() {
        let s = door();
        let mut w = WorldState::new();
        w.set(key("Status", &["door_1"]), Value::ind("c"));
        assert_eq!(eval_term(&status("door_1"), &w, &s).unwrap(), Value::ind("c"));
        assert!(eval_term(&status("door_2"), &w, &s).unwrap().is_undefined());
        assert_eq!(eval_term(&Term::ind("o"), &w, &s).unwrap(), Value::ind("o"));
    }

    #[test]
    fn constructor_builds_action_individual() {
        let s = door();
        let mut w = WorldState::new();
        let close = Term::app("Close", vec![Term::ind("door_1")]);
        let v = eval_term(&close, &w, &s).unwrap();
        assert_eq!(v.to_string(), "Close(door_1)");
        w.set(Key::new(sym("Do"), vec![v]), Value::truth(true));
        let a = Assertion::holds_true(Term::app("Do", vec![close]));
        assert!(holds(&a, &w, &s).unwrap());
    }

    #[test]
    fn domain_violation() {
        let s = door();
        let err = eval_term(&status("o"), &WorldState::new(), &s).unwrap_err();
        assert!(matches!(err, EvalError::Domain { .. }));
    }

    #[test]
    fn undefined_semantics() {
        let s = door();
        let w = WorldState::new();
        let a = Assertion::eq(status("door_1"), Term::ind("o"));
        assert!(!holds(&a, &w, &s).unwrap());
        assert!(holds(&a.clone().negate(), &w, &s).unwrap());
        let refl = Assertion::eq(status("door_1"), status("door_1"));
        assert!(!holds(&refl, &w, &s).unwrap());
        // undefined argument propagates
        let nested = Term::app("Status", vec![Term::app("Status", vec![Term::ind("door_1")])]);
        assert!(eval_term(&nested, &w, &s).unwrap().is_undefined());
    }

    #[test]
    fn conditional_picks_branch() {
        let s = door();
        let mut w = WorldState::new();
        w.set(key("Status", &["door_1"]), Value::ind("o"));
        let phi = vec![Assertion::eq(status("door_1"), Term::ind("o"))];
        let t = Term::cond(phi.clone(), Term::ind("c"), Term::ind("o"));
        assert_eq!(eval_term(&t, &w, &s).unwrap(), Value::ind("c"));
        let empty = Term::cond(vec![], Term::Real(1.0), Term::Real(2.0));
        assert_eq!(eval_term(&empty, &w, &s).unwrap(), Value::Real(1.0));
    }

    #[test]
    fn arithmetic() {
        let s = Structure::new();
        let w = WorldState::new();
        let t = Term::app("+", vec![Term::Real(1.0), Term::Real(2.5)]);
        assert_eq!(eval_term(&t, &w, &s).unwrap(), Value::Real(3.5));
        let d = Term::app("/", vec![Term::Real(1.0), Term::Real(0.0)]);
        assert!(matches!(eval_term(&d, &w, &s), Err(EvalError::DivisionByZero(_))));
        let bad = Term::app("*", vec![Term::ind("true"), Term::Real(0.0)]);
        assert!(matches!(eval_term(&bad, &w, &s), Err(EvalError::NotReal(_))));
        assert!(eval_term(&Term::var("x"), &w, &s).is_err());
    }

    #[test]
    fn rule_ref_evaluates_to_instance_id() {
        let s = door();
        let t = Term::RuleRef(sym("r"), vec![(sym("x"), Term::ind("door_1"))]);
        assert_eq!(eval_term(&t, &WorldState::new(), &s).unwrap(), Value::ind("r[x=door_1]"));
    }

    fn small_term() -> impl Strategy<Value = Term> {
        let leaf = prop_oneof![
            Just(Term::ind("door_1")),
            Just(Term::ind("door_2")),
            Just(Term::ind("o")),
            Just(Term::ind("c")),
        ];
        leaf.prop_recursive(3, 12, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|t| Term::app("Status", vec![t])),
                (inner.clone(), inner.clone(), inner.clone(), inner)
                    .prop_map(|(a, b, t1, t2)| Term::cond(vec![Assertion::eq(a, b)], t1, t2)),
            ]
        })
    }

    fn arbitrary_state() -> impl Strategy<Value = WorldState> {
        (prop::option::of(0..2usize), prop::option::of(0..2usize)).prop_map(|(a, b)| {
            let mut w = WorldState::new();
            let vals = ["o", "c"];
            if let Some(i) = a {
                w.set(key("Status", &["door_1"]), Value::ind(vals[i]));
            }
            if let Some(i) = b {
                w.set(key("Status", &["door_2"]), Value::ind(vals[i]));
            }
            w
        })
    }

    proptest! {
        #[test]
        fn conditional_law(a in small_term(), b in small_term(), t1 in small_term(), t2 in small_term(), w in arbitrary_state()) {
            let s = door();
            let phi = Assertion::eq(a, b);
            let c = Term::cond(vec![phi.clone()], t1.clone(), t2.clone());
            let got = eval_term(&c, &w, &s);
            let want = match holds(&phi, &w, &s) {
                Ok(true) => eval_term(&t1, &w, &s),
                Ok(false) => eval_term(&t2, &w, &s),
                Err(e) => Err(e),
            };
            prop_assert_eq!(got, want);
        }

        #[test]
        fn undefined_absorption(a in small_term(), b in small_term(), w in arbitrary_state()) {
            let s = door();
            if let (Ok(l), Ok(r)) = (eval_term(&a, &w, &s), eval_term(&b, &w, &s)) {
                if l.is_undefined() || r.is_undefined() {
                    prop_assert!(!holds(&Assertion::eq(a, b), &w, &s).unwrap());
                }
            }
        }

        #[test]
        fn evaluation_is_deterministic(t in small_term(), w in arbitrary_state()) {
            let s = door();
            prop_assert_eq!(eval_term(&t, &w, &s), eval_term(&t, &w, &s));
        }
    }
}
