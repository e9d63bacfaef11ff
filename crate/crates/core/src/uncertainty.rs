//! Probabilities of assertions, rules and derivations.
//!
//! `Pr` is an ordinary fluent over reified individuals, so probabilistic
//! rules are ordinary rules. The only addition is the derivation layer,
//! which threads the current derivation `cd` and its probability through
//! every rule application.

use crate::engine::Sps;
use crate::rules::{Rule, SchemaRule, VarDecl};
use crate::strategies::StrategyError;
use crate::structure::{Structure, ASSERTION_C, DERIVATION_C, REIFIED, RULE_C};
use crate::term::{ops, Assertion, Sym, Term, Value, EMPTY_DERIVATION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProbabilityMode {
    /// Unannotated rules count with probability 1.
    #[default]
    Default,
    /// Every rule must carry a `Pr` annotation.
    Strict,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UncertaintyError {
    #[error("`{0}` is not a reified individual")]
    NotReified(String),
    #[error("rule `{0}` has no probability annotation")]
    MissingProbability(String),
    #[error("probability {value} for `{subject}` is outside [0,1]")]
    OutOfRange { subject: String, value: f64 },
    #[error("arithmetic is disabled in this structure")]
    NoArithmetic,
    #[error(transparent)]
    Strategy(#[from] StrategyError),
}

/// `Pr(subject)`.
pub fn pr_term(subject: &Value, s: &Structure) -> Result<Term, UncertaintyError> {
    if !s.contains(REIFIED, subject) {
        return Err(UncertaintyError::NotReified(subject.to_string()));
    }
    Ok(Term::app(ops::PR, vec![subject.to_term()]))
}

/// `Pr(subject) = value` as an initial-state assertion.
pub fn annotation(subject: &Value, value: f64, s: &Structure) -> Result<Assertion, UncertaintyError> {
    if !(0.0..=1.0).contains(&value) {
        return Err(UncertaintyError::OutOfRange { subject: subject.to_string(), value });
    }
    Ok(Assertion::eq(pr_term(subject, s)?, Term::Real(value)))
}

fn pr(t: Term) -> Term {
    Term::app(ops::PR, vec![t])
}

fn mul(a: Term, b: Term) -> Term {
    Term::app(ops::MUL, vec![a, b])
}

fn defined(t: Term) -> Assertion {
    Assertion::eq(t.clone(), t)
}

/// Rule probability annotation found in the initial valuation.
fn annotated(sps: &Sps, id: &Sym) -> bool {
    let key = pr(Term::Ind(id.clone()));
    sps.init.iter().any(|a| a.lhs == key)
}

/// Extends every rule so that applying it also sets
/// `cd := Seq(cd, r)` and `Pr(Seq(cd, r)) := Pr(cd) × Pr(r)`, and starts
/// from `cd = empty`, `Pr(empty) = 1`. Rule ids in `cd` are base ids, so a
/// schema's instances share its annotation.
pub fn attach_derivation_probability(sps: &Sps, mode: ProbabilityMode) -> Result<Sps, UncertaintyError> {
    if !sps.structure.has_arithmetic() {
        return Err(UncertaintyError::NoArithmetic);
    }
    let cd = Term::constant(ops::CD);
    let mut rules = Vec::with_capacity(sps.rules.len());
    for r in &sps.rules {
        let id = Term::Ind(r.id().clone());
        let factor = if annotated(sps, r.id()) {
            pr(id.clone())
        } else if mode == ProbabilityMode::Strict {
            return Err(UncertaintyError::MissingProbability(r.id().to_string()));
        } else {
            Term::Real(1.0)
        };
        let next = Term::app(ops::SEQ, vec![cd.clone(), id]);
        let c = r.consequent();
        let mut ls = vec![c.lhs.clone(), cd.clone(), pr(next.clone())];
        let mut rs = vec![c.rhs.clone(), next, mul(pr(cd.clone()), factor)];
        if let (Term::Tuple(l), Term::Tuple(rr)) = (&c.lhs, &c.rhs) {
            if l.len() == rr.len() {
                ls.splice(0..1, l.iter().cloned());
                rs.splice(0..1, rr.iter().cloned());
            }
        }
        rules.push(r.with_body(r.antecedent().to_vec(), Assertion::eq(Term::Tuple(ls), Term::Tuple(rs))));
    }
    let mut init = vec![
        Assertion::eq(cd.clone(), Term::ind(EMPTY_DERIVATION)),
        Assertion::eq(pr(Term::ind(EMPTY_DERIVATION)), Term::Real(1.0)),
    ];
    init.extend(sps.init.iter().cloned());
    let mut out = Sps::with_parts(sps.structure.clone(), rules, sps.prelude.clone(), init)
        .map_err(StrategyError::from)?;
    out.probability = true;
    Ok(out)
}

/// `cd = Seq(d, r), Pr(d) and Pr(r) defined → Pr(Seq(d, r)) = Pr(d) × Pr(r)`,
/// the declarative form of the product over a derivation.
pub fn derivation_probability_rule() -> SchemaRule {
    let (d, r) = (Term::var("d"), Term::var("r"));
    let seq = Term::app(ops::SEQ, vec![d.clone(), r.clone()]);
    SchemaRule::new(
        "derivation_probability",
        vec![VarDecl::new("d", DERIVATION_C), VarDecl::new("r", RULE_C)],
        vec![
            Assertion::eq(Term::constant(ops::CD), seq.clone()),
            defined(pr(d.clone())),
            defined(pr(r.clone())),
        ],
        Assertion::eq(pr(seq), mul(pr(d), pr(r))),
    )
}

/// `Pr(B|A), Pr(A), Pr(B) defined → Pr(A|B) = Pr(B|A) × Pr(A) / Pr(B)`
/// over distinct assertions A, B.
pub fn bayes_rule() -> SchemaRule {
    let (a, b) = (Term::var("A"), Term::var("B"));
    let given = |x: &Term, y: &Term| Term::app(ops::GIVEN, vec![x.clone(), y.clone()]);
    SchemaRule::new(
        "bayes",
        vec![VarDecl::new("A", ASSERTION_C), VarDecl::new("B", ASSERTION_C)],
        vec![
            Assertion::eq(a.clone(), b.clone()).negate(),
            defined(pr(given(&b, &a))),
            defined(pr(a.clone())),
            defined(pr(b.clone())),
        ],
        Assertion::eq(
            pr(given(&a, &b)),
            Term::app(ops::DIV, vec![mul(pr(given(&b, &a)), pr(a)), pr(b)]),
        ),
    )
}

/// A rule whose consequent sets a probability. Apart from that check it is
/// an ordinary schema rule.
pub fn probabilistic_rule(
    id: &str,
    decls: Vec<VarDecl>,
    antecedent: Vec<Assertion>,
    consequent: Assertion,
    s: &Structure,
) -> Result<Rule, UncertaintyError> {
    let is_pr = matches!(&consequent.lhs, Term::App(op, args) if &**op == ops::PR && args.len() == 1);
    if !is_pr {
        return Err(UncertaintyError::NotReified(consequent.lhs.to_string()));
    }
    let r = SchemaRule::new(id, decls, antecedent, consequent);
    r.validate(s).map_err(StrategyError::Rule)?;
    Ok(r.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{EngineConfig, Policy, RuleSelector};
    use crate::rules::GroundRule;
    use crate::structure::{Concept, Operator};

    fn two_rules() -> Sps {
        let mut s = Structure::new();
        s.add_operator(Operator::fluent("t", &[], Some("Real"))).unwrap();
        let bump = |id: &str| {
            GroundRule::new(id, vec![], Assertion::eq(Term::constant("t"), Term::app(ops::ADD, vec![Term::constant("t"), Term::Real(1.0)]))).into()
        };
        let mut sps = Sps::with_parts(s, vec![bump("r1"), bump("r2")], vec![], vec![]).unwrap();
        sps.init = vec![
            Assertion::eq(Term::constant("t"), Term::Real(0.0)),
            annotation(&Value::ind("r1"), 0.4, &sps.structure).unwrap(),
            annotation(&Value::ind("r2"), 0.6, &sps.structure).unwrap(),
        ];
        sps
    }

    #[test]
    fn product_over_derivation() {
        let sps = attach_derivation_probability(&two_rules(), ProbabilityMode::Strict).unwrap();
        let cfg = EngineConfig {
            policy: Policy::Script(vec![RuleSelector::rule("r1"), RuleSelector::rule("r2")]),
            max_steps: 10,
            events: vec![],
        };
        let res = sps.run(&cfg).unwrap();
        let prs: Vec<f64> = res.trace.iter().filter_map(|t| t.pr_cd).collect();
        assert!((prs[0] - 0.4).abs() < 1e-12);
        assert!((prs[1] - 0.24).abs() < 1e-12);
        assert_eq!(res.state.get(&crate::state::Key::new(crate::term::sym("cd"), vec![])).to_string(), "Seq(Seq(empty,r1),r2)");
    }

    #[test]
    fn empty_derivation_has_probability_one() {
        let sps = attach_derivation_probability(&two_rules(), ProbabilityMode::Default).unwrap();
        let w = sps.initial_state().unwrap();
        let v = crate::eval::eval_term(&pr(Term::constant("cd")), &w, &sps.structure).unwrap();
        assert_eq!(v, Value::Real(1.0));
    }

    #[test]
    fn strict_mode_needs_annotations() {
        let mut sps = two_rules();
        sps.init.truncate(2);
        assert!(matches!(
            attach_derivation_probability(&sps, ProbabilityMode::Strict),
            Err(UncertaintyError::MissingProbability(r)) if r == "r2"
        ));
        assert!(attach_derivation_probability(&sps, ProbabilityMode::Default).is_ok());
    }

    #[test]
    fn unreified_subjects_and_bad_values_are_rejected() {
        let mut s = Structure::new();
        s.add_concept(Concept::finite("Door", &["d1"])).unwrap();
        assert!(pr_term(&Value::ind("d1"), &s).is_err());
        s.add_reified_member(ASSERTION_C, "phi").unwrap();
        assert!(pr_term(&Value::ind("phi"), &s).is_ok());
        assert!(annotation(&Value::ind("phi"), 1.5, &s).is_err());
    }
}
