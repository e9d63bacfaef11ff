//! Probabilistic context-free grammars. The fluent `cs` holds the current
//! sentential form; each production `A -> α` with probability p becomes a
//! leftmost rewriting schema
//!
//! ```text
//! schema r: cs = s • A • s2 -> (cs, cd) = (s • α • s2, Seq(cd, r)) where s: TStr, s2: Str;
//! pr(r) = p;
//! ```
//!
//! `s` ranges over terminal strings, so `A` is the leftmost nonterminal.
//! The program runs with the strict derivation-probability layer, so
//! `Pr(cd)` is the probability of the leftmost derivation so far.

use std::collections::BTreeMap;

use serde::Deserialize;

use super::{check_distinct, check_name, from_toml, invalid, EncodingError};
use crate::program::Program;
use crate::rules::{SchemaRule, VarDecl};
use crate::state::{Key, WorldState};
use crate::structure::{Concept, ConceptKind, Operator, Structure};
use crate::term::{ops, sym, Assertion, Term, Value};
use crate::uncertainty::ProbabilityMode;

pub const SYMBOL: &str = "Sym";
pub const TERMINAL: &str = "T";
pub const FORM: &str = "Str";
pub const TERMINAL_FORM: &str = "TStr";
pub const CS: &str = "cs";

/// Probabilities per nonterminal must sum to one within this tolerance.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Production {
    pub id: Option<String>,
    pub lhs: String,
    #[serde(default)]
    pub rhs: Vec<String>,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PcfgDesc {
    pub nonterminals: Vec<String>,
    pub terminals: Vec<String>,
    pub start: String,
    /// Longest sentential form; longer rewrites are range violations.
    pub max_len: usize,
    pub productions: Vec<Production>,
}

impl PcfgDesc {
    pub fn from_toml(src: &str) -> Result<PcfgDesc, EncodingError> {
        let d: PcfgDesc = from_toml(src)?;
        d.validate()?;
        Ok(d)
    }

    pub fn rule_id(&self, k: usize) -> String {
        self.productions[k].id.clone().unwrap_or_else(|| format!("r{}", k + 1))
    }

    pub fn validate(&self) -> Result<(), EncodingError> {
        let reserved = [SYMBOL, TERMINAL, FORM, TERMINAL_FORM, CS];
        let ids: Vec<String> = (0..self.productions.len()).map(|k| self.rule_id(k)).collect();
        for n in self.nonterminals.iter().chain(&self.terminals).chain(&ids) {
            check_name("name", n)?;
            if reserved.contains(&n.as_str()) {
                return invalid(format!("`{n}` is reserved by the encoding"));
            }
        }
        check_distinct("name", self.nonterminals.iter().chain(&self.terminals).chain(&ids))?;
        if !self.nonterminals.contains(&self.start) {
            return invalid(format!("start symbol `{}` is not a nonterminal", self.start));
        }
        if self.max_len == 0 {
            return invalid("max_len must be positive");
        }
        let mut sums: BTreeMap<&str, f64> = self.nonterminals.iter().map(|n| (n.as_str(), 0.0)).collect();
        for (k, pr) in self.productions.iter().enumerate() {
            let Some(sum) = sums.get_mut(pr.lhs.as_str()) else {
                return invalid(format!("production {} rewrites `{}`, which is not a nonterminal", self.rule_id(k), pr.lhs));
            };
            if !(0.0..=1.0).contains(&pr.p) {
                return invalid(format!("production {} has probability {} outside [0, 1]", self.rule_id(k), pr.p));
            }
            *sum += pr.p;
            if let Some(x) = pr.rhs.iter().find(|x| !self.nonterminals.contains(x) && !self.terminals.contains(x)) {
                return invalid(format!("production {} uses unknown symbol `{x}`", self.rule_id(k)));
            }
        }
        for (n, sum) in sums {
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                return invalid(format!("probabilities of `{n}` sum to {sum}, not 1"));
            }
        }
        Ok(())
    }
}

pub fn compile_pcfg(d: &PcfgDesc) -> Result<Program, EncodingError> {
    d.validate()?;
    let symbols: Vec<&str> = d.nonterminals.iter().chain(&d.terminals).map(String::as_str).collect();
    let terminals: Vec<&str> = d.terminals.iter().map(String::as_str).collect();
    let mut s = Structure::new();
    s.add_concept(Concept::finite(SYMBOL, &symbols))?;
    s.add_concept(Concept::finite(TERMINAL, &terminals))?;
    s.add_concept(Concept::new(FORM, ConceptKind::Strings { alphabet: sym(SYMBOL), max_len: Some(d.max_len) }))?;
    s.add_concept(Concept::new(
        TERMINAL_FORM,
        ConceptKind::Strings { alphabet: sym(TERMINAL), max_len: Some(d.max_len) },
    ))?;
    s.add_operator(Operator::fluent(CS, &[], Some(FORM)))?;

    let mut p = Program::new(s);
    let concat = |parts: Vec<Term>| if parts.len() == 1 { parts.into_iter().next().unwrap() } else { Term::app(ops::CONCAT, parts) };
    for (k, prod) in d.productions.iter().enumerate() {
        let id = d.rule_id(k);
        let lhs = concat(vec![Term::var("s"), Term::ind(&prod.lhs), Term::var("s2")]);
        let mut rhs = vec![Term::var("s")];
        rhs.extend(prod.rhs.iter().map(|x| Term::ind(x)));
        rhs.push(Term::var("s2"));
        p.rules.push(
            SchemaRule::new(
                &id,
                vec![VarDecl::new("s", TERMINAL_FORM), VarDecl::new("s2", FORM)],
                vec![Assertion::eq(Term::constant(CS), lhs)],
                Assertion::eq(
                    Term::Tuple(vec![Term::constant(CS), Term::constant(ops::CD)]),
                    Term::Tuple(vec![concat(rhs), Term::app(ops::SEQ, vec![Term::constant(ops::CD), Term::ind(&id)])]),
                ),
            )
            .into(),
        );
        p.probabilities.push((Term::ind(&id), prod.p));
    }
    p.init.push(Assertion::eq(Term::constant(CS), Term::Str(vec![sym(&d.start)])));
    p.settings.probability = Some(ProbabilityMode::Strict);
    Ok(p)
}

/// The sentential form held by `cs`.
pub fn read_form(w: &WorldState) -> Option<Vec<String>> {
    match w.get(&Key::new(sym(CS), vec![])) {
        Value::Str(xs) => Some(xs.iter().map(|x| x.to_string()).collect()),
        _ => None,
    }
}

/// Applies productions leftmost-first. Returns the final form and the
/// product of the production probabilities, or `None` if some production
/// does not rewrite the leftmost nonterminal or a form exceeds `max_len`.
pub fn leftmost_derivation(d: &PcfgDesc, ids: &[&str]) -> Option<(Vec<String>, f64)> {
    let mut form = vec![d.start.clone()];
    let mut p = 1.0;
    for id in ids {
        let k = (0..d.productions.len()).find(|&k| d.rule_id(k) == *id)?;
        let prod = &d.productions[k];
        let pos = form.iter().position(|x| d.nonterminals.contains(x))?;
        if form[pos] != prod.lhs {
            return None;
        }
        form.splice(pos..=pos, prod.rhs.iter().cloned());
        if form.len() > d.max_len {
            return None;
        }
        p *= prod.p;
    }
    Some((form, p))
}

/// Probability of every terminal string reachable by a leftmost derivation
/// of at most `max_steps` productions whose forms fit in `max_len`.
pub fn string_probabilities(d: &PcfgDesc, max_steps: usize) -> BTreeMap<Vec<String>, f64> {
    let mut out = BTreeMap::new();
    let mut frontier = vec![(vec![d.start.clone()], 1.0)];
    for _ in 0..=max_steps {
        let mut next = Vec::new();
        for (form, p) in frontier {
            let Some(pos) = form.iter().position(|x| d.nonterminals.contains(x)) else {
                *out.entry(form).or_insert(0.0) += p;
                continue;
            };
            for prod in d.productions.iter().filter(|pr| pr.lhs == form[pos]) {
                let mut f = form.clone();
                f.splice(pos..=pos, prod.rhs.iter().cloned());
                if f.len() <= d.max_len {
                    next.push((f, p * prod.p));
                }
            }
        }
        frontier = next;
    }
    out
}

/// `S -> a S (0.4) | b (0.6)`, generating `a^n b`.
pub fn example_grammar(max_len: usize) -> PcfgDesc {
    PcfgDesc {
        nonterminals: vec!["S".into()],
        terminals: vec!["a".into(), "b".into()],
        start: "S".into(),
        max_len,
        productions: vec![
            Production { id: None, lhs: "S".into(), rhs: vec!["a".into(), "S".into()], p: 0.4 },
            Production { id: None, lhs: "S".into(), rhs: vec!["b".into()], p: 0.6 },
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leftmost_derivation_probability() {
        let d = example_grammar(8);
        let (form, p) = leftmost_derivation(&d, &["r1", "r1", "r2"]).unwrap();
        assert_eq!(form, ["a", "a", "b"]);
        assert!((p - 0.096).abs() < 1e-15);
        assert!(leftmost_derivation(&d, &["r2", "r1"]).is_none());
    }

    #[test]
    fn string_distribution_is_geometric() {
        let d = example_grammar(6);
        let probs = string_probabilities(&d, 10);
        assert_eq!(probs.len(), 6);
        for (s, p) in probs {
            let n = s.len() as i32 - 1;
            assert!((p - 0.4f64.powi(n) * 0.6).abs() < 1e-12);
        }
    }

    #[test]
    fn probabilities_must_sum_to_one() {
        let mut d = example_grammar(4);
        d.productions[1].p = 0.5;
        assert!(d.validate().unwrap_err().to_string().contains("sum to"));
    }

    #[test]
    fn compiled_rule_text() {
        let p = compile_pcfg(&example_grammar(4)).unwrap();
        assert_eq!(
            p.rules[0].to_string(),
            "schema r1: cs = (s•S•s2) -> (cs,cd) = ((s•a•S•s2),Seq(cd,r1)) where s: TStr, s2: Str;"
        );
    }
}
