//! Axiom systems. Formulas are constructor terms over the atoms; `Prove`
//! marks derived theorems. Axiom schemas become unconditional rules and
//! inference rules become rules whose antecedent proves the premises:
//!
//! ```text
//! schema K: -> Prove(Imp(P,Imp(Q,P))) where P: L, Q: L;
//! schema MP: Prove(P), Prove(Imp(P,Q)) -> Prove(Q) where P: L, Q: L;
//! ```
//!
//! Metavariables range over `L`, the formulas up to the configured depth.
//! `Prove` itself is defined on the unbounded `Formula`, since instances
//! of a schema are deeper than the values substituted into it.
//!
//! Axiom schemas have one instance per assignment, so a first-match run
//! enumerates all of them; drive these programs with a proof script.

use serde::Deserialize;

use super::{check_distinct, check_name, from_toml, invalid, EncodingError};
use crate::dsl::ast::Expr;
use crate::dsl::parse_assertion;
use crate::engine::RuleSelector;
use crate::program::Program;
use crate::rules::{GroundRule, SchemaRule, VarDecl};
use crate::structure::{Concept, ConceptKind, Operator, Structure, BOOL};
use crate::term::{sym, Assertion, Term, Value};

pub const ATOM: &str = "Atom";
pub const FORMULA: &str = "Formula";
pub const BOUNDED: &str = "L";
pub const PROVE: &str = "Prove";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Connective {
    pub name: String,
    pub arity: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxiomDecl {
    pub name: String,
    pub formula: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferenceDecl {
    pub name: String,
    pub premises: Vec<String>,
    pub conclusion: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxiomSystemDesc {
    pub atoms: Vec<String>,
    #[serde(default = "default_connectives")]
    pub connectives: Vec<Connective>,
    pub depth: usize,
    #[serde(default)]
    pub axioms: Vec<AxiomDecl>,
    #[serde(default)]
    pub rules: Vec<InferenceDecl>,
    /// Formulas proved initially (hypotheses).
    #[serde(default)]
    pub hypotheses: Vec<String>,
}

fn default_connectives() -> Vec<Connective> {
    vec![
        Connective { name: "Not".into(), arity: 1 },
        Connective { name: "Or".into(), arity: 2 },
        Connective { name: "Imp".into(), arity: 2 },
    ]
}

/// A formula with metavariables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    Atom(String),
    Var(String),
    Ap(String, Vec<Pattern>),
}

impl Pattern {
    fn vars(&self, out: &mut Vec<String>) {
        match self {
            Pattern::Var(v) if !out.contains(v) => out.push(v.clone()),
            Pattern::Ap(_, args) => args.iter().for_each(|a| a.vars(out)),
            _ => {}
        }
    }

    fn to_term(&self) -> Term {
        match self {
            Pattern::Atom(a) => Term::ind(a),
            Pattern::Var(v) => Term::var(v),
            Pattern::Ap(c, args) => Term::app(c, args.iter().map(Pattern::to_term).collect()),
        }
    }

    fn to_value(&self) -> Option<Value> {
        match self {
            Pattern::Atom(a) => Some(Value::ind(a)),
            Pattern::Var(_) => None,
            Pattern::Ap(c, args) => {
                Some(Value::App(sym(c), args.iter().map(Pattern::to_value).collect::<Option<Vec<_>>>()?))
            }
        }
    }

    /// Extends `binding` so that the pattern equals `v`.
    fn matches(&self, v: &Value, binding: &mut Vec<(String, Value)>) -> bool {
        match (self, v) {
            (Pattern::Atom(a), Value::Ind(x)) => **x == **a,
            (Pattern::Var(name), _) => match binding.iter().find(|(n, _)| n == name) {
                Some((_, bound)) => bound == v,
                None => {
                    binding.push((name.clone(), v.clone()));
                    true
                }
            },
            (Pattern::Ap(c, ps), Value::App(op, vs)) => {
                **op == **c && ps.len() == vs.len() && ps.iter().zip(vs).all(|(p, x)| p.matches(x, binding))
            }
            _ => false,
        }
    }
}

impl AxiomSystemDesc {
    pub fn from_toml(src: &str) -> Result<AxiomSystemDesc, EncodingError> {
        let d: AxiomSystemDesc = from_toml(src)?;
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), EncodingError> {
        let reserved = [ATOM, FORMULA, BOUNDED, PROVE];
        let names = self
            .atoms
            .iter()
            .chain(self.connectives.iter().map(|c| &c.name))
            .chain(self.axioms.iter().map(|a| &a.name))
            .chain(self.rules.iter().map(|r| &r.name));
        for n in names.clone() {
            check_name("name", n)?;
            if reserved.contains(&n.as_str()) {
                return invalid(format!("`{n}` is reserved by the encoding"));
            }
        }
        check_distinct("name", names)?;
        if self.connectives.iter().any(|c| c.arity == 0) {
            return invalid("connectives need at least one argument");
        }
        for a in &self.axioms {
            self.parse(&a.formula)?;
        }
        for r in &self.rules {
            let conclusion = self.parse(&r.conclusion)?;
            let mut bound = Vec::new();
            for p in &r.premises {
                self.parse(p)?.vars(&mut bound);
            }
            let mut used = Vec::new();
            conclusion.vars(&mut used);
            if let Some(v) = used.iter().find(|v| !bound.contains(v)) {
                return invalid(format!("rule `{}`: `{v}` appears only in the conclusion", r.name));
            }
        }
        for h in &self.hypotheses {
            self.formula(h)?;
        }
        Ok(())
    }

    /// Parses a formula in term syntax; unknown names are metavariables.
    pub fn parse(&self, src: &str) -> Result<Pattern, EncodingError> {
        let a = parse_assertion(src).map_err(|d| EncodingError::Invalid(format!("`{src}`: {d}")))?;
        if a.negated || a.rhs.is_some() {
            return invalid(format!("`{src}` is not a formula"));
        }
        self.pattern(&a.lhs, src)
    }

    fn pattern(&self, e: &Expr, src: &str) -> Result<Pattern, EncodingError> {
        match e {
            Expr::Name(i) if self.atoms.contains(&i.name) => Ok(Pattern::Atom(i.name.clone())),
            Expr::Name(i) if self.connectives.iter().any(|c| c.name == i.name) => {
                invalid(format!("`{src}`: connective `{}` without arguments", i.name))
            }
            Expr::Name(i) => Ok(Pattern::Var(i.name.clone())),
            Expr::Call(c, args) => match self.connectives.iter().find(|k| k.name == c.name) {
                Some(k) if k.arity == args.len() => Ok(Pattern::Ap(
                    c.name.clone(),
                    args.iter().map(|x| self.pattern(x, src)).collect::<Result<_, _>>()?,
                )),
                Some(k) => invalid(format!("`{src}`: `{}` takes {} arguments", c.name, k.arity)),
                None => invalid(format!("`{src}`: `{}` is not a connective", c.name)),
            },
            _ => invalid(format!("`{src}` is not a formula")),
        }
    }

    /// A ground formula.
    pub fn formula(&self, src: &str) -> Result<Value, EncodingError> {
        self.parse(src)?
            .to_value()
            .ok_or_else(|| EncodingError::Invalid(format!("`{src}` contains metavariables")))
    }
}

fn schema(id: &str, antecedent: Vec<&Pattern>, conclusion: &Pattern) -> SchemaRule {
    let mut vars = Vec::new();
    for p in &antecedent {
        p.vars(&mut vars);
    }
    conclusion.vars(&mut vars);
    let prove = |p: &Pattern| Assertion::holds_true(Term::app(PROVE, vec![p.to_term()]));
    SchemaRule::new(
        id,
        vars.iter().map(|v| VarDecl::new(v, BOUNDED)).collect(),
        antecedent.into_iter().map(prove).collect(),
        prove(conclusion),
    )
}

pub fn compile_axioms(d: &AxiomSystemDesc) -> Result<Program, EncodingError> {
    d.validate()?;
    let atoms: Vec<&str> = d.atoms.iter().map(String::as_str).collect();
    let ctors: Vec<_> = d.connectives.iter().map(|c| sym(&c.name)).collect();
    let mut s = Structure::new();
    s.add_concept(Concept::finite(ATOM, &atoms))?;
    s.add_concept(Concept::new(
        FORMULA,
        ConceptKind::Terms { atoms: sym(ATOM), constructors: ctors.clone(), max_depth: None },
    ))?;
    s.add_concept(Concept::new(
        BOUNDED,
        ConceptKind::Terms { atoms: sym(ATOM), constructors: ctors, max_depth: Some(d.depth) },
    ))?;
    for c in &d.connectives {
        s.add_operator(Operator::constructor(&c.name, &vec![FORMULA; c.arity], FORMULA))?;
    }
    s.add_operator(Operator::fluent(PROVE, &[FORMULA], Some(BOOL)))?;
    let mut p = Program::new(s);
    for a in &d.axioms {
        let f = d.parse(&a.formula)?;
        let rule = schema(&a.name, vec![], &f);
        p.rules.push(if rule.decls.is_empty() {
            GroundRule::new(&a.name, vec![], rule.consequent).into()
        } else {
            rule.into()
        });
    }
    for r in &d.rules {
        let premises = r.premises.iter().map(|x| d.parse(x)).collect::<Result<Vec<_>, _>>()?;
        let conclusion = d.parse(&r.conclusion)?;
        p.rules.push(schema(&r.name, premises.iter().collect(), &conclusion).into());
    }
    for h in &d.hypotheses {
        p.init.push(Assertion::holds_true(Term::app(PROVE, vec![d.formula(h)?.to_term()])));
    }
    Ok(p)
}

/// Script step: a rule with its metavariables bound to formulas, or with
/// no bindings to take the first triggered instance.
pub fn script_step(d: &AxiomSystemDesc, rule: &str, bindings: &[(&str, &str)]) -> Result<RuleSelector, EncodingError> {
    if bindings.is_empty() {
        return Ok(RuleSelector::rule(rule));
    }
    let mut vals = Vec::new();
    for (v, f) in bindings {
        vals.push((*v, d.formula(f)?));
    }
    Ok(RuleSelector::instance(rule, vals))
}

/// One justified proof line: an axiom instance or a rule applied to
/// earlier lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Justification {
    pub by: String,
    pub premises: Vec<usize>,
}

/// Checks a proof line by line. Returns the justification of each line or
/// the index of the first line that follows from nothing. Metavariables
/// are restricted to depth `d.depth`, as in the compiled program.
pub fn check_proof(d: &AxiomSystemDesc, lines: &[Value]) -> Result<Vec<Justification>, usize> {
    let axioms: Vec<(String, Pattern)> =
        d.axioms.iter().filter_map(|a| Some((a.name.clone(), d.parse(&a.formula).ok()?))).collect();
    let rules: Vec<(String, Vec<Pattern>, Pattern)> = d
        .rules
        .iter()
        .filter_map(|r| {
            let ps = r.premises.iter().map(|x| d.parse(x).ok()).collect::<Option<Vec<_>>>()?;
            Some((r.name.clone(), ps, d.parse(&r.conclusion).ok()?))
        })
        .collect();
    let hyps: Vec<Value> = d.hypotheses.iter().filter_map(|h| d.formula(h).ok()).collect();
    type Binding = [(String, Value)];
    let shallow = |b: &Binding| b.iter().all(|(_, v)| Structure::term_depth(v) <= d.depth);

    fn premises_from(
        ps: &[Pattern],
        earlier: &[Value],
        binding: &mut Vec<(String, Value)>,
        chosen: &mut Vec<usize>,
        ok: &dyn Fn(&Binding) -> bool,
    ) -> bool {
        let Some((first, rest)) = ps.split_first() else { return ok(binding) };
        for (k, line) in earlier.iter().enumerate() {
            let saved = binding.len();
            if first.matches(line, binding) {
                chosen.push(k);
                if premises_from(rest, earlier, binding, chosen, ok) {
                    return true;
                }
                chosen.pop();
            }
            binding.truncate(saved);
        }
        false
    }

    let mut out = Vec::new();
    for (n, line) in lines.iter().enumerate() {
        let mut found = None;
        if hyps.contains(line) {
            found = Some(Justification { by: "hypothesis".into(), premises: vec![] });
        }
        for (name, pat) in &axioms {
            let mut b = Vec::new();
            if found.is_none() && pat.matches(line, &mut b) && shallow(&b) {
                found = Some(Justification { by: name.clone(), premises: vec![] });
            }
        }
        for (name, ps, concl) in &rules {
            if found.is_some() {
                break;
            }
            let mut b = Vec::new();
            if !concl.matches(line, &mut b) {
                continue;
            }
            let mut chosen = Vec::new();
            if premises_from(ps, &lines[..n], &mut b, &mut chosen, &shallow) {
                found = Some(Justification { by: name.clone(), premises: chosen });
            }
        }
        out.push(found.ok_or(n)?);
    }
    Ok(out)
}

/// Hilbert-style propositional calculus: K, S, excluded middle and modus
/// ponens over atoms `p`, `q`.
pub fn hilbert(depth: usize) -> AxiomSystemDesc {
    AxiomSystemDesc {
        atoms: vec!["p".into(), "q".into()],
        connectives: default_connectives(),
        depth,
        axioms: vec![
            AxiomDecl { name: "K".into(), formula: "Imp(P, Imp(Q, P))".into() },
            AxiomDecl { name: "S".into(), formula: "Imp(Imp(P, Imp(Q, R)), Imp(Imp(P, Q), Imp(P, R)))".into() },
            AxiomDecl { name: "EM".into(), formula: "Or(P, Not(P))".into() },
        ],
        rules: vec![InferenceDecl {
            name: "MP".into(),
            premises: vec!["P".into(), "Imp(P, Q)".into()],
            conclusion: "Q".into(),
        }],
        hypotheses: vec![],
    }
}

/// The five-step proof of `Imp(p, p)`.
pub const IDENTITY_PROOF: [(&str, &[(&str, &str)]); 5] = [
    ("K", &[("P", "p"), ("Q", "Imp(p, p)")]),
    ("S", &[("P", "p"), ("Q", "Imp(p, p)"), ("R", "p")]),
    ("MP", &[]),
    ("K", &[("P", "p"), ("Q", "p")]),
    ("MP", &[]),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compiled_rules_print_as_schemas() {
        let p = compile_axioms(&hilbert(3)).unwrap();
        let texts: Vec<String> = p.rules.iter().map(|r| r.to_string()).collect();
        assert_eq!(texts[0], "schema K: -> Prove(Imp(P,Imp(Q,P))) where P: L, Q: L;");
        assert_eq!(texts[3], "schema MP: Prove(P), Prove(Imp(P,Q)) -> Prove(Q) where P: L, Q: L;");
    }

    #[test]
    fn checker_accepts_the_identity_proof() {
        let d = hilbert(3);
        let lines: Vec<Value> = [
            "Imp(p, Imp(Imp(p, p), p))",
            "Imp(Imp(p, Imp(Imp(p, p), p)), Imp(Imp(p, Imp(p, p)), Imp(p, p)))",
            "Imp(Imp(p, Imp(p, p)), Imp(p, p))",
            "Imp(p, Imp(p, p))",
            "Imp(p, p)",
        ]
        .iter()
        .map(|f| d.formula(f).unwrap())
        .collect();
        let j = check_proof(&d, &lines).unwrap();
        let by: Vec<&str> = j.iter().map(|x| x.by.as_str()).collect();
        assert_eq!(by, ["K", "S", "MP", "K", "MP"]);
        assert_eq!(j[4].premises, vec![3, 2]);
        assert_eq!(check_proof(&d, &lines[2..]), Err(0));
    }

    #[test]
    fn checker_respects_the_depth_bound() {
        let d = hilbert(1);
        let deep = d.formula("Or(Imp(p, Imp(p, p)), Not(Imp(p, Imp(p, p))))").unwrap();
        assert_eq!(check_proof(&d, &[deep]), Err(0));
        let d = hilbert(2);
        let deep = d.formula("Or(Imp(p, Imp(p, p)), Not(Imp(p, Imp(p, p))))").unwrap();
        assert!(check_proof(&d, &[deep]).is_ok());
    }

    #[test]
    fn bad_formulas_are_reported() {
        let mut d = hilbert(2);
        d.axioms.push(AxiomDecl { name: "X".into(), formula: "Imp(P)".into() });
        assert!(d.validate().unwrap_err().to_string().contains("takes 2 arguments"));
        let mut d = hilbert(2);
        d.rules[0].conclusion = "Imp(Q, Z)".into();
        assert!(d.validate().unwrap_err().to_string().contains("only in the conclusion"));
    }
}
