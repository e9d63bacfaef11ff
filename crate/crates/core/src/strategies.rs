//! Reductions of richer application strategies to the basic one. Every
//! function here maps rules (or a whole SPS) to rules runnable by the
//! basic engine.

use std::collections::{BTreeMap, BTreeSet};

use crate::engine::{EngineError, Sps};
use crate::rules::{GroundRule, Rule, RuleError, SchemaRule, VarDecl};
use crate::structure::{Operator, Structure, BOOL, RULE_C};
use crate::term::{ops, sym, Assertion, Sym, Term, FALSE};

/// Strategy declarations attached to an SPS.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StrategySpec {
    pub constants: Vec<Sym>,
    pub groups: Vec<GroupDecl>,
    /// `(r, r2)`: r is preferred over r2.
    pub prefer: Vec<(Sym, Sym)>,
    /// `(r2, r)`: r may only fire after r2 has fired.
    pub order: Vec<(Sym, Sym)>,
}

impl StrategySpec {
    pub fn is_empty(&self) -> bool {
        self.constants.is_empty() && self.groups.is_empty() && self.prefer.is_empty() && self.order.is_empty()
    }
}

/// A named group; a schema member contributes all its instances.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupDecl {
    pub id: Sym,
    pub members: Vec<Sym>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StrategyError {
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("`{0}` cannot be related to itself")]
    Reflexive(String),
    #[error("cycle through `{0}`")]
    Cycle(String),
    #[error("`{0}` and `{1}` must be ground or declare the same variables")]
    Scope(String, String),
    #[error("rule `{0}` is used by more than one group")]
    Regrouped(String),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// `a1,…,an → t1 = t2` becomes `→ t1 = (if a1 and … and an then t2 else t1)`.
pub fn rewrite_no_precondition(r: &GroundRule) -> GroundRule {
    let c = &r.consequent;
    let rhs = Term::cond(r.antecedent.clone(), c.rhs.clone(), c.lhs.clone());
    GroundRule { id: r.id.clone(), antecedent: Vec::new(), consequent: Assertion::eq(c.lhs.clone(), rhs) }
}

/// The rewritten rhs, with an empty condition collapsed to its then-branch.
fn guarded_rhs(antecedent: &[Assertion], c: &Assertion) -> Term {
    if antecedent.is_empty() {
        c.rhs.clone()
    } else {
        Term::cond(antecedent.to_vec(), c.rhs.clone(), c.lhs.clone())
    }
}

/// Splits `lhs = rhs` into componentwise pairs where both sides are tuples.
fn pairs(lhs: &Term, rhs: &Term, out: &mut Vec<(Term, Term)>) {
    match (lhs, rhs) {
        (Term::Tuple(ls), Term::Tuple(rs)) if ls.len() == rs.len() => {
            ls.iter().zip(rs).for_each(|(l, r)| pairs(l, r, out));
        }
        _ => out.push((lhs.clone(), rhs.clone())),
    }
}

fn tuple_assertion(ps: Vec<(Term, Term)>) -> Assertion {
    if ps.len() == 1 {
        let (l, r) = ps.into_iter().next().unwrap();
        return Assertion::eq(l, r);
    }
    let (ls, rs): (Vec<_>, Vec<_>) = ps.into_iter().unzip();
    Assertion::eq(Term::Tuple(ls), Term::Tuple(rs))
}

/// Attaches `r2` to `r`: both rewritten, consequents paired into one tuple
/// assertion. Keeps the id of `r`.
pub fn attach(r: &GroundRule, r2: &GroundRule) -> GroundRule {
    let mut ps = Vec::new();
    pairs(&r.consequent.lhs, &guarded_rhs(&r.antecedent, &r.consequent), &mut ps);
    pairs(&r2.consequent.lhs, &guarded_rhs(&r2.antecedent, &r2.consequent), &mut ps);
    GroundRule { id: r.id.clone(), antecedent: Vec::new(), consequent: tuple_assertion(ps) }
}

/// `(if φ1 then true else (if φ2 then true else … false))`
fn disjunction(conds: Vec<Vec<Assertion>>) -> Term {
    conds
        .into_iter()
        .rev()
        .fold(Term::ind(FALSE), |acc, c| Term::cond(c, Term::truth(), acc))
}

/// Group rule firing all members simultaneously against the pre-state.
/// It is triggered when some member is, so an untriggered group does not
/// occupy the engine.
pub fn group_finite(id: &str, rs: &[GroundRule]) -> GroundRule {
    let mut ps = Vec::new();
    for r in rs {
        pairs(&r.consequent.lhs, &guarded_rhs(&r.antecedent, &r.consequent), &mut ps);
    }
    let antecedent = if rs.iter().any(|r| r.antecedent.is_empty()) {
        Vec::new()
    } else {
        vec![Assertion::holds_true(disjunction(rs.iter().map(|r| r.antecedent.clone()).collect()))]
    };
    GroundRule { id: sym(id), antecedent, consequent: tuple_assertion(ps) }
}

/// Group of all instances of a schema over finite concepts.
pub fn group_schema(r: &SchemaRule, s: &Structure) -> Result<GroundRule, RuleError> {
    Ok(group_finite(&r.id, &r.enumerate_instances(s)?))
}

fn rebuild(sps: &Sps, rules: Vec<Rule>, prelude: Vec<Rule>, structure: Structure) -> Result<Sps, StrategyError> {
    let init = sps.init.clone();
    let mut out = Sps::with_parts(structure, rules, prelude, init)?;
    out.probability = sps.probability;
    Ok(out)
}

fn find<'a>(sps: &'a Sps, id: &str) -> Result<&'a Rule, StrategyError> {
    sps.rule(id).ok_or_else(|| StrategyError::UnknownRule(id.to_string()))
}

/// Replaces each group's members by the group rule, at the position of the
/// first member.
pub fn apply_groups(sps: &Sps, groups: &[GroupDecl]) -> Result<Sps, StrategyError> {
    if groups.is_empty() {
        return Ok(sps.clone());
    }
    let mut owner: BTreeMap<Sym, usize> = BTreeMap::new();
    let mut built = Vec::new();
    for (gi, g) in groups.iter().enumerate() {
        let mut instances = Vec::new();
        for m in &g.members {
            let rule = find(sps, m)?;
            if owner.insert(m.clone(), gi).is_some() {
                return Err(StrategyError::Regrouped(m.to_string()));
            }
            instances.extend(rule.instances(&sps.structure)?);
        }
        built.push(Some(group_finite(&g.id, &instances)));
    }
    let mut rules = Vec::new();
    for r in &sps.rules {
        match owner.get(r.id()) {
            Some(&gi) => {
                if let Some(g) = built[gi].take() {
                    rules.push(g.into());
                }
            }
            None => rules.push(r.clone()),
        }
    }
    rebuild(sps, rules, sps.prelude.clone(), sps.structure.clone())
}

/// Attaches every constant rule to every other rule. Each other rule keeps
/// its own antecedent as a guard. With no other rules the constants form one
/// always-triggered group.
pub fn apply_constant_rules(sps: &Sps, constants: &[Sym]) -> Result<Sps, StrategyError> {
    if constants.is_empty() {
        return Ok(sps.clone());
    }
    let mut attached = Vec::new();
    for c in constants {
        for g in find(sps, c)?.instances(&sps.structure)? {
            pairs(&g.consequent.lhs, &guarded_rhs(&g.antecedent, &g.consequent), &mut attached);
        }
    }
    let others: Vec<&Rule> = sps.rules.iter().filter(|r| !constants.contains(r.id())).collect();
    let rules = if others.is_empty() {
        let id = constants.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("+");
        vec![GroundRule { id: sym(&id), antecedent: Vec::new(), consequent: tuple_assertion(attached) }.into()]
    } else {
        others
            .into_iter()
            .map(|r| {
                let mut ps = Vec::new();
                pairs(&r.consequent().lhs, &r.consequent().rhs, &mut ps);
                ps.extend(attached.iter().cloned());
                r.with_body(r.antecedent().to_vec(), tuple_assertion(ps))
            })
            .collect()
    };
    rebuild(sps, rules, sps.prelude.clone(), sps.structure.clone())
}

/// Rejects self-loops and cycles in a relation given as edges.
fn check_dag(edges: &[(Sym, Sym)]) -> Result<(), StrategyError> {
    let mut adj: BTreeMap<&Sym, Vec<&Sym>> = BTreeMap::new();
    for (a, b) in edges {
        if a == b {
            return Err(StrategyError::Reflexive(a.to_string()));
        }
        adj.entry(a).or_default().push(b);
    }
    fn visit<'a>(
        n: &'a Sym,
        adj: &BTreeMap<&'a Sym, Vec<&'a Sym>>,
        state: &mut BTreeMap<&'a Sym, u8>,
    ) -> Result<(), StrategyError> {
        match state.get(n) {
            Some(1) => return Err(StrategyError::Cycle(n.to_string())),
            Some(_) => return Ok(()),
            None => {}
        }
        state.insert(n, 1);
        for m in adj.get(n).into_iter().flatten() {
            visit(m, adj, state)?;
        }
        state.insert(n, 2);
        Ok(())
    }
    let mut state = BTreeMap::new();
    for n in adj.keys() {
        visit(n, &adj, &mut state)?;
    }
    Ok(())
}

/// Term naming an instance of `r` from inside a rule with the same
/// variables, or `r` itself when ground.
fn self_ref(r: &Rule) -> Term {
    if r.decls().is_empty() {
        Term::Ind(r.id().clone())
    } else {
        Term::RuleRef(r.id().clone(), r.decls().iter().map(|d| (d.var.clone(), Term::Var(d.var.clone()))).collect())
    }
}

/// `other` may mention `r`'s instance when `r` is ground or both declare
/// the same variables.
fn check_scope(r: &Rule, other: &Rule) -> Result<(), StrategyError> {
    if r.decls().is_empty() || r.decls() == other.decls() {
        Ok(())
    } else {
        Err(StrategyError::Scope(r.id().to_string(), other.id().to_string()))
    }
}

fn flag_rule(id: &str, decls: &[VarDecl], antecedent: Vec<Assertion>, consequent: Assertion) -> Rule {
    SchemaRule::new(id, decls.to_vec(), antecedent, consequent).into()
}

/// For each `r ≻ r2`: step-start rules set `Applicable(r)` to true and then
/// to false when some antecedent of `r` fails; `r2` additionally requires
/// `Applicable(r) = false`.
pub fn apply_preference(sps: &Sps, pairs_: &[(Sym, Sym)]) -> Result<Sps, StrategyError> {
    if pairs_.is_empty() {
        return Ok(sps.clone());
    }
    check_dag(pairs_)?;
    let mut structure = sps.structure.clone();
    structure.ensure_operator(Operator::fluent(ops::APPLICABLE, &[RULE_C], Some(BOOL)));
    let mut prelude = sps.prelude.clone();
    let mut extra: BTreeMap<Sym, Vec<Assertion>> = BTreeMap::new();
    let mut flagged = BTreeSet::new();
    for (r_id, r2_id) in pairs_ {
        let r = find(sps, r_id)?;
        let r2 = find(sps, r2_id)?;
        check_scope(r, r2)?;
        let flag = Term::app(ops::APPLICABLE, vec![self_ref(r)]);
        if flagged.insert(r_id.clone()) {
            prelude.push(flag_rule(
                &format!("applicable_{r_id}"),
                r.decls(),
                vec![],
                Assertion::eq(flag.clone(), Term::truth()),
            ));
            for (i, a) in r.antecedent().iter().enumerate() {
                prelude.push(flag_rule(
                    &format!("inapplicable_{r_id}_{}", i + 1),
                    r.decls(),
                    vec![a.clone().negate()],
                    Assertion::eq(flag.clone(), Term::ind(FALSE)),
                ));
            }
        }
        extra.entry(r2_id.clone()).or_default().push(Assertion::eq(flag, Term::ind(FALSE)));
    }
    let rules = sps
        .rules
        .iter()
        .map(|r| match extra.get(r.id()) {
            Some(guards) => {
                let mut ante = r.antecedent().to_vec();
                ante.extend(guards.iter().cloned());
                r.with_body(ante, r.consequent().clone())
            }
            None => r.clone(),
        })
        .collect();
    rebuild(sps, rules, prelude, structure)
}

/// For each `r2 ▷ r`: `r2` records `Applied(r2) = true`; `r` requires it
/// and records `Applied(r) = true`. Participating rules are listed
/// successors first so first-match moves along the order.
pub fn apply_ordering(sps: &Sps, pairs_: &[(Sym, Sym)]) -> Result<Sps, StrategyError> {
    if pairs_.is_empty() {
        return Ok(sps.clone());
    }
    check_dag(pairs_)?;
    let mut structure = sps.structure.clone();
    structure.ensure_operator(Operator::fluent(ops::APPLIED, &[RULE_C], Some(BOOL)));
    let mut needs: BTreeMap<Sym, Vec<Assertion>> = BTreeMap::new();
    let mut participants = BTreeSet::new();
    for (before, after) in pairs_ {
        let b = find(sps, before)?;
        let a = find(sps, after)?;
        check_scope(b, a)?;
        participants.insert(before.clone());
        participants.insert(after.clone());
        let flag = Term::app(ops::APPLIED, vec![self_ref(b)]);
        needs.entry(after.clone()).or_default().push(Assertion::holds_true(flag));
    }
    let mut init = sps.init.clone();
    for p in &participants {
        for g in find(sps, p)?.instances(&sps.structure)? {
            init.push(Assertion::eq(Term::app(ops::APPLIED, vec![Term::Ind(g.id)]), Term::ind(FALSE)));
        }
    }
    let mut rules: Vec<Rule> = sps
        .rules
        .iter()
        .map(|r| {
            if !participants.contains(r.id()) {
                return r.clone();
            }
            let mut ante = r.antecedent().to_vec();
            ante.extend(needs.get(r.id()).into_iter().flatten().cloned());
            let mut ps = Vec::new();
            pairs(&r.consequent().lhs, &r.consequent().rhs, &mut ps);
            ps.push((Term::app(ops::APPLIED, vec![self_ref(r)]), Term::truth()));
            r.with_body(ante, tuple_assertion(ps))
        })
        .collect();

    // depth of each participant in the order; deeper rules come first
    let mut depth: BTreeMap<Sym, usize> = participants.iter().map(|p| (p.clone(), 0)).collect();
    for _ in 0..participants.len() {
        for (before, after) in pairs_ {
            let d = depth[before] + 1;
            if depth[after] < d {
                depth.insert(after.clone(), d);
            }
        }
    }
    let slots: Vec<usize> = rules.iter().enumerate().filter(|(_, r)| participants.contains(r.id())).map(|(i, _)| i).collect();
    let mut moved: Vec<Rule> = slots.iter().map(|&i| rules[i].clone()).collect();
    moved.sort_by_key(|r| std::cmp::Reverse(depth[r.id()]));
    for (slot, r) in slots.into_iter().zip(moved) {
        rules[slot] = r;
    }
    let mut out = rebuild(sps, rules, sps.prelude.clone(), structure)?;
    out.init = init;
    Ok(out)
}

/// Lowers a strategy spec: groups, then preference, ordering, constants.
pub fn lower(sps: &Sps, spec: &StrategySpec) -> Result<Sps, StrategyError> {
    let s = apply_groups(sps, &spec.groups)?;
    let s = apply_preference(&s, &spec.prefer)?;
    let s = apply_ordering(&s, &spec.order)?;
    apply_constant_rules(&s, &spec.constants)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{apply_rule, EngineConfig};
    use crate::state::{Key, WorldState};
    use crate::structure::Concept;
    use crate::term::Value;

    fn counter(name: &str) -> GroundRule {
        GroundRule::new(
            &format!("tick_{name}"),
            vec![],
            Assertion::eq(Term::constant(name), Term::app(ops::ADD, vec![Term::constant(name), Term::Real(1.0)])),
        )
    }

    #[test]
    fn attach_two_clocks() {
        let r = attach(&counter("t"), &counter("u"));
        assert_eq!(r.consequent.to_string(), "(t,u) = ((t+1),(u+1))");
        assert!(r.antecedent.is_empty());
    }

    #[test]
    fn rewrite_shape() {
        let r = GroundRule::new(
            "r",
            vec![Assertion::eq(Term::constant("a"), Term::ind("x"))],
            Assertion::eq(Term::constant("b"), Term::ind("y")),
        );
        assert_eq!(rewrite_no_precondition(&r).to_string(), "rule r: -> b = (if a = x then y else b);");
    }

    #[test]
    fn swap_group_exchanges() {
        let mut s = Structure::new();
        s.add_concept(Concept::finite("V", &["x", "y"])).unwrap();
        s.add_operator(Operator::fluent("a", &[], Some("V"))).unwrap();
        s.add_operator(Operator::fluent("b", &[], Some("V"))).unwrap();
        let g = group_finite(
            "swap",
            &[
                GroundRule::new("r1", vec![], Assertion::eq(Term::constant("a"), Term::constant("b"))),
                GroundRule::new("r2", vec![], Assertion::eq(Term::constant("b"), Term::constant("a"))),
            ],
        );
        let mut w = WorldState::new();
        w.set(Key::new(sym("a"), vec![]), Value::ind("x"));
        w.set(Key::new(sym("b"), vec![]), Value::ind("y"));
        assert_eq!(apply_rule(&g, &w, &s).unwrap().to_string(), "a = y\nb = x\n");
    }

    #[test]
    fn empty_group_is_never_triggered() {
        let g = group_finite("none", &[]);
        assert_eq!(g.antecedent[0].to_string(), "false");
    }

    fn clocks() -> Sps {
        let mut s = Structure::new();
        for n in ["a", "b", "c"] {
            s.add_operator(Operator::fluent(n, &[], Some("Real"))).unwrap();
        }
        let init = ["a", "b", "c"].iter().map(|n| Assertion::eq(Term::constant(n), Term::Real(0.0))).collect();
        Sps::with_parts(s, vec![counter("a").into(), counter("b").into(), counter("c").into()], vec![], init).unwrap()
    }

    #[test]
    fn total_order_sequences_rules() {
        let sps = clocks();
        let order = vec![(sym("tick_a"), sym("tick_b")), (sym("tick_b"), sym("tick_c"))];
        let lowered = apply_ordering(&sps, &order).unwrap();
        let r = lowered.run(&EngineConfig { max_steps: 3, ..Default::default() }).unwrap();
        let d: Vec<&str> = r.derivation.iter().map(|x| &**x).collect();
        assert_eq!(d, ["tick_a", "tick_b", "tick_c"]);
    }

    #[test]
    fn cycles_are_rejected() {
        let sps = clocks();
        let cyc = vec![(sym("tick_a"), sym("tick_b")), (sym("tick_b"), sym("tick_a"))];
        assert!(matches!(apply_ordering(&sps, &cyc), Err(StrategyError::Cycle(_))));
        assert!(matches!(apply_preference(&sps, &cyc), Err(StrategyError::Cycle(_))));
        let refl = vec![(sym("tick_a"), sym("tick_a"))];
        assert!(matches!(apply_preference(&sps, &refl), Err(StrategyError::Reflexive(_))));
    }

    #[test]
    fn constants_alone_form_one_group() {
        let sps = clocks();
        let all = vec![sym("tick_a"), sym("tick_b"), sym("tick_c")];
        let lowered = apply_constant_rules(&sps, &all).unwrap();
        assert_eq!(lowered.rules.len(), 1);
        let r = lowered.run(&EngineConfig { max_steps: 2, ..Default::default() }).unwrap();
        assert_eq!(r.state.to_string(), "a = 2\nb = 2\nc = 2\n");
    }
}
