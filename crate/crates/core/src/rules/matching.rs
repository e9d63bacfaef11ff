//! Finding the triggered instances of a schema rule.
//!
//! Naive grounding is fine for door-sized concepts but not for string or
//! formula languages, so antecedents are solved by matching where possible:
//! a ground side is evaluated and matched against a constructor / tuple /
//! concatenation pattern, and a fluent applied to patterns is matched
//! against the valuation entries of that fluent. Variables that cannot be
//! bound this way are enumerated over their concept. The result is the same
//! set `enumerate_instances` + `is_triggered` would give, sorted in
//! assignment order.

use crate::eval::{eval_term, holds};
use crate::rules::{Assignment, GroundRule, Rule, RuleError, SchemaRule};
use crate::state::WorldState;
use crate::structure::{ConceptKind, OperatorKind, Structure, MAX_ENUMERATION};
use crate::term::{ops, Assertion, Sym, Term, Value};

type Binding = Vec<(Sym, Value)>;

struct Matcher<'a> {
    rule: &'a SchemaRule,
    w: &'a WorldState,
    s: &'a Structure,
    out: Vec<Assignment>,
}

fn bound<'b>(b: &'b Binding, v: &str) -> Option<&'b Value> {
    b.iter().find(|(n, _)| &**n == v).map(|(_, val)| val)
}

fn ground_under(t: &Term, b: &Binding) -> bool {
    let mut vs = Vec::new();
    t.vars(&mut vs);
    vs.iter().all(|v| bound(b, v).is_some())
}

fn subst(t: &Term, b: &Binding) -> Term {
    t.substitute(&|v| bound(b, v).map(Value::to_term))
}

fn symbols(v: &Value) -> Option<Vec<Sym>> {
    match v {
        Value::Str(s) => Some(s.clone()),
        Value::Ind(x) if !v.is_undefined() => Some(vec![x.clone()]),
        _ => None,
    }
}

fn flatten_concat(t: &Term, out: &mut Vec<Term>) {
    match t {
        Term::App(op, args) if &**op == ops::CONCAT => args.iter().for_each(|a| flatten_concat(a, out)),
        other => out.push(other.clone()),
    }
}

impl<'a> Matcher<'a> {
    fn err(&self, e: crate::eval::EvalError) -> RuleError {
        RuleError::Eval { rule: self.rule.id.to_string(), source: e }
    }

    fn concept_of(&self, var: &str) -> &'a Sym {
        &self.rule.decls.iter().find(|d| &*d.var == var).expect("declared variable").concept
    }

    fn eval(&self, t: &Term, b: &Binding) -> Result<Value, RuleError> {
        eval_term(&subst(t, b), self.w, self.s).map_err(|e| self.err(e))
    }

    fn is_pattern(&self, t: &Term, b: &Binding) -> bool {
        if ground_under(t, b) {
            return true;
        }
        match t {
            Term::Var(_) => true,
            Term::Tuple(items) => items.iter().all(|i| self.is_pattern(i, b)),
            Term::App(op, args) => {
                let structural = &**op == ops::CONCAT
                    || self.s.operator(op).is_some_and(|o| o.kind == OperatorKind::Constructor);
                structural && args.iter().all(|a| self.is_pattern(a, b))
            }
            _ => false,
        }
    }

    fn match_pat(&self, p: &Term, v: &Value, b: &Binding) -> Result<Vec<Binding>, RuleError> {
        if ground_under(p, b) {
            let pv = self.eval(p, b)?;
            return Ok(if pv.is_defined() && &pv == v { vec![b.clone()] } else { vec![] });
        }
        match p {
            Term::Var(x) => {
                if self.s.contains(self.concept_of(x), v) {
                    let mut nb = b.clone();
                    nb.push((x.clone(), v.clone()));
                    Ok(vec![nb])
                } else {
                    Ok(vec![])
                }
            }
            Term::Tuple(items) => match v {
                Value::Tuple(vs) if vs.len() == items.len() => self.match_seq(items, vs, b),
                _ => Ok(vec![]),
            },
            Term::App(op, args) if &**op == ops::CONCAT => {
                let Some(syms) = symbols(v) else { return Ok(vec![]) };
                let mut pieces = Vec::new();
                args.iter().for_each(|a| flatten_concat(a, &mut pieces));
                self.match_concat(&pieces, &syms, b)
            }
            Term::App(op, args) => match v {
                Value::App(vop, vs) if vop == op && vs.len() == args.len() => self.match_seq(args, vs, b),
                _ => Ok(vec![]),
            },
            _ => Ok(vec![]),
        }
    }

    fn match_seq(&self, pats: &[Term], vals: &[Value], b: &Binding) -> Result<Vec<Binding>, RuleError> {
        let mut states = vec![b.clone()];
        for (p, v) in pats.iter().zip(vals) {
            let mut next = Vec::new();
            for st in &states {
                next.extend(self.match_pat(p, v, st)?);
            }
            states = next;
            if states.is_empty() {
                break;
            }
        }
        Ok(states)
    }

    fn match_concat(&self, pieces: &[Term], syms: &[Sym], b: &Binding) -> Result<Vec<Binding>, RuleError> {
        let Some((p, rest)) = pieces.split_first() else {
            return Ok(if syms.is_empty() { vec![b.clone()] } else { vec![] });
        };
        let mut out = Vec::new();
        if ground_under(p, b) {
            if let Some(ps) = symbols(&self.eval(p, b)?) {
                if syms.starts_with(&ps) {
                    out.extend(self.match_concat(rest, &syms[ps.len()..], b)?);
                }
            }
            return Ok(out);
        }
        if let Term::Var(x) = p {
            let concept = self.concept_of(x);
            let is_string = matches!(self.s.concept(concept).map(|c| &c.kind), Some(ConceptKind::Strings { .. }));
            if is_string {
                for k in 0..=syms.len() {
                    let cand = Value::Str(syms[..k].to_vec());
                    if self.s.contains(concept, &cand) {
                        let mut nb = b.clone();
                        nb.push((x.clone(), cand));
                        out.extend(self.match_concat(rest, &syms[k..], &nb)?);
                    }
                }
                return Ok(out);
            }
        }
        if let Some((first, tail)) = syms.split_first() {
            for nb in self.match_pat(p, &Value::Ind(first.clone()), b)? {
                out.extend(self.match_concat(rest, tail, &nb)?);
            }
        }
        Ok(out)
    }

    /// Matches a fluent applied to patterns against the valuation.
    fn solve_fluent(&self, f: &Term, other: &Term, b: &Binding) -> Result<Option<Vec<Binding>>, RuleError> {
        let Term::App(op, args) = f else { return Ok(None) };
        if !self.s.operator(op).is_some_and(|o| o.kind == OperatorKind::Fluent) {
            return Ok(None);
        }
        if !args.iter().all(|a| self.is_pattern(a, b)) {
            return Ok(None);
        }
        let target = if ground_under(other, b) {
            let v = self.eval(other, b)?;
            if !v.is_defined() {
                return Ok(Some(vec![]));
            }
            Some(v)
        } else if self.is_pattern(other, b) {
            None
        } else {
            return Ok(None);
        };
        let mut out = Vec::new();
        for (key_args, val) in self.w.entries_of(op) {
            if key_args.len() != args.len() {
                continue;
            }
            if let Some(t) = &target {
                if t != val {
                    continue;
                }
            }
            for nb in self.match_seq(args, key_args, b)? {
                if target.is_some() {
                    out.push(nb);
                } else {
                    out.extend(self.match_pat(other, val, &nb)?);
                }
            }
        }
        Ok(Some(out))
    }

    fn solve(&self, a: &Assertion, b: &Binding) -> Result<Option<Vec<Binding>>, RuleError> {
        let (l, r) = (&a.lhs, &a.rhs);
        if ground_under(l, b) && self.is_pattern(r, b) {
            let v = self.eval(l, b)?;
            return Ok(Some(if v.is_defined() { self.match_pat(r, &v, b)? } else { vec![] }));
        }
        if ground_under(r, b) && self.is_pattern(l, b) {
            let v = self.eval(r, b)?;
            return Ok(Some(if v.is_defined() { self.match_pat(l, &v, b)? } else { vec![] }));
        }
        if let Some(res) = self.solve_fluent(l, r, b)? {
            return Ok(Some(res));
        }
        self.solve_fluent(r, l, b)
    }

    fn enumerate_var(&mut self, i: usize, a_vars: &[Sym], b: &mut Binding) -> Result<(), RuleError> {
        let var = self
            .rule
            .decls
            .iter()
            .find(|d| a_vars.contains(&d.var) && bound(b, &d.var).is_none())
            .expect("an unbound variable")
            .clone();
        let members = self
            .s
            .members(&var.concept)
            .map_err(|e| RuleError::Structure { rule: self.rule.id.to_string(), source: e })?;
        for m in members {
            b.push((var.var.clone(), m.clone()));
            self.search(i, b)?;
            b.pop();
        }
        Ok(())
    }

    fn search(&mut self, i: usize, b: &mut Binding) -> Result<(), RuleError> {
        if i == self.rule.antecedent.len() {
            return self.finish(0, b);
        }
        let a = &self.rule.antecedent[i];
        let mut a_vars = Vec::new();
        a.vars(&mut a_vars);
        a_vars.retain(|v| bound(b, v).is_none());
        if a_vars.is_empty() {
            let g = a.substitute(&|v| bound(b, v).map(Value::to_term));
            if holds(&g, self.w, self.s).map_err(|e| self.err(e))? {
                self.search(i + 1, b)?;
            }
            return Ok(());
        }
        if !a.negated {
            if let Some(sols) = self.solve(a, b)? {
                for mut nb in sols {
                    let complete = a_vars.iter().all(|v| bound(&nb, v).is_some());
                    if complete {
                        self.search(i, &mut nb)?;
                    } else {
                        self.enumerate_var(i, &a_vars, &mut nb)?;
                    }
                }
                return Ok(());
            }
        }
        self.enumerate_var(i, &a_vars, b)
    }

    /// Binds variables that occur only in the consequent.
    fn finish(&mut self, d: usize, b: &mut Binding) -> Result<(), RuleError> {
        if d == self.rule.decls.len() {
            let full = self
                .rule
                .decls
                .iter()
                .map(|decl| (decl.var.clone(), bound(b, &decl.var).expect("bound").clone()))
                .collect();
            if self.out.len() == MAX_ENUMERATION {
                return Err(RuleError::TooManyInstances { rule: self.rule.id.to_string(), limit: MAX_ENUMERATION });
            }
            self.out.push(Assignment(full));
            return Ok(());
        }
        let decl = &self.rule.decls[d];
        if bound(b, &decl.var).is_some() {
            return self.finish(d + 1, b);
        }
        let members = self
            .s
            .members(&decl.concept)
            .map_err(|e| RuleError::Structure { rule: self.rule.id.to_string(), source: e })?;
        for m in members {
            b.push((decl.var.clone(), m.clone()));
            self.finish(d + 1, b)?;
            b.pop();
        }
        Ok(())
    }
}

/// Assignments under which every antecedent holds, in assignment order.
pub fn triggered_assignments(rule: &SchemaRule, w: &WorldState, s: &Structure) -> Result<Vec<Assignment>, RuleError> {
    let mut m = Matcher { rule, w, s, out: Vec::new() };
    m.search(0, &mut Vec::new())?;
    let mut out = m.out;
    let key = |a: &Assignment| -> Vec<(usize, Value)> {
        rule.decls
            .iter()
            .zip(&a.0)
            .map(|(d, (_, v))| (s.rank(&d.concept, v).unwrap_or(usize::MAX), v.clone()))
            .collect()
    };
    let mut keyed: Vec<_> = out.drain(..).map(|a| (key(&a), a)).collect();
    keyed.sort();
    keyed.dedup_by(|x, y| x.1 == y.1);
    Ok(keyed.into_iter().map(|(_, a)| a).collect())
}

/// Triggered ground instances of one rule, in assignment order.
pub fn triggered_instances(rule: &Rule, w: &WorldState, s: &Structure) -> Result<Vec<GroundRule>, RuleError> {
    match rule {
        Rule::Ground(g) => {
            let t = crate::rules::is_triggered(g, w, s).map_err(|e| RuleError::Eval { rule: g.id.to_string(), source: e })?;
            Ok(if t { vec![g.clone()] } else { vec![] })
        }
        Rule::Schema(r) => Ok(triggered_assignments(r, w, s)?.iter().map(|a| r.instantiate(a)).collect()),
    }
}
