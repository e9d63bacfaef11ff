//! The basic strategy: at each step at most one triggered ground rule
//! instance is applied.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eval::{eval_term, holds_all, EvalError};
use crate::rules::matching::triggered_instances;
use crate::rules::{Assignment, GroundRule, Rule, RuleError};
use crate::state::{Key, WorldState};
use crate::structure::{OperatorKind, Structure, RULE_C};
use crate::term::{ops, sym, Assertion, Sym, Term, Value};

/// A structured production system ⟨S, R⟩ plus what it takes to run it.
#[derive(Debug, Clone)]
pub struct Sps {
    pub structure: Structure,
    pub rules: Vec<Rule>,
    /// Bookkeeping rules run at every step start; every triggered instance
    /// is applied and none of them enter the derivation.
    pub prelude: Vec<Rule>,
    /// Initial valuation, applied in order.
    pub init: Vec<Assertion>,
    /// Whether `Pr(cd)` is reported after each step.
    pub probability: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("`{0}` is not assignable")]
    NotAssignable(String),
    #[error("rule `{0}` is not triggered")]
    NotTriggered(String),
    #[error("conflicting writes to `{key}`: `{first}` and `{second}`")]
    Conflict { key: String, first: String, second: String },
    #[error("value `{value}` written to `{key}` is outside `{concept}`")]
    RangeViolation { key: String, value: String, concept: String },
    #[error("shape mismatch assigning `{value}` to `{lhs}`")]
    Shape { lhs: String, value: String },
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("rule `{rule}` refers to undeclared `{name}`")]
    Unresolved { rule: String, name: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("initial state: {0}")]
    Init(Box<EngineError>),
    #[error("step {step}: {source}")]
    AtStep { step: usize, source: Box<EngineError> },
}

impl EngineError {
    /// The underlying error without step or init context.
    pub fn root(&self) -> &EngineError {
        match self {
            EngineError::AtStep { source, .. } | EngineError::Init(source) => source.root(),
            e => e,
        }
    }
}

/// Picks one instance of a named rule, optionally with a fixed assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleSelector {
    pub rule: Sym,
    pub bindings: Option<Vec<(Sym, Value)>>,
}

impl RuleSelector {
    pub fn rule(id: &str) -> RuleSelector {
        RuleSelector { rule: sym(id), bindings: None }
    }

    pub fn instance(id: &str, bindings: Vec<(&str, Value)>) -> RuleSelector {
        RuleSelector { rule: sym(id), bindings: Some(bindings.into_iter().map(|(v, x)| (sym(v), x)).collect()) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    FirstMatch,
    SeededRandom(u64),
    /// Step k applies the k-th selector; the run ends when the script does.
    Script(Vec<RuleSelector>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub policy: Policy,
    pub max_steps: usize,
    /// Event assertions per step, injected before matching and cleared after.
    pub events: Vec<Vec<Assertion>>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { policy: Policy::FirstMatch, max_steps: 1000, events: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HaltReason {
    Quiescent,
    StepLimit,
    ScriptEnd,
}

impl std::fmt::Display for HaltReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            HaltReason::Quiescent => "quiescent",
            HaltReason::StepLimit => "step-limit",
            HaltReason::ScriptEnd => "script-end",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WriteRecord {
    pub key: String,
    pub old: String,
    pub new: String,
}

/// One line of a trace. Field order is the serialization order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub events: Vec<String>,
    pub triggered: Vec<String>,
    pub selected: Option<String>,
    pub writes: Vec<WriteRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pr_cd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub initial: WorldState,
    pub state: WorldState,
    pub derivation: Vec<Sym>,
    pub halt: HaltReason,
    pub trace: Vec<TraceRecord>,
}

/// Result of one step.
#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Applied(Sym),
    Quiescent,
    ScriptEnd,
}

/// Writes computed against a pre-state, in key order.
pub type WriteSet = BTreeMap<Key, Value>;

fn key_of(lhs: &Term, w: &WorldState, s: &Structure) -> Result<Key, EngineError> {
    let Term::App(op, args) = lhs else { return Err(EngineError::NotAssignable(lhs.to_string())) };
    let o = s.operator(op).ok_or_else(|| EvalError::UnknownOperator(op.to_string()))?;
    if o.kind != OperatorKind::Fluent {
        return Err(EngineError::NotAssignable(lhs.to_string()));
    }
    if o.arity() != args.len() {
        return Err(EvalError::Arity { op: op.to_string(), expected: o.arity(), got: args.len() }.into());
    }
    let mut vals = Vec::with_capacity(args.len());
    for (i, (a, c)) in args.iter().zip(&o.domain).enumerate() {
        let v = eval_term(a, w, s)?;
        if !s.contains(c, &v) {
            return Err(EvalError::Domain {
                op: op.to_string(),
                position: i + 1,
                value: v.to_string(),
                concept: c.to_string(),
            }
            .into());
        }
        vals.push(v);
    }
    Ok(Key::new(op.clone(), vals))
}

fn push_write(out: &mut WriteSet, key: Key, value: Value, s: &Structure) -> Result<(), EngineError> {
    if value.is_defined() {
        if let Some(range) = s.operator(&key.op).and_then(|o| o.range.as_ref()) {
            if !s.contains(range, &value) {
                return Err(EngineError::RangeViolation {
                    key: key.to_string(),
                    value: value.to_string(),
                    concept: range.to_string(),
                });
            }
        }
    }
    match out.get(&key) {
        Some(prev) if *prev != value => Err(EngineError::Conflict {
            key: key.to_string(),
            first: prev.to_string(),
            second: value.to_string(),
        }),
        _ => {
            out.insert(key, value);
            Ok(())
        }
    }
}

fn assign_value(lhs: &Term, value: Value, w: &WorldState, s: &Structure, out: &mut WriteSet) -> Result<(), EngineError> {
    match lhs {
        Term::Tuple(ls) => match value {
            Value::Tuple(vs) if vs.len() == ls.len() => {
                for (l, v) in ls.iter().zip(vs) {
                    assign_value(l, v, w, s, out)?;
                }
                Ok(())
            }
            v => Err(EngineError::Shape { lhs: lhs.to_string(), value: v.to_string() }),
        },
        _ => {
            let key = key_of(lhs, w, s)?;
            push_write(out, key, value, s)
        }
    }
}

/// Collects the writes of `lhs = rhs` against the pre-state `w`. A
/// conditional rhs is resolved first; a branch that is literally the lhs
/// keeps the current value and produces no write.
fn collect(lhs: &Term, rhs: &Term, w: &WorldState, s: &Structure, out: &mut WriteSet) -> Result<(), EngineError> {
    let mut rhs = rhs;
    while let Term::Cond(c) = rhs {
        rhs = if holds_all(&c.condition, w, s)? { &c.then_term } else { &c.else_term };
    }
    if rhs == lhs {
        return Ok(());
    }
    match (lhs, rhs) {
        (Term::Tuple(ls), Term::Tuple(rs)) if ls.len() == rs.len() => {
            for (l, r) in ls.iter().zip(rs) {
                collect(l, r, w, s, out)?;
            }
            Ok(())
        }
        _ => {
            let v = eval_term(rhs, w, s)?;
            assign_value(lhs, v, w, s, out)
        }
    }
}

/// Writes a ground rule's consequent would make, all evaluated in `w`.
pub fn consequent_writes(r: &GroundRule, w: &WorldState, s: &Structure) -> Result<WriteSet, EngineError> {
    let mut out = WriteSet::new();
    collect(&r.consequent.lhs, &r.consequent.rhs, w, s, &mut out)?;
    Ok(out)
}

/// Commits writes, returning trace records for the keys whose value changed.
pub fn commit(w: &mut WorldState, writes: WriteSet) -> Vec<WriteRecord> {
    let mut recs = Vec::new();
    for (k, v) in writes {
        let old = w.get(&k);
        if old != v {
            recs.push(WriteRecord { key: k.to_string(), old: old.to_string(), new: v.to_string() });
            w.set(k, v);
        }
    }
    recs
}

/// Applies a triggered ground rule.
pub fn apply_rule(r: &GroundRule, w: &WorldState, s: &Structure) -> Result<WorldState, EngineError> {
    if !holds_all(&r.antecedent, w, s)? {
        return Err(EngineError::NotTriggered(r.id.to_string()));
    }
    let writes = consequent_writes(r, w, s)?;
    let mut next = w.clone();
    commit(&mut next, writes);
    Ok(next)
}

fn check_refs(rule: &Rule, s: &Structure) -> Result<(), EngineError> {
    let unresolved = |name: &Sym| EngineError::Unresolved { rule: rule.id().to_string(), name: name.to_string() };
    for d in rule.decls() {
        if s.concept(&d.concept).is_none() {
            return Err(unresolved(&d.concept));
        }
    }
    let mut terms: Vec<&Term> = Vec::new();
    for a in rule.antecedent().iter().chain(std::iter::once(rule.consequent())) {
        terms.push(&a.lhs);
        terms.push(&a.rhs);
    }
    for t in terms {
        let mut opnames = Vec::new();
        t.operators(&mut opnames);
        if let Some(o) = opnames.iter().find(|o| s.operator(o).is_none()) {
            return Err(unresolved(o));
        }
        let mut inds = Vec::new();
        t.individuals(&mut inds);
        if let Some(i) = inds.iter().find(|i| !s.has_individual(i) && !s.contains(RULE_C, &Value::Ind((*i).clone()))) {
            return Err(unresolved(i));
        }
    }
    Ok(())
}

impl Sps {
    /// Builds an SPS; rule ids become members of `RuleC`.
    pub fn new(structure: Structure, rules: Vec<Rule>) -> Result<Sps, EngineError> {
        Sps::with_parts(structure, rules, Vec::new(), Vec::new())
    }

    pub fn with_parts(
        mut structure: Structure,
        rules: Vec<Rule>,
        prelude: Vec<Rule>,
        init: Vec<Assertion>,
    ) -> Result<Sps, EngineError> {
        for r in rules.iter().chain(&prelude) {
            structure.register_rule_id(r.id());
        }
        let sps = Sps { structure, rules, prelude, init, probability: false };
        sps.validate()?;
        Ok(sps)
    }

    /// Rule invariants and name resolution.
    pub fn validate(&self) -> Result<(), EngineError> {
        let mut seen = std::collections::HashSet::new();
        for r in self.rules.iter().chain(&self.prelude) {
            if !seen.insert(r.id().clone()) {
                return Err(EngineError::Config(format!("duplicate rule id `{}`", r.id())));
            }
            r.validate(&self.structure)?;
            check_refs(r, &self.structure)?;
        }
        for a in &self.init {
            if a.negated || !a.is_ground() {
                return Err(EngineError::Init(Box::new(EngineError::NotAssignable(a.to_string()))));
            }
        }
        Ok(())
    }

    pub fn rule(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| &**r.id() == id)
    }

    pub fn initial_state(&self) -> Result<WorldState, EngineError> {
        let mut w = WorldState::new();
        for a in &self.init {
            let mut writes = WriteSet::new();
            collect(&a.lhs, &a.rhs, &w, &self.structure, &mut writes).map_err(|e| EngineError::Init(Box::new(e)))?;
            commit(&mut w, writes);
        }
        Ok(w)
    }

    /// All triggered ground instances, in rule order then assignment order.
    pub fn triggered_set(&self, w: &WorldState) -> Result<Vec<GroundRule>, EngineError> {
        let mut out = Vec::new();
        for r in &self.rules {
            out.extend(triggered_instances(r, w, &self.structure)?);
        }
        Ok(out)
    }

    fn select_scripted(&self, sel: &RuleSelector, w: &WorldState) -> Result<Option<GroundRule>, EngineError> {
        let rule = self.rule(&sel.rule).ok_or_else(|| EngineError::UnknownRule(sel.rule.to_string()))?;
        match (&sel.bindings, rule) {
            (Some(b), Rule::Schema(schema)) => {
                let g = schema.ground_instance(&Assignment(b.clone()), &self.structure)?;
                Ok(holds_all(&g.antecedent, w, &self.structure)?.then_some(g))
            }
            _ => Ok(triggered_instances(rule, w, &self.structure)?.into_iter().next()),
        }
    }

    fn run_prelude(&self, w: &mut WorldState, recs: &mut Vec<WriteRecord>) -> Result<(), EngineError> {
        for r in &self.prelude {
            for g in triggered_instances(r, w, &self.structure)? {
                let writes = consequent_writes(&g, w, &self.structure)?;
                recs.extend(commit(w, writes));
            }
        }
        Ok(())
    }

    fn pr_cd(&self, w: &WorldState) -> Option<f64> {
        if !self.probability {
            return None;
        }
        let t = Term::app(ops::PR, vec![Term::constant(ops::CD)]);
        eval_term(&t, w, &self.structure).ok().and_then(|v| v.as_real())
    }

    /// One step of the basic strategy.
    pub fn step(
        &self,
        w: &mut WorldState,
        index: usize,
        events: &[Assertion],
        policy: &Policy,
        rng: &mut ChaCha8Rng,
    ) -> Result<(StepOutcome, TraceRecord), EngineError> {
        let s = &self.structure;
        let mut writes_rec = Vec::new();

        let mut injected = WriteSet::new();
        for e in events {
            collect(&e.lhs, &e.rhs, w, s, &mut injected)?;
        }
        let restore: Vec<(Key, Value)> = injected.keys().map(|k| (k.clone(), w.get(k))).collect();
        writes_rec.extend(commit(w, injected));
        self.run_prelude(w, &mut writes_rec)?;

        let (triggered, chosen) = match policy {
            Policy::Script(script) => match script.get(index) {
                None => (Vec::new(), None),
                Some(sel) => {
                    let g = self
                        .select_scripted(sel, w)?
                        .ok_or_else(|| EngineError::NotTriggered(sel.rule.to_string()))?;
                    (vec![g.id.to_string()], Some(g))
                }
            },
            Policy::FirstMatch => {
                let t = self.triggered_set(w)?;
                let ids = t.iter().map(|g| g.id.to_string()).collect();
                (ids, t.into_iter().next())
            }
            Policy::SeededRandom(_) => {
                let t = self.triggered_set(w)?;
                let ids = t.iter().map(|g| g.id.to_string()).collect();
                let pick = if t.is_empty() { None } else { Some(rng.gen_range(0..t.len())) };
                (ids, pick.and_then(|i| t.into_iter().nth(i)))
            }
        };

        let mut written = std::collections::HashSet::new();
        if let Some(g) = &chosen {
            let writes = consequent_writes(g, w, s)?;
            written.extend(writes.keys().cloned());
            writes_rec.extend(commit(w, writes));
        }
        let mut clear = WriteSet::new();
        for (k, old) in restore {
            if !written.contains(&k) {
                clear.insert(k, old);
            }
        }
        writes_rec.extend(commit(w, clear));

        let outcome = match (&chosen, policy) {
            (Some(g), _) => StepOutcome::Applied(g.id.clone()),
            (None, Policy::Script(_)) => StepOutcome::ScriptEnd,
            (None, _) => StepOutcome::Quiescent,
        };
        let rec = TraceRecord {
            step: index + 1,
            events: events.iter().map(|e| e.to_string()).collect(),
            triggered,
            selected: chosen.map(|g| g.id.to_string()),
            writes: writes_rec,
            pr_cd: self.pr_cd(w),
        };
        Ok((outcome, rec))
    }

    /// Steps until quiescence, the step limit, or the end of a script.
    pub fn run(&self, cfg: &EngineConfig) -> Result<RunResult, EngineError> {
        if cfg.max_steps == 0 {
            return Err(EngineError::Config("max_steps must be at least 1".into()));
        }
        let initial = self.initial_state()?;
        let mut w = initial.clone();
        let seed = match cfg.policy {
            Policy::SeededRandom(seed) => seed,
            _ => 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut derivation = Vec::new();
        let mut trace = Vec::new();
        let mut halt = HaltReason::StepLimit;
        for i in 0..cfg.max_steps {
            let events = cfg.events.get(i).map(Vec::as_slice).unwrap_or(&[]);
            let (outcome, rec) = self
                .step(&mut w, i, events, &cfg.policy, &mut rng)
                .map_err(|e| EngineError::AtStep { step: i + 1, source: Box::new(e) })?;
            trace.push(rec);
            match outcome {
                StepOutcome::Applied(id) => derivation.push(id),
                StepOutcome::Quiescent => {
                    halt = HaltReason::Quiescent;
                    break;
                }
                StepOutcome::ScriptEnd => {
                    halt = HaltReason::ScriptEnd;
                    break;
                }
            }
        }
        Ok(RunResult { initial, state: w, derivation, halt, trace })
    }

    /// Every maximal derivation from the initial state without events,
    /// depth-first in triggered-set order. Branches whose write leaves an
    /// operator's range are dropped; branches longer than `max_depth` are
    /// reported as truncated.
    pub fn explore(&self, max_depth: usize) -> Result<Exploration, EngineError> {
        let mut ex = Exploration::default();
        let w = self.initial_state()?;
        let mut path = Vec::new();
        self.explore_from(&w, &mut path, max_depth, &mut ex)?;
        Ok(ex)
    }

    fn explore_from(
        &self,
        w: &WorldState,
        path: &mut Vec<Sym>,
        max_depth: usize,
        ex: &mut Exploration,
    ) -> Result<(), EngineError> {
        let mut w = w.clone();
        self.run_prelude(&mut w, &mut Vec::new())?;
        let triggered = self.triggered_set(&w)?;
        if triggered.is_empty() {
            ex.complete.push((path.clone(), w));
            return Ok(());
        }
        if path.len() == max_depth {
            ex.truncated += 1;
            return Ok(());
        }
        for g in triggered {
            let writes = match consequent_writes(&g, &w, &self.structure) {
                Ok(ws) => ws,
                Err(EngineError::RangeViolation { .. }) => {
                    ex.pruned += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let mut next = w.clone();
            commit(&mut next, writes);
            path.push(g.id.clone());
            self.explore_from(&next, path, max_depth, ex)?;
            path.pop();
        }
        Ok(())
    }
}

/// Outcome of [`Sps::explore`].
#[derive(Debug, Clone, Default)]
pub struct Exploration {
    /// Derivations ending in quiescence, with their final states.
    pub complete: Vec<(Vec<Sym>, WorldState)>,
    /// Branches cut by a range violation.
    pub pruned: usize,
    /// Branches cut by the depth limit.
    pub truncated: usize,
}

/// Replays trace writes over the initial valuation (both canonical).
pub fn replay(initial: &WorldState, trace: &[TraceRecord]) -> BTreeMap<String, String> {
    let mut m = initial.canonical();
    for rec in trace {
        for wr in &rec.writes {
            if wr.new == crate::term::UNDEFINED {
                m.remove(&wr.key);
            } else {
                m.insert(wr.key.clone(), wr.new.clone());
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{SchemaRule, VarDecl};
    use crate::structure::{Concept, Operator};

    pub(crate) fn clock() -> Sps {
        let mut s = Structure::new();
        s.add_operator(Operator::fluent("t", &[], Some("Real"))).unwrap();
        let tick = GroundRule::new(
            "tick",
            vec![],
            Assertion::eq(Term::constant("t"), Term::app(ops::ADD, vec![Term::constant("t"), Term::Real(1.0)])),
        );
        let init = vec![Assertion::eq(Term::constant("t"), Term::Real(0.0))];
        Sps::with_parts(s, vec![tick.into()], vec![], init).unwrap()
    }

    #[test]
    fn clock_counts() {
        let sps = clock();
        let r = sps.run(&EngineConfig { max_steps: 3, ..Default::default() }).unwrap();
        assert_eq!(r.state.to_string(), "t = 3\n");
        assert_eq!(r.derivation.len(), 3);
        assert_eq!(r.halt, HaltReason::StepLimit);
        let one = sps.run(&EngineConfig { max_steps: 1, ..Default::default() }).unwrap();
        assert_eq!(one.state.to_string(), "t = 1\n");
        assert!(sps.run(&EngineConfig { max_steps: 0, ..Default::default() }).is_err());
    }

    fn pair() -> Structure {
        let mut s = Structure::new();
        s.add_concept(Concept::finite("V", &["x", "y"])).unwrap();
        s.add_operator(Operator::fluent("a", &[], Some("V"))).unwrap();
        s.add_operator(Operator::fluent("b", &[], Some("V"))).unwrap();
        s
    }

    #[test]
    fn tuple_consequent_uses_pre_state() {
        let s = pair();
        let swap = GroundRule::new(
            "swap",
            vec![],
            Assertion::eq(
                Term::Tuple(vec![Term::constant("a"), Term::constant("b")]),
                Term::Tuple(vec![Term::constant("b"), Term::constant("a")]),
            ),
        );
        let mut w = WorldState::new();
        w.set(Key::new(sym("a"), vec![]), Value::ind("x"));
        w.set(Key::new(sym("b"), vec![]), Value::ind("y"));
        let next = apply_rule(&swap, &w, &s).unwrap();
        assert_eq!(next.to_string(), "a = y\nb = x\n");
    }

    #[test]
    fn conflicting_tuple_writes_fail_identical_merge() {
        let s = pair();
        let both = |v1: &str, v2: &str| {
            GroundRule::new(
                "r",
                vec![],
                Assertion::eq(
                    Term::Tuple(vec![Term::constant("a"), Term::constant("a")]),
                    Term::Tuple(vec![Term::ind(v1), Term::ind(v2)]),
                ),
            )
        };
        let w = WorldState::new();
        assert!(apply_rule(&both("x", "x"), &w, &s).is_ok());
        assert!(matches!(apply_rule(&both("x", "y"), &w, &s), Err(EngineError::Conflict { .. })));
    }

    #[test]
    fn range_is_enforced_on_writes() {
        let s = pair();
        let bad = GroundRule::new("bad", vec![], Assertion::eq(Term::constant("a"), Term::ind("true")));
        assert!(matches!(apply_rule(&bad, &WorldState::new(), &s), Err(EngineError::RangeViolation { .. })));
    }

    #[test]
    fn events_are_cleared_and_trace_replays() {
        let mut s = Structure::new();
        s.add_concept(Concept::finite("Door", &["d1"])).unwrap();
        s.add_concept(Concept::finite("StatusV", &["o", "c"])).unwrap();
        s.add_operator(Operator::fluent("Status", &["Door"], Some("StatusV"))).unwrap();
        s.add_operator(Operator::fluent("Close", &["Door"], Some("Bool"))).unwrap();
        let x = || Term::var("x");
        let r = SchemaRule::new(
            "close",
            vec![VarDecl::new("x", "Door")],
            vec![
                Assertion::eq(Term::app("Status", vec![x()]), Term::ind("o")),
                Assertion::holds_true(Term::app("Close", vec![x()])),
            ],
            Assertion::eq(Term::app("Status", vec![x()]), Term::ind("c")),
        );
        let init = vec![Assertion::eq(Term::app("Status", vec![Term::ind("d1")]), Term::ind("o"))];
        let sps = Sps::with_parts(s, vec![r.into()], vec![], init).unwrap();
        let cfg = EngineConfig {
            events: vec![vec![Assertion::holds_true(Term::app("Close", vec![Term::ind("d1")]))]],
            ..Default::default()
        };
        let res = sps.run(&cfg).unwrap();
        assert_eq!(res.derivation, vec![sym("close[x=d1]")]);
        assert_eq!(res.halt, HaltReason::Quiescent);
        assert_eq!(res.state.to_string(), "Status(d1) = c\n");
        assert_eq!(replay(&res.initial, &res.trace), res.state.canonical());
        let line = serde_json::to_string(&res.trace[0]).unwrap();
        assert!(line.starts_with("{\"step\":1,\"events\":[\"Close(d1)\"],\"triggered\":[\"close[x=d1]\"]"), "{line}");
    }

    #[test]
    fn seeded_random_is_reproducible() {
        let mut s = pair();
        s.add_operator(Operator::fluent("n", &[], Some("Real"))).unwrap();
        let set = |id: &str, v: &str| GroundRule::new(id, vec![], Assertion::eq(Term::constant("a"), Term::ind(v))).into();
        let sps = Sps::new(s, vec![set("rx", "x"), set("ry", "y")]).unwrap();
        let cfg = EngineConfig { policy: Policy::SeededRandom(7), max_steps: 20, events: vec![] };
        let a = sps.run(&cfg).unwrap();
        let b = sps.run(&cfg).unwrap();
        assert_eq!(a.derivation, b.derivation);
        assert!(a.derivation.iter().any(|d| &**d == "rx") && a.derivation.iter().any(|d| &**d == "ry"));
    }

    #[test]
    fn unresolved_names_are_rejected() {
        let s = pair();
        let r = GroundRule::new("r", vec![], Assertion::eq(Term::constant("a"), Term::ind("nowhere")));
        assert!(matches!(Sps::new(s, vec![r.into()]), Err(EngineError::Unresolved { .. })));
    }
}
