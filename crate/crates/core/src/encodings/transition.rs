//! State-transition systems: one ground rule per transition,
//! `State = s, Do(a) -> State = s2`.

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;

use super::{check_distinct, check_name, from_toml, invalid, EncodingError};
use crate::program::Program;
use crate::rules::GroundRule;
use crate::structure::{Concept, Operator, Structure, BOOL};
use crate::term::{Assertion, Term};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionSystemDesc {
    pub states: Vec<String>,
    #[serde(default)]
    pub actions: Vec<String>,
    pub initial: Option<String>,
    /// `[state, action, next]`
    #[serde(default)]
    pub transitions: Vec<[String; 3]>,
    #[serde(default)]
    pub nondeterministic: bool,
}

pub const STATE: &str = "State";
pub const DO: &str = "Do";
pub const STATE_CONCEPT: &str = "StateV";
pub const ACTION_CONCEPT: &str = "ActionV";

impl TransitionSystemDesc {
    pub fn from_toml(src: &str) -> Result<TransitionSystemDesc, EncodingError> {
        let d: TransitionSystemDesc = from_toml(src)?;
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), EncodingError> {
        for s in &self.states {
            check_name("state", s)?;
        }
        for a in &self.actions {
            check_name("action", a)?;
        }
        check_distinct("name", self.states.iter().chain(&self.actions))?;
        for n in self.states.iter().chain(&self.actions) {
            if [STATE, DO, STATE_CONCEPT, ACTION_CONCEPT].contains(&n.as_str()) {
                return invalid(format!("`{n}` is reserved by the encoding"));
            }
        }
        if let Some(i) = &self.initial {
            if !self.states.contains(i) {
                return invalid(format!("initial state `{i}` is not a state"));
            }
        }
        let mut seen = BTreeSet::new();
        for [s, a, t] in &self.transitions {
            if !self.states.contains(s) || !self.states.contains(t) {
                return invalid(format!("transition ({s}, {a}, {t}) uses an unknown state"));
            }
            if !self.actions.contains(a) {
                return invalid(format!("transition ({s}, {a}, {t}) uses an unknown action"));
            }
            if !self.nondeterministic && !seen.insert((s, a)) {
                return invalid(format!("duplicate transition for state `{s}` and action `{a}`"));
            }
        }
        Ok(())
    }
}

pub fn compile_transition_system(d: &TransitionSystemDesc) -> Result<Program, EncodingError> {
    d.validate()?;
    let mut s = Structure::new();
    let states: Vec<&str> = d.states.iter().map(String::as_str).collect();
    let actions: Vec<&str> = d.actions.iter().map(String::as_str).collect();
    s.add_concept(Concept::finite(STATE_CONCEPT, &states))?;
    s.add_concept(Concept::finite(ACTION_CONCEPT, &actions))?;
    s.add_operator(Operator::fluent(STATE, &[], Some(STATE_CONCEPT)))?;
    s.add_operator(Operator::fluent(DO, &[ACTION_CONCEPT], Some(BOOL)))?;
    let mut p = Program::new(s);
    for (i, [from, a, to]) in d.transitions.iter().enumerate() {
        p.rules.push(
            GroundRule::new(
                &format!("t{}", i + 1),
                vec![
                    Assertion::eq(Term::constant(STATE), Term::ind(from)),
                    Assertion::holds_true(Term::app(DO, vec![Term::ind(a)])),
                ],
                Assertion::eq(Term::constant(STATE), Term::ind(to)),
            )
            .into(),
        );
    }
    if let Some(i) = &d.initial {
        p.init.push(Assertion::eq(Term::constant(STATE), Term::ind(i)));
    }
    Ok(p)
}

/// The event asserting that action `a` happens.
pub fn action_event(a: &str) -> Assertion {
    Assertion::holds_true(Term::app(DO, vec![Term::ind(a)]))
}

/// Direct simulation: the state after each action, following the first
/// listed transition; an action without a transition leaves the state.
pub fn simulate(d: &TransitionSystemDesc, start: &str, actions: &[&str]) -> String {
    let mut table: BTreeMap<(&str, &str), &str> = BTreeMap::new();
    for [s, a, t] in &d.transitions {
        table.entry((s.as_str(), a.as_str())).or_insert(t.as_str());
    }
    let mut cur = start;
    for a in actions {
        if let Some(t) = table.get(&(cur, *a)) {
            cur = t;
        }
    }
    cur.to_string()
}

/// The n-door system: states are open/closed vectors (`s_oc` for door 1
/// open, door 2 closed), actions `close_i` / `open_i`. With `self_loops`
/// every (state, action) pair has a transition (2n·2^n of them);
/// without, only the n·2^n status-changing ones are listed.
pub fn door_system(n: usize, self_loops: bool) -> TransitionSystemDesc {
    let state_name = |bits: usize| -> String {
        let mut s = String::from("s_");
        for i in 0..n {
            s.push(if bits >> i & 1 == 1 { 'o' } else { 'c' });
        }
        s
    };
    let states: Vec<String> = (0..1usize << n).map(state_name).collect();
    let mut actions = Vec::new();
    for i in 1..=n {
        actions.push(format!("close_{i}"));
        actions.push(format!("open_{i}"));
    }
    let mut transitions = Vec::new();
    for bits in 0..1usize << n {
        for i in 0..n {
            let open = bits >> i & 1 == 1;
            for (action, target_open) in [(format!("close_{}", i + 1), false), (format!("open_{}", i + 1), true)] {
                if open == target_open && !self_loops {
                    continue;
                }
                let next = if target_open { bits | 1 << i } else { bits & !(1 << i) };
                transitions.push([state_name(bits), action, state_name(next)]);
            }
        }
    }
    TransitionSystemDesc { states, actions, initial: Some(state_name(0)), transitions, nondeterministic: false }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_one_has_sixteen_transitions() {
        let d = door_system(2, true);
        assert_eq!(d.states.len(), 4);
        assert_eq!(d.transitions.len(), 16);
        assert_eq!(door_system(2, false).transitions.len(), 8);
        let p = compile_transition_system(&d).unwrap();
        assert_eq!(p.rules.len(), 16);
    }

    #[test]
    fn duplicates_are_rejected_unless_nondeterministic() {
        let src = r#"
            states = ["a", "b"]
            actions = ["go"]
            transitions = [["a", "go", "b"], ["a", "go", "a"]]
        "#;
        assert!(TransitionSystemDesc::from_toml(src).is_err());
        let nd = format!("{src}\nnondeterministic = true");
        assert!(TransitionSystemDesc::from_toml(&nd).is_ok());
    }

    #[test]
    fn simulator_follows_transitions() {
        let d = door_system(2, false);
        assert_eq!(simulate(&d, "s_cc", &["open_1", "open_2", "close_1"]), "s_co");
    }
}
