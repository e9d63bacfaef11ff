//! Turing machines on a bounded tape.
//!
//! Cells `c0 .. c{n-1}` form the concept `Cell`; `Right` and `Left` are
//! fluents initialized to the neighbor cells, with the off-tape individual
//! `off` past either end. `Head` ranges over `Cell`, so a move off the tape
//! is a range violation. Each table entry `(q, a) -> (q2, b, m)` becomes
//!
//! ```text
//! schema tm_k: Q = q, Head = i, Tape(i) = s_a -> (Q, Tape(i), Head) = (q2, s_b, Right(i)) where i: Cell;
//! ```

use std::collections::BTreeMap;

use serde::Deserialize;

use super::{check_distinct, check_name, from_toml, invalid, EncodingError};
use crate::program::Program;
use crate::rules::{SchemaRule, VarDecl};
use crate::state::WorldState;
use crate::structure::{Concept, Operator, Structure};
use crate::term::{sym, Assertion, Term, Value};

pub const CELL: &str = "Cell";
pub const CELL_X: &str = "CellX";
pub const SYMBOL: &str = "Symbol";
pub const QSTATE: &str = "QState";
pub const OFF: &str = "off";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum Move {
    L,
    R,
    S,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TmTransition {
    pub state: String,
    pub read: String,
    pub write: String,
    #[serde(rename = "move")]
    pub mv: Move,
    pub next: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuringDesc {
    pub states: Vec<String>,
    pub start: String,
    /// Tape symbols other than the blank.
    pub alphabet: Vec<String>,
    #[serde(default = "default_blank")]
    pub blank: String,
    pub tape_len: usize,
    /// One alphabet symbol per character.
    #[serde(default)]
    pub input: String,
    /// Cell the input starts at; the head starts there too.
    #[serde(default)]
    pub offset: usize,
    pub transitions: Vec<TmTransition>,
}

fn default_blank() -> String {
    "_".to_string()
}

pub fn symbol_name(a: &str) -> String {
    format!("s_{a}")
}

pub fn cell_name(i: usize) -> String {
    format!("c{i}")
}

impl TuringDesc {
    pub fn from_toml(src: &str) -> Result<TuringDesc, EncodingError> {
        let d: TuringDesc = from_toml(src)?;
        d.validate()?;
        Ok(d)
    }

    fn symbols(&self) -> impl Iterator<Item = &String> {
        std::iter::once(&self.blank).chain(&self.alphabet)
    }

    fn input_symbols(&self) -> Vec<String> {
        self.input.chars().map(|c| c.to_string()).collect()
    }

    pub fn validate(&self) -> Result<(), EncodingError> {
        for q in &self.states {
            check_name("state", q)?;
            if q.starts_with("s_") || q.starts_with('c') && q[1..].chars().all(|c| c.is_ascii_digit()) || q == OFF {
                return invalid(format!("state `{q}` collides with the cell or symbol names"));
            }
            if [CELL, CELL_X, SYMBOL, QSTATE, "Q", "Head", "Tape", "Right", "Left"].contains(&q.as_str()) {
                return invalid(format!("`{q}` is reserved by the encoding"));
            }
        }
        check_distinct("state", &self.states)?;
        for a in self.symbols() {
            check_name("symbol", &symbol_name(a))?;
        }
        check_distinct("symbol", self.symbols())?;
        if !self.states.contains(&self.start) {
            return invalid(format!("start state `{}` is not a state", self.start));
        }
        if self.tape_len == 0 {
            return invalid("tape_len must be positive");
        }
        let input = self.input_symbols();
        if self.offset + input.len() > self.tape_len || self.offset >= self.tape_len {
            return invalid("input does not fit on the tape");
        }
        for a in &input {
            if !self.alphabet.contains(a) && a != &self.blank {
                return invalid(format!("input symbol `{a}` is not in the alphabet"));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for t in &self.transitions {
            if !self.states.contains(&t.state) || !self.states.contains(&t.next) {
                return invalid(format!("transition from `{}` uses an unknown state", t.state));
            }
            for a in [&t.read, &t.write] {
                if !self.symbols().any(|s| s == a) {
                    return invalid(format!("transition from `{}` uses unknown symbol `{a}`", t.state));
                }
            }
            if !seen.insert((&t.state, &t.read)) {
                return invalid(format!("two transitions for state `{}` reading `{}`", t.state, t.read));
            }
        }
        Ok(())
    }
}

pub fn compile_turing(d: &TuringDesc) -> Result<Program, EncodingError> {
    d.validate()?;
    let cells: Vec<String> = (0..d.tape_len).map(cell_name).collect();
    let cell_refs: Vec<&str> = cells.iter().map(String::as_str).collect();
    let mut cells_x = cell_refs.clone();
    cells_x.push(OFF);
    let syms: Vec<String> = d.symbols().map(|a| symbol_name(a)).collect();
    let sym_refs: Vec<&str> = syms.iter().map(String::as_str).collect();
    let states: Vec<&str> = d.states.iter().map(String::as_str).collect();

    let mut s = Structure::new();
    s.add_concept(Concept::finite(CELL, &cell_refs))?;
    s.add_concept(Concept::finite(CELL_X, &cells_x))?;
    s.add_concept(Concept::finite(SYMBOL, &sym_refs))?;
    s.add_concept(Concept::finite(QSTATE, &states))?;
    s.add_operator(Operator::fluent("Q", &[], Some(QSTATE)))?;
    s.add_operator(Operator::fluent("Head", &[], Some(CELL)))?;
    s.add_operator(Operator::fluent("Tape", &[CELL], Some(SYMBOL)))?;
    s.add_operator(Operator::fluent("Right", &[CELL], Some(CELL_X)))?;
    s.add_operator(Operator::fluent("Left", &[CELL], Some(CELL_X)))?;

    let mut p = Program::new(s);
    let i = || Term::var("i");
    for (k, t) in d.transitions.iter().enumerate() {
        let head_after = match t.mv {
            Move::L => Term::app("Left", vec![i()]),
            Move::R => Term::app("Right", vec![i()]),
            Move::S => i(),
        };
        p.rules.push(
            SchemaRule::new(
                &format!("tm{}", k + 1),
                vec![VarDecl::new("i", CELL)],
                vec![
                    Assertion::eq(Term::constant("Q"), Term::ind(&t.state)),
                    Assertion::eq(Term::constant("Head"), i()),
                    Assertion::eq(Term::app("Tape", vec![i()]), Term::ind(&symbol_name(&t.read))),
                ],
                Assertion::eq(
                    Term::Tuple(vec![Term::constant("Q"), Term::app("Tape", vec![i()]), Term::constant("Head")]),
                    Term::Tuple(vec![Term::ind(&t.next), Term::ind(&symbol_name(&t.write)), head_after]),
                ),
            )
            .into(),
        );
    }

    let input = d.input_symbols();
    for (n, c) in cells.iter().enumerate() {
        let content = if n >= d.offset && n < d.offset + input.len() { &input[n - d.offset] } else { &d.blank };
        p.init.push(Assertion::eq(Term::app("Tape", vec![Term::ind(c)]), Term::ind(&symbol_name(content))));
        let right = if n + 1 < d.tape_len { cells[n + 1].as_str() } else { OFF };
        let left = if n > 0 { cells[n - 1].as_str() } else { OFF };
        p.init.push(Assertion::eq(Term::app("Right", vec![Term::ind(c)]), Term::ind(right)));
        p.init.push(Assertion::eq(Term::app("Left", vec![Term::ind(c)]), Term::ind(left)));
    }
    p.init.push(Assertion::eq(Term::constant("Q"), Term::ind(&d.start)));
    p.init.push(Assertion::eq(Term::constant("Head"), Term::ind(&cells[d.offset])));
    Ok(p)
}

/// Tape contents of a compiled machine's world state, blanks included.
pub fn read_tape(d: &TuringDesc, w: &WorldState) -> Vec<String> {
    let by_name: BTreeMap<String, &String> = d.symbols().map(|a| (symbol_name(a), a)).collect();
    (0..d.tape_len)
        .map(|n| {
            let v = w.get(&crate::state::Key::new(sym("Tape"), vec![Value::ind(&cell_name(n))]));
            match v {
                Value::Ind(x) => by_name.get(&*x).map(|a| a.to_string()).unwrap_or_else(|| x.to_string()),
                other => other.to_string(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TmOutcome {
    pub tape: Vec<String>,
    pub head: usize,
    pub state: String,
    pub steps: usize,
    /// The head tried to leave the tape.
    pub fell_off: bool,
}

/// Direct simulation until no transition applies or `max_steps` is reached.
pub fn simulate(d: &TuringDesc, max_steps: usize) -> TmOutcome {
    let mut tape = vec![d.blank.clone(); d.tape_len];
    for (n, a) in d.input_symbols().into_iter().enumerate() {
        tape[d.offset + n] = a;
    }
    let mut head = d.offset;
    let mut state = d.start.clone();
    let mut steps = 0;
    while steps < max_steps {
        let Some(t) = d.transitions.iter().find(|t| t.state == state && t.read == tape[head]) else { break };
        let next_head = match t.mv {
            Move::L => head.checked_sub(1),
            Move::R => Some(head + 1).filter(|&h| h < d.tape_len),
            Move::S => Some(head),
        };
        let Some(h) = next_head else {
            return TmOutcome { tape, head, state, steps, fell_off: true };
        };
        tape[head] = t.write.clone();
        state = t.next.clone();
        head = h;
        steps += 1;
    }
    TmOutcome { tape, head, state, steps, fell_off: false }
}

/// Binary increment: walk right to the end of the number, then carry
/// leftwards. The input sits at offset 1 so an overflow carry has room.
pub fn binary_increment(input: &str, tape_len: usize) -> TuringDesc {
    let t = |state: &str, read: &str, write: &str, mv: Move, next: &str| TmTransition {
        state: state.into(),
        read: read.into(),
        write: write.into(),
        mv,
        next: next.into(),
    };
    TuringDesc {
        states: vec!["right".into(), "carry".into(), "done".into()],
        start: "right".into(),
        alphabet: vec!["0".into(), "1".into()],
        blank: "_".into(),
        tape_len,
        input: input.into(),
        offset: 1,
        transitions: vec![
            t("right", "0", "0", Move::R, "right"),
            t("right", "1", "1", Move::R, "right"),
            t("right", "_", "_", Move::L, "carry"),
            t("carry", "1", "0", Move::L, "carry"),
            t("carry", "0", "1", Move::R, "done"),
            t("carry", "_", "1", Move::R, "done"),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn number(tape: &[String]) -> String {
        tape.concat().trim_matches('_').to_string()
    }

    #[test]
    fn simulator_increments() {
        assert_eq!(number(&simulate(&binary_increment("1011", 8), 100).tape), "1100");
        assert_eq!(number(&simulate(&binary_increment("111", 8), 100).tape), "1000");
    }

    #[test]
    fn running_right_off_the_tape_is_detected() {
        assert!(!simulate(&binary_increment("11", 4), 100).fell_off);
        let d = binary_increment("11", 3);
        assert!(simulate(&d, 100).fell_off);
    }

    #[test]
    fn compiled_rules_are_schemas_over_cells() {
        let p = compile_turing(&binary_increment("10", 6)).unwrap();
        assert_eq!(p.rules.len(), 6);
        assert_eq!(
            p.rules[0].to_string(),
            "schema tm1: Q = right, Head = i, Tape(i) = s_0 -> (Q,Tape(i),Head) = (right,s_0,Right(i)) where i: Cell;"
        );
    }

    #[test]
    fn bad_descriptions() {
        let mut d = binary_increment("12", 6);
        assert!(d.validate().is_err());
        d.input = "1".into();
        d.tape_len = 1;
        assert!(d.validate().is_err());
    }
}
