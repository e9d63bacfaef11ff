//! Finite valuations of fluent applications.

use std::collections::BTreeMap;
use std::fmt;

use crate::term::{Sym, Term, Value};

/// A valuation key: a fluent applied to argument values.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Key {
    pub op: Sym,
    pub args: Vec<Value>,
}

impl Key {
    pub fn new(op: Sym, args: Vec<Value>) -> Key {
        Key { op, args }
    }

    pub fn to_term(&self) -> Term {
        Term::App(self.op.clone(), self.args.iter().map(Value::to_term).collect())
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

/// The current state of the world. Absent keys are `undefined`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WorldState {
    entries: BTreeMap<Sym, BTreeMap<Vec<Value>, Value>>,
}

impl WorldState {
    pub fn new() -> WorldState {
        WorldState::default()
    }

    pub fn get(&self, key: &Key) -> Value {
        self.entries
            .get(&key.op)
            .and_then(|m| m.get(&key.args))
            .cloned()
            .unwrap_or_else(Value::undefined)
    }

    /// Sets a key; writing `undefined` removes it.
    pub fn set(&mut self, key: Key, value: Value) {
        if value.is_undefined() {
            if let Some(m) = self.entries.get_mut(&key.op) {
                m.remove(&key.args);
                if m.is_empty() {
                    self.entries.remove(&key.op);
                }
            }
        } else {
            self.entries.entry(key.op).or_default().insert(key.args, value);
        }
    }

    /// Entries of one fluent.
    pub fn entries_of<'a>(&'a self, op: &str) -> impl Iterator<Item = (&'a Vec<Value>, &'a Value)> + 'a {
        self.entries.get(op).into_iter().flat_map(|m| m.iter())
    }

    pub fn iter(&self) -> impl Iterator<Item = (Key, &Value)> + '_ {
        self.entries
            .iter()
            .flat_map(|(op, m)| m.iter().map(move |(args, v)| (Key::new(op.clone(), args.clone()), v)))
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(|m| m.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `canonical key -> canonical value`, sorted by key text.
    pub fn canonical(&self) -> BTreeMap<String, String> {
        self.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }
}

impl fmt::Display for WorldState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.canonical() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::sym;

    #[test]
    fn absent_is_undefined_and_undefined_erases() {
        let mut w = WorldState::new();
        let k = Key::new(sym("Status"), vec![Value::ind("door_1")]);
        assert!(w.get(&k).is_undefined());
        w.set(k.clone(), Value::ind("o"));
        assert_eq!(w.get(&k), Value::ind("o"));
        assert_eq!(w.to_string(), "Status(door_1) = o\n");
        w.set(k.clone(), Value::undefined());
        assert!(w.is_empty());
    }
}
