//! The SPS description language.
//!
//! A file declares a structure (`concept`, `individual`, `operator`,
//! `constructor`), rules (`rule`, `schema ... where x: C`), strategy
//! declarations (`constant`, `group`, `prefer`, `order`), probabilities
//! (`pr(r) = 0.4;`), an `init` block, an `events` block with one bracketed
//! list per step, and a `config` block.

use std::fmt;

pub mod ast;
mod lexer;
mod lower;
mod parser;
mod print;

pub use ast::{Document, Pos};
pub use lower::{lower, lower_ground_assertion};
pub use parser::{parse_assertion, parse_document};
pub use print::{print_document, program_to_document};

use crate::program::Program;

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub pos: Pos,
    pub message: String,
}

impl Diagnostic {
    pub fn new(pos: Pos, message: impl Into<String>) -> Diagnostic {
        Diagnostic { pos, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.message)
    }
}

impl std::error::Error for Diagnostic {}

/// Parses and lowers a file.
pub fn load(src: &str) -> Result<Program, Vec<Diagnostic>> {
    let doc = parse_document(src).map_err(|d| vec![d])?;
    lower(&doc)
}

/// Renders a program as DSL text.
pub fn program_to_text(p: &Program) -> String {
    print_document(&program_to_document(p))
}
