//! Syntax tree of an SPS file. Positions are carried for diagnostics and
//! ignored by equality, so a reprinted document compares equal.

use std::fmt;

#[derive(Debug, Clone, Copy, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Pos {
    fn eq(&self, _: &Pos) -> bool {
        true
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ident {
    pub name: String,
    pub pos: Pos,
}

impl Ident {
    pub fn new(name: &str) -> Ident {
        Ident { name: name.to_string(), pos: Pos::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Variable, individual or nullary fluent; resolved when lowering.
    Name(Ident),
    Num(f64, Pos),
    Str(Vec<String>, Pos),
    Call(Ident, Vec<Expr>),
    /// Infix operator chain: `+ - * / • |`.
    Op(String, Vec<Expr>, Pos),
    Tuple(Vec<Expr>, Pos),
    If(Vec<AssertionAst>, Box<Expr>, Box<Expr>, Pos),
    RuleRef(Ident, Vec<(Ident, Expr)>),
}

impl Expr {
    pub fn pos(&self) -> Pos {
        match self {
            Expr::Name(i) | Expr::Call(i, _) | Expr::RuleRef(i, _) => i.pos,
            Expr::Num(_, p) | Expr::Str(_, p) | Expr::Op(_, _, p) | Expr::Tuple(_, p) | Expr::If(_, _, _, p) => *p,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssertionAst {
    pub negated: bool,
    pub lhs: Expr,
    /// `None` for the shorthand `t`.
    pub rhs: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConceptBody {
    Members(Vec<Ident>),
    Strings { alphabet: Ident, max: Option<usize> },
    Terms { atoms: Ident, constructors: Vec<Ident>, max: Option<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigValue {
    Num(f64),
    Word(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleDecl {
    pub schema: bool,
    pub id: Ident,
    pub antecedent: Vec<AssertionAst>,
    pub consequent: Vec<AssertionAst>,
    pub decls: Vec<(Ident, Ident)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Concept { name: Ident, body: ConceptBody },
    Individual { names: Vec<Ident>, concept: Option<Ident> },
    Operator { constructor: bool, name: Ident, domain: Vec<Ident>, range: Option<Ident> },
    Rule(RuleDecl),
    Constant(Vec<Ident>),
    Group { id: Ident, members: Vec<Ident> },
    Prefer(Ident, Ident),
    Order(Ident, Ident),
    Pr { subject: Expr, value: f64 },
    Init(Vec<AssertionAst>),
    Events(Vec<Vec<AssertionAst>>),
    Config(Vec<(Ident, ConfigValue)>),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Document {
    pub items: Vec<Item>,
}
