use std::fmt::Write;

use super::ast::*;
use crate::program::{PolicyChoice, Program, StrategyMode};
use crate::rules::Rule;
use crate::structure::{ConceptKind, OperatorKind, Structure, ASSERTION_C, DERIVATION_C};
use crate::term::{format_real, ops, Assertion, Term, EMPTY_DERIVATION, TRUE};
use crate::uncertainty::ProbabilityMode;

fn names(xs: &[Ident]) -> String {
    xs.iter().map(|x| x.name.as_str()).collect::<Vec<_>>().join(", ")
}

fn expr(e: &Expr, out: &mut String) {
    match e {
        Expr::Name(i) => out.push_str(&i.name),
        Expr::Num(n, _) => out.push_str(&format_real(*n)),
        Expr::Str(s, _) => {
            let _ = write!(out, "\"{}\"", s.join(" "));
        }
        Expr::Call(f, args) => {
            out.push_str(&f.name);
            out.push('(');
            list(args, ",", out);
            out.push(')');
        }
        Expr::Op(op, args, _) => {
            out.push('(');
            list(args, op, out);
            out.push(')');
        }
        Expr::Tuple(items, _) => {
            out.push('(');
            list(items, ",", out);
            out.push(')');
        }
        Expr::If(c, t, f, _) => {
            out.push_str("(if ");
            if c.is_empty() {
                out.push_str(TRUE);
            }
            for (i, a) in c.iter().enumerate() {
                if i > 0 {
                    out.push_str(" and ");
                }
                assertion(a, out);
            }
            out.push_str(" then ");
            expr(t, out);
            out.push_str(" else ");
            expr(f, out);
            out.push(')');
        }
        Expr::RuleRef(r, binds) => {
            out.push_str(&r.name);
            out.push('[');
            for (i, (v, t)) in binds.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&v.name);
                out.push('=');
                expr(t, out);
            }
            out.push(']');
        }
    }
}

fn list(xs: &[Expr], sep: &str, out: &mut String) {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            out.push_str(sep);
        }
        expr(x, out);
    }
}

fn assertion(a: &AssertionAst, out: &mut String) {
    if a.negated {
        out.push_str("not ");
    }
    expr(&a.lhs, out);
    if let Some(r) = &a.rhs {
        out.push_str(" = ");
        expr(r, out);
    }
}

fn assertions(xs: &[AssertionAst], out: &mut String) {
    for (i, a) in xs.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        assertion(a, out);
    }
}

fn item(it: &Item, out: &mut String) {
    match it {
        Item::Concept { name, body } => {
            let _ = write!(out, "concept {} = ", name.name);
            match body {
                ConceptBody::Members(ms) => {
                    let _ = write!(out, "{{{}}}", names(ms));
                }
                ConceptBody::Strings { alphabet, max } => {
                    let _ = write!(out, "strings({})", alphabet.name);
                    if let Some(m) = max {
                        let _ = write!(out, " max {m}");
                    }
                }
                ConceptBody::Terms { atoms, constructors, max } => {
                    let _ = write!(out, "terms({}; {})", atoms.name, names(constructors));
                    if let Some(m) = max {
                        let _ = write!(out, " max {m}");
                    }
                }
            }
            out.push_str(";\n");
        }
        Item::Individual { names: ns, concept } => {
            let _ = write!(out, "individual {}", names(ns));
            if let Some(c) = concept {
                let _ = write!(out, ": {}", c.name);
            }
            out.push_str(";\n");
        }
        Item::Operator { constructor, name, domain, range } => {
            out.push_str(if *constructor { "constructor " } else { "operator " });
            out.push_str(&name.name);
            if !domain.is_empty() {
                let _ = write!(out, "({})", names(domain));
            }
            if let Some(r) = range {
                let _ = write!(out, " -> {}", r.name);
            }
            out.push_str(";\n");
        }
        Item::Rule(r) => {
            let _ = write!(out, "{} {}: ", if r.schema { "schema" } else { "rule" }, r.id.name);
            if !r.antecedent.is_empty() {
                assertions(&r.antecedent, out);
                out.push(' ');
            }
            out.push_str("-> ");
            assertions(&r.consequent, out);
            if !r.decls.is_empty() {
                out.push_str(" where ");
                for (i, (v, c)) in r.decls.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    let _ = write!(out, "{}: {}", v.name, c.name);
                }
            }
            out.push_str(";\n");
        }
        Item::Constant(ids) => {
            let _ = writeln!(out, "constant {};", names(ids));
        }
        Item::Group { id, members } => {
            let _ = writeln!(out, "group {} = {};", id.name, names(members));
        }
        Item::Prefer(a, b) => {
            let _ = writeln!(out, "prefer {} > {};", a.name, b.name);
        }
        Item::Order(a, b) => {
            let _ = writeln!(out, "order {} -> {};", a.name, b.name);
        }
        Item::Pr { subject, value } => {
            out.push_str("pr(");
            expr(subject, out);
            let _ = writeln!(out, ") = {};", format_real(*value));
        }
        Item::Init(xs) => {
            out.push_str("init {\n");
            for a in xs {
                out.push_str("  ");
                assertion(a, out);
                out.push_str(";\n");
            }
            out.push_str("}\n");
        }
        Item::Events(steps) => {
            out.push_str("events {\n");
            for s in steps {
                out.push_str("  [");
                assertions(s, out);
                out.push_str("],\n");
            }
            out.push_str("}\n");
        }
        Item::Config(kvs) => {
            out.push_str("config {\n");
            for (k, v) in kvs {
                let v = match v {
                    ConfigValue::Num(n) => format_real(*n),
                    ConfigValue::Word(w) => w.clone(),
                };
                let _ = writeln!(out, "  {} = {v};", k.name);
            }
            out.push_str("}\n");
        }
    }
}

fn kind(it: &Item) -> u8 {
    match it {
        Item::Concept { .. } | Item::Individual { .. } | Item::Operator { .. } => 0,
        Item::Rule(_) => 1,
        Item::Constant(_) | Item::Group { .. } | Item::Prefer(..) | Item::Order(..) => 2,
        Item::Pr { .. } => 3,
        _ => 4,
    }
}

/// Renders a document; a blank line separates sections.
pub fn print_document(doc: &Document) -> String {
    let mut out = String::new();
    let mut prev = None;
    for it in &doc.items {
        let k = kind(it);
        if prev.is_some_and(|p| p != k || k == 4) {
            out.push('\n');
        }
        prev = Some(k);
        item(it, &mut out);
    }
    out
}

fn term_expr(t: &Term) -> Expr {
    let pos = Pos::default();
    match t {
        Term::Ind(n) | Term::Var(n) => Expr::Name(Ident::new(n)),
        Term::Real(r) => Expr::Num(*r, pos),
        Term::Str(s) => Expr::Str(s.iter().map(|x| x.to_string()).collect(), pos),
        Term::App(op, args) if ops::is_infix(op) => Expr::Op(op.to_string(), args.iter().map(term_expr).collect(), pos),
        Term::App(op, args) if args.is_empty() => Expr::Name(Ident::new(op)),
        Term::App(op, args) => Expr::Call(Ident::new(op), args.iter().map(term_expr).collect()),
        Term::Tuple(items) => Expr::Tuple(items.iter().map(term_expr).collect(), pos),
        Term::Cond(c) => Expr::If(
            c.condition.iter().map(assertion_ast).collect(),
            Box::new(term_expr(&c.then_term)),
            Box::new(term_expr(&c.else_term)),
            pos,
        ),
        Term::RuleRef(r, binds) => {
            Expr::RuleRef(Ident::new(r), binds.iter().map(|(v, t)| (Ident::new(v), term_expr(t))).collect())
        }
    }
}

fn assertion_ast(a: &Assertion) -> AssertionAst {
    let shorthand = matches!(&a.rhs, Term::Ind(s) if &**s == TRUE);
    AssertionAst { negated: a.negated, lhs: term_expr(&a.lhs), rhs: (!shorthand).then(|| term_expr(&a.rhs)) }
}

fn idents<'a>(xs: impl IntoIterator<Item = &'a std::sync::Arc<str>>) -> Vec<Ident> {
    xs.into_iter().map(|x| Ident::new(x)).collect()
}

fn structure_items(s: &Structure, items: &mut Vec<Item>) {
    let mut in_concept = std::collections::HashSet::new();
    let mut reified = Vec::new();
    for c in s.concepts() {
        match &c.kind {
            ConceptKind::Finite(ms) => in_concept.extend(ms.iter().cloned()),
            ConceptKind::Reified(ms) if &*c.name == ASSERTION_C || &*c.name == DERIVATION_C => {
                for m in ms {
                    if &**m != EMPTY_DERIVATION {
                        in_concept.insert(m.clone());
                        reified.push((m.clone(), c.name.clone()));
                    }
                }
            }
            _ => {}
        }
    }
    let loose: Vec<_> =
        s.individuals().filter(|i| !Structure::is_builtin_name(i) && !in_concept.contains(*i)).collect();
    if !loose.is_empty() {
        items.push(Item::Individual { names: idents(loose), concept: None });
    }
    for c in s.concepts() {
        if Structure::is_builtin_name(&c.name) {
            continue;
        }
        let name = Ident::new(&c.name);
        let body = match &c.kind {
            ConceptKind::Finite(ms) => ConceptBody::Members(idents(ms)),
            ConceptKind::Strings { alphabet, max_len } => {
                ConceptBody::Strings { alphabet: Ident::new(alphabet), max: *max_len }
            }
            ConceptKind::Terms { atoms, constructors, max_depth } => {
                ConceptBody::Terms { atoms: Ident::new(atoms), constructors: idents(constructors), max: *max_depth }
            }
            _ => continue,
        };
        items.push(Item::Concept { name, body });
    }
    for (m, c) in reified {
        items.push(Item::Individual { names: vec![Ident::new(&m)], concept: Some(Ident::new(&c)) });
    }
    for o in s.operators() {
        if Structure::is_builtin_name(&o.name) || o.kind == OperatorKind::Builtin {
            continue;
        }
        items.push(Item::Operator {
            constructor: o.kind == OperatorKind::Constructor,
            name: Ident::new(&o.name),
            domain: idents(&o.domain),
            range: o.range.as_ref().map(|r| Ident::new(r)),
        });
    }
}

/// The document a program prints as.
pub fn program_to_document(p: &Program) -> Document {
    let mut items = Vec::new();
    structure_items(&p.structure, &mut items);
    for r in &p.rules {
        let c = r.consequent();
        items.push(Item::Rule(RuleDecl {
            schema: matches!(r, Rule::Schema(_)),
            id: Ident::new(r.id()),
            antecedent: r.antecedent().iter().map(assertion_ast).collect(),
            consequent: vec![assertion_ast(c)],
            decls: r.decls().iter().map(|d| (Ident::new(&d.var), Ident::new(&d.concept))).collect(),
        }));
    }
    let st = &p.strategy;
    if !st.constants.is_empty() {
        items.push(Item::Constant(idents(&st.constants)));
    }
    for g in &st.groups {
        items.push(Item::Group { id: Ident::new(&g.id), members: idents(&g.members) });
    }
    for (a, b) in &st.prefer {
        items.push(Item::Prefer(Ident::new(a), Ident::new(b)));
    }
    for (a, b) in &st.order {
        items.push(Item::Order(Ident::new(a), Ident::new(b)));
    }
    for (t, v) in &p.probabilities {
        items.push(Item::Pr { subject: term_expr(t), value: *v });
    }
    if !p.init.is_empty() {
        items.push(Item::Init(p.init.iter().map(assertion_ast).collect()));
    }
    if !p.events.is_empty() {
        items.push(Item::Events(p.events.iter().map(|s| s.iter().map(assertion_ast).collect()).collect()));
    }
    let mut cfg = Vec::new();
    let set = &p.settings;
    if let Some(n) = set.max_steps {
        cfg.push((Ident::new("max_steps"), ConfigValue::Num(n as f64)));
    }
    if let Some(n) = set.seed {
        cfg.push((Ident::new("seed"), ConfigValue::Num(n as f64)));
    }
    if let Some(pc) = set.policy {
        let w = match pc {
            PolicyChoice::First => "first",
            PolicyChoice::Random => "random",
        };
        cfg.push((Ident::new("policy"), ConfigValue::Word(w.into())));
    }
    if let Some(m) = set.probability {
        let w = match m {
            ProbabilityMode::Default => "default",
            ProbabilityMode::Strict => "strict",
        };
        cfg.push((Ident::new("probability"), ConfigValue::Word(w.into())));
    }
    if let Some(m) = set.strategy {
        let w = match m {
            StrategyMode::Basic => "basic",
            StrategyMode::Transformed => "transformed",
        };
        cfg.push((Ident::new("strategy"), ConfigValue::Word(w.into())));
    }
    if !p.structure.has_arithmetic() {
        cfg.push((Ident::new("arithmetic"), ConfigValue::Word("off".into())));
    }
    if !cfg.is_empty() {
        items.push(Item::Config(cfg));
    }
    Document { items }
}
