use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::Diagnostic;

const RESERVED: &[&str] = &["if", "then", "else", "and", "not", "where"];

struct Parser {
    toks: Vec<Token>,
    i: usize,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.i + k).min(self.toks.len() - 1)].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn err<T>(&self, what: &str) -> PResult<T> {
        Err(Diagnostic::new(self.pos(), format!("expected {what}, found {}", self.peek().describe())))
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> PResult<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.err(what)
        }
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == w)
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.is_word(w) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_word(&mut self, w: &str) -> PResult<()> {
        if self.eat_word(w) {
            Ok(())
        } else {
            self.err(&format!("`{w}`"))
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek().clone() {
            Tok::Ident(name) if !RESERVED.contains(&name.as_str()) => {
                let pos = self.pos();
                self.next();
                Ok(Ident { name, pos })
            }
            _ => self.err("a name"),
        }
    }

    fn ident_list(&mut self) -> PResult<Vec<Ident>> {
        let mut out = vec![self.ident()?];
        while self.eat(&Tok::Comma) {
            out.push(self.ident()?);
        }
        Ok(out)
    }

    fn count(&mut self) -> PResult<usize> {
        match *self.peek() {
            Tok::Num(n) if n >= 0.0 && n.fract() == 0.0 => {
                self.next();
                Ok(n as usize)
            }
            _ => self.err("a non-negative integer"),
        }
    }

    fn number(&mut self) -> PResult<f64> {
        let neg = self.eat(&Tok::Minus);
        match *self.peek() {
            Tok::Num(n) => {
                self.next();
                Ok(if neg { -n } else { n })
            }
            _ => self.err("a number"),
        }
    }

    fn document(&mut self) -> PResult<Document> {
        let mut items = Vec::new();
        while self.peek() != &Tok::Eof {
            items.push(self.item()?);
        }
        Ok(Document { items })
    }

    fn item(&mut self) -> PResult<Item> {
        let Tok::Ident(kw) = self.peek().clone() else { return self.err("a declaration") };
        match kw.as_str() {
            "concept" => {
                self.next();
                let name = self.ident()?;
                self.expect(Tok::Eq, "`=`")?;
                let body = self.concept_body()?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(Item::Concept { name, body })
            }
            "individual" => {
                self.next();
                let names = self.ident_list()?;
                let concept = if self.eat(&Tok::Colon) { Some(self.ident()?) } else { None };
                self.expect(Tok::Semi, "`;`")?;
                Ok(Item::Individual { names, concept })
            }
            "operator" | "constructor" => {
                self.next();
                let name = self.ident()?;
                let mut domain = Vec::new();
                if self.eat(&Tok::LParen) && !self.eat(&Tok::RParen) {
                    domain = self.ident_list()?;
                    self.expect(Tok::RParen, "`)`")?;
                }
                let range = if self.eat(&Tok::Arrow) { Some(self.ident()?) } else { None };
                self.expect(Tok::Semi, "`;`")?;
                Ok(Item::Operator { constructor: kw == "constructor", name, domain, range })
            }
            "rule" | "schema" => {
                self.next();
                self.rule(kw == "schema")
            }
            "constant" => {
                self.next();
                let ids = self.ident_list()?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(Item::Constant(ids))
            }
            "group" => {
                self.next();
                let id = self.ident()?;
                self.expect(Tok::Eq, "`=`")?;
                let members = self.ident_list()?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(Item::Group { id, members })
            }
            "prefer" => {
                self.next();
                let a = self.ident()?;
                self.expect(Tok::Gt, "`>`")?;
                let b = self.ident()?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(Item::Prefer(a, b))
            }
            "order" => {
                self.next();
                let a = self.ident()?;
                self.expect(Tok::Arrow, "`->`")?;
                let b = self.ident()?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(Item::Order(a, b))
            }
            "pr" => {
                self.next();
                self.expect(Tok::LParen, "`(`")?;
                let subject = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                self.expect(Tok::Eq, "`=`")?;
                let value = self.number()?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(Item::Pr { subject, value })
            }
            "init" => {
                self.next();
                self.expect(Tok::LBrace, "`{`")?;
                let mut out = Vec::new();
                while !self.eat(&Tok::RBrace) {
                    out.push(self.assertion()?);
                    self.expect(Tok::Semi, "`;`")?;
                }
                Ok(Item::Init(out))
            }
            "events" => {
                self.next();
                self.expect(Tok::LBrace, "`{`")?;
                let mut steps = Vec::new();
                while !self.eat(&Tok::RBrace) {
                    self.expect(Tok::LBracket, "`[`")?;
                    let mut step = Vec::new();
                    if !self.eat(&Tok::RBracket) {
                        step.push(self.assertion()?);
                        while self.eat(&Tok::Comma) {
                            step.push(self.assertion()?);
                        }
                        self.expect(Tok::RBracket, "`]`")?;
                    }
                    steps.push(step);
                    if !self.eat(&Tok::Comma) {
                        self.eat(&Tok::Semi);
                    }
                }
                Ok(Item::Events(steps))
            }
            "config" => {
                self.next();
                self.expect(Tok::LBrace, "`{`")?;
                let mut out = Vec::new();
                while !self.eat(&Tok::RBrace) {
                    let key = self.ident()?;
                    self.expect(Tok::Eq, "`=`")?;
                    let value = match self.peek().clone() {
                        Tok::Ident(w) => {
                            self.next();
                            ConfigValue::Word(w)
                        }
                        _ => ConfigValue::Num(self.number()?),
                    };
                    self.expect(Tok::Semi, "`;`")?;
                    out.push((key, value));
                }
                Ok(Item::Config(out))
            }
            _ => self.err("a declaration"),
        }
    }

    fn concept_body(&mut self) -> PResult<ConceptBody> {
        if self.eat(&Tok::LBrace) {
            let mut members = Vec::new();
            if !self.eat(&Tok::RBrace) {
                members = self.ident_list()?;
                self.expect(Tok::RBrace, "`}`")?;
            }
            return Ok(ConceptBody::Members(members));
        }
        let strings = self.eat_word("strings");
        if !strings {
            self.expect_word("terms").or_else(|_| self.err("`{`, `strings` or `terms`"))?;
        }
        self.expect(Tok::LParen, "`(`")?;
        let base = self.ident()?;
        let mut constructors = Vec::new();
        if !strings {
            self.expect(Tok::Semi, "`;`")?;
            constructors = self.ident_list()?;
        }
        self.expect(Tok::RParen, "`)`")?;
        let max = if self.eat_word("max") { Some(self.count()?) } else { None };
        Ok(if strings {
            ConceptBody::Strings { alphabet: base, max }
        } else {
            ConceptBody::Terms { atoms: base, constructors, max }
        })
    }

    fn rule(&mut self, schema: bool) -> PResult<Item> {
        let id = self.ident()?;
        self.expect(Tok::Colon, "`:`")?;
        let mut antecedent = Vec::new();
        if !self.eat(&Tok::Arrow) {
            antecedent.push(self.assertion()?);
            while self.eat(&Tok::Comma) {
                antecedent.push(self.assertion()?);
            }
            self.expect(Tok::Arrow, "`->`")?;
        }
        let mut consequent = vec![self.assertion()?];
        while self.eat(&Tok::Comma) {
            consequent.push(self.assertion()?);
        }
        let mut decls = Vec::new();
        if self.eat_word("where") {
            loop {
                let v = self.ident()?;
                self.expect(Tok::Colon, "`:`")?;
                let c = self.ident()?;
                decls.push((v, c));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::Semi, "`;`")?;
        Ok(Item::Rule(RuleDecl { schema, id, antecedent, consequent, decls }))
    }

    fn assertion(&mut self) -> PResult<AssertionAst> {
        let negated = self.eat(&Tok::Not) || self.eat_word("not");
        let lhs = self.expr()?;
        let rhs = if self.eat(&Tok::Eq) { Some(self.expr()?) } else { None };
        Ok(AssertionAst { negated, lhs, rhs })
    }

    fn expr(&mut self) -> PResult<Expr> {
        if self.is_word("if") {
            let pos = self.pos();
            self.next();
            let mut cond = Vec::new();
            let trivially_true = self.is_word("true") && matches!(self.peek_at(1), Tok::Ident(w) if w == "then");
            if trivially_true {
                self.next();
            } else {
                cond.push(self.assertion()?);
                while self.eat_word("and") {
                    cond.push(self.assertion()?);
                }
            }
            self.expect_word("then")?;
            let t = self.expr()?;
            self.expect_word("else")?;
            let e = self.expr()?;
            return Ok(Expr::If(cond, Box::new(t), Box::new(e), pos));
        }
        self.given()
    }

    fn given(&mut self) -> PResult<Expr> {
        let first = self.concat()?;
        if self.peek() == &Tok::Bar {
            let pos = self.pos();
            self.next();
            let second = self.concat()?;
            return Ok(Expr::Op("|".into(), vec![first, second], pos));
        }
        Ok(first)
    }

    fn chain(&mut self, ops: &[(Tok, &str)], sub: fn(&mut Parser) -> PResult<Expr>) -> PResult<Expr> {
        let first = sub(self)?;
        let Some((_, name)) = ops.iter().find(|(t, _)| t == self.peek()) else { return Ok(first) };
        let name = *name;
        let pos = self.pos();
        let mut args = vec![first];
        loop {
            let tok = self.peek().clone();
            match ops.iter().find(|(t, _)| *t == tok) {
                Some((_, n)) if *n == name => {
                    self.next();
                    args.push(sub(self)?);
                }
                Some(_) => {
                    // a different operator of the same level starts a new chain
                    let left = Expr::Op(name.to_string(), std::mem::take(&mut args), pos);
                    return self.continue_chain(left, ops, sub);
                }
                None => return Ok(Expr::Op(name.to_string(), args, pos)),
            }
        }
    }

    fn continue_chain(&mut self, left: Expr, ops: &[(Tok, &str)], sub: fn(&mut Parser) -> PResult<Expr>) -> PResult<Expr> {
        let tok = self.peek().clone();
        let Some((_, name)) = ops.iter().find(|(t, _)| *t == tok) else { return Ok(left) };
        let pos = self.pos();
        self.next();
        let right = sub(self)?;
        self.continue_chain(Expr::Op(name.to_string(), vec![left, right], pos), ops, sub)
    }

    fn concat(&mut self) -> PResult<Expr> {
        self.chain(&[(Tok::Concat, "•")], Parser::additive)
    }

    fn additive(&mut self) -> PResult<Expr> {
        self.chain(&[(Tok::Plus, "+"), (Tok::Minus, "-")], Parser::multiplicative)
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        self.chain(&[(Tok::Star, "*"), (Tok::Slash, "/")], Parser::primary)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Minus => {
                let n = self.number()?;
                Ok(Expr::Num(n, pos))
            }
            Tok::Num(n) => {
                self.next();
                Ok(Expr::Num(n, pos))
            }
            Tok::Str(s) => {
                self.next();
                Ok(Expr::Str(s, pos))
            }
            Tok::LParen => {
                self.next();
                if self.eat(&Tok::RParen) {
                    return Ok(Expr::Tuple(Vec::new(), pos));
                }
                let first = self.expr()?;
                if self.eat(&Tok::RParen) {
                    return Ok(first);
                }
                let mut items = vec![first];
                while self.eat(&Tok::Comma) {
                    items.push(self.expr()?);
                }
                self.expect(Tok::RParen, "`)` or `,`")?;
                Ok(Expr::Tuple(items, pos))
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                if self.eat(&Tok::LParen) {
                    let mut args = Vec::new();
                    if !self.eat(&Tok::RParen) {
                        args.push(self.expr()?);
                        while self.eat(&Tok::Comma) {
                            args.push(self.expr()?);
                        }
                        self.expect(Tok::RParen, "`)`")?;
                    }
                    return Ok(Expr::Call(name, args));
                }
                if self.eat(&Tok::LBracket) {
                    let mut binds = Vec::new();
                    if !self.eat(&Tok::RBracket) {
                        loop {
                            let v = self.ident()?;
                            self.expect(Tok::Eq, "`=`")?;
                            binds.push((v, self.expr()?));
                            if !self.eat(&Tok::Comma) {
                                break;
                            }
                        }
                        self.expect(Tok::RBracket, "`]`")?;
                    }
                    return Ok(Expr::RuleRef(name, binds));
                }
                Ok(Expr::Name(name))
            }
            _ => self.err("a term"),
        }
    }
}

pub fn parse_document(src: &str) -> Result<Document, Diagnostic> {
    let toks = lex(src)?;
    Parser { toks, i: 0 }.document()
}

/// Parses a single assertion, e.g. an event given on the command line.
pub fn parse_assertion(src: &str) -> Result<AssertionAst, Diagnostic> {
    let toks = lex(src)?;
    let mut p = Parser { toks, i: 0 };
    let a = p.assertion()?;
    if p.peek() != &Tok::Eof {
        return p.err("end of input");
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file() {
        assert_eq!(parse_document("  // nothing\n").unwrap(), Document::default());
    }

    #[test]
    fn operator_chains() {
        let d = parse_document("init { t = a + b + c - d * e; }").unwrap();
        let Item::Init(a) = &d.items[0] else { panic!() };
        let Some(Expr::Op(op, args, _)) = &a[0].rhs else { panic!() };
        assert_eq!(op, "-");
        assert_eq!(args.len(), 2);
        assert!(matches!(&args[0], Expr::Op(o, xs, _) if o == "+" && xs.len() == 3));
        assert!(matches!(&args[1], Expr::Op(o, _, _) if o == "*"));
    }

    #[test]
    fn conditional_with_trivial_condition() {
        let a = parse_assertion("t = (if true then t + 1 else t)").unwrap();
        assert!(matches!(a.rhs, Some(Expr::If(c, _, _, _)) if c.is_empty()));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let e = parse_document("rule r: a = b\n  -> c = d").unwrap_err();
        assert_eq!(e.to_string(), "2:11: expected `;`, found end of file");
        let e = parse_document("concept X = ;").unwrap_err();
        assert!(e.to_string().starts_with("1:13: expected `{`, `strings` or `terms`"), "{e}");
    }
}
