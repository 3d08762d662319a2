//! Recursive-descent parser for the ASCII concrete syntax of symbolic heaps.
//!
//! ```text
//! sh      := ["EX" var+ "."] [pure ":"] spatial
//! pure    := atom ("/\" atom)*
//! atom    := term ("=" | "!=" | "<=" | "<") term
//! spatial := satom ("*" satom)*
//! satom   := "emp" | term "|->" term | "arr(" term "," term ")"
//!          | "arr(" term ";" term "," term ")"
//! term    := prod ("+" prod | "-" nat)*
//! prod    := nat | var | nat "*" var
//! ```

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use super::{base_name, NameSupply, PureAtom, Rel, SpatialAtom, SymbolicHeap, Term, Var};

/// A syntax error with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Nat(u64),
    Sym(&'static str),
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

const SYMBOLS: [&str; 15] = ["/\\", "|->", "!=", "<=", "<", "=", ":", "*", "(", ")", ",", ";", ".", "+", "-"];

fn lex(text: &str, line_offset: usize) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut column) = (0, 1 + line_offset, 1);
    let err = |line, column, message: String| ParseError { line, column, message };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            column += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, column);
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            column += i - start;
            out.push(Token { tok: Tok::Ident(s), line: start_line, column: start_col });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            column += i - start;
            let n = s.parse::<u64>().map_err(|_| err(start_line, start_col, format!("numeral {s} is too large")))?;
            out.push(Token { tok: Tok::Nat(n), line: start_line, column: start_col });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                i += s.len();
                column += s.len();
                out.push(Token { tok: Tok::Sym(s), line: start_line, column: start_col });
            }
            None => return Err(err(start_line, start_col, format!("unexpected character '{c}'"))),
        }
    }
    out.push(Token { tok: Tok::End, line, column });
    Ok(out)
}

const KEYWORDS: [&str; 3] = ["EX", "emp", "arr"];

/// Shared state for parsing several heaps of one problem: the supply of fresh
/// names and the memo of free variables introduced for `t - n`.
#[derive(Debug, Clone, Default)]
pub struct ParseContext {
    names: NameSupply,
    memo: HashMap<(Term, u64), Var>,
    created: Vec<Var>,
}

impl ParseContext {
    pub fn new() -> Self {
        Self::default()
    }

    /// Marks every identifier in `text` as used so fresh names avoid it.
    pub fn reserve_text(&mut self, text: &str) {
        if let Ok(tokens) = lex(text, 0) {
            for t in tokens {
                if let Tok::Ident(s) = t.tok {
                    self.names.reserve(&Var::new(s));
                }
            }
        }
    }

    /// Fresh variables introduced so far, in creation order.
    pub fn created(&self) -> &[Var] {
        &self.created
    }

    pub fn parse_heap(&mut self, text: &str) -> Result<SymbolicHeap, ParseError> {
        self.parse_heap_at(text, 0)
    }

    /// Parses a heap whose text starts `line_offset` lines into a file.
    pub fn parse_heap_at(&mut self, text: &str, line_offset: usize) -> Result<SymbolicHeap, ParseError> {
        self.reserve_text(text);
        let tokens = lex(text, line_offset)?;
        let mut p =
            Parser { tokens, pos: 0, ctx: self, quantified: false, defs: Vec::new(), defined: HashSet::new(), bound_fresh: Vec::new(), in_destination: false };
        let heap = p.heap()?;
        p.expect_end()?;
        Ok(heap)
    }
}

/// Parses a single symbolic heap.
pub fn parse_symbolic_heap(text: &str) -> Result<SymbolicHeap, ParseError> {
    ParseContext::new().parse_heap(text)
}

/// Parses a term without subtraction.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let mut ctx = ParseContext::new();
    let tokens = lex(text, 0)?;
    let mut p =
        Parser { tokens, pos: 0, ctx: &mut ctx, quantified: false, defs: Vec::new(), defined: HashSet::new(), bound_fresh: Vec::new(), in_destination: false };
    let t = p.term()?;
    if !p.defs.is_empty() {
        return Err(ParseError { line: 1, column: 1, message: "subtraction is only supported inside a symbolic heap".into() });
    }
    p.expect_end()?;
    Ok(t)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    ctx: &'a mut ParseContext,
    quantified: bool,
    defs: Vec<PureAtom>,
    defined: HashSet<Var>,
    bound_fresh: Vec<Var>,
    /// Set while reading a points-to destination, the only place where a
    /// term may be directly followed by the `*` separating spatial atoms.
    in_destination: bool,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        let t = &self.tokens[self.pos];
        ParseError { line: t.line, column: t.column, message: message.into() }
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Nat(n) => format!("'{n}'"),
            Tok::Sym(s) => format!("'{s}'"),
            Tok::End => "end of input".into(),
        }
    }

    fn eat(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(s) if *s == sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: &str) -> Result<(), ParseError> {
        if self.eat(sym) {
            Ok(())
        } else {
            Err(self.error_here(format!("expected '{sym}', found {}", Self::describe(self.peek()))))
        }
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::End => Ok(()),
            t => Err(self.error_here(format!("unexpected {}", Self::describe(t)))),
        }
    }

    fn is_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    fn variable(&mut self) -> Result<Var, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.pos += 1;
                Ok(Var::new(s))
            }
            t => Err(self.error_here(format!("expected a variable, found {}", Self::describe(&t)))),
        }
    }

    fn heap(&mut self) -> Result<SymbolicHeap, ParseError> {
        let mut bound = Vec::new();
        if self.is_ident("EX") {
            self.pos += 1;
            while !matches!(self.peek(), Tok::Sym(".")) {
                let v = self.variable()?;
                if bound.contains(&v) {
                    return Err(self.error_here(format!("variable {v} is bound twice")));
                }
                bound.push(v);
            }
            if bound.is_empty() {
                return Err(self.error_here("expected at least one bound variable"));
            }
            self.expect(".")?;
            self.quantified = true;
        }
        let has_pure = self.tokens[self.pos..].iter().any(|t| t.tok == Tok::Sym(":"));
        let mut pure = Vec::new();
        if has_pure {
            pure.push(self.pure_atom()?);
            while self.eat("/\\") {
                pure.push(self.pure_atom()?);
            }
            self.expect(":")?;
        }
        let mut spatial = vec![self.spatial_atom()?];
        while self.eat("*") {
            spatial.push(self.spatial_atom()?);
        }
        pure.append(&mut self.defs);
        bound.append(&mut self.bound_fresh);
        Ok(SymbolicHeap { bound, pure, spatial })
    }

    fn pure_atom(&mut self) -> Result<PureAtom, ParseError> {
        let lhs = self.term()?;
        let rel = match self.peek() {
            Tok::Sym("=") => Rel::Eq,
            Tok::Sym("!=") => Rel::Ne,
            Tok::Sym("<=") => Rel::Le,
            Tok::Sym("<") => Rel::Lt,
            t => return Err(self.error_here(format!("expected a comparison, found {}", Self::describe(t)))),
        };
        self.pos += 1;
        let rhs = self.term()?;
        Ok(PureAtom::new(lhs, rel, rhs))
    }

    fn spatial_atom(&mut self) -> Result<SpatialAtom, ParseError> {
        if self.is_ident("emp") {
            self.pos += 1;
            return Ok(SpatialAtom::Emp);
        }
        if self.is_ident("arr") {
            self.pos += 1;
            self.expect("(")?;
            let first = self.term()?;
            if self.eat(";") {
                let i = self.term()?;
                self.expect(",")?;
                let j = self.term()?;
                self.expect(")")?;
                return Ok(SpatialAtom::array(first.add(&i), first.add(&j)));
            }
            self.expect(",")?;
            let hi = self.term()?;
            self.expect(")")?;
            return Ok(SpatialAtom::array(first, hi));
        }
        let src = self.term()?;
        self.expect("|->")?;
        self.in_destination = true;
        let dst = self.term();
        self.in_destination = false;
        let dst = dst?;
        Ok(SpatialAtom::points_to(src, dst))
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let mut t = self.product()?;
        loop {
            if self.eat("+") {
                t = t.add(&self.product()?);
            } else if self.eat("-") {
                match *self.peek() {
                    Tok::Nat(n) => {
                        self.pos += 1;
                        t = self.subtract(t, n);
                    }
                    ref other => return Err(self.error_here(format!("only a numeral may be subtracted, found {}", Self::describe(other)))),
                }
            } else {
                return Ok(t);
            }
        }
    }

    fn product(&mut self) -> Result<Term, ParseError> {
        match *self.peek() {
            Tok::Nat(n) => {
                self.pos += 1;
                if self.star_scales_variable() {
                    self.pos += 1;
                    let v = self.variable()?;
                    Ok(Term::scaled(n, v))
                } else {
                    Ok(Term::constant(n))
                }
            }
            Tok::Sym("(") => {
                self.pos += 1;
                let outer = std::mem::replace(&mut self.in_destination, false);
                let t = self.term();
                self.in_destination = outer;
                let t = t?;
                self.expect(")")?;
                Ok(t)
            }
            _ => Ok(Term::var(self.variable()?)),
        }
    }

    /// True when the `*` at the cursor multiplies the following variable. It
    /// separates spatial atoms instead when a keyword follows, or when it
    /// ends a points-to destination and the tokens after it form a term
    /// followed by `|->`.
    fn star_scales_variable(&self) -> bool {
        let toks = &self.tokens;
        let sym = |i: usize, s: &str| matches!(&toks[i].tok, Tok::Sym(x) if *x == s);
        let ident = |i: usize| matches!(&toks[i].tok, Tok::Ident(x) if !KEYWORDS.contains(&x.as_str()));
        let nat = |i: usize| matches!(toks[i].tok, Tok::Nat(_));
        let prod = |i: usize| -> Option<usize> {
            if nat(i) {
                Some(if sym(i + 1, "*") && ident(i + 2) { i + 3 } else { i + 1 })
            } else {
                ident(i).then_some(i + 1)
            }
        };
        if !sym(self.pos, "*") || !ident(self.pos + 1) {
            return false;
        }
        if !self.in_destination {
            return true;
        }
        let Some(mut i) = prod(self.pos + 1) else { return true };
        loop {
            if sym(i, "+") {
                match prod(i + 1) {
                    Some(j) => i = j,
                    None => return true,
                }
            } else if sym(i, "-") && nat(i + 1) {
                i += 2;
            } else {
                return !sym(i, "|->");
            }
        }
    }

    /// Replaces `t - n` by a fresh `f` together with the atom `t = f + n`.
    fn subtract(&mut self, t: Term, n: u64) -> Term {
        if n == 0 {
            return t;
        }
        let base = match t.vars().next() {
            Some(v) if t.coeffs().count() == 1 => base_name(v.name()).to_string(),
            _ => "t".to_string(),
        };
        let f = if self.quantified {
            let f = self.ctx.names.fresh(&base);
            self.ctx.created.push(f.clone());
            self.bound_fresh.push(f.clone());
            f
        } else if let Some(f) = self.ctx.memo.get(&(t.clone(), n)) {
            f.clone()
        } else {
            let f = self.ctx.names.fresh(&base);
            self.ctx.created.push(f.clone());
            self.ctx.memo.insert((t.clone(), n), f.clone());
            f
        };
        if self.defined.insert(f.clone()) {
            self.defs.push(PureAtom::eq(t, Term::var(f.clone()).add_const(n)));
        }
        Term::var(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_example_with_subtraction() {
        let h = parse_symbolic_heap("k<n : arr(b;0,k-1) * arr(b;k,n-1)").unwrap();
        assert!(h.bound.is_empty());
        assert_eq!(h.pure.len(), 3);
        let f = match &h.spatial[0] {
            SpatialAtom::Array { lo, hi } => {
                assert_eq!(*lo, Term::var("b"));
                hi.vars().find(|v| v.name() != "b").unwrap().clone()
            }
            _ => panic!(),
        };
        assert_eq!(h.pure[1], PureAtom::eq(Term::var("k"), Term::var(f.clone()).add_const(1)));
        assert_eq!(h.spatial[0], SpatialAtom::array(Term::var("b"), Term::var("b").add(&Term::var(f))));
        assert_eq!(h.spatial[1].terms()[0], &Term::var("b").add(&Term::var("k")));
        assert!(h.fv().len() == 5);
    }

    #[test]
    fn parses_quantified_points_to() {
        let h = parse_symbolic_heap("EX z. x |-> z").unwrap();
        assert_eq!(h.bound, vec![Var::new("z")]);
        assert!(h.pure.is_empty());
        assert_eq!(h.spatial, vec![SpatialAtom::points_to(Term::var("x"), Term::var("z"))]);
    }

    #[test]
    fn subtraction_under_prefix_is_bound() {
        let h = parse_symbolic_heap("EX z. arr(z, y - 2)").unwrap();
        assert_eq!(h.bound.len(), 2);
        assert!(!h.fv().iter().any(|v| v.name().contains('\'')));
    }

    #[test]
    fn pure_only_prefix_and_comments() {
        let h = parse_symbolic_heap("# a comment\n x < x : emp # trailing\n").unwrap();
        assert_eq!(h.pure, vec![PureAtom::lt(Term::var("x"), Term::var("x"))]);
        assert_eq!(h.spatial, vec![SpatialAtom::Emp]);
    }

    #[test]
    fn reports_position_of_errors() {
        let e = parse_symbolic_heap("x |-> ").unwrap_err();
        assert_eq!((e.line, e.column), (1, 7));
        let e = parse_symbolic_heap("arr(x,\n y - z)").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("numeral"));
        let e = parse_symbolic_heap("x = y").unwrap_err();
        assert_eq!(e.line, 1);
    }

    #[test]
    fn scaled_terms() {
        assert_eq!(parse_term("2*x + 3 + x").unwrap().to_string(), "3*x + 3");
        assert!(parse_term("x - 1").is_err());
        assert!(parse_term("x*2").is_err());
    }

    #[test]
    fn shared_subtraction_reuses_variable() {
        let mut ctx = ParseContext::new();
        let a = ctx.parse_heap("arr(x;0,k-1)").unwrap();
        let b = ctx.parse_heap("arr(y;0,k-1)").unwrap();
        assert_eq!(a.pure, b.pure);
        assert_eq!(ctx.created().len(), 1);
    }
}
