//! Parser for `.pip` program text.
//!
//! ```text
//! program  := item*
//! item     := "vars" ident ("," ident)* ";"
//!           | "start" locref ";"
//!           | "locations" locref ("," locref)* ";"
//!           | "trans" ident ":" locref "->" locref ["when" cons] [updates] ";"
//!           | "gt" ident "{" "from" locref ";" ["guard" cons ";"] branch+ "}"
//! branch   := "branch" [ident] ["p" "=" rational] [updates] "->" locref ";"
//! updates  := "{" ident ":=" expr ("," ident ":=" expr)* "}"
//! locref   := ident ("[" cons "]")*
//! cons     := "true" | atom ("&&" atom)*
//! atom     := expr ("<" | "<=" | "=" | "==" | ">=" | ">") expr
//! ```
//!
//! Identifiers may end in primes (`t2'`). Variables not listed in `vars`
//! are temporaries. `//` and `#` start line comments.

use std::fmt;

use num::{BigInt, One};
use thiserror::Error;

use crate::constraint::{Atom, Cmp, Constraint, Update};
use crate::poly::{Polynomial, Var};
use crate::program::{GeneralTransition, Loc, Pip, Prob, Transition, Violation};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("invalid program: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
}

fn join_violations(vs: &[Violation]) -> String {
    vs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

// Longest symbols first so that `:=` wins over `:`.
const SYMBOLS: &[&str] = &[
    ":=", "->", "&&", "<=", ">=", "==", "<", ">", "=", "+", "-", "*", "^", "/", "(", ")", "{",
    "}", "[", "]", ";", ",", ":",
];

fn lex(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            while i < chars.len() && chars[i] == '\'' {
                i += 1;
            }
            let word: String = chars[s..i].iter().collect();
            col += i - s;
            out.push(Token {
                tok: Tok::Ident(word),
                line: start_line,
                col: start_col,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let s = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[s..i].iter().collect();
            col += i - s;
            out.push(Token {
                tok: Tok::Int(digits.parse().expect("ascii digits")),
                line: start_line,
                col: start_col,
            });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                i += s.len();
                col += s.len();
                out.push(Token {
                    tok: Tok::Sym(s),
                    line: start_line,
                    col: start_col,
                });
            }
            None => {
                return Err(SyntaxError {
                    line,
                    col,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, SyntaxError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail(&self, message: String) -> SyntaxError {
        let t = &self.toks[self.pos];
        SyntaxError {
            line: t.line,
            col: t.col,
            message,
        }
    }

    fn error<T>(&self, message: String) -> PResult<T> {
        Err(self.fail(message))
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_keyword(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.error(format!("expected `{s}`, found {}", self.peek()))
        }
    }

    fn expect_keyword(&mut self, k: &str) -> PResult<()> {
        if self.is_keyword(k) {
            self.next();
            Ok(())
        } else {
            self.error(format!("expected `{k}`, found {}", self.peek()))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            other => self.error(format!("expected identifier, found {other}")),
        }
    }

    fn integer(&mut self) -> PResult<BigInt> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.next();
                Ok(n)
            }
            other => self.error(format!("expected integer, found {other}")),
        }
    }

    fn rational(&mut self) -> PResult<Prob> {
        let n = self.integer()?;
        let d = if self.eat_sym("/") {
            self.integer()?
        } else {
            BigInt::one()
        };
        if d == BigInt::from(0) {
            return self.error("zero denominator".into());
        }
        Ok(Prob::new(n, d))
    }

    fn locref(&mut self) -> PResult<Loc> {
        let mut name = self.ident()?;
        while self.eat_sym("[") {
            let c = self.constraint()?;
            self.expect_sym("]")?;
            name.push('[');
            name.push_str(&c.to_string());
            name.push(']');
        }
        Ok(Loc::new(&name))
    }

    fn constraint(&mut self) -> PResult<Constraint> {
        if self.is_keyword("true") {
            self.next();
            return Ok(Constraint::truth());
        }
        let mut atoms = vec![self.atom()?];
        while self.eat_sym("&&") {
            atoms.push(self.atom()?);
        }
        Ok(Constraint::from_atoms(atoms))
    }

    fn atom(&mut self) -> PResult<Atom> {
        let lhs = self.expr()?;
        let cmp = match self.peek() {
            Tok::Sym("<") => Cmp::Lt,
            Tok::Sym("<=") => Cmp::Le,
            Tok::Sym("=") | Tok::Sym("==") => Cmp::Eq,
            Tok::Sym(">=") => Cmp::Ge,
            Tok::Sym(">") => Cmp::Gt,
            other => return self.error(format!("expected comparison, found {other}")),
        };
        self.next();
        let rhs = self.expr()?;
        Ok(Atom::new(&lhs, cmp, &rhs))
    }

    fn expr(&mut self) -> PResult<Polynomial> {
        let mut acc = if self.eat_sym("-") {
            -self.term()?
        } else {
            self.term()?
        };
        loop {
            if self.eat_sym("+") {
                acc = acc + self.term()?;
            } else if self.eat_sym("-") {
                acc = acc - self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> PResult<Polynomial> {
        let mut acc = self.factor()?;
        while self.eat_sym("*") {
            acc = acc * self.factor()?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> PResult<Polynomial> {
        let base = match self.peek().clone() {
            Tok::Int(n) => {
                self.next();
                Polynomial::constant(n)
            }
            Tok::Ident(s) => {
                self.next();
                Polynomial::var(Var::new(&s))
            }
            Tok::Sym("(") => {
                self.next();
                let e = self.expr()?;
                self.expect_sym(")")?;
                e
            }
            Tok::Sym("-") => {
                self.next();
                return Ok(-self.factor()?);
            }
            other => return self.error(format!("expected expression, found {other}")),
        };
        if self.eat_sym("^") {
            let e = self.integer()?;
            let e: u32 = match e.try_into() {
                Ok(e) => e,
                Err(_) => return self.error("exponent out of range".into()),
            };
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn updates(&mut self) -> PResult<Vec<(Var, Polynomial)>> {
        let mut out = Vec::new();
        if !self.eat_sym("{") {
            return Ok(out);
        }
        loop {
            let v = self.ident()?;
            self.expect_sym(":=")?;
            out.push((Var::new(&v), self.expr()?));
            if self.eat_sym("}") {
                return Ok(out);
            }
            self.expect_sym(",")?;
        }
    }

    fn branch(&mut self) -> PResult<RawBranch> {
        self.expect_keyword("branch")?;
        let name = match self.peek() {
            Tok::Ident(s) if s != "p" => Some(self.ident()?),
            _ => None,
        };
        let prob = if self.is_keyword("p") {
            self.next();
            self.expect_sym("=")?;
            Some(self.rational()?)
        } else {
            None
        };
        let ups = self.updates()?;
        self.expect_sym("->")?;
        let target = self.locref()?;
        self.expect_sym(";")?;
        Ok((name, prob, ups, target))
    }
}

type RawBranch = (Option<String>, Option<Prob>, Vec<(Var, Polynomial)>, Loc);

struct Draft {
    vars: Vec<Var>,
    start: Option<Loc>,
    locations: Vec<Loc>,
    gts: Vec<(GeneralTransition, Vec<Vec<(Var, Polynomial)>>)>,
}

impl Draft {
    fn mention(&mut self, l: &Loc) {
        if !self.locations.contains(l) {
            self.locations.push(l.clone());
        }
    }
}

pub fn parse(src: &str) -> Result<Pip, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let mut d = Draft {
        vars: Vec::new(),
        start: None,
        locations: Vec::new(),
        gts: Vec::new(),
    };
    loop {
        match p.peek().clone() {
            Tok::Eof => break,
            Tok::Ident(k) if k == "vars" => {
                p.next();
                loop {
                    let v = Var::new(&p.ident()?);
                    if !d.vars.contains(&v) {
                        d.vars.push(v);
                    }
                    if !p.eat_sym(",") {
                        break;
                    }
                }
                p.expect_sym(";")?;
            }
            Tok::Ident(k) if k == "start" => {
                p.next();
                let l = p.locref()?;
                d.mention(&l);
                d.start = Some(l);
                p.expect_sym(";")?;
            }
            Tok::Ident(k) if k == "locations" => {
                p.next();
                loop {
                    let l = p.locref()?;
                    d.mention(&l);
                    if !p.eat_sym(",") {
                        break;
                    }
                }
                p.expect_sym(";")?;
            }
            Tok::Ident(k) if k == "trans" => {
                p.next();
                let name = p.ident()?;
                p.expect_sym(":")?;
                let source = p.locref()?;
                p.expect_sym("->")?;
                let target = p.locref()?;
                let guard = if p.is_keyword("when") {
                    p.next();
                    p.constraint()?
                } else {
                    Constraint::truth()
                };
                let ups = p.updates()?;
                p.expect_sym(";")?;
                d.mention(&source);
                d.mention(&target);
                let t = Transition {
                    name: name.clone(),
                    prob: Prob::one(),
                    update: Update::identity(),
                    target,
                };
                d.gts.push((
                    GeneralTransition {
                        name,
                        source,
                        guard,
                        members: vec![t],
                    },
                    vec![ups],
                ));
            }
            Tok::Ident(k) if k == "gt" => {
                p.next();
                let name = p.ident()?;
                p.expect_sym("{")?;
                p.expect_keyword("from")?;
                let source = p.locref()?;
                p.expect_sym(";")?;
                d.mention(&source);
                let guard = if p.is_keyword("guard") {
                    p.next();
                    let g = p.constraint()?;
                    p.expect_sym(";")?;
                    g
                } else {
                    Constraint::truth()
                };
                let mut raw = Vec::new();
                while p.is_keyword("branch") {
                    raw.push(p.branch()?);
                }
                if raw.is_empty() {
                    return Err(p.fail("expected `branch`".into()).into());
                }
                p.expect_sym("}")?;
                let single = raw.len() == 1;
                let mut members = Vec::new();
                let mut ups = Vec::new();
                for (i, (bname, prob, u, target)) in raw.into_iter().enumerate() {
                    d.mention(&target);
                    let bname = match bname {
                        Some(n) => n,
                        None if single => name.clone(),
                        None => format!("{name}_{i}"),
                    };
                    let prob = match prob {
                        Some(q) => q,
                        None if single => Prob::one(),
                        None => {
                            return Err(p.fail(format!("branch {bname} needs a probability")).into())
                        }
                    };
                    members.push(Transition {
                        name: bname,
                        prob,
                        update: Update::identity(),
                        target,
                    });
                    ups.push(u);
                }
                d.gts.push((
                    GeneralTransition {
                        name,
                        source,
                        guard,
                        members,
                    },
                    ups,
                ));
            }
            other => return Err(p.fail(format!("unexpected {other}")).into()),
        }
    }
    let start = match d.start.clone() {
        Some(s) => s,
        None => return Err(p.fail("missing `start`".into()).into()),
    };
    let gts = d
        .gts
        .into_iter()
        .map(|(mut g, ups)| {
            for (t, u) in g.members.iter_mut().zip(ups) {
                t.update = Update::from_pairs(u);
            }
            g
        })
        .collect();
    let pip = Pip {
        program_vars: d.vars,
        locations: d.locations,
        initial: start,
        gts,
    };
    pip.validate().map_err(ParseError::Invalid)?;
    Ok(pip)
}

/// Parses a single constraint such as `x = 0 && y > 0`.
pub fn parse_constraint(src: &str) -> Result<Constraint, SyntaxError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let c = p.constraint()?;
    match p.peek() {
        Tok::Eof => Ok(c),
        other => p.error(format!("unexpected {other}")),
    }
}

pub fn parse_atom(src: &str) -> Result<Atom, SyntaxError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let a = p.atom()?;
    match p.peek() {
        Tok::Eof => Ok(a),
        other => p.error(format!("unexpected {other}")),
    }
}

pub fn parse_polynomial(src: &str) -> Result<Polynomial, SyntaxError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let e = p.expr()?;
    match p.peek() {
        Tok::Eof => Ok(e),
        other => p.error(format!("unexpected {other}")),
    }
}
