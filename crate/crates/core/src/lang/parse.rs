//! Lexer and recursive-descent parser for terms and programs.
//!
//! ```text
//! program ::= stmt (';' stmt)*
//! stmt    ::= 'skip' | ident ':=' term | 'if' test 'then' stmt 'else' stmt | '{' program '}'
//! test    ::= term ('<' | '>' | '==') literal
//! term    ::= product (('+' | '-') product)*
//! product ::= atom (('*' | '/') atom)*
//! atom    ::= literal | ident | '(' term ')'
//! ```
//!
//! `×`, `÷` and `−` are accepted as synonyms. A `-` directly before a number
//! in atom position makes a negative literal; there is no general unary minus.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::minifloat::ArithOp;

use super::{Parsed, ProgramAst, Relation, Term, TermKind, Test};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(ArithOp),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Semi,
    Assign,
    Lt,
    Gt,
    EqEq,
    Skip,
    If,
    Then,
    Else,
    End,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "number {v}"),
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Op(op) => write!(f, "`{op}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Assign => f.write_str("`:=`"),
            Tok::Lt => f.write_str("`<`"),
            Tok::Gt => f.write_str("`>`"),
            Tok::EqEq => f.write_str("`==`"),
            Tok::Skip => f.write_str("`skip`"),
            Tok::If => f.write_str("`if`"),
            Tok::Then => f.write_str("`then`"),
            Tok::Else => f.write_str("`else`"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

type Pos = (usize, usize);

fn syntax<T>(pos: Pos, message: impl Into<String>) -> Result<T> {
    Err(Error::Syntax {
        line: pos.0,
        column: pos.1,
        message: message.into(),
    })
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let pos = (line, col);
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
        let start = i;
        let tok = if c.is_ascii_digit()
            || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
        {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            match text.parse::<f64>() {
                Ok(v) if v.is_finite() => Tok::Num(v),
                _ => return syntax(pos, format!("malformed number `{text}`")),
            }
        } else if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            match text.as_str() {
                "skip" => Tok::Skip,
                "if" => Tok::If,
                "then" => Tok::Then,
                "else" => Tok::Else,
                _ => Tok::Ident(text),
            }
        } else {
            i += 1;
            match c {
                '+' => Tok::Op(ArithOp::Add),
                '-' | '−' => Tok::Op(ArithOp::Sub),
                '*' | '×' => Tok::Op(ArithOp::Mul),
                '/' | '÷' => Tok::Op(ArithOp::Div),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                ';' => Tok::Semi,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                ':' if chars.get(i) == Some(&'=') => {
                    i += 1;
                    Tok::Assign
                }
                '=' if chars.get(i) == Some(&'=') => {
                    i += 1;
                    Tok::EqEq
                }
                _ => return syntax(pos, format!("unexpected character `{c}`")),
            }
        };
        col += i - start;
        out.push((tok, pos));
    }
    out.push((Tok::End, (line, col)));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            syntax(
                self.pos(),
                format!("expected {want}, found {}", self.peek()),
            )
        }
    }

    fn term(&mut self) -> Result<Term> {
        let mut left = self.product()?;
        while let Tok::Op(op @ (ArithOp::Add | ArithOp::Sub)) = *self.peek() {
            self.bump();
            let right = self.product()?;
            left = Term::binop(op, left, right);
        }
        Ok(left)
    }

    fn product(&mut self) -> Result<Term> {
        let mut left = self.atom()?;
        while let Tok::Op(op @ (ArithOp::Mul | ArithOp::Div)) = *self.peek() {
            self.bump();
            let right = self.atom()?;
            left = Term::binop(op, left, right);
        }
        Ok(left)
    }

    fn atom(&mut self) -> Result<Term> {
        let (tok, pos) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Term::literal(v, pos)),
            Tok::Op(ArithOp::Sub) => match self.bump() {
                (Tok::Num(v), _) => Ok(Term::literal(-v, pos)),
                (other, p) => syntax(
                    p,
                    format!("expected a number after `-`, found {other}; unary minus only applies to literals"),
                ),
            },
            Tok::Ident(name) => Ok(Term {
                kind: TermKind::Var(name.clone()),
                vars: BTreeSet::from([name]),
                pos,
            }),
            Tok::LParen => {
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            other => syntax(pos, format!("expected a term, found {other}")),
        }
    }

    fn literal(&mut self) -> Result<f64> {
        match self.bump() {
            (Tok::Num(v), _) => Ok(v),
            (Tok::Op(ArithOp::Sub), _) => match self.bump() {
                (Tok::Num(v), _) => Ok(-v),
                (other, p) => syntax(p, format!("expected a number, found {other}")),
            },
            (other, p) => syntax(p, format!("expected a number, found {other}")),
        }
    }

    fn program(&mut self) -> Result<ProgramAst> {
        let mut p = self.statement()?;
        while *self.peek() == Tok::Semi {
            self.bump();
            let q = self.statement()?;
            p = ProgramAst::Seq(Box::new(p), Box::new(q));
        }
        Ok(p)
    }

    fn statement(&mut self) -> Result<ProgramAst> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Skip => {
                self.bump();
                Ok(ProgramAst::Skip)
            }
            Tok::Ident(name) => {
                self.bump();
                self.expect(Tok::Assign)?;
                Ok(ProgramAst::Assign {
                    variable: name,
                    term: self.term()?,
                })
            }
            Tok::If => {
                self.bump();
                let term = self.term()?;
                let relation = match self.bump() {
                    (Tok::Lt, _) => Relation::Lt,
                    (Tok::Gt, _) => Relation::Gt,
                    (Tok::EqEq, _) => Relation::Eq,
                    (other, p) => {
                        return syntax(p, format!("expected `<`, `>` or `==`, found {other}"))
                    }
                };
                let value = self.literal()?;
                self.expect(Tok::Then)?;
                let then = self.statement()?;
                self.expect(Tok::Else)?;
                let otherwise = self.statement()?;
                Ok(ProgramAst::If {
                    test: Test {
                        term,
                        relation,
                        value,
                    },
                    then: Box::new(then),
                    otherwise: Box::new(otherwise),
                })
            }
            Tok::LBrace => {
                self.bump();
                let p = self.program()?;
                self.expect(Tok::RBrace)?;
                Ok(p)
            }
            other => syntax(pos, format!("expected a statement, found {other}")),
        }
    }

    fn finish(&self) -> Result<()> {
        match self.peek() {
            Tok::End => Ok(()),
            other => syntax(
                self.pos(),
                format!("unexpected {other} after the end of the input"),
            ),
        }
    }
}

fn is_program(toks: &[(Tok, Pos)]) -> bool {
    match toks.first().map(|t| &t.0) {
        Some(Tok::Skip | Tok::If | Tok::LBrace) => true,
        Some(Tok::Ident(_)) => matches!(toks.get(1).map(|t| &t.0), Some(Tok::Assign)),
        _ => false,
    }
}

/// Parse either a term or a program, deciding by the first tokens.
pub fn parse(source: &str) -> Result<Parsed> {
    let toks = lex(source)?;
    let program = is_program(&toks);
    let mut p = Parser { toks, at: 0 };
    let out = if program {
        Parsed::Program(p.program()?)
    } else {
        Parsed::Term(p.term()?)
    };
    p.finish()?;
    Ok(out)
}

/// Parse a term; programs parse but are rejected as unsupported.
pub fn parse_term(source: &str) -> Result<Term> {
    match parse(source)? {
        Parsed::Term(t) => Ok(t),
        Parsed::Program(p) => Err(Error::UnsupportedSemantics(format!(
            "`{p}` is a program; only terms can be analyzed"
        ))),
    }
}
