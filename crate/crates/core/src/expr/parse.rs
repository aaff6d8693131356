//! Recursive-descent parser.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := '-' unary | power
//! power    := primary ('^' exponent)*
//! exponent := ['-'] INTEGER | '(' ['-'] INTEGER ')'
//! primary  := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'
//! ```

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use core::fmt;

use super::{Func, Node, Number};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Empty,
    UnexpectedChar(char),
    UnexpectedEnd,
    /// A token appeared where the grammar does not allow it.
    UnexpectedToken(String),
    UnknownIdentifier(String),
    UnknownFunction(String),
    NonIntegerExponent,
    DivisionByZero,
    BadNumber(String),
}

/// Parse failure with the byte offset into the source where it was detected.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind} at byte {offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Empty => f.write_str("empty expression"),
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character `{c}`"),
            ParseErrorKind::UnexpectedEnd => f.write_str("unexpected end of input"),
            ParseErrorKind::UnexpectedToken(t) => write!(f, "unexpected `{t}`"),
            ParseErrorKind::UnknownIdentifier(name) => write!(f, "unknown identifier `{name}`"),
            ParseErrorKind::UnknownFunction(name) => write!(f, "unknown function `{name}`"),
            ParseErrorKind::NonIntegerExponent => f.write_str("exponent must be an integer literal"),
            ParseErrorKind::DivisionByZero => f.write_str("division by literal zero"),
            ParseErrorKind::BadNumber(text) => write!(f, "malformed number `{text}`"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok<'s> {
    Num(&'s str),
    Ident(&'s str),
    Op(u8),
    End,
}

impl Tok<'_> {
    fn describe(&self) -> String {
        match self {
            Tok::Num(s) | Tok::Ident(s) => s.to_string(),
            Tok::Op(c) => (*c as char).to_string(),
            Tok::End => "end of input".to_string(),
        }
    }
}

pub(crate) struct Parser<'s, 'v> {
    src: &'s str,
    pos: usize,
    tok: Tok<'s>,
    tok_start: usize,
    vars: &'v [String],
}

impl<'s, 'v> Parser<'s, 'v> {
    pub(crate) fn new(src: &'s str, vars: &'v [String]) -> Self {
        Parser { src, pos: 0, tok: Tok::End, tok_start: 0, vars }
    }

    pub(crate) fn parse(mut self) -> Result<Arc<Node>, ParseError> {
        if self.src.trim().is_empty() {
            return Err(ParseError { kind: ParseErrorKind::Empty, offset: 0 });
        }
        self.advance()?;
        let node = self.expr()?;
        if self.tok != Tok::End {
            return Err(self.unexpected());
        }
        Ok(node)
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError { kind, offset: self.tok_start }
    }

    fn unexpected(&self) -> ParseError {
        match self.tok {
            Tok::End => self.err(ParseErrorKind::UnexpectedEnd),
            t => self.err(ParseErrorKind::UnexpectedToken(t.describe())),
        }
    }

    fn advance(&mut self) -> Result<(), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_start = self.pos;
        if self.pos >= bytes.len() {
            self.tok = Tok::End;
            return Ok(());
        }
        let start = self.pos;
        let c = bytes[start];
        if c.is_ascii_digit() || c == b'.' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut exp_end = end + 1;
                if exp_end < bytes.len() && (bytes[exp_end] == b'+' || bytes[exp_end] == b'-') {
                    exp_end += 1;
                }
                if exp_end < bytes.len() && bytes[exp_end].is_ascii_digit() {
                    while exp_end < bytes.len() && bytes[exp_end].is_ascii_digit() {
                        exp_end += 1;
                    }
                    end = exp_end;
                }
            }
            self.pos = end;
            self.tok = Tok::Num(&self.src[start..end]);
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            self.tok = Tok::Ident(&self.src[start..end]);
        } else if b"+-*/^()".contains(&c) {
            self.pos += 1;
            self.tok = Tok::Op(c);
        } else {
            let ch = self.src[start..].chars().next().unwrap_or('?');
            return Err(self.err(ParseErrorKind::UnexpectedChar(ch)));
        }
        Ok(())
    }

    fn expect(&mut self, op: u8) -> Result<(), ParseError> {
        if self.tok == Tok::Op(op) {
            self.advance()
        } else {
            Err(self.unexpected())
        }
    }

    fn expr(&mut self) -> Result<Arc<Node>, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.tok {
                Tok::Op(b'+') => {
                    self.advance()?;
                    lhs = Node::add(lhs, self.term()?);
                }
                Tok::Op(b'-') => {
                    self.advance()?;
                    lhs = Node::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Arc<Node>, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.tok {
                Tok::Op(b'*') => {
                    self.advance()?;
                    lhs = Node::mul(lhs, self.unary()?);
                }
                Tok::Op(b'/') => {
                    let at = self.tok_start;
                    self.advance()?;
                    let rhs = self.unary()?;
                    if rhs.is_zero() {
                        return Err(ParseError { kind: ParseErrorKind::DivisionByZero, offset: at });
                    }
                    lhs = Node::div(lhs, rhs);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Arc<Node>, ParseError> {
        if self.tok == Tok::Op(b'-') {
            self.advance()?;
            return Ok(Node::neg(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Arc<Node>, ParseError> {
        let mut base = self.primary()?;
        while self.tok == Tok::Op(b'^') {
            self.advance()?;
            let e = self.exponent()?;
            if base.is_zero() && e < 0 {
                return Err(self.err(ParseErrorKind::DivisionByZero));
            }
            base = Node::pow(base, e);
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32, ParseError> {
        let parenthesized = self.tok == Tok::Op(b'(');
        if parenthesized {
            self.advance()?;
        }
        let negative = self.tok == Tok::Op(b'-');
        if negative {
            self.advance()?;
        }
        let value = match self.tok {
            Tok::Num(text) => match Number::parse_literal(text) {
                Some(Number::Rational { num, den: 1 }) => {
                    i32::try_from(num).map_err(|_| self.err(ParseErrorKind::NonIntegerExponent))?
                }
                Some(_) => return Err(self.err(ParseErrorKind::NonIntegerExponent)),
                None => return Err(self.err(ParseErrorKind::BadNumber(text.to_string()))),
            },
            Tok::End => return Err(self.unexpected()),
            _ => return Err(self.err(ParseErrorKind::NonIntegerExponent)),
        };
        self.advance()?;
        if parenthesized {
            if self.tok != Tok::Op(b')') {
                return Err(self.err(ParseErrorKind::NonIntegerExponent));
            }
            self.advance()?;
        }
        Ok(if negative { -value } else { value })
    }

    fn primary(&mut self) -> Result<Arc<Node>, ParseError> {
        match self.tok {
            Tok::Num(text) => {
                let n =
                    Number::parse_literal(text).ok_or_else(|| self.err(ParseErrorKind::BadNumber(text.to_string())))?;
                self.advance()?;
                Ok(Node::num(n))
            }
            Tok::Ident(name) => {
                let at = self.tok_start;
                self.advance()?;
                if self.tok == Tok::Op(b'(') {
                    let func = Func::lookup(name)
                        .ok_or(ParseError { kind: ParseErrorKind::UnknownFunction(name.to_string()), offset: at })?;
                    self.advance()?;
                    let arg = self.expr()?;
                    self.expect(b')')?;
                    Ok(Node::call(func, arg))
                } else {
                    let idx = self
                        .vars
                        .iter()
                        .position(|v| v == name)
                        .ok_or(ParseError { kind: ParseErrorKind::UnknownIdentifier(name.to_string()), offset: at })?;
                    Ok(Arc::new(Node::Var(idx)))
                }
            }
            Tok::Op(b'(') => {
                self.advance()?;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            _ => Err(self.unexpected()),
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::ScalarExpr;

    use super::*;

    fn parse_err(src: &str) -> ParseError {
        ScalarExpr::parse(src, &["x", "y"]).unwrap_err()
    }

    #[test]
    fn grammar_cases() {
        let e = ScalarExpr::parse("x^2*y", &["x", "y"]).unwrap();
        assert_eq!(e.to_string(), "x^2*y");
        let e = ScalarExpr::parse("exp(x)*sin(y)", &["x", "y"]).unwrap();
        assert_eq!(e.to_string(), "exp(x)*sin(y)");
    }

    #[test]
    fn precedence_and_associativity() {
        let eval = |s: &str| ScalarExpr::parse(s, &["x"]).unwrap().eval(&[3.0]).unwrap();
        assert_eq!(eval("-x^2"), -9.0);
        assert_eq!(eval("2*x^2"), 18.0);
        assert_eq!(eval("x - 1 - 1"), 1.0);
        assert_eq!(eval("12/x/2"), 2.0);
        assert_eq!(eval("x^2^2"), 81.0);
        assert_eq!(eval("x^-1"), 1.0 / 3.0);
        assert_eq!(eval("x^(-2)"), 1.0 / 9.0);
        assert_eq!(eval("--x"), 3.0);
        assert_eq!(eval("1.5e1 - x"), 12.0);
    }

    #[test]
    fn rejects_non_integer_exponents() {
        assert_eq!(parse_err("x^2.5").kind, ParseErrorKind::NonIntegerExponent);
        assert_eq!(parse_err("x^y").kind, ParseErrorKind::NonIntegerExponent);
        assert_eq!(parse_err("x^(1/2)").kind, ParseErrorKind::NonIntegerExponent);
    }

    #[test]
    fn errors_carry_offsets() {
        let e = parse_err("x + z");
        assert_eq!(e.kind, ParseErrorKind::UnknownIdentifier("z".into()));
        assert_eq!(e.offset, 4);
        let e = parse_err("x / 0");
        assert_eq!((e.kind, e.offset), (ParseErrorKind::DivisionByZero, 2));
        assert_eq!(parse_err("x/(1-1)").kind, ParseErrorKind::DivisionByZero);
        assert_eq!(parse_err("tan(x)").kind, ParseErrorKind::UnknownFunction("tan".into()));
        assert_eq!(parse_err("x $ y").kind, ParseErrorKind::UnexpectedChar('$'));
        assert_eq!(parse_err("(x + y").kind, ParseErrorKind::UnexpectedEnd);
        assert_eq!(parse_err("x y").kind, ParseErrorKind::UnexpectedToken("y".into()));
        assert_eq!(parse_err("  ").kind, ParseErrorKind::Empty);
        assert_eq!(parse_err("1..2").kind, ParseErrorKind::BadNumber("1..2".into()));
    }
}
