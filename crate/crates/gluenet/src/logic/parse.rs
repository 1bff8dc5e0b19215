//! Recursive-descent parser for the ASCII sequent grammar:
//!
//! ```text
//! sequent := formula ("," formula)*
//! formula := term ("|" term)*
//! term    := factor ("*" factor)*
//! factor  := atom | "~" factor | "(" formula ")"
//! atom    := [a-z][a-z0-9_]*
//! ```
//!
//! `~` and both binary operators are left-associative with precedence
//! `~` > `*` > `|`. Negation of a compound is pushed to the literals without
//! swapping operands: `~(a*b)` parses as `~a|~b`.

use std::fmt;

use super::formula::{Formula, Polarity, Sequent};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at column {}: {}", self.position + 1, self.message)
    }
}

impl std::error::Error for ParseError {}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Parser<'a> {
        Parser {
            text: text.as_bytes(),
            pos: 0,
        }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            position: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }

    fn sequent(&mut self) -> Result<Sequent, ParseError> {
        let mut formulas = vec![self.formula()?];
        while self.peek() == Some(b',') {
            self.bump();
            formulas.push(self.formula()?);
        }
        if let Some(c) = self.peek() {
            return Err(self.error(format!("unexpected character {:?}", c as char)));
        }
        Sequent::new(formulas).map_err(|_| self.error("empty sequent"))
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.term()?;
        while self.peek() == Some(b'|') {
            self.bump();
            acc = Formula::par(acc, self.term()?);
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.factor()?;
        while self.peek() == Some(b'*') {
            self.bump();
            acc = Formula::tensor(acc, self.factor()?);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(b'~') => {
                self.bump();
                Ok(self.factor()?.negate())
            }
            Some(b'(') => {
                self.bump();
                let inner = self.formula()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.bump();
                Ok(inner)
            }
            Some(c) if c.is_ascii_lowercase() => self.atom(),
            Some(c) => Err(self.error(format!(
                "expected atom, '~', or '(' but found {:?}",
                c as char
            ))),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.text.len()
            && (self.text[self.pos].is_ascii_lowercase()
                || self.text[self.pos].is_ascii_digit()
                || self.text[self.pos] == b'_')
        {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error("expected atom"));
        }
        let name = std::str::from_utf8(&self.text[start..self.pos])
            .expect("ascii slice")
            .to_string();
        Ok(Formula::lit(name, Polarity::Pos))
    }
}

/// Parses a sequent from its ASCII form.
pub fn parse_sequent(text: &str) -> Result<Sequent, ParseError> {
    let mut parser = Parser::new(text);
    if parser.peek().is_none() {
        return Err(parser.error("empty sequent"));
    }
    parser.sequent()
}
