//! One-line element expressions such as `1*e + w*a + w2*b`, `(d1+d-1)/2` or `de + dg2`.
//!
//! ```text
//! expr    = [ "+" | "-" ] product { ( "+" | "-" ) product } ;
//! product = factor { ( "*" | "/" ) factor } ;          (* "/" only by scalars *)
//! factor  = number | scalar | atom | "(" expr ")" ;
//! number  = digits [ "." digits ] [ ( "e" | "E" ) [ "+" | "-" ] digits ] [ "i" ] ;
//! scalar  = "i" | "w" | "w2" ;                         (* w = exp(2 pi i / 3), w2 = w^2 *)
//! atom    = "d" word | word | "d" "-" digits | "d" literal | literal ;
//! word    = element text accepted by Group::parse_element, e.g. "e", "a", "xY^2", "g2" ;
//! literal = "[" integers "]" ;
//! ```
//!
//! A product of two atoms is their convolution, and a bare scalar in a sum
//! stands for that multiple of the identity.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::algebra::GroupAlgebraElement;
use crate::error::{Error, Result};
use crate::group::Group;

/// Primitive cube root of unity `exp(2 pi i / 3)`.
pub fn omega() -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI / 3.0)
}

#[derive(Clone, Debug)]
enum Value {
    Scalar(Complex64),
    Element(GroupAlgebraElement),
}

struct Parser<'a> {
    group: &'a Group,
    src: &'a str,
    pos: usize,
}

/// Parses an element expression over `group`.
pub fn parse_element_expr(group: &Group, src: &str) -> Result<GroupAlgebraElement> {
    let mut p = Parser { group, src, pos: 0 };
    let v = p.expr()?;
    p.skip_ws();
    if p.pos != src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(p.promote(v))
}

impl<'a> Parser<'a> {
    fn error(&self, message: &str) -> Error {
        Error::Parse {
            input: self.src.to_string(),
            position: self.pos,
            message: message.to_string(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(offset)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn promote(&self, v: Value) -> GroupAlgebraElement {
        match v {
            Value::Element(e) => e,
            Value::Scalar(c) => GroupAlgebraElement::identity(self.group).scale(&c),
        }
    }

    fn expr(&mut self) -> Result<Value> {
        self.skip_ws();
        let mut negate = false;
        match self.peek() {
            Some('-') => {
                negate = true;
                self.pos += 1;
            }
            Some('+') => self.pos += 1,
            _ => {}
        }
        let mut acc = self.product()?;
        if negate {
            acc = self.negate(acc);
        }
        loop {
            self.skip_ws();
            let sign = match self.peek() {
                Some('+') => 1.0,
                Some('-') => -1.0,
                _ => return Ok(acc),
            };
            self.pos += 1;
            let mut rhs = self.product()?;
            if sign < 0.0 {
                rhs = self.negate(rhs);
            }
            acc = self.add(acc, rhs)?;
        }
    }

    fn negate(&self, v: Value) -> Value {
        match v {
            Value::Scalar(c) => Value::Scalar(-c),
            Value::Element(e) => Value::Element(e.scale(&Complex64::new(-1.0, 0.0))),
        }
    }

    fn add(&self, a: Value, b: Value) -> Result<Value> {
        Ok(match (a, b) {
            (Value::Scalar(x), Value::Scalar(y)) => Value::Scalar(x + y),
            (a, b) => Value::Element(self.promote(a).add(&self.promote(b))?),
        })
    }

    fn product(&mut self) -> Result<Value> {
        let mut acc = self.factor()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    acc = match (acc, rhs) {
                        (Value::Scalar(x), Value::Scalar(y)) => Value::Scalar(x * y),
                        (Value::Scalar(x), Value::Element(e)) | (Value::Element(e), Value::Scalar(x)) => {
                            Value::Element(e.scale(&x))
                        }
                        (Value::Element(a), Value::Element(b)) => Value::Element(a.convolve(&b)?),
                    };
                }
                Some('/') => {
                    self.pos += 1;
                    let at = self.pos;
                    let rhs = self.factor()?;
                    let Value::Scalar(y) = rhs else {
                        self.pos = at;
                        return Err(self.error("division by a group element"));
                    };
                    if y == Complex64::new(0.0, 0.0) {
                        self.pos = at;
                        return Err(self.error("division by zero"));
                    }
                    acc = match acc {
                        Value::Scalar(x) => Value::Scalar(x / y),
                        Value::Element(e) => Value::Element(e.scale(&(Complex64::new(1.0, 0.0) / y))),
                    };
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Value> {
        self.skip_ws();
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let v = self.expr()?;
                self.skip_ws();
                if self.peek() != Some(')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some('[') => {
                let lit = self.literal()?;
                self.atom(&lit)
            }
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Value> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.') {
            self.pos += 1;
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let sign_ok = matches!(self.peek_at(1), Some('+' | '-'))
                && self.peek_at(2).is_some_and(|c| c.is_ascii_digit());
            if self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) || sign_ok {
                self.pos += if sign_ok { 2 } else { 1 };
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            }
        }
        let value: f64 = self.src[start..self.pos].parse().map_err(|_| {
            let mut e = self.error("bad number");
            if let Error::Parse { position, .. } = &mut e {
                *position = start;
            }
            e
        })?;
        if self.peek() == Some('i') && !self.peek_at(1).is_some_and(|c| c.is_ascii_alphanumeric()) {
            self.pos += 1;
            return Ok(Value::Scalar(Complex64::new(0.0, value)));
        }
        Ok(Value::Scalar(Complex64::new(value, 0.0)))
    }

    fn literal(&mut self) -> Result<String> {
        let start = self.pos;
        match self.src[self.pos..].find(']') {
            Some(off) => {
                self.pos += off + 1;
                Ok(self.src[start..self.pos].to_string())
            }
            None => Err(self.error("unterminated '['")),
        }
    }

    fn identifier(&mut self) -> Result<Value> {
        let start = self.pos;
        let mut prev = ' ';
        while let Some(c) = self.peek() {
            let ok = c.is_ascii_alphanumeric() || c == '^' || (c == '-' && prev == '^');
            if !ok {
                break;
            }
            prev = c;
            self.pos += 1;
        }
        let ident = &self.src[start..self.pos];
        match ident {
            "i" => return Ok(Value::Scalar(Complex64::i())),
            "w" => return Ok(Value::Scalar(omega())),
            "w2" => return Ok(Value::Scalar(omega() * omega())),
            "d" => {
                // "d-1" (integer) or "d[...]" (literal)
                return match self.peek() {
                    Some('-') if self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) => {
                        let s = self.pos;
                        self.pos += 1;
                        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                            self.pos += 1;
                        }
                        let text = self.src[s..self.pos].to_string();
                        self.atom(&text)
                    }
                    Some('[') => {
                        let lit = self.literal()?;
                        self.atom(&lit)
                    }
                    _ => Err(self.error("expected a group element after 'd'")),
                };
            }
            _ => {}
        }
        let word = ident.strip_prefix('d').unwrap_or(ident);
        let word = word.to_string();
        self.pos = start;
        let v = self.atom(&word);
        self.pos = start + ident.len();
        v
    }

    fn atom(&self, text: &str) -> Result<Value> {
        let g = self.group.parse_element(text).map_err(|e| match e {
            Error::Parse { message, .. } => self.error(&format!("bad element {text:?}: {message}")),
            other => other,
        })?;
        Ok(Value::Element(GroupAlgebraElement::delta(self.group, g)?))
    }
}
