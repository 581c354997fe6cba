//! Recursive-descent parser for the expression grammar
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := ['-'] base ['^' int]
//! base   := number | ident | fn '(' expr ')' | '(' expr ')'
//! ```
//!
//! Errors carry the byte offset of the offending token.

use crate::error::{Error, Result};

use super::ast::{BinOp, ExprAst, UnaryOp};

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    vars: &'a [String],
}

pub fn parse_expr(text: &str, vars: &[String]) -> Result<ExprAst> {
    let mut p = Parser {
        src: text,
        bytes: text.as_bytes(),
        pos: 0,
        vars,
    };
    p.skip_ws();
    if p.pos >= p.bytes.len() {
        return Err(Error::Parse {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let ast = p.expr()?;
    p.skip_ws();
    if p.pos < p.bytes.len() {
        return Err(Error::Parse {
            offset: p.pos,
            message: format!("unexpected trailing input `{}`", &p.src[p.pos..]),
        });
    }
    Ok(ast)
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<ExprAst> {
        let mut lhs = self.term()?;
        loop {
            self.skip_ws();
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = ExprAst::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<ExprAst> {
        let mut lhs = self.factor()?;
        loop {
            self.skip_ws();
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = ExprAst::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<ExprAst> {
        self.skip_ws();
        let negated = self.eat(b'-');
        let mut base = self.base()?;
        self.skip_ws();
        if self.eat(b'^') {
            let exp = self.int_literal()?;
            base = ExprAst::PowInt(Box::new(base), exp);
        }
        Ok(if negated {
            ExprAst::Unary(UnaryOp::Neg, Box::new(base))
        } else {
            base
        })
    }

    fn int_literal(&mut self) -> Result<i32> {
        self.skip_ws();
        let start = self.pos;
        if self.eat(b'-') {}
        while self
            .peek()
            .map(|c| c.is_ascii_digit())
            .unwrap_or(false)
        {
            self.pos += 1;
        }
        self.src[start..self.pos].parse().map_err(|_| Error::Parse {
            offset: start,
            message: "expected integer exponent".into(),
        })
    }

    fn base(&mut self) -> Result<ExprAst> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.skip_ws();
                if !self.eat(b')') {
                    return Err(Error::Parse {
                        offset: self.pos,
                        message: "expected `)`".into(),
                    });
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(start),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(start),
            _ => Err(Error::Parse {
                offset: start,
                message: "expected number, identifier or `(`".into(),
            }),
        }
    }

    fn number(&mut self, start: usize) -> Result<ExprAst> {
        while self
            .peek()
            .map(|c| c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E')
            .unwrap_or(false)
        {
            // Allow a sign directly after an exponent marker.
            if matches!(self.bytes[self.pos], b'e' | b'E')
                && matches!(self.bytes.get(self.pos + 1), Some(b'+') | Some(b'-'))
            {
                self.pos += 1;
            }
            self.pos += 1;
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .map(ExprAst::Const)
            .map_err(|_| Error::Parse {
                offset: start,
                message: format!("invalid number `{text}`"),
            })
    }

    fn ident(&mut self, start: usize) -> Result<ExprAst> {
        while self
            .peek()
            .map(|c| c.is_ascii_alphanumeric() || c == b'_')
            .unwrap_or(false)
        {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];
        let fun = match name {
            "sin" => Some(UnaryOp::Sin),
            "cos" => Some(UnaryOp::Cos),
            "exp" => Some(UnaryOp::Exp),
            "sqrt" => Some(UnaryOp::Sqrt),
            "abs" => Some(UnaryOp::Abs),
            _ => None,
        };
        self.skip_ws();
        if let Some(op) = fun {
            if !self.eat(b'(') {
                return Err(Error::Parse {
                    offset: self.pos,
                    message: format!("expected `(` after function `{name}`"),
                });
            }
            let arg = self.expr()?;
            self.skip_ws();
            if !self.eat(b')') {
                return Err(Error::Parse {
                    offset: self.pos,
                    message: "expected `)`".into(),
                });
            }
            return Ok(ExprAst::Unary(op, Box::new(arg)));
        }
        match self.vars.iter().position(|v| v == name) {
            Some(i) => Ok(ExprAst::Var(i)),
            None => Err(Error::UnknownVariable {
                name: name.to_string(),
                offset: start,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn vars(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn reports_offsets() {
        let v = vars(&["x1"]);
        match parse_expr("x1 + @", &v) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_expr("x1 + zz", &v) {
            Err(Error::UnknownVariable { name, offset }) => {
                assert_eq!(name, "zz");
                assert_eq!(offset, 5);
            }
            other => panic!("expected unknown variable, got {other:?}"),
        }
        assert!(parse_expr("", &v).is_err());
        assert!(parse_expr("x1 x1", &v).is_err());
    }

    #[test]
    fn precedence_and_power() {
        let v = vars(&["a", "b"]);
        let e = parse_expr("a + 2*b^2", &v).unwrap();
        // a + (2 * (b^2))
        match e {
            ExprAst::Binary(BinOp::Add, _, rhs) => match *rhs {
                ExprAst::Binary(BinOp::Mul, _, r2) => {
                    assert!(matches!(*r2, ExprAst::PowInt(_, 2)));
                }
                other => panic!("bad rhs {other:?}"),
            },
            other => panic!("bad tree {other:?}"),
        }
        assert!(parse_expr("a^b", &v).is_err());
        assert!(parse_expr("a^1.5", &v).is_err());
    }

    #[test]
    fn scientific_numbers() {
        let e = parse_expr("1.5e-3", &[]).unwrap();
        assert_eq!(e, ExprAst::Const(1.5e-3));
    }
}
