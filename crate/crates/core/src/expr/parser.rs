use thiserror::Error;

use super::{BinOp, Expr, Func, Var};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("syntax error at offset {offset}: {expected}")]
pub struct ParseError {
    /// Byte offset into the source text.
    pub offset: usize,
    pub expected: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    /// Returns the next token and its starting offset.
    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let Some(&b) = bytes.get(start) else {
            return Ok((Tok::End, start));
        };
        let tok = match b {
            b'0'..=b'9' | b'.' => {
                let mut end = start;
                while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                    end += 1;
                }
                // exponent only when followed by digits, so `2e` stays a syntax error on `e`
                if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                    let mut k = end + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        while k < bytes.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        end = k;
                    }
                }
                let text = &self.src[start..end];
                let value: f64 = text.parse().map_err(|_| ParseError {
                    offset: start,
                    expected: format!("valid number, found `{text}`"),
                })?;
                self.pos = end;
                Tok::Num(value)
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut end = start;
                while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                    end += 1;
                }
                self.pos = end;
                Tok::Ident(self.src[start..end].to_string())
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                self.pos += 1;
                Tok::Op(b as char)
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    offset: start,
                    expected: format!("expected expression, found `{ch}`"),
                });
            }
        };
        Ok((tok, start))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    at: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, ParseError> {
        let mut lexer = Lexer { src, pos: 0 };
        let (tok, at) = lexer.next()?;
        Ok(Parser { lexer, tok, at })
    }

    fn bump(&mut self) -> Result<(), ParseError> {
        let (tok, at) = self.lexer.next()?;
        self.tok = tok;
        self.at = at;
        Ok(())
    }

    fn fail<T>(&self, expected: &str) -> Result<T, ParseError> {
        Err(ParseError { offset: self.at, expected: expected.to_string() })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.unary()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.tok == Tok::Op('-') {
            self.bump()?;
            return Ok(Expr::neg(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.tok == Tok::Op('^') {
            self.bump()?;
            let exponent = self.unary()?;
            return Ok(Expr::bin(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.tok.clone() {
            Tok::Num(x) => {
                self.bump()?;
                Ok(Expr::Num(x))
            }
            Tok::Ident(name) => {
                self.bump()?;
                if let Some(func) = Func::from_name(&name) {
                    if self.tok != Tok::LParen {
                        return self.fail(&format!("expected `(` after `{name}`"));
                    }
                    self.bump()?;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::call(func, arg));
                }
                Ok(match Var::from_name(&name) {
                    Some(v) => Expr::Var(v),
                    None => Expr::Param(name),
                })
            }
            Tok::LParen => {
                self.bump()?;
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            _ => self.fail("expected expression"),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if self.tok != Tok::RParen {
            return self.fail("expected `)`");
        }
        self.bump()
    }
}

/// Parses `text` into an expression tree.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError { offset: 0, expected: "expected expression".into() });
    }
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return p.fail("expected operator or end of input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{eval, Bindings};

    fn value(s: &str, b: &[(&str, f64)]) -> f64 {
        let e = parse(s).unwrap();
        eval(&e, &Bindings::from_pairs(b)).unwrap()
    }

    #[test]
    fn nicholson_birth_term() {
        let v = value("p*v*exp(-v)", &[("p", 6.0), ("v", 1.0)]);
        assert!((v - 6.0 * (-1f64).exp()).abs() < 1e-15);
        assert!((v - 2.2073).abs() < 1e-4);
    }

    #[test]
    fn truncated_input_reports_offset() {
        let err = parse("u*(1-").unwrap_err();
        assert_eq!(err.offset, 5);
        assert_eq!(err.expected, "expected expression");
    }

    #[test]
    fn power_is_right_associative() {
        assert_eq!(value("2^3^2", &[]), 512.0);
        assert_eq!(value("-2^2", &[]), -4.0);
        assert_eq!(value("2^-1", &[]), 0.5);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(value("1 - 2 - 3", &[]), -4.0);
        assert_eq!(value("8 / 4 / 2", &[]), 1.0);
        assert_eq!(value("1 + 2 * 3", &[]), 7.0);
        assert_eq!(value("-u*v", &[("u", 2.0), ("v", 3.0)]), -6.0);
        assert_eq!(value("1.5e2 + 2E-1", &[]), 150.2);
    }

    #[test]
    fn malformed_inputs() {
        assert_eq!(parse("").unwrap_err().offset, 0);
        assert_eq!(parse("u v").unwrap_err().offset, 2);
        assert_eq!(parse("exp u").unwrap_err().offset, 4);
        assert_eq!(parse("(u").unwrap_err().expected, "expected `)`");
        assert_eq!(parse("u # v").unwrap_err().offset, 2);
        assert_eq!(parse("2e").unwrap_err().offset, 1);
    }
}
