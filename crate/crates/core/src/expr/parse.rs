//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := "-" factor | power
//! power  := atom ("^" "-"? integer)?
//! atom   := number | "u" | "v" | func "(" expr ")" | "(" expr ")"
//! ```
//!
//! Error offsets are 1-based byte positions, so an error at end of input
//! points one past the last byte.

use thiserror::Error;

use super::{BinOp, Expr, Func, Var};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedToken(String),
    UnexpectedEnd,
    UnknownIdentifier(String),
    NonIntegerExponent,
    InvalidNumber(String),
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("syntax error at offset {offset}: {}", describe(.kind))]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// 1-based byte position of the offending token.
    pub offset: usize,
}

fn describe(kind: &ParseErrorKind) -> String {
    match kind {
        ParseErrorKind::UnexpectedChar(c) => format!("unexpected character {c:?}"),
        ParseErrorKind::UnexpectedToken(t) => format!("unexpected token `{t}`"),
        ParseErrorKind::UnexpectedEnd => "unexpected end of input".into(),
        ParseErrorKind::UnknownIdentifier(id) => format!("unknown identifier `{id}`"),
        ParseErrorKind::NonIntegerExponent => "exponent must be an integer literal".into(),
        ParseErrorKind::InvalidNumber(n) => format!("invalid number `{n}`"),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num { text: String, integral: bool },
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn text(&self) -> String {
        match self {
            Tok::Num { text, .. } | Tok::Ident(text) => text.clone(),
            Tok::Plus => "+".into(),
            Tok::Minus => "-".into(),
            Tok::Star => "*".into(),
            Tok::Slash => "/".into(),
            Tok::Caret => "^".into(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::End => "<end>".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let start = i;
        let tok = match b {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                let mut integral = true;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    integral = false;
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        integral = false;
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                if text.parse::<f64>().is_err() {
                    return Err(ParseError {
                        kind: ParseErrorKind::InvalidNumber(text.into()),
                        offset: start + 1,
                    });
                }
                out.push((
                    Tok::Num {
                        text: text.into(),
                        integral,
                    },
                    start,
                ));
                continue;
            }
            b if b.is_ascii_alphabetic() || b == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].into()), start));
                continue;
            }
            _ => {
                let c = src[i..].chars().next().unwrap_or('\u{fffd}');
                return Err(ParseError {
                    kind: ParseErrorKind::UnexpectedChar(c),
                    offset: start + 1,
                });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1 + 1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self) -> ParseError {
        let kind = match self.peek() {
            Tok::End => ParseErrorKind::UnexpectedEnd,
            t => ParseErrorKind::UnexpectedToken(t.text()),
        };
        ParseError {
            kind,
            offset: self.offset(),
        }
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let at = self.offset();
        let non_integer = ParseError {
            kind: ParseErrorKind::NonIntegerExponent,
            offset: at,
        };
        match self.bump() {
            Tok::Num { text, integral: true } => {
                let n: i32 = text.parse().map_err(|_| non_integer)?;
                Ok(Expr::Pow(Box::new(base), if negative { -n } else { n }))
            }
            Tok::Num { .. } | Tok::LParen | Tok::Ident(_) | Tok::Minus => Err(non_integer),
            Tok::End => Err(ParseError {
                kind: ParseErrorKind::UnexpectedEnd,
                offset: at,
            }),
            t => Err(ParseError {
                kind: ParseErrorKind::UnexpectedToken(t.text()),
                offset: at,
            }),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.peek().clone() {
            Tok::Num { text, .. } => {
                self.bump();
                let value = text.parse::<f64>().map_err(|_| ParseError {
                    kind: ParseErrorKind::InvalidNumber(text.clone()),
                    offset: at,
                })?;
                Ok(Expr::Const(value))
            }
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "u" => Ok(Expr::Var(Var::U)),
                    "v" => Ok(Expr::Var(Var::V)),
                    _ => {
                        let func = Func::from_name(&name).ok_or(ParseError {
                            kind: ParseErrorKind::UnknownIdentifier(name.clone()),
                            offset: at,
                        })?;
                        self.expect(Tok::LParen)?;
                        let arg = self.expr()?;
                        self.expect(Tok::RParen)?;
                        Ok(Expr::Call(func, Box::new(arg)))
                    }
                }
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            _ => Err(self.unexpected()),
        }
    }
}

/// Parses a scalar expression in `u` and `v`.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        toks: lex(source)?,
        pos: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected());
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Box<Expr> {
        Box::new(Expr::Const(x))
    }

    fn var(v: Var) -> Box<Expr> {
        Box::new(Expr::Var(v))
    }

    #[test]
    fn square() {
        assert_eq!(parse("v^2").unwrap(), Expr::Pow(var(Var::V), 2));
    }

    #[test]
    fn scaled_sine() {
        let want = Expr::Binary(
            BinOp::Mul,
            c(32.0),
            Box::new(Expr::Call(
                Func::Sin,
                Box::new(Expr::Binary(BinOp::Mul, c(8.0), var(Var::V))),
            )),
        );
        assert_eq!(parse("32*sin(8*v)").unwrap(), want);
        assert_eq!(parse("  32 * sin( 8*v )\t").unwrap(), want);
    }

    #[test]
    fn unclosed_paren_offset() {
        let err = parse("cosh(3*v").unwrap_err();
        assert_eq!(err.offset, 9);
        assert_eq!(err.kind, ParseErrorKind::UnexpectedEnd);
    }

    #[test]
    fn unknown_identifier() {
        let err = parse("2*tan(v)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("tan".into()));
        assert_eq!(err.offset, 3);
        assert!(matches!(parse("x+1").unwrap_err().kind, ParseErrorKind::UnknownIdentifier(_)));
    }

    #[test]
    fn non_integer_exponent() {
        for src in ["v^2.5", "v^1e3", "u^(2)", "u^v"] {
            assert_eq!(parse(src).unwrap_err().kind, ParseErrorKind::NonIntegerExponent, "{src}");
        }
        assert_eq!(parse("v^-2").unwrap(), Expr::Pow(var(Var::V), -2));
    }

    #[test]
    fn precedence() {
        // power binds tighter than unary minus
        assert_eq!(parse("-v^2").unwrap(), Expr::Neg(Box::new(Expr::Pow(var(Var::V), 2))));
        // subtraction is left associative
        assert_eq!(
            parse("u-v-1").unwrap(),
            Expr::Binary(
                BinOp::Sub,
                Box::new(Expr::Binary(BinOp::Sub, var(Var::U), var(Var::V))),
                c(1.0)
            )
        );
        assert_eq!(
            parse("1+u*v").unwrap(),
            Expr::Binary(BinOp::Add, c(1.0), Box::new(Expr::Binary(BinOp::Mul, var(Var::U), var(Var::V))))
        );
    }

    #[test]
    fn numbers() {
        assert_eq!(parse("1.5e-3").unwrap(), Expr::Const(1.5e-3));
        assert_eq!(parse(".25").unwrap(), Expr::Const(0.25));
        assert!(parse("1.2.3").is_err());
        assert!(parse("2u").is_err());
        assert!(parse("").is_err());
        assert!(matches!(parse("u $ v").unwrap_err().kind, ParseErrorKind::UnexpectedChar('$')));
    }
}
