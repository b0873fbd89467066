use std::fmt;

use super::ast::{BinOp, RadialExpr, UnaryOp, Var};
use super::lexer::{tokenize, Pos, Spanned, Tok};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical(String),
    UnexpectedToken(String),
    UnknownIdentifier(String),
    /// A function was called with other than one argument.
    Arity { function: String, found: usize },
    /// A division whose denominator is the literal `0`.
    DivisionByZeroLiteral,
    /// Exponent is not an integer literal that fits `i32`.
    BadExponent(String),
}

/// Positioned parse diagnostic; `line` and `column` are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at line {}, column {}: ", self.line, self.column)?;
        match &self.kind {
            ParseErrorKind::Lexical(m) => write!(f, "{m}")?,
            ParseErrorKind::UnexpectedToken(t) => write!(f, "unexpected {t}")?,
            ParseErrorKind::UnknownIdentifier(n) => write!(f, "unknown identifier `{n}`")?,
            ParseErrorKind::Arity { function, found } => {
                write!(f, "`{function}` takes 1 argument, found {found}")?
            }
            ParseErrorKind::DivisionByZeroLiteral => write!(f, "division by literal zero")?,
            ParseErrorKind::BadExponent(t) => write!(f, "exponent {t} is not an integer literal")?,
        }
        if !self.expected.is_empty() {
            write!(f, ", expected {}", self.expected.join(" or "))?;
        }
        Ok(())
    }
}

/// Parses a radial-function expression.
pub fn parse(src: &str) -> Result<RadialExpr, ParseError> {
    let toks = tokenize(src).map_err(|e| ParseError {
        kind: ParseErrorKind::Lexical(e.message),
        line: e.pos.line,
        column: e.pos.column,
        expected: vec![],
    })?;
    let mut p = Parser { toks, at: 0 };
    let expr = p.expr()?;
    match p.peek() {
        Tok::Eof => Ok(expr),
        _ => Err(p.unexpected(&["operator", "end of input"])),
    }
}

struct Parser {
    toks: Vec<Spanned>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    fn bump(&mut self) -> Spanned {
        let s = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        s
    }

    fn error_at(&self, pos: Pos, kind: ParseErrorKind, expected: &[&str]) -> ParseError {
        ParseError {
            kind,
            line: pos.line,
            column: pos.column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        self.error_at(self.pos(), ParseErrorKind::UnexpectedToken(self.peek().describe()), expected)
    }

    fn expr(&mut self) -> Result<RadialExpr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = RadialExpr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<RadialExpr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs_pos = self.pos();
            let rhs = self.factor()?;
            if op == BinOp::Div && is_zero_literal(&rhs) {
                return Err(self.error_at(rhs_pos, ParseErrorKind::DivisionByZeroLiteral, &[]));
            }
            lhs = RadialExpr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<RadialExpr, ParseError> {
        let base = self.base()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Number(_, text) if text.bytes().all(|b| b.is_ascii_digit()) => match text.parse::<i32>() {
                Ok(k) => {
                    self.bump();
                    Ok(RadialExpr::Pow(Box::new(base), k))
                }
                Err(_) => Err(self.error_at(pos, ParseErrorKind::BadExponent(text), &["integer literal"])),
            },
            Tok::Number(_, text) => Err(self.error_at(pos, ParseErrorKind::BadExponent(text), &["integer literal"])),
            _ => Err(self.unexpected(&["integer literal"])),
        }
    }

    fn base(&mut self) -> Result<RadialExpr, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Number(v, _) => {
                self.bump();
                Ok(RadialExpr::Lit(v))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(RadialExpr::Group(Box::new(inner)))
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(var) = variable(&name) {
                    return Ok(RadialExpr::Var(var));
                }
                let Some(op) = UnaryOp::from_name(&name) else {
                    return Err(self.error_at(pos, ParseErrorKind::UnknownIdentifier(name), &[]));
                };
                if *self.peek() != Tok::LParen {
                    return Err(self.unexpected(&["'('"]));
                }
                self.bump();
                if *self.peek() == Tok::RParen {
                    return Err(self.error_at(
                        self.pos(),
                        ParseErrorKind::Arity {
                            function: name,
                            found: 0,
                        },
                        &[],
                    ));
                }
                let arg = self.expr()?;
                if *self.peek() == Tok::Comma {
                    let comma = self.pos();
                    let mut found = 1;
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        self.expr()?;
                        found += 1;
                    }
                    return Err(self.error_at(comma, ParseErrorKind::Arity { function: name, found }, &[]));
                }
                self.expect_rparen()?;
                Ok(RadialExpr::Unary(op, Box::new(arg)))
            }
            _ => Err(self.unexpected(&["factor"])),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&["')'"]))
        }
    }
}

fn variable(name: &str) -> Option<Var> {
    if name == "s" {
        return Some(Var::Time);
    }
    let digits = name.strip_prefix('w')?;
    match digits.as_bytes() {
        [d @ b'1'..=b'9'] => Some(Var::Omega(d - b'0')),
        _ => None,
    }
}

fn is_zero_literal(e: &RadialExpr) -> bool {
    match e {
        RadialExpr::Lit(v) => *v == 0.0,
        RadialExpr::Group(inner) => is_zero_literal(inner),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use RadialExpr::*;

    fn b(e: RadialExpr) -> Box<RadialExpr> {
        Box::new(e)
    }

    fn err(src: &str) -> ParseError {
        parse(src).expect_err(src)
    }

    #[test]
    fn golden_asts() {
        assert_eq!(
            parse("2 + cos(w1)").unwrap(),
            Binary(BinOp::Add, b(Lit(2.0)), b(Unary(UnaryOp::Cos, b(Var(super::Var::Omega(1))))))
        );
        assert_eq!(
            parse("2 + 0.25*sin(s)*w1").unwrap(),
            Binary(
                BinOp::Add,
                b(Lit(2.0)),
                b(Binary(
                    BinOp::Mul,
                    b(Binary(BinOp::Mul, b(Lit(0.25)), b(Unary(UnaryOp::Sin, b(Var(super::Var::Time)))))),
                    b(Var(super::Var::Omega(1)))
                ))
            )
        );
        assert_eq!(
            parse("w2^3").unwrap(),
            Pow(b(Var(super::Var::Omega(2))), 3)
        );
        assert_eq!(
            parse("1 - 2 - 3").unwrap(),
            Binary(BinOp::Sub, b(Binary(BinOp::Sub, b(Lit(1.0)), b(Lit(2.0)))), b(Lit(3.0)))
        );
        assert_eq!(
            parse("1 - (2 - 3)").unwrap(),
            Binary(BinOp::Sub, b(Lit(1.0)), b(Group(b(Binary(BinOp::Sub, b(Lit(2.0)), b(Lit(3.0)))))))
        );
    }

    #[test]
    fn error_positions() {
        let e = err("2 +");
        assert_eq!((e.line, e.column), (1, 4));
        assert_eq!(e.expected, vec!["factor"]);
        assert!(matches!(e.kind, ParseErrorKind::UnexpectedToken(_)));

        let e = err("foo(s)");
        assert_eq!((e.line, e.column), (1, 1));
        assert_eq!(e.kind, ParseErrorKind::UnknownIdentifier("foo".into()));

        let e = err("sin(s, w1)");
        assert_eq!((e.line, e.column), (1, 6));
        assert_eq!(
            e.kind,
            ParseErrorKind::Arity {
                function: "sin".into(),
                found: 2
            }
        );

        let e = err("1 / 0");
        assert_eq!((e.line, e.column), (1, 5));
        assert_eq!(e.kind, ParseErrorKind::DivisionByZeroLiteral);

        let e = err("w2 ^ 1.5");
        assert_eq!((e.line, e.column), (1, 6));
        assert_eq!(e.kind, ParseErrorKind::BadExponent("1.5".into()));
    }

    #[test]
    fn display_mentions_position_and_expectation() {
        let msg = err("2 +").to_string();
        assert_eq!(msg, "parse error at line 1, column 4: unexpected end of input, expected factor");
    }
}
