use std::collections::BTreeMap;

use super::{BinOp, Expr, Func};
use crate::error::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("{v}"),
            Tok::Ident(s) => s.clone(),
            Tok::Op(c) => c.to_string(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
        }
    }
}

fn err<T>(position: usize, kind: ParseErrorKind) -> Result<T, ParseError> {
    Err(ParseError { position, kind })
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let lit = &text[start..i];
            match lit.parse::<f64>() {
                Ok(v) if v.is_finite() => out.push((start, Tok::Num(v))),
                _ => return err(start, ParseErrorKind::BadNumber(lit.to_string())),
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(text[start..i].to_string())));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => {
                    let ch = text[start..].chars().next().unwrap_or(c);
                    return err(start, ParseErrorKind::UnexpectedChar(ch));
                }
            };
            out.push((start, tok));
            i += 1;
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    consts: &'a BTreeMap<String, f64>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.multiplicative()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.bump();
            let rhs = self.multiplicative()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some(Tok::Op('-')) = self.peek() {
            self.bump();
            return Ok(match self.unary()? {
                Expr::Const(c) => Expr::Const(-c),
                e => Expr::Neg(Box::new(e)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.bump() {
            None => err(at, ParseErrorKind::UnexpectedEnd),
            Some(Tok::Num(v)) => Ok(Expr::Const(v)),
            Some(Tok::LParen) => {
                let inner = self.additive()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => err(at, ParseErrorKind::Unbalanced),
                }
            }
            Some(Tok::Ident(name)) => {
                if name == "S" {
                    return Ok(Expr::Var);
                }
                if let Some(func) = Func::from_name(&name) {
                    if let Some(Tok::LParen) = self.peek() {
                        let arg = self.primary()?;
                        return Ok(Expr::Call(func, Box::new(arg)));
                    }
                }
                match self.consts.get(&name) {
                    Some(v) if v.is_finite() => Ok(Expr::Const(*v)),
                    Some(_) => err(at, ParseErrorKind::NonFiniteConstant(name)),
                    None => err(at, ParseErrorKind::UnknownIdentifier(name)),
                }
            }
            Some(Tok::RParen) => err(at, ParseErrorKind::Unbalanced),
            Some(t) => err(at, ParseErrorKind::UnexpectedToken(t.describe())),
        }
    }
}

/// Parse an expression whose only free variable is `S`.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    parse_with(text, &BTreeMap::new())
}

/// Parse with named constants substituted by value.
pub fn parse_with(text: &str, consts: &BTreeMap<String, f64>) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return err(0, ParseErrorKind::Empty);
    }
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
        consts,
    };
    let expr = p.additive()?;
    match p.toks.get(p.pos) {
        None => Ok(expr),
        Some((at, Tok::RParen)) => err(*at, ParseErrorKind::Unbalanced),
        Some((at, t)) => err(*at, ParseErrorKind::UnexpectedToken(t.describe())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kind(text: &str) -> ParseErrorKind {
        parse(text).unwrap_err().kind
    }

    #[test]
    fn syntax_errors_report_position() {
        let e = parse("1 + * S").unwrap_err();
        assert_eq!(e.position, 4);
        assert_eq!(kind(""), ParseErrorKind::Empty);
        assert_eq!(kind("   "), ParseErrorKind::Empty);
        assert_eq!(kind("S +"), ParseErrorKind::UnexpectedEnd);
        assert_eq!(kind("(S"), ParseErrorKind::Unbalanced);
        assert_eq!(kind("S)"), ParseErrorKind::Unbalanced);
        assert_eq!(kind("S # 2"), ParseErrorKind::UnexpectedChar('#'));
        assert_eq!(kind("1.2.3"), ParseErrorKind::BadNumber("1.2.3".into()));
        assert_eq!(kind("S S"), ParseErrorKind::UnexpectedToken("S".into()));
    }

    #[test]
    fn unknown_identifiers_are_rejected() {
        let e = parse("2*x + S").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownIdentifier("x".into()));
        assert_eq!(e.position, 2);
        // a function name without a call is just an unknown identifier
        assert_eq!(kind("exp + 1"), ParseErrorKind::UnknownIdentifier("exp".into()));
    }

    #[test]
    fn scientific_literals() {
        assert_eq!(parse("1e-3").unwrap(), Expr::Const(1e-3));
        assert_eq!(parse("2.5E+2").unwrap(), Expr::Const(250.0));
    }

    proptest! {
        #[test]
        fn unbalanced_parentheses_never_parse(
            opens in 0usize..6,
            closes in 0usize..6,
            body in "[S0-9+*/ -]{0,8}",
        ) {
            prop_assume!(opens != closes);
            let text = format!("{}S{}{}", "(".repeat(opens), body, ")".repeat(closes));
            prop_assert!(parse(&text).is_err());
        }
    }
}
