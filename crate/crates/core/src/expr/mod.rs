//! Expressions in the single free variable `S`.
//!
//! Text is parsed by a small recursive-descent parser into an [`Expr`] tree
//! and evaluated with forward-mode [`Dual`] numbers, which yields the value
//! and the exact first derivative in one pass.
//!
//! Precedence, loosest to tightest: `+ -`, `* /`, unary `-`, `^`.
//! `^` is right-associative and its exponent may itself carry a unary minus,
//! so `-S^2` is `-(S^2)` and `2^-S` is `2^(-S)`.

mod dual;
mod parse;

use std::fmt;

pub use dual::Dual;
pub use parse::{parse, parse_with};

use crate::error::{EvalError, EvalErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Ln,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        match name {
            "exp" => Some(Func::Exp),
            "ln" => Some(Func::Ln),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Whether `S` appears anywhere in the tree.
    pub fn depends_on_s(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var => true,
            Expr::Neg(e) | Expr::Call(_, e) => e.depends_on_s(),
            Expr::Binary(_, l, r) => l.depends_on_s() || r.depends_on_s(),
        }
    }

    /// Value and derivative with respect to `S`.
    pub fn eval_dual(&self, s: f64) -> Result<Dual, EvalError> {
        let out = self.eval_at(Dual::variable(s), s)?;
        if out.is_finite() {
            Ok(out)
        } else {
            Err(EvalError {
                s,
                kind: EvalErrorKind::NonFinite,
            })
        }
    }

    pub fn eval(&self, s: f64) -> Result<f64, EvalError> {
        self.eval_dual(s).map(|d| d.re)
    }

    fn eval_at(&self, x: Dual, s: f64) -> Result<Dual, EvalError> {
        let fail = |kind| Err(EvalError { s, kind });
        match self {
            Expr::Const(c) => Ok(Dual::constant(*c)),
            Expr::Var => Ok(x),
            Expr::Neg(e) => Ok(-e.eval_at(x, s)?),
            Expr::Call(f, arg) => {
                let a = arg.eval_at(x, s)?;
                match f {
                    Func::Exp => Ok(a.exp()),
                    Func::Ln if a.re <= 0.0 => fail(EvalErrorKind::LogDomain),
                    Func::Ln => Ok(a.ln()),
                    Func::Sqrt if a.re < 0.0 => fail(EvalErrorKind::SqrtDomain),
                    Func::Sqrt => Ok(a.sqrt()),
                }
            }
            Expr::Binary(op, l, r) => {
                let a = l.eval_at(x, s)?;
                match op {
                    BinOp::Add => Ok(a + r.eval_at(x, s)?),
                    BinOp::Sub => Ok(a - r.eval_at(x, s)?),
                    BinOp::Mul => Ok(a * r.eval_at(x, s)?),
                    BinOp::Div => {
                        let b = r.eval_at(x, s)?;
                        if b.re == 0.0 {
                            return fail(EvalErrorKind::DivisionByZero);
                        }
                        Ok(a / b)
                    }
                    BinOp::Pow => {
                        let b = r.eval_at(x, s)?;
                        if !r.depends_on_s() {
                            let p = b.re;
                            if p.fract() == 0.0 && p.abs() <= f64::from(i32::MAX) {
                                if p < 0.0 && a.re == 0.0 {
                                    return fail(EvalErrorKind::DivisionByZero);
                                }
                                return Ok(a.powi(p as i32));
                            }
                            if a.re <= 0.0 {
                                return fail(EvalErrorKind::PowDomain);
                            }
                            return Ok(a.powf(p));
                        }
                        if a.re <= 0.0 {
                            return fail(EvalErrorKind::PowDomain);
                        }
                        Ok(a.pow(b))
                    }
                }
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            // negative constants print parenthesized
            Expr::Const(_) | Expr::Var | Expr::Call(..) => 5,
            Expr::Neg(_) => 3,
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Binary(BinOp::Pow, ..) => 4,
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if e.precedence() < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Prints with the minimum parentheses needed for `parse` to rebuild the
/// identical tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if c.is_sign_negative() => write!(f, "(-{:?})", -c),
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var => f.write_str("S"),
            Expr::Neg(e) => {
                f.write_str("-")?;
                write_child(f, e, 3)
            }
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
            Expr::Binary(op, l, r) => {
                let (sym, p) = match op {
                    BinOp::Add => (" + ", 1),
                    BinOp::Sub => (" - ", 1),
                    BinOp::Mul => ("*", 2),
                    BinOp::Div => ("/", 2),
                    BinOp::Pow => ("^", 4),
                };
                if *op == BinOp::Pow {
                    write_child(f, l, 5)?;
                    f.write_str(sym)?;
                    write_child(f, r, 3)
                } else {
                    write_child(f, l, p)?;
                    f.write_str(sym)?;
                    write_child(f, r, p + 1)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(text: &str, s: f64) -> Dual {
        parse(text).unwrap().eval_dual(s).unwrap()
    }

    #[test]
    fn documented_values() {
        assert_eq!(ev("S^2", 3.0), Dual::new(9.0, 6.0));
        assert_eq!(ev("exp(S)", 0.0), Dual::new(1.0, 1.0));
        let m = ev("S/(0.1+S)", 0.1);
        assert!((m.re - 0.5).abs() < 1e-15 && (m.eps - 2.5).abs() < 1e-12);
        assert_eq!(ev("S", 0.3).re, 0.3);
        assert_eq!(ev("1+46*S^2", 0.5).re, 12.5);
    }

    #[test]
    fn bound_constants() {
        let consts = [("a".to_string(), 2.0), ("b".to_string(), 0.58)]
            .into_iter()
            .collect();
        let e = parse_with("a*S/(b+S)", &consts).unwrap();
        assert!((e.eval(0.58).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("-S^2", 3.0).re, -9.0);
        assert_eq!(ev("2^3^2", 0.0).re, 512.0);
        assert_eq!(ev("8/4/2", 0.0).re, 1.0);
        assert_eq!(ev("8-4-2", 0.0).re, 2.0);
        assert_eq!(ev("2^-1", 0.0).re, 0.5);
        assert_eq!(ev("1 + 2*3", 0.0).re, 7.0);
    }

    #[test]
    fn evaluation_errors_carry_s() {
        let e = parse("1/(S-0.5)").unwrap().eval(0.5).unwrap_err();
        assert_eq!(e.kind, EvalErrorKind::DivisionByZero);
        assert_eq!(e.s, 0.5);
        let e = parse("ln(S)").unwrap().eval(0.0).unwrap_err();
        assert_eq!(e.kind, EvalErrorKind::LogDomain);
        let e = parse("S^0.5").unwrap().eval(-1.0).unwrap_err();
        assert_eq!(e.kind, EvalErrorKind::PowDomain);
        let e = parse("sqrt(S)").unwrap().eval(-1.0).unwrap_err();
        assert_eq!(e.kind, EvalErrorKind::SqrtDomain);
        // integer exponent is fine on a negative base
        assert_eq!(ev("S^3", -2.0).re, -8.0);
    }

    #[test]
    fn printing_round_trips() {
        for text in [
            "a*S/(b+S) - 0.6",
            "-S^2",
            "(-S)^2",
            "2^3^2",
            "(2^3)^2",
            "S - (S - 1)",
            "S/(S/2)",
            "exp(-S)*ln(1+S)",
            "--S",
            "-2.5e-7*S",
            "2^-S",
        ] {
            let consts = [("a".to_string(), 1.5), ("b".to_string(), -0.25)]
                .into_iter()
                .collect();
            let ast = parse_with(text, &consts).unwrap();
            let printed = ast.to_string();
            assert_eq!(parse(&printed).unwrap(), ast, "{text} -> {printed}");
        }
    }
}
