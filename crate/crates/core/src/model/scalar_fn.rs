use std::collections::BTreeMap;

use crate::error::{EvalError, EvalErrorKind, ParseError};
use crate::expr::{self, BinOp, Dual, Expr};

/// A differentiable real function of the substrate concentration.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarFn {
    Expr(Expr),
    /// `a·S/(b+S)`
    Monod { a: f64, b: f64 },
    /// `c0 + c1·S + c2·S² + …`
    Polynomial(Vec<f64>),
    Quotient(Box<ScalarFn>, Box<ScalarFn>),
    Difference(Box<ScalarFn>, Box<ScalarFn>),
}

impl ScalarFn {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        expr::parse(text).map(ScalarFn::Expr)
    }

    pub fn parse_with(text: &str, consts: &BTreeMap<String, f64>) -> Result<Self, ParseError> {
        expr::parse_with(text, consts).map(ScalarFn::Expr)
    }

    pub fn constant(c: f64) -> Self {
        ScalarFn::Polynomial(vec![c])
    }

    pub fn monod(a: f64, b: f64) -> Self {
        ScalarFn::Monod { a, b }
    }

    pub fn quotient(num: ScalarFn, den: ScalarFn) -> Self {
        ScalarFn::Quotient(Box::new(num), Box::new(den))
    }

    pub fn difference(lhs: ScalarFn, rhs: ScalarFn) -> Self {
        ScalarFn::Difference(Box::new(lhs), Box::new(rhs))
    }

    /// Value and derivative at `s`.
    pub fn eval_dual(&self, s: f64) -> Result<Dual, EvalError> {
        let out = self.dual_at(s)?;
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

    pub fn derivative(&self, s: f64) -> Result<f64, EvalError> {
        self.eval_dual(s).map(|d| d.eps)
    }

    fn dual_at(&self, s: f64) -> Result<Dual, EvalError> {
        match self {
            ScalarFn::Expr(e) => e.eval_dual(s),
            ScalarFn::Monod { a, b } => {
                let x = Dual::variable(s);
                let den = x + *b;
                if den.re == 0.0 {
                    return Err(EvalError {
                        s,
                        kind: EvalErrorKind::DivisionByZero,
                    });
                }
                Ok(x * *a / den)
            }
            ScalarFn::Polynomial(coeffs) => {
                // Horner on duals
                let x = Dual::variable(s);
                Ok(coeffs
                    .iter()
                    .rev()
                    .fold(Dual::constant(0.0), |acc, &c| acc * x + c))
            }
            ScalarFn::Quotient(n, d) => {
                let den = d.dual_at(s)?;
                if den.re == 0.0 {
                    return Err(EvalError {
                        s,
                        kind: EvalErrorKind::DivisionByZero,
                    });
                }
                Ok(n.dual_at(s)? / den)
            }
            ScalarFn::Difference(l, r) => Ok(l.dual_at(s)? - r.dual_at(s)?),
        }
    }

    /// `S ↦ output · self(input · S)`, simplified structurally where possible.
    pub fn rescale(&self, input: f64, output: f64) -> ScalarFn {
        if input == 1.0 && output == 1.0 {
            return self.clone();
        }
        match self {
            ScalarFn::Monod { a, b } => ScalarFn::Monod {
                a: a * output,
                b: b / input,
            },
            ScalarFn::Polynomial(coeffs) => {
                let mut scale = output;
                ScalarFn::Polynomial(
                    coeffs
                        .iter()
                        .map(|c| {
                            let v = c * scale;
                            scale *= input;
                            v
                        })
                        .collect(),
                )
            }
            ScalarFn::Quotient(n, d) => {
                ScalarFn::quotient(n.rescale(input, output), d.rescale(input, 1.0))
            }
            ScalarFn::Difference(l, r) => {
                ScalarFn::difference(l.rescale(input, output), r.rescale(input, output))
            }
            ScalarFn::Expr(e) => {
                let inner = substitute(e, input);
                ScalarFn::Expr(if output == 1.0 {
                    inner
                } else {
                    Expr::binary(BinOp::Mul, Expr::Const(output), inner)
                })
            }
        }
    }

    /// `(c0, c1)` when the function is affine `c0 + c1·S` on `[0, 1]`.
    ///
    /// Polynomials are inspected structurally; anything else is sampled at
    /// 17 points and compared against its tangent line at 0.
    pub fn affine_coefficients(&self) -> Option<(f64, f64)> {
        if let ScalarFn::Polynomial(c) = self {
            if c.iter().skip(2).all(|&v| v == 0.0) {
                return Some((
                    c.first().copied().unwrap_or(0.0),
                    c.get(1).copied().unwrap_or(0.0),
                ));
            }
            return None;
        }
        let at0 = self.eval_dual(0.0).ok()?;
        let (c0, c1) = (at0.re, at0.eps);
        let scale = 1.0 + c0.abs() + c1.abs();
        (0..=16).all(|k| {
            let s = k as f64 / 16.0;
            self.eval(s)
                .is_ok_and(|v| (v - (c0 + c1 * s)).abs() <= 1e-12 * scale)
        })
        .then_some((c0, c1))
    }
}

fn substitute(e: &Expr, input: f64) -> Expr {
    match e {
        Expr::Var => Expr::binary(BinOp::Mul, Expr::Const(input), Expr::Var),
        Expr::Const(c) => Expr::Const(*c),
        Expr::Neg(x) => Expr::Neg(Box::new(substitute(x, input))),
        Expr::Call(f, x) => Expr::Call(*f, Box::new(substitute(x, input))),
        Expr::Binary(op, l, r) => Expr::binary(*op, substitute(l, input), substitute(r, input)),
    }
}
