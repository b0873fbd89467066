use std::fmt;

use super::ast::{BinOp, RadialExpr, UnaryOp, Var};

#[derive(Debug, Clone, PartialEq)]
pub enum EvalErrorKind {
    SqrtOfNegative(f64),
    DivisionByZero,
    /// `wk` with `k` larger than the dimension of `ω`.
    UnboundVariable(String),
}

/// Evaluation failure together with the offending subexpression.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub subexpr: String,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            EvalErrorKind::SqrtOfNegative(v) => write!(f, "sqrt of negative value {v} in `{}`", self.subexpr),
            EvalErrorKind::DivisionByZero => write!(f, "division by zero in `{}`", self.subexpr),
            EvalErrorKind::UnboundVariable(name) => write!(f, "unbound variable `{name}` in `{}`", self.subexpr),
        }
    }
}

/// Evaluates `expr` at time `s` and direction `omega`.
pub fn evaluate(expr: &RadialExpr, s: f64, omega: &[f64]) -> Result<f64, EvalError> {
    Ok(match expr {
        RadialExpr::Lit(v) => *v,
        RadialExpr::Var(Var::Time) => s,
        RadialExpr::Var(Var::Omega(k)) => match omega.get(*k as usize - 1) {
            Some(v) => *v,
            None => {
                return Err(EvalError {
                    kind: EvalErrorKind::UnboundVariable(format!("w{k}")),
                    subexpr: expr.to_string(),
                })
            }
        },
        RadialExpr::Group(e) => evaluate(e, s, omega)?,
        RadialExpr::Pow(e, k) => evaluate(e, s, omega)?.powi(*k),
        RadialExpr::Unary(op, e) => {
            let v = evaluate(e, s, omega)?;
            match op {
                UnaryOp::Neg => -v,
                UnaryOp::Sin => v.sin(),
                UnaryOp::Cos => v.cos(),
                UnaryOp::Abs => v.abs(),
                UnaryOp::Sqrt if v < 0.0 => {
                    return Err(EvalError {
                        kind: EvalErrorKind::SqrtOfNegative(v),
                        subexpr: expr.to_string(),
                    })
                }
                UnaryOp::Sqrt => v.sqrt(),
            }
        }
        RadialExpr::Binary(op, a, b) => {
            let x = evaluate(a, s, omega)?;
            let y = evaluate(b, s, omega)?;
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div if y == 0.0 => {
                    return Err(EvalError {
                        kind: EvalErrorKind::DivisionByZero,
                        subexpr: expr.to_string(),
                    })
                }
                BinOp::Div => x / y,
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    fn ev(src: &str, s: f64, w: &[f64]) -> Result<f64, EvalError> {
        evaluate(&parse(src).unwrap(), s, w)
    }

    #[test]
    fn examples() {
        assert_eq!(ev("1", 3.0, &[0.0, 1.0]).unwrap(), 1.0);
        let v = ev("2 + cos(w1)", 0.0, &[1.0, 0.0]).unwrap();
        assert!((v - 2.5403023058681398).abs() <= 1e-15);
        assert_eq!(v, 2.0 + 1f64.cos());
        for w in [[1.0, 0.0], [0.6, 0.8], [-0.6, -0.8]] {
            assert_eq!(ev("2 + 0.25*sin(s)*w1", 0.0, &w).unwrap(), 2.0);
        }
        assert_eq!(ev("(1 + s)^2", 2.0, &[]).unwrap(), 9.0);
        assert_eq!(ev("neg(w2) * abs(neg(3))", 0.0, &[0.0, 0.5]).unwrap(), -1.5);
        assert_eq!(ev("8 / 2 / 2", 0.0, &[]).unwrap(), 2.0);
    }

    #[test]
    fn domain_errors_carry_subexpression() {
        let e = ev("1 + sqrt(s - 2)", 1.0, &[]).unwrap_err();
        assert_eq!(e.kind, EvalErrorKind::SqrtOfNegative(-1.0));
        assert_eq!(e.subexpr, "sqrt(s - 2)");

        let e = ev("1 / (w1 - w1)", 0.0, &[0.3]).unwrap_err();
        assert_eq!(e.kind, EvalErrorKind::DivisionByZero);
        assert_eq!(e.subexpr, "1 / (w1 - w1)");

        let e = ev("w3", 0.0, &[1.0, 0.0]).unwrap_err();
        assert_eq!(e.kind, EvalErrorKind::UnboundVariable("w3".into()));
    }

    #[test]
    fn evaluation_is_bitwise_deterministic() {
        let expr = parse("2 + 0.25*sin(s)*w1 - cos(w2)^3 / (1 + s^2)").unwrap();
        let a = evaluate(&expr, 0.37, &[0.6, 0.8]).unwrap();
        let b = evaluate(&expr, 0.37, &[0.6, 0.8]).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
