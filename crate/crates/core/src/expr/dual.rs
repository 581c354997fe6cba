//! Forward-mode dual numbers: exact first derivatives for the supported
//! operator set, away from `abs`/`sqrt` kinks.

use crate::error::{Error, Result};

use super::ast::{BinOp, ExprAst, UnaryOp};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub val: f64,
    pub der: f64,
}

impl Dual {
    pub fn constant(v: f64) -> Self {
        Dual { val: v, der: 0.0 }
    }

    pub fn seed(v: f64) -> Self {
        Dual { val: v, der: 1.0 }
    }
}

/// Evaluates `ast` with dual arithmetic; `point` gives variable values,
/// `seed_axis` the differentiation direction.
pub fn eval_dual(ast: &ExprAst, point: &[f64], seed_axis: usize) -> Result<Dual> {
    Ok(match ast {
        ExprAst::Const(c) => Dual::constant(*c),
        ExprAst::Var(i) => {
            if *i == seed_axis {
                Dual::seed(point[*i])
            } else {
                Dual::constant(point[*i])
            }
        }
        ExprAst::Unary(op, a) => {
            let x = eval_dual(a, point, seed_axis)?;
            match op {
                UnaryOp::Neg => Dual {
                    val: -x.val,
                    der: -x.der,
                },
                UnaryOp::Sin => Dual {
                    val: x.val.sin(),
                    der: x.val.cos() * x.der,
                },
                UnaryOp::Cos => Dual {
                    val: x.val.cos(),
                    der: -x.val.sin() * x.der,
                },
                UnaryOp::Exp => Dual {
                    val: x.val.exp(),
                    der: x.val.exp() * x.der,
                },
                UnaryOp::Sqrt => {
                    if x.val <= 0.0 && x.der != 0.0 {
                        return Err(Error::NonsmoothPoint {
                            what: format!("sqrt at {}", x.val),
                        });
                    }
                    let s = x.val.sqrt();
                    Dual {
                        val: s,
                        der: if x.der == 0.0 { 0.0 } else { 0.5 / s * x.der },
                    }
                }
                UnaryOp::Abs => {
                    if x.val == 0.0 && x.der != 0.0 {
                        return Err(Error::NonsmoothPoint {
                            what: "abs at 0".into(),
                        });
                    }
                    Dual {
                        val: x.val.abs(),
                        der: x.val.signum() * x.der,
                    }
                }
            }
        }
        ExprAst::Binary(op, a, b) => {
            let x = eval_dual(a, point, seed_axis)?;
            let y = eval_dual(b, point, seed_axis)?;
            match op {
                BinOp::Add => Dual {
                    val: x.val + y.val,
                    der: x.der + y.der,
                },
                BinOp::Sub => Dual {
                    val: x.val - y.val,
                    der: x.der - y.der,
                },
                BinOp::Mul => Dual {
                    val: x.val * y.val,
                    der: x.val * y.der + x.der * y.val,
                },
                BinOp::Div => Dual {
                    val: x.val / y.val,
                    der: (x.der * y.val - x.val * y.der) / (y.val * y.val),
                },
            }
        }
        ExprAst::PowInt(a, e) => {
            let x = eval_dual(a, point, seed_axis)?;
            let val = x.val.powi(*e);
            let der = if *e == 0 {
                0.0
            } else {
                *e as f64 * x.val.powi(*e - 1) * x.der
            };
            Dual { val, der }
        }
    })
}

/// Plain evaluation without derivative bookkeeping.
pub fn eval_plain(ast: &ExprAst, point: &[f64]) -> f64 {
    match ast {
        ExprAst::Const(c) => *c,
        ExprAst::Var(i) => point[*i],
        ExprAst::Unary(op, a) => {
            let x = eval_plain(a, point);
            match op {
                UnaryOp::Neg => -x,
                UnaryOp::Sin => x.sin(),
                UnaryOp::Cos => x.cos(),
                UnaryOp::Exp => x.exp(),
                UnaryOp::Sqrt => x.sqrt(),
                UnaryOp::Abs => x.abs(),
            }
        }
        ExprAst::Binary(op, a, b) => {
            let x = eval_plain(a, point);
            let y = eval_plain(b, point);
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => x / y,
            }
        }
        ExprAst::PowInt(a, e) => eval_plain(a, point).powi(*e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse::parse_expr;
    use approx::assert_abs_diff_eq;

    #[test]
    fn derivative_of_square() {
        let vars = vec!["x1".to_string()];
        let e = parse_expr("x1^2", &vars).unwrap();
        let d = eval_dual(&e, &[3.0], 0).unwrap();
        assert_eq!(d.val, 9.0);
        assert_eq!(d.der, 6.0);
    }

    #[test]
    fn kink_detection() {
        let vars = vec!["x".to_string()];
        let e = parse_expr("abs(x)", &vars).unwrap();
        assert!(eval_dual(&e, &[0.0], 0).is_err());
        let d = eval_dual(&e, &[-2.0], 0).unwrap();
        assert_eq!(d.der, -1.0);
        let s = parse_expr("sqrt(x)", &vars).unwrap();
        assert!(eval_dual(&s, &[0.0], 0).is_err());
        assert_abs_diff_eq!(
            eval_dual(&s, &[4.0], 0).unwrap().der,
            0.25,
            epsilon = 1e-15
        );
    }
}
