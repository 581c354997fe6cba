//! Expression AST over named variables, with pretty-printing that
//! reparses to an equivalent tree.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Expression tree. Variables are indices into the declared variable list;
/// `PowInt` keeps exponents integral so differentiation stays total.
#[derive(Debug, Clone, PartialEq)]
pub enum ExprAst {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, Box<ExprAst>),
    Binary(BinOp, Box<ExprAst>, Box<ExprAst>),
    PowInt(Box<ExprAst>, i32),
}

impl ExprAst {
    /// True when the tree contains an `abs` or `sqrt` node, whose
    /// derivative has a kink.
    pub fn has_kink(&self) -> bool {
        match self {
            ExprAst::Const(_) | ExprAst::Var(_) => false,
            ExprAst::Unary(op, a) => {
                matches!(op, UnaryOp::Abs | UnaryOp::Sqrt) || a.has_kink()
            }
            ExprAst::Binary(_, a, b) => a.has_kink() || b.has_kink(),
            ExprAst::PowInt(a, _) => a.has_kink(),
        }
    }

    pub fn max_var(&self) -> Option<usize> {
        match self {
            ExprAst::Const(_) => None,
            ExprAst::Var(i) => Some(*i),
            ExprAst::Unary(_, a) => a.max_var(),
            ExprAst::Binary(_, a, b) => a.max_var().max(b.max_var()),
            ExprAst::PowInt(a, _) => a.max_var(),
        }
    }

    /// Replaces every variable `i` with `subs[i]`. Used to pull a graph
    /// function back to ambient coordinates.
    pub fn substitute(&self, subs: &[ExprAst]) -> ExprAst {
        match self {
            ExprAst::Const(c) => ExprAst::Const(*c),
            ExprAst::Var(i) => subs[*i].clone(),
            ExprAst::Unary(op, a) => ExprAst::Unary(*op, Box::new(a.substitute(subs))),
            ExprAst::Binary(op, a, b) => ExprAst::Binary(
                *op,
                Box::new(a.substitute(subs)),
                Box::new(b.substitute(subs)),
            ),
            ExprAst::PowInt(a, e) => ExprAst::PowInt(Box::new(a.substitute(subs)), *e),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            ExprAst::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            ExprAst::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            ExprAst::Unary(UnaryOp::Neg, _) => 3,
            ExprAst::PowInt(..) => 4,
            _ => 5,
        }
    }

    fn fmt_with(&self, f: &mut fmt::Formatter<'_>, vars: &[String]) -> fmt::Result {
        let paren = |f: &mut fmt::Formatter<'_>, e: &ExprAst, min: u8| -> fmt::Result {
            if e.precedence() < min {
                write!(f, "(")?;
                e.fmt_with(f, vars)?;
                write!(f, ")")
            } else {
                e.fmt_with(f, vars)
            }
        };
        match self {
            ExprAst::Const(c) => {
                if *c < 0.0 {
                    write!(f, "({c})")
                } else {
                    write!(f, "{c}")
                }
            }
            ExprAst::Var(i) => write!(f, "{}", vars[*i]),
            ExprAst::Unary(UnaryOp::Neg, a) => {
                write!(f, "-")?;
                paren(f, a, 4)
            }
            ExprAst::Unary(op, a) => {
                let name = match op {
                    UnaryOp::Sin => "sin",
                    UnaryOp::Cos => "cos",
                    UnaryOp::Exp => "exp",
                    UnaryOp::Sqrt => "sqrt",
                    UnaryOp::Abs => "abs",
                    UnaryOp::Neg => unreachable!(),
                };
                write!(f, "{name}(")?;
                a.fmt_with(f, vars)?;
                write!(f, ")")
            }
            ExprAst::Binary(op, a, b) => {
                let (sym, prec, right_min) = match op {
                    BinOp::Add => ("+", 1, 1),
                    BinOp::Sub => ("-", 1, 2),
                    BinOp::Mul => ("*", 2, 2),
                    BinOp::Div => ("/", 2, 3),
                };
                paren(f, a, prec)?;
                write!(f, " {sym} ")?;
                paren(f, b, right_min)
            }
            ExprAst::PowInt(a, e) => {
                paren(f, a, 5)?;
                write!(f, "^{e}")
            }
        }
    }
}

/// Display adapter carrying the variable names.
pub struct DisplayExpr<'a> {
    pub ast: &'a ExprAst,
    pub vars: &'a [String],
}

impl fmt::Display for DisplayExpr<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.ast.fmt_with(f, self.vars)
    }
}
