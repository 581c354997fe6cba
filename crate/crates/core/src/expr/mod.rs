//! Evaluable scalar fields: expression-backed (with exact dual-number
//! derivatives) or grid-backed (multilinear interpolation with
//! finite-difference derivatives).

mod ast;
mod dual;
mod parse;

pub use ast::{BinOp, DisplayExpr, ExprAst, UnaryOp};
pub use dual::{eval_dual, eval_plain, Dual};
pub use parse::parse_expr;

use serde::{Deserialize, Serialize};

use crate::domain::{lattice_indices, DomainBox};
use crate::error::{Error, Result};

/// Regularity tag attached to every field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Smoothness {
    Smooth,
    ContinuousOnly,
}

/// Uniform grid samples over a box, evaluated by multilinear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    gbox: DomainBox,
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(gbox: DomainBox, shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if shape.len() != gbox.dim() {
            return Err(Error::LengthMismatch {
                expected: gbox.dim(),
                got: shape.len(),
            });
        }
        if let Some(&s) = shape.iter().find(|&&s| s < 2) {
            return Err(Error::GridTooCoarse(s));
        }
        let expected: usize = shape.iter().product();
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: values.len(),
            });
        }
        Ok(GridField {
            gbox,
            shape,
            values,
        })
    }

    pub fn gbox(&self) -> &DomainBox {
        &self.gbox
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.gbox.side(axis) / (self.shape[axis] - 1) as f64
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for (i, &s) in self.shape.iter().enumerate() {
            flat = flat * s + idx[i];
        }
        flat
    }

    pub fn value_at(&self, idx: &[usize]) -> f64 {
        self.values[self.flat_index(idx)]
    }

    /// Multilinear interpolation; errors outside the box.
    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        if p.len() != self.gbox.dim() {
            return Err(Error::LengthMismatch {
                expected: self.gbox.dim(),
                got: p.len(),
            });
        }
        // Tolerate rounding right at the faces.
        let tol = 1e-12;
        let d = p.len();
        let mut cell = vec![0usize; d];
        let mut frac = vec![0.0f64; d];
        for a in 0..d {
            let lo = self.gbox.lo()[a];
            let hi = self.gbox.hi()[a];
            if p[a] < lo - tol * (1.0 + lo.abs()) || p[a] > hi + tol * (1.0 + hi.abs()) {
                return Err(Error::OutOfDomain {
                    what: format!("axis {a}: {} outside [{lo}, {hi}]", p[a]),
                });
            }
            let h = self.spacing(a);
            let raw = ((p[a] - lo) / h).floor();
            let i = (raw.max(0.0) as usize).min(self.shape[a] - 2);
            cell[a] = i;
            frac[a] = ((p[a] - lo) / h - i as f64).clamp(0.0, 1.0);
        }
        let mut acc = 0.0;
        let corners = 1usize << d;
        let mut idx = vec![0usize; d];
        for c in 0..corners {
            let mut w = 1.0;
            for a in 0..d {
                if c >> a & 1 == 1 {
                    idx[a] = cell[a] + 1;
                    w *= frac[a];
                } else {
                    idx[a] = cell[a];
                    w *= 1.0 - frac[a];
                }
            }
            if w != 0.0 {
                acc += w * self.value_at(&idx);
            }
        }
        Ok(acc)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Backing {
    Expr(ExprAst),
    Grid(GridField),
}

/// An evaluable real-valued map of a fixed arity.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    backing: Backing,
    vars: Vec<String>,
    smoothness: Smoothness,
}

impl ScalarField {
    /// Parses an expression over the named variables.
    pub fn parse(text: &str, vars: &[String]) -> Result<Self> {
        let ast = parse_expr(text, vars)?;
        let smoothness = if ast.has_kink() {
            Smoothness::ContinuousOnly
        } else {
            Smoothness::Smooth
        };
        Ok(ScalarField {
            backing: Backing::Expr(ast),
            vars: vars.to_vec(),
            smoothness,
        })
    }

    pub fn from_ast(ast: ExprAst, vars: &[String]) -> Result<Self> {
        if let Some(m) = ast.max_var() {
            if m >= vars.len() {
                return Err(Error::LengthMismatch {
                    expected: m + 1,
                    got: vars.len(),
                });
            }
        }
        let smoothness = if ast.has_kink() {
            Smoothness::ContinuousOnly
        } else {
            Smoothness::Smooth
        };
        Ok(ScalarField {
            backing: Backing::Expr(ast),
            vars: vars.to_vec(),
            smoothness,
        })
    }

    pub fn constant(c: f64, vars: &[String]) -> Self {
        ScalarField {
            backing: Backing::Expr(ExprAst::Const(c)),
            vars: vars.to_vec(),
            smoothness: Smoothness::Smooth,
        }
    }

    pub fn from_grid(grid: GridField, vars: &[String]) -> Result<Self> {
        if vars.len() != grid.gbox().dim() {
            return Err(Error::LengthMismatch {
                expected: grid.gbox().dim(),
                got: vars.len(),
            });
        }
        Ok(ScalarField {
            backing: Backing::Grid(grid),
            vars: vars.to_vec(),
            smoothness: Smoothness::ContinuousOnly,
        })
    }

    /// Samples this field onto a uniform grid over `gbox`.
    pub fn sample_to_grid(&self, gbox: &DomainBox, nodes_per_axis: usize) -> Result<ScalarField> {
        if nodes_per_axis < 2 {
            return Err(Error::GridTooCoarse(nodes_per_axis));
        }
        let d = gbox.dim();
        let shape = vec![nodes_per_axis; d];
        let axes: Vec<Vec<f64>> = (0..d).map(|a| gbox.axis_nodes(a, nodes_per_axis)).collect();
        let mut values = Vec::with_capacity(shape.iter().product());
        for idx in lattice_indices(&shape) {
            let p: Vec<f64> = idx.iter().enumerate().map(|(a, &i)| axes[a][i]).collect();
            values.push(self.eval(&p)?);
        }
        ScalarField::from_grid(GridField::new(gbox.clone(), shape, values)?, &self.vars)
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn ast(&self) -> Option<&ExprAst> {
        match &self.backing {
            Backing::Expr(ast) => Some(ast),
            Backing::Grid(_) => None,
        }
    }

    pub fn grid(&self) -> Option<&GridField> {
        match &self.backing {
            Backing::Grid(g) => Some(g),
            Backing::Expr(_) => None,
        }
    }

    /// Pretty-prints an expression backing; reparses to an equivalent tree.
    pub fn pretty(&self) -> Option<String> {
        self.ast().map(|ast| {
            format!(
                "{}",
                DisplayExpr {
                    ast,
                    vars: &self.vars
                }
            )
        })
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.arity() {
            return Err(Error::LengthMismatch {
                expected: self.arity(),
                got: point.len(),
            });
        }
        match &self.backing {
            Backing::Expr(ast) => Ok(eval_plain(ast, point)),
            Backing::Grid(g) => g.eval(point),
        }
    }

    /// Partial derivative along `axis`.
    ///
    /// Expression backing uses forward-mode duals (exact away from
    /// `abs`/`sqrt` kinks, where it errors). Grid backing uses a central
    /// difference with step `h` plus one Richardson extrapolation step;
    /// `h` defaults to one grid spacing, which keeps the stencil aligned
    /// with the interpolation cells.
    pub fn partial(&self, axis: usize, point: &[f64], h: Option<f64>) -> Result<f64> {
        if axis >= self.arity() {
            return Err(Error::FieldIndex {
                j: axis,
                max: self.arity(),
            });
        }
        match &self.backing {
            Backing::Expr(ast) => Ok(eval_dual(ast, point, axis)?.der),
            Backing::Grid(g) => {
                let h = h.unwrap_or_else(|| g.spacing(axis));
                let quot = |step: f64| -> Result<f64> {
                    let mut up = point.to_vec();
                    let mut dn = point.to_vec();
                    up[axis] += step;
                    dn[axis] -= step;
                    Ok((g.eval(&up)? - g.eval(&dn)?) / (2.0 * step))
                };
                let q1 = quot(h)?;
                let q2 = quot(2.0 * h)?;
                Ok((4.0 * q1 - q2) / 3.0)
            }
        }
    }

    /// Full gradient at `point`.
    pub fn gradient(&self, point: &[f64], h: Option<f64>) -> Result<Vec<f64>> {
        (0..self.arity())
            .map(|a| self.partial(a, point, h))
            .collect()
    }
}

/// Ambient variable names `x1..xn, y1..yn, t` for fields on ℍⁿ.
pub fn ambient_vars(n: usize) -> Vec<String> {
    let mut v: Vec<String> = (1..=n).map(|j| format!("x{j}")).collect();
    v.extend((1..=n).map(|j| format!("y{j}")));
    v.push("t".into());
    v
}

/// Base variable names `v{k+1}..vn, eta1..etak, w{k+1}..wn, tau`.
pub fn base_vars(n: usize, k: usize) -> Vec<String> {
    let mut v: Vec<String> = (k + 1..=n).map(|j| format!("v{j}")).collect();
    v.extend((1..=k).map(|j| format!("eta{j}")));
    v.extend((k + 1..=n).map(|j| format!("w{j}")));
    v.push("tau".into());
    v
}
