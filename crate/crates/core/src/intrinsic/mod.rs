//! Intrinsic calculus along the nonlinear vector fields W^φ_j: integral
//! curves, intrinsic partial derivatives, the intrinsic Jacobian from the
//! graph and the level-set side, and the residual/modulus diagnostics
//! behind the differentiability characterizations.

mod curves;
mod jacobian;
mod report;
mod residual;

pub use curves::{
    exp_closed_form, exp_curve, exp_map, is_middle_field, w_field, ExpCurve, OdeOpts,
};
pub use jacobian::{
    intrinsic_column, intrinsic_jacobian, intrinsic_partial, jacobian_analytic,
    jacobian_from_levelset, JacobianEstimate, LevelsetJacobian, LevelsetOpts, PartialDeriv,
};
pub use report::{
    characterization_report, holder_report, residual_report, CharacterizationFlags,
    CharacterizationOpts, CharacterizationReport, HolderReport, ResidualKind, ResidualReport,
};
pub use residual::{
    holder_modulus, id_residual, uid_residual, upsilon_modulus, HolderOpts, ProbeOpts,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The k × (2n − k) matrix J^φφ representing the intrinsic differential;
/// columns are the intrinsic partials along W^φ_j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicJacobian {
    rows: Vec<Vec<f64>>,
}

impl IntrinsicJacobian {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.is_empty() || cols == 0 {
            return Err(Error::DegenerateSample("empty Jacobian".into()));
        }
        for r in &rows {
            if r.len() != cols {
                return Err(Error::LengthMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
            if r.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        Ok(IntrinsicJacobian { rows })
    }

    pub fn zeros(k: usize, cols: usize) -> Self {
        IntrinsicJacobian {
            rows: vec![vec![0.0; cols]; k],
        }
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.rows[0].len()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.rows[i][j] = v;
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Applies the ⋆-linear map: `J · πᵀ` for a horizontal base vector.
    pub fn apply(&self, pi: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(pi).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Largest absolute entry.
    pub fn sup_norm(&self) -> f64 {
        self.rows
            .iter()
            .flatten()
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Entrywise sup distance to another matrix of the same shape.
    pub fn max_abs_diff(&self, other: &IntrinsicJacobian) -> f64 {
        self.rows
            .iter()
            .flatten()
            .zip(other.rows.iter().flatten())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Options for the difference-quotient derivatives along curves.
#[derive(Debug, Clone, Copy)]
pub struct DerivOpts {
    /// Base step; defaults to `1e-3 · (1 + |a|)`.
    pub h: Option<f64>,
    /// Two successive Richardson levels disagreeing beyond this flag the
    /// quotient as nonconvergent (the value is still reported).
    pub converge_tol: f64,
    pub ode: OdeOpts,
}

impl Default for DerivOpts {
    fn default() -> Self {
        DerivOpts {
            h: None,
            converge_tol: 1e-6,
            ode: OdeOpts::default(),
        }
    }
}
