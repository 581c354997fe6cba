//! Axis-aligned boxes used as evaluation domains and integration regions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A nondegenerate axis-aligned box `[lo_1, hi_1] × … × [lo_d, hi_d]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl DomainBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::LengthMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(Error::DegenerateSample("empty box".into()));
        }
        for (a, b) in lo.iter().zip(&hi) {
            if !a.is_finite() || !b.is_finite() || a >= b {
                return Err(Error::DegenerateSample(format!(
                    "degenerate box axis [{a}, {b}]"
                )));
            }
        }
        Ok(DomainBox { lo, hi })
    }

    /// Cube `[c_i − r, c_i + r]` around a center point.
    pub fn cube_around(center: &[f64], r: f64) -> Result<Self> {
        DomainBox::new(
            center.iter().map(|c| c - r).collect(),
            center.iter().map(|c| c + r).collect(),
        )
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    #[inline]
    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    #[inline]
    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn min_side(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.side(i))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.side(i)).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (a, b))| *x >= *a && *x <= *b)
    }

    /// Box shrunk by `margin` on every side; errors if it would collapse.
    pub fn shrink(&self, margin: f64) -> Result<DomainBox> {
        DomainBox::new(
            self.lo.iter().map(|a| a + margin).collect(),
            self.hi.iter().map(|b| b - margin).collect(),
        )
    }

    /// Intersection with another box of the same dimension.
    pub fn intersect(&self, other: &DomainBox) -> Result<DomainBox> {
        if other.dim() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        DomainBox::new(
            self.lo
                .iter()
                .zip(&other.lo)
                .map(|(a, b)| a.max(*b))
                .collect(),
            self.hi
                .iter()
                .zip(&other.hi)
                .map(|(a, b)| a.min(*b))
                .collect(),
        )
    }

    /// Maps a unit-cube sample into the box.
    pub fn lerp(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(u, (a, b))| a + u * (b - a))
            .collect()
    }

    /// Uniform grid nodes along one axis, `nodes >= 2`.
    pub fn axis_nodes(&self, axis: usize, nodes: usize) -> Vec<f64> {
        let h = self.side(axis) / (nodes - 1) as f64;
        (0..nodes).map(|i| self.lo[axis] + i as f64 * h).collect()
    }
}

/// Row-major iteration over the multi-index lattice with the given shape.
pub fn lattice_indices(shape: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = shape.iter().product();
    (0..total).map(move |mut flat| {
        let mut idx = vec![0usize; shape.len()];
        for (i, &s) in shape.iter().enumerate().rev() {
            idx[i] = flat % s;
            flat /= s;
        }
        idx
    })
}
