//! Exact arithmetic and metric structure of the Heisenberg group ℍⁿ in
//! exponential coordinates.
//!
//! A point is stored as the vector `(x_1..x_n, y_1..y_n, t)` of length
//! `2n + 1`. The group product is the step-2 polynomial law: horizontal
//! coordinates add, the vertical coordinate picks up half the symplectic
//! form of the horizontal blocks. Dilations scale horizontal coordinates
//! by λ and the vertical one by λ².

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The number of X/Y pairs fixing a Heisenberg group ℍⁿ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HDim {
    n: usize,
}

impl HDim {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(n));
        }
        Ok(HDim { n })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Topological dimension, `2n + 1`.
    #[inline]
    pub fn point_len(&self) -> usize {
        2 * self.n + 1
    }
}

/// A point of ℍⁿ in exponential coordinates `(x_1..x_n, y_1..y_n, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPoint {
    coords: Vec<f64>,
}

impl GroupPoint {
    /// Builds a point from its coordinate vector; the length must be odd
    /// (`2n + 1`) and every entry finite.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 3 || coords.len() % 2 == 0 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                got: coords.len(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(GroupPoint { coords })
    }

    pub fn identity(dim: HDim) -> Self {
        GroupPoint {
            coords: vec![0.0; dim.point_len()],
        }
    }

    #[inline]
    pub fn dim(&self) -> HDim {
        HDim {
            n: (self.coords.len() - 1) / 2,
        }
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// `x_j` for `1 <= j <= n`.
    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.coords[j - 1]
    }

    /// `y_j` for `1 <= j <= n`.
    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.coords[self.dim().n + j - 1]
    }

    /// Vertical coordinate `t`.
    #[inline]
    pub fn t(&self) -> f64 {
        *self.coords.last().unwrap()
    }

    fn check_same_dim(&self, other: &GroupPoint) -> Result<()> {
        if self.coords.len() != other.coords.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coords.len(),
                got: other.coords.len(),
            });
        }
        Ok(())
    }
}

/// Group product `p · q`. Horizontal coordinates add; the vertical one is
/// `p_t + q_t + ½ Σ_j (p_j q_{j+n} − q_j p_{j+n})`.
pub fn product(p: &GroupPoint, q: &GroupPoint) -> Result<GroupPoint> {
    p.check_same_dim(q)?;
    let n = p.dim().n();
    let mut coords = Vec::with_capacity(2 * n + 1);
    for j in 0..2 * n {
        coords.push(p.coords[j] + q.coords[j]);
    }
    let mut twist = 0.0;
    for j in 0..n {
        twist += p.coords[j] * q.coords[j + n] - q.coords[j] * p.coords[j + n];
    }
    coords.push(p.coords[2 * n] + q.coords[2 * n] + 0.5 * twist);
    Ok(GroupPoint { coords })
}

/// Group inverse; in exponential coordinates of a step-2 group this is
/// coordinate negation, so `p · p⁻¹ = e` holds exactly.
pub fn inverse(p: &GroupPoint) -> GroupPoint {
    GroupPoint {
        coords: p.coords.iter().map(|c| -c).collect(),
    }
}

/// Intrinsic dilation `δ_λ`: horizontal coordinates scale by λ, the
/// vertical one by λ².
pub fn dilate(lambda: f64, p: &GroupPoint) -> Result<GroupPoint> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidScale(lambda));
    }
    let n = p.dim().n();
    let mut coords: Vec<f64> = p.coords[..2 * n].iter().map(|c| lambda * c).collect();
    coords.push(lambda * lambda * p.coords[2 * n]);
    Ok(GroupPoint { coords })
}

/// Homogeneous norm `‖p‖_∞ = max{ |(p_1..p_2n)|, |p_{2n+1}|^{1/2} }`.
pub fn norm_inf(p: &GroupPoint) -> f64 {
    let n = p.dim().n();
    let horiz: f64 = p.coords[..2 * n].iter().map(|c| c * c).sum::<f64>().sqrt();
    horiz.max(p.coords[2 * n].abs().sqrt())
}

/// Left-invariant homogeneous distance `d_∞(p, q) = ‖q⁻¹ · p‖_∞`.
pub fn dist_inf(p: &GroupPoint, q: &GroupPoint) -> Result<f64> {
    Ok(norm_inf(&product(&inverse(q), p)?))
}

/// One of the left-invariant frame fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    /// `X_j = ∂_{x_j} − ½ y_j ∂_t`, `1 <= j <= n`.
    X(usize),
    /// `Y_j = ∂_{y_j} + ½ x_j ∂_t`, `1 <= j <= n`.
    Y(usize),
    /// `T = ∂_t`.
    T,
}

/// Coefficient vector of a frame field at `p`, length `2n + 1`.
pub fn frame_eval(which: Frame, p: &GroupPoint) -> Result<Vec<f64>> {
    let n = p.dim().n();
    let mut coeff = vec![0.0; 2 * n + 1];
    match which {
        Frame::X(j) => {
            if j == 0 || j > n {
                return Err(Error::FrameIndex { j, n });
            }
            coeff[j - 1] = 1.0;
            coeff[2 * n] = -0.5 * p.coords[n + j - 1];
        }
        Frame::Y(j) => {
            if j == 0 || j > n {
                return Err(Error::FrameIndex { j, n });
            }
            coeff[n + j - 1] = 1.0;
            coeff[2 * n] = 0.5 * p.coords[j - 1];
        }
        Frame::T => coeff[2 * n] = 1.0,
    }
    Ok(coeff)
}
