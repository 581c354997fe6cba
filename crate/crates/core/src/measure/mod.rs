//! Hausdorff-type premeasure estimators for subsets of ℍⁿ and the
//! codimension-k area formula.

mod area;
mod cover;

pub use area::{
    area_integrand, graph_area, minor_count, AreaResult, JacobianSource, QuadOpts, RegionFilter,
};
pub use cover::{
    premeasure_estimate, write_cover_csv, CoverElement, CoverOpts, CoverStrategy,
    CoveringEstimate, SetSampler,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which Hausdorff-type measure a computation targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasureKind {
    /// Covers by arbitrary sets (estimated with homogeneous boxes).
    Hausdorff,
    /// Covers by metric balls.
    Spherical,
    /// Covers by balls centered on the set itself.
    Centered,
}

/// A measure family: kind, dimension m and the normalization
/// `β_m = π^{m/2} / Γ(m/2 + 1) · 2^{−m}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureFamily {
    pub kind: MeasureKind,
    pub m: f64,
    pub beta: f64,
}

impl MeasureFamily {
    pub fn new(kind: MeasureKind, m: f64) -> Result<Self> {
        Ok(MeasureFamily {
            kind,
            m,
            beta: beta_const(m)?,
        })
    }
}

/// Lanczos approximation of Γ(x) for x > 0 (g = 7, 9 terms), accurate to
/// well below 1e-12 relative over the range used here.
fn gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    // x > 0 here; no reflection needed.
    let z = x - 1.0;
    let mut acc = G[0];
    for (i, &g) in G.iter().enumerate().skip(1) {
        acc += g / (z + i as f64);
    }
    let t = z + 7.5;
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * acc
}

/// The normalization constant `β_m = π^{m/2} / Γ(m/2 + 1) · 2^{−m}`
/// (diameters, not radii).
pub fn beta_const(m: f64) -> Result<f64> {
    if !(m >= 0.0) {
        return Err(Error::NegativeMeasureDim(m));
    }
    let pi = std::f64::consts::PI;
    Ok(pi.powf(m / 2.0) / gamma(m / 2.0 + 1.0) * 2.0f64.powf(-m))
}
