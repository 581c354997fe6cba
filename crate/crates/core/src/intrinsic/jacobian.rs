//! The intrinsic Jacobian J^φφ, from three routes: symmetric difference
//! quotients along exponential curves (the defining limit), Euclidean
//! dual-number partials assembled through the W-field table (for smooth
//! φ), and the level-set formula −(Xf)⁻¹ Yf.

use crate::approx::LevelSetFunction;
use crate::error::{Error, Result};
use crate::hgroup::GroupPoint;
use crate::linalg::Mat;
use crate::split::{BasePoint, GraphFunction, GraphMap};

use super::curves::{exp_map, w_field};
use super::{DerivOpts, IntrinsicJacobian};

/// A difference-quotient derivative estimate with its Richardson spread.
/// Nonconvergence is flagged, never hidden: the value is still reported.
#[derive(Debug, Clone, Copy)]
pub struct PartialDeriv {
    pub value: f64,
    pub spread: f64,
    pub converged: bool,
}

/// Intrinsic Jacobian estimate with aggregate convergence diagnostics.
#[derive(Debug, Clone)]
pub struct JacobianEstimate {
    pub jac: IntrinsicJacobian,
    pub max_spread: f64,
    pub all_converged: bool,
}

fn default_step(a: &BasePoint) -> f64 {
    let norm = a.flat().iter().map(|x| x * x).sum::<f64>().sqrt();
    1e-3 * (1.0 + norm)
}

/// The j-th column of J^φφ at `a`: Richardson-extrapolated symmetric
/// quotients of every φ_i along the curve of W^φ_j.
pub fn intrinsic_column<F: GraphMap + ?Sized>(
    j: usize,
    phi: &F,
    a: &BasePoint,
    opts: &DerivOpts,
) -> Result<Vec<PartialDeriv>> {
    let k = phi.splitting().k();
    let h0 = opts.h.unwrap_or_else(|| default_step(a));
    // Quotients at h, h/2, h/4; curves do not depend on the component i.
    let mut quots: Vec<Vec<f64>> = Vec::with_capacity(3);
    for level in 0..3u32 {
        let h = h0 / f64::powi(2.0, level as i32);
        let plus = exp_map(j, phi, a, h, &opts.ode)?;
        let minus = exp_map(j, phi, a, -h, &opts.ode)?;
        let fp = phi.eval(&plus)?;
        let fm = phi.eval(&minus)?;
        quots.push(
            fp.iter()
                .zip(&fm)
                .map(|(p, m)| (p - m) / (2.0 * h))
                .collect(),
        );
    }
    Ok((0..k)
        .map(|i| {
            let r1 = (4.0 * quots[1][i] - quots[0][i]) / 3.0;
            let r2 = (4.0 * quots[2][i] - quots[1][i]) / 3.0;
            let spread = (r2 - r1).abs();
            PartialDeriv {
                value: (16.0 * r2 - r1) / 15.0,
                spread,
                converged: spread <= opts.converge_tol,
            }
        })
        .collect())
}

/// The intrinsic partial ∂^{φ_j}φ_i at `a` (i, j 1-based).
pub fn intrinsic_partial<F: GraphMap + ?Sized>(
    i: usize,
    j: usize,
    phi: &F,
    a: &BasePoint,
    opts: &DerivOpts,
) -> Result<PartialDeriv> {
    let k = phi.splitting().k();
    if i == 0 || i > k {
        return Err(Error::FieldIndex { j: i, max: k });
    }
    Ok(intrinsic_column(j, phi, a, opts)?[i - 1])
}

/// The full k × (2n − k) intrinsic Jacobian at `a` by curve quotients.
pub fn intrinsic_jacobian<F: GraphMap + ?Sized>(
    phi: &F,
    a: &BasePoint,
    opts: &DerivOpts,
) -> Result<JacobianEstimate> {
    let s = phi.splitting();
    let mut jac = IntrinsicJacobian::zeros(s.k(), s.horiz_dim());
    let mut max_spread = 0.0f64;
    let mut all_converged = true;
    for j in 1..=s.horiz_dim() {
        let col = intrinsic_column(j, phi, a, opts)?;
        for (i, d) in col.iter().enumerate() {
            jac.set(i, j - 1, d.value);
            max_spread = max_spread.max(d.spread);
            all_converged &= d.converged;
        }
    }
    Ok(JacobianEstimate {
        jac,
        max_spread,
        all_converged,
    })
}

/// Analytic route for continuously differentiable φ: assembles
/// W^φ_jφ_i from Euclidean partials of the components. Serves as the
/// independent oracle for the curve-based estimate.
pub fn jacobian_analytic(phi: &GraphFunction, a: &BasePoint) -> Result<IntrinsicJacobian> {
    phi.check_inside(a)?;
    let s = phi.splitting();
    let flat = a.flat();
    let grads: Vec<Vec<f64>> = phi
        .components()
        .iter()
        .map(|c| c.gradient(&flat, None))
        .collect::<Result<_>>()?;
    let mut rows = vec![vec![0.0; s.horiz_dim()]; s.k()];
    for j in 1..=s.horiz_dim() {
        let coeff = w_field(j, phi, a)?;
        for i in 0..s.k() {
            rows[i][j - 1] = coeff.iter().zip(&grads[i]).map(|(c, g)| c * g).sum();
        }
    }
    IntrinsicJacobian::new(rows)
}

/// Options for the level-set route.
#[derive(Debug, Clone, Copy)]
pub struct LevelsetOpts {
    /// `|det Xf|` below this raises `HorizontalDegeneracy`.
    pub det_threshold: f64,
    /// Finite-difference step for grid-backed components (grid spacing
    /// when `None`).
    pub fd_step: Option<f64>,
}

impl Default for LevelsetOpts {
    fn default() -> Self {
        LevelsetOpts {
            det_threshold: 1e-8,
            fd_step: None,
        }
    }
}

/// Level-set Jacobian together with Δ(p) = |det Xf(p)|.
#[derive(Debug, Clone)]
pub struct LevelsetJacobian {
    pub jac: IntrinsicJacobian,
    pub delta: f64,
}

/// J^φφ from the level-set side: −(Xf)⁻¹(p) · Yf(p), where Xf is the
/// k × k block of X_1..X_k derivatives and Yf stacks the remaining
/// horizontal derivatives (X_{k+1}..X_n, Y_1..Y_n) in W-field order.
pub fn jacobian_from_levelset(
    f: &LevelSetFunction,
    p: &GroupPoint,
    opts: &LevelsetOpts,
) -> Result<LevelsetJacobian> {
    let n = f.dim().n();
    let k = f.k();
    if p.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: 2 * n + 1,
            got: p.coords().len(),
        });
    }
    let coords = p.coords();
    let grads: Vec<Vec<f64>> = f
        .components()
        .iter()
        .map(|c| c.gradient(coords, opts.fd_step))
        .collect::<Result<_>>()?;
    // Horizontal derivative along X_j / Y_j from the Euclidean gradient.
    let xd = |g: &[f64], j: usize| g[j - 1] - 0.5 * coords[n + j - 1] * g[2 * n];
    let yd = |g: &[f64], j: usize| g[n + j - 1] + 0.5 * coords[j - 1] * g[2 * n];

    let xf = Mat::from_rows(
        &(0..k)
            .map(|i| (1..=k).map(|j| xd(&grads[i], j)).collect())
            .collect::<Vec<_>>(),
    );
    let delta = xf.det().abs();
    if delta < opts.det_threshold {
        return Err(Error::HorizontalDegeneracy { det: delta });
    }
    let cols = 2 * n - k;
    let mut rows = vec![vec![0.0; cols]; k];
    for c in 0..cols {
        let rhs: Vec<f64> = (0..k)
            .map(|i| {
                if c < n - k {
                    xd(&grads[i], k + 1 + c)
                } else {
                    yd(&grads[i], c - (n - k) + 1)
                }
            })
            .collect();
        let sol = xf
            .solve(&rhs)
            .ok_or(Error::HorizontalDegeneracy { det: delta })?;
        for i in 0..k {
            rows[i][c] = -sol[i];
        }
    }
    Ok(LevelsetJacobian {
        jac: IntrinsicJacobian::new(rows)?,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainBox;
    use crate::expr::ambient_vars;
    use crate::hgroup::HDim;
    use crate::split::Splitting;
    use approx::assert_abs_diff_eq;

    fn graph(n: usize, k: usize, r: f64, exprs: &[&str]) -> GraphFunction {
        let s = Splitting::new(n, k).unwrap();
        let dom = DomainBox::new(vec![-r; s.base_dim()], vec![r; s.base_dim()]).unwrap();
        GraphFunction::parse(s, exprs, dom).unwrap()
    }

    #[test]
    fn linear_phi_has_unit_partial() {
        let phi = graph(1, 1, 4.0, &["eta1"]);
        let a = BasePoint::from_flat(phi.splitting(), &[0.3, -0.2]).unwrap();
        let d = intrinsic_partial(1, 1, &phi, &a, &DerivOpts::default()).unwrap();
        assert_abs_diff_eq!(d.value, 1.0, epsilon = 1e-10);
        assert!(d.converged);
        let est = intrinsic_jacobian(&phi, &a, &DerivOpts::default()).unwrap();
        assert_abs_diff_eq!(est.jac.get(0, 0), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn constant_phi_has_zero_jacobian() {
        let phi = graph(2, 1, 4.0, &["1/2"]);
        let a = BasePoint::from_flat(phi.splitting(), &[0.1, 0.4, -0.3, 0.2]).unwrap();
        let est = intrinsic_jacobian(&phi, &a, &DerivOpts::default()).unwrap();
        assert_eq!(est.jac.cols(), 3);
        for j in 0..3 {
            assert_abs_diff_eq!(est.jac.get(0, j), 0.0, epsilon = 1e-12);
        }
        // n = 2, k = 2 constants: 2 × 2 zero matrix.
        let phi22 = graph(2, 2, 4.0, &["3/10", "-1/5"]);
        let a22 = BasePoint::from_flat(phi22.splitting(), &[0.2, -0.1, 0.05]).unwrap();
        let est22 = intrinsic_jacobian(&phi22, &a22, &DerivOpts::default()).unwrap();
        assert_eq!((est22.jac.k(), est22.jac.cols()), (2, 2));
        assert_abs_diff_eq!(est22.jac.sup_norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn column_vector_example_h2() {
        // n=2, k=1, φ(v2,η,w2,τ) = v2: column (W_1φ, ∇^φφ, W_3φ) = (1, 0, 0).
        let phi = graph(2, 1, 4.0, &["v2"]);
        let a = BasePoint::from_flat(phi.splitting(), &[0.3, 0.1, -0.6, 0.2]).unwrap();
        let est = intrinsic_jacobian(&phi, &a, &DerivOpts::default()).unwrap();
        assert_abs_diff_eq!(est.jac.get(0, 0), 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(est.jac.get(0, 1), 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(est.jac.get(0, 2), 0.0, epsilon = 1e-8);
        // Matches the analytic route exactly.
        let analytic = jacobian_analytic(&phi, &a).unwrap();
        assert!(est.jac.max_abs_diff(&analytic) < 1e-8);
    }

    #[test]
    fn curve_route_matches_analytic_for_polynomial_phi() {
        let phi = graph(2, 1, 4.0, &["v2^2 - eta1*w2 + tau/3"]);
        let a = BasePoint::from_flat(phi.splitting(), &[0.4, -0.2, 0.7, 0.1]).unwrap();
        let est = intrinsic_jacobian(&phi, &a, &DerivOpts::default()).unwrap();
        let analytic = jacobian_analytic(&phi, &a).unwrap();
        assert!(
            est.jac.max_abs_diff(&analytic) < 1e-5,
            "gap {}",
            est.jac.max_abs_diff(&analytic)
        );
    }

    fn levelset(n: usize, exprs: &[&str], r: f64) -> LevelSetFunction {
        let dim = HDim::new(n).unwrap();
        let dom = DomainBox::new(vec![-r; 2 * n + 1], vec![r; 2 * n + 1]).unwrap();
        let vars = ambient_vars(n);
        let comps = exprs
            .iter()
            .map(|e| crate::expr::ScalarField::parse(e, &vars).unwrap())
            .collect();
        LevelSetFunction::new(dim, comps, dom).unwrap()
    }

    #[test]
    fn levelset_examples() {
        // f = x1: Xf = 1, Yf = 0 -> [0].
        let f = levelset(1, &["x1"], 2.0);
        let p = GroupPoint::new(vec![0.0, 0.3, 0.1]).unwrap();
        let j = jacobian_from_levelset(&f, &p, &LevelsetOpts::default()).unwrap();
        assert_abs_diff_eq!(j.jac.get(0, 0), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(j.delta, 1.0, epsilon = 1e-12);

        // f = x1 − y1: matches the graph-side value for φ(η,τ) = η.
        let f2 = levelset(1, &["x1 - y1"], 2.0);
        let j2 = jacobian_from_levelset(&f2, &p, &LevelsetOpts::default()).unwrap();
        assert_abs_diff_eq!(j2.jac.get(0, 0), 1.0, epsilon = 1e-12);

        // Degeneracy: f = t has X₁f = −½ y₁ ∂_t f, vanishing at y₁ = 0.
        let f3 = levelset(1, &["t"], 2.0);
        let origin = GroupPoint::identity(HDim::new(1).unwrap());
        match jacobian_from_levelset(&f3, &origin, &LevelsetOpts::default()) {
            Err(Error::HorizontalDegeneracy { .. }) => {}
            other => panic!("expected degeneracy, got {other:?}"),
        }
    }

    #[test]
    fn levelset_matches_graph_route_h2_k2() {
        // f_i = x_i − c_i: constant graph φ = (c1, c2), J = 0.
        let f = levelset(2, &["x1 - 1/4", "x2 + 1/3"], 2.0);
        let p = GroupPoint::new(vec![0.25, -1.0 / 3.0, 0.1, -0.2, 0.05]).unwrap();
        let j = jacobian_from_levelset(&f, &p, &LevelsetOpts::default()).unwrap();
        assert_eq!((j.jac.k(), j.jac.cols()), (2, 2));
        assert_abs_diff_eq!(j.jac.sup_norm(), 0.0, epsilon = 1e-12);
    }
}
