//! Residuals of the intrinsic first-order approximation and ½-Hölder
//! moduli, evaluated over deterministic low-discrepancy probe sets.
//!
//! Probe templates live in the unit cube and are scaled per radius, so a
//! halved radius probes a geometrically similar configuration; decay
//! trends along a radius schedule are then meaningful.

use crate::error::{Error, Result};
use crate::sampling::Halton;
use crate::split::{graph_dist, BasePoint, GraphMap};

use super::IntrinsicJacobian;

/// Probe-set options for the residual sups.
#[derive(Debug, Clone, Copy)]
pub struct ProbeOpts {
    /// Points (pointwise residual) or pairs (uniform residual) per radius.
    pub count: usize,
    pub seed: u64,
    /// Pairs closer than this in d_φ are excluded from the sup.
    pub exclusion: f64,
}

impl Default for ProbeOpts {
    fn default() -> Self {
        ProbeOpts {
            count: 256,
            seed: 0,
            exclusion: 1e-9,
        }
    }
}

fn check_shape<F: GraphMap + ?Sized>(phi: &F, jac: &IntrinsicJacobian) -> Result<()> {
    let s = phi.splitting();
    if jac.k() != s.k() || jac.cols() != s.horiz_dim() {
        return Err(Error::LengthMismatch {
            expected: s.k() * s.horiz_dim(),
            got: jac.k() * jac.cols(),
        });
    }
    Ok(())
}

fn offset_point<F: GraphMap + ?Sized>(
    phi: &F,
    a: &BasePoint,
    unit: &[f64],
    r: f64,
) -> Result<Option<BasePoint>> {
    let flat: Vec<f64> = a
        .flat()
        .iter()
        .zip(unit)
        .map(|(c, u)| c + r * (2.0 * u - 1.0))
        .collect();
    if !phi.domain().contains(&flat) {
        return Ok(None);
    }
    Ok(Some(BasePoint::from_flat(phi.splitting(), &flat)?))
}

/// Residual of first-order intrinsic approximation at `a` against the
/// candidate differential `jac`:
/// `sup_b |φ(b) − φ(a) − J · π(a⁻¹ ⋆ b)ᵀ| / d_φ(b, a)` over probes in
/// `I_r(a) ∩ Ω`.
pub fn id_residual<F: GraphMap + ?Sized>(
    phi: &F,
    a: &BasePoint,
    jac: &IntrinsicJacobian,
    r: f64,
    opts: &ProbeOpts,
) -> Result<f64> {
    phi.check_inside(a)?;
    check_shape(phi, jac)?;
    let d = phi.splitting().base_dim();
    let halton = Halton::new(d, opts.seed);
    let phi_a = phi.eval(a)?;
    let a_h = a.horizontal();
    let mut sup = 0.0f64;
    let mut used = 0usize;
    for i in 0..opts.count {
        let Some(b) = offset_point(phi, a, &halton.point(i), r)? else {
            continue;
        };
        let dist = graph_dist(phi, &b, a)?;
        if dist < opts.exclusion {
            continue;
        }
        // π(a⁻¹ ⋆ b) is the horizontal difference of the base points.
        let pi: Vec<f64> = b.horizontal().iter().zip(&a_h).map(|(x, y)| x - y).collect();
        let lin = jac.apply(&pi);
        let phi_b = phi.eval(&b)?;
        let num: f64 = phi_b
            .iter()
            .zip(&phi_a)
            .zip(&lin)
            .map(|((pb, pa), l)| {
                let e = pb - pa - l;
                e * e
            })
            .sum::<f64>()
            .sqrt();
        sup = sup.max(num / dist);
        used += 1;
    }
    if used == 0 {
        return Err(Error::EmptyProbeSet);
    }
    Ok(sup)
}

/// Uniform residual: the same quotient taken over pairs `b, b′ ∈ I_r(a)`,
/// which is the quantity whose decay defines uniform intrinsic
/// differentiability.
pub fn uid_residual<F: GraphMap + ?Sized>(
    phi: &F,
    a: &BasePoint,
    jac: &IntrinsicJacobian,
    r: f64,
    opts: &ProbeOpts,
) -> Result<f64> {
    phi.check_inside(a)?;
    check_shape(phi, jac)?;
    let d = phi.splitting().base_dim();
    let halton = Halton::new(2 * d, opts.seed);
    let mut sup = 0.0f64;
    let mut used = 0usize;
    for i in 0..opts.count {
        let u = halton.point(i);
        let Some(b) = offset_point(phi, a, &u[..d], r)? else {
            continue;
        };
        let Some(b2) = offset_point(phi, a, &u[d..], r)? else {
            continue;
        };
        let dist = graph_dist(phi, &b2, &b)?;
        if dist < opts.exclusion {
            continue;
        }
        let pi: Vec<f64> = b2
            .horizontal()
            .iter()
            .zip(b.horizontal())
            .map(|(x, y)| x - y)
            .collect();
        let lin = jac.apply(&pi);
        let phi_b = phi.eval(&b)?;
        let phi_b2 = phi.eval(&b2)?;
        let num: f64 = phi_b2
            .iter()
            .zip(&phi_b)
            .zip(&lin)
            .map(|((p2, p1), l)| {
                let e = p2 - p1 - l;
                e * e
            })
            .sum::<f64>()
            .sqrt();
        sup = sup.max(num / dist);
        used += 1;
    }
    if used == 0 {
        return Err(Error::EmptyProbeSet);
    }
    Ok(sup)
}

/// Options for the Hölder-modulus pair pools.
#[derive(Debug, Clone, Copy)]
pub struct HolderOpts {
    pub pairs: usize,
    pub seed: u64,
    /// Pair separations are laddered over `levels` dyadic scales, so the
    /// pool covers distances from `r_max` down to `r_max / 2^{levels-1}`.
    pub levels: usize,
}

impl Default for HolderOpts {
    fn default() -> Self {
        HolderOpts {
            pairs: 512,
            seed: 0,
            levels: 8,
        }
    }
}

/// Fixed pair pool inside a window; independent of the query radius so
/// that α(r) is exactly monotone over shrinking r on one pool.
pub(crate) fn pair_pool<F: GraphMap + ?Sized>(
    phi: &F,
    window: &crate::domain::DomainBox,
    opts: &HolderOpts,
) -> Result<Vec<(BasePoint, BasePoint)>> {
    let d = phi.splitting().base_dim();
    if window.dim() != d {
        return Err(Error::LengthMismatch {
            expected: d,
            got: window.dim(),
        });
    }
    let r_max = window.min_side();
    let halton = Halton::new(2 * d, opts.seed.wrapping_add(0x9e3779b9));
    let mut pool = Vec::with_capacity(opts.pairs);
    let mut i = 0usize;
    let budget = opts.pairs * 8;
    while pool.len() < opts.pairs && i < budget {
        let u = halton.point(i);
        let scale = r_max / f64::powi(2.0, (i % opts.levels) as i32);
        let p = window.lerp(&u[..d]);
        let q: Vec<f64> = p
            .iter()
            .zip(&u[d..])
            .map(|(c, v)| c + scale * (2.0 * v - 1.0))
            .collect();
        i += 1;
        if !window.contains(&q) {
            continue;
        }
        let a = BasePoint::from_flat(phi.splitting(), &p)?;
        let b = BasePoint::from_flat(phi.splitting(), &q)?;
        if a.euclid_dist(&b) == 0.0 {
            continue;
        }
        pool.push((a, b));
    }
    if pool.is_empty() {
        return Err(Error::EmptyProbeSet);
    }
    Ok(pool)
}

fn window_inside<F: GraphMap + ?Sized>(
    phi: &F,
    window: &crate::domain::DomainBox,
) -> Result<()> {
    let dom = phi.domain();
    if window.dim() != dom.dim() {
        return Err(Error::LengthMismatch {
            expected: dom.dim(),
            got: window.dim(),
        });
    }
    let contained = window.lo().iter().zip(dom.lo()).all(|(w, d)| w >= d)
        && window.hi().iter().zip(dom.hi()).all(|(w, d)| w <= d);
    if !contained {
        return Err(Error::OutOfDomain {
            what: "window not contained in the graph domain".into(),
        });
    }
    Ok(())
}

/// ½-Hölder modulus α(r): sup of `|φ(a) − φ(b)| / |a − b|^{1/2}` over
/// pool pairs in the window at Euclidean distance ≤ r.
pub fn holder_modulus<F: GraphMap + ?Sized>(
    phi: &F,
    window: &crate::domain::DomainBox,
    r: f64,
    opts: &HolderOpts,
) -> Result<f64> {
    window_inside(phi, window)?;
    let pool = pair_pool(phi, window, opts)?;
    let mut sup = 0.0f64;
    let mut used = 0usize;
    for (a, b) in &pool {
        let dist = a.euclid_dist(b);
        if dist <= 0.0 || dist > r {
            continue;
        }
        let pa = phi.eval(a)?;
        let pb = phi.eval(b)?;
        let gap: f64 = pa
            .iter()
            .zip(&pb)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        sup = sup.max(gap / dist.sqrt());
        used += 1;
    }
    if used == 0 {
        return Err(Error::EmptyProbeSet);
    }
    Ok(sup)
}

/// υ_φ(δ): the ½-Hölder quotient sup over pairs inside the cube
/// `I_δ(center) ∩ Ω` (window shrinking with δ, distance unrestricted).
pub fn upsilon_modulus<F: GraphMap + ?Sized>(
    phi: &F,
    center: &BasePoint,
    delta: f64,
    opts: &HolderOpts,
) -> Result<f64> {
    phi.check_inside(center)?;
    let d = phi.splitting().base_dim();
    let halton = Halton::new(2 * d, opts.seed.wrapping_add(0x517cc1b7));
    let mut sup = 0.0f64;
    let mut used = 0usize;
    for i in 0..opts.pairs {
        let u = halton.point(i);
        let Some(a) = offset_point(phi, center, &u[..d], delta)? else {
            continue;
        };
        let Some(b) = offset_point(phi, center, &u[d..], delta)? else {
            continue;
        };
        let dist = a.euclid_dist(&b);
        if dist == 0.0 {
            continue;
        }
        let pa = phi.eval(&a)?;
        let pb = phi.eval(&b)?;
        let gap: f64 = pa
            .iter()
            .zip(&pb)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        sup = sup.max(gap / dist.sqrt());
        used += 1;
    }
    if used == 0 {
        return Err(Error::EmptyProbeSet);
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainBox;
    use crate::split::{GraphFunction, Splitting};

    fn graph(n: usize, k: usize, r: f64, exprs: &[&str]) -> GraphFunction {
        let s = Splitting::new(n, k).unwrap();
        let dom = DomainBox::new(vec![-r; s.base_dim()], vec![r; s.base_dim()]).unwrap();
        GraphFunction::parse(s, exprs, dom).unwrap()
    }

    fn unit_jac(phi: &GraphFunction) -> IntrinsicJacobian {
        let s = phi.splitting();
        let mut j = IntrinsicJacobian::zeros(s.k(), s.horiz_dim());
        j.set(0, 0, 1.0);
        j
    }

    #[test]
    fn intrinsic_linear_phi_has_zero_residuals() {
        // φ(η, τ) = η with J = [1]: the quotient cancels algebraically.
        let phi = graph(1, 1, 2.0, &["eta1"]);
        let a = BasePoint::from_flat(phi.splitting(), &[0.3, -0.4]).unwrap();
        let jac = unit_jac(&phi);
        let opts = ProbeOpts::default();
        for r in [0.5, 0.25, 0.1] {
            assert!(id_residual(&phi, &a, &jac, r, &opts).unwrap() < 1e-10);
            assert!(uid_residual(&phi, &a, &jac, r, &opts).unwrap() < 1e-10);
        }
    }

    #[test]
    fn constant_phi_zero_jacobian_zero_residuals() {
        let phi = graph(1, 1, 2.0, &["2/5"]);
        let a = BasePoint::from_flat(phi.splitting(), &[0.0, 0.0]).unwrap();
        let jac = IntrinsicJacobian::zeros(1, 1);
        assert_eq!(
            id_residual(&phi, &a, &jac, 0.5, &ProbeOpts::default()).unwrap(),
            0.0
        );
        assert_eq!(
            uid_residual(&phi, &a, &jac, 0.5, &ProbeOpts::default()).unwrap(),
            0.0
        );
    }

    #[test]
    fn smooth_phi_residual_decays_on_halving_schedule() {
        let phi = graph(1, 1, 2.0, &["eta1^2 + tau/2"]);
        let a = BasePoint::from_flat(phi.splitting(), &[0.2, 0.1]).unwrap();
        let jac = crate::intrinsic::jacobian_analytic(&phi, &a).unwrap();
        let opts = ProbeOpts::default();
        let mut prev = f64::INFINITY;
        for r in [0.2, 0.1, 0.05, 0.025] {
            let v = uid_residual(&phi, &a, &jac, r, &opts).unwrap();
            assert!(v <= prev * 1.05, "residual grew: {v} after {prev}");
            prev = v;
        }
    }

    #[test]
    fn empty_probe_set_reported() {
        let phi = graph(1, 1, 1.0, &["0"]);
        let a = BasePoint::from_flat(phi.splitting(), &[0.0, 0.0]).unwrap();
        let jac = IntrinsicJacobian::zeros(1, 1);
        // Zero radius leaves every probe at a itself, excluded by d_φ.
        assert!(matches!(
            id_residual(&phi, &a, &jac, 0.0, &ProbeOpts::default()),
            Err(Error::EmptyProbeSet)
        ));
    }

    #[test]
    fn alpha_bounds_for_linear_phi() {
        // |φ(a) − φ(b)| = |η − η′| ≤ |a − b| forces α(r) ≤ √r.
        let phi = graph(1, 1, 2.0, &["eta1"]);
        let window = DomainBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let opts = HolderOpts::default();
        let mut prev = f64::INFINITY;
        for r in [0.4, 0.2, 0.1, 0.05] {
            let alpha = holder_modulus(&phi, &window, r, &opts).unwrap();
            assert!(alpha <= r.sqrt() + 1e-9, "alpha {alpha} > sqrt {}", r.sqrt());
            assert!(alpha <= prev, "alpha must be monotone on one pool");
            prev = alpha;
        }
    }

    #[test]
    fn alpha_zero_for_constant_phi() {
        let phi = graph(1, 1, 2.0, &["1"]);
        let window = DomainBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(
            holder_modulus(&phi, &window, 0.5, &HolderOpts::default()).unwrap(),
            0.0
        );
        let c = BasePoint::from_flat(phi.splitting(), &[0.0, 0.0]).unwrap();
        assert_eq!(
            upsilon_modulus(&phi, &c, 0.5, &HolderOpts::default()).unwrap(),
            0.0
        );
    }
}
