//! The codimension-k area formula: integrate
//! `√(1 + Σ_ℓ Σ_{I ∈ I_ℓ} A_I²)` over the base domain, where the A_I
//! range over all ℓ × ℓ minors of the intrinsic Jacobian with strictly
//! increasing row and column indices.

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;

use crate::approx::LevelSetFunction;
use crate::domain::{lattice_indices, DomainBox};
use crate::error::{Error, Result};
use crate::intrinsic::{
    intrinsic_jacobian, jacobian_from_levelset, DerivOpts, IntrinsicJacobian, LevelsetOpts,
};
use crate::linalg::Mat;
use crate::sampling::Halton;
use crate::split::{graph_map, BasePoint, GraphMap};

/// Number of minors the integrand enumerates: `Σ_ℓ C(cols, ℓ)·C(k, ℓ)`.
pub fn minor_count(k: usize, cols: usize) -> usize {
    fn binom(n: usize, r: usize) -> usize {
        if r > n {
            return 0;
        }
        let mut acc = 1usize;
        for i in 0..r {
            acc = acc * (n - i) / (i + 1);
        }
        acc
    }
    (1..=k).map(|l| binom(cols, l) * binom(k, l)).sum()
}

/// `√(1 + Σ_ℓ Σ_I A_I²)` with each minor evaluated by LU with partial
/// pivoting.
pub fn area_integrand(jac: &IntrinsicJacobian) -> f64 {
    let k = jac.k();
    let cols = jac.cols();
    let mut sum = 0.0;
    for l in 1..=k.min(cols) {
        for rows in (0..k).combinations(l) {
            for cs in (0..cols).combinations(l) {
                let sub = Mat::from_rows(
                    &rows
                        .iter()
                        .map(|&i| cs.iter().map(|&j| jac.get(i, j)).collect())
                        .collect::<Vec<_>>(),
                );
                let d = sub.det();
                sum += d * d;
            }
        }
    }
    (1.0 + sum).sqrt()
}

/// Restriction of the integral to a Borel region 𝒪 ⊂ ℍⁿ.
#[derive(Debug, Clone)]
pub enum RegionFilter {
    All,
    /// Keep base points whose graph point lies in the coordinate box.
    AmbientBox(DomainBox),
}

impl RegionFilter {
    fn keeps(&self, p: &crate::hgroup::GroupPoint) -> bool {
        match self {
            RegionFilter::All => true,
            RegionFilter::AmbientBox(b) => b.contains(p.coords()),
        }
    }
}

/// Where the per-node Jacobian comes from.
pub enum JacobianSource<'a> {
    /// Difference quotients along exponential curves.
    Curves(DerivOpts),
    /// The level-set formula on a supplied defining function.
    LevelSet {
        f: &'a LevelSetFunction,
        opts: LevelsetOpts,
    },
}

/// Quadrature options.
#[derive(Debug, Clone, Copy)]
pub struct QuadOpts {
    /// Simpson nodes per axis (rounded up to odd), used for base
    /// dimension ≤ 3.
    pub nodes: usize,
    /// Quasi-Monte Carlo point count for higher dimensions.
    pub mc_points: usize,
    pub mc_seed: u64,
}

impl Default for QuadOpts {
    fn default() -> Self {
        QuadOpts {
            nodes: 33,
            mc_points: 1 << 16,
            mc_seed: 0xC0FFEE,
        }
    }
}

/// Area computation record.
#[derive(Debug, Clone, Serialize)]
pub struct AreaResult {
    pub value: f64,
    pub rule: String,
    pub eval_nodes: usize,
    pub included_nodes: usize,
    pub integrand_min: f64,
    pub integrand_max: f64,
}

fn node_value<F: GraphMap + ?Sized>(
    phi: &F,
    m: &BasePoint,
    region: &RegionFilter,
    source: &JacobianSource,
) -> Result<Option<f64>> {
    let p = graph_map(phi, m)?;
    if !region.keeps(&p) {
        return Ok(None);
    }
    let jac = match source {
        JacobianSource::Curves(opts) => {
            // Difference-quotient stencils need interior margin; nudge
            // boundary nodes inward by the stencil reach.
            let h = opts.h.unwrap_or_else(|| {
                1e-3 * (1.0 + m.flat().iter().map(|x| x * x).sum::<f64>().sqrt())
            });
            let margin = 2.5 * h;
            let dom = phi.domain();
            let flat: Vec<f64> = m
                .flat()
                .iter()
                .enumerate()
                .map(|(a, &c)| {
                    let lo = dom.lo()[a];
                    let hi = dom.hi()[a];
                    c.clamp(lo + margin.min(0.45 * (hi - lo)), hi - margin.min(0.45 * (hi - lo)))
                })
                .collect();
            let inner = BasePoint::from_flat(phi.splitting(), &flat)?;
            intrinsic_jacobian(phi, &inner, opts)?.jac
        }
        JacobianSource::LevelSet { f, opts } => jacobian_from_levelset(f, &p, opts)?.jac,
    };
    Ok(Some(area_integrand(&jac)))
}

/// Integrates the area integrand over `Ω ∩ Φ⁻¹(𝒪)`: composite Simpson
/// per axis for base dimension ≤ 3, seeded quasi-Monte Carlo above.
pub fn graph_area<F: GraphMap + Sync + ?Sized>(
    phi: &F,
    region: &RegionFilter,
    source: &JacobianSource,
    opts: &QuadOpts,
) -> Result<AreaResult> {
    let domain = phi.domain().clone();
    let d = domain.dim();
    if d <= 3 {
        let nodes = if opts.nodes % 2 == 0 {
            opts.nodes + 1
        } else {
            opts.nodes.max(3)
        };
        let axes: Vec<Vec<f64>> = (0..d).map(|a| domain.axis_nodes(a, nodes)).collect();
        let weight_1d = |i: usize| -> f64 {
            if i == 0 || i == nodes - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            }
        };
        let scale: f64 = (0..d).map(|a| domain.side(a) / (nodes - 1) as f64 / 3.0).product();
        let idxs: Vec<Vec<usize>> = lattice_indices(&vec![nodes; d]).collect();
        let vals: Vec<(f64, Option<f64>)> = idxs
            .par_iter()
            .map(|idx| {
                let flat: Vec<f64> = idx.iter().enumerate().map(|(a, &i)| axes[a][i]).collect();
                let m = BasePoint::from_flat(phi.splitting(), &flat)?;
                let w: f64 = idx.iter().map(|&i| weight_1d(i)).product();
                Ok((w, node_value(phi, &m, region, source)?))
            })
            .collect::<Result<_>>()?;
        let mut acc = 0.0;
        let mut gmin = f64::INFINITY;
        let mut gmax = f64::NEG_INFINITY;
        let mut included = 0usize;
        for (w, v) in &vals {
            if let Some(g) = v {
                acc += w * g;
                gmin = gmin.min(*g);
                gmax = gmax.max(*g);
                included += 1;
            }
        }
        if included == 0 {
            (gmin, gmax) = (0.0, 0.0);
        }
        Ok(AreaResult {
            value: scale * acc,
            rule: "simpson".into(),
            eval_nodes: vals.len(),
            included_nodes: included,
            integrand_min: gmin,
            integrand_max: gmax,
        })
    } else {
        let halton = Halton::new(d, opts.mc_seed);
        let vals: Vec<Option<f64>> = (0..opts.mc_points)
            .into_par_iter()
            .map(|i| {
                let flat = domain.lerp(&halton.point(i));
                let m = BasePoint::from_flat(phi.splitting(), &flat)?;
                node_value(phi, &m, region, source)
            })
            .collect::<Result<_>>()?;
        let mut acc = 0.0;
        let mut gmin = f64::INFINITY;
        let mut gmax = f64::NEG_INFINITY;
        let mut included = 0usize;
        for v in vals.iter().flatten() {
            acc += v;
            gmin = gmin.min(*v);
            gmax = gmax.max(*v);
            included += 1;
        }
        if included == 0 {
            (gmin, gmax) = (0.0, 0.0);
        }
        Ok(AreaResult {
            value: domain.volume() * acc / opts.mc_points as f64,
            rule: "qmc".into(),
            eval_nodes: opts.mc_points,
            included_nodes: included,
            integrand_min: gmin,
            integrand_max: gmax,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::split::{GraphFunction, Splitting};
    use approx::assert_abs_diff_eq;

    #[test]
    fn integrand_closed_forms() {
        // Zero matrix -> 1.
        assert_eq!(area_integrand(&IntrinsicJacobian::zeros(1, 1)), 1.0);
        // k = 1: reduces to the gradient form √(1 + Σ g_i²).
        let j = IntrinsicJacobian::new(vec![vec![3.0, 4.0, 12.0]]).unwrap();
        assert_abs_diff_eq!(
            area_integrand(&j),
            (1.0f64 + 9.0 + 16.0 + 144.0).sqrt(),
            epsilon = 1e-14
        );
        // k = 2, 2x2: √(1 + a²+b²+c²+d² + (ad − bc)²).
        let (a, b, c, d) = (0.7, -1.2, 0.4, 2.0);
        let j2 = IntrinsicJacobian::new(vec![vec![a, b], vec![c, d]]).unwrap();
        let det = a * d - b * c;
        assert_abs_diff_eq!(
            area_integrand(&j2),
            (1.0 + a * a + b * b + c * c + d * d + det * det).sqrt(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn minor_count_audit() {
        // Σ_ℓ C(2n−k, ℓ)·C(k, ℓ) for (n, k) up to (4, 4).
        fn binom(n: usize, r: usize) -> usize {
            if r > n {
                0
            } else {
                (0..r).fold(1, |acc, i| acc * (n - i) / (i + 1))
            }
        }
        for n in 1..=4 {
            for k in 1..=n {
                let cols = 2 * n - k;
                let expect: usize = (1..=k).map(|l| binom(cols, l) * binom(k, l)).sum();
                assert_eq!(minor_count(k, cols), expect, "n={n} k={k}");
                // Identity: Σ_ℓ C(a,ℓ)C(b,ℓ) = C(a+b, b) − 1 (Vandermonde).
                assert_eq!(expect, binom(cols + k, k) - 1);
            }
        }
    }

    #[test]
    fn constant_graph_unit_square() {
        let s = Splitting::new(1, 1).unwrap();
        let dom = DomainBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let phi = GraphFunction::constant(s, &[0.7], dom).unwrap();
        let res = graph_area(
            &phi,
            &RegionFilter::All,
            &JacobianSource::Curves(DerivOpts::default()),
            &QuadOpts { nodes: 9, ..QuadOpts::default() },
        )
        .unwrap();
        assert_abs_diff_eq!(res.value, 1.0, epsilon = 1e-10);
        assert!(res.integrand_min >= 1.0 - 1e-12);
        assert_eq!(res.rule, "simpson");
    }

    #[test]
    fn linear_graph_sqrt2() {
        let s = Splitting::new(1, 1).unwrap();
        let dom = DomainBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let phi = GraphFunction::parse(s, &["eta1"], dom).unwrap();
        let res = graph_area(
            &phi,
            &RegionFilter::All,
            &JacobianSource::Curves(DerivOpts::default()),
            &QuadOpts { nodes: 9, ..QuadOpts::default() },
        )
        .unwrap();
        assert_abs_diff_eq!(res.value, 2.0f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn region_filter_excluding_everything_gives_zero() {
        let s = Splitting::new(1, 1).unwrap();
        let dom = DomainBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let phi = GraphFunction::constant(s, &[0.0], dom).unwrap();
        let far = DomainBox::new(vec![10.0, 10.0, 10.0], vec![11.0, 11.0, 11.0]).unwrap();
        let res = graph_area(
            &phi,
            &RegionFilter::AmbientBox(far),
            &JacobianSource::Curves(DerivOpts::default()),
            &QuadOpts { nodes: 5, ..QuadOpts::default() },
        )
        .unwrap();
        assert_eq!(res.value, 0.0);
        assert_eq!(res.included_nodes, 0);
    }

    #[test]
    fn qmc_used_above_three_dims() {
        // n=2, k=1: base dimension 4 -> quasi-Monte Carlo.
        let s = Splitting::new(2, 1).unwrap();
        let dom = DomainBox::new(vec![0.0; 4], vec![1.0; 4]).unwrap();
        let phi = GraphFunction::constant(s, &[0.0], dom).unwrap();
        let res = graph_area(
            &phi,
            &RegionFilter::All,
            &JacobianSource::Curves(DerivOpts::default()),
            &QuadOpts {
                mc_points: 256,
                ..QuadOpts::default()
            },
        )
        .unwrap();
        assert_eq!(res.rule, "qmc");
        assert_abs_diff_eq!(res.value, 1.0, epsilon = 1e-10);
    }
}
