//! Mollification of level-set functions and the numerical
//! implicit-function pipeline: smooth approximants φ_ε whose intrinsic
//! Jacobians converge together with the functions themselves.

use serde::Serialize;

use crate::domain::{lattice_indices, DomainBox};
use crate::error::{Error, Result};
use crate::expr::{ambient_vars, ExprAst, GridField, ScalarField, Smoothness};
use crate::hgroup::{GroupPoint, HDim};
use crate::intrinsic::{
    intrinsic_jacobian, jacobian_from_levelset, DerivOpts, IntrinsicJacobian, LevelsetOpts,
};
use crate::linalg::Mat;
use crate::split::{embed_i, embed_j, BasePoint, GraphFunction, GraphMap, Splitting, TargetPoint};

/// A k-component defining function f on a box U ⊂ ℝ^{2n+1}; its zero set
/// is the surface of interest.
#[derive(Debug, Clone)]
pub struct LevelSetFunction {
    dim: HDim,
    components: Vec<ScalarField>,
    domain: DomainBox,
    det_threshold: f64,
}

impl LevelSetFunction {
    pub fn new(dim: HDim, components: Vec<ScalarField>, domain: DomainBox) -> Result<Self> {
        let ambient = dim.point_len();
        if domain.dim() != ambient {
            return Err(Error::LengthMismatch {
                expected: ambient,
                got: domain.dim(),
            });
        }
        if components.is_empty() || components.len() > dim.n() {
            return Err(Error::InvalidSplitting {
                n: dim.n(),
                k: components.len(),
            });
        }
        for c in &components {
            if c.arity() != ambient {
                return Err(Error::LengthMismatch {
                    expected: ambient,
                    got: c.arity(),
                });
            }
        }
        Ok(LevelSetFunction {
            dim,
            components,
            domain,
            det_threshold: 1e-8,
        })
    }

    /// Parses k expressions over the ambient variables `x1.., y1.., t`.
    pub fn parse(n: usize, exprs: &[&str], domain: DomainBox) -> Result<Self> {
        let dim = HDim::new(n)?;
        let vars = ambient_vars(n);
        let components = exprs
            .iter()
            .map(|e| ScalarField::parse(e, &vars))
            .collect::<Result<Vec<_>>>()?;
        LevelSetFunction::new(dim, components, domain)
    }

    pub fn with_det_threshold(mut self, thr: f64) -> Self {
        self.det_threshold = thr;
        self
    }

    pub fn dim(&self) -> HDim {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn det_threshold(&self) -> f64 {
        self.det_threshold
    }

    pub fn splitting(&self) -> Splitting {
        Splitting::new(self.dim.n(), self.k()).expect("validated at construction")
    }

    pub fn eval(&self, p: &GroupPoint) -> Result<Vec<f64>> {
        self.components.iter().map(|c| c.eval(p.coords())).collect()
    }

    /// True when every component carries the smooth tag.
    pub fn is_smooth(&self) -> bool {
        self.components
            .iter()
            .all(|c| c.smoothness() == Smoothness::Smooth && c.grid().is_none())
    }
}

/// Newton options for the implicit solve.
#[derive(Debug, Clone, Copy)]
pub struct NewtonOpts {
    /// Target for the Euclidean norm of `f ∘ Φ` at the solution.
    pub tol: f64,
    pub max_iters: usize,
    pub det_threshold: f64,
    /// Finite-difference step for grid-backed f (grid spacing if `None`).
    pub fd_step: Option<f64>,
}

impl Default for NewtonOpts {
    fn default() -> Self {
        NewtonOpts {
            tol: 1e-12,
            max_iters: 50,
            det_threshold: 1e-8,
            fd_step: None,
        }
    }
}

fn frame_block(f: &LevelSetFunction, p: &GroupPoint, fd: Option<f64>) -> Result<Mat> {
    let n = f.dim().n();
    let k = f.k();
    let coords = p.coords();
    let mut rows = Vec::with_capacity(k);
    for c in f.components() {
        let grad = c.gradient(coords, fd)?;
        rows.push(
            (1..=k)
                .map(|j| grad[j - 1] - 0.5 * coords[n + j - 1] * grad[2 * n])
                .collect(),
        );
    }
    Ok(Mat::from_rows(&rows))
}

/// Newton solve for `x ∈ ℝᵏ` with `f(i(m) · j(x)) = 0`. The Newton matrix
/// is exactly Xf at the current graph point: perturbing x along e_i moves
/// the group point along the X_i flow.
pub fn implicit_solve(
    f: &LevelSetFunction,
    m: &BasePoint,
    opts: &NewtonOpts,
    start: Option<&[f64]>,
) -> Result<TargetPoint> {
    let s = f.splitting();
    if m.splitting() != s {
        return Err(Error::InvalidSplitting {
            n: m.splitting().n(),
            k: m.splitting().k(),
        });
    }
    let mut x = match start {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; s.k()],
    };
    let im = embed_i(m);
    for _ in 0..opts.max_iters {
        let p = crate::hgroup::product(&im, &embed_j(s, &TargetPoint::new(x.clone())?)?)?;
        if !f.domain().contains(p.coords()) {
            return Err(Error::OutOfDomain {
                what: "Newton iterate left the level-set domain".into(),
            });
        }
        let fv = f.eval(&p)?;
        let norm = fv.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= opts.tol {
            return TargetPoint::new(x);
        }
        let xf = frame_block(f, &p, opts.fd_step)?;
        let det = xf.det().abs();
        if det < opts.det_threshold {
            return Err(Error::HorizontalDegeneracy { det });
        }
        let dx = xf
            .solve(&fv)
            .ok_or(Error::HorizontalDegeneracy { det })?;
        for i in 0..x.len() {
            x[i] -= dx[i];
        }
    }
    Err(Error::MaxIterations(opts.max_iters))
}

/// The unique continuous parametrization of a level set as an evaluable
/// graph function: every evaluation runs a Newton solve.
#[derive(Debug, Clone)]
pub struct ImplicitGraph {
    f: LevelSetFunction,
    domain: DomainBox,
    opts: NewtonOpts,
}

impl ImplicitGraph {
    pub fn new(f: LevelSetFunction, base_domain: DomainBox, opts: NewtonOpts) -> Result<Self> {
        let s = f.splitting();
        if base_domain.dim() != s.base_dim() {
            return Err(Error::LengthMismatch {
                expected: s.base_dim(),
                got: base_domain.dim(),
            });
        }
        Ok(ImplicitGraph {
            f,
            domain: base_domain,
            opts,
        })
    }

    pub fn levelset(&self) -> &LevelSetFunction {
        &self.f
    }
}

impl GraphMap for ImplicitGraph {
    fn splitting(&self) -> Splitting {
        self.f.splitting()
    }

    fn domain(&self) -> &DomainBox {
        &self.domain
    }

    fn eval(&self, m: &BasePoint) -> Result<Vec<f64>> {
        Ok(implicit_solve(&self.f, m, &self.opts, None)?.h().to_vec())
    }
}

/// Friedrichs mollification of a grid-backed field: discrete convolution
/// with the normalized C^∞ bump `exp(−1/(1−|x|²))` scaled to radius ε,
/// defined on the ε-interior box. Exact on constants by the discrete
/// normalization.
pub fn mollify(field: &ScalarField, eps: f64) -> Result<ScalarField> {
    let grid = field.grid().ok_or_else(|| {
        Error::DegenerateSample("mollify needs a grid-backed field; sample first".into())
    })?;
    let gbox = grid.gbox();
    if !(eps > 0.0) || eps >= 0.5 * gbox.min_side() {
        return Err(Error::EpsilonTooLarge {
            eps,
            min_side: gbox.min_side(),
        });
    }
    let d = gbox.dim();
    let shape = grid.shape().to_vec();
    let spacing: Vec<f64> = (0..d).map(|a| grid.spacing(a)).collect();
    let reach: Vec<usize> = spacing.iter().map(|h| (eps / h).floor() as usize).collect();
    // Interior index window; every output node keeps its full stencil.
    let inner_shape: Vec<usize> = shape
        .iter()
        .zip(&reach)
        .map(|(s, r)| s.saturating_sub(2 * r))
        .collect();
    if inner_shape.iter().any(|&s| s < 2) {
        return Err(Error::EpsilonTooLarge {
            eps,
            min_side: gbox.min_side(),
        });
    }
    // Bump weights over the lattice ball of radius ε, normalized exactly.
    let stencil_shape: Vec<usize> = reach.iter().map(|r| 2 * r + 1).collect();
    let mut offsets = Vec::new();
    let mut weights = Vec::new();
    for idx in lattice_indices(&stencil_shape) {
        let off: Vec<isize> = idx
            .iter()
            .zip(&reach)
            .map(|(&i, &r)| i as isize - r as isize)
            .collect();
        let r2: f64 = off
            .iter()
            .zip(&spacing)
            .map(|(&o, h)| {
                let x = o as f64 * h / eps;
                x * x
            })
            .sum();
        if r2 < 1.0 {
            offsets.push(off);
            weights.push((-1.0 / (1.0 - r2)).exp());
        }
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }

    let inner_lo: Vec<f64> = (0..d)
        .map(|a| gbox.lo()[a] + reach[a] as f64 * spacing[a])
        .collect();
    let inner_hi: Vec<f64> = (0..d)
        .map(|a| gbox.hi()[a] - reach[a] as f64 * spacing[a])
        .collect();
    let inner_box = DomainBox::new(inner_lo, inner_hi)?;

    let mut values = Vec::with_capacity(inner_shape.iter().product());
    for idx in lattice_indices(&inner_shape) {
        let mut acc = 0.0;
        for (off, w) in offsets.iter().zip(&weights) {
            let src: Vec<usize> = idx
                .iter()
                .zip(&reach)
                .zip(off)
                .map(|((&i, &r), &o)| (i as isize + r as isize + o) as usize)
                .collect();
            acc += w * grid.value_at(&src);
        }
        values.push(acc);
    }
    ScalarField::from_grid(GridField::new(inner_box, inner_shape, values)?, field.vars())
}

/// Pulls a graph function back to a level set `f_i = x_i − φ_i ∘ m(p)`
/// over the given ambient box; requires expression-backed components.
/// At graph points Xf is exactly the identity.
pub fn lift_to_levelset(phi: &GraphFunction, ambient: DomainBox) -> Result<LevelSetFunction> {
    let s = phi.splitting();
    let (n, k) = (s.n(), s.k());
    // Base variables as ambient expressions: v_m -> x_m, η_j -> y_j,
    // w_m -> y_m, τ -> t + ½ Σ_{j<=k} x_j y_j.
    let mut subs: Vec<ExprAst> = Vec::with_capacity(s.base_dim());
    for m in k + 1..=n {
        subs.push(ExprAst::Var(m - 1));
    }
    for j in 1..=k {
        subs.push(ExprAst::Var(n + j - 1));
    }
    for m in k + 1..=n {
        subs.push(ExprAst::Var(n + m - 1));
    }
    let mut tau = ExprAst::Var(2 * n);
    for j in 1..=k {
        let term = ExprAst::Binary(
            crate::expr::BinOp::Mul,
            Box::new(ExprAst::Const(0.5)),
            Box::new(ExprAst::Binary(
                crate::expr::BinOp::Mul,
                Box::new(ExprAst::Var(j - 1)),
                Box::new(ExprAst::Var(n + j - 1)),
            )),
        );
        tau = ExprAst::Binary(crate::expr::BinOp::Add, Box::new(tau), Box::new(term));
    }
    subs.push(tau);

    let vars = ambient_vars(n);
    let components = phi
        .components()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let ast = c.ast().ok_or_else(|| {
                Error::DegenerateSample(
                    "lifting needs expression-backed graph components".into(),
                )
            })?;
            let f = ExprAst::Binary(
                crate::expr::BinOp::Sub,
                Box::new(ExprAst::Var(i)),
                Box::new(ast.substitute(&subs)),
            );
            ScalarField::from_ast(f, &vars)
        })
        .collect::<Result<Vec<_>>>()?;
    LevelSetFunction::new(HDim::new(n)?, components, ambient)
}

/// Source surface for the approximation family.
#[derive(Debug, Clone)]
pub enum ApproxSource {
    LevelSet(LevelSetFunction),
    Graph(GraphFunction),
}

/// Options for the approximation pipeline.
#[derive(Debug, Clone)]
pub struct ApproxOpts {
    /// Nodes per axis on the base grid; defaults to 33 for base
    /// dimension ≤ 3 and 9 above.
    pub base_nodes: Option<usize>,
    /// Nodes per axis on the ambient sampling grid; same default rule on
    /// the ambient dimension.
    pub ambient_nodes: Option<usize>,
    pub newton: NewtonOpts,
    pub levelset: LevelsetOpts,
    /// Extra padding added around the graph's bounding box, beyond the
    /// largest ε and the finite-difference stencil.
    pub ambient_pad: f64,
}

impl Default for ApproxOpts {
    fn default() -> Self {
        ApproxOpts {
            base_nodes: None,
            ambient_nodes: None,
            newton: NewtonOpts::default(),
            levelset: LevelsetOpts::default(),
            ambient_pad: 0.05,
        }
    }
}

fn default_nodes(dim: usize) -> usize {
    if dim <= 3 {
        33
    } else {
        9
    }
}

/// Grid metadata echoed into reports.
#[derive(Debug, Clone, Serialize)]
pub struct GridMeta {
    pub base_box: DomainBox,
    pub base_nodes: usize,
    pub ambient_box: DomainBox,
    pub ambient_nodes: usize,
}

/// The family {φ_ε} with its convergence table. Per-ε grids of Jacobians
/// and the φ_ε themselves are kept for further computation but stay out
/// of the serialized summary.
#[derive(Debug, Clone, Serialize)]
pub struct ApproxFamily {
    pub epsilons: Vec<f64>,
    /// sup |φ_ε − φ| over the base grid (null when that ε degenerated).
    pub sup_phi_gap: Vec<Option<f64>>,
    /// sup ‖J^{φ_ε}φ_ε − M‖ entrywise over the base grid.
    pub sup_jac_gap: Vec<Option<f64>>,
    /// Per-ε minimum |det Xf_ε| over the grid; positivity is reported,
    /// never assumed.
    pub min_det_xf: Vec<f64>,
    pub grid: GridMeta,
    #[serde(skip)]
    pub phi_eps: Vec<Option<GraphFunction>>,
    #[serde(skip)]
    pub jac_eps: Vec<Option<Vec<IntrinsicJacobian>>>,
    #[serde(skip)]
    pub reference_phi: Vec<Vec<f64>>,
    #[serde(skip)]
    pub reference_jac: Vec<IntrinsicJacobian>,
    #[serde(skip)]
    pub base_points: Vec<BasePoint>,
}

/// Builds the mollified family over a strictly decreasing ε schedule:
/// sample f on an ambient grid, mollify per ε, re-solve the graph per ε
/// on a common base grid, and tabulate sup gaps of φ_ε and its Jacobian
/// against the reference.
pub fn approx_family(
    source: &ApproxSource,
    epsilons: &[f64],
    base_box: &DomainBox,
    opts: &ApproxOpts,
) -> Result<ApproxFamily> {
    if epsilons.is_empty() || epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::DegenerateSample(
            "epsilon schedule must be strictly decreasing".into(),
        ));
    }
    let eps_max = epsilons[0];

    let splitting = match source {
        ApproxSource::LevelSet(f) => f.splitting(),
        ApproxSource::Graph(g) => g.splitting(),
    };
    if base_box.dim() != splitting.base_dim() {
        return Err(Error::LengthMismatch {
            expected: splitting.base_dim(),
            got: base_box.dim(),
        });
    }
    let base_nodes = opts
        .base_nodes
        .unwrap_or_else(|| default_nodes(splitting.base_dim()));
    let base_points: Vec<BasePoint> = {
        let axes: Vec<Vec<f64>> = (0..base_box.dim())
            .map(|a| base_box.axis_nodes(a, base_nodes))
            .collect();
        lattice_indices(&vec![base_nodes; base_box.dim()])
            .map(|idx| {
                let p: Vec<f64> = idx.iter().enumerate().map(|(a, &i)| axes[a][i]).collect();
                BasePoint::from_flat(splitting, &p)
            })
            .collect::<Result<_>>()?
    };

    // Reference φ on the grid: direct evaluation for a graph source, a
    // Newton solve on the exact f for a level-set source.
    let reference_phi: Vec<Vec<f64>> = match source {
        ApproxSource::Graph(g) => base_points
            .iter()
            .map(|m| g.eval(m))
            .collect::<Result<_>>()?,
        ApproxSource::LevelSet(f) => {
            let mut out = Vec::with_capacity(base_points.len());
            let mut warm: Option<Vec<f64>> = None;
            for m in &base_points {
                let x = implicit_solve(f, m, &opts.newton, warm.as_deref())?;
                warm = Some(x.h().to_vec());
                out.push(x.h().to_vec());
            }
            out
        }
    };

    // Ambient box: bounding box of the graph points, padded by ε_max,
    // the FD stencil and the configured slack.
    let ambient_dim = 2 * splitting.n() + 1;
    let ambient_nodes = opts
        .ambient_nodes
        .unwrap_or_else(|| default_nodes(ambient_dim));
    let graph_points: Vec<GroupPoint> = base_points
        .iter()
        .zip(&reference_phi)
        .map(|(m, h)| {
            crate::hgroup::product(
                &embed_i(m),
                &embed_j(splitting, &TargetPoint::new(h.clone())?)?,
            )
        })
        .collect::<Result<_>>()?;
    let mut lo = vec![f64::INFINITY; ambient_dim];
    let mut hi = vec![f64::NEG_INFINITY; ambient_dim];
    for p in &graph_points {
        for (a, &c) in p.coords().iter().enumerate() {
            lo[a] = lo[a].min(c);
            hi[a] = hi[a].max(c);
        }
    }
    // Margin: mollification radius + FD stencil of the sampled grid.
    let mut pad = vec![0.0f64; ambient_dim];
    for a in 0..ambient_dim {
        let span = (hi[a] - lo[a]).max(0.5);
        let spacing_guess = (span + 2.0 * eps_max) / (ambient_nodes - 1) as f64;
        pad[a] = eps_max + 3.0 * spacing_guess + opts.ambient_pad * span;
        lo[a] -= pad[a];
        hi[a] += pad[a];
    }
    let ambient_box = DomainBox::new(lo, hi)?;

    let exact_f: LevelSetFunction = match source {
        ApproxSource::LevelSet(f) => {
            if !f.domain().contains(&ambient_box.lo().to_vec())
                || !f.domain().contains(&ambient_box.hi().to_vec())
            {
                return Err(Error::OutOfDomain {
                    what: "level-set domain too small for mollification margins".into(),
                });
            }
            f.clone()
        }
        ApproxSource::Graph(g) => lift_to_levelset(g, ambient_box.clone())?,
    };

    // Reference Jacobian: direct level-set route on the exact f when it
    // is smooth, otherwise the finest non-degenerate ε fills in below.
    let reference_jac_direct: Option<Vec<IntrinsicJacobian>> = if exact_f.is_smooth() {
        Some(
            graph_points
                .iter()
                .map(|p| Ok(jacobian_from_levelset(&exact_f, p, &opts.levelset)?.jac))
                .collect::<Result<_>>()?,
        )
    } else {
        None
    };

    // Sample f once on the ambient grid; every ε mollifies these samples.
    let sampled: Vec<ScalarField> = exact_f
        .components()
        .iter()
        .map(|c| c.sample_to_grid(&ambient_box, ambient_nodes))
        .collect::<Result<_>>()?;

    let base_vars = crate::expr::base_vars(splitting.n(), splitting.k());
    let mut phi_eps: Vec<Option<GraphFunction>> = Vec::new();
    let mut jac_eps: Vec<Option<Vec<IntrinsicJacobian>>> = Vec::new();
    let mut min_det_xf = Vec::new();
    for &eps in epsilons {
        let moll: Vec<ScalarField> = sampled
            .iter()
            .map(|c| mollify(c, eps))
            .collect::<Result<_>>()?;
        let inner = moll[0].grid().expect("mollify returns grids").gbox().clone();
        let f_eps = LevelSetFunction::new(exact_f.dim(), moll, inner)?;

        // Per-node Newton with warm starts from the reference solution.
        let mut ok = true;
        let mut min_det = f64::INFINITY;
        let mut values: Vec<Vec<f64>> = Vec::with_capacity(base_points.len());
        let mut jacs: Vec<IntrinsicJacobian> = Vec::with_capacity(base_points.len());
        for (m, warm) in base_points.iter().zip(&reference_phi) {
            match implicit_solve(&f_eps, m, &opts.newton, Some(warm)) {
                Ok(x) => {
                    let p = crate::hgroup::product(
                        &embed_i(m),
                        &embed_j(splitting, &TargetPoint::new(x.h().to_vec())?)?,
                    )?;
                    match jacobian_from_levelset(&f_eps, &p, &opts.levelset) {
                        Ok(lj) => {
                            min_det = min_det.min(lj.delta);
                            values.push(x.h().to_vec());
                            jacs.push(lj.jac);
                        }
                        Err(Error::HorizontalDegeneracy { det }) => {
                            min_det = min_det.min(det);
                            ok = false;
                            break;
                        }
                        Err(e) => return Err(e),
                    }
                }
                Err(Error::HorizontalDegeneracy { det }) => {
                    min_det = min_det.min(det);
                    ok = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        min_det_xf.push(if min_det.is_finite() { min_det } else { 0.0 });
        if !ok {
            phi_eps.push(None);
            jac_eps.push(None);
            continue;
        }
        // Assemble φ_ε as a grid-backed graph function on the base grid.
        let shape = vec![base_nodes; base_box.dim()];
        let comps: Vec<ScalarField> = (0..splitting.k())
            .map(|i| {
                let vals: Vec<f64> = values.iter().map(|v| v[i]).collect();
                ScalarField::from_grid(
                    GridField::new(base_box.clone(), shape.clone(), vals)?,
                    &base_vars,
                )
            })
            .collect::<Result<_>>()?;
        phi_eps.push(Some(GraphFunction::new(
            splitting,
            comps,
            base_box.clone(),
        )?));
        jac_eps.push(Some(jacs));
    }

    // Reference Jacobian fallback: the finest ε that survived.
    let reference_jac: Vec<IntrinsicJacobian> = match reference_jac_direct {
        Some(j) => j,
        None => jac_eps
            .iter()
            .rev()
            .flatten()
            .next()
            .cloned()
            .ok_or(Error::HorizontalDegeneracy { det: 0.0 })?,
    };

    // Convergence table.
    let mut sup_phi_gap = Vec::new();
    let mut sup_jac_gap = Vec::new();
    for (phi_e, jac_e) in phi_eps.iter().zip(&jac_eps) {
        match (phi_e, jac_e) {
            (Some(g), Some(jacs)) => {
                let mut sp = 0.0f64;
                for (m, r) in base_points.iter().zip(&reference_phi) {
                    let v = g.eval(m)?;
                    for (x, y) in v.iter().zip(r) {
                        sp = sp.max((x - y).abs());
                    }
                }
                let mut sj = 0.0f64;
                for (j, r) in jacs.iter().zip(&reference_jac) {
                    sj = sj.max(j.max_abs_diff(r));
                }
                sup_phi_gap.push(Some(sp));
                sup_jac_gap.push(Some(sj));
            }
            _ => {
                sup_phi_gap.push(None);
                sup_jac_gap.push(None);
            }
        }
    }

    Ok(ApproxFamily {
        epsilons: epsilons.to_vec(),
        sup_phi_gap,
        sup_jac_gap,
        min_det_xf,
        grid: GridMeta {
            base_box: base_box.clone(),
            base_nodes,
            ambient_box,
            ambient_nodes,
        },
        phi_eps,
        jac_eps,
        reference_phi,
        reference_jac,
        base_points,
    })
}

/// Direct intrinsic Jacobian of the implicitly defined φ by curve
/// quotients; the cross-check partner of [`jacobian_from_levelset`].
pub fn implicit_intrinsic_jacobian(
    f: &LevelSetFunction,
    base_domain: &DomainBox,
    m: &BasePoint,
    newton: &NewtonOpts,
    deriv: &DerivOpts,
) -> Result<IntrinsicJacobian> {
    let graph = ImplicitGraph::new(f.clone(), base_domain.clone(), *newton)?;
    Ok(intrinsic_jacobian(&graph, m, deriv)?.jac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn box_n(dim: usize, r: f64) -> DomainBox {
        DomainBox::new(vec![-r; dim], vec![r; dim]).unwrap()
    }

    #[test]
    fn implicit_solve_closed_forms() {
        // f = x1 − y1 over ℍ¹: φ(η, τ) = η.
        let f = LevelSetFunction::parse(1, &["x1 - y1"], box_n(3, 4.0)).unwrap();
        let s = f.splitting();
        let m = BasePoint::from_flat(s, &[0.7, -0.3]).unwrap();
        let x = implicit_solve(&f, &m, &NewtonOpts::default(), None).unwrap();
        assert_abs_diff_eq!(x.h()[0], 0.7, epsilon = 1e-12);

        // f = x1: φ ≡ 0.
        let f0 = LevelSetFunction::parse(1, &["x1"], box_n(3, 4.0)).unwrap();
        let x0 = implicit_solve(&f0, &m, &NewtonOpts::default(), None).unwrap();
        assert_eq!(x0.h()[0], 0.0);

        // n=2, k=2 constants.
        let f2 = LevelSetFunction::parse(2, &["x1 - 1/4", "x2 + 1/2"], box_n(5, 4.0)).unwrap();
        let m2 = BasePoint::from_flat(f2.splitting(), &[0.3, -0.2, 0.1]).unwrap();
        let x2 = implicit_solve(&f2, &m2, &NewtonOpts::default(), None).unwrap();
        assert_abs_diff_eq!(x2.h()[0], 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(x2.h()[1], -0.5, epsilon = 1e-12);
    }

    #[test]
    fn implicit_solve_errors() {
        let f = LevelSetFunction::parse(1, &["t"], box_n(3, 4.0)).unwrap();
        let m = BasePoint::from_flat(f.splitting(), &[0.0, 1.0]).unwrap();
        assert!(matches!(
            implicit_solve(&f, &m, &NewtonOpts::default(), None),
            Err(Error::HorizontalDegeneracy { .. })
        ));
    }

    #[test]
    fn mollify_constant_and_linear_exact() {
        let vars = vec!["x".to_string(), "y".to_string()];
        let c = ScalarField::parse("2/3", &vars)
            .unwrap()
            .sample_to_grid(&box_n(2, 1.0), 17)
            .unwrap();
        let mc = mollify(&c, 0.2).unwrap();
        let g = mc.grid().unwrap();
        assert!(g.gbox().lo()[0] > -1.0);
        for p in [[0.0, 0.0], [0.3, -0.4]] {
            assert_abs_diff_eq!(mc.eval(&p).unwrap(), 2.0 / 3.0, epsilon = 1e-12);
        }
        // Symmetric kernel kills odd moments: linear survives on the interior.
        let lin = ScalarField::parse("x - 2*y", &vars)
            .unwrap()
            .sample_to_grid(&box_n(2, 1.0), 33)
            .unwrap();
        let ml = mollify(&lin, 0.15).unwrap();
        for p in [[0.1, 0.2], [-0.3, 0.5], [0.0, 0.0]] {
            assert_abs_diff_eq!(ml.eval(&p).unwrap(), p[0] - 2.0 * p[1], epsilon = 1e-8);
        }
    }

    #[test]
    fn mollify_guards() {
        let vars = vec!["x".to_string()];
        let f = ScalarField::parse("x^2", &vars).unwrap();
        // Expression backing is rejected.
        assert!(mollify(&f, 0.1).is_err());
        let g = f.sample_to_grid(&box_n(1, 1.0), 17).unwrap();
        assert!(matches!(
            mollify(&g, 1.0),
            Err(Error::EpsilonTooLarge { .. })
        ));
    }

    #[test]
    fn mollified_sup_gap_shrinks_for_smooth_field() {
        let vars = vec!["x".to_string(), "y".to_string()];
        let f = ScalarField::parse("sin(x) * cos(y)", &vars).unwrap();
        let g = f.sample_to_grid(&box_n(2, 1.2), 49).unwrap();
        let probe = [[0.0, 0.0], [0.2, -0.1], [-0.35, 0.3]];
        let mut prev = f64::INFINITY;
        for eps in [0.4, 0.2, 0.1] {
            let m = mollify(&g, eps).unwrap();
            let gap = probe
                .iter()
                .map(|p| (m.eval(p).unwrap() - f.eval(p).unwrap()).abs())
                .fold(0.0f64, f64::max);
            assert!(gap <= prev * 1.05 + 1e-12, "gap {gap} after {prev}");
            prev = gap;
        }
    }

    #[test]
    fn lift_recovers_level_set() {
        let s = Splitting::new(2, 1).unwrap();
        let dom = box_n(s.base_dim(), 1.0);
        let phi = GraphFunction::parse(s, &["sin(eta1) + v2*w2 + tau/4"], dom).unwrap();
        let lifted = lift_to_levelset(&phi, box_n(5, 6.0)).unwrap();
        // f ∘ Φ = 0 and Xf = identity at graph points.
        for flat in [[0.3, -0.2, 0.5, 0.1], [0.0, 0.4, -0.3, -0.6]] {
            let m = BasePoint::from_flat(s, &flat).unwrap();
            let p = crate::split::graph_map(&phi, &m).unwrap();
            let fv = lifted.eval(&p).unwrap();
            assert_abs_diff_eq!(fv[0], 0.0, epsilon = 1e-12);
            let xf = frame_block(&lifted, &p, None).unwrap();
            assert_abs_diff_eq!(xf.get(0, 0), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn family_is_exact_for_linear_lift() {
        // φ(η, τ) = η lifts to f = x1 − y1; every φ_ε equals φ on the
        // interior and all gaps vanish.
        let s = Splitting::new(1, 1).unwrap();
        let base = DomainBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let phi = GraphFunction::parse(s, &["eta1"], base.clone()).unwrap();
        let fam = approx_family(
            &ApproxSource::Graph(phi),
            &[0.2, 0.1],
            &base,
            &ApproxOpts {
                base_nodes: Some(9),
                ambient_nodes: Some(17),
                ..ApproxOpts::default()
            },
        )
        .unwrap();
        for gap in fam.sup_phi_gap.iter().flatten() {
            assert!(*gap <= 1e-8, "phi gap {gap}");
        }
        for gap in fam.sup_jac_gap.iter().flatten() {
            assert!(*gap <= 1e-6, "jac gap {gap}");
        }
        for det in &fam.min_det_xf {
            assert!(*det > 0.9);
        }
    }

    #[test]
    fn family_constant_graph_gaps_zero() {
        let s = Splitting::new(1, 1).unwrap();
        let base = box_n(2, 0.5);
        let phi = GraphFunction::constant(s, &[0.3], base.clone()).unwrap();
        let fam = approx_family(
            &ApproxSource::Graph(phi),
            &[0.2, 0.1],
            &base,
            &ApproxOpts {
                base_nodes: Some(5),
                ambient_nodes: Some(17),
                ..ApproxOpts::default()
            },
        )
        .unwrap();
        for gap in fam.sup_phi_gap.iter().flatten() {
            assert!(*gap <= 1e-10);
        }
    }

    #[test]
    fn family_rejects_bad_schedule() {
        let s = Splitting::new(1, 1).unwrap();
        let base = box_n(2, 0.5);
        let phi = GraphFunction::constant(s, &[0.0], base.clone()).unwrap();
        assert!(approx_family(
            &ApproxSource::Graph(phi),
            &[0.1, 0.2],
            &base,
            &ApproxOpts::default()
        )
        .is_err());
    }
}
