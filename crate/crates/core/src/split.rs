//! The splitting ℍⁿ = 𝕄 · ℍ with ℍ horizontal of dimension k, the
//! coordinate embeddings `i`, `j`, the inherited ⋆-product on the base,
//! graph maps and the graph distances d_φ, D_φ, ρ_φ.
//!
//! Base coordinates are ordered `(v_{k+1}..v_n, η_1..η_k, w_{k+1}..w_n, τ)`
//! and stored by named block, which keeps the n = k case (empty v and w
//! blocks) free of index arithmetic.

use serde::{Deserialize, Serialize};

use crate::domain::DomainBox;
use crate::error::{Error, Result};
use crate::expr::ScalarField;
use crate::hgroup::{self, GroupPoint, HDim};

/// The pair (n, k) fixing 𝕄 = exp(span(X_{k+1}..X_n, Y_1..Y_n, T)) and
/// ℍ = exp(span(X_1..X_k)).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splitting {
    n: usize,
    k: usize,
}

impl Splitting {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidSplitting { n, k });
        }
        Ok(Splitting { n, k })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn hdim(&self) -> HDim {
        HDim::new(self.n).unwrap()
    }

    /// Topological dimension of the base, `2n + 1 − k`.
    #[inline]
    pub fn base_dim(&self) -> usize {
        2 * self.n + 1 - self.k
    }

    /// Number of horizontal base coordinates, `2n − k`.
    #[inline]
    pub fn horiz_dim(&self) -> usize {
        2 * self.n - self.k
    }

    /// Length of the v and w blocks, `n − k`.
    #[inline]
    pub fn nv(&self) -> usize {
        self.n - self.k
    }
}

/// A point of the base ℝ^{2n+1−k} with named blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasePoint {
    splitting: Splitting,
    v: Vec<f64>,
    eta: Vec<f64>,
    w: Vec<f64>,
    tau: f64,
}

impl BasePoint {
    pub fn new(s: Splitting, v: Vec<f64>, eta: Vec<f64>, w: Vec<f64>, tau: f64) -> Result<Self> {
        if v.len() != s.nv() || w.len() != s.nv() {
            return Err(Error::LengthMismatch {
                expected: s.nv(),
                got: v.len().max(w.len()),
            });
        }
        if eta.len() != s.k() {
            return Err(Error::LengthMismatch {
                expected: s.k(),
                got: eta.len(),
            });
        }
        if !tau.is_finite()
            || v.iter().chain(&eta).chain(&w).any(|c| !c.is_finite())
        {
            return Err(Error::NonFinite);
        }
        Ok(BasePoint {
            splitting: s,
            v,
            eta,
            w,
            tau,
        })
    }

    pub fn origin(s: Splitting) -> Self {
        BasePoint {
            splitting: s,
            v: vec![0.0; s.nv()],
            eta: vec![0.0; s.k()],
            w: vec![0.0; s.nv()],
            tau: 0.0,
        }
    }

    /// Builds from the flat order `(v, η, w, τ)`.
    pub fn from_flat(s: Splitting, coords: &[f64]) -> Result<Self> {
        if coords.len() != s.base_dim() {
            return Err(Error::LengthMismatch {
                expected: s.base_dim(),
                got: coords.len(),
            });
        }
        let nv = s.nv();
        BasePoint::new(
            s,
            coords[..nv].to_vec(),
            coords[nv..nv + s.k()].to_vec(),
            coords[nv + s.k()..nv + s.k() + nv].to_vec(),
            coords[s.base_dim() - 1],
        )
    }

    pub fn splitting(&self) -> Splitting {
        self.splitting
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Flat coordinates `(v, η, w, τ)`.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.splitting.base_dim());
        out.extend_from_slice(&self.v);
        out.extend_from_slice(&self.eta);
        out.extend_from_slice(&self.w);
        out.push(self.tau);
        out
    }

    /// The 2n − k horizontal coordinates `(v, η, w)`; this is the π
    /// projection of the base point.
    pub fn horizontal(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.splitting.horiz_dim());
        out.extend_from_slice(&self.v);
        out.extend_from_slice(&self.eta);
        out.extend_from_slice(&self.w);
        out
    }

    /// Euclidean distance to another base point.
    pub fn euclid_dist(&self, other: &BasePoint) -> f64 {
        self.flat()
            .iter()
            .zip(other.flat())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// A point of the target ℝᵏ ≅ ℍ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetPoint {
    h: Vec<f64>,
}

impl TargetPoint {
    pub fn new(h: Vec<f64>) -> Result<Self> {
        if h.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(TargetPoint { h })
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn norm(&self) -> f64 {
        self.h.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Embedding `i` of the base into ℍⁿ: zero-pads the first k horizontal
/// slots.
pub fn embed_i(m: &BasePoint) -> GroupPoint {
    let s = m.splitting();
    let n = s.n();
    let mut coords = vec![0.0; 2 * n + 1];
    coords[s.k()..n].copy_from_slice(&m.v);
    coords[n..n + s.k()].copy_from_slice(&m.eta);
    coords[n + s.k()..2 * n].copy_from_slice(&m.w);
    coords[2 * n] = m.tau;
    GroupPoint::new(coords).expect("base point entries are finite")
}

/// Embedding `j` of the target into ℍⁿ: `j(h) = (h_1..h_k, 0, …, 0)`.
pub fn embed_j(s: Splitting, h: &TargetPoint) -> Result<GroupPoint> {
    if h.h.len() != s.k() {
        return Err(Error::LengthMismatch {
            expected: s.k(),
            got: h.h.len(),
        });
    }
    let mut coords = vec![0.0; 2 * s.n() + 1];
    coords[..s.k()].copy_from_slice(&h.h);
    GroupPoint::new(coords)
}

/// Unique factorization `p = i(m) · j(h)`; exact by construction:
/// `h_j = p_j` for `j <= k` and `τ_m = p_{2n+1} + ½ Σ_{j<=k} p_j p_{n+j}`.
pub fn split_point(p: &GroupPoint, s: Splitting) -> Result<(BasePoint, TargetPoint)> {
    if p.dim().n() != s.n() {
        return Err(Error::DimensionMismatch {
            expected: 2 * s.n() + 1,
            got: p.coords().len(),
        });
    }
    let n = s.n();
    let k = s.k();
    let c = p.coords();
    let h = TargetPoint::new(c[..k].to_vec())?;
    let mut tau = c[2 * n];
    for j in 0..k {
        tau += 0.5 * c[j] * c[n + j];
    }
    let m = BasePoint::new(
        s,
        c[k..n].to_vec(),
        c[n..n + k].to_vec(),
        c[n + k..2 * n].to_vec(),
        tau,
    )?;
    Ok((m, h))
}

/// The inherited group product on the base, `a ⋆ b = i⁻¹(i(a) · i(b))``.
/// In block form the horizontal parts add and
/// `τ = τ_a + τ_b + σ(v_a, w_a, v_b, w_b)`.
pub fn star_product(a: &BasePoint, b: &BasePoint) -> Result<BasePoint> {
    if a.splitting != b.splitting {
        return Err(Error::InvalidSplitting {
            n: b.splitting.n(),
            k: b.splitting.k(),
        });
    }
    let add = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p + q).collect::<Vec<_>>();
    BasePoint::new(
        a.splitting,
        add(&a.v, &b.v),
        add(&a.eta, &b.eta),
        add(&a.w, &b.w),
        a.tau + b.tau + sigma_term(&a.v, &a.w, &b.v, &b.w)?,
    )
}

/// ⋆-inverse: coordinate negation, as 𝕄 is closed under the group inverse.
pub fn star_inverse(a: &BasePoint) -> BasePoint {
    BasePoint {
        splitting: a.splitting,
        v: a.v.iter().map(|x| -x).collect(),
        eta: a.eta.iter().map(|x| -x).collect(),
        w: a.w.iter().map(|x| -x).collect(),
        tau: -a.tau,
    }
}

/// `σ(v, w, v′, w′) = ½ Σ_{j=k+1}^n (v_j w′_j − v′_j w_j)`.
pub fn sigma_term(v: &[f64], w: &[f64], v2: &[f64], w2: &[f64]) -> Result<f64> {
    let len = v.len();
    if w.len() != len || v2.len() != len || w2.len() != len {
        return Err(Error::LengthMismatch {
            expected: len,
            got: w.len().max(v2.len()).max(w2.len()),
        });
    }
    let mut s = 0.0;
    for j in 0..len {
        s += v[j] * w2[j] - v2[j] * w[j];
    }
    Ok(0.5 * s)
}

/// Homogeneous norm of a base point, i.e. `‖i(m)‖_∞`.
pub fn base_norm_inf(m: &BasePoint) -> f64 {
    let horiz: f64 = m
        .horizontal()
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt();
    horiz.max(m.tau.abs().sqrt())
}

/// Anything that evaluates a k-component φ over a base domain. Implemented
/// by [`GraphFunction`] and by implicit parametrizations backed by a
/// level-set solve.
pub trait GraphMap {
    fn splitting(&self) -> Splitting;
    fn domain(&self) -> &DomainBox;
    /// Component values at `m`; callers pass points inside the domain.
    fn eval(&self, m: &BasePoint) -> Result<Vec<f64>>;

    /// Single component at flat base coordinates `(v, η, w, τ)`; hot
    /// paths (ODE right-hand sides) call this to avoid building points.
    fn eval_component_flat(&self, i: usize, flat: &[f64]) -> Result<f64> {
        let m = BasePoint::from_flat(self.splitting(), flat)?;
        Ok(self.eval(&m)?[i])
    }

    fn check_inside(&self, m: &BasePoint) -> Result<()> {
        if self.domain().contains(&m.flat()) {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                what: "base point outside graph domain".into(),
            })
        }
    }
}

/// φ: Ω ⊂ ℝ^{2n+1−k} → ℝᵏ backed by k scalar fields over a box.
#[derive(Debug, Clone)]
pub struct GraphFunction {
    splitting: Splitting,
    components: Vec<ScalarField>,
    domain: DomainBox,
}

impl GraphFunction {
    pub fn new(s: Splitting, components: Vec<ScalarField>, domain: DomainBox) -> Result<Self> {
        if components.len() != s.k() {
            return Err(Error::LengthMismatch {
                expected: s.k(),
                got: components.len(),
            });
        }
        if domain.dim() != s.base_dim() {
            return Err(Error::LengthMismatch {
                expected: s.base_dim(),
                got: domain.dim(),
            });
        }
        for c in &components {
            if c.arity() != s.base_dim() {
                return Err(Error::LengthMismatch {
                    expected: s.base_dim(),
                    got: c.arity(),
                });
            }
        }
        Ok(GraphFunction {
            splitting: s,
            components,
            domain,
        })
    }

    /// Parses k expressions over the base variables.
    pub fn parse(s: Splitting, exprs: &[&str], domain: DomainBox) -> Result<Self> {
        let vars = crate::expr::base_vars(s.n(), s.k());
        let components = exprs
            .iter()
            .map(|e| ScalarField::parse(e, &vars))
            .collect::<Result<Vec<_>>>()?;
        GraphFunction::new(s, components, domain)
    }

    pub fn constant(s: Splitting, values: &[f64], domain: DomainBox) -> Result<Self> {
        let vars = crate::expr::base_vars(s.n(), s.k());
        let components = values
            .iter()
            .map(|c| ScalarField::constant(*c, &vars))
            .collect();
        GraphFunction::new(s, components, domain)
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }
}

impl GraphMap for GraphFunction {
    fn splitting(&self) -> Splitting {
        self.splitting
    }

    fn domain(&self) -> &DomainBox {
        &self.domain
    }

    fn eval(&self, m: &BasePoint) -> Result<Vec<f64>> {
        let flat = m.flat();
        self.components.iter().map(|c| c.eval(&flat)).collect()
    }

    fn eval_component_flat(&self, i: usize, flat: &[f64]) -> Result<f64> {
        self.components[i].eval(flat)
    }
}

/// Graph map `Φ(m) = i(m) · j(φ(m))`.
pub fn graph_map<F: GraphMap + ?Sized>(phi: &F, m: &BasePoint) -> Result<GroupPoint> {
    phi.check_inside(m)?;
    let h = TargetPoint::new(phi.eval(m)?)?;
    hgroup::product(&embed_i(m), &embed_j(phi.splitting(), &h)?)
}

/// Graph distance d_φ(a, b) in coordinates:
/// `max{ |ξ|, |τ_a − τ_b + Σ_j φ_j(b)(η_{b,j} − η_{a,j}) + σ(v_a,w_a,v_b,w_b)|^{1/2} }`
/// with ξ the stacked horizontal difference a − b.
pub fn graph_dist<F: GraphMap + ?Sized>(phi: &F, a: &BasePoint, b: &BasePoint) -> Result<f64> {
    phi.check_inside(a)?;
    phi.check_inside(b)?;
    let phi_b = phi.eval(b)?;
    let xi: f64 = a
        .horizontal()
        .iter()
        .zip(b.horizontal())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let mut vert = a.tau - b.tau + sigma_term(&a.v, &a.w, &b.v, &b.w)?;
    for j in 0..phi.splitting().k() {
        vert += phi_b[j] * (b.eta[j] - a.eta[j]);
    }
    Ok(xi.max(vert.abs().sqrt()))
}

/// d_φ through its defining expression `‖π_𝕄(Φ(b)⁻¹ · Φ(a))‖_∞`; kept as
/// the independent cross-check of the coordinate formula.
pub fn graph_dist_abstract<F: GraphMap + ?Sized>(
    phi: &F,
    a: &BasePoint,
    b: &BasePoint,
) -> Result<f64> {
    let pa = graph_map(phi, a)?;
    let pb = graph_map(phi, b)?;
    let rel = hgroup::product(&hgroup::inverse(&pb), &pa)?;
    let (m, _) = split_point(&rel, phi.splitting())?;
    Ok(base_norm_inf(&m))
}

/// Symmetrized graph distance `D_φ = ½ (d_φ(a,b) + d_φ(b,a))`.
pub fn sym_graph_dist<F: GraphMap + ?Sized>(
    phi: &F,
    a: &BasePoint,
    b: &BasePoint,
) -> Result<f64> {
    Ok(0.5 * (graph_dist(phi, a, b)? + graph_dist(phi, b, a)?))
}

/// Averaged variant ρ_φ: like d_φ but with `½(φ_j(a) + φ_j(b))` in the
/// vertical term.
pub fn rho_dist<F: GraphMap + ?Sized>(phi: &F, a: &BasePoint, b: &BasePoint) -> Result<f64> {
    phi.check_inside(a)?;
    phi.check_inside(b)?;
    let phi_a = phi.eval(a)?;
    let phi_b = phi.eval(b)?;
    let xi: f64 = a
        .horizontal()
        .iter()
        .zip(b.horizontal())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let mut vert = a.tau - b.tau + sigma_term(&a.v, &a.w, &b.v, &b.w)?;
    for j in 0..phi.splitting().k() {
        vert += 0.5 * (phi_a[j] + phi_b[j]) * (b.eta[j] - a.eta[j]);
    }
    Ok(xi.max(vert.abs().sqrt()))
}

/// Empirical ratio record over a set of sample pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LipschitzReport {
    /// sup |φ(a) − φ(b)| / d_φ(a, b).
    pub lip_sup: f64,
    /// Bracket of ‖m·h‖ / (‖m‖ + ‖h‖); the upper end is at most 1.
    pub c0_inf: f64,
    pub c0_sup: f64,
    /// sup ρ_φ / d_φ.
    pub rho_over_d_sup: f64,
    pub pairs_used: usize,
}

/// Scans sample pairs for the intrinsic Lipschitz quotient, the
/// norm-splitting constant bracket and the ρ_φ/d_φ ratio.
pub fn lipschitz_report<F: GraphMap + ?Sized>(
    phi: &F,
    pairs: &[(BasePoint, BasePoint)],
) -> Result<LipschitzReport> {
    if pairs.is_empty() || pairs.iter().all(|(a, b)| a == b) {
        return Err(Error::DegenerateSample(
            "need at least one pair of distinct sample points".into(),
        ));
    }
    let s = phi.splitting();
    let mut lip: f64 = 0.0;
    let mut c0_inf = f64::INFINITY;
    let mut c0_sup: f64 = 0.0;
    let mut rho_ratio: f64 = 0.0;
    let mut used = 0usize;
    for (a, b) in pairs {
        let d = graph_dist(phi, a, b)?;
        let pa = phi.eval(a)?;
        let pb = phi.eval(b)?;
        if d > 0.0 {
            let gap: f64 = pa
                .iter()
                .zip(&pb)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            lip = lip.max(gap / d);
            rho_ratio = rho_ratio.max(rho_dist(phi, a, b)? / d);
            used += 1;
        }
        for (m, hvals) in [(a, &pb), (b, &pa)] {
            let h = TargetPoint::new((*hvals).clone())?;
            let im = embed_i(m);
            let jh = embed_j(s, &h)?;
            let denom = hgroup::norm_inf(&im) + hgroup::norm_inf(&jh);
            if denom > 0.0 {
                let ratio = hgroup::norm_inf(&hgroup::product(&im, &jh)?) / denom;
                c0_inf = c0_inf.min(ratio);
                c0_sup = c0_sup.max(ratio);
            }
        }
    }
    if used == 0 {
        return Err(Error::DegenerateSample("all pairs at zero d_φ".into()));
    }
    Ok(LipschitzReport {
        lip_sup: lip,
        c0_inf,
        c0_sup,
        rho_over_d_sup: rho_ratio,
        pairs_used: used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn s11() -> Splitting {
        Splitting::new(1, 1).unwrap()
    }

    fn s21() -> Splitting {
        Splitting::new(2, 1).unwrap()
    }

    fn bp(s: Splitting, flat: &[f64]) -> BasePoint {
        BasePoint::from_flat(s, flat).unwrap()
    }

    fn square(s: Splitting, r: f64) -> DomainBox {
        DomainBox::new(vec![-r; s.base_dim()], vec![r; s.base_dim()]).unwrap()
    }

    #[test]
    fn splitting_invariant() {
        assert!(Splitting::new(2, 1).is_ok());
        assert!(Splitting::new(2, 2).is_ok());
        assert!(Splitting::new(2, 3).is_err());
        assert!(Splitting::new(2, 0).is_err());
    }

    #[test]
    fn split_point_examples() {
        // n=2, k=1: p = (2,0,3,0,1) -> h = (2), m = (v2=0, η1=3, w2=0, τ=4).
        let p = GroupPoint::new(vec![2.0, 0.0, 3.0, 0.0, 1.0]).unwrap();
        let (m, h) = split_point(&p, s21()).unwrap();
        assert_eq!(h.h(), &[2.0]);
        assert_eq!(m.flat(), vec![0.0, 3.0, 0.0, 4.0]);
        // n=1, k=1: p = (1,2,0) -> h = (1), m = (η=2, τ=1).
        let q = GroupPoint::new(vec![1.0, 2.0, 0.0]).unwrap();
        let (m1, h1) = split_point(&q, s11()).unwrap();
        assert_eq!(h1.h(), &[1.0]);
        assert_eq!(m1.flat(), vec![2.0, 1.0]);
    }

    #[test]
    fn embed_examples_and_roundtrip() {
        let m = bp(s11(), &[2.0, 3.0]);
        assert_eq!(embed_i(&m).coords(), &[0.0, 2.0, 3.0]);
        let h = TargetPoint::new(vec![5.0]).unwrap();
        assert_eq!(
            embed_j(s21(), &h).unwrap().coords(),
            &[5.0, 0.0, 0.0, 0.0, 0.0]
        );
        // split ∘ embed_i gives back (m, 0).
        let m2 = bp(s21(), &[0.4, -1.0, 2.0, 0.7]);
        let (m3, h3) = split_point(&embed_i(&m2), s21()).unwrap();
        assert_eq!(m3, m2);
        assert_eq!(h3.h(), &[0.0]);
    }

    #[test]
    fn reconstruction_is_exact() {
        let p = GroupPoint::new(vec![0.3, -1.1, 0.8, 2.2, -0.5]).unwrap();
        let (m, h) = split_point(&p, s21()).unwrap();
        let back = hgroup::product(&embed_i(&m), &embed_j(s21(), &h).unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn star_product_examples() {
        let s = s21();
        let a = bp(s, &[1.0, 0.0, 0.0, 0.0]);
        let b = bp(s, &[0.0, 0.0, 1.0, 0.0]);
        let ab = star_product(&a, &b).unwrap();
        assert_eq!(ab.flat(), vec![1.0, 0.0, 1.0, 0.5]);
        let o = BasePoint::origin(s);
        assert_eq!(star_product(&a, &o).unwrap(), a);
        // n = k: the base is abelian.
        let s1 = s11();
        let x = bp(s1, &[0.3, 0.9]);
        let y = bp(s1, &[-0.1, 0.2]);
        let xy = star_product(&x, &y).unwrap();
        assert_abs_diff_eq!(xy.flat()[0], 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(xy.flat()[1], 1.1, epsilon = 1e-15);
    }

    #[test]
    fn star_homomorphism_through_embed() {
        let s = s21();
        let a = bp(s, &[0.7, -0.4, 1.2, 0.3]);
        let b = bp(s, &[-0.2, 0.5, 0.1, -0.8]);
        let lhs = embed_i(&star_product(&a, &b).unwrap());
        let rhs = hgroup::product(&embed_i(&a), &embed_i(&b)).unwrap();
        assert_eq!(lhs, rhs);
        let inv = embed_i(&star_inverse(&a));
        assert_eq!(inv, hgroup::inverse(&embed_i(&a)));
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma_term(&[1.0], &[0.0], &[0.0], &[1.0]).unwrap(), 0.5);
        let v = [0.3, 0.7];
        let w = [1.0, -0.2];
        assert_eq!(sigma_term(&v, &w, &v, &w).unwrap(), 0.0);
        let v2 = [0.1, 0.9];
        let w2 = [0.5, 0.5];
        assert_abs_diff_eq!(
            sigma_term(&v, &w, &v2, &w2).unwrap(),
            -sigma_term(&v2, &w2, &v, &w).unwrap(),
            epsilon = 1e-15
        );
        assert!(sigma_term(&v, &w, &[0.1], &w2).is_err());
    }

    #[test]
    fn graph_map_examples() {
        let s = s11();
        let dom = square(s, 2.0);
        let zero = GraphFunction::constant(s, &[0.0], dom.clone()).unwrap();
        let m = bp(s, &[0.5, -0.25]);
        assert_eq!(graph_map(&zero, &m).unwrap(), embed_i(&m));

        let phi = GraphFunction::parse(s, &["eta1"], dom).unwrap();
        let m1 = bp(s, &[1.0, 0.0]);
        assert_eq!(
            graph_map(&phi, &m1).unwrap().coords(),
            &[1.0, 1.0, -0.5]
        );
        // Round trip through split_point.
        let (m2, h2) = split_point(&graph_map(&phi, &m1).unwrap(), s).unwrap();
        assert_eq!(m2, m1);
        assert_eq!(h2.h(), &[1.0]);
        // Outside the domain.
        let far = bp(s, &[5.0, 0.0]);
        assert!(graph_map(&phi, &far).is_err());
    }

    #[test]
    fn graph_dist_examples() {
        let s = s11();
        let dom = square(s, 2.0);
        let zero = GraphFunction::constant(s, &[0.0], dom.clone()).unwrap();
        let a = bp(s, &[0.3, 0.8]);
        assert_eq!(graph_dist(&zero, &a, &a).unwrap(), 0.0);
        let b = bp(s, &[-0.4, 0.1]);
        let expect = (0.3f64 + 0.4).max(0.7f64.sqrt());
        assert_abs_diff_eq!(graph_dist(&zero, &a, &b).unwrap(), expect, epsilon = 1e-15);

        let one = GraphFunction::constant(s, &[1.0], dom).unwrap();
        let p = bp(s, &[0.0, 0.0]);
        let q = bp(s, &[1.0, 0.0]);
        // max{1, |0 - 0 + 1·(0 - 1)... vertical = τ_a − τ_b + φ(b)(η_b − η_a) = 0 + 1·1 = 1.
        assert_abs_diff_eq!(graph_dist(&one, &q, &p).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(graph_dist(&one, &p, &q).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn coordinate_formula_matches_abstract_definition() {
        let s = s21();
        let dom = square(s, 3.0);
        let phi =
            GraphFunction::parse(s, &["sin(eta1) + v2*w2 + tau/4"], dom).unwrap();
        let pts = [
            bp(s, &[0.3, -0.7, 1.1, 0.4]),
            bp(s, &[-0.2, 0.6, -0.5, -1.0]),
            bp(s, &[1.4, 0.2, 0.0, 2.2]),
        ];
        for a in &pts {
            for b in &pts {
                let coord = graph_dist(&phi, a, b).unwrap();
                let abs = graph_dist_abstract(&phi, a, b).unwrap();
                assert_abs_diff_eq!(coord, abs, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sym_dist_bounds() {
        let s = s11();
        let dom = square(s, 2.0);
        let phi = GraphFunction::parse(s, &["eta1^2 + tau/2"], dom.clone()).unwrap();
        let a = bp(s, &[0.4, -0.3]);
        let b = bp(s, &[-0.8, 0.9]);
        assert_eq!(sym_graph_dist(&phi, &a, &a).unwrap(), 0.0);
        let d = graph_dist(&phi, &a, &b).unwrap();
        let dd = sym_graph_dist(&phi, &a, &b).unwrap();
        assert!(d <= 2.0 * dd + 1e-15);
        // For constant φ the symmetrized and one-sided distances agree.
        let c = GraphFunction::constant(s, &[0.7], dom).unwrap();
        assert_abs_diff_eq!(
            graph_dist(&c, &a, &b).unwrap(),
            sym_graph_dist(&c, &a, &b).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn rho_examples() {
        let s = s11();
        let dom = square(s, 2.0);
        let c = GraphFunction::constant(s, &[0.4], dom.clone()).unwrap();
        let a = bp(s, &[0.4, -0.3]);
        let b = bp(s, &[-0.8, 0.9]);
        assert_eq!(rho_dist(&c, &a, &a).unwrap(), 0.0);
        // Constant φ: averaged and one-sided coincide.
        assert_abs_diff_eq!(
            rho_dist(&c, &a, &b).unwrap(),
            graph_dist(&c, &a, &b).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn lipschitz_report_basics() {
        let s = s11();
        let dom = square(s, 1.0);
        let c = GraphFunction::constant(s, &[0.3], dom.clone()).unwrap();
        let a = bp(s, &[0.2, 0.1]);
        let b = bp(s, &[-0.5, 0.6]);
        let rep = lipschitz_report(&c, &[(a.clone(), b.clone())]).unwrap();
        assert_eq!(rep.lip_sup, 0.0);
        assert!(rep.c0_sup <= 1.0 + 1e-12);
        assert!(rep.c0_inf > 0.0);
        assert!(lipschitz_report(&c, &[(a.clone(), a.clone())]).is_err());

        let phi = GraphFunction::parse(s, &["eta1"], dom).unwrap();
        let rep2 = lipschitz_report(&phi, &[(a, b)]).unwrap();
        assert!(rep2.lip_sup.is_finite() && rep2.lip_sup > 0.0);
    }
}
