//! The nonlinear vector fields W^φ_j on the base and their integral
//! curves (families of exponential maps).
//!
//! Ordering of the 2n − k fields follows the block structure of the base
//! coordinates: for j = 1..n−k the smooth X̃-type fields, for the middle
//! k the ∇^{φ_i} = ∂_{η_i} + φ_i ∂_τ fields with only continuous
//! coefficients, and for the last n−k the smooth Ỹ-type fields.

use crate::error::{Error, Result};
use crate::split::{BasePoint, GraphMap};

/// Coefficient vector of W^φ_j at `p`, in flat base order `(v, η, w, τ)`.
/// `j` is 1-based and runs over `1..=2n−k`.
pub fn w_field<F: GraphMap + ?Sized>(j: usize, phi: &F, p: &BasePoint) -> Result<Vec<f64>> {
    let s = phi.splitting();
    let (n, k, nv) = (s.n(), s.k(), s.nv());
    let max = s.horiz_dim();
    if j == 0 || j > max {
        return Err(Error::FieldIndex { j, max });
    }
    let mut coeff = vec![0.0; s.base_dim()];
    let last = s.base_dim() - 1;
    if j <= n - k {
        // X̃_{j+k} = ∂_{v_{j+k}} − ½ w_{j+k} ∂_τ
        coeff[j - 1] = 1.0;
        coeff[last] = -0.5 * p.w()[j - 1];
    } else if j <= n {
        // ∇^{φ_i} = ∂_{η_i} + φ_i ∂_τ with i = j − (n − k)
        let i = j - (n - k);
        coeff[nv + i - 1] = 1.0;
        coeff[last] = phi.eval(p)?[i - 1];
    } else {
        // Ỹ_m = ∂_{w_m} + ½ v_m ∂_τ with m = j − (n − k)
        let m = j - (n - k);
        coeff[nv + k + (m - k - 1)] = 1.0;
        coeff[last] = 0.5 * p.v()[m - k - 1];
    }
    Ok(coeff)
}

/// True when W^φ_j is one of the middle fields whose τ-coefficient is φ
/// itself (continuous-only regularity).
pub fn is_middle_field(j: usize, n: usize, k: usize) -> bool {
    j > n - k && j <= n
}

/// Solver options for the exponential maps.
#[derive(Debug, Clone, Copy)]
pub struct OdeOpts {
    /// Upper bound for the RK4 step; at least `min_steps` steps are
    /// always taken.
    pub max_step: f64,
    /// Acceptance threshold for the endpoint step-halving comparison;
    /// this, not the formal RK4 order, is the operative guarantee when
    /// the field coefficients are only continuous.
    pub tol: f64,
    /// Number of halvings attempted before accepting the finest run.
    pub max_refine: usize,
    pub min_steps: usize,
}

impl Default for OdeOpts {
    fn default() -> Self {
        OdeOpts {
            max_step: 1e-3,
            tol: 1e-10,
            max_refine: 6,
            min_steps: 4,
        }
    }
}

/// An integrated integral curve of W^φ_j with its solver metadata.
#[derive(Debug, Clone)]
pub struct ExpCurve {
    pub j: usize,
    pub start: BasePoint,
    /// Time-stamped nodes from 0 to `s`, RK4 accepted resolution.
    pub samples: Vec<(f64, BasePoint)>,
    pub step: f64,
    pub tol: f64,
    /// Endpoint gap of the final step-halving comparison.
    pub achieved_gap: f64,
}

impl ExpCurve {
    pub fn endpoint(&self) -> &BasePoint {
        &self.samples.last().unwrap().1
    }
}

/// Writes the W^φ_j coefficients at flat coordinates into `out`,
/// evaluating φ only for the middle fields.
fn w_field_flat<F: GraphMap + ?Sized>(
    j: usize,
    phi: &F,
    flat: &[f64],
    out: &mut [f64],
) -> Result<()> {
    let s = phi.splitting();
    let (n, k, nv) = (s.n(), s.k(), s.nv());
    out.fill(0.0);
    let last = s.base_dim() - 1;
    if j <= n - k {
        out[j - 1] = 1.0;
        out[last] = -0.5 * flat[nv + k + (j - 1)];
    } else if j <= n {
        let i = j - (n - k);
        out[nv + i - 1] = 1.0;
        out[last] = phi.eval_component_flat(i - 1, flat)?;
    } else {
        let m = j - (n - k);
        out[nv + k + (m - k - 1)] = 1.0;
        out[last] = 0.5 * flat[m - k - 1];
    }
    Ok(())
}

fn rk4_sweep<F: GraphMap + ?Sized>(
    j: usize,
    phi: &F,
    b: &BasePoint,
    s: f64,
    steps: usize,
) -> Result<Vec<(f64, BasePoint)>> {
    let sp = phi.splitting();
    let dom = phi.domain();
    let dim = sp.base_dim();
    let h = s / steps as f64;
    let mut y = b.flat();
    let mut out = Vec::with_capacity(steps + 1);
    out.push((0.0, b.clone()));
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    for i in 0..steps {
        let t = i as f64 * h;
        let mut stage = |arg: &[f64], time: f64, out_k: &mut [f64]| -> Result<()> {
            if !dom.contains(arg) {
                return Err(Error::CurveExitedDomain { exit_time: time });
            }
            w_field_flat(j, phi, arg, out_k)
        };
        stage(&y, t, &mut k1)?;
        for c in 0..dim {
            tmp[c] = y[c] + 0.5 * h * k1[c];
        }
        stage(&tmp, t + 0.5 * h, &mut k2)?;
        for c in 0..dim {
            tmp[c] = y[c] + 0.5 * h * k2[c];
        }
        stage(&tmp, t + 0.5 * h, &mut k3)?;
        for c in 0..dim {
            tmp[c] = y[c] + h * k3[c];
        }
        stage(&tmp, t + h, &mut k4)?;
        for c in 0..dim {
            y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        let t_next = (i + 1) as f64 * h;
        if !dom.contains(&y) {
            return Err(Error::CurveExitedDomain { exit_time: t_next });
        }
        out.push((t_next, BasePoint::from_flat(sp, &y)?));
    }
    Ok(out)
}

/// Integrates the integral curve of W^φ_j from `b` over `[0, s]`
/// (classical RK4, fixed step, accepted by step-halving comparison).
pub fn exp_curve<F: GraphMap + ?Sized>(
    j: usize,
    phi: &F,
    b: &BasePoint,
    s: f64,
    opts: &OdeOpts,
) -> Result<ExpCurve> {
    phi.check_inside(b)?;
    let max = phi.splitting().horiz_dim();
    if j == 0 || j > max {
        return Err(Error::FieldIndex { j, max });
    }
    if s == 0.0 {
        return Ok(ExpCurve {
            j,
            start: b.clone(),
            samples: vec![(0.0, b.clone())],
            step: 0.0,
            tol: opts.tol,
            achieved_gap: 0.0,
        });
    }
    if opts.max_step <= f64::EPSILON * s.abs() {
        return Err(Error::StepUnderflow);
    }
    let mut steps = ((s.abs() / opts.max_step).ceil() as usize).max(opts.min_steps);
    let mut coarse = rk4_sweep(j, phi, b, s, steps)?;
    let mut gap = f64::INFINITY;
    for _ in 0..opts.max_refine {
        steps *= 2;
        let fine = rk4_sweep(j, phi, b, s, steps)?;
        gap = coarse
            .last()
            .unwrap()
            .1
            .flat()
            .iter()
            .zip(fine.last().unwrap().1.flat())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        coarse = fine;
        if gap <= opts.tol {
            break;
        }
    }
    Ok(ExpCurve {
        j,
        start: b.clone(),
        samples: coarse,
        step: s / steps as f64,
        tol: opts.tol,
        achieved_gap: gap,
    })
}

/// Endpoint of the integral curve: `exp(s W^φ_j)(b)`.
pub fn exp_map<F: GraphMap + ?Sized>(
    j: usize,
    phi: &F,
    b: &BasePoint,
    s: f64,
    opts: &OdeOpts,
) -> Result<BasePoint> {
    Ok(exp_curve(j, phi, b, s, opts)?.endpoint().clone())
}

/// Closed form for the outer-block curves (straight line in v or w, τ
/// moving linearly since the τ-coefficient is constant along the flow).
/// Returns `None` for the middle fields.
pub fn exp_closed_form<F: GraphMap + ?Sized>(
    j: usize,
    phi: &F,
    b: &BasePoint,
    s: f64,
) -> Result<Option<BasePoint>> {
    let sp = phi.splitting();
    let (n, k) = (sp.n(), sp.k());
    if is_middle_field(j, n, k) {
        return Ok(None);
    }
    let mut flat = b.flat();
    let last = sp.base_dim() - 1;
    if j <= n - k {
        flat[j - 1] += s;
        flat[last] -= 0.5 * b.w()[j - 1] * s;
    } else {
        let m = j - (n - k);
        flat[sp.nv() + k + (m - k - 1)] += s;
        flat[last] += 0.5 * b.v()[m - k - 1] * s;
    }
    Ok(Some(BasePoint::from_flat(sp, &flat)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainBox;
    use crate::split::{GraphFunction, Splitting};
    use approx::assert_abs_diff_eq;

    fn setup(n: usize, k: usize, r: f64, exprs: &[&str]) -> GraphFunction {
        let s = Splitting::new(n, k).unwrap();
        let dom = DomainBox::new(vec![-r; s.base_dim()], vec![r; s.base_dim()]).unwrap();
        GraphFunction::parse(s, exprs, dom).unwrap()
    }

    #[test]
    fn w_field_examples() {
        // n=1, k=1: only ∇^{φ_1}; φ(η,τ) = η at (2, 0) -> (1, 2).
        let phi = setup(1, 1, 4.0, &["eta1"]);
        let p = BasePoint::from_flat(phi.splitting(), &[2.0, 0.0]).unwrap();
        assert_eq!(w_field(1, &phi, &p).unwrap(), vec![1.0, 2.0]);
        assert!(w_field(2, &phi, &p).is_err());
        assert!(w_field(0, &phi, &p).is_err());

        // φ ≡ 0: middle field reduces to ∂_{η}.
        let zero = setup(1, 1, 4.0, &["0"]);
        assert_eq!(w_field(1, &zero, &p).unwrap(), vec![1.0, 0.0]);

        // n=2, k=1: W_1 = X̃_2 has τ-coefficient −½ w_2.
        let phi2 = setup(2, 1, 8.0, &["0"]);
        let q = BasePoint::from_flat(phi2.splitting(), &[0.0, 0.0, 4.0, 0.0]).unwrap();
        assert_eq!(
            w_field(1, &phi2, &q).unwrap(),
            vec![1.0, 0.0, 0.0, -2.0]
        );
        // W_3 = Ỹ_2 has τ-coefficient ½ v_2.
        let q2 = BasePoint::from_flat(phi2.splitting(), &[3.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(w_field(3, &phi2, &q2).unwrap(), vec![0.0, 0.0, 1.0, 1.5]);
    }

    #[test]
    fn exp_map_constant_phi_closed_form() {
        // φ ≡ c: exp(s ∇^φ)(η, τ) = (η + s, τ + c s).
        let phi = setup(1, 1, 4.0, &["0*eta1 + 0*tau + 7/10"]);
        let b = BasePoint::from_flat(phi.splitting(), &[0.25, -0.5]).unwrap();
        let e = exp_map(1, &phi, &b, 0.5, &OdeOpts::default()).unwrap();
        assert_abs_diff_eq!(e.flat()[0], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(e.flat()[1], -0.5 + 0.7 * 0.5, epsilon = 1e-12);
        // s = 0 is the identity.
        let id = exp_map(1, &phi, &b, 0.0, &OdeOpts::default()).unwrap();
        assert_eq!(id, b);
    }

    #[test]
    fn exp_map_outer_block_matches_closed_form() {
        // n=2, k=1, j=1 from (0, 0, 1, 0), s = 1 -> (1, 0, 1, −0.5).
        let phi = setup(2, 1, 4.0, &["sin(eta1) + v2"]);
        let b = BasePoint::from_flat(phi.splitting(), &[0.0, 0.0, 1.0, 0.0]).unwrap();
        let e = exp_map(1, &phi, &b, 1.0, &OdeOpts::default()).unwrap();
        let cf = exp_closed_form(1, &phi, &b, 1.0).unwrap().unwrap();
        assert_eq!(cf.flat(), vec![1.0, 0.0, 1.0, -0.5]);
        for (a, c) in e.flat().iter().zip(cf.flat()) {
            assert_abs_diff_eq!(*a, c, epsilon = 1e-10);
        }
        // Ỹ-type too.
        let e3 = exp_map(3, &phi, &b, 0.7, &OdeOpts::default()).unwrap();
        let cf3 = exp_closed_form(3, &phi, &b, 0.7).unwrap().unwrap();
        for (a, c) in e3.flat().iter().zip(cf3.flat()) {
            assert_abs_diff_eq!(*a, c, epsilon = 1e-10);
        }
        assert!(exp_closed_form(2, &phi, &b, 0.5).unwrap().is_none());
    }

    #[test]
    fn curve_exit_is_reported() {
        let phi = setup(1, 1, 1.0, &["0"]);
        let b = BasePoint::from_flat(phi.splitting(), &[0.9, 0.0]).unwrap();
        match exp_map(1, &phi, &b, 0.5, &OdeOpts::default()) {
            Err(Error::CurveExitedDomain { exit_time }) => {
                assert!(exit_time > 0.0 && exit_time <= 0.5);
            }
            other => panic!("expected exit, got {other:?}"),
        }
    }

    #[test]
    fn curve_samples_satisfy_ode_residual() {
        let phi = setup(1, 1, 4.0, &["eta1^2 + tau/2"]);
        let b = BasePoint::from_flat(phi.splitting(), &[0.2, 0.1]).unwrap();
        let curve = exp_curve(1, &phi, &b, 0.2, &OdeOpts::default()).unwrap();
        assert_eq!(curve.samples[0].1, b);
        assert!(curve.achieved_gap <= 1e-10);
        // Central-difference derivative of the stored samples against the
        // field at interior check nodes.
        let samples = &curve.samples;
        for win in samples.windows(3).step_by(7) {
            let (t0, ref p0) = win[0];
            let (t2, ref p2) = win[2];
            let mid = &win[1].1;
            let dt = t2 - t0;
            let field = w_field(1, &phi, mid).unwrap();
            for c in 0..2 {
                let fd = (p2.flat()[c] - p0.flat()[c]) / dt;
                assert_abs_diff_eq!(fd, field[c], epsilon = 1e-6);
            }
        }
    }
}
