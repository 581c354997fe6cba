//! Machine-readable diagnostic reports: residual decay schedules, Hölder
//! moduli, and the bundled characterization checks.
//!
//! Verdict thresholds (how fast a residual "should" decay) are
//! configuration, not established fact; every report carries the raw
//! numbers alongside its flags.

use serde::Serialize;

use crate::domain::DomainBox;
use crate::error::{Error, Result};
use crate::sampling::Halton;
use crate::split::{graph_dist, star_inverse, star_product, base_norm_inf, BasePoint, GraphMap};

use super::jacobian::{intrinsic_jacobian, JacobianEstimate};
use super::residual::{holder_modulus, id_residual, pair_pool, uid_residual, upsilon_modulus};
use super::residual::{HolderOpts, ProbeOpts};
use super::{DerivOpts, IntrinsicJacobian, OdeOpts};

/// Which residual the schedule tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ResidualKind {
    Pointwise,
    Uniform,
}

/// Residual sups along a strictly decreasing radius schedule.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub verdict: bool,
}

impl ResidualReport {
    fn new(center: Vec<f64>, radii: Vec<f64>, values: Vec<f64>, slack: f64) -> Result<Self> {
        if radii.is_empty() || radii.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::DegenerateSample(
                "radius schedule must be strictly decreasing".into(),
            ));
        }
        if values.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::DegenerateSample("residuals must be nonnegative".into()));
        }
        let verdict = values
            .windows(2)
            .all(|w| w[1] <= w[0] * (1.0 + slack) + 1e-12);
        Ok(ResidualReport {
            center,
            radii,
            values,
            verdict,
        })
    }
}

/// Runs the chosen residual over a radius schedule; the verdict records
/// whether the values are nonincreasing within the given slack.
pub fn residual_report<F: GraphMap + ?Sized>(
    phi: &F,
    a: &BasePoint,
    jac: &IntrinsicJacobian,
    radii: &[f64],
    kind: ResidualKind,
    probe: &ProbeOpts,
    slack: f64,
) -> Result<ResidualReport> {
    let values = radii
        .iter()
        .map(|&r| match kind {
            ResidualKind::Pointwise => id_residual(phi, a, jac, r, probe),
            ResidualKind::Uniform => uid_residual(phi, a, jac, r, probe),
        })
        .collect::<Result<Vec<_>>>()?;
    ResidualReport::new(a.flat(), radii.to_vec(), values, slack)
}

/// α(r) and υ_φ(δ) schedules plus the empirical Hölder-sandwich bracket
/// `C₁ ‖m′⁻¹ ⋆ m‖² ≤ d_φ ≤ C₂ ‖m′⁻¹ ⋆ m‖^{1/2}` over the sampled window.
#[derive(Debug, Clone, Serialize)]
pub struct HolderReport {
    pub window: DomainBox,
    pub radii: Vec<f64>,
    pub alpha: Vec<f64>,
    pub upsilon: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
}

pub fn holder_report<F: GraphMap + ?Sized>(
    phi: &F,
    window: &DomainBox,
    radii: &[f64],
    opts: &HolderOpts,
) -> Result<HolderReport> {
    if radii.is_empty() || radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::DegenerateSample(
            "radius schedule must be strictly decreasing".into(),
        ));
    }
    let center = BasePoint::from_flat(phi.splitting(), &window.center())?;
    let alpha = radii
        .iter()
        .map(|&r| holder_modulus(phi, window, r, opts))
        .collect::<Result<Vec<_>>>()?;
    let upsilon = radii
        .iter()
        .map(|&r| upsilon_modulus(phi, &center, r, opts))
        .collect::<Result<Vec<_>>>()?;
    // Sandwich bracket over the same pair pool the moduli use.
    let mut c1 = f64::INFINITY;
    let mut c2 = 0.0f64;
    for (a, b) in pair_pool(phi, window, opts)? {
        let d = graph_dist(phi, &a, &b)?;
        let m = base_norm_inf(&star_product(&star_inverse(&b), &a)?);
        if m > 0.0 {
            c1 = c1.min(d / (m * m));
            c2 = c2.max(d / m.sqrt());
        }
    }
    Ok(HolderReport {
        window: window.clone(),
        radii: radii.to_vec(),
        alpha,
        upsilon,
        c1,
        c2,
    })
}

/// Options for the bundled characterization run.
#[derive(Debug, Clone)]
pub struct CharacterizationOpts {
    pub radii: Vec<f64>,
    /// Nodes per axis for the coarse Jacobian-continuity grid; the fine
    /// grid uses `2 * grid_nodes - 1`.
    pub grid_nodes: usize,
    /// Sample points for the curve-independence check.
    pub stability_points: usize,
    pub probe: ProbeOpts,
    pub holder: HolderOpts,
    pub deriv: DerivOpts,
    pub decay_slack: f64,
    pub stability_tol: f64,
}

impl Default for CharacterizationOpts {
    fn default() -> Self {
        CharacterizationOpts {
            radii: vec![0.2, 0.1, 0.05, 0.025],
            grid_nodes: 3,
            stability_points: 5,
            probe: ProbeOpts::default(),
            holder: HolderOpts::default(),
            deriv: DerivOpts::default(),
            decay_slack: 0.05,
            stability_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CharacterizationFlags {
    pub partials_stable: bool,
    pub jacobian_continuous: bool,
    pub uid_decaying: bool,
    pub alpha_decaying: bool,
    /// True when the four equivalent conditions point the same way.
    pub agree: bool,
}

/// Bundle of the four numerically testable characterization conditions.
#[derive(Debug, Clone, Serialize)]
pub struct CharacterizationReport {
    pub center: Vec<f64>,
    /// Max entrywise gap between Jacobians from perturbed solver settings.
    pub partial_spread: f64,
    /// Max Richardson spread reported by the difference quotients.
    pub quotient_spread: f64,
    /// (grid spacing, max adjacent entrywise jump of J^φφ).
    pub jacobian_jumps: Vec<(f64, f64)>,
    pub uid: ResidualReport,
    pub radii: Vec<f64>,
    pub alpha: Vec<f64>,
    pub flags: CharacterizationFlags,
}

fn window_grid(window: &DomainBox, nodes: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = (0..window.dim())
        .map(|a| window.axis_nodes(a, nodes))
        .collect();
    let shape = vec![nodes; window.dim()];
    crate::domain::lattice_indices(&shape)
        .map(|idx| idx.iter().enumerate().map(|(a, &i)| axes[a][i]).collect())
        .collect()
}

fn max_adjacent_jump<F: GraphMap + ?Sized>(
    phi: &F,
    window: &DomainBox,
    nodes: usize,
    deriv: &DerivOpts,
) -> Result<(f64, f64)> {
    let d = window.dim();
    let grid = window_grid(window, nodes);
    let jacs: Vec<IntrinsicJacobian> = grid
        .iter()
        .map(|p| {
            Ok(intrinsic_jacobian(phi, &BasePoint::from_flat(phi.splitting(), p)?, deriv)?.jac)
        })
        .collect::<Result<_>>()?;
    let spacing = (0..d)
        .map(|a| window.side(a) / (nodes - 1) as f64)
        .fold(0.0f64, f64::max);
    // Strides of the row-major lattice.
    let mut strides = vec![1usize; d];
    for a in (0..d.saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * nodes;
    }
    let mut jump = 0.0f64;
    for (flat, jac) in jacs.iter().enumerate() {
        for a in 0..d {
            let coord = flat / strides[a] % nodes;
            if coord + 1 < nodes {
                jump = jump.max(jac.max_abs_diff(&jacs[flat + strides[a]]));
            }
        }
    }
    Ok((spacing, jump))
}

/// Runs (a) curve-independence of the intrinsic partials under perturbed
/// solver settings, (b) a continuity sweep of J^φφ over a grid, (c) the
/// uniform-residual decay schedule and (d) the α(r) decay schedule, then
/// flags agreement among the conditions.
pub fn characterization_report<F: GraphMap + ?Sized>(
    phi: &F,
    window: &DomainBox,
    opts: &CharacterizationOpts,
) -> Result<CharacterizationReport> {
    let s = phi.splitting();
    if window.dim() != s.base_dim() {
        return Err(Error::LengthMismatch {
            expected: s.base_dim(),
            got: window.dim(),
        });
    }
    let center = BasePoint::from_flat(s, &window.center())?;

    // (a) stability across integral-curve realizations.
    let perturbed = DerivOpts {
        h: Some(
            opts.deriv
                .h
                .unwrap_or_else(|| 1e-3 * (1.0 + center.euclid_dist(&BasePoint::origin(s))))
                / 4.0,
        ),
        converge_tol: opts.deriv.converge_tol,
        ode: OdeOpts {
            max_step: opts.deriv.ode.max_step / 2.0,
            ..opts.deriv.ode
        },
    };
    let halton = Halton::new(s.base_dim(), opts.probe.seed.wrapping_add(0x2545f491));
    let mut sample_points = vec![center.clone()];
    let mut i = 0usize;
    while sample_points.len() < opts.stability_points && i < opts.stability_points * 4 {
        let p = window.lerp(&halton.point(i));
        i += 1;
        sample_points.push(BasePoint::from_flat(s, &p)?);
    }
    let mut partial_spread = 0.0f64;
    let mut quotient_spread = 0.0f64;
    let mut center_estimate: Option<JacobianEstimate> = None;
    for (idx, p) in sample_points.iter().enumerate() {
        let e1 = intrinsic_jacobian(phi, p, &opts.deriv)?;
        let e2 = intrinsic_jacobian(phi, p, &perturbed)?;
        partial_spread = partial_spread.max(e1.jac.max_abs_diff(&e2.jac));
        quotient_spread = quotient_spread.max(e1.max_spread.max(e2.max_spread));
        if idx == 0 {
            center_estimate = Some(e1);
        }
    }
    let center_jac = center_estimate.expect("center evaluated").jac;

    // (b) continuity modulus of the Jacobian field at two resolutions.
    let coarse = max_adjacent_jump(phi, window, opts.grid_nodes, &opts.deriv)?;
    let fine = max_adjacent_jump(phi, window, 2 * opts.grid_nodes - 1, &opts.deriv)?;
    let jacobian_jumps = vec![coarse, fine];

    // (c) uniform residual decay around the center.
    let uid = residual_report(
        phi,
        &center,
        &center_jac,
        &opts.radii,
        ResidualKind::Uniform,
        &opts.probe,
        opts.decay_slack,
    )?;

    // (d) α(r) decay.
    let alpha = opts
        .radii
        .iter()
        .map(|&r| holder_modulus(phi, window, r, &opts.holder))
        .collect::<Result<Vec<_>>>()?;

    let partials_stable = partial_spread <= opts.stability_tol;
    // Continuity trend: halving the spacing must not grow the jump beyond
    // slack (a constant field gives 0/0, counted as continuous).
    let jacobian_continuous = fine.1 <= coarse.1 * (1.0 + opts.decay_slack) + 1e-9;
    let uid_decaying = uid.verdict;
    let alpha_decaying = alpha
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + opts.decay_slack) + 1e-12);
    let agree = [jacobian_continuous, uid_decaying, alpha_decaying]
        .iter()
        .all(|f| *f == partials_stable);
    Ok(CharacterizationReport {
        center: center.flat(),
        partial_spread,
        quotient_spread,
        jacobian_jumps,
        uid,
        radii: opts.radii.clone(),
        alpha,
        flags: CharacterizationFlags {
            partials_stable,
            jacobian_continuous,
            uid_decaying,
            alpha_decaying,
            agree,
        },
    })
}
