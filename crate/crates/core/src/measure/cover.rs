//! Premeasure estimators: every reported value is `Σ β_m diam^m` over an
//! explicitly constructed cover of a sampled subset, so it is auditable
//! as a genuine upper bound. No claim of reaching the true infimum is
//! made.
//!
//! Strategies: a sheared homogeneous-box grid for the Hausdorff kind
//! (left translates of one model box, so the diameter is computed once,
//! exactly, at the origin), and a lazy greedy ball cover for the
//! spherical and centered kinds; the centered strategy restricts ball
//! centers to sampled set points.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{lattice_indices, DomainBox};
use crate::error::{Error, Result};
use crate::expr::ScalarField;
use crate::hgroup::{dist_inf, GroupPoint, HDim};
use crate::split::{graph_map, BasePoint, GraphFunction, GraphMap};

use super::{MeasureFamily, MeasureKind};

/// Point source describing the set whose premeasure is estimated.
#[derive(Debug, Clone)]
pub enum SetSampler {
    /// A solid coordinate box in ℝ^{2n+1}.
    AmbientBox { dim: HDim, gbox: DomainBox },
    /// The intrinsic graph Φ(grid) of a graph function.
    Graph(GraphFunction),
    /// A parametric curve with 2n+1 coordinate fields of one parameter.
    Curve {
        dim: HDim,
        components: Vec<ScalarField>,
        t0: f64,
        t1: f64,
    },
    /// Explicit points (degenerate sets, tests).
    Points { dim: HDim, points: Vec<GroupPoint> },
}

/// Densely stored sample coordinates, stride `2n + 1`.
pub struct SampleSet {
    pub ambient: usize,
    pub coords: Vec<f64>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.coords.len() / self.ambient
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.ambient..(i + 1) * self.ambient]
    }
}

/// Sampler and covering options.
#[derive(Debug, Clone, Copy)]
pub struct CoverOpts {
    /// Target samples per ball extent along each axis (horizontal extent
    /// r, vertical extent r²).
    pub density: f64,
    /// Hard cap on the sample count; the vertical spacing is coarsened
    /// first, then the horizontal, until the grid fits.
    pub budget: usize,
}

impl Default for CoverOpts {
    fn default() -> Self {
        CoverOpts {
            density: 8.0,
            budget: 6_000_000,
        }
    }
}

fn grid_axis(lo: f64, hi: f64, spacing: f64) -> Vec<f64> {
    let count = (((hi - lo) / spacing).ceil() as usize).max(1) + 1;
    let h = (hi - lo) / (count - 1) as f64;
    (0..count).map(|i| lo + i as f64 * h).collect()
}

fn fit_axes(
    gbox: &DomainBox,
    vertical_axis: usize,
    r: f64,
    opts: &CoverOpts,
) -> Vec<Vec<f64>> {
    let d = gbox.dim();
    let mut spacing: Vec<f64> = (0..d)
        .map(|a| {
            if a == vertical_axis {
                r * r / opts.density
            } else {
                r / opts.density
            }
        })
        .collect();
    loop {
        let total: usize = (0..d)
            .map(|a| grid_axis(gbox.lo()[a], gbox.hi()[a], spacing[a]).len())
            .product();
        if total <= opts.budget {
            break;
        }
        // Coarsen: vertical first while it is finer than horizontal.
        let grow = if spacing[vertical_axis] < spacing[(vertical_axis + 1) % d] {
            vertical_axis
        } else {
            (0..d)
                .min_by(|&a, &b| spacing[a].total_cmp(&spacing[b]))
                .unwrap()
        };
        spacing[grow] *= 2.0;
    }
    (0..d)
        .map(|a| grid_axis(gbox.lo()[a], gbox.hi()[a], spacing[a]))
        .collect()
}

impl SetSampler {
    pub fn dim(&self) -> HDim {
        match self {
            SetSampler::AmbientBox { dim, .. } => *dim,
            SetSampler::Graph(g) => g.splitting().hdim(),
            SetSampler::Curve { dim, .. } => *dim,
            SetSampler::Points { dim, .. } => *dim,
        }
    }

    /// Produces the sample set at density adapted to covering radius
    /// `r = δ/2`.
    pub fn sample(&self, delta: f64, opts: &CoverOpts) -> Result<SampleSet> {
        let r = 0.5 * delta;
        let ambient = self.dim().point_len();
        match self {
            SetSampler::AmbientBox { gbox, .. } => {
                if gbox.dim() != ambient {
                    return Err(Error::LengthMismatch {
                        expected: ambient,
                        got: gbox.dim(),
                    });
                }
                let axes = fit_axes(gbox, ambient - 1, r, opts);
                let shape: Vec<usize> = axes.iter().map(|a| a.len()).collect();
                let mut coords = Vec::with_capacity(shape.iter().product::<usize>() * ambient);
                for idx in lattice_indices(&shape) {
                    for (a, &i) in idx.iter().enumerate() {
                        coords.push(axes[a][i]);
                    }
                }
                Ok(SampleSet { ambient, coords })
            }
            SetSampler::Graph(g) => {
                let base = g.domain();
                let axes = fit_axes(base, base.dim() - 1, r, opts);
                let shape: Vec<usize> = axes.iter().map(|a| a.len()).collect();
                let mut coords =
                    Vec::with_capacity(shape.iter().product::<usize>() * ambient);
                for idx in lattice_indices(&shape) {
                    let flat: Vec<f64> =
                        idx.iter().enumerate().map(|(a, &i)| axes[a][i]).collect();
                    let m = BasePoint::from_flat(g.splitting(), &flat)?;
                    coords.extend_from_slice(graph_map(g, &m)?.coords());
                }
                Ok(SampleSet { ambient, coords })
            }
            SetSampler::Curve {
                components, t0, t1, ..
            } => {
                if components.len() != ambient {
                    return Err(Error::LengthMismatch {
                        expected: ambient,
                        got: components.len(),
                    });
                }
                let eval = |t: f64| -> Result<GroupPoint> {
                    let c: Vec<f64> = components
                        .iter()
                        .map(|f| f.eval(&[t]))
                        .collect::<Result<_>>()?;
                    GroupPoint::new(c)
                };
                let mut count = 1025usize;
                loop {
                    let pts: Vec<GroupPoint> = (0..count)
                        .map(|i| eval(t0 + (t1 - t0) * i as f64 / (count - 1) as f64))
                        .collect::<Result<_>>()?;
                    let max_gap = pts
                        .windows(2)
                        .map(|w| dist_inf(&w[0], &w[1]).unwrap_or(f64::INFINITY))
                        .fold(0.0f64, f64::max);
                    if max_gap <= r / opts.density || count * 2 > opts.budget {
                        let mut coords = Vec::with_capacity(pts.len() * ambient);
                        for p in &pts {
                            coords.extend_from_slice(p.coords());
                        }
                        return Ok(SampleSet { ambient, coords });
                    }
                    count *= 2;
                }
            }
            SetSampler::Points { points, .. } => {
                let mut coords = Vec::with_capacity(points.len() * ambient);
                for p in points {
                    if p.coords().len() != ambient {
                        return Err(Error::DimensionMismatch {
                            expected: ambient,
                            got: p.coords().len(),
                        });
                    }
                    coords.extend_from_slice(p.coords());
                }
                Ok(SampleSet { ambient, coords })
            }
        }
    }
}

/// Which construction produced the cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CoverStrategy {
    BoxGrid,
    GreedyBalls,
    GreedyBallsOnSet,
}

/// One cover element; boxes are reported through their circumscribed
/// center and half-diameter.
#[derive(Debug, Clone, Serialize)]
pub struct CoverElement {
    pub center: Vec<f64>,
    pub radius: f64,
}

/// An upper-bound δ-premeasure estimate with its auditable cover.
#[derive(Debug, Clone, Serialize)]
pub struct CoveringEstimate {
    pub value: f64,
    pub delta: f64,
    pub cover_size: usize,
    pub family: MeasureFamily,
    pub strategy: CoverStrategy,
    pub samples_used: usize,
    pub cover: Vec<CoverElement>,
}

/// Dumps the cover as CSV with fixed columns `center_1..center_d, radius`.
pub fn write_cover_csv<W: Write>(est: &CoveringEstimate, out: &mut W) -> std::io::Result<()> {
    let d = est.cover.first().map_or(0, |e| e.center.len());
    let header: Vec<String> = (1..=d)
        .map(|i| format!("center_{i}"))
        .chain(std::iter::once("radius".to_string()))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for e in &est.cover {
        let mut row: Vec<String> = e.center.iter().map(|c| format!("{c}")).collect();
        row.push(format!("{}", e.radius));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// `ω(a, b) = Σ_j (a_j b_{j+n} − b_j a_{j+n})` on horizontal vectors.
#[inline]
fn omega(a: &[f64], b: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for j in 0..n {
        s += a[j] * b[j + n] - b[j] * a[j + n];
    }
    s
}

#[inline]
fn ball_contains(c: &[f64], p: &[f64], n: usize, r: f64) -> bool {
    let mut h2 = 0.0;
    for a in 0..2 * n {
        let d = p[a] - c[a];
        h2 += d * d;
        if h2 > r * r {
            return false;
        }
    }
    let v = p[2 * n] - c[2 * n] - 0.5 * omega(&c[..2 * n], &p[..2 * n], n);
    v.abs() <= r * r
}

/// Per-axis extent analysis: axes the sampled set actually spans. Axes
/// with zero extent (a plane or a curve inside a coordinate subspace)
/// spend no diameter budget.
struct AxisProfile {
    /// Horizontal axes with nonzero sample extent.
    active: Vec<bool>,
    /// Midpoint per horizontal axis; exact constant on degenerate axes.
    mid: Vec<f64>,
    active_count: usize,
}

fn axis_profile(samples: &SampleSet, n: usize) -> AxisProfile {
    let mut lo = vec![f64::INFINITY; 2 * n];
    let mut hi = vec![f64::NEG_INFINITY; 2 * n];
    for i in 0..samples.len() {
        let p = samples.point(i);
        for a in 0..2 * n {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let active: Vec<bool> = (0..2 * n).map(|a| hi[a] - lo[a] > 1e-12).collect();
    let mid = (0..2 * n).map(|a| 0.5 * (lo[a] + hi[a])).collect();
    let active_count = active.iter().filter(|b| **b).count();
    AxisProfile {
        active,
        mid,
        active_count,
    }
}

/// Exact d∞-diameter of the model box with per-axis horizontal
/// half-widths `half` and vertical extent `[0, u]`, via corner pairs
/// (both the horizontal term and the vertical term are extremal at
/// corners).
fn model_box_diam(n: usize, half: &[f64], u: f64) -> f64 {
    let d = 2 * n + 1;
    let shape = vec![2usize; d];
    let corners: Vec<Vec<f64>> = lattice_indices(&shape)
        .map(|idx| {
            (0..d)
                .map(|a| {
                    if a < 2 * n {
                        if idx[a] == 0 {
                            -half[a]
                        } else {
                            half[a]
                        }
                    } else if idx[a] == 0 {
                        0.0
                    } else {
                        u
                    }
                })
                .collect()
        })
        .collect();
    let mut diam = 0.0f64;
    for p in &corners {
        for q in &corners {
            let mut h2 = 0.0;
            for a in 0..2 * n {
                let dd = p[a] - q[a];
                h2 += dd * dd;
            }
            let v = p[2 * n] - q[2 * n] - 0.5 * omega(&q[..2 * n], &p[..2 * n], n);
            diam = diam.max(h2.sqrt().max(v.abs().sqrt()));
        }
    }
    diam
}

/// Hausdorff strategy: cover by left translates of one model box with
/// exact diameter ≤ δ. Buckets are the sheared boxes
/// `(K, t₀) · (box × [0, u])`; the diameter is position-independent by
/// left invariance.
fn box_grid_cover(
    samples: &SampleSet,
    n: usize,
    family: MeasureFamily,
    delta: f64,
) -> CoveringEstimate {
    let profile = axis_profile(samples, n);
    // Spread the horizontal diameter budget over the active axes only,
    // then shrink homogeneously until the exact diameter fits.
    let spread = (profile.active_count.max(1) as f64).sqrt();
    let mut s = delta / spread;
    let mut u = delta * delta;
    let half = |s: f64| -> Vec<f64> {
        (0..2 * n)
            .map(|a| if profile.active[a] { 0.5 * s } else { 0.0 })
            .collect()
    };
    let mut diam = model_box_diam(n, &half(s), u);
    while diam > delta {
        s *= 0.97;
        u *= 0.97 * 0.97;
        diam = model_box_diam(n, &half(s), u);
    }
    let mut buckets: HashMap<Vec<i64>, ()> = HashMap::new();
    let mut cover = Vec::new();
    for i in 0..samples.len() {
        let p = samples.point(i);
        let mut key: Vec<i64> = Vec::with_capacity(2 * n + 1);
        let mut center: Vec<f64> = Vec::with_capacity(2 * n);
        for a in 0..2 * n {
            if profile.active[a] {
                let cell = (p[a] / s + 0.5).floor() as i64;
                key.push(cell);
                center.push(cell as f64 * s);
            } else {
                key.push(0);
                center.push(profile.mid[a]);
            }
        }
        let offset: Vec<f64> = (0..2 * n).map(|a| p[a] - center[a]).collect();
        let sheared = p[2 * n] - 0.5 * omega(&center, &offset, n);
        let level = (sheared / u).floor() as i64;
        key.push(level);
        if buckets.insert(key, ()).is_none() {
            let mut c = center.clone();
            c.push((level as f64 + 0.5) * u);
            cover.push(CoverElement {
                center: c,
                radius: 0.5 * diam,
            });
        }
    }
    let value = cover.len() as f64 * family.beta * diam.powf(family.m);
    CoveringEstimate {
        value,
        delta,
        cover_size: cover.len(),
        family,
        strategy: CoverStrategy::BoxGrid,
        samples_used: samples.len(),
        cover,
    }
}

/// Bucketed sample index for the greedy ball strategies.
struct BallGrid<'a> {
    samples: &'a SampleSet,
    n: usize,
    r: f64,
    pitch: f64,
    /// Horizontal cell -> entries (t, sample index) sorted by t.
    columns: HashMap<Vec<i64>, Vec<(f64, u32)>>,
}

impl<'a> BallGrid<'a> {
    fn build(samples: &'a SampleSet, n: usize, r: f64) -> Self {
        let pitch = 0.5 * r;
        let mut columns: HashMap<Vec<i64>, Vec<(f64, u32)>> = HashMap::new();
        for i in 0..samples.len() {
            let p = samples.point(i);
            let key: Vec<i64> = (0..2 * n).map(|a| (p[a] / pitch).floor() as i64).collect();
            columns.entry(key).or_default().push((p[2 * n], i as u32));
        }
        for entries in columns.values_mut() {
            entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        }
        BallGrid {
            samples,
            n,
            r,
            pitch,
            columns,
        }
    }

    /// Visits samples inside the ball around `c`; the visitor returns
    /// how the visit affects the running count.
    fn for_ball<F: FnMut(u32)>(&self, c: &[f64], mut visit: F) {
        let n = self.n;
        let r = self.r;
        let span = (r / self.pitch).ceil() as i64 + 1;
        let base: Vec<i64> = (0..2 * n)
            .map(|a| (c[a] / self.pitch).floor() as i64)
            .collect();
        let mut key = vec![0i64; 2 * n];
        let shape = vec![(2 * span + 1) as usize; 2 * n];
        for idx in lattice_indices(&shape) {
            for a in 0..2 * n {
                key[a] = base[a] + idx[a] as i64 - span;
            }
            let Some(entries) = self.columns.get(&key) else {
                continue;
            };
            // Exact t-window for this column: v = p_t − c_t − ½ω(c, p_h)
            // with ½ω(c, ·) affine in p_h, extremal at column corners.
            let mut wmin = 0.0f64;
            let mut wmax = 0.0f64;
            for a in 0..2 * n {
                // Coefficient of p_a in ½ω(c_h, p_h).
                let coeff = if a < n { -0.5 * c[a + n] } else { 0.5 * c[a - n] };
                let lo = key[a] as f64 * self.pitch;
                let hi = lo + self.pitch;
                if coeff >= 0.0 {
                    wmin += coeff * lo;
                    wmax += coeff * hi;
                } else {
                    wmin += coeff * hi;
                    wmax += coeff * lo;
                }
            }
            let t_lo = c[2 * n] + wmin - r * r;
            let t_hi = c[2 * n] + wmax + r * r;
            let start = entries.partition_point(|e| e.0 < t_lo);
            for &(t, sidx) in &entries[start..] {
                if t > t_hi {
                    break;
                }
                if ball_contains(c, self.samples.point(sidx as usize), n, r) {
                    visit(sidx);
                }
            }
        }
    }

    fn count_uncovered(&self, c: &[f64], covered: &[bool]) -> usize {
        let mut cnt = 0usize;
        self.for_ball(c, |i| {
            if !covered[i as usize] {
                cnt += 1;
            }
        });
        cnt
    }
}

/// Heap entry ordered by (count, then lexicographically smaller center
/// wins ties) for a deterministic greedy.
struct Cand {
    count: usize,
    center: Vec<f64>,
}

impl PartialEq for Cand {
    fn eq(&self, other: &Self) -> bool {
        self.count == other.count && self.center == other.center
    }
}
impl Eq for Cand {}
impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cand {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.count.cmp(&other.count).then_with(|| {
            // Smaller coordinates first on equal counts.
            for (a, b) in other.center.iter().zip(&self.center) {
                match a.total_cmp(b) {
                    std::cmp::Ordering::Equal => continue,
                    ord => return ord,
                }
            }
            std::cmp::Ordering::Equal
        })
    }
}

/// Greedy ball covering: repeatedly place a ball of radius δ/2 at the
/// candidate covering the most uncovered samples (lazy re-evaluation,
/// deterministic tie-break). Candidates are one representative sample
/// per homogeneous bucket, which keeps every sample within reach of some
/// candidate. With `recenter`, a selected ball may shift to the mean of
/// the samples it covers when that improves the count (centers are then
/// no longer set points).
fn greedy_ball_cover(
    samples: &SampleSet,
    n: usize,
    family: MeasureFamily,
    delta: f64,
    recenter: bool,
) -> CoveringEstimate {
    let r = 0.5 * delta;
    let grid = BallGrid::build(samples, n, r);
    let profile = axis_profile(samples, n);
    let mut covered = vec![false; samples.len()];
    let mut uncovered = samples.len();

    // Candidate pool, two layers. (1) One representative sample per
    // sheared bucket of pitch (r/2, r²/2): guarantees every sample stays
    // within reach of some candidate, so the greedy terminates covered.
    let mut rep: HashMap<Vec<i64>, u32> = HashMap::new();
    for i in 0..samples.len() {
        let p = samples.point(i);
        let mut key: Vec<i64> = (0..2 * n)
            .map(|a| (p[a] / (0.5 * r)).floor() as i64)
            .collect();
        let center: Vec<f64> = key
            .iter()
            .map(|&c| (c as f64 + 0.5) * 0.5 * r)
            .collect();
        let offset: Vec<f64> = (0..2 * n).map(|a| p[a] - center[a]).collect();
        let sheared = p[2 * n] - 0.5 * omega(&center, &offset, n);
        key.push((sheared / (0.5 * r * r)).floor() as i64);
        rep.entry(key).or_insert(i as u32);
    }
    // (2) A near-tiling sheared lattice at the ball footprint pitch
    // (2r/√d_eff horizontal on active axes, 2r² vertical): lets the
    // greedy lay down aligned full-count balls instead of drifting.
    let tile_h = 2.0 * r / (profile.active_count.max(1) as f64).sqrt() * 0.999;
    let tile_v = 2.0 * r * r * 0.999;
    // Lattice cell -> (distance to cell center, sample index) so the
    // centered strategy can snap to the best on-set point.
    let mut tiles: HashMap<Vec<i64>, (f64, u32, Vec<f64>)> = HashMap::new();
    for i in 0..samples.len() {
        let p = samples.point(i);
        let mut key: Vec<i64> = Vec::with_capacity(2 * n + 1);
        let mut center: Vec<f64> = Vec::with_capacity(2 * n + 1);
        for a in 0..2 * n {
            if profile.active[a] {
                let cell = (p[a] / tile_h).floor() as i64;
                key.push(cell);
                center.push((cell as f64 + 0.5) * tile_h);
            } else {
                key.push(0);
                center.push(profile.mid[a]);
            }
        }
        let offset: Vec<f64> = (0..2 * n).map(|a| p[a] - center[a]).collect();
        let sheared = p[2 * n] - 0.5 * omega(&center[..2 * n], &offset, n);
        let level = (sheared / tile_v).floor() as i64;
        key.push(level);
        center.push((level as f64 + 0.5) * tile_v);
        let dist2: f64 = (0..2 * n)
            .map(|a| (p[a] - center[a]) * (p[a] - center[a]))
            .sum::<f64>()
            + (sheared - center[2 * n]) * (sheared - center[2 * n]);
        match tiles.entry(key) {
            std::collections::hash_map::Entry::Occupied(mut e) => {
                let cur = e.get();
                if dist2 < cur.0 || (dist2 == cur.0 && (i as u32) < cur.1) {
                    e.insert((dist2, i as u32, center));
                }
            }
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert((dist2, i as u32, center));
            }
        }
    }

    // Phase 1 uses the aligned lattice; phase 2 falls back to the dense
    // representatives for boundary stragglers the lattice sweep missed.
    let mut lattice: Vec<Vec<f64>> = tiles
        .into_values()
        .map(|(_, sidx, center)| {
            if recenter {
                center
            } else {
                samples.point(sidx as usize).to_vec()
            }
        })
        .collect();
    let mut fallback: Vec<Vec<f64>> = rep
        .into_values()
        .map(|i| samples.point(i as usize).to_vec())
        .collect();
    let lex = |a: &Vec<f64>, b: &Vec<f64>| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| *o != std::cmp::Ordering::Equal)
            .unwrap_or(std::cmp::Ordering::Equal)
    };
    lattice.sort_by(&lex);
    lattice.dedup();
    fallback.sort_by(&lex);
    fallback.dedup();

    let build_heap = |cands: Vec<Vec<f64>>,
                      covered: &[bool]|
     -> std::collections::BinaryHeap<Cand> {
        let counts: Vec<usize> = cands
            .par_iter()
            .map(|c| grid.count_uncovered(c, covered))
            .collect();
        let mut heap = std::collections::BinaryHeap::with_capacity(cands.len());
        for (center, &c) in cands.into_iter().zip(&counts) {
            if c > 0 {
                heap.push(Cand { count: c, center });
            }
        }
        heap
    };
    let mut fallback = Some(fallback);
    let mut heap = build_heap(lattice, &covered);

    let mut cover = Vec::new();
    while uncovered > 0 {
        let Some(top) = heap.pop() else {
            break;
        };
        let fresh = grid.count_uncovered(&top.center, &covered);
        if fresh == 0 {
            continue;
        }
        if fresh < top.count {
            heap.push(Cand {
                count: fresh,
                center: top.center,
            });
            continue;
        }
        // Commit; optionally improve the center by the covered mean.
        let mut center = top.center.clone();
        if recenter {
            let mut mean = vec![0.0f64; 2 * n + 1];
            let mut cnt = 0usize;
            grid.for_ball(&center, |i| {
                if !covered[i as usize] {
                    for (m, &c) in mean.iter_mut().zip(samples.point(i as usize)) {
                        *m += c;
                    }
                    cnt += 1;
                }
            });
            if cnt > 0 {
                for m in &mut mean {
                    *m /= cnt as f64;
                }
                if grid.count_uncovered(&mean, &covered) >= fresh {
                    center = mean;
                }
            }
        }
        let mut newly = 0usize;
        grid.for_ball(&center, |i| {
            if !covered[i as usize] {
                covered[i as usize] = true;
                newly += 1;
            }
        });
        debug_assert!(newly > 0);
        uncovered -= newly;
        cover.push(CoverElement {
            center,
            radius: r,
        });
    }
    debug_assert_eq!(uncovered, 0, "greedy cover left samples uncovered");

    let value = cover.len() as f64 * family.beta * delta.powf(family.m);
    CoveringEstimate {
        value,
        delta,
        cover_size: cover.len(),
        family,
        strategy: if recenter {
            CoverStrategy::GreedyBalls
        } else {
            CoverStrategy::GreedyBallsOnSet
        },
        samples_used: samples.len(),
        cover,
    }
}

/// Upper-bound estimate of the m-dimensional δ-premeasure of the sampled
/// set. The strategy follows the family kind. An empty sample set has
/// premeasure zero.
pub fn premeasure_estimate(
    sampler: &SetSampler,
    family: MeasureFamily,
    delta: f64,
    opts: &CoverOpts,
) -> Result<CoveringEstimate> {
    if !(delta > 0.0) {
        return Err(Error::InvalidScale(delta));
    }
    let n = sampler.dim().n();
    let samples = sampler.sample(delta, opts)?;
    if samples.is_empty() {
        return Ok(CoveringEstimate {
            value: 0.0,
            delta,
            cover_size: 0,
            family,
            strategy: match family.kind {
                MeasureKind::Hausdorff => CoverStrategy::BoxGrid,
                MeasureKind::Spherical => CoverStrategy::GreedyBalls,
                MeasureKind::Centered => CoverStrategy::GreedyBallsOnSet,
            },
            samples_used: 0,
            cover: Vec::new(),
        });
    }
    Ok(match family.kind {
        MeasureKind::Hausdorff => box_grid_cover(&samples, n, family, delta),
        MeasureKind::Spherical => greedy_ball_cover(&samples, n, family, delta, true),
        MeasureKind::Centered => greedy_ball_cover(&samples, n, family, delta, false),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::split::Splitting;

    fn family(kind: MeasureKind, m: f64) -> MeasureFamily {
        MeasureFamily::new(kind, m).unwrap()
    }

    #[test]
    fn empty_set_has_zero_premeasure() {
        let sampler = SetSampler::Points {
            dim: HDim::new(1).unwrap(),
            points: vec![],
        };
        let est = premeasure_estimate(
            &sampler,
            family(MeasureKind::Centered, 2.0),
            0.1,
            &CoverOpts::default(),
        )
        .unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.cover_size, 0);
    }

    #[test]
    fn single_point_costs_one_ball() {
        let sampler = SetSampler::Points {
            dim: HDim::new(1).unwrap(),
            points: vec![GroupPoint::new(vec![0.3, -0.2, 0.1]).unwrap()],
        };
        let fam = family(MeasureKind::Spherical, 2.0);
        let mut prev = f64::INFINITY;
        for delta in [0.4, 0.2, 0.1] {
            let est =
                premeasure_estimate(&sampler, fam, delta, &CoverOpts::default()).unwrap();
            assert_eq!(est.cover_size, 1);
            let expect = fam.beta * delta.powf(2.0);
            assert!((est.value - expect).abs() < 1e-12);
            assert!(est.value < prev);
            prev = est.value;
        }
    }

    #[test]
    fn model_box_diam_shrinks_with_pitch() {
        let d1 = model_box_diam(1, &[0.05, 0.05], 0.01);
        let d2 = model_box_diam(1, &[0.025, 0.025], 0.0025);
        assert!(d2 < d1);
        // Near the origin the horizontal diagonal dominates for thin boxes.
        assert!(d1 >= 0.1 * (2.0f64).sqrt() - 1e-12);
    }

    #[test]
    fn vertical_segment_spherical_estimate_bounded_by_axis_ball_oracle() {
        // {(0,0,t) : t ∈ [0,1]} in ℍ¹ with m = 2: an axis ball of radius
        // r covers height 2r², so ⌈1/(2r²)⌉ balls of diameter 2r give the
        // explicit upper bound; the greedy must not exceed 4β₂ + 10%.
        let vars = vec!["s".to_string()];
        let comp = |e: &str| ScalarField::parse(e, &vars).unwrap();
        let sampler = SetSampler::Curve {
            dim: HDim::new(1).unwrap(),
            components: vec![comp("0"), comp("0"), comp("s")],
            t0: 0.0,
            t1: 1.0,
        };
        let fam = family(MeasureKind::Spherical, 2.0);
        for delta in [0.2, 0.1, 0.05] {
            let est =
                premeasure_estimate(&sampler, fam, delta, &CoverOpts::default()).unwrap();
            let oracle = 4.0 * fam.beta * 1.1;
            assert!(
                est.value > 0.0 && est.value <= oracle,
                "delta {delta}: value {} vs oracle {oracle}",
                est.value
            );
        }
    }

    #[test]
    fn chain_on_a_small_box() {
        // H ≤ S ≤ C ≤ 2^m H within slack on a solid box at metric
        // dimension 4.
        let dim = HDim::new(1).unwrap();
        let gbox = DomainBox::new(vec![0.0, 0.0, 0.0], vec![0.5, 0.5, 0.5]).unwrap();
        let sampler = SetSampler::AmbientBox { dim, gbox };
        let m = 4.0;
        let delta = 0.2;
        let opts = CoverOpts::default();
        let h = premeasure_estimate(&sampler, family(MeasureKind::Hausdorff, m), delta, &opts)
            .unwrap()
            .value;
        let s = premeasure_estimate(&sampler, family(MeasureKind::Spherical, m), delta, &opts)
            .unwrap()
            .value;
        let c = premeasure_estimate(&sampler, family(MeasureKind::Centered, m), delta, &opts)
            .unwrap()
            .value;
        let slack = 1.15;
        assert!(h > 0.0);
        assert!(h <= s * slack, "H {h} vs S {s}");
        assert!(s <= c * slack, "S {s} vs C {c}");
        assert!(c <= 2.0f64.powf(m) * h * slack, "C {c} vs 2^m H {h}");
    }

    #[test]
    fn plane_graph_spherical_estimate_near_area() {
        // φ ≡ 0 over [0,1]² in ℍ¹: the graph is a vertical plane with
        // C³-measure 1; the spherical estimate at δ = 0.1 must land
        // within 15%.
        let s = Splitting::new(1, 1).unwrap();
        let dom = DomainBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let phi = GraphFunction::constant(s, &[0.0], dom).unwrap();
        let sampler = SetSampler::Graph(phi);
        let fam = family(MeasureKind::Spherical, 3.0);
        let est = premeasure_estimate(&sampler, fam, 0.1, &CoverOpts::default()).unwrap();
        assert!(
            (est.value - 1.0).abs() <= 0.15,
            "estimate {} not within 15% of 1",
            est.value
        );
    }

    #[test]
    fn cover_csv_has_fixed_columns() {
        let sampler = SetSampler::Points {
            dim: HDim::new(1).unwrap(),
            points: vec![GroupPoint::new(vec![0.0, 0.0, 0.0]).unwrap()],
        };
        let est = premeasure_estimate(
            &sampler,
            family(MeasureKind::Centered, 1.0),
            0.2,
            &CoverOpts::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_cover_csv(&est, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("center_1,center_2,center_3,radius\n"));
        assert_eq!(text.lines().count(), 2);
    }
}
