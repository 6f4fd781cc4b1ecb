//! Entropy-number calculus for ellipsoids, covering-number bounds
//! (volumetric and constructive), entropy sequences, sampled Gelfand bounds,
//! mean width and mean norm.
//!
//! Every covering quantity is carried as an interval with the method that
//! produced each endpoint.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::{BodyHandle, EllipsoidBody};
use crate::dd::BitSet;
use crate::error::{GeomError, Result};
use crate::linalg::{distance_to_hull, inverse, sym_eigen, unit_ball_volume, Matrix, Vector};
use crate::sampling::{ball_point, mean_stderr, sphere_point, stream_rng};
use crate::subspace::{section, Subspace};
use crate::volume::{mc_volume_in_ball, volume};

/// Semi-axis lengths `λ_1 ≥ … ≥ λ_n > 0` of an ellipsoid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidSpectrum {
    pub n: usize,
    pub eigenvalues: Vec<f64>,
}

impl EllipsoidSpectrum {
    /// Sorts descending; all values must be positive.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(GeomError::InvalidArgument("spectrum entries must be positive and finite".into()));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(EllipsoidSpectrum { n: values.len(), eigenvalues: values })
    }

    pub fn identity(n: usize) -> Self {
        EllipsoidSpectrum { n, eigenvalues: vec![1.0; n] }
    }

    pub fn of(e: &EllipsoidBody) -> Self {
        EllipsoidSpectrum { n: e.n, eigenvalues: e.semiaxes() }
    }

    /// `ln ∏_{j≤l} λ_j` for `l = 0..=n`.
    fn log_prefix(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        for v in &self.eigenvalues {
            out.push(out.last().unwrap() + v.ln());
        }
        out
    }

    /// `(∏_{j≤l} λ_j)^{1/l}`.
    pub fn geometric_prefix(&self, l: usize) -> f64 {
        (self.log_prefix()[l] / l as f64).exp()
    }
}

/// `φ_k` with the bracket `φ_k ≤ e_{k+1}(Q, B_2^n) ≤ 6φ_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiValue {
    pub k: u32,
    pub phi: f64,
    pub argmax_l: usize,
    pub entropy_lower: f64,
    pub entropy_upper: f64,
}

/// `sup_{1≤l≤n} 2^{-k/l} (∏_{j≤l} λ_j)^{1/l}`, evaluated in log space.
pub fn phi_k(spec: &EllipsoidSpectrum, k: u32) -> PhiValue {
    phi_k_upto(spec, k, spec.n)
}

/// Same supremum restricted to `l ≤ lmax`.
pub fn phi_k_upto(spec: &EllipsoidSpectrum, k: u32, lmax: usize) -> PhiValue {
    let lp = spec.log_prefix();
    // Each candidate is 2^{-k/l} times a geometric mean; the mean is formed
    // in log space, the dyadic factor directly so that flat spectra are exact.
    let (argmax_l, phi) = (1..=lmax.clamp(1, spec.n))
        .map(|l| (l, 2f64.powf(-(k as f64) / l as f64) * (lp[l] / l as f64).exp()))
        .fold((1, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    PhiValue { k, phi, argmax_l, entropy_lower: phi, entropy_upper: 6.0 * phi }
}

/// Largest and smallest `l`-dimensional projection (equivalently section)
/// volumes of the ellipsoid `T B_2^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionExtremes {
    pub l: usize,
    pub max: f64,
    pub min: f64,
}

pub fn max_projection_volume(spec: &EllipsoidSpectrum, l: usize) -> Result<ProjectionExtremes> {
    if l == 0 || l > spec.n {
        return Err(GeomError::InvalidArgument(format!("projection dimension {l} outside 1..={}", spec.n)));
    }
    let bl = unit_ball_volume(l);
    let top: f64 = spec.eigenvalues[..l].iter().product();
    let bottom: f64 = spec.eigenvalues[spec.n - l..].iter().product();
    Ok(ProjectionExtremes { l, max: top * bl, min: bottom * bl })
}

/// Polynomial regularity of a spectrum: the least `C` with
/// `(∏_{j≤l} λ_j)^{1/l} ≤ C (n/l)^γ` for all `l`, and the covering bound it implies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidRegularity {
    pub n: usize,
    pub gamma: f64,
    pub c: f64,
    /// Smallest `t` for which the bound applies: `6C / e^γ`.
    pub threshold: f64,
}

impl EllipsoidRegularity {
    /// `ln N(Q, tB_2^n) ≤ γ (6C)^{1/γ} n / t^{1/γ}`, or `None` below the threshold.
    pub fn log_covering_bound(&self, t: f64) -> Option<f64> {
        (t >= self.threshold).then(|| self.gamma * (6.0 * self.c).powf(1.0 / self.gamma) * self.n as f64 / t.powf(1.0 / self.gamma))
    }
}

pub fn ellipsoid_regularity(spec: &EllipsoidSpectrum, gamma: f64) -> Result<EllipsoidRegularity> {
    if !(gamma > 0.0) {
        return Err(GeomError::InvalidArgument("regularity exponent must be positive".into()));
    }
    let n = spec.n as f64;
    let c = (1..=spec.n)
        .map(|l| spec.geometric_prefix(l) / (n / l as f64).powf(gamma))
        .fold(0.0, f64::max);
    Ok(EllipsoidRegularity { n: spec.n, gamma, c, threshold: 6.0 * c / gamma.exp() })
}

// ---------------------------------------------------------------------------
// Covering numbers

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMethod {
    Exact,
    MonteCarlo,
    Greedy,
    Volumetric,
    Packing,
}

/// Sample budget and seed for the sampled bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverOptions {
    pub samples: usize,
    pub seed: u64,
}

impl Default for CoverOptions {
    fn default() -> Self {
        CoverOptions { samples: 100_000, seed: 0 }
    }
}

/// Volumetric bracket for `N(K, tL)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveringBound {
    pub t: f64,
    pub lower: f64,
    pub upper: f64,
    pub upper_method: BoundMethod,
    /// Standard error of the sampled sum volume ratio (0 when exact).
    pub stderr: f64,
}

/// `L ∩ (-L)` for a body with the origin inside.
fn symmetric_part(l: &BodyHandle) -> Result<BodyHandle> {
    if let Some(e) = l.ellipsoid() {
        if !e.is_centered(l.tolerances().dedup) {
            return Err(GeomError::UnsupportedRepresentation(
                "translate the ellipsoid to the origin before covering by it".into(),
            ));
        }
        return Ok(l.clone());
    }
    l.symmetric_intersection()
}

/// `|A + rB_2^n|` by sampling in a bounding ball; `A` polytope or ellipsoid.
fn ball_sum_volume(a: &BodyHandle, r: f64, opts: CoverOptions) -> Result<(f64, f64)> {
    if let Some(e) = a.ellipsoid() {
        let outer = e.semiaxes()[0] + r;
        let est = mc_volume_in_ball(&e.center, outer, |x| a.distance_to(x).map(|d| d <= r).unwrap_or(false), opts.samples, opts.seed)?;
        return Ok((est.value, est.stderr));
    }
    let dd = a.double_description()?;
    let c = dd.vertex_average();
    let outer = dd.vertices.iter().map(|v| (v - &c).norm()).fold(0.0, f64::max) + r;
    let member = |x: &Vector| {
        let worst = dd.facets.iter().map(|f| f.normal.dot(x) - f.offset).fold(f64::NEG_INFINITY, f64::max);
        if worst <= 0.0 {
            return true;
        }
        if worst > r {
            return false;
        }
        distance_to_hull(&dd.vertices, x) <= r
    };
    let est = mc_volume_in_ball(&c, outer, member, opts.samples, opts.seed)?;
    Ok((est.value, est.stderr))
}

/// `|K| / |tL| ≤ N(K, tL) ≤ |2K + (tL ∩ -tL)| / |tL ∩ -tL|`.
///
/// The sum volume is exact when both bodies are polytopes (hull of vertex
/// sums) or proportional ellipsoids. Otherwise one body is an ellipsoid, the
/// pair is mapped so that it becomes a ball, and `|A + rB|` is sampled; the
/// reported upper bound then adds three standard errors.
pub fn volumetric_covering_bounds(k: &BodyHandle, l: &BodyHandle, t: f64, opts: CoverOptions) -> Result<CoveringBound> {
    if !(t > 0.0) {
        return Err(GeomError::InvalidArgument("dilation must be positive".into()));
    }
    let n = k.dim();
    if l.dim() != n {
        return Err(GeomError::DimensionMismatch { expected: n, got: l.dim() });
    }
    let lower = (volume(k)? / (t.powi(n as i32) * volume(l)?)).max(1.0);
    if contained_in_dilate(k, l, t)? {
        return Ok(CoveringBound { t, lower: 1.0, upper: 1.0, upper_method: BoundMethod::Exact, stderr: 0.0 });
    }
    let lsym = symmetric_part(l)?;
    let lsym_vol = volume(&lsym)? * t.powi(n as i32);
    let (sum_vol, stderr, method) = match (k.ellipsoid(), lsym.ellipsoid()) {
        (None, None) => {
            let vk = k.vertices()?;
            let vl = lsym.vertices()?;
            let mut pts = Vec::with_capacity(vk.len() * vl.len());
            for p in &vk {
                for q in &vl {
                    pts.push(p * 2.0 + q * t);
                }
            }
            let sum = BodyHandle::from_vertices(pts)?.with_tolerances(k.tolerances());
            (volume(&sum)?, 0.0, BoundMethod::Exact)
        }
        (Some(ek), Some(el)) if proportional(&ek.shape, &el.shape).is_some() => {
            let c = proportional(&ek.shape, &el.shape).unwrap();
            let s = 2.0 * c + t;
            (lsym_vol / t.powi(n as i32) * s.powi(n as i32), 0.0, BoundMethod::Exact)
        }
        (_, Some(el)) => {
            // Map tL∩(-tL) to tB.
            let m = inverse(&el.shape)?;
            let kk = k.linear_image(&(&m * 2.0))?;
            let (v, se) = ball_sum_volume(&kk, t, opts)?;
            let det = el.shape.determinant().abs();
            (v * det, se * det, BoundMethod::MonteCarlo)
        }
        (Some(ek), None) => {
            // Map 2K to the ball 2B; the sum is (tL') + 2B.
            let m = inverse(&ek.shape)?;
            let ll = lsym.linear_image(&(&m * t))?;
            let (v, se) = ball_sum_volume(&ll.translate(&(&m * &ek.center * 2.0))?, 2.0, opts)?;
            let det = ek.shape.determinant().abs();
            (v * det, se * det, BoundMethod::MonteCarlo)
        }
    };
    let ratio = sum_vol / lsym_vol;
    let se = stderr / lsym_vol;
    let upper = (ratio + 3.0 * se).max(1.0);
    Ok(CoveringBound { t, lower, upper, upper_method: method, stderr: se })
}

/// Sufficient test for `K ⊂ tL` (so that `N(K, tL) = 1`); `L` must contain the origin in its interior.
pub fn contained_in_dilate(k: &BodyHandle, l: &BodyHandle, t: f64) -> Result<bool> {
    let slack = t * (1.0 + 1e-12);
    match (k.ellipsoid(), l.ellipsoid()) {
        (None, _) => {
            for v in k.vertices()? {
                if l.gauge_value(&v)? > slack {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        (Some(e), None) => {
            let (normals, offsets) = l.halfspaces()?;
            Ok(normals.iter().zip(&offsets).all(|(a, b)| a.dot(&e.center) + (e.shape.transpose() * a).norm() <= slack * b))
        }
        (Some(e), Some(f)) => {
            let m = inverse(&f.shape)?;
            let shift = (&m * (&e.center - &f.center)).norm();
            let spread = (&m * &e.shape).singular_values().max();
            Ok(f.center.norm() <= 1e-12 && shift + spread <= slack)
        }
    }
}

/// `Some(c)` when `a = c b` for a positive scalar `c`.
fn proportional(a: &Matrix, b: &Matrix) -> Option<f64> {
    let c = a.trace() / b.trace();
    ((a - b * c).amax() <= 1e-12 * a.amax()).then_some(c)
}

/// Rows of covering brackets over a dilation grid, plus an optional fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringProfile {
    pub k_id: String,
    pub l_id: String,
    pub rows: Vec<CoveringBound>,
    pub fit: Option<RegularityFit>,
}

/// Least-squares fit of `ln N ≈ D n / t^β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityFit {
    pub beta: f64,
    pub d: f64,
    pub residual: f64,
}

/// Fits `ln ln N = ln(D n) - β ln t` to the points with `ln N > 0`.
pub fn fit_regularity(n: usize, ts: &[f64], log_n: &[f64]) -> Option<RegularityFit> {
    let pts: Vec<(f64, f64)> = ts.iter().zip(log_n).filter(|(_, &y)| y > 1e-12).map(|(&t, &y)| (t.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / m).sqrt();
    Some(RegularityFit { beta: -slope, d: intercept.exp() / n as f64, residual })
}

/// Monotone (non-increasing in `t`) volumetric profile of `N(K, tL)` over a grid.
pub fn covering_profile(k: &BodyHandle, l: &BodyHandle, tgrid: &[f64], opts: CoverOptions) -> Result<CoveringProfile> {
    let mut ts = tgrid.to_vec();
    ts.sort_by(|a, b| a.total_cmp(b));
    let rows: Vec<CoveringBound> = ts
        .par_iter()
        .enumerate()
        .map(|(i, &t)| volumetric_covering_bounds(k, l, t, CoverOptions { samples: opts.samples, seed: opts.seed.wrapping_add(i as u64) }))
        .collect::<Result<_>>()?;
    let rows = monotone_rows(rows);
    let fit = fit_regularity(k.dim(), &ts, &rows.iter().map(|r| r.upper.ln()).collect::<Vec<_>>());
    Ok(CoveringProfile { k_id: String::new(), l_id: String::new(), rows, fit })
}

/// Enforces non-increasing bounds in `t` (rows sorted by `t`): upper by a
/// running minimum, lower by a running maximum from the right.
pub fn monotone_rows(mut rows: Vec<CoveringBound>) -> Vec<CoveringBound> {
    for i in 1..rows.len() {
        if rows[i].upper > rows[i - 1].upper {
            rows[i].upper = rows[i - 1].upper;
        }
    }
    for i in (0..rows.len().saturating_sub(1)).rev() {
        if rows[i].lower < rows[i + 1].lower {
            rows[i].lower = rows[i + 1].lower;
        }
    }
    rows
}

// ---------------------------------------------------------------------------
// Greedy nets

/// Norm of `L ∩ (-L)`.
/// The norm of `L ∩ -L` as a fixed norm of a linear image: Euclidean for
/// ellipsoids, sup over facet functionals for polytopes.
struct GaugeEmbedding {
    map: Matrix,
    sup: bool,
}

impl GaugeEmbedding {
    fn of(l: &BodyHandle) -> Result<Self> {
        let lsym = symmetric_part(l)?;
        if let Some(e) = lsym.ellipsoid() {
            return Ok(GaugeEmbedding { map: inverse(&e.shape)?, sup: false });
        }
        let dd = lsym.double_description()?;
        let n = dd.n;
        let map = Matrix::from_fn(dd.facets.len(), n, |i, j| dd.facets[i].normal[j] / dd.facets[i].offset);
        Ok(GaugeEmbedding { map, sup: true })
    }

    fn embed(&self, x: &Vector) -> Vec<f64> {
        (&self.map * x).iter().copied().collect()
    }

    fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(x, y)| x - y);
        if self.sup {
            diffs.fold(0.0, |m, d| m.max(d.abs()))
        } else {
            diffs.map(|d| d * d).sum::<f64>().sqrt()
        }
    }
}

fn symmetric_gauge(l: &BodyHandle) -> Result<Box<dyn Fn(&Vector) -> f64 + Send + Sync>> {
    let g = GaugeEmbedding::of(l)?;
    Ok(Box::new(move |x: &Vector| {
        let zero = vec![0.0; g.map.nrows()];
        g.dist(&g.embed(x), &zero)
    }))
}

/// Point cloud in `K`: half uniform interior points, half boundary points
/// (vertices first, then radial boundary hits of random directions).
pub fn sample_cloud(k: &BodyHandle, size: usize, seed: u64) -> Result<Vec<Vector>> {
    let n = k.dim();
    let mut rng = stream_rng(seed, 0);
    let mut out = Vec::with_capacity(size);
    if let Some(e) = k.ellipsoid() {
        for i in 0..size {
            let u = if i % 2 == 0 { ball_point(n, &mut rng) } else { sphere_point(n, &mut rng) };
            out.push(&e.center + &e.shape * u);
        }
        return Ok(out);
    }
    let dd = k.double_description()?;
    let c = dd.vertex_average();
    let (lo, hi) = k.bounding_box()?;
    let half = size / 2;
    use rand::Rng;
    while out.len() < half {
        let x = Vector::from_iterator(n, (0..n).map(|j| lo[j] + (hi[j] - lo[j]) * rng.random::<f64>()));
        if dd.contains(&x, 0.0) {
            out.push(x);
        }
    }
    out.extend(dd.vertices.iter().take(size - out.len()).cloned());
    while out.len() < size {
        let d = sphere_point(n, &mut rng);
        let reach = dd
            .facets
            .iter()
            .filter_map(|f| {
                let s = f.normal.dot(&d);
                (s > 0.0).then(|| (f.offset - f.normal.dot(&c)) / s)
            })
            .fold(f64::INFINITY, f64::min);
        out.push(&c + d * reach);
    }
    Ok(out)
}

/// Farthest-point traversal: `radii[m-1]` is the largest distance from the
/// cloud to the first `m` centres. Starts from `first` (not necessarily a
/// cloud point) and stops after `max_centers` or once the radius is 0.
fn traversal(cloud: &[Vector], gauge: &GaugeEmbedding, first: &Vector, max_centers: usize) -> Vec<f64> {
    let pts: Vec<Vec<f64>> = cloud.par_iter().map(|x| gauge.embed(x)).collect();
    let start = gauge.embed(first);
    let mut dist: Vec<f64> = pts.par_iter().map(|p| gauge.dist(p, &start)).collect();
    let mut centers = 1;
    let mut radii = Vec::new();
    loop {
        let (far, r) = dist
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
        radii.push(r.max(0.0));
        if centers >= max_centers || r <= 0.0 {
            break;
        }
        let c = pts[far].clone();
        dist.par_iter_mut().zip(pts.par_iter()).for_each(|(d, p)| {
            if *d > 0.0 {
                let g = gauge.dist(p, &c);
                if g < *d {
                    *d = g;
                }
            }
        });
        centers += 1;
    }
    radii
}

/// Greedy `tL`-net of a sample cloud of `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyNet {
    pub t: f64,
    pub centers: Vec<Vec<f64>>,
    /// Number of translates of `t(L ∩ -L)` covering the cloud; an estimate
    /// of an upper bound on `N(K, 2tL)` when the cloud is `t`-dense.
    pub count: usize,
    pub cloud_size: usize,
    /// Fraction of the cloud covered (1 unless the budget ran out).
    pub coverage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetOptions {
    pub cloud: usize,
    pub max_centers: usize,
    pub seed: u64,
}

impl Default for NetOptions {
    fn default() -> Self {
        NetOptions { cloud: 10_000, max_centers: 10_000, seed: 0 }
    }
}

fn net_start(k: &BodyHandle) -> Result<Vector> {
    if let Some(e) = k.ellipsoid() {
        return Ok(e.center.clone());
    }
    let dd = k.double_description()?;
    let z = Vector::zeros(k.dim());
    Ok(if dd.contains(&z, 0.0) { z } else { dd.vertex_average() })
}

/// Greedy set cover of a sample cloud of `K` by translates of `t(L ∩ -L)`.
///
/// Candidate centres are the body's start point plus an evenly strided subset
/// of the cloud. Redundant centres are pruned at the end.
pub fn greedy_net(k: &BodyHandle, l: &BodyHandle, t: f64, opts: NetOptions) -> Result<GreedyNet> {
    const MAX_CANDIDATES: usize = 3000;
    let gauge = symmetric_gauge(l)?;
    let cloud = sample_cloud(k, opts.cloud, opts.seed)?;
    let start = net_start(k)?;
    let reach = t * (1.0 + 1e-9);
    if cloud.par_iter().all(|x| gauge(&(x - &start)) <= reach) {
        return Ok(GreedyNet { t, count: 1, centers: vec![start.iter().copied().collect()], cloud_size: cloud.len(), coverage: 1.0 });
    }
    let stride = cloud.len().div_ceil(MAX_CANDIDATES).max(1);
    let mut candidates = vec![start];
    candidates.extend(cloud.iter().step_by(stride).cloned());
    let covers: Vec<BitSet> = candidates
        .par_iter()
        .map(|c| BitSet::from_indices(cloud.len(), (0..cloud.len()).filter(|&i| gauge(&(&cloud[i] - c)) <= reach)))
        .collect();
    let mut uncovered = BitSet::from_indices(cloud.len(), 0..cloud.len());
    let mut chosen: Vec<usize> = Vec::new();
    while !uncovered.is_empty() {
        if chosen.len() >= opts.max_centers {
            let coverage = 1.0 - uncovered.len() as f64 / cloud.len() as f64;
            return Err(GeomError::PartialNet { centers: chosen.len(), coverage });
        }
        let (best, gain) = covers
            .par_iter()
            .enumerate()
            .map(|(i, c)| (i, c.intersection_len(&uncovered)))
            .reduce(|| (usize::MAX, 0), |a, b| if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a });
        if gain == 0 {
            // Only possible if a cloud point is farther than t from every candidate.
            let coverage = 1.0 - uncovered.len() as f64 / cloud.len() as f64;
            return Err(GeomError::PartialNet { centers: chosen.len(), coverage });
        }
        uncovered = uncovered.difference(&covers[best]);
        chosen.push(best);
    }
    let chosen = improve_cover(&covers, chosen, cloud.len());
    Ok(GreedyNet {
        t,
        count: chosen.len(),
        centers: chosen.iter().map(|&i| candidates[i].iter().copied().collect()).collect(),
        cloud_size: cloud.len(),
        coverage: 1.0,
    })
}

/// Local improvement of a set cover: drop redundant centres (latest first),
/// then repeatedly replace two centres by one candidate covering every point
/// that only those two reached.
fn improve_cover(covers: &[BitSet], mut chosen: Vec<usize>, npts: usize) -> Vec<usize> {
    let multiplicity = |chosen: &[usize]| {
        let mut mult = vec![0u32; npts];
        for &c in chosen {
            for i in covers[c].iter() {
                mult[i] += 1;
            }
        }
        mult
    };
    let prune = |chosen: Vec<usize>| {
        let mut mult = multiplicity(&chosen);
        let mut kept = Vec::with_capacity(chosen.len());
        for &c in chosen.iter().rev() {
            if covers[c].iter().all(|i| mult[i] > 1) {
                for i in covers[c].iter() {
                    mult[i] -= 1;
                }
            } else {
                kept.push(c);
            }
        }
        kept.reverse();
        kept
    };
    chosen = prune(chosen);
    'outer: loop {
        let mult = multiplicity(&chosen);
        for a in 0..chosen.len() {
            for b in a + 1..chosen.len() {
                let (ca, cb) = (&covers[chosen[a]], &covers[chosen[b]]);
                if ca.intersection_len(cb) == 0 && !shares_neighbourhood(ca, cb, &mult) {
                    continue;
                }
                let exclusive: Vec<usize> = ca
                    .iter()
                    .chain(cb.iter())
                    .filter(|&i| mult[i] - u32::from(ca.contains(i)) - u32::from(cb.contains(i)) == 0)
                    .collect();
                let replacement = covers.par_iter().position_first(|c| exclusive.iter().all(|&i| c.contains(i)));
                if let Some(r) = replacement {
                    chosen.remove(b);
                    chosen.remove(a);
                    chosen.push(r);
                    chosen = prune(chosen);
                    continue 'outer;
                }
            }
        }
        return chosen;
    }
}

/// Cheap adjacency filter: the two sets both touch points covered more than once.
fn shares_neighbourhood(a: &BitSet, b: &BitSet, mult: &[u32]) -> bool {
    a.iter().any(|i| mult[i] > 1) && b.iter().any(|i| mult[i] > 1)
}

/// Interval for `e_k(K, L)` with provenance of each endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub k: u32,
    pub lower: f64,
    pub upper: f64,
    pub lower_method: BoundMethod,
    pub upper_method: BoundMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropySequence {
    pub n: usize,
    pub rows: Vec<EntropyRow>,
}

impl EntropySequence {
    pub fn get(&self, k: u32) -> Option<&EntropyRow> {
        self.rows.iter().find(|r| r.k == k)
    }
}

/// Brackets `e_k(K, L)` for `k = 1..=k_max`.
///
/// Upper: after `m = 2^{k-1}` greedy centres every cloud point is within
/// `ρ_m` (in the norm of `L ∩ -L`); doubling `ρ_m` absorbs the gap between
/// cloud and body, giving a sampled estimate of an upper bound. Lower: the
/// volume ratio `(|K| / (2^{k-1}|L|))^{1/n}`, and for symmetric `L` also the
/// packing bound `ρ_m / 2` (the `m + 1` traversal points are `ρ_m`-separated).
pub fn entropy_sequence(k: &BodyHandle, l: &BodyHandle, k_max: u32, seed: u64) -> Result<EntropySequence> {
    let n = k.dim();
    let m_max = 1usize << (k_max.max(1) - 1);
    let cloud_size = (32 * m_max).max(10_000);
    let gauge = GaugeEmbedding::of(l)?;
    let cloud = sample_cloud(k, cloud_size, seed)?;
    let radii = traversal(&cloud, &gauge, &net_start(k)?, m_max);
    let symmetric = is_symmetric(l)?;
    let vk = volume(k)?;
    let vl = volume(l)?;
    let mut rows = Vec::with_capacity(k_max as usize);
    for kk in 1..=k_max {
        let m = 1usize << (kk - 1);
        let rho = radii[(m - 1).min(radii.len() - 1)];
        let vol_lower = (vk / (m as f64 * vl)).powf(1.0 / n as f64);
        let (lower, lower_method) = if symmetric && rho / 2.0 > vol_lower {
            (rho / 2.0, BoundMethod::Packing)
        } else {
            (vol_lower, BoundMethod::Volumetric)
        };
        rows.push(EntropyRow { k: kk, lower, upper: 2.0 * rho, lower_method, upper_method: BoundMethod::Greedy });
    }
    for i in 1..rows.len() {
        if rows[i].upper > rows[i - 1].upper {
            rows[i].upper = rows[i - 1].upper;
        }
    }
    for i in (0..rows.len().saturating_sub(1)).rev() {
        if rows[i].lower < rows[i + 1].lower {
            rows[i].lower = rows[i + 1].lower;
        }
    }
    Ok(EntropySequence { n, rows })
}

fn is_symmetric(l: &BodyHandle) -> Result<bool> {
    if let Some(e) = l.ellipsoid() {
        return Ok(e.is_centered(l.tolerances().dedup));
    }
    let tol = l.tolerances().dedup.max(1e-9);
    let dd = l.double_description()?;
    Ok(dd.vertices.iter().all(|v| dd.contains(&-v, tol)))
}

/// Sampled upper bound on the Gelfand number `c_l(K, B_2^n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GelfandBound {
    pub l: usize,
    pub value: f64,
    /// Index of the best subspace: sampled ones first, then the extras.
    pub best: usize,
    pub evaluated: usize,
}

/// Circumradius of a centred section `K ∩ F`.
fn section_circumradius(k: &BodyHandle, f: &Subspace) -> Result<f64> {
    let s = section(k, f, None)?;
    if let Some(e) = s.ellipsoid() {
        let c = e.center.norm();
        return Ok(c + e.semiaxes()[0]);
    }
    Ok(s.vertices()?.iter().map(|v| v.norm()).fold(0.0, f64::max))
}

/// `min` over sampled `F ∈ G_{n, n-l+1}` (plus `extra`) of the circumradius
/// of `K ∩ F`; an upper bound on `c_l(K, B_2^n)`.
pub fn gelfand_upper(k: &BodyHandle, l: usize, samples: usize, seed: u64, extra: &[Subspace]) -> Result<GelfandBound> {
    let n = k.dim();
    if l == 0 || l > n {
        return Err(GeomError::InvalidArgument(format!("Gelfand index {l} outside 1..={n}")));
    }
    let d = n - l + 1;
    let mut spaces: Vec<Subspace> = if d == n {
        vec![Subspace::full(n)]
    } else {
        (0..samples as u64)
            .map(|i| crate::subspace::random_subspace(n, d, seed.wrapping_add(i.wrapping_mul(0x9E37_79B9))))
            .collect::<Result<_>>()?
    };
    spaces.extend(extra.iter().filter(|f| f.l == d).cloned());
    let vals: Vec<Option<f64>> = spaces.par_iter().map(|f| section_circumradius(k, f).ok()).collect();
    let (best, value) = vals
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    if !value.is_finite() {
        return Err(GeomError::EmptySection);
    }
    Ok(GelfandBound { l, value, best, evaluated: spaces.len() })
}

/// Sphere average with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereMean {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
}

fn sphere_mean(n: usize, samples: usize, seed: u64, f: impl Fn(&Vector) -> Result<f64> + Sync) -> Result<SphereMean> {
    const BLOCK: usize = 4096;
    let blocks = samples.div_ceil(BLOCK);
    let vals: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            (0..BLOCK.min(samples - b * BLOCK)).map(|_| f(&sphere_point(n, &mut rng))).collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let flat: Vec<f64> = vals.concat();
    let (value, stderr) = mean_stderr(&flat);
    Ok(SphereMean { value, stderr, samples })
}

/// `M*(K) = ∫ h_K dσ`.
pub fn mean_width(k: &BodyHandle, samples: usize, seed: u64) -> Result<SphereMean> {
    sphere_mean(k.dim(), samples, seed, |x| k.support_value(x))
}

/// `M(K) = ∫ ||θ||_K dσ`; requires the origin in the interior.
pub fn mean_norm(k: &BodyHandle, samples: usize, seed: u64) -> Result<SphereMean> {
    if !k.origin_interior()? {
        return Err(GeomError::OriginNotInterior);
    }
    sphere_mean(k.dim(), samples, seed, |x| k.gauge_value(x))
}

/// `Σ_{l≤n} e_l / √l` over the upper endpoints.
pub fn dudley_sum(seq: &EntropySequence) -> f64 {
    seq.rows.iter().filter(|r| r.k as usize <= seq.n).map(|r| r.upper / (r.k as f64).sqrt()).sum()
}

/// `dudley_sum / (√n M*)`.
pub fn dudley_ratio(seq: &EntropySequence, mean_width: f64) -> f64 {
    dudley_sum(seq) / ((seq.n as f64).sqrt() * mean_width)
}

/// Semi-axes of `E` relative to `L`: for `L = T B_2^n`, the spectrum of `T^{-1} E`.
pub fn relative_spectrum(e: &EllipsoidBody, l: &EllipsoidBody) -> Result<EllipsoidSpectrum> {
    let m = inverse(&l.shape)? * &e.shape;
    let (vals, _) = sym_eigen(&(&m * m.transpose()));
    EllipsoidSpectrum::new(vals.into_iter().map(|v| v.max(0.0).sqrt()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::factorial;

    fn cube(n: usize, s: f64) -> BodyHandle {
        let mut normals = Vec::new();
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut a = Vector::zeros(n);
                a[i] = sign;
                normals.push(a);
            }
        }
        BodyHandle::from_halfspaces(normals, vec![s; 2 * n]).unwrap()
    }

    #[test]
    fn phi_identity_and_small_case() {
        for n in 1..=5 {
            for k in 1..=12 {
                let p = phi_k(&EllipsoidSpectrum::identity(n), k);
                assert_eq!(p.phi, 2f64.powf(-(k as f64) / n as f64));
            }
        }
        let p = phi_k(&EllipsoidSpectrum::new(vec![4.0, 1.0]).unwrap(), 2);
        assert!((p.phi - 1.0).abs() < 1e-15);
    }

    #[test]
    fn restricted_sup_within_factor_two() {
        let mut rng = stream_rng(17, 0);
        use rand::Rng;
        for _ in 0..100 {
            let n = rng.random_range(2..8);
            let spec = EllipsoidSpectrum::new((0..n).map(|_| (rng.random::<f64>() * 4.0 - 2.0).exp()).collect()).unwrap();
            let k = rng.random_range(1..10);
            let full = phi_k(&spec, k).phi;
            let part = phi_k_upto(&spec, k, k as usize).phi;
            assert!(part <= full && full <= 2.0 * part, "{part} {full}");
        }
    }

    #[test]
    fn projection_extremes() {
        let spec = EllipsoidSpectrum::new(vec![3.0, 2.0, 1.0]).unwrap();
        let p = max_projection_volume(&spec, 2).unwrap();
        assert!((p.max - 6.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((p.min - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn regularity_constants() {
        let r = ellipsoid_regularity(&EllipsoidSpectrum::identity(5), 1.0).unwrap();
        assert!((r.c - 1.0).abs() < 1e-12);
        let n = 6;
        let spec = EllipsoidSpectrum::new((1..=n).map(|j| n as f64 / j as f64).collect()).unwrap();
        let want = (1..=n).map(|l| l as f64 / factorial(l).powf(1.0 / l as f64)).fold(0.0, f64::max);
        assert!((ellipsoid_regularity(&spec, 1.0).unwrap().c - want).abs() < 1e-12);
        let big = EllipsoidSpectrum::new(vec![1000.0, 1.0, 1.0]).unwrap();
        let bigger = EllipsoidSpectrum::new(vec![2000.0, 1.0, 1.0]).unwrap();
        let ratio = ellipsoid_regularity(&bigger, 1.0).unwrap().c / ellipsoid_regularity(&big, 1.0).unwrap().c;
        assert!((ratio - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ball_by_ball_bounds() {
        let n = 4;
        let b2 = BodyHandle::from_ellipsoid(EllipsoidBody::ball(n, 2.0));
        let b1 = BodyHandle::from_ellipsoid(EllipsoidBody::ball(n, 1.0));
        let r = volumetric_covering_bounds(&b2, &b1, 1.0, CoverOptions::default()).unwrap();
        assert!((r.lower - 16.0).abs() < 1e-9);
        assert!((r.upper - 625.0).abs() < 1e-9);
        assert_eq!(r.upper_method, BoundMethod::Exact);
    }

    #[test]
    fn symmetric_polytope_dilates() {
        let k = cube(2, 1.0);
        for t in [0.25, 0.5, 0.75] {
            let r = volumetric_covering_bounds(&k, &k, t, CoverOptions::default()).unwrap();
            assert!((r.upper - (2.0 / t + 1.0).powi(2)).abs() < 1e-9);
            assert!((r.lower - t.powi(-2)).abs() < 1e-12);
        }
        for t in [1.0, 2.0] {
            let r = volumetric_covering_bounds(&k, &k, t, CoverOptions::default()).unwrap();
            assert_eq!((r.lower, r.upper), (1.0, 1.0));
        }
    }

    #[test]
    fn sampled_ball_sum_matches_steiner() {
        // |2[-1,1]^2 + tB| = 16 + 8·2t... Steiner in the plane: area + perimeter·t + πt².
        let k = cube(2, 1.0);
        let b = BodyHandle::from_ellipsoid(EllipsoidBody::ball(2, 1.0));
        let t = 1.2;
        let r = volumetric_covering_bounds(&k, &b, t, CoverOptions { samples: 200_000, seed: 3 }).unwrap();
        let exact = (16.0 + 16.0 * t + std::f64::consts::PI * t * t) / (std::f64::consts::PI * t * t);
        assert!(r.upper >= exact && r.upper - exact < 6.0 * r.stderr, "{} vs {exact}", r.upper);
    }

    #[test]
    fn greedy_square_grid() {
        let k = BodyHandle::from_rows(&[vec![0.0, 0.0], vec![4.0, 0.0], vec![0.0, 4.0], vec![4.0, 4.0]]).unwrap();
        let unit = cube(2, 0.5);
        let net = greedy_net(&k, &unit, 1.0, NetOptions { cloud: 4000, max_centers: 1000, seed: 1 }).unwrap();
        assert!(net.count >= 16 && net.count <= 25, "{}", net.count);
        let ball = BodyHandle::from_ellipsoid(EllipsoidBody::ball(3, 1.0));
        assert_eq!(greedy_net(&ball, &ball, 1.0, NetOptions::default()).unwrap().count, 1);
        // t above circumradius / inradius.
        let c = cube(3, 1.0);
        assert_eq!(greedy_net(&c, &ball, 3f64.sqrt() + 1e-9, NetOptions::default()).unwrap().count, 1);
    }

    #[test]
    fn partial_net_reports_coverage() {
        let big = cube(2, 10.0);
        let small = cube(2, 0.1);
        match greedy_net(&big, &small, 1.0, NetOptions { cloud: 2000, max_centers: 5, seed: 0 }) {
            Err(GeomError::PartialNet { centers, coverage }) => {
                assert_eq!(centers, 5);
                assert!(coverage < 1.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn self_entropy_at_most_one() {
        let k = cube(2, 1.0);
        let seq = entropy_sequence(&k, &k, 6, 4).unwrap();
        // e_1(K, K) = 1 must lie in the bracket.
        let first = seq.get(1).unwrap();
        assert!(first.lower <= 1.0 + 1e-12 && first.upper >= 1.0);
        for w in seq.rows.windows(2) {
            assert!(w[1].upper <= w[0].upper && w[1].lower <= w[0].lower);
        }
    }

    #[test]
    fn gelfand_first_number_is_circumradius() {
        let k = cube(3, 1.0);
        let g = gelfand_upper(&k, 1, 10, 0, &[]).unwrap();
        assert!((g.value - 3f64.sqrt()).abs() < 1e-12);
        let e = BodyHandle::from_ellipsoid(EllipsoidBody::diagonal(&[3.0, 2.0, 1.0, 0.5]).unwrap());
        for l in 1..=4 {
            let axes: Vec<usize> = (l - 1..4).collect();
            let g = gelfand_upper(&e, l, 20, 1, &[Subspace::coordinate(4, &axes)]).unwrap();
            let want = [3.0, 2.0, 1.0, 0.5][l - 1];
            assert!((g.value - want).abs() < 1e-12, "l={l}: {}", g.value);
        }
    }

    #[test]
    fn mean_width_of_ball_and_cube() {
        let b = BodyHandle::from_ellipsoid(EllipsoidBody::ball(4, 1.0));
        assert!((mean_width(&b, 1000, 0).unwrap().value - 1.0).abs() < 1e-12);
        assert!((mean_norm(&b, 1000, 0).unwrap().value - 1.0).abs() < 1e-12);
    }
}
