//! Affine normalisations: barycentre, Santaló point, isotropic position,
//! the square-root balancing of an ellipsoid, and the regularisation
//! pipeline that turns a positioned body into an (empirically) regular
//! M-position with a fitted covering profile.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::{BodyHandle, EllipsoidBody};
use crate::covering::{fit_regularity, monotone_rows, volumetric_covering_bounds, CoverOptions, CoveringBound};
use crate::dd::DoubleDescription;
use crate::error::{GeomError, Result};
use crate::linalg::{inverse, sym_eigen, sym_inv_sqrt, sym_sqrt, unit_ball_volume, Matrix, Vector};
use crate::volume::{barycentre, moments, polytope_integrals};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PositionTag {
    Centred,
    Santalo,
    Isotropic,
    BalancedRegular,
}

/// The map `x ↦ A x + v` that was applied, and how well the target was met.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionReport {
    pub tag: PositionTag,
    pub matrix: Vec<Vec<f64>>,
    pub shift: Vec<f64>,
    /// `|b(K)|` for centring and isotropic position, `|b(K°)|` for the Santaló position.
    pub residual: f64,
    /// Largest over smallest covariance eigenvalue, minus one.
    pub anisotropy: Option<f64>,
    pub l_estimate: Option<f64>,
    pub iterations: usize,
}

fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl PositionReport {
    fn translation(tag: PositionTag, v: &Vector, residual: f64, iterations: usize) -> Self {
        let n = v.len();
        PositionReport {
            tag,
            matrix: rows_of(&Matrix::identity(n, n)),
            shift: v.iter().copied().collect(),
            residual,
            anisotropy: None,
            l_estimate: None,
            iterations,
        }
    }

    pub fn matrix(&self) -> Matrix {
        let n = self.shift.len();
        Matrix::from_row_slice(n, n, &self.matrix.concat())
    }

    pub fn shift(&self) -> Vector {
        Vector::from_row_slice(&self.shift)
    }
}

/// Translates the barycentre to the origin.
pub fn centre(k: &BodyHandle) -> Result<(BodyHandle, PositionReport)> {
    let b = barycentre(k)?;
    let out = k.translate(&-&b)?;
    let residual = barycentre(&out)?.norm();
    Ok((out, PositionReport::translation(PositionTag::Centred, &-b, residual, 0)))
}

/// Volume and first two moments of `(P - z)°`.
pub(crate) fn polar_moments(dd: &DoubleDescription, z: &Vector) -> Result<(f64, Vector, Matrix)> {
    let p = dd.polar_about(z)?;
    let fi = polytope_integrals(&p, true);
    Ok((fi.vol, fi.m1, fi.m2.expect("second moments requested")))
}

pub(crate) fn interior_margin(dd: &DoubleDescription, z: &Vector) -> f64 {
    dd.facets.iter().map(|f| f.offset - f.normal.dot(z)).fold(f64::INFINITY, f64::min)
}

/// Solver settings for the Santaló point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SantaloOptions {
    pub max_iterations: usize,
    /// Target for `|b((K - s)°)|`.
    pub tolerance: f64,
}

impl Default for SantaloOptions {
    fn default() -> Self {
        SantaloOptions { max_iterations: 100, tolerance: 1e-7 }
    }
}

/// The Santaló point: the minimiser of `z ↦ |(K - z)°|`, equivalently the
/// zero of `b((K - z)°)`. Returns the point, the final residual and the
/// iteration count.
///
/// `F(z) = |(K - z)°|` is strictly convex with gradient `(n+1) ∫ y` and
/// Hessian `(n+1)(n+2) ∫ y yᵀ` over `(K - z)°`, so the Newton direction is
/// `-(∫ y yᵀ)^{-1} ∫ y / (n+2)`: the polar barycentre, preconditioned.
/// A backtracking line search on `F` keeps iterates interior.
pub fn santalo_point(k: &BodyHandle, opts: SantaloOptions) -> Result<(Vector, f64, usize)> {
    if let Some(e) = k.ellipsoid() {
        return Ok((e.center.clone(), 0.0, 0));
    }
    let dd = k.double_description()?;
    let (z, residual, iterations) = polar_newton(&dd, barycentre(k)?, None, opts)?;
    if residual <= opts.tolerance {
        return Ok((z, residual, iterations));
    }
    Err(GeomError::NoConvergence { iterations, residual, best: z.iter().copied().collect() })
}

/// Damped Newton minimisation of `|(P - z)°|` over `z ∈ z0 + range(W)`
/// (all of space when `w` is `None`). Returns the best iterate, its
/// residual `|Wᵀ b((P - z)°)|` and the iteration count.
pub(crate) fn polar_newton(
    dd: &DoubleDescription,
    z0: Vector,
    w: Option<&Matrix>,
    opts: SantaloOptions,
) -> Result<(Vector, f64, usize)> {
    let n = dd.n;
    let w = w.cloned().unwrap_or_else(|| Matrix::identity(n, n));
    let nf = n as f64;
    let mut z = z0;
    let (mut vol, mut m1, mut m2) = polar_moments(dd, &z)?;
    let residual_of = |vol: f64, m1: &Vector| (w.transpose() * m1).norm() / vol;
    let mut residual = residual_of(vol, &m1);
    let mut best = (z.clone(), residual);
    let mut it = 0;
    while it < opts.max_iterations && residual > opts.tolerance * 1e-5 {
        it += 1;
        let g = w.transpose() * &m1;
        let h = w.transpose() * &m2 * &w;
        let dir = -(&w * (inverse(&h)? * &g)) / (nf + 2.0);
        let slope = (nf + 1.0) * m1.dot(&dir);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = &z + &dir * step;
            if interior_margin(dd, &cand) > 0.0 {
                let (v, a, b) = polar_moments(dd, &cand)?;
                // Near the minimum the decrease is below round-off in `F`;
                // there the gradient norm decides.
                let flat = (v - vol).abs() <= 1e-12 * vol;
                if v <= vol + 1e-4 * step * slope || (flat && residual_of(v, &a) < residual) {
                    accepted = Some((cand, v, a, b));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((cand, v, a, b)) = accepted else { break };
        z = cand;
        vol = v;
        m1 = a;
        m2 = b;
        residual = residual_of(vol, &m1);
        if residual < best.1 {
            best = (z.clone(), residual);
        }
    }
    Ok((best.0, best.1, it))
}

/// Translates the Santaló point to the origin.
pub fn santalo_position(k: &BodyHandle) -> Result<(BodyHandle, PositionReport)> {
    santalo_position_with(k, SantaloOptions::default())
}

pub fn santalo_position_with(k: &BodyHandle, opts: SantaloOptions) -> Result<(BodyHandle, PositionReport)> {
    let (s, _, iterations) = santalo_point(k, opts)?;
    let out = k.translate(&-&s)?;
    let residual = match out.ellipsoid() {
        Some(_) => 0.0,
        None => barycentre(&out.polar()?)?.norm(),
    };
    Ok((out, PositionReport::translation(PositionTag::Santalo, &-s, residual, iterations)))
}

/// Volume 1, barycentre 0, covariance `L² I`.
pub fn isotropic_position(k: &BodyHandle) -> Result<(BodyHandle, PositionReport)> {
    let m = moments(k)?;
    let n = k.dim();
    let cov = m.covariance_matrix();
    let det = cov.determinant();
    if !(det > 0.0) {
        return Err(GeomError::Degenerate);
    }
    let c = (det.sqrt() / m.volume).powf(1.0 / n as f64);
    let a = sym_inv_sqrt(&cov)? * c;
    let v = -(&a * m.barycentre_vec());
    let out = k.affine_image(&a, &v)?;
    let after = moments(&out)?;
    let (vals, _) = sym_eigen(&after.covariance_matrix());
    let anisotropy = vals[0] / vals[n - 1] - 1.0;
    Ok((
        out,
        PositionReport {
            tag: PositionTag::Isotropic,
            matrix: rows_of(&a),
            shift: v.iter().copied().collect(),
            residual: after.barycentre_vec().norm(),
            anisotropy: Some(anisotropy),
            l_estimate: Some(after.isotropic_constant),
            iterations: 0,
        },
    ))
}

/// Isotropic constant of the Euclidean ball, `1 / (√(n+2) |B_2^n|^{1/n})`.
pub fn ball_isotropic_constant(n: usize) -> f64 {
    1.0 / ((n as f64 + 2.0).sqrt() * unit_ball_volume(n).powf(1.0 / n as f64))
}

/// The ellipsoid `T^{1/2} B_2^n` of a centred ellipsoid `T B_2^n`.
pub fn balance_ellipsoid(e: &EllipsoidBody) -> Result<EllipsoidBody> {
    if !e.is_centered(1e-12) {
        return Err(GeomError::InvalidArgument("balancing needs a centred ellipsoid".into()));
    }
    EllipsoidBody::new(e.center.clone(), sym_sqrt(&e.shape))
}

// ---------------------------------------------------------------------------
// Regularisation

/// How the stand-in M-ellipsoid of a symmetric body `S` with covariance `Σ` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EllipsoidChooser {
    /// `c Σ^{1/2} B` with the volume of `S`.
    Isotropy,
    /// `√(n(n+2)) Σ^{1/2} B`, which contains every centred body with covariance `Σ`.
    CovarianceOuter,
    /// `√((n+2)/n) Σ^{1/2} B`, contained in every centred body with covariance `Σ`.
    CovarianceInner,
}

/// Which normalisation the input already satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PositionCase {
    Santalo,
    Barycentre,
}

/// Shape matrix of the chosen ellipsoid for a centred symmetric body.
pub fn heuristic_ellipsoid(s: &BodyHandle, chooser: EllipsoidChooser) -> Result<Matrix> {
    let m = moments(s)?;
    let n = s.dim() as f64;
    let root = sym_sqrt(&m.covariance_matrix());
    let scale = match chooser {
        EllipsoidChooser::Isotropy => {
            let det = root.determinant();
            if !(det > 0.0) {
                return Err(GeomError::Degenerate);
            }
            (m.volume / (unit_ball_volume(s.dim()) * det)).powf(1.0 / n)
        }
        EllipsoidChooser::CovarianceOuter => (n * (n + 2.0)).sqrt(),
        EllipsoidChooser::CovarianceInner => ((n + 2.0) / n).sqrt(),
    };
    Ok(root * scale)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizeOptions {
    pub case: PositionCase,
    pub chooser: EllipsoidChooser,
    pub tgrid: Vec<f64>,
    pub cover: CoverOptions,
}

impl Default for RegularizeOptions {
    fn default() -> Self {
        RegularizeOptions {
            case: PositionCase::Santalo,
            chooser: EllipsoidChooser::Isotropy,
            tgrid: vec![2.0, 4.0, 8.0, 16.0, 32.0],
            cover: CoverOptions { samples: 100_000, seed: 0 },
        }
    }
}

/// The four covering brackets at one dilation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub t: f64,
    /// `N(K, tB)`.
    pub body_by_ball: CoveringBound,
    /// `N(K°, tB)`.
    pub polar_by_ball: CoveringBound,
    /// `N(B, tK)`.
    pub ball_by_body: CoveringBound,
    /// `N(B, tK°)`.
    pub ball_by_polar: CoveringBound,
}

impl ProfileRow {
    /// `ln` of the largest of the four upper bounds.
    pub fn max_log_upper(&self) -> f64 {
        [self.body_by_ball, self.polar_by_ball, self.ball_by_body, self.ball_by_polar]
            .iter()
            .map(|b| b.upper.ln())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Covering profile of a positioned body against the ball, with the fit
/// `max ln N ≈ D n / t^β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityProfile {
    pub n: usize,
    pub rows: Vec<ProfileRow>,
    pub beta: Option<f64>,
    pub d: Option<f64>,
    pub fit_residual: Option<f64>,
    /// `β ∈ (0, 2)` was fitted.
    pub regular: bool,
    /// Linear map taking the input body to the profiled one.
    pub map: Vec<Vec<f64>>,
    pub case: Option<PositionCase>,
    pub chooser: Option<EllipsoidChooser>,
}

/// Profiles `N(K,tB)`, `N(K°,tB)`, `N(B,tK)`, `N(B,tK°)` over `tgrid`.
pub fn profile_position(k: &BodyHandle, tgrid: &[f64], cover: CoverOptions) -> Result<RegularityProfile> {
    if tgrid.is_empty() {
        return Err(GeomError::InvalidArgument("empty dilation grid".into()));
    }
    let n = k.dim();
    let mut ts = tgrid.to_vec();
    ts.sort_by(|a, b| a.total_cmp(b));
    let ball = BodyHandle::from_ellipsoid(EllipsoidBody::ball(n, 1.0));
    let polar = k.polar()?;
    let pairs: [(&BodyHandle, &BodyHandle); 4] = [(k, &ball), (&polar, &ball), (&ball, k), (&ball, &polar)];
    let columns: Vec<Vec<CoveringBound>> = pairs
        .par_iter()
        .enumerate()
        .map(|(q, (a, b))| {
            let rows = ts
                .iter()
                .enumerate()
                .map(|(i, &t)| {
                    let seed = cover.seed.wrapping_add((q * ts.len() + i) as u64);
                    volumetric_covering_bounds(a, b, t, CoverOptions { samples: cover.samples, seed })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(monotone_rows(rows))
        })
        .collect::<Result<_>>()?;
    let rows: Vec<ProfileRow> = (0..ts.len())
        .map(|i| ProfileRow {
            t: ts[i],
            body_by_ball: columns[0][i],
            polar_by_ball: columns[1][i],
            ball_by_body: columns[2][i],
            ball_by_polar: columns[3][i],
        })
        .collect();
    let logs: Vec<f64> = rows.iter().map(|r| r.max_log_upper()).collect();
    let fit = fit_regularity(n, &ts, &logs);
    Ok(RegularityProfile {
        n,
        rows,
        beta: fit.map(|f| f.beta),
        d: fit.map(|f| f.d),
        fit_residual: fit.map(|f| f.residual),
        // An all-trivial profile (N = 1 throughout) is regular for every β.
        regular: fit.is_some_and(|f| f.beta > 0.0 && f.beta < 2.0) || logs.iter().all(|&y| y <= 1e-12),
        map: rows_of(&Matrix::identity(n, n)),
        case: None,
        chooser: None,
    })
}

/// Linear map produced by the pipeline on a body whose Santaló point is the origin.
fn santalo_pipeline(w: &BodyHandle, chooser: EllipsoidChooser) -> Result<Matrix> {
    // Step 1: the stand-in M-ellipsoid of K ∩ (-K) goes to the ball.
    let t1 = heuristic_ellipsoid(&w.symmetric_intersection()?, chooser)?;
    let a1 = inverse(&t1)?;
    // Step 2: Δ_λ from conv(K, -K) in the new position; apply Δ_√λ^{-1}.
    let w1 = w.linear_image(&a1)?;
    let t2 = heuristic_ellipsoid(&w1.symmetric_hull()?, chooser)?;
    let a2 = sym_inv_sqrt(&t2)?;
    Ok(a2 * a1)
}

/// Constructive version of the regularisation argument: returns the
/// positioned body and its covering profile. The input must already have
/// its Santaló point (or barycentre, per `opts.case`) at the origin.
pub fn regularize(k: &BodyHandle, opts: &RegularizeOptions) -> Result<(BodyHandle, RegularityProfile)> {
    let map = match k.ellipsoid() {
        Some(e) => {
            if !e.is_centered(1e-9) {
                return Err(GeomError::Position("ellipsoid must be centred".into()));
            }
            inverse(&e.shape)?
        }
        None => match opts.case {
            PositionCase::Santalo => santalo_pipeline(k, opts.chooser)?,
            // K centred means K° has its Santaló point at 0; position K° and
            // transport the map back by inverse transpose.
            PositionCase::Barycentre => inverse(&santalo_pipeline(&k.polar()?, opts.chooser)?)?.transpose(),
        },
    };
    let out = k.linear_image(&map)?;
    let mut profile = profile_position(&out, &opts.tgrid, opts.cover)?;
    profile.map = rows_of(&map);
    profile.case = Some(opts.case);
    profile.chooser = Some(opts.chooser);
    Ok((out, profile))
}
