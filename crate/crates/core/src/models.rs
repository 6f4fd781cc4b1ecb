//! Model bodies with closed-form geometry: the regular simplex (and its
//! distinguished sections), cube, cross-polytope, ball, random polytopes,
//! and reference formulas used as oracles elsewhere.

use serde::{Deserialize, Serialize};

use crate::body::{hausdorff_distance, BodyHandle, EllipsoidBody};
use crate::error::{GeomError, Result};
use crate::linalg::{affine_rank, factorial, Matrix, Vector};
use crate::sampling::{gaussian_vector, sphere_point, stream_rng};
use crate::subspace::{project, section, Subspace};
use crate::volume::volume;

/// Which edge length a simplex identity assumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimplexNormalization {
    /// Edge `√2`: vertices `e_i - 1/(n+1)`.
    EdgeSqrt2,
    /// Edge `(n+1)/√2`, for which `S ∩ (-S)` is the unit-volume cube section.
    EdgeHalfNPlusOne,
}

impl SimplexNormalization {
    fn factor(self, n: usize) -> f64 {
        match self {
            SimplexNormalization::EdgeSqrt2 => 1.0,
            SimplexNormalization::EdgeHalfNPlusOne => (n as f64 + 1.0) / 2.0,
        }
    }
}

/// Regular simplex centred at the origin, carried in an orthonormal basis of
/// the hyperplane `H = 1^⊥ ⊂ R^{n+1}`.
#[derive(Debug, Clone)]
pub struct RegularSimplex {
    pub n: usize,
    pub normalization: SimplexNormalization,
    /// `(n+1) × n` orthonormal basis of `H` (Helmert columns).
    pub basis: Matrix,
    /// Vertices in `R^{n+1}`.
    pub embedded: Vec<Vector>,
    /// The same vertices in basis coordinates.
    pub body: BodyHandle,
}

impl RegularSimplex {
    /// Subspace `H` of `R^{n+1}`.
    pub fn hyperplane(&self) -> Subspace {
        Subspace { n: self.n + 1, l: self.n, basis: self.basis.clone() }
    }

    /// Intrinsic coordinates of a point of `H`.
    pub fn coords(&self, x: &Vector) -> Vector {
        self.basis.transpose() * x
    }
}

/// Orthonormal basis of `1^⊥ ⊂ R^{m}`: `h_k = (1,…,1,-k,0,…)/√(k(k+1))`.
pub fn helmert_basis(m: usize) -> Matrix {
    let mut b = Matrix::zeros(m, m - 1);
    for k in 1..m {
        let s = 1.0 / ((k * (k + 1)) as f64).sqrt();
        for i in 0..k {
            b[(i, k - 1)] = s;
        }
        b[(k, k - 1)] = -(k as f64) * s;
    }
    b
}

pub fn regular_simplex(n: usize) -> Result<RegularSimplex> {
    regular_simplex_with(n, SimplexNormalization::EdgeSqrt2)
}

pub fn regular_simplex_with(n: usize, normalization: SimplexNormalization) -> Result<RegularSimplex> {
    if n == 0 {
        return Err(GeomError::InvalidArgument("simplex dimension must be ≥ 1".into()));
    }
    let m = n + 1;
    let c = normalization.factor(n);
    let basis = helmert_basis(m);
    let embedded: Vec<Vector> = (0..m)
        .map(|i| {
            let mut v = Vector::from_element(m, -1.0 / m as f64);
            v[i] += 1.0;
            v * c
        })
        .collect();
    let body = BodyHandle::from_vertices(embedded.iter().map(|v| basis.transpose() * v).collect())?;
    Ok(RegularSimplex { n, normalization, basis, embedded, body })
}

/// `F_l`: spanned by `l` vertices together with the average of the others
/// (which lies in their span, since the vertices sum to zero).
pub fn simplex_section_subspace(n: usize, l: usize) -> Result<Subspace> {
    if l == 0 || l >= n {
        return Err(GeomError::InvalidArgument(format!("need 1 ≤ l < n, got l={l}, n={n}")));
    }
    let s = regular_simplex(n)?;
    let vs: Vec<Vector> = s.embedded.iter().take(l).map(|v| s.coords(v)).collect();
    Subspace::span(&vs)
}

/// `|S_n ∩ F_l| = √(n+1) / (l! √(n+1-l))` for edge `√2`.
pub fn simplex_section_volume(n: usize, l: usize) -> f64 {
    (n as f64 + 1.0).sqrt() / (factorial(l) * (n as f64 + 1.0 - l as f64).sqrt())
}

/// Residuals (Hausdorff distances) of the `B_1`/`B_∞` identities for `S_n`, edge `√2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct B1IdentityReport {
    pub n: usize,
    pub normalization: SimplexNormalization,
    /// `conv(S, -S)` vs `Proj_H B_1^{n+1}`.
    pub hull_vs_b1: f64,
    /// `S ∩ (-S)` vs `(B_∞^{n+1} ∩ H)/(n+1)`.
    pub intersection_vs_cube: f64,
    /// Worst over `1 ≤ l < n` of `Proj_{F_l} conv(S,-S)` vs `conv(S∩F_l, -(S∩F_l))`.
    pub projection_vs_hull: f64,
    /// `conv(S,-S)°` vs `(n+1)(S ∩ (-S))`.
    pub polar_cross_check: f64,
}

impl B1IdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.hull_vs_b1.max(self.intersection_vs_cube).max(self.projection_vs_hull).max(self.polar_cross_check)
    }
}

fn cube_halfspaces(m: usize, half: f64) -> (Vec<Vector>, Vec<f64>) {
    let mut a = Vec::with_capacity(2 * m);
    for i in 0..m {
        for s in [1.0, -1.0] {
            let mut v = Vector::zeros(m);
            v[i] = s;
            a.push(v);
        }
    }
    (a, vec![half; 2 * m])
}

pub fn b1_projection_identities(n: usize) -> Result<B1IdentityReport> {
    if n < 2 {
        return Err(GeomError::InvalidArgument("identities need n ≥ 2".into()));
    }
    let s = regular_simplex(n)?;
    let h = s.hyperplane();
    let m = n + 1;
    let hull = s.body.symmetric_hull()?;
    let inter = s.body.symmetric_intersection()?;

    let mut b1 = Vec::with_capacity(2 * m);
    for i in 0..m {
        let mut e = Vector::zeros(m);
        e[i] = 1.0;
        b1.push(e.clone());
        b1.push(-e);
    }
    let proj_b1 = project(&BodyHandle::from_vertices(b1)?, &h)?;
    let hull_vs_b1 = hausdorff_distance(&hull, &proj_b1)?;

    let (a, b) = cube_halfspaces(m, 1.0 / m as f64);
    let cube_section = section(&BodyHandle::from_halfspaces(a, b)?, &h, None)?;
    let intersection_vs_cube = hausdorff_distance(&inter, &cube_section)?;

    let mut projection_vs_hull: f64 = 0.0;
    for l in 1..n {
        let f = simplex_section_subspace(n, l)?;
        let lhs = project(&hull, &f)?;
        let rhs = section(&s.body, &f, None)?.symmetric_hull()?;
        projection_vs_hull = projection_vs_hull.max(hausdorff_distance(&lhs, &rhs)?);
    }

    let polar_cross_check = hausdorff_distance(&hull.polar()?, &inter.scale(m as f64)?)?;
    Ok(B1IdentityReport {
        n,
        normalization: SimplexNormalization::EdgeSqrt2,
        hull_vs_b1,
        intersection_vs_cube,
        projection_vs_hull,
        polar_cross_check,
    })
}

/// Upper bound `(√((n+1)/l))^l` for `l`-dimensional central sections of the
/// unit-volume cube `[-1/2, 1/2]^{n+1}`.
pub fn ball_cube_section_bound(n: usize, l: usize) -> Result<f64> {
    if l == 0 || l > n + 1 {
        return Err(GeomError::InvalidArgument(format!("section dimension {l} outside 1..={}", n + 1)));
    }
    Ok(((n as f64 + 1.0) / l as f64).powf(l as f64 / 2.0))
}

/// Shape of `e_{k+1}(B_1^{n+1}, n^{-1/2} B_2^{n+1})` up to an unspecified
/// absolute constant (taken as 1). Never use for pass/fail decisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchuttReference {
    pub n: usize,
    pub k: f64,
    pub value: f64,
    pub regime: u8,
    pub up_to_absolute_constant: bool,
}

pub fn schutt_entropy_reference(n: usize, k: f64) -> Result<SchuttReference> {
    if n == 0 || !(k > 0.0) || !k.is_finite() {
        return Err(GeomError::InvalidArgument(format!("entropy index {k} out of range")));
    }
    let nf = n as f64;
    let (value, regime) = if k <= (nf + 1.0).ln() {
        (nf.sqrt(), 1)
    } else if k <= nf + 1.0 {
        ((nf / k).sqrt() * (std::f64::consts::E * nf / k).ln().max(0.0).sqrt(), 2)
    } else {
        // Volumetric tail; normalised to meet the middle regime at k = n+1.
        (2f64.powf(-k / nf), 3)
    };
    Ok(SchuttReference { n, k, value, regime, up_to_absolute_constant: true })
}

/// Point distribution for random polytopes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RandomMode {
    #[default]
    GaussianVertices,
    SphereVertices,
}

const MAX_RETRIES: u64 = 64;

/// Hull of `m` i.i.d. points (plus their negatives when `symmetrized`),
/// resampled until full-dimensional. Deterministic in `seed`.
pub fn random_polytope(n: usize, m: usize, mode: RandomMode, symmetrized: bool, seed: u64) -> Result<BodyHandle> {
    if n == 0 || m < n + 1 && !(symmetrized && m >= n) {
        return Err(GeomError::InvalidArgument(format!("need m ≥ n+1 points, got m={m}, n={n}")));
    }
    for attempt in 0..MAX_RETRIES {
        let mut rng = stream_rng(seed, attempt);
        let mut pts: Vec<Vector> = (0..m)
            .map(|_| match mode {
                RandomMode::GaussianVertices => gaussian_vector(n, &mut rng),
                RandomMode::SphereVertices => sphere_point(n, &mut rng),
            })
            .collect();
        if symmetrized {
            let neg: Vec<Vector> = pts.iter().map(|p| -p).collect();
            pts.extend(neg);
        }
        if affine_rank(&pts, 1e-9) < n {
            continue;
        }
        match BodyHandle::from_vertices(pts) {
            Ok(b) if volume(&b).map(|v| v > 1e-9).unwrap_or(false) => return Ok(b),
            _ => continue,
        }
    }
    Err(GeomError::Degenerate)
}

/// `[-1, 1]^n`.
pub fn cube(n: usize) -> Result<BodyHandle> {
    let (a, b) = cube_halfspaces(n, 1.0);
    BodyHandle::from_halfspaces(a, b)
}

/// `B_1^n = conv{±e_i}`.
pub fn cross_polytope(n: usize) -> Result<BodyHandle> {
    let mut v = Vec::with_capacity(2 * n);
    for i in 0..n {
        let mut e = Vector::zeros(n);
        e[i] = 1.0;
        v.push(e.clone());
        v.push(-e);
    }
    BodyHandle::from_vertices(v)
}

pub fn ball(n: usize) -> BodyHandle {
    BodyHandle::from_ellipsoid(EllipsoidBody::ball(n, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelFamily {
    RegularSimplex,
    Cube,
    CrossPolytope,
    Ball,
    Ell1Ball,
    RandomVertexPolytope,
}

impl std::str::FromStr for ModelFamily {
    type Err = GeomError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "regular-simplex" | "simplex" => ModelFamily::RegularSimplex,
            "cube" => ModelFamily::Cube,
            "cross-polytope" | "cross" => ModelFamily::CrossPolytope,
            "ball" => ModelFamily::Ball,
            "ell1-ball" | "l1" => ModelFamily::Ell1Ball,
            "random-vertex-polytope" | "random" => ModelFamily::RandomVertexPolytope,
            other => return Err(GeomError::InvalidArgument(format!("unknown family `{other}`"))),
        })
    }
}

/// A reproducible recipe for a model body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: ModelFamily,
    pub n: usize,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub scale: Option<f64>,
    #[serde(default)]
    pub mode: RandomMode,
    #[serde(default)]
    pub symmetrized: bool,
    #[serde(default)]
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(family: ModelFamily, n: usize) -> Self {
        ModelSpec { family, n, m: None, scale: None, mode: RandomMode::default(), symmetrized: false, seed: 0 }
    }

    pub fn id(&self) -> String {
        let base = match self.family {
            ModelFamily::RegularSimplex => "simplex",
            ModelFamily::Cube => "cube",
            ModelFamily::CrossPolytope => "cross",
            ModelFamily::Ball => "ball",
            ModelFamily::Ell1Ball => "ell1",
            ModelFamily::RandomVertexPolytope => "random",
        };
        match self.family {
            ModelFamily::RandomVertexPolytope => {
                format!("{base}-n{}-m{}-s{}{}", self.n, self.m.unwrap_or(2 * self.n), self.seed, if self.symmetrized { "-sym" } else { "" })
            }
            _ => format!("{base}-n{}", self.n),
        }
    }

    pub fn build(&self) -> Result<BodyHandle> {
        if self.n == 0 {
            return Err(GeomError::InvalidArgument("n must be ≥ 1".into()));
        }
        let body = match self.family {
            ModelFamily::RegularSimplex => regular_simplex(self.n)?.body,
            ModelFamily::Cube => cube(self.n)?,
            ModelFamily::CrossPolytope | ModelFamily::Ell1Ball => cross_polytope(self.n)?,
            ModelFamily::Ball => ball(self.n),
            ModelFamily::RandomVertexPolytope => {
                random_polytope(self.n, self.m.unwrap_or(2 * self.n), self.mode, self.symmetrized, self.seed)?
            }
        };
        match self.scale {
            Some(s) if s != 1.0 => body.scale(s),
            _ => Ok(body),
        }
    }
}

/// Witness that an `(n/l)^γ` comparison of sections of `Ŝ - Ŝ` and
/// `Ŝ ∩ (-Ŝ)` needs `γ ≥ 1/2` (`Ŝ` has edge `(n+1)/√2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionWitness {
    pub n: usize,
    pub l: usize,
    /// `|(Ŝ - Ŝ) ∩ F_l|^{1/l}`.
    pub difference_section: f64,
    /// `|(Ŝ ∩ -Ŝ) ∩ F_l|^{1/l}`.
    pub intersection_section: f64,
    /// Cube-section bound to the power `1/l`.
    pub ball_bound: f64,
    /// Exact ratio over `√(n/l)`.
    pub implied_c: f64,
    /// `|Ŝ ∩ F_l|^{1/l}` over the cube bound, over `√(n/l)`: the guaranteed part.
    pub bound_c: f64,
}

pub fn section_witness(n: usize, l: usize) -> Result<SectionWitness> {
    let s = regular_simplex_with(n, SimplexNormalization::EdgeHalfNPlusOne)?;
    let f = simplex_section_subspace(n, l)?;
    let lf = l as f64;
    let diff = volume(&section(&s.body.difference_body()?, &f, None)?)?.powf(1.0 / lf);
    let inter = volume(&section(&s.body.symmetric_intersection()?, &f, None)?)?.powf(1.0 / lf);
    let own = (((n as f64 + 1.0) / 2.0).powi(l as i32) * simplex_section_volume(n, l)).powf(1.0 / lf);
    let ball_bound = ball_cube_section_bound(n, l)?.powf(1.0 / lf);
    let root = (n as f64 / lf).sqrt();
    Ok(SectionWitness {
        n,
        l,
        difference_section: diff,
        intersection_section: inter,
        ball_bound,
        implied_c: diff / inter / root,
        bound_c: own / ball_bound / root,
    })
}
