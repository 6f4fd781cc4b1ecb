//! Evaluators for the classical volume inequalities on concrete bodies.
//! Constant-free inequalities get a pass flag; inequalities with an
//! unspecified absolute constant report the constant they imply.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::BodyHandle;
use crate::error::{GeomError, Result};
use crate::linalg::{binomial, factorial, unit_ball_volume, Vector};
use crate::models::{random_polytope, ModelFamily, ModelSpec, RandomMode};
use crate::positions::{centre, polar_newton, santalo_position, PositionCase, SantaloOptions};
use crate::sampling::{gaussian_vector, stream_rng};
use crate::subspace::{project, random_subspace, section, Subspace};
use crate::volume::{barycentre, volume};

/// Relative slack allowed on constant-free inequalities.
pub const SLACK: f64 = 1e-6;
/// Offset grid points per dimension of `F^⊥` for the max-section searches.
pub const DEFAULT_GRID: usize = 21;
/// Largest `dim F^⊥` for which offset grids are built.
pub const MAX_GRID_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// `lhs ≤ rhs`.
    AtMost,
    /// `lhs ≥ rhs`.
    AtLeast,
}

/// One evaluated inequality instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityRecord {
    pub inequality: String,
    pub body_id: String,
    pub n: usize,
    pub l: Option<usize>,
    pub subspace_id: Option<u64>,
    pub direction: Option<Vec<f64>>,
    pub lambda: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub relation: Relation,
    /// Defined only for constant-free inequalities.
    pub pass: Option<bool>,
    /// Defined only for inequalities with an absolute constant.
    pub implied_constant: Option<f64>,
    pub position: Option<PositionCase>,
    /// `exact` or `grid` (inner approximation of a max over offsets).
    pub method: String,
    pub seed: Option<u64>,
}

impl InequalityRecord {
    fn constant_free(name: &str, body_id: &str, n: usize, lhs: f64, rhs: f64, relation: Relation) -> Self {
        let pass = match relation {
            Relation::AtMost => lhs <= rhs * (1.0 + SLACK),
            Relation::AtLeast => lhs >= rhs * (1.0 - SLACK),
        };
        InequalityRecord {
            inequality: name.into(),
            body_id: body_id.into(),
            n,
            l: None,
            subspace_id: None,
            direction: None,
            lambda: None,
            lhs,
            rhs,
            ratio: lhs / rhs,
            relation,
            pass: Some(pass),
            implied_constant: None,
            position: None,
            method: "exact".into(),
            seed: None,
        }
    }

    fn with_constant(name: &str, body_id: &str, n: usize, lhs: f64, rhs: f64, implied: f64) -> Self {
        InequalityRecord {
            pass: None,
            implied_constant: Some(implied),
            ..Self::constant_free(name, body_id, n, lhs, rhs, Relation::AtMost)
        }
    }

    fn on(mut self, f: &Subspace, id: Option<u64>) -> Self {
        self.l = Some(f.l);
        self.subspace_id = id;
        self
    }

    fn at(mut self, position: PositionCase) -> Self {
        self.position = Some(position);
        self
    }

    fn by(mut self, method: &str) -> Self {
        self.method = method.into();
        self
    }

    /// Larger is worse: the ratio oriented against the inequality, or the implied constant.
    pub fn severity(&self) -> f64 {
        match (self.implied_constant, self.relation) {
            (Some(c), _) => c,
            (None, Relation::AtMost) => self.ratio,
            (None, Relation::AtLeast) => 1.0 / self.ratio,
        }
    }

    pub fn failed(&self) -> bool {
        self.pass == Some(false)
    }
}

/// `H = {x : ⟨u, x⟩ = a}` together with `λ = |K ∩ H^+| / |K|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatingHyperplane {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub lambda: f64,
}

impl SeparatingHyperplane {
    /// Measures `λ` for the hyperplane with (normalised) normal `u` and offset `a`.
    pub fn measure(k: &BodyHandle, u: &Vector, a: f64) -> Result<Self> {
        let nrm = u.norm();
        if !(nrm > 0.0) {
            return Err(GeomError::InvalidArgument("hyperplane normal must be non-zero".into()));
        }
        let u = u / nrm;
        let a = a / nrm;
        let lambda = halfspace_fraction(k, &u, a)?;
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(GeomError::InvalidArgument(format!("hyperplane misses the interior (λ = {lambda})")));
        }
        Ok(SeparatingHyperplane { normal: u.iter().copied().collect(), offset: a, lambda })
    }

    pub fn normal_vec(&self) -> Vector {
        Vector::from_row_slice(&self.normal)
    }
}

/// `|K ∩ {⟨u,x⟩ ≥ a}| / |K|`.
pub fn halfspace_fraction(k: &BodyHandle, u: &Vector, a: f64) -> Result<f64> {
    if let Some(e) = k.ellipsoid() {
        if (u.dot(&e.center) - a).abs() <= 1e-12 * u.norm() {
            return Ok(0.5);
        }
        return Err(GeomError::UnsupportedRepresentation("off-centre cut of an ellipsoid".into()));
    }
    let (mut normals, mut offsets) = k.halfspaces()?;
    normals.push(-u);
    offsets.push(-a);
    let cut = BodyHandle::from_halfspaces(normals, offsets)?;
    let part = match volume(&cut) {
        Ok(v) => v,
        Err(GeomError::Degenerate | GeomError::Infeasible) => 0.0,
        Err(e) => return Err(e),
    };
    Ok(part / volume(k)?)
}

fn scale_of(k: &BodyHandle) -> Result<f64> {
    let (lo, hi) = k.bounding_box()?;
    Ok((hi - lo).amax().max(1.0))
}

fn require_centred(k: &BodyHandle) -> Result<()> {
    let b = barycentre(k)?;
    if b.norm() > 1e-8 * scale_of(k)? {
        return Err(GeomError::Position(format!("barycentre at distance {:.3e} from the origin", b.norm())));
    }
    Ok(())
}

fn require_santalo(k: &BodyHandle) -> Result<()> {
    if k.ellipsoid().is_some() {
        return require_centred(k);
    }
    let b = barycentre(&k.polar()?)?;
    if b.norm() > 1e-6 * scale_of(&k.polar()?)? {
        return Err(GeomError::Position(format!("polar barycentre at distance {:.3e} from the origin", b.norm())));
    }
    Ok(())
}

fn require_position(k: &BodyHandle, case: PositionCase) -> Result<()> {
    match case {
        PositionCase::Barycentre => require_centred(k),
        PositionCase::Santalo => require_santalo(k),
    }
}

fn sub_volume(b: Result<BodyHandle>) -> Result<f64> {
    match b {
        Ok(b) => volume(&b),
        Err(GeomError::EmptySection) => Ok(0.0),
        Err(e) => Err(e),
    }
}

// ---------------------------------------------------------------------------
// Volume products

/// `|K| |K°| ≤ |B_2^n|²` for a body with barycentre or Santaló point at 0.
pub fn check_blaschke_santalo(k: &BodyHandle, id: &str, case: PositionCase) -> Result<InequalityRecord> {
    require_position(k, case)?;
    let n = k.dim();
    let lhs = volume(k)? * volume(&k.polar()?)?;
    Ok(InequalityRecord::constant_free("blaschke_santalo", id, n, lhs, unit_ball_volume(n).powi(2), Relation::AtMost).at(case))
}

/// `|S_n| |S_n°|` for the regular simplex.
pub fn simplex_volume_product(n: usize) -> f64 {
    let s = (n as f64 + 1.0).sqrt() / factorial(n);
    s * s * (n as f64 + 1.0).powi(n as i32)
}

/// `|K| |K°|` against the simplex value; reported only.
pub fn check_volume_product_lower(k: &BodyHandle, id: &str) -> Result<InequalityRecord> {
    let n = k.dim();
    let lhs = volume(k)? * volume(&k.polar()?)?;
    let rhs = simplex_volume_product(n);
    let mut r = InequalityRecord::constant_free("volume_product_lower", id, n, lhs, rhs, Relation::AtLeast);
    r.implied_constant = Some(rhs / lhs);
    r.pass = None;
    Ok(r)
}

/// `(|Proj_F K| |K° ∩ F|)^{1/l} ≤ C (n/l) |B_2^l|^{2/l}`.
pub fn check_bs_projection(k: &BodyHandle, f: &Subspace, id: &str, case: PositionCase) -> Result<InequalityRecord> {
    require_position(k, case)?;
    let (n, l) = (k.dim(), f.l);
    let lf = l as f64;
    let p = volume(&project(k, f)?)?;
    let s = volume(&section(&k.polar()?, f, None)?)?;
    let lhs = (p * s).powf(1.0 / lf);
    let rhs = n as f64 / lf * unit_ball_volume(l).powf(2.0 / lf);
    Ok(InequalityRecord::with_constant("bs_projection", id, n, lhs, rhs, lhs / rhs).on(f, None).at(case))
}

/// Minimises `|(K - z)°|` over `z ∈ int K ∩ H` and checks
/// `|K| |(K - z*)°| ≤ |B_2^n|² / (4λ(1-λ))`. Returns the record and `z*`.
pub fn check_meyer_pajor(k: &BodyHandle, h: &SeparatingHyperplane, id: &str) -> Result<(InequalityRecord, Vector)> {
    let n = k.dim();
    if n < 2 {
        return Err(GeomError::InvalidArgument("hyperplane checks need n ≥ 2".into()));
    }
    let u = h.normal_vec();
    let rhs = unit_ball_volume(n).powi(2) / (4.0 * h.lambda * (1.0 - h.lambda));
    let (lhs, z) = if let Some(e) = k.ellipsoid() {
        if (u.dot(&e.center) - h.offset).abs() > 1e-12 {
            return Err(GeomError::UnsupportedRepresentation("off-centre hyperplane through an ellipsoid".into()));
        }
        (volume(k)? * volume(&k.translate(&-&e.center)?.polar()?)?, e.center.clone())
    } else {
        let along = Subspace::span(std::slice::from_ref(&u))?;
        let w = along.complement();
        let y = &u * h.offset;
        let slice = section(k, &w, Some(&y))?;
        let z0 = w.embed(&barycentre(&slice)?) + &y;
        let dd = k.double_description()?;
        let opts = SantaloOptions { max_iterations: 200, tolerance: 1e-5 };
        let (z, residual, iterations) = polar_newton(&dd, z0, Some(&w.basis), opts)?;
        if residual > opts.tolerance {
            return Err(GeomError::NoConvergence { iterations, residual, best: z.iter().copied().collect() });
        }
        (volume(k)? * volume(&k.translate(&-&z)?.polar()?)?, z)
    };
    let mut r = InequalityRecord::constant_free("meyer_pajor", id, n, lhs, rhs, Relation::AtMost);
    r.lambda = Some(h.lambda);
    r.direction = Some(h.normal.clone());
    Ok((r, z))
}

// ---------------------------------------------------------------------------
// Symmetrisations

/// `|K - K| ≤ C(2n, n) |K|`, equality exactly for simplices.
pub fn check_rogers_shephard(k: &BodyHandle, id: &str) -> Result<InequalityRecord> {
    let n = k.dim();
    let lhs = volume(&k.difference_body()?)?;
    Ok(InequalityRecord::constant_free("rogers_shephard", id, n, lhs, binomial(2 * n, n) * volume(k)?, Relation::AtMost))
}

/// `|conv(K, -K)| ≤ 2^n |K|` for `0 ∈ K`.
pub fn check_sym_hull(k: &BodyHandle, id: &str) -> Result<InequalityRecord> {
    let n = k.dim();
    let lhs = volume(&k.symmetric_hull()?)?;
    Ok(InequalityRecord::constant_free("sym_hull", id, n, lhs, 2f64.powi(n as i32) * volume(k)?, Relation::AtMost))
}

/// `|K ∩ (-K)| ≥ 2^{-n} |K|` for centred `K`.
pub fn check_milman_pajor(k: &BodyHandle, id: &str) -> Result<InequalityRecord> {
    require_centred(k)?;
    let n = k.dim();
    let lhs = volume(&k.symmetric_intersection()?)?;
    Ok(InequalityRecord::constant_free("milman_pajor", id, n, lhs, volume(k)? / 2f64.powi(n as i32), Relation::AtLeast)
        .at(PositionCase::Barycentre))
}

// ---------------------------------------------------------------------------
// Sections

/// Offsets `y ∈ F^⊥` on a `points^d` grid spanning the extent of `K`
/// along `F^⊥`, with the origin always included.
pub fn offset_grid(k: &BodyHandle, f: &Subspace, points: usize) -> Result<Vec<Vector>> {
    let w = f.complement();
    if w.l > MAX_GRID_DIM {
        return Err(GeomError::DimensionCap { n: w.l, cap: MAX_GRID_DIM });
    }
    if points < 2 {
        return Err(GeomError::InvalidArgument("offset grid needs ≥ 2 points per axis".into()));
    }
    let mut axes = Vec::with_capacity(w.l);
    for j in 0..w.l {
        let col: Vector = w.basis.column(j).into();
        let hi = k.support_value(&col)?;
        let lo = -k.support_value(&-&col)?;
        axes.push((0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect::<Vec<_>>());
    }
    let mut out = vec![Vector::zeros(f.n)];
    let total = points.pow(w.l as u32);
    for mut idx in 0..total {
        let mut c = Vector::zeros(w.l);
        for j in 0..w.l {
            c[j] = axes[j][idx % points];
            idx /= points;
        }
        out.push(w.embed(&c));
    }
    Ok(out)
}

/// Largest section volume `|K ∩ (y + F)|` over the offset grid.
pub fn max_section_on_grid(k: &BodyHandle, f: &Subspace, points: usize) -> Result<f64> {
    let grid = offset_grid(k, f, points)?;
    let vols = grid.par_iter().map(|y| sub_volume(section(k, f, Some(y)))).collect::<Result<Vec<_>>>()?;
    Ok(vols.into_iter().fold(0.0, f64::max))
}

/// `max_y |K ∩ (y + F)| ≤ ((n+1)/(l+1))^l |K ∩ F|` for centred `K`.
pub fn check_fradelizi(k: &BodyHandle, f: &Subspace, points: usize, id: &str) -> Result<InequalityRecord> {
    require_centred(k)?;
    let (n, l) = (k.dim(), f.l);
    let central = volume(&section(k, f, None)?)?;
    let lhs = max_section_on_grid(k, f, points)?;
    let rhs = ((n as f64 + 1.0) / (l as f64 + 1.0)).powi(l as i32) * central;
    Ok(InequalityRecord::constant_free("fradelizi", id, n, lhs, rhs, Relation::AtMost)
        .on(f, None)
        .at(PositionCase::Barycentre)
        .by("grid"))
}

/// `|(K - K) ∩ F|^{1/l} ≤ C min{√l, n/l} max_y |K ∩ (y + F)|^{1/l}`.
pub fn check_rudelson(k: &BodyHandle, f: &Subspace, points: usize, id: &str) -> Result<InequalityRecord> {
    let (n, l) = (k.dim(), f.l);
    let lf = l as f64;
    let lhs = volume(&section(&k.difference_body()?, f, None)?)?.powf(1.0 / lf);
    let rhs = lf.sqrt().min(n as f64 / lf) * max_section_on_grid(k, f, points)?.powf(1.0 / lf);
    Ok(InequalityRecord::with_constant("rudelson", id, n, lhs, rhs, lhs / rhs).on(f, None).by("grid"))
}

/// `|K| ≤ |Proj_F K| |K ∩ F^⊥| ≤ C(n, l) |K|`: lower bound for centred
/// bodies, upper bound whenever `0 ∈ int K`.
pub fn check_rs_spingarn(k: &BodyHandle, f: &Subspace, id: &str) -> Result<(InequalityRecord, InequalityRecord)> {
    let (n, l) = (k.dim(), f.l);
    let vol = volume(k)?;
    let product = volume(&project(k, f)?)? * volume(&section(k, &f.complement(), None)?)?;
    let upper = InequalityRecord::constant_free("rs_spingarn_upper", id, n, product, binomial(n, l) * vol, Relation::AtMost).on(f, None);
    require_centred(k)?;
    let lower = InequalityRecord::constant_free("rs_spingarn_lower", id, n, product, vol, Relation::AtLeast)
        .on(f, None)
        .at(PositionCase::Barycentre);
    Ok((lower, upper))
}

/// Fractions of `Proj_F K` and of `K ∩ F` on the positive side of `ξ^⊥`
/// (`ξ` in `F`-coordinates), each against `(l/(n+1))^l`.
pub fn check_halfspace_sections(k: &BodyHandle, f: &Subspace, xi: &Vector, id: &str) -> Result<(InequalityRecord, InequalityRecord)> {
    require_centred(k)?;
    if xi.len() != f.l {
        return Err(GeomError::DimensionMismatch { expected: f.l, got: xi.len() });
    }
    if !(xi.norm() > 0.0) {
        return Err(GeomError::InvalidArgument("ξ must be non-zero".into()));
    }
    let (n, l) = (k.dim(), f.l);
    let bound = (l as f64 / (n as f64 + 1.0)).powi(l as i32);
    let proj = halfspace_fraction(&project(k, f)?, xi, 0.0)?;
    let sect = halfspace_fraction(&section(k, f, None)?, xi, 0.0)?;
    let dir: Vec<f64> = f.embed(xi).iter().copied().collect();
    let mut a = InequalityRecord::constant_free("stephen_zhang", id, n, proj, bound, Relation::AtLeast).on(f, None);
    let mut b = InequalityRecord::constant_free("msz", id, n, sect, bound, Relation::AtLeast).on(f, None);
    a.direction = Some(dir.clone());
    b.direction = Some(dir);
    Ok((a.at(PositionCase::Barycentre), b.at(PositionCase::Barycentre)))
}

/// `|Proj_F conv(K,-K)|^{1/l} ≤ C (n/l)^p [log(en/l)]^q |Proj_F(K ∩ -K)|^{1/l}`
/// with `(p, q) = (3, 0)` at the Santaló point and `(5, 2)` at the barycentre.
/// `ratio` is the raw volume-radius ratio; the implied constant divides out
/// the dimensional factor.
pub fn check_projection_comparison(k: &BodyHandle, f: &Subspace, id: &str, case: PositionCase) -> Result<InequalityRecord> {
    require_position(k, case)?;
    let (n, l) = (k.dim(), f.l);
    let lf = l as f64;
    let hull = volume(&project(&k.symmetric_hull()?, f)?)?.powf(1.0 / lf);
    let inter = volume(&project(&k.symmetric_intersection()?, f)?)?.powf(1.0 / lf);
    let nl = n as f64 / lf;
    let factor = match case {
        PositionCase::Santalo => nl.powi(3),
        PositionCase::Barycentre => nl.powi(5) * (std::f64::consts::E * nl).ln().powi(2),
    };
    Ok(InequalityRecord::with_constant("projection_comparison", id, n, hull, inter, hull / inter / factor).on(f, None).at(case))
}

// ---------------------------------------------------------------------------
// Sweeps

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityKind {
    BlaschkeSantalo,
    VolumeProductLower,
    BsProjection,
    MeyerPajor,
    RogersShephard,
    SymHull,
    MilmanPajor,
    Fradelizi,
    Rudelson,
    RsSpingarn,
    HalfspaceSections,
    ProjectionComparison,
}

impl InequalityKind {
    pub const ALL: [InequalityKind; 12] = [
        InequalityKind::BlaschkeSantalo,
        InequalityKind::VolumeProductLower,
        InequalityKind::BsProjection,
        InequalityKind::MeyerPajor,
        InequalityKind::RogersShephard,
        InequalityKind::SymHull,
        InequalityKind::MilmanPajor,
        InequalityKind::Fradelizi,
        InequalityKind::Rudelson,
        InequalityKind::RsSpingarn,
        InequalityKind::HalfspaceSections,
        InequalityKind::ProjectionComparison,
    ];

    /// The constant-free members of the suite.
    pub const CONSTANT_FREE: [InequalityKind; 8] = [
        InequalityKind::BlaschkeSantalo,
        InequalityKind::MeyerPajor,
        InequalityKind::RogersShephard,
        InequalityKind::SymHull,
        InequalityKind::MilmanPajor,
        InequalityKind::Fradelizi,
        InequalityKind::RsSpingarn,
        InequalityKind::HalfspaceSections,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InequalityKind::BlaschkeSantalo => "blaschke_santalo",
            InequalityKind::VolumeProductLower => "volume_product_lower",
            InequalityKind::BsProjection => "bs_projection",
            InequalityKind::MeyerPajor => "meyer_pajor",
            InequalityKind::RogersShephard => "rogers_shephard",
            InequalityKind::SymHull => "sym_hull",
            InequalityKind::MilmanPajor => "milman_pajor",
            InequalityKind::Fradelizi => "fradelizi",
            InequalityKind::Rudelson => "rudelson",
            InequalityKind::RsSpingarn => "rs_spingarn",
            InequalityKind::HalfspaceSections => "halfspace_sections",
            InequalityKind::ProjectionComparison => "projection_comparison",
        }
    }

    /// Whether the inequality involves a subspace `F`.
    pub fn uses_subspace(self) -> bool {
        matches!(
            self,
            InequalityKind::BsProjection
                | InequalityKind::Fradelizi
                | InequalityKind::Rudelson
                | InequalityKind::RsSpingarn
                | InequalityKind::HalfspaceSections
                | InequalityKind::ProjectionComparison
        )
    }

    /// Admissible subspace dimensions in `R^n`.
    pub fn admits(self, n: usize, l: usize) -> bool {
        match self {
            InequalityKind::HalfspaceSections => (1..=n).contains(&l),
            InequalityKind::Fradelizi | InequalityKind::Rudelson => l >= 1 && l < n && n - l <= MAX_GRID_DIM,
            _ => l >= 1 && l < n,
        }
    }

    fn position(self) -> Option<PositionCase> {
        match self {
            InequalityKind::RogersShephard => None,
            InequalityKind::VolumeProductLower | InequalityKind::BsProjection | InequalityKind::ProjectionComparison => {
                Some(PositionCase::Santalo)
            }
            _ => Some(PositionCase::Barycentre),
        }
    }
}

impl std::str::FromStr for InequalityKind {
    type Err = GeomError;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.replace('-', "_");
        match key.as_str() {
            "stephen_zhang" | "msz" => return Ok(InequalityKind::HalfspaceSections),
            "rs_spingarn_lower" | "rs_spingarn_upper" => return Ok(InequalityKind::RsSpingarn),
            _ => {}
        }
        InequalityKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| GeomError::InvalidArgument(format!("unknown inequality `{s}`")))
    }
}

/// Puts `k` into the position `kind` expects.
pub fn position_for(kind: InequalityKind, k: &BodyHandle) -> Result<BodyHandle> {
    match kind.position() {
        None => Ok(k.clone()),
        Some(PositionCase::Barycentre) => Ok(centre(k)?.0),
        Some(PositionCase::Santalo) => Ok(santalo_position(k)?.0),
    }
}

fn unit_direction(n: usize, seed: u64, stream: u64) -> Vector {
    let mut rng = stream_rng(seed, stream);
    loop {
        let g = gaussian_vector(n, &mut rng);
        if g.norm() > 1e-9 {
            return g.normalize();
        }
    }
}

/// Evaluates `kind` on an already positioned body. `f` is required for the
/// subspace inequalities; `seed` drives any random direction.
pub fn evaluate(
    kind: InequalityKind,
    k: &BodyHandle,
    id: &str,
    f: Option<(&Subspace, u64)>,
    seed: u64,
) -> Result<Vec<InequalityRecord>> {
    let need = || f.ok_or_else(|| GeomError::InvalidArgument(format!("{} needs a subspace", kind.name())));
    let tag = |mut r: InequalityRecord| {
        r.seed = Some(seed);
        if let Some((_, id)) = f {
            if r.l.is_some() {
                r.subspace_id = Some(id);
            }
        }
        r
    };
    let records = match kind {
        InequalityKind::BlaschkeSantalo => vec![check_blaschke_santalo(k, id, PositionCase::Barycentre)?],
        InequalityKind::VolumeProductLower => vec![check_volume_product_lower(k, id)?.at(PositionCase::Santalo)],
        InequalityKind::BsProjection => vec![check_bs_projection(k, need()?.0, id, PositionCase::Santalo)?],
        InequalityKind::MeyerPajor => {
            let u = unit_direction(k.dim(), seed, 0);
            let h = SeparatingHyperplane::measure(k, &u, 0.0)?;
            vec![check_meyer_pajor(k, &h, id)?.0]
        }
        InequalityKind::RogersShephard => vec![check_rogers_shephard(k, id)?],
        InequalityKind::SymHull => vec![check_sym_hull(k, id)?],
        InequalityKind::MilmanPajor => vec![check_milman_pajor(k, id)?],
        InequalityKind::Fradelizi => vec![check_fradelizi(k, need()?.0, DEFAULT_GRID, id)?],
        InequalityKind::Rudelson => vec![check_rudelson(k, need()?.0, DEFAULT_GRID, id)?],
        InequalityKind::RsSpingarn => {
            let (a, b) = check_rs_spingarn(k, need()?.0, id)?;
            vec![a, b]
        }
        InequalityKind::HalfspaceSections => {
            let f = need()?.0;
            let xi = unit_direction(f.l, seed, 1);
            let (a, b) = check_halfspace_sections(k, f, &xi, id)?;
            vec![a, b]
        }
        InequalityKind::ProjectionComparison => vec![check_projection_comparison(k, need()?.0, id, PositionCase::Santalo)?],
    };
    Ok(records.into_iter().map(tag).collect())
}

/// Worst record of one `(n, l, inequality)` cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub l: Option<usize>,
    pub inequality: String,
    pub evaluated: usize,
    pub failures: usize,
    pub errors: Vec<String>,
    pub worst: Option<InequalityRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub family: ModelFamily,
    pub kind: InequalityKind,
    pub seed: u64,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn failures(&self) -> usize {
        self.rows.iter().map(|r| r.failures).sum()
    }
}

/// Which bodies a sweep visits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Bodies per dimension for random families; subspaces per body otherwise.
    pub samples: usize,
    pub seed: u64,
    /// Vertices per random body as a multiple of `n` (at least `n + 1`).
    pub vertex_factor: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { samples: 10, seed: 0, vertex_factor: 2 }
    }
}

fn cell_seed(seed: u64, n: usize, l: usize, i: usize) -> u64 {
    seed ^ ((n as u64) << 48) ^ ((l as u64) << 32) ^ i as u64
}

/// Evaluates `kind` over a body family and a range of dimensions, keeping
/// the worst record per `(n, l)` cell. Cells run in parallel; rows come back
/// in `(n, l)` order.
pub fn sweep(family: ModelFamily, kind: InequalityKind, ns: &[usize], ls: &[usize], opts: SweepOptions) -> SweepTable {
    let mut cells: Vec<(usize, Option<usize>)> = Vec::new();
    for &n in ns {
        if kind.uses_subspace() {
            let mut seen: Vec<usize> = ls.iter().copied().filter(|&l| kind.admits(n, l)).collect();
            seen.sort_unstable();
            seen.dedup();
            cells.extend(seen.into_iter().map(|l| (n, Some(l))));
        } else {
            cells.push((n, None));
        }
    }
    let random = family == ModelFamily::RandomVertexPolytope;
    let rows: BTreeMap<(usize, Option<usize>), SweepRow> = cells
        .par_iter()
        .map(|&(n, l)| {
            let bodies = if random { opts.samples.max(1) } else { 1 };
            let subspaces = if kind.uses_subspace() && !random { opts.samples.max(1) } else { 1 };
            let mut row = SweepRow { n, l, inequality: kind.name().into(), evaluated: 0, failures: 0, errors: Vec::new(), worst: None };
            for b in 0..bodies {
                let seed = cell_seed(opts.seed, n, l.unwrap_or(0), b);
                let spec = ModelSpec {
                    m: Some((opts.vertex_factor * n).max(n + 1)),
                    mode: RandomMode::GaussianVertices,
                    seed,
                    ..ModelSpec::new(family, n)
                };
                let id = spec.id();
                let body = match spec.build().and_then(|k| position_for(kind, &k)) {
                    Ok(k) => k,
                    Err(e) => {
                        row.errors.push(format!("{id}: {e}"));
                        continue;
                    }
                };
                for s in 0..subspaces {
                    let sub_seed = cell_seed(seed, n, s, 0x5eed);
                    let f = match l {
                        Some(l) => match random_subspace(n, l, sub_seed) {
                            Ok(f) => Some((f, s as u64)),
                            Err(e) => {
                                row.errors.push(format!("{id}: {e}"));
                                continue;
                            }
                        },
                        None => None,
                    };
                    match evaluate(kind, &body, &id, f.as_ref().map(|(f, i)| (f, *i)), sub_seed) {
                        Ok(recs) => {
                            for r in recs {
                                row.evaluated += 1;
                                row.failures += r.failed() as usize;
                                if row.worst.as_ref().is_none_or(|w| r.severity() > w.severity()) {
                                    row.worst = Some(r);
                                }
                            }
                        }
                        Err(e) => row.errors.push(format!("{id}: {e}")),
                    }
                }
            }
            ((n, l), row)
        })
        .collect();
    SweepTable { family, kind, seed: opts.seed, rows: rows.into_values().collect() }
}

/// Both sides of `(n+1)^l |S∩F|² ≤ |Proj_F S°| |S∩F| ≤ (2(n+1))^l |S∩F|²`
/// for the regular simplex and its distinguished section `F_l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplexProductChain {
    pub n: usize,
    pub l: usize,
    pub lower: f64,
    pub product: f64,
    pub upper: f64,
}

impl SimplexProductChain {
    pub fn holds(&self) -> bool {
        self.lower <= self.product * (1.0 + SLACK) && self.product <= self.upper * (1.0 + SLACK)
    }
}

pub fn simplex_product_chain(n: usize, l: usize) -> Result<SimplexProductChain> {
    let s = crate::models::regular_simplex(n)?;
    let f = crate::models::simplex_section_subspace(n, l)?;
    let sec = volume(&section(&s.body, &f, None)?)?;
    let proj = volume(&project(&s.body.polar()?, &f)?)?;
    let base = sec * sec;
    let m = n as f64 + 1.0;
    Ok(SimplexProductChain { n, l, lower: m.powi(l as i32) * base, product: proj * sec, upper: (2.0 * m).powi(l as i32) * base })
}

/// `random_polytope` followed by centring.
pub fn random_centred_polytope(n: usize, m: usize, seed: u64) -> Result<BodyHandle> {
    Ok(centre(&random_polytope(n, m, RandomMode::GaussianVertices, false, seed)?)?.0)
}
