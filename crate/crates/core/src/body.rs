//! Convex bodies in vertex, halfspace or ellipsoid form, and the exact body
//! algebra on them: support and gauge functions, polarity, affine images,
//! the three symmetrisations, radii and representation conversion.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::dd::{self, DoubleDescription};
use crate::error::{GeomError, Result};
use crate::linalg::{distance_to_hull, inverse, sym_eigen, sym_sqrt, Matrix, Vector};
use crate::lp::{maximize, LpOutcome};

/// Numerical tolerances carried by every handle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Absolute tolerance for deduplication and extremeness on unit-scale bodies.
    pub dedup: f64,
    /// Largest dimension for exact conversion and exact volume.
    pub exact_cap: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { dedup: 1e-9, exact_cap: 10 }
    }
}

/// A polytope given by its vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct VBody {
    pub n: usize,
    pub vertices: Vec<Vector>,
}

/// A polytope given by halfspaces `<a_i, x> <= b_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct HBody {
    pub n: usize,
    pub normals: Vec<Vector>,
    pub offsets: Vec<f64>,
}

/// The ellipsoid `center + shape(B_2^n)` with `shape` symmetric positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidBody {
    pub n: usize,
    pub center: Vector,
    pub shape: Matrix,
}

impl EllipsoidBody {
    pub fn new(center: Vector, shape: Matrix) -> Result<Self> {
        let n = center.len();
        if shape.nrows() != n || shape.ncols() != n {
            return Err(GeomError::DimensionMismatch { expected: n, got: shape.nrows() });
        }
        let asym = (&shape - shape.transpose()).amax();
        if asym > 1e-9 * shape.amax().max(1.0) {
            return Err(GeomError::InvalidArgument("ellipsoid shape must be symmetric".into()));
        }
        let (vals, _) = sym_eigen(&shape);
        if vals.last().is_none_or(|&v| v <= 0.0) {
            return Err(GeomError::InvalidArgument("ellipsoid shape must be positive definite".into()));
        }
        let shape = (&shape + shape.transpose()) * 0.5;
        Ok(EllipsoidBody { n, center, shape })
    }

    pub fn ball(n: usize, radius: f64) -> Self {
        EllipsoidBody { n, center: Vector::zeros(n), shape: Matrix::identity(n, n) * radius }
    }

    pub fn diagonal(axes: &[f64]) -> Result<Self> {
        let n = axes.len();
        Self::new(Vector::zeros(n), Matrix::from_diagonal(&Vector::from_row_slice(axes)))
    }

    /// Semi-axis lengths, descending.
    pub fn semiaxes(&self) -> Vec<f64> {
        sym_eigen(&self.shape).0
    }

    pub fn is_centered(&self, tol: f64) -> bool {
        self.center.amax() <= tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    V(VBody),
    H(HBody),
    Ellipsoid(EllipsoidBody),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RepKind {
    V,
    H,
    Ellipsoid,
}

#[derive(Debug, Clone, Default)]
struct Cache {
    dd: OnceLock<std::result::Result<Arc<DoubleDescription>, GeomError>>,
    volume: OnceLock<f64>,
    barycentre: OnceLock<Vector>,
    radii: OnceLock<(f64, f64)>,
}

/// A convex body together with lazily computed metadata. Handles are
/// immutable: every transformation returns a fresh handle with empty caches.
#[derive(Debug, Clone)]
pub struct BodyHandle {
    repr: Representation,
    tol: Tolerances,
    cache: Cache,
}

impl PartialEq for BodyHandle {
    fn eq(&self, other: &Self) -> bool {
        self.repr == other.repr
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(GeomError::DimensionMismatch { expected, got });
    }
    Ok(())
}

impl BodyHandle {
    pub fn from_vertices(vertices: Vec<Vector>) -> Result<Self> {
        let n = vertices.first().map(|v| v.len()).ok_or(GeomError::Degenerate)?;
        for v in &vertices {
            check_dim(n, v.len())?;
        }
        Ok(Self::new(Representation::V(VBody { n, vertices })))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_vertices(rows.iter().map(|r| Vector::from_row_slice(r)).collect())
    }

    pub fn from_halfspaces(normals: Vec<Vector>, offsets: Vec<f64>) -> Result<Self> {
        let n = normals.first().map(|v| v.len()).ok_or(GeomError::Unbounded)?;
        if normals.len() != offsets.len() {
            return Err(GeomError::InvalidArgument("normals and offsets differ in length".into()));
        }
        for a in &normals {
            check_dim(n, a.len())?;
        }
        Ok(Self::new(Representation::H(HBody { n, normals, offsets })))
    }

    pub fn from_ellipsoid(e: EllipsoidBody) -> Self {
        Self::new(Representation::Ellipsoid(e))
    }

    pub fn new(repr: Representation) -> Self {
        BodyHandle { repr, tol: Tolerances::default(), cache: Cache::default() }
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self.cache = Cache::default();
        self
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn kind(&self) -> RepKind {
        match self.repr {
            Representation::V(_) => RepKind::V,
            Representation::H(_) => RepKind::H,
            Representation::Ellipsoid(_) => RepKind::Ellipsoid,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            Representation::V(v) => v.n,
            Representation::H(h) => h.n,
            Representation::Ellipsoid(e) => e.n,
        }
    }

    pub fn is_polytope(&self) -> bool {
        !matches!(self.repr, Representation::Ellipsoid(_))
    }

    pub fn ellipsoid(&self) -> Option<&EllipsoidBody> {
        match &self.repr {
            Representation::Ellipsoid(e) => Some(e),
            _ => None,
        }
    }

    fn derived(&self, repr: Representation) -> Self {
        BodyHandle { repr, tol: self.tol, cache: Cache::default() }
    }

    /// Cached double description (polytopes only).
    pub fn double_description(&self) -> Result<Arc<DoubleDescription>> {
        let n = self.dim();
        self.cache
            .dd
            .get_or_init(|| {
                if n > self.tol.exact_cap {
                    return Err(GeomError::DimensionCap { n, cap: self.tol.exact_cap });
                }
                match &self.repr {
                    Representation::V(v) => dd::from_vertices(&v.vertices, self.tol.dedup).map(Arc::new),
                    Representation::H(h) => dd::from_halfspaces(&h.normals, &h.offsets, self.tol.dedup).map(Arc::new),
                    Representation::Ellipsoid(_) => Err(GeomError::UnsupportedRepresentation(
                        "ellipsoids have no vertex/facet description".into(),
                    )),
                }
            })
            .clone()
    }

    /// Builds a handle directly from an already computed description.
    pub fn from_double_description(dd: DoubleDescription) -> Self {
        let vertices = dd.vertices.clone();
        let h = BodyHandle::new(Representation::V(VBody { n: dd.n, vertices }));
        let _ = h.cache.dd.set(Ok(Arc::new(dd)));
        h
    }

    /// Vertex list (converting if necessary).
    pub fn vertices(&self) -> Result<Vec<Vector>> {
        match &self.repr {
            Representation::V(_) | Representation::H(_) => Ok(self.double_description()?.vertices.clone()),
            Representation::Ellipsoid(_) => Err(GeomError::UnsupportedRepresentation("ellipsoid has no vertices".into())),
        }
    }

    /// Raw generating points without extremeness pruning (V-bodies only).
    fn generators(&self) -> Result<Vec<Vector>> {
        match &self.repr {
            Representation::V(v) => Ok(v.vertices.clone()),
            _ => self.vertices(),
        }
    }

    /// Irredundant halfspaces (converting if necessary).
    pub fn halfspaces(&self) -> Result<(Vec<Vector>, Vec<f64>)> {
        let dd = self.double_description()?;
        Ok((dd.facets.iter().map(|f| f.normal.clone()).collect(), dd.facets.iter().map(|f| f.offset).collect()))
    }

    pub fn support_value(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        match &self.repr {
            Representation::V(v) => Ok(v.vertices.iter().map(|p| p.dot(x)).fold(f64::NEG_INFINITY, f64::max)),
            Representation::H(h) => {
                if let Some(Ok(dd)) = self.cache.dd.get() {
                    return Ok(dd.vertices.iter().map(|p| p.dot(x)).fold(f64::NEG_INFINITY, f64::max));
                }
                let rows: Vec<Vec<f64>> = h.normals.iter().map(|a| a.iter().copied().collect()).collect();
                let c: Vec<f64> = x.iter().copied().collect();
                match maximize(&c, &rows, &h.offsets) {
                    LpOutcome::Optimal { value, .. } => Ok(value),
                    LpOutcome::Unbounded => {
                        Err(GeomError::InvariantViolation("support LP unbounded: halfspace body is not bounded".into()))
                    }
                    LpOutcome::Infeasible => Err(GeomError::Infeasible),
                }
            }
            Representation::Ellipsoid(e) => Ok(e.center.dot(x) + (e.shape.transpose() * x).norm()),
        }
    }

    /// Minkowski functional `||x||_K`; requires the origin in the interior.
    pub fn gauge_value(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        if !self.origin_interior()? {
            return Err(GeomError::OriginNotInterior);
        }
        if x.amax() == 0.0 {
            return Ok(0.0);
        }
        match &self.repr {
            Representation::H(h) => Ok(h
                .normals
                .iter()
                .zip(&h.offsets)
                .map(|(a, b)| a.dot(x) / b)
                .fold(0.0, f64::max)),
            Representation::V(_) => {
                let dd = self.double_description()?;
                Ok(dd.facets.iter().map(|f| f.normal.dot(x) / f.offset).fold(0.0, f64::max))
            }
            Representation::Ellipsoid(e) => {
                let tinv = inverse(&e.shape)?;
                let u = &tinv * x;
                let w = &tinv * &e.center;
                let uu = u.norm_squared();
                let uw = u.dot(&w);
                let disc = uw * uw - uu * (w.norm_squared() - 1.0);
                let s = (uw + disc.max(0.0).sqrt()) / uu;
                Ok(1.0 / s)
            }
        }
    }

    pub fn contains(&self, x: &Vector, slack: f64) -> Result<bool> {
        match &self.repr {
            Representation::Ellipsoid(e) => {
                let tinv = inverse(&e.shape)?;
                Ok((tinv * (x - &e.center)).norm() <= 1.0 + slack)
            }
            _ => Ok(self.double_description()?.contains(x, slack)),
        }
    }

    /// Whether the origin lies in the interior.
    pub fn origin_interior(&self) -> Result<bool> {
        let tol = self.tol.dedup;
        match &self.repr {
            Representation::H(h) => Ok(h.offsets.iter().all(|&b| b > tol)),
            Representation::V(_) => {
                let dd = self.double_description()?;
                Ok(dd.facets.iter().all(|f| f.offset > tol))
            }
            Representation::Ellipsoid(e) => {
                let tinv = inverse(&e.shape)?;
                Ok((tinv * &e.center).norm() < 1.0 - tol)
            }
        }
    }

    pub fn polar(&self) -> Result<Self> {
        if !self.origin_interior()? {
            return Err(GeomError::OriginNotInterior);
        }
        match &self.repr {
            Representation::V(v) => {
                let offsets = vec![1.0; v.vertices.len()];
                let h = self.derived(Representation::H(HBody { n: v.n, normals: v.vertices.clone(), offsets }));
                if let Some(Ok(dd)) = self.cache.dd.get() {
                    let _ = h.cache.dd.set(dd.polar().map(Arc::new));
                }
                Ok(h)
            }
            Representation::H(hb) => {
                let pts: Vec<Vector> = hb.normals.iter().zip(&hb.offsets).map(|(a, b)| a / *b).collect();
                let out = self.derived(Representation::V(VBody { n: hb.n, vertices: pts }));
                let dd = out.double_description()?;
                Ok(self.derived(Representation::V(VBody { n: hb.n, vertices: dd.vertices.clone() })))
            }
            Representation::Ellipsoid(e) => {
                if !e.is_centered(self.tol.dedup) {
                    return Err(GeomError::UnsupportedRepresentation(
                        "polar of a non-centred ellipsoid is not an ellipsoid; convert or recentre first".into(),
                    ));
                }
                let inv = inverse(&e.shape)?;
                let inv = (&inv + inv.transpose()) * 0.5;
                Ok(self.derived(Representation::Ellipsoid(EllipsoidBody { n: e.n, center: e.center.clone(), shape: inv })))
            }
        }
    }

    /// `A K + v` for invertible `A`.
    pub fn affine_image(&self, a: &Matrix, v: &Vector) -> Result<Self> {
        let n = self.dim();
        check_dim(n, a.nrows())?;
        check_dim(n, a.ncols())?;
        check_dim(n, v.len())?;
        let ainv = inverse(a)?;
        Ok(match &self.repr {
            Representation::V(vb) => {
                let verts = vb.vertices.iter().map(|p| a * p + v).collect();
                self.derived(Representation::V(VBody { n, vertices: verts }))
            }
            Representation::H(hb) => {
                let ait = ainv.transpose();
                let normals: Vec<Vector> = hb.normals.iter().map(|x| &ait * x).collect();
                let offsets = hb.offsets.iter().zip(&normals).map(|(b, an)| b + an.dot(v)).collect();
                self.derived(Representation::H(HBody { n, normals, offsets }))
            }
            Representation::Ellipsoid(e) => {
                let at = a * &e.shape;
                let shape = sym_sqrt(&(&at * at.transpose()));
                self.derived(Representation::Ellipsoid(EllipsoidBody { n, center: a * &e.center + v, shape }))
            }
        })
    }

    pub fn translate(&self, v: &Vector) -> Result<Self> {
        self.affine_image(&Matrix::identity(self.dim(), self.dim()), v)
    }

    pub fn scale(&self, s: f64) -> Result<Self> {
        let n = self.dim();
        self.affine_image(&(Matrix::identity(n, n) * s), &Vector::zeros(n))
    }

    pub fn linear_image(&self, a: &Matrix) -> Result<Self> {
        self.affine_image(a, &Vector::zeros(self.dim()))
    }

    /// `K - K`.
    pub fn difference_body(&self) -> Result<Self> {
        if let Representation::Ellipsoid(e) = &self.repr {
            let shape = &e.shape * 2.0;
            return Ok(self.derived(Representation::Ellipsoid(EllipsoidBody { n: e.n, center: Vector::zeros(e.n), shape })));
        }
        let verts = self.vertices()?;
        let mut pts = Vec::with_capacity(verts.len() * verts.len());
        for p in &verts {
            for q in &verts {
                pts.push(p - q);
            }
        }
        self.pruned(pts)
    }

    /// `conv(K, -K)`; requires the origin in the interior.
    pub fn symmetric_hull(&self) -> Result<Self> {
        if !self.origin_interior()? {
            return Err(GeomError::OriginNotInterior);
        }
        if let Representation::Ellipsoid(e) = &self.repr {
            if e.is_centered(self.tol.dedup) {
                return Ok(self.clone());
            }
            return Err(GeomError::UnsupportedRepresentation("symmetric hull of a non-centred ellipsoid".into()));
        }
        let verts = self.generators()?;
        let mut pts = verts.clone();
        pts.extend(verts.iter().map(|p| -p));
        self.pruned(pts)
    }

    /// `K ∩ (-K)`; requires the origin in the interior.
    pub fn symmetric_intersection(&self) -> Result<Self> {
        if !self.origin_interior()? {
            return Err(GeomError::OriginNotInterior);
        }
        if let Representation::Ellipsoid(e) = &self.repr {
            if e.is_centered(self.tol.dedup) {
                return Ok(self.clone());
            }
            return Err(GeomError::UnsupportedRepresentation("symmetric intersection of a non-centred ellipsoid".into()));
        }
        let (normals, offsets) = match &self.repr {
            Representation::H(h) => (h.normals.clone(), h.offsets.clone()),
            _ => self.halfspaces()?,
        };
        let mut all_n = normals.clone();
        let mut all_b = offsets.clone();
        all_n.extend(normals.iter().map(|a| -a));
        all_b.extend(offsets.iter().copied());
        let h = self.derived(Representation::H(HBody { n: self.dim(), normals: all_n, offsets: all_b }));
        let dd = h.double_description()?;
        let (n2, b2): (Vec<Vector>, Vec<f64>) = dd.facets.iter().map(|f| (f.normal.clone(), f.offset)).unzip();
        let out = self.derived(Representation::H(HBody { n: self.dim(), normals: n2, offsets: b2 }));
        let _ = out.cache.dd.set(Ok(dd));
        Ok(out)
    }

    /// V-body on the extreme points of `pts`.
    fn pruned(&self, pts: Vec<Vector>) -> Result<Self> {
        let n = self.dim();
        if n > self.tol.exact_cap {
            return Err(GeomError::DimensionCap { n, cap: self.tol.exact_cap });
        }
        let dd = dd::from_vertices(&pts, self.tol.dedup)?;
        let out = self.derived(Representation::V(VBody { n, vertices: dd.vertices.clone() }));
        let _ = out.cache.dd.set(Ok(Arc::new(dd)));
        Ok(out)
    }

    /// Inradius and circumradius about the origin.
    pub fn radii(&self) -> Result<(f64, f64)> {
        if let Some(r) = self.cache.radii.get() {
            return Ok(*r);
        }
        if !self.origin_interior()? {
            return Err(GeomError::OriginNotInterior);
        }
        let r = match &self.repr {
            Representation::Ellipsoid(e) => {
                if !e.is_centered(self.tol.dedup) {
                    return Err(GeomError::UnsupportedRepresentation("radii of a non-centred ellipsoid".into()));
                }
                let ax = e.semiaxes();
                (*ax.last().unwrap(), ax[0])
            }
            _ => {
                let dd = self.double_description()?;
                let inr = dd.facets.iter().map(|f| f.offset).fold(f64::INFINITY, f64::min);
                let outr = dd.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max);
                (inr, outr)
            }
        };
        let _ = self.cache.radii.set(r);
        Ok(r)
    }

    /// Conversion between vertex and halfspace form.
    pub fn convert(&self, target: RepKind) -> Result<Self> {
        if matches!(self.repr, Representation::Ellipsoid(_)) || target == RepKind::Ellipsoid {
            return Err(GeomError::UnsupportedRepresentation("only polytopes convert between V and H form".into()));
        }
        let dd = self.double_description()?;
        let repr = match target {
            RepKind::V => Representation::V(VBody { n: dd.n, vertices: dd.vertices.clone() }),
            _ => Representation::H(HBody {
                n: dd.n,
                normals: dd.facets.iter().map(|f| f.normal.clone()).collect(),
                offsets: dd.facets.iter().map(|f| f.offset).collect(),
            }),
        };
        let out = self.derived(repr);
        let _ = out.cache.dd.set(Ok(dd));
        Ok(out)
    }

    /// Axis-aligned bounding box from support values in `±e_j`.
    pub fn bounding_box(&self) -> Result<(Vector, Vector)> {
        let n = self.dim();
        let mut lo = Vector::zeros(n);
        let mut hi = Vector::zeros(n);
        for j in 0..n {
            let mut e = Vector::zeros(n);
            e[j] = 1.0;
            hi[j] = self.support_value(&e)?;
            lo[j] = -self.support_value(&(-e))?;
        }
        Ok((lo, hi))
    }

    pub(crate) fn cached_volume(&self) -> Option<f64> {
        self.cache.volume.get().copied()
    }

    pub(crate) fn store_volume(&self, v: f64) {
        let _ = self.cache.volume.set(v);
    }

    pub(crate) fn cached_barycentre(&self) -> Option<Vector> {
        self.cache.barycentre.get().cloned()
    }

    pub(crate) fn store_barycentre(&self, b: Vector) {
        let _ = self.cache.barycentre.set(b);
    }

    /// Euclidean distance from `x` to the body (0 inside).
    pub fn distance_to(&self, x: &Vector) -> Result<f64> {
        match &self.repr {
            Representation::Ellipsoid(e) => ellipsoid_distance(e, x),
            _ => {
                let dd = self.double_description()?;
                if dd.contains(x, 0.0) {
                    return Ok(0.0);
                }
                Ok(distance_to_hull(&dd.vertices, x))
            }
        }
    }
}

/// Distance from `x` to an ellipsoid by Newton iteration on the secular equation.
fn ellipsoid_distance(e: &EllipsoidBody, x: &Vector) -> Result<f64> {
    let (ax, vecs) = sym_eigen(&e.shape);
    let y = vecs.transpose() * (x - &e.center);
    let inside: f64 = y.iter().zip(&ax).map(|(yi, a)| (yi / a).powi(2)).sum();
    if inside <= 1.0 {
        return Ok(0.0);
    }
    // Closest point z_i = a_i^2 y_i / (a_i^2 + mu), with mu > 0 solving sum (a_i y_i/(a_i^2+mu))^2 = 1.
    let f = |mu: f64| -> f64 { y.iter().zip(&ax).map(|(yi, a)| (a * yi / (a * a + mu)).powi(2)).sum::<f64>() - 1.0 };
    let mut lo = 0.0;
    let mut hi = ax[0] * y.norm() + 1.0;
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    let d: f64 = y.iter().zip(&ax).map(|(yi, a)| (yi - a * a * yi / (a * a + mu)).powi(2)).sum();
    Ok(d.sqrt())
}

/// Hausdorff distance between two polytopes, exact up to the nearest-point solver.
pub fn hausdorff_distance(k: &BodyHandle, l: &BodyHandle) -> Result<f64> {
    let vk = k.vertices()?;
    let vl = l.vertices()?;
    let a = vk.iter().map(|v| l.distance_to(v)).collect::<Result<Vec<_>>>()?;
    let b = vl.iter().map(|v| k.distance_to(v)).collect::<Result<Vec<_>>>()?;
    Ok(a.into_iter().chain(b).fold(0.0, f64::max))
}

// ---------------------------------------------------------------------------
// JSON body format

/// On-disk body description: `{"kind": "V"|"H"|"ellipsoid", "n": int, "data": ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyFile {
    pub kind: String,
    pub n: usize,
    pub data: BodyData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BodyData {
    Vertices { vertices: Vec<Vec<f64>> },
    Halfspaces { normals: Vec<Vec<f64>>, offsets: Vec<f64> },
    Ellipsoid { center: Vec<f64>, shape: Vec<Vec<f64>> },
}

fn rows(v: &[Vector]) -> Vec<Vec<f64>> {
    v.iter().map(|x| x.iter().copied().collect()).collect()
}

impl BodyHandle {
    pub fn to_file(&self) -> BodyFile {
        match &self.repr {
            Representation::V(v) => BodyFile { kind: "V".into(), n: v.n, data: BodyData::Vertices { vertices: rows(&v.vertices) } },
            Representation::H(h) => BodyFile {
                kind: "H".into(),
                n: h.n,
                data: BodyData::Halfspaces { normals: rows(&h.normals), offsets: h.offsets.clone() },
            },
            Representation::Ellipsoid(e) => BodyFile {
                kind: "ellipsoid".into(),
                n: e.n,
                data: BodyData::Ellipsoid {
                    center: e.center.iter().copied().collect(),
                    shape: (0..e.n).map(|i| e.shape.row(i).iter().copied().collect()).collect(),
                },
            },
        }
    }

    pub fn from_file(f: &BodyFile) -> Result<Self> {
        let body = match (f.kind.as_str(), &f.data) {
            ("V", BodyData::Vertices { vertices }) => Self::from_rows(vertices)?,
            ("H", BodyData::Halfspaces { normals, offsets }) => {
                Self::from_halfspaces(normals.iter().map(|r| Vector::from_row_slice(r)).collect(), offsets.clone())?
            }
            ("ellipsoid", BodyData::Ellipsoid { center, shape }) => {
                let n = center.len();
                let flat: Vec<f64> = shape.iter().flatten().copied().collect();
                if flat.len() != n * n {
                    return Err(GeomError::DimensionMismatch { expected: n * n, got: flat.len() });
                }
                Self::from_ellipsoid(EllipsoidBody::new(Vector::from_row_slice(center), Matrix::from_row_slice(n, n, &flat))?)
            }
            (k, _) => return Err(GeomError::Json(format!("kind `{k}` does not match its data"))),
        };
        check_dim(f.n, body.dim())?;
        Ok(body)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("body serialises")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: BodyFile = serde_json::from_str(s)?;
        Self::from_file(&f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::from_row_slice(x)
    }

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

    fn cross(n: usize) -> BodyHandle {
        let mut pts = Vec::new();
        for i in 0..n {
            for s in [1.0, -1.0] {
                let mut p = Vector::zeros(n);
                p[i] = s;
                pts.push(p);
            }
        }
        BodyHandle::from_vertices(pts).unwrap()
    }

    #[test]
    fn support_examples() {
        let k = cube(2, 1.0);
        assert!((k.support_value(&v(&[1.0, 1.0])).unwrap() - 2.0).abs() < 1e-12);
        let b = BodyHandle::from_ellipsoid(EllipsoidBody::ball(3, 1.0));
        let u = v(&[0.6, 0.0, 0.8]);
        assert!((b.support_value(&u).unwrap() - 1.0).abs() < 1e-15);
        let e = BodyHandle::from_ellipsoid(EllipsoidBody::diagonal(&[2.0, 1.0]).unwrap());
        assert_eq!(e.support_value(&v(&[1.0, 0.0])).unwrap(), 2.0);
    }

    #[test]
    fn unbounded_h_body_support_errors() {
        let h = BodyHandle::from_halfspaces(vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])], vec![1.0, 1.0]).unwrap();
        assert!(matches!(h.support_value(&v(&[-1.0, 0.0])), Err(GeomError::InvariantViolation(_))));
    }

    #[test]
    fn gauge_examples() {
        let k = cube(2, 1.0);
        assert!((k.gauge_value(&v(&[3.0, 1.0])).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(k.gauge_value(&v(&[0.0, 0.0])).unwrap(), 0.0);
        let tri = BodyHandle::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, -1.0]]).unwrap();
        assert!((tri.gauge_value(&v(&[1.0, 0.0])).unwrap() - 1.0).abs() < 1e-12);
        let off = BodyHandle::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(off.gauge_value(&v(&[1.0, 1.0])), Err(GeomError::OriginNotInterior));
    }

    #[test]
    fn shifted_ellipsoid_gauge() {
        let e = BodyHandle::from_ellipsoid(EllipsoidBody::new(v(&[0.5, 0.0]), Matrix::identity(2, 2)).unwrap());
        // Boundary along +x at 1.5, along -x at -0.5.
        assert!((e.gauge_value(&v(&[1.5, 0.0])).unwrap() - 1.0).abs() < 1e-12);
        assert!((e.gauge_value(&v(&[-0.5, 0.0])).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cube_polar_is_cross_polytope() {
        for n in 2..=5 {
            let p = cube(n, 1.0).polar().unwrap();
            let d = hausdorff_distance(&p, &cross(n)).unwrap();
            assert!(d < 1e-10, "n={n} d={d}");
        }
    }

    #[test]
    fn ellipsoid_polar_inverts_axes() {
        let e = BodyHandle::from_ellipsoid(EllipsoidBody::diagonal(&[2.0, 1.0]).unwrap());
        let p = e.polar().unwrap();
        let pe = p.ellipsoid().unwrap();
        assert!((pe.shape[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((pe.shape[(1, 1)] - 1.0).abs() < 1e-15);
        let shifted = BodyHandle::from_ellipsoid(EllipsoidBody::new(v(&[0.1, 0.0]), Matrix::identity(2, 2)).unwrap());
        assert!(matches!(shifted.polar(), Err(GeomError::UnsupportedRepresentation(_))));
    }

    #[test]
    fn affine_image_of_unit_square() {
        let k = BodyHandle::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let img = k.linear_image(&(Matrix::identity(2, 2) * 2.0)).unwrap();
        let target = BodyHandle::from_rows(&[vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 2.0], vec![2.0, 2.0]]).unwrap();
        assert!(hausdorff_distance(&img, &target).unwrap() < 1e-12);
        let id = k.affine_image(&Matrix::identity(2, 2), &Vector::zeros(2)).unwrap();
        assert_eq!(id, k);
        assert_eq!(k.linear_image(&Matrix::zeros(2, 2)).unwrap_err(), GeomError::SingularMatrix);
    }

    #[test]
    fn polar_commutes_with_linear_maps() {
        // polar(A K) = A^{-T} polar(K) for the cross-polytope, A = diag(2,3).
        let k = cross(2);
        let a = Matrix::from_diagonal(&v(&[2.0, 3.0]));
        let lhs = k.linear_image(&a).unwrap().polar().unwrap();
        let rhs = k.polar().unwrap().linear_image(&inverse(&a).unwrap().transpose()).unwrap();
        // Vertex enumeration on both sides: polar(AK) has vertices (±1/2, ±1/3).
        let lv = lhs.vertices().unwrap();
        assert_eq!(lv.len(), 4);
        for p in &lv {
            assert!((p[0].abs() - 0.5).abs() < 1e-12 && (p[1].abs() - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!(hausdorff_distance(&lhs, &rhs).unwrap() < 1e-12);
    }

    #[test]
    fn symmetrizations_of_symmetric_body_are_identity() {
        let k = cube(3, 1.0);
        for s in [k.difference_body().unwrap().scale(0.5).unwrap(), k.symmetric_hull().unwrap(), k.symmetric_intersection().unwrap()] {
            assert!(hausdorff_distance(&s, &k).unwrap() < 1e-10);
        }
    }

    #[test]
    fn cube_and_ball_radii() {
        let b = BodyHandle::from_ellipsoid(EllipsoidBody::ball(4, 1.0));
        assert_eq!(b.radii().unwrap(), (1.0, 1.0));
        for n in 1..=6 {
            let (r, rr) = cube(n, 1.0).radii().unwrap();
            assert!((r - 1.0).abs() < 1e-12);
            assert!((rr - (n as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn conversion_examples() {
        for n in 2..=5 {
            let h = cross(n).convert(RepKind::H).unwrap();
            match h.representation() {
                Representation::H(hb) => {
                    assert_eq!(hb.normals.len(), 1 << n);
                    for (a, b) in hb.normals.iter().zip(&hb.offsets) {
                        // ±x_1 ± ... ± x_n <= 1 after scaling.
                        let scaled = a / *b;
                        assert!(scaled.iter().all(|c| (c.abs() - 1.0).abs() < 1e-12));
                    }
                }
                _ => panic!(),
            }
            let v = cube(n, 1.0).convert(RepKind::V).unwrap();
            assert_eq!(v.vertices().unwrap().len(), 1 << n);
        }
        let e = BodyHandle::from_ellipsoid(EllipsoidBody::ball(2, 1.0));
        assert!(e.convert(RepKind::H).is_err());
        let big = cube(11, 1.0);
        assert!(matches!(big.convert(RepKind::V), Err(GeomError::DimensionCap { .. })));
    }

    #[test]
    fn json_roundtrip() {
        let k = cube(2, 1.0);
        let back = BodyHandle::from_json(&k.to_json()).unwrap();
        assert_eq!(back, k);
        let e = BodyHandle::from_ellipsoid(EllipsoidBody::diagonal(&[2.0, 1.0]).unwrap());
        assert_eq!(BodyHandle::from_json(&e.to_json()).unwrap(), e);
        let bad = r#"{"kind":"V","n":3,"data":{"vertices":[[0,0],[1,0],[0,1]]}}"#;
        assert!(BodyHandle::from_json(bad).is_err());
    }

    #[test]
    fn ellipsoid_distance_matches_ball() {
        let b = BodyHandle::from_ellipsoid(EllipsoidBody::ball(3, 2.0));
        assert!((b.distance_to(&v(&[0.0, 5.0, 0.0])).unwrap() - 3.0).abs() < 1e-9);
        assert_eq!(b.distance_to(&v(&[0.0, 1.0, 0.0])).unwrap(), 0.0);
    }
}
