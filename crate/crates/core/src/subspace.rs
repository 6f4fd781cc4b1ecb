//! Linear subspaces, projections and sections, sampled extremal volume radii
//! over the Grassmannian, marginal densities and Ball bodies `K_p(g)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::{BodyHandle, EllipsoidBody, RepKind};
use crate::error::{GeomError, Result};
use crate::linalg::{columns_to_matrix, inverse, orthogonal_complement, orthonormalize, sym_inv_sqrt, sym_sqrt, Matrix, Vector};
use crate::sampling::{gaussian_vector, stream_rng};
use crate::volume::{volume, volume_radius};

/// An `l`-dimensional subspace of `R^n` carried by orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    pub n: usize,
    pub l: usize,
    pub basis: Matrix,
}

impl Subspace {
    /// Span of the given vectors, orthonormalised.
    pub fn span(vectors: &[Vector]) -> Result<Self> {
        let n = vectors.first().map(|v| v.len()).ok_or(GeomError::InvalidArgument("empty spanning set".into()))?;
        let cols = orthonormalize(vectors, 1e-10);
        if cols.len() != vectors.len() {
            return Err(GeomError::InvalidArgument("spanning vectors are linearly dependent".into()));
        }
        Ok(Subspace { n, l: cols.len(), basis: columns_to_matrix(n, &cols) })
    }

    /// Wraps a basis that is already orthonormal.
    pub fn from_basis(basis: Matrix) -> Result<Self> {
        let (n, l) = basis.shape();
        let gram = basis.transpose() * &basis;
        if (gram - Matrix::identity(l, l)).amax() > 1e-10 {
            return Err(GeomError::InvalidArgument("subspace basis is not orthonormal".into()));
        }
        Ok(Subspace { n, l, basis })
    }

    pub fn full(n: usize) -> Self {
        Subspace { n, l: n, basis: Matrix::identity(n, n) }
    }

    /// Span of the listed coordinate axes.
    pub fn coordinate(n: usize, axes: &[usize]) -> Self {
        let mut basis = Matrix::zeros(n, axes.len());
        for (j, &i) in axes.iter().enumerate() {
            basis[(i, j)] = 1.0;
        }
        Subspace { n, l: axes.len(), basis }
    }

    pub fn complement(&self) -> Subspace {
        let c = orthogonal_complement(&self.basis);
        Subspace { n: self.n, l: c.ncols(), basis: c }
    }

    /// Coordinates of `x` in this basis.
    pub fn coords(&self, x: &Vector) -> Vector {
        self.basis.transpose() * x
    }

    /// Point of `R^n` with the given coordinates.
    pub fn embed(&self, u: &Vector) -> Vector {
        &self.basis * u
    }

    /// Orthogonal projector onto the subspace.
    pub fn projector(&self) -> Matrix {
        &self.basis * self.basis.transpose()
    }
}

/// Uniformly distributed subspace of dimension `l` (orthonormalised Gaussian frame).
pub fn random_subspace(n: usize, l: usize, seed: u64) -> Result<Subspace> {
    if l == 0 || l > n {
        return Err(GeomError::InvalidArgument(format!("subspace dimension {l} outside 1..={n}")));
    }
    let mut rng = stream_rng(seed, 0);
    loop {
        let cols: Vec<Vector> = (0..l).map(|_| gaussian_vector(n, &mut rng)).collect();
        let ortho = orthonormalize(&cols, 1e-8);
        if ortho.len() == l {
            return Ok(Subspace { n, l, basis: columns_to_matrix(n, &ortho) });
        }
    }
}

fn check_space(k: &BodyHandle, f: &Subspace) -> Result<()> {
    if k.dim() != f.n {
        return Err(GeomError::DimensionMismatch { expected: k.dim(), got: f.n });
    }
    Ok(())
}

/// `Proj_F K` in the coordinates of `F`.
pub fn project(k: &BodyHandle, f: &Subspace) -> Result<BodyHandle> {
    check_space(k, f)?;
    if let Some(e) = k.ellipsoid() {
        let ut = f.basis.transpose() * &e.shape;
        let shape = sym_sqrt(&(&ut * ut.transpose()));
        return Ok(BodyHandle::from_ellipsoid(EllipsoidBody::new(f.coords(&e.center), shape)?)
            .with_tolerances(k.tolerances()));
    }
    let pts: Vec<Vector> = k.vertices()?.iter().map(|v| f.coords(v)).collect();
    Ok(BodyHandle::from_vertices(pts)?.with_tolerances(k.tolerances()))
}

/// `K ∩ (y + F)` in the coordinates of `F`, with `y ∈ F^⊥` (default 0).
pub fn section(k: &BodyHandle, f: &Subspace, offset: Option<&Vector>) -> Result<BodyHandle> {
    check_space(k, f)?;
    let y = offset.cloned().unwrap_or_else(|| Vector::zeros(f.n));
    if let Some(e) = k.ellipsoid() {
        // (Uu + y - c)^T M (Uu + y - c) <= 1 with M = (T T^T)^{-1}.
        let m = inverse(&(&e.shape * e.shape.transpose()))?;
        let d = &y - &e.center;
        let a = f.basis.transpose() * &m * &f.basis;
        let g = f.basis.transpose() * (&m * &d);
        let s = d.dot(&(&m * &d));
        let ainv = inverse(&a)?;
        let u0 = -(&ainv * &g);
        let rho2 = 1.0 - (s - g.dot(&(&ainv * &g)));
        if rho2 <= 0.0 {
            return Err(GeomError::EmptySection);
        }
        let shape = sym_inv_sqrt(&a)? * rho2.sqrt();
        let shape = (&shape + shape.transpose()) * 0.5;
        return Ok(BodyHandle::from_ellipsoid(EllipsoidBody::new(u0, shape)?).with_tolerances(k.tolerances()));
    }
    let (normals, offsets) = k.halfspaces()?;
    let mut a = Vec::with_capacity(normals.len());
    let mut b = Vec::with_capacity(normals.len());
    for (ai, bi) in normals.iter().zip(&offsets) {
        let r = f.coords(ai);
        let rhs = bi - ai.dot(&y);
        if r.norm() <= 1e-12 {
            if rhs < -1e-12 {
                return Err(GeomError::EmptySection);
            }
            continue;
        }
        a.push(r);
        b.push(rhs);
    }
    let h = BodyHandle::from_halfspaces(a, b)?.with_tolerances(k.tolerances());
    match h.double_description() {
        Ok(_) => Ok(h),
        Err(GeomError::Degenerate | GeomError::Infeasible) => Err(GeomError::EmptySection),
        Err(e) => Err(e),
    }
}

/// One sampled subspace of a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub subspace_id: u64,
    pub projection_vrad: Option<f64>,
    pub section_vrad: Option<f64>,
    pub error: Option<String>,
}

/// Sampled extremes of projection and section volume radii at dimension `l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub l: usize,
    pub samples: usize,
    pub seed: u64,
    pub rows: Vec<ScanRow>,
    /// Sampled `v_l`, `v_l^-` (projections) and `w_l`, `w_l^-` (sections).
    pub v_max: f64,
    pub v_min: f64,
    pub w_max: f64,
    pub w_min: f64,
}

impl ScanReport {
    fn from_rows(l: usize, seed: u64, rows: Vec<ScanRow>) -> Self {
        let mut r = ScanReport {
            l,
            samples: rows.len(),
            seed,
            rows: Vec::new(),
            v_max: f64::NEG_INFINITY,
            v_min: f64::INFINITY,
            w_max: f64::NEG_INFINITY,
            w_min: f64::INFINITY,
        };
        r.absorb(rows);
        r
    }

    fn absorb(&mut self, rows: Vec<ScanRow>) {
        for row in rows {
            if let Some(p) = row.projection_vrad {
                self.v_max = self.v_max.max(p);
                self.v_min = self.v_min.min(p);
            }
            if let Some(s) = row.section_vrad {
                self.w_max = self.w_max.max(s);
                self.w_min = self.w_min.min(s);
            }
            self.rows.push(row);
        }
        self.samples = self.rows.len();
    }

    /// Combines two scans of the same body and dimension.
    pub fn merge(mut self, other: ScanReport) -> ScanReport {
        self.absorb(other.rows);
        self.rows.sort_by_key(|r| r.subspace_id);
        self
    }
}

/// Samples `samples` subspaces of dimension `l` (subspace `i` drawn from
/// stream `i` of `seed`) and records projection and central-section radii.
pub fn vrad_scan(k: &BodyHandle, l: usize, samples: usize, seed: u64) -> Result<ScanReport> {
    let n = k.dim();
    if l == 0 || l > n {
        return Err(GeomError::InvalidArgument(format!("scan dimension {l} outside 1..={n}")));
    }
    let subspaces: Vec<Subspace> = (0..samples as u64).map(|i| scan_subspace(n, l, seed, i)).collect();
    scan_subspaces(k, &subspaces, 0, seed)
}

fn scan_subspace(n: usize, l: usize, seed: u64, i: u64) -> Subspace {
    let mut rng = stream_rng(seed, i);
    loop {
        let cols: Vec<Vector> = (0..l).map(|_| gaussian_vector(n, &mut rng)).collect();
        let ortho = orthonormalize(&cols, 1e-8);
        if ortho.len() == l {
            return Subspace { n, l, basis: columns_to_matrix(n, &ortho) };
        }
    }
}

/// Scan over an explicit list of subspaces; ids start at `first_id`.
pub fn scan_subspaces(k: &BodyHandle, subspaces: &[Subspace], first_id: u64, seed: u64) -> Result<ScanReport> {
    let l = subspaces.first().map(|f| f.l).ok_or(GeomError::InvalidArgument("no subspaces to scan".into()))?;
    let rows: Vec<ScanRow> = subspaces
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let p = project(k, f).and_then(|p| volume_radius(&p));
            let s = section(k, f, None).and_then(|s| volume_radius(&s));
            let error = match (&p, &s) {
                (Err(e), _) | (_, Err(e)) => Some(e.to_string()),
                _ => None,
            };
            ScanRow { subspace_id: first_id + i as u64, projection_vrad: p.ok(), section_vrad: s.ok(), error }
        })
        .collect();
    Ok(ScanReport::from_rows(l, seed, rows))
}

/// `|K ∩ (y + F^⊥)|` for `y ∈ F` given in `F`'s coordinates; 0 off the projection.
pub fn marginal_density(k: &BodyHandle, f: &Subspace, y: &Vector) -> Result<f64> {
    check_space(k, f)?;
    let point = f.embed(y);
    if f.l == f.n {
        return Ok(if k.contains(&point, 0.0)? { 1.0 } else { 0.0 });
    }
    let perp = f.complement();
    match section(k, &perp, Some(&point)) {
        Ok(s) => match volume(&s) {
            Ok(v) => Ok(v),
            Err(GeomError::Degenerate) => Ok(0.0),
            Err(e) => Err(e),
        },
        Err(GeomError::EmptySection) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Outcome of comparing `Proj_F K` against `K_{l+1}(g)` along the direction grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichCheck {
    /// min over directions of `rho_{Proj}(θ) / r_T(θ)`; must be ≥ 1/e.
    pub min_ratio: f64,
    /// max over directions of the same ratio; must be ≤ e(n+1)/(l+1).
    pub max_ratio: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub holds: bool,
}

/// Ball body `K_p(g)` of the marginal `g` on `F`, as a radial-function table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallBody {
    pub l: usize,
    pub p: f64,
    pub g0: f64,
    pub directions: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    /// Radial function of `Proj_F K` on the same directions.
    pub projection_radii: Vec<f64>,
    pub sandwich: Option<SandwichCheck>,
}

/// Quasi-uniform unit directions in `R^l`: `64 l` of them for `l >= 2`.
pub fn direction_grid(l: usize) -> Vec<Vector> {
    match l {
        1 => vec![Vector::from_element(1, 1.0), Vector::from_element(1, -1.0)],
        2 => (0..128)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / 128.0;
                Vector::from_row_slice(&[a.cos(), a.sin()])
            })
            .collect(),
        _ => {
            let mut rng = stream_rng(0x5eed_d1e5, l as u64);
            (0..64 * l)
                .map(|_| {
                    let g = gaussian_vector(l, &mut rng);
                    let nrm = g.norm();
                    g / nrm
                })
                .collect()
        }
    }
}

/// Ball body `K_p(g)` for `g = g_{π_F(K)}`. For `p = l + 1` the sandwich
/// `(1/e) K_{l+1} ⊆ Proj_F K ⊆ e(n+1)/(l+1) K_{l+1}` is checked on the grid
/// (meaningful when `K` is centred).
pub fn ball_body(k: &BodyHandle, f: &Subspace, p: f64) -> Result<BallBody> {
    if p < 1.0 {
        return Err(GeomError::InvalidArgument("Ball bodies are implemented for p >= 1".into()));
    }
    let n = k.dim();
    let l = f.l;
    let g0 = marginal_density(k, f, &Vector::zeros(l))?;
    if g0 <= 0.0 {
        return Err(GeomError::InvalidArgument("marginal vanishes at the origin".into()));
    }
    let proj = project(k, f)?;
    if !proj.origin_interior()? {
        return Err(GeomError::OriginNotInterior);
    }
    let dirs = direction_grid(l);
    let rows: Vec<Result<(f64, f64)>> = dirs
        .par_iter()
        .map(|theta| {
            let reach = 1.0 / proj.gauge_value(theta)?;
            let g = |u: f64| -> f64 {
                let d = marginal_density(k, f, &(theta * u)).unwrap_or(0.0);
                d * u.powf(p - 1.0)
            };
            let scale = g0 * reach.powf(p);
            let integral = adaptive_simpson(&g, 0.0, reach, 1e-8 * scale.max(1e-300));
            Ok(((p / g0 * integral).powf(1.0 / p), reach))
        })
        .collect();
    let mut radii = Vec::with_capacity(dirs.len());
    let mut reach = Vec::with_capacity(dirs.len());
    for r in rows {
        let (a, b) = r?;
        radii.push(a);
        reach.push(b);
    }
    let sandwich = ((p - (l as f64 + 1.0)).abs() < 1e-12).then(|| {
        let ratios: Vec<f64> = reach.iter().zip(&radii).map(|(a, b)| a / b).collect();
        let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
        let lower_bound = (-1.0f64).exp();
        let upper_bound = std::f64::consts::E * (n as f64 + 1.0) / (l as f64 + 1.0);
        SandwichCheck { min_ratio, max_ratio, lower_bound, upper_bound, holds: min_ratio >= lower_bound && max_ratio <= upper_bound }
    });
    Ok(BallBody {
        l,
        p,
        g0,
        directions: dirs.iter().map(|d| d.iter().copied().collect()).collect(),
        radii,
        projection_radii: reach,
        sandwich,
    })
}

/// Polar of an `l`-dimensional body inside its own coordinates (for the
/// section/projection duality `(K ∩ F)° = Proj_F(K°)`).
pub fn polar_within(body: &BodyHandle) -> Result<BodyHandle> {
    match body.kind() {
        RepKind::Ellipsoid => body.polar(),
        _ => body.polar()?.convert(RepKind::V),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::hausdorff_distance;

    fn cube(n: usize) -> BodyHandle {
        let mut normals = Vec::new();
        for i in 0..n {
            for s in [1.0, -1.0] {
                let mut a = Vector::zeros(n);
                a[i] = s;
                normals.push(a);
            }
        }
        BodyHandle::from_halfspaces(normals, vec![1.0; 2 * n]).unwrap()
    }

    #[test]
    fn random_subspace_is_orthonormal() {
        let f = random_subspace(6, 3, 11).unwrap();
        assert!((f.basis.transpose() * &f.basis - Matrix::identity(3, 3)).amax() < 1e-12);
        let full = random_subspace(4, 4, 2).unwrap();
        assert_eq!(full.l, 4);
    }

    #[test]
    fn uniform_line_second_moment() {
        // E <u, θ>^2 = 1/n for θ uniform on the sphere.
        let n = 5;
        let u = Vector::from_row_slice(&[1.0, 0.0, 0.0, 0.0, 0.0]);
        let xs: Vec<f64> = (0..10_000).map(|i| scan_subspace(n, 1, 99, i).basis.column(0).dot(&u).powi(2)).collect();
        let (m, se) = crate::sampling::mean_stderr(&xs);
        assert!((m - 1.0 / n as f64).abs() < 3.0 * se, "{m} ± {se}");
    }

    #[test]
    fn cube_projection_and_section() {
        let f = Subspace::coordinate(3, &[0, 1]);
        let p = project(&cube(3), &f).unwrap();
        let s = section(&cube(3), &f, None).unwrap();
        assert!((volume(&p).unwrap() - 4.0).abs() < 1e-12);
        assert!(hausdorff_distance(&p, &cube(2)).unwrap() < 1e-12);
        assert!(hausdorff_distance(&s, &cube(2)).unwrap() < 1e-12);
        let whole = project(&cube(3), &Subspace::full(3)).unwrap();
        assert!(hausdorff_distance(&whole, &cube(3)).unwrap() < 1e-12);
    }

    #[test]
    fn ball_sections_are_balls() {
        let b = BodyHandle::from_ellipsoid(EllipsoidBody::ball(5, 1.0));
        let f = random_subspace(5, 2, 4).unwrap();
        let s = section(&b, &f, None).unwrap();
        let p = project(&b, &f).unwrap();
        for body in [s, p] {
            let ax = body.ellipsoid().unwrap().semiaxes();
            assert!(ax.iter().all(|a| (a - 1.0).abs() < 1e-12));
        }
        let off = Vector::from_row_slice(&[0.0, 0.0, 0.0, 0.0, 2.0]);
        let g = Subspace::coordinate(5, &[0, 1]);
        assert_eq!(section(&b, &g, Some(&off)).unwrap_err(), GeomError::EmptySection);
    }

    #[test]
    fn polar_of_section_is_projection_of_polar() {
        let k = BodyHandle::from_rows(&[
            vec![1.0, 0.2, -0.1],
            vec![-0.7, 0.9, 0.3],
            vec![-0.4, -0.8, 0.5],
            vec![0.1, 0.3, -1.2],
            vec![0.3, -0.2, 0.9],
        ])
        .unwrap();
        let f = random_subspace(3, 2, 8).unwrap();
        let lhs = polar_within(&section(&k, &f, None).unwrap()).unwrap();
        let rhs = project(&k.polar().unwrap(), &f).unwrap();
        assert!(hausdorff_distance(&lhs, &rhs).unwrap() < 1e-9);
    }

    #[test]
    fn scan_of_ball_is_flat() {
        let b = BodyHandle::from_ellipsoid(EllipsoidBody::ball(4, 1.0));
        let r = vrad_scan(&b, 2, 20, 1).unwrap();
        for v in [r.v_max, r.v_min, r.w_max, r.w_min] {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cube_marginal() {
        let f = Subspace::coordinate(3, &[0]);
        assert!((marginal_density(&cube(3), &f, &Vector::from_element(1, 0.0)).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(marginal_density(&cube(3), &f, &Vector::from_element(1, 1.5)).unwrap(), 0.0);
        // Fubini: ∫ g = |K|.
        let g = |u: f64| marginal_density(&cube(3), &f, &Vector::from_element(1, u)).unwrap();
        let total = adaptive_simpson(&g, -1.0, 1.0, 1e-10);
        assert!((total - 8.0).abs() < 1e-3);
    }

    #[test]
    fn ball_body_of_square_diagonal() {
        // Chord length perpendicular to the diagonal: 2(√2 - |s|), so r^2 = 2/3.
        let f = Subspace::span(&[Vector::from_row_slice(&[1.0, 1.0])]).unwrap();
        let bb = ball_body(&cube(2), &f, 2.0).unwrap();
        for r in &bb.radii {
            assert!((r - (2.0f64 / 3.0).sqrt()).abs() < 1e-6, "{r}");
        }
        let axis = ball_body(&cube(3), &Subspace::coordinate(3, &[0]), 2.0).unwrap();
        for r in &axis.radii {
            assert!((r - 1.0).abs() < 1e-6);
        }
    }
}
