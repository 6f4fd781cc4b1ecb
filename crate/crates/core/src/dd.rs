//! Vertex/facet conversion by the double-description method.
//!
//! Both directions reduce to one primitive: enumerating the vertices of a
//! bounded polytope `{x : <a_i, x> <= b_i}` that contains the origin in its
//! interior. The facet enumeration of `conv(P)` is the vertex enumeration of
//! the polar of `P - c` for an interior point `c`.

use crate::error::{GeomError, Result};
use crate::linalg::{affine_rank, orthonormalize, Vector};
use crate::lp::chebyshev_center;

/// Fixed-width bit set over row or vertex indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        BitSet { words: vec![0; len.div_ceil(64).max(1)] }
    }

    pub fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        self.words.get(i / 64).is_some_and(|w| w & (1 << (i % 64)) != 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn intersection(&self, other: &BitSet) -> BitSet {
        BitSet { words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect() }
    }

    pub fn difference(&self, other: &BitSet) -> BitSet {
        BitSet { words: self.words.iter().zip(&other.words).map(|(a, b)| a & !b).collect() }
    }

    pub fn intersection_len(&self, other: &BitSet) -> usize {
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    pub fn is_subset(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            (0..64).filter(move |b| w & (1 << b) != 0).map(move |b| wi * 64 + b)
        })
    }

    pub fn from_indices(len: usize, idx: impl IntoIterator<Item = usize>) -> Self {
        let mut s = BitSet::new(len);
        for i in idx {
            s.insert(i);
        }
        s
    }
}

/// A facet `<normal, x> <= offset` with unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub normal: Vector,
    pub offset: f64,
}

/// Both descriptions of a full-dimensional polytope, with the vertex-facet
/// incidence that ties them together.
#[derive(Debug, Clone)]
pub struct DoubleDescription {
    pub n: usize,
    pub vertices: Vec<Vector>,
    pub facets: Vec<Facet>,
    /// `incidence[f]` holds the vertices lying on facet `f`.
    pub incidence: Vec<BitSet>,
}

impl DoubleDescription {
    /// Facet-vertex incidence transposed: facets through each vertex.
    pub fn vertex_facets(&self) -> Vec<BitSet> {
        let mut out = vec![BitSet::new(self.facets.len()); self.vertices.len()];
        for (f, inc) in self.incidence.iter().enumerate() {
            for v in inc.iter() {
                out[v].insert(f);
            }
        }
        out
    }

    pub fn vertex_average(&self) -> Vector {
        let mut c = Vector::zeros(self.n);
        for v in &self.vertices {
            c += v;
        }
        c / self.vertices.len() as f64
    }

    /// Polar body's description, valid when the origin is interior. The
    /// combinatorics are the transpose of this body's.
    pub fn polar(&self) -> Result<DoubleDescription> {
        if self.facets.iter().any(|f| f.offset <= 0.0) {
            return Err(GeomError::OriginNotInterior);
        }
        let vertices: Vec<Vector> = self.facets.iter().map(|f| &f.normal / f.offset).collect();
        let facets: Vec<Facet> = self
            .vertices
            .iter()
            .map(|v| {
                let nrm = v.norm();
                Facet { normal: v / nrm, offset: 1.0 / nrm }
            })
            .collect();
        Ok(DoubleDescription { n: self.n, vertices, facets, incidence: self.vertex_facets() })
    }

    /// `(P - z)°` sharing this description's combinatorics, for `z` interior.
    pub fn polar_about(&self, z: &Vector) -> Result<DoubleDescription> {
        let mut shifted = self.clone();
        for v in &mut shifted.vertices {
            *v -= z;
        }
        for f in &mut shifted.facets {
            f.offset -= f.normal.dot(z);
        }
        shifted.polar()
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        self.facets.iter().all(|f| f.normal.dot(x) <= f.offset + tol)
    }
}

struct Ray {
    v: Vector,
    zeros: BitSet,
}

/// Vertices of the bounded polytope `{x : <a_i,x> <= b_i}` with all
/// `b_i > 0`. Returns the vertex list and, for each vertex, the tight rows.
pub fn enumerate_vertices(a: &[Vector], b: &[f64], tol: f64) -> Result<(Vec<Vector>, Vec<BitSet>)> {
    let n = a.first().map(|r| r.len()).ok_or(GeomError::Unbounded)?;
    let m = a.len();
    if b.iter().any(|&bi| bi <= 0.0) {
        return Err(GeomError::OriginNotInterior);
    }
    let d = n + 1;
    // Homogenised rows: row 0 is t >= 0, row i+1 is b_i t - <a_i, x> >= 0.
    let mut rows: Vec<Vector> = Vec::with_capacity(m + 1);
    let mut e0 = Vector::zeros(d);
    e0[0] = 1.0;
    rows.push(e0);
    for (ai, &bi) in a.iter().zip(b) {
        let mut r = Vector::zeros(d);
        r[0] = bi;
        for j in 0..n {
            r[j + 1] = -ai[j];
        }
        let nr = r.norm();
        rows.push(r / nr);
    }
    let total = rows.len();

    // Pick d independent rows for the initial simplicial cone.
    let mut chosen: Vec<usize> = Vec::new();
    let mut basis: Vec<Vector> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let mut cand = basis.clone();
        cand.push(r.clone());
        if orthonormalize(&cand, 1e-9).len() == cand.len() {
            basis = orthonormalize(&cand, 1e-9);
            chosen.push(i);
            if chosen.len() == d {
                break;
            }
        }
    }
    if chosen.len() < d {
        return Err(GeomError::Unbounded);
    }
    let mut mat = nalgebra::DMatrix::zeros(d, d);
    for (k, &i) in chosen.iter().enumerate() {
        mat.set_row(k, &rows[i].transpose());
    }
    let inv = mat.try_inverse().ok_or(GeomError::Unbounded)?;
    let mut processed = BitSet::new(total);
    for &i in &chosen {
        processed.insert(i);
    }
    let mut rays: Vec<Ray> = (0..d)
        .map(|j| {
            let v: Vector = inv.column(j).into_owned();
            let v = &v / v.norm();
            let zeros = BitSet::from_indices(total, chosen.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, &i)| i));
            Ray { v, zeros }
        })
        .collect();

    for h in 0..total {
        if processed.contains(h) {
            continue;
        }
        processed.insert(h);
        let vals: Vec<f64> = rays.iter().map(|r| rows[h].dot(&r.v)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&k| vals[k] > tol).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&k| vals[k] < -tol).collect();
        if neg.is_empty() {
            for (k, r) in rays.iter_mut().enumerate() {
                if vals[k].abs() <= tol {
                    r.zeros.insert(h);
                }
            }
            continue;
        }
        let mut new_rays: Vec<Ray> = Vec::new();
        for &p in &pos {
            for &q in &neg {
                let common = rays[p].zeros.intersection(&rays[q].zeros);
                if common.len() + 2 < d {
                    continue;
                }
                let adjacent = rays
                    .iter()
                    .enumerate()
                    .all(|(k, r)| k == p || k == q || !common.is_subset(&r.zeros));
                if !adjacent {
                    continue;
                }
                let v = &rays[q].v * vals[p] - &rays[p].v * vals[q];
                let nv = v.norm();
                let mut zeros = common;
                zeros.insert(h);
                new_rays.push(Ray { v: v / nv, zeros });
            }
        }
        let mut kept: Vec<Ray> = Vec::with_capacity(rays.len() + new_rays.len());
        for (k, mut r) in rays.into_iter().enumerate() {
            if vals[k] < -tol {
                continue;
            }
            if vals[k].abs() <= tol {
                r.zeros.insert(h);
            }
            kept.push(r);
        }
        kept.extend(new_rays);
        rays = kept;
    }

    let mut vertices = Vec::with_capacity(rays.len());
    let mut tight = Vec::with_capacity(rays.len());
    for r in rays {
        if r.v[0] <= tol {
            return Err(GeomError::Unbounded);
        }
        let x = Vector::from_iterator(n, r.v.iter().skip(1).map(|c| c / r.v[0]));
        // Shift row indices down by one (drop the t >= 0 row).
        let t = BitSet::from_indices(m, r.zeros.iter().filter(|&i| i > 0).map(|i| i - 1));
        vertices.push(x);
        tight.push(t);
    }
    Ok((vertices, tight))
}

/// Builds the double description of `{x : <a_i,x> <= b_i}`.
pub fn from_halfspaces(a: &[Vector], b: &[f64], tol: f64) -> Result<DoubleDescription> {
    let n = a.first().map(|r| r.len()).ok_or(GeomError::Unbounded)?;
    let (center, radius) = chebyshev_center(a, b).ok_or(GeomError::Infeasible)?;
    if radius >= 1e6 * 0.999 {
        return Err(GeomError::Unbounded);
    }
    if radius <= tol * (1.0 + center.norm()) {
        return Err(GeomError::Degenerate);
    }
    let shifted_b: Vec<f64> = a.iter().zip(b).map(|(ai, bi)| bi - ai.dot(&center)).collect();
    let (verts, tight) = enumerate_vertices(a, &shifted_b, tol)?;
    let verts: Vec<Vector> = verts.into_iter().map(|v| v + &center).collect();
    assemble(n, verts, tight, a, b)
}

/// Builds the double description of `conv(points)`.
pub fn from_vertices(points: &[Vector], tol: f64) -> Result<DoubleDescription> {
    let n = points.first().map(|p| p.len()).ok_or(GeomError::Degenerate)?;
    if points.len() < n + 1 || affine_rank(points, 1e-9) < n {
        return Err(GeomError::Degenerate);
    }
    let mut c = Vector::zeros(n);
    for p in points {
        c += p;
    }
    c /= points.len() as f64;
    let shifted: Vec<Vector> = points.iter().map(|p| p - &c).collect();
    let ones = vec![1.0; shifted.len()];
    let (polar_verts, tight) = enumerate_vertices(&shifted, &ones, tol)?;
    // Polar vertex y gives facet <y, x - c> <= 1; tight rows are the points on it.
    let mut facets = Vec::with_capacity(polar_verts.len());
    let mut incidence = Vec::with_capacity(polar_verts.len());
    for (y, t) in polar_verts.iter().zip(tight) {
        let nrm = y.norm();
        facets.push(Facet { normal: y / nrm, offset: (1.0 + y.dot(&c)) / nrm });
        incidence.push(t);
    }
    // Keep only extreme points: those whose facet normals span R^n.
    let npts = points.len();
    let mut point_facets = vec![Vec::new(); npts];
    for (f, inc) in incidence.iter().enumerate() {
        for p in inc.iter() {
            point_facets[p].push(f);
        }
    }
    let mut keep: Vec<usize> = Vec::new();
    for p in 0..npts {
        let normals: Vec<Vector> = point_facets[p].iter().map(|&f| facets[f].normal.clone()).collect();
        if normals.len() >= n && orthonormalize(&normals, 1e-7).len() == n {
            // Deduplicate coincident points.
            if !keep.iter().any(|&q| (&points[q] - &points[p]).amax() <= tol.max(1e-12) * 10.0) {
                keep.push(p);
            }
        }
    }
    let vertices: Vec<Vector> = keep.iter().map(|&p| points[p].clone()).collect();
    let remap: Vec<Option<usize>> = {
        let mut r = vec![None; npts];
        for (new, &old) in keep.iter().enumerate() {
            r[old] = Some(new);
        }
        r
    };
    let incidence: Vec<BitSet> = incidence
        .iter()
        .map(|inc| BitSet::from_indices(keep.len(), inc.iter().filter_map(|p| remap[p])))
        .collect();
    Ok(DoubleDescription { n, vertices, facets, incidence })
}

fn assemble(n: usize, verts: Vec<Vector>, tight: Vec<BitSet>, a: &[Vector], b: &[f64]) -> Result<DoubleDescription> {
    let m = a.len();
    let mut incidence_rows: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (v, t) in tight.iter().enumerate() {
        for r in t.iter() {
            incidence_rows[r].push(v);
        }
    }
    let mut facets = Vec::new();
    let mut incidence: Vec<BitSet> = Vec::new();
    for r in 0..m {
        let pts: Vec<Vector> = incidence_rows[r].iter().map(|&v| verts[v].clone()).collect();
        if pts.len() < n || affine_rank(&pts, 1e-7) < n - 1 {
            continue;
        }
        let set = BitSet::from_indices(verts.len(), incidence_rows[r].iter().copied());
        if incidence.contains(&set) {
            continue;
        }
        let nrm = a[r].norm();
        facets.push(Facet { normal: &a[r] / nrm, offset: b[r] / nrm });
        incidence.push(set);
    }
    Ok(DoubleDescription { n, vertices: verts, facets, incidence })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::from_row_slice(x)
    }

    fn cube_h(n: usize) -> (Vec<Vector>, Vec<f64>) {
        let mut a = Vec::new();
        for i in 0..n {
            for s in [1.0, -1.0] {
                let mut r = Vector::zeros(n);
                r[i] = s;
                a.push(r);
            }
        }
        (a, vec![1.0; 2 * n])
    }

    #[test]
    fn cube_vertices() {
        for n in 1..=6 {
            let (a, b) = cube_h(n);
            let dd = from_halfspaces(&a, &b, 1e-9).unwrap();
            assert_eq!(dd.vertices.len(), 1 << n);
            assert_eq!(dd.facets.len(), 2 * n);
            for inc in &dd.incidence {
                assert_eq!(inc.len(), 1 << (n - 1));
            }
        }
    }

    #[test]
    fn cross_polytope_facets() {
        for n in 2..=6 {
            let mut pts = Vec::new();
            for i in 0..n {
                for s in [1.0, -1.0] {
                    let mut p = Vector::zeros(n);
                    p[i] = s;
                    pts.push(p);
                }
            }
            let dd = from_vertices(&pts, 1e-9).unwrap();
            assert_eq!(dd.facets.len(), 1 << n);
            for f in &dd.facets {
                assert!((f.offset - 1.0 / (n as f64).sqrt()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn interior_points_are_dropped() {
        let pts = vec![v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 1.0]), v(&[0.2, 0.2]), v(&[0.5, 0.5])];
        let dd = from_vertices(&pts, 1e-9).unwrap();
        assert_eq!(dd.vertices.len(), 3);
        assert_eq!(dd.facets.len(), 3);
    }

    #[test]
    fn redundant_halfspaces_are_dropped() {
        let (mut a, mut b) = cube_h(2);
        a.push(v(&[1.0, 1.0]));
        b.push(5.0);
        a.push(v(&[1.0, 1.0]));
        b.push(2.0); // touches at a vertex only
        let dd = from_halfspaces(&a, &b, 1e-9).unwrap();
        assert_eq!(dd.vertices.len(), 4);
        assert_eq!(dd.facets.len(), 4);
    }

    #[test]
    fn unbounded_rejected() {
        let a = vec![v(&[1.0, 0.0]), v(&[0.0, 1.0]), v(&[-1.0, 0.0])];
        let b = vec![1.0, 1.0, 1.0];
        assert!(from_halfspaces(&a, &b, 1e-9).is_err());
    }

    #[test]
    fn polar_transposes_incidence() {
        let (a, b) = cube_h(3);
        let dd = from_halfspaces(&a, &b, 1e-9).unwrap();
        let p = dd.polar().unwrap();
        assert_eq!(p.vertices.len(), 6);
        assert_eq!(p.facets.len(), 8);
        for inc in &p.incidence {
            assert_eq!(inc.len(), 3);
        }
    }
}
