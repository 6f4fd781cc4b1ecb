//! Exact and Monte-Carlo volume, barycentre, covariance, volume radius and
//! the normalised volume product.
//!
//! Exact polytope integrals use a recursive cone decomposition over the face
//! lattice: a `k`-face is the union of pyramids with apex at its first vertex
//! over the `(k-1)`-faces that avoid the apex. Unrolled, this is the pulling
//! triangulation fanned from the apex; memoising face integrals keeps the cost
//! proportional to the number of faces instead of the number of simplices.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::BodyHandle;
use crate::dd::{BitSet, DoubleDescription};
use crate::error::{GeomError, Result};
use crate::linalg::{sym_eigen, unit_ball_volume, Matrix, Vector};
use crate::sampling::{ball_point, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VolumeMethod {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub value: f64,
    pub method: VolumeMethod,
    pub stderr: f64,
    pub samples: usize,
}

impl VolumeEstimate {
    fn exact(value: f64) -> Self {
        VolumeEstimate { value, method: VolumeMethod::Exact, stderr: 0.0, samples: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub volume: f64,
    pub barycentre: Vec<f64>,
    /// Row-major `n x n` covariance about the barycentre, normalised by volume.
    pub covariance: Vec<Vec<f64>>,
    /// `sqrt(trace(cov)/n)` after rescaling to unit volume.
    pub isotropic_constant: f64,
}

impl MomentReport {
    pub fn barycentre_vec(&self) -> Vector {
        Vector::from_row_slice(&self.barycentre)
    }

    pub fn covariance_matrix(&self) -> Matrix {
        let n = self.barycentre.len();
        Matrix::from_row_slice(n, n, &self.covariance.concat())
    }
}

/// Integrals over a face: volume, first and (optionally) second moments.
#[derive(Debug, Clone)]
pub(crate) struct FaceIntegrals {
    pub vol: f64,
    pub m1: Vector,
    pub m2: Option<Matrix>,
}

struct FaceWalker<'a> {
    dd: &'a DoubleDescription,
    second: bool,
    memo: HashMap<BitSet, FaceIntegrals>,
}

impl FaceWalker<'_> {
    fn subfaces(&self, face: &BitSet, is_top: bool) -> Vec<BitSet> {
        if is_top {
            return self.dd.incidence.clone();
        }
        let mut cands: Vec<BitSet> = Vec::new();
        let size = face.len();
        for inc in &self.dd.incidence {
            let s = face.intersection(inc);
            let len = s.len();
            if len == 0 || len == size || cands.contains(&s) {
                continue;
            }
            cands.push(s);
        }
        let maximal: Vec<BitSet> = cands
            .iter()
            .filter(|s| !cands.iter().any(|t| t != *s && s.is_subset(t)))
            .cloned()
            .collect();
        maximal
    }

    fn integrate(&mut self, face: &BitSet, k: usize, is_top: bool) -> FaceIntegrals {
        if let Some(r) = self.memo.get(face) {
            return r.clone();
        }
        let n = self.dd.n;
        let verts: Vec<usize> = face.iter().collect();
        let apex_idx = verts[0];
        let p = self.dd.vertices[apex_idx].clone();
        let result = if k == 0 {
            FaceIntegrals { vol: 1.0, m1: p.clone(), m2: self.second.then(|| &p * p.transpose()) }
        } else {
            let mut vol = 0.0;
            let mut m1 = Vector::zeros(n);
            let mut m2 = self.second.then(|| Matrix::zeros(n, n));
            let kf = k as f64;
            for g in self.subfaces(face, is_top) {
                if g.contains(apex_idx) {
                    continue;
                }
                let gpts: Vec<Vector> = g.iter().map(|i| self.dd.vertices[i].clone()).collect();
                let h = height(&p, &gpts, k - 1);
                if h <= 1e-14 {
                    continue;
                }
                let base = self.integrate(&g, k - 1, false);
                // Pyramid {p + s(y - p)}: dx = h s^{k-1} ds dy.
                vol += h * base.vol / kf;
                let d1 = &base.m1 - &p * base.vol;
                m1 += (&p * (base.vol / kf) + &d1 / (kf + 1.0)) * h;
                if let (Some(acc), Some(bm2)) = (m2.as_mut(), base.m2.as_ref()) {
                    let d2 = bm2 - &p * base.m1.transpose() - &base.m1 * p.transpose() + &p * p.transpose() * base.vol;
                    let pp = &p * p.transpose() * (base.vol / kf);
                    let cross = (&p * d1.transpose() + &d1 * p.transpose()) / (kf + 1.0);
                    *acc += (pp + cross + d2 / (kf + 2.0)) * h;
                }
            }
            FaceIntegrals { vol, m1, m2 }
        };
        self.memo.insert(face.clone(), result.clone());
        result
    }
}

/// Distance from `p` to the affine hull of `pts`, which has dimension `dim`.
fn height(p: &Vector, pts: &[Vector], dim: usize) -> f64 {
    let base = &pts[0];
    let mut basis: Vec<Vector> = Vec::with_capacity(dim);
    for q in &pts[1..] {
        if basis.len() == dim {
            break;
        }
        let mut v = q - base;
        let scale = v.norm().max(1e-300);
        for _ in 0..2 {
            for b in &basis {
                let d = b.dot(&v);
                v.axpy(-d, b, 1.0);
            }
        }
        let nv = v.norm();
        if nv > 1e-9 * scale {
            basis.push(v / nv);
        }
    }
    let mut r = p - base;
    for _ in 0..2 {
        for b in &basis {
            let d = b.dot(&r);
            r.axpy(-d, b, 1.0);
        }
    }
    r.norm()
}

pub(crate) fn polytope_integrals(dd: &DoubleDescription, second: bool) -> FaceIntegrals {
    let mut walker = FaceWalker { dd, second, memo: HashMap::new() };
    let all = BitSet::from_indices(dd.vertices.len(), 0..dd.vertices.len());
    walker.integrate(&all, dd.n, true)
}

/// Exact Lebesgue volume (polytopes via face recursion, ellipsoids in closed form).
pub fn exact_volume(k: &BodyHandle) -> Result<VolumeEstimate> {
    if let Some(v) = k.cached_volume() {
        return Ok(VolumeEstimate::exact(v));
    }
    let v = match k.ellipsoid() {
        Some(e) => unit_ball_volume(e.n) * e.shape.determinant().abs(),
        None => {
            let dd = k.double_description()?;
            polytope_integrals(&dd, false).vol
        }
    };
    if !(v > 0.0) {
        return Err(GeomError::Degenerate);
    }
    k.store_volume(v);
    Ok(VolumeEstimate::exact(v))
}

pub fn volume(k: &BodyHandle) -> Result<f64> {
    exact_volume(k).map(|v| v.value)
}

/// Volume, barycentre and covariance.
pub fn moments(k: &BodyHandle) -> Result<MomentReport> {
    let n = k.dim();
    let (vol, bary, cov) = match k.ellipsoid() {
        Some(e) => {
            let vol = unit_ball_volume(n) * e.shape.determinant().abs();
            (vol, e.center.clone(), &e.shape * &e.shape / (n as f64 + 2.0))
        }
        None => {
            let dd = k.double_description()?;
            let fi = polytope_integrals(&dd, true);
            if !(fi.vol > 0.0) {
                return Err(GeomError::Degenerate);
            }
            let b = &fi.m1 / fi.vol;
            let m2 = fi.m2.expect("second moments requested");
            let cov = &m2 / fi.vol - &b * b.transpose();
            (fi.vol, b, (&cov + cov.transpose()) * 0.5)
        }
    };
    k.store_volume(vol);
    k.store_barycentre(bary.clone());
    let l = (cov.trace() / n as f64).sqrt() / vol.powf(1.0 / n as f64);
    Ok(MomentReport {
        volume: vol,
        barycentre: bary.iter().copied().collect(),
        covariance: (0..n).map(|i| cov.row(i).iter().copied().collect()).collect(),
        isotropic_constant: l,
    })
}

pub fn barycentre(k: &BodyHandle) -> Result<Vector> {
    if let Some(b) = k.cached_barycentre() {
        return Ok(b);
    }
    let b = match k.ellipsoid() {
        Some(e) => e.center.clone(),
        None => {
            let dd = k.double_description()?;
            let fi = polytope_integrals(&dd, false);
            if !(fi.vol > 0.0) {
                return Err(GeomError::Degenerate);
            }
            k.store_volume(fi.vol);
            &fi.m1 / fi.vol
        }
    };
    k.store_barycentre(b.clone());
    Ok(b)
}

const MC_BLOCK: usize = 4096;

/// Rejection-sampling volume of a set given by a membership oracle inside the
/// box `[lo, hi]`. Blocks are seeded from `(seed, block index)`, so the
/// estimate does not depend on how blocks are scheduled.
pub fn mc_volume_oracle<F>(lo: &Vector, hi: &Vector, member: F, samples: usize, seed: u64) -> Result<VolumeEstimate>
where
    F: Fn(&Vector) -> bool + Sync,
{
    let n = lo.len();
    let box_vol: f64 = (0..n).map(|j| hi[j] - lo[j]).product();
    let blocks = samples.div_ceil(MC_BLOCK);
    let hits: usize = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let count = MC_BLOCK.min(samples - b * MC_BLOCK);
            let mut x = Vector::zeros(n);
            let mut h = 0usize;
            for _ in 0..count {
                for j in 0..n {
                    x[j] = lo[j] + (hi[j] - lo[j]) * rng.random::<f64>();
                }
                if member(&x) {
                    h += 1;
                }
            }
            h
        })
        .sum();
    if hits == 0 {
        return Err(GeomError::Inconclusive { samples, upper_bound: box_vol * 3.0 / samples as f64 });
    }
    let p = hits as f64 / samples as f64;
    Ok(VolumeEstimate {
        value: box_vol * p,
        method: VolumeMethod::MonteCarlo,
        stderr: box_vol * (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
    })
}

/// Rejection-sampling volume of a set contained in the ball `center + radius·B_2^n`.
pub fn mc_volume_in_ball<F>(center: &Vector, radius: f64, member: F, samples: usize, seed: u64) -> Result<VolumeEstimate>
where
    F: Fn(&Vector) -> bool + Sync,
{
    let n = center.len();
    let ball_vol = unit_ball_volume(n) * radius.powi(n as i32);
    let blocks = samples.div_ceil(MC_BLOCK);
    let hits: usize = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let count = MC_BLOCK.min(samples - b * MC_BLOCK);
            (0..count).filter(|_| member(&(center + ball_point(n, &mut rng) * radius))).count()
        })
        .sum();
    if hits == 0 {
        return Err(GeomError::Inconclusive { samples, upper_bound: ball_vol * 3.0 / samples as f64 });
    }
    let p = hits as f64 / samples as f64;
    Ok(VolumeEstimate {
        value: ball_vol * p,
        method: VolumeMethod::MonteCarlo,
        stderr: ball_vol * (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
    })
}

/// Monte-Carlo volume of a body using its support-function bounding box.
pub fn mc_volume(k: &BodyHandle, samples: usize, seed: u64) -> Result<VolumeEstimate> {
    let (lo, hi) = k.bounding_box()?;
    match k.ellipsoid() {
        Some(_) => mc_volume_oracle(&lo, &hi, |x| k.contains(x, 0.0).unwrap_or(false), samples, seed),
        None => {
            let dd = k.double_description()?;
            mc_volume_oracle(&lo, &hi, |x| dd.contains(x, 0.0), samples, seed)
        }
    }
}

/// `(|K| / |B_2^n|)^{1/n}`.
pub fn volume_radius(k: &BodyHandle) -> Result<f64> {
    let n = k.dim();
    Ok((volume(k)? / unit_ball_volume(n)).powf(1.0 / n as f64))
}

/// `(|K| |K°|)^{1/n} / |B_2^n|^{2/n}`; equals 1 exactly for centred ellipsoids.
pub fn volume_product(k: &BodyHandle) -> Result<f64> {
    let n = k.dim() as f64;
    let kp = k.polar()?;
    let prod = volume(k)? * volume(&kp)?;
    Ok(prod.powf(1.0 / n) / unit_ball_volume(k.dim()).powf(2.0 / n))
}

/// Eigenvalues of the covariance, descending.
pub fn covariance_spectrum(report: &MomentReport) -> Vec<f64> {
    sym_eigen(&report.covariance_matrix()).0
}
