//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Volume of the Euclidean unit ball in dimension `n` (`|B_2^0| = 1`).
pub fn unit_ball_volume(n: usize) -> f64 {
    let mut v = if n.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut k = if n.is_multiple_of(2) { 2 } else { 3 };
    while k <= n {
        v *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    v
}

/// `ln |B_2^n|`, stable for large `n`.
pub fn ln_unit_ball_volume(n: usize) -> f64 {
    unit_ball_volume(n).ln()
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues sorted descending.
pub fn sym_eigen(m: &Matrix) -> (Vec<f64>, Matrix) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = Matrix::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(i));
    }
    (values, vecs)
}

/// Applies `f` to the spectrum of a symmetric matrix.
pub fn sym_apply(m: &Matrix, f: impl Fn(f64) -> f64) -> Matrix {
    let (vals, vecs) = sym_eigen(m);
    let d = Matrix::from_diagonal(&Vector::from_iterator(vals.len(), vals.iter().map(|&x| f(x))));
    &vecs * d * vecs.transpose()
}

/// Principal square root of a symmetric positive semi-definite matrix.
pub fn sym_sqrt(m: &Matrix) -> Matrix {
    sym_apply(m, |x| x.max(0.0).sqrt())
}

pub fn sym_inv_sqrt(m: &Matrix) -> Result<Matrix> {
    let (vals, _) = sym_eigen(m);
    if vals.last().is_none_or(|&v| v <= 0.0) {
        return Err(GeomError::SingularMatrix);
    }
    Ok(sym_apply(m, |x| 1.0 / x.sqrt()))
}

pub fn inverse(m: &Matrix) -> Result<Matrix> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(GeomError::SingularMatrix);
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let lu = m.clone().lu();
    let det = lu.determinant();
    if !det.is_finite() || det.abs() <= 1e-14 * scale.powi(n as i32) {
        return Err(GeomError::SingularMatrix);
    }
    lu.try_inverse().ok_or(GeomError::SingularMatrix)
}

/// Orthonormal basis (as columns) of the span of the given columns, via
/// modified Gram-Schmidt with re-orthogonalisation. Columns whose residual
/// falls below `tol` are dropped.
pub fn orthonormalize(cols: &[Vector], tol: f64) -> Vec<Vector> {
    let mut basis: Vec<Vector> = Vec::new();
    for c in cols {
        let mut v = c.clone();
        for _ in 0..2 {
            for b in &basis {
                let d = b.dot(&v);
                v.axpy(-d, b, 1.0);
            }
        }
        let nrm = v.norm();
        let scale = c.norm().max(1.0);
        if nrm > tol * scale {
            basis.push(v / nrm);
        }
    }
    basis
}

/// Orthonormal basis of the orthogonal complement of the span of `basis`
/// (columns assumed orthonormal) in `R^n`.
pub fn orthogonal_complement(basis: &Matrix) -> Matrix {
    let n = basis.nrows();
    let mut cols: Vec<Vector> = basis.column_iter().map(|c| c.into_owned()).collect();
    let k = cols.len();
    for i in 0..n {
        let mut e = Vector::zeros(n);
        e[i] = 1.0;
        cols.push(e);
    }
    let ortho = orthonormalize(&cols, 1e-10);
    let rest: Vec<Vector> = ortho.into_iter().skip(k).take(n - k).collect();
    columns_to_matrix(n, &rest)
}

pub fn columns_to_matrix(nrows: usize, cols: &[Vector]) -> Matrix {
    let mut m = Matrix::zeros(nrows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

/// Affine dimension of a point set.
pub fn affine_rank(points: &[Vector], tol: f64) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let diffs: Vec<Vector> = points[1..].iter().map(|p| p - &points[0]).collect();
    orthonormalize(&diffs, tol).len()
}

/// Euclidean distance from `p` to the affine hull of `points`.
pub fn distance_to_affine_hull(p: &Vector, points: &[Vector]) -> f64 {
    let base = &points[0];
    let diffs: Vec<Vector> = points[1..].iter().map(|q| q - base).collect();
    let basis = orthonormalize(&diffs, 1e-12);
    let mut r = p - base;
    for _ in 0..2 {
        for b in &basis {
            let d = b.dot(&r);
            r.axpy(-d, b, 1.0);
        }
    }
    r.norm()
}

/// Gram determinant volume of the simplex spanned by `points`
/// (`k+1` points spanning a `k`-simplex).
pub fn simplex_volume(points: &[Vector]) -> f64 {
    let k = points.len() - 1;
    if k == 0 {
        return 1.0;
    }
    let n = points[0].len();
    let mut e = Matrix::zeros(n, k);
    for i in 0..k {
        e.set_column(i, &(&points[i + 1] - &points[0]));
    }
    let g = e.transpose() * &e;
    g.determinant().max(0.0).sqrt() / factorial(k)
}

/// Nearest point to `x` in the convex hull of `points` (Wolfe's minimum-norm
/// point algorithm). Returns the nearest point.
pub fn nearest_in_hull(points: &[Vector], x: &Vector) -> Vector {
    let shifted: Vec<Vector> = points.iter().map(|p| p - x).collect();
    let y = min_norm_point(&shifted);
    y + x
}

pub fn distance_to_hull(points: &[Vector], x: &Vector) -> f64 {
    let shifted: Vec<Vector> = points.iter().map(|p| p - x).collect();
    min_norm_point(&shifted).norm()
}

fn min_norm_point(p: &[Vector]) -> Vector {
    let m = p.len();
    let scale = p.iter().map(|v| v.norm_squared()).fold(0.0, f64::max).max(1e-300);
    let eps = 1e-12;
    let first = (0..m)
        .min_by(|&a, &b| p[a].norm_squared().total_cmp(&p[b].norm_squared()))
        .expect("non-empty point set");
    let mut active = vec![first];
    let mut weights = vec![1.0];
    let mut y = p[first].clone();
    for _major in 0..(50 * m + 100) {
        let (j, best) = (0..m)
            .map(|i| (i, y.dot(&p[i])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        if best >= y.norm_squared() - eps * scale || active.contains(&j) {
            return y;
        }
        active.push(j);
        weights.push(0.0);
        loop {
            let alpha = match affine_min_norm(p, &active) {
                Some(a) => a,
                None => {
                    // Degenerate affine system: drop the new point.
                    active.pop();
                    weights.pop();
                    return y;
                }
            };
            if alpha.iter().all(|&a| a > eps) {
                weights = alpha;
                break;
            }
            let mut theta = 1.0f64;
            for (w, a) in weights.iter().zip(&alpha) {
                if *a <= eps {
                    let denom = w - a;
                    if denom > 0.0 {
                        theta = theta.min(w / denom);
                    }
                }
            }
            for (w, a) in weights.iter_mut().zip(&alpha) {
                *w += theta * (a - *w);
            }
            let mut k = 0;
            while k < active.len() {
                if weights[k] <= eps {
                    active.remove(k);
                    weights.remove(k);
                } else {
                    k += 1;
                }
            }
            if active.is_empty() {
                active.push(j);
                weights.push(1.0);
                break;
            }
        }
        let total: f64 = weights.iter().sum();
        y = Vector::zeros(p[0].len());
        for (&i, &w) in active.iter().zip(&weights) {
            y.axpy(w / total, &p[i], 1.0);
        }
    }
    y
}

/// Minimum-norm point of the affine hull of `p[idx]`, as affine weights.
fn affine_min_norm(p: &[Vector], idx: &[usize]) -> Option<Vec<f64>> {
    let k = idx.len();
    let mut kkt = Matrix::zeros(k + 1, k + 1);
    for a in 0..k {
        for b in 0..k {
            kkt[(a, b)] = p[idx[a]].dot(&p[idx[b]]);
        }
        kkt[(a, k)] = 1.0;
        kkt[(k, a)] = 1.0;
    }
    let mut rhs = Vector::zeros(k + 1);
    rhs[k] = 1.0;
    let sol = kkt.lu().solve(&rhs)?;
    let w: Vec<f64> = sol.iter().take(k).copied().collect();
    if w.iter().all(|v| v.is_finite()) {
        Some(w)
    } else {
        None
    }
}
