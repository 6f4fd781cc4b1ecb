//! Dense two-phase simplex for the small linear programs behind support
//! functions, Chebyshev centres and redundancy pruning.
//!
//! Pivoting uses Bland's rule, so the pivot sequence is a deterministic
//! function of the input and cycling cannot occur on degenerate vertices.

use crate::linalg::Vector;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Unbounded,
    Infeasible,
}

const PIVOT_TOL: f64 = 1e-11;

struct Tableau {
    rows: usize,
    cols: usize,
    // (rows + 1) x (cols + 1); last row is the objective, last column the rhs.
    t: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * (self.cols + 1) + c]
    }

    fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.t[r * (self.cols + 1) + c]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.cols + 1;
        let p = self.at(pr, pc);
        for c in 0..w {
            *self.at_mut(pr, c) /= p;
        }
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let f = self.at(r, pc);
            if f != 0.0 {
                for c in 0..w {
                    let v = self.at(pr, c);
                    *self.at_mut(r, c) -= f * v;
                }
            }
        }
        self.basis[pr] = pc;
    }

    /// Minimises the objective row over columns `< allowed`. Returns false on
    /// unboundedness.
    fn run(&mut self, allowed: usize) -> bool {
        let obj = self.rows;
        for _ in 0..100_000 {
            // Bland: smallest index with negative reduced cost.
            let entering = (0..allowed).find(|&c| self.at(obj, c) < -PIVOT_TOL);
            let Some(pc) = entering else { return true };
            let mut best: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > PIVOT_TOL {
                    let ratio = self.at(r, self.cols) / a;
                    match best {
                        None => best = Some((r, ratio)),
                        Some((br, bv)) => {
                            if ratio < bv - 1e-13
                                || (ratio <= bv + 1e-13 && self.basis[r] < self.basis[br])
                            {
                                best = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            match best {
                None => return false,
                Some((pr, _)) => self.pivot(pr, pc),
            }
        }
        true
    }
}

/// Solves `min c·x` subject to `A x = b`, `x >= 0`.
pub fn solve_standard(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> LpOutcome {
    let m = a.len();
    let nv = c.len();
    let cols = nv + m;
    let mut tab = Tableau { rows: m, cols, t: vec![0.0; (m + 1) * (cols + 1)], basis: vec![0; m] };
    for r in 0..m {
        let sign = if b[r] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..nv {
            *tab.at_mut(r, j) = sign * a[r][j];
        }
        *tab.at_mut(r, nv + r) = 1.0;
        *tab.at_mut(r, cols) = sign * b[r];
        tab.basis[r] = nv + r;
    }
    // Phase I objective: sum of artificials, expressed in non-basic terms.
    for j in 0..=cols {
        let s: f64 = (0..m).map(|r| tab.at(r, j)).sum();
        *tab.at_mut(m, j) = if j >= nv && j < cols { 0.0 } else { -s };
    }
    tab.run(cols);
    let scale = b.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    if -tab.at(m, cols) > 1e-9 * scale {
        return LpOutcome::Infeasible;
    }
    // Drive remaining artificials out of the basis where possible.
    for r in 0..m {
        if tab.basis[r] >= nv {
            if let Some(pc) = (0..nv).find(|&j| tab.at(r, j).abs() > 1e-9) {
                tab.pivot(r, pc);
            }
        }
    }
    // Phase II objective.
    for j in 0..=cols {
        *tab.at_mut(m, j) = if j < nv { c[j] } else { 0.0 };
    }
    for r in 0..m {
        let bv = tab.basis[r];
        if bv < nv {
            let f = tab.at(m, bv);
            if f != 0.0 {
                for j in 0..=cols {
                    let v = tab.at(r, j);
                    *tab.at_mut(m, j) -= f * v;
                }
            }
        }
    }
    // Artificial columns are barred from re-entering.
    if !tab.run(nv) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![0.0; nv];
    for r in 0..m {
        if tab.basis[r] < nv {
            x[tab.basis[r]] = tab.at(r, cols);
        }
    }
    let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    LpOutcome::Optimal { x, value }
}

/// Solves `max c·x` subject to `A x <= b` with `x` free.
pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> LpOutcome {
    let n = c.len();
    let m = a.len();
    // Variables: x+ (n), x- (n), slack (m).
    let nv = 2 * n + m;
    let mut cost = vec![0.0; nv];
    for j in 0..n {
        cost[j] = -c[j];
        cost[n + j] = c[j];
    }
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|r| {
            let mut row = vec![0.0; nv];
            for j in 0..n {
                row[j] = a[r][j];
                row[n + j] = -a[r][j];
            }
            row[2 * n + r] = 1.0;
            row
        })
        .collect();
    match solve_standard(&cost, &rows, b) {
        LpOutcome::Optimal { x, .. } => {
            let xs: Vec<f64> = (0..n).map(|j| x[j] - x[n + j]).collect();
            let value = c.iter().zip(&xs).map(|(ci, xi)| ci * xi).sum();
            LpOutcome::Optimal { x: xs, value }
        }
        other => other,
    }
}

/// Centre and radius of the largest Euclidean ball inside `{x : A x <= b}`.
/// Returns `None` when the system is infeasible or unbounded.
pub fn chebyshev_center(a: &[Vector], b: &[f64]) -> Option<(Vector, f64)> {
    let n = a.first()?.len();
    let rows: Vec<Vec<f64>> = a
        .iter()
        .map(|ai| {
            let mut row: Vec<f64> = ai.iter().copied().collect();
            row.push(ai.norm());
            row
        })
        .collect();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    // Cap the radius so unbounded regions still report a centre.
    let mut rows = rows;
    let mut rhs = b.to_vec();
    let mut cap = vec![0.0; n + 1];
    cap[n] = 1.0;
    rows.push(cap);
    rhs.push(1e6);
    match maximize(&c, &rows, &rhs) {
        LpOutcome::Optimal { x, .. } => {
            let r = x[n];
            Some((Vector::from_iterator(n, x.into_iter().take(n)), r))
        }
        _ => None,
    }
}
