//! Phase-one simplex feasibility: does a nonnegative combination of the
//! columns hit the right-hand side exactly?
//!
//! The solver keeps a dense basis inverse and prices columns on demand
//! through `ColumnSource`, so problems whose constraint matrix is too wide to
//! materialize (one column per deterministic strategy pair) still solve in
//! O(rows^2) memory. Entering variables follow Bland's rule (the smallest
//! column index with a negative reduced cost), which guarantees termination
//! under the heavy degeneracy these instances have. Artificial variables
//! never re-enter once they leave, which preserves the feasibility verdict.

use crate::error::{Error, Result};

/// The column view of a feasibility problem `A w = b, w >= 0`.
pub trait ColumnSource: Sync {
    fn num_rows(&self) -> usize;
    fn num_cols(&self) -> usize;
    fn rhs(&self) -> &[f64];
    /// Writes the sparse column j as (row, value) pairs into `out`.
    fn column(&self, j: usize, out: &mut Vec<(usize, f64)>);
}

#[derive(Debug, Clone)]
pub struct SimplexConfig {
    /// Phase-one objective below this is feasible.
    pub feas_tol: f64,
    /// Reduced costs and pivots smaller than this count as zero.
    pub pivot_tol: f64,
    pub max_iterations: u64,
    /// Rebuild the basis inverse from scratch this often.
    pub refactor_every: u64,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        SimplexConfig {
            feas_tol: 1e-9,
            pivot_tol: 1e-10,
            max_iterations: 500_000,
            refactor_every: 256,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PhaseOneSolution {
    pub feasible: bool,
    /// Remaining artificial mass at the optimum; an infeasibility measure.
    pub objective: f64,
    /// Nonzero structural weights (column index, value) when feasible.
    pub weights: Vec<(usize, f64)>,
    pub iterations: u64,
}

struct Tableau<'a> {
    src: &'a dyn ColumnSource,
    m: usize,
    n: usize,
    /// Variable id per basis row; ids >= n are artificials for row id - n.
    basis: Vec<usize>,
    /// Dense row-major inverse of the basis matrix.
    binv: Vec<f64>,
    /// Current basic values, binv * b.
    xb: Vec<f64>,
    in_basis: Vec<bool>,
    scratch_col: Vec<(usize, f64)>,
}

impl Tableau<'_> {
    fn is_artificial(&self, id: usize) -> bool {
        id >= self.n
    }

    fn objective(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.xb)
            .filter(|(id, _)| self.is_artificial(**id))
            .map(|(_, v)| v)
            .sum()
    }

    /// y = c_B^T B^{-1}, where c_B is 1 on artificial rows.
    fn dual(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (i, id) in self.basis.iter().enumerate() {
            if self.is_artificial(*id) {
                for r in 0..m {
                    y[r] += self.binv[i * m + r];
                }
            }
        }
        y
    }

    /// First structural column with a negative reduced cost (Bland).
    fn entering(&mut self, y: &[f64], tol: f64) -> Option<usize> {
        for j in 0..self.n {
            if self.in_basis[j] {
                continue;
            }
            self.scratch_col.clear();
            self.src.column(j, &mut self.scratch_col);
            let mut rc = 0.0;
            for &(r, v) in &self.scratch_col {
                rc -= y[r] * v;
            }
            if rc < -tol {
                return Some(j);
            }
        }
        None
    }

    /// Direction u = B^{-1} A_j for the current scratch column.
    fn direction(&self) -> Vec<f64> {
        let m = self.m;
        let mut u = vec![0.0; m];
        for &(r, v) in &self.scratch_col {
            for i in 0..m {
                u[i] += self.binv[i * m + r] * v;
            }
        }
        u
    }

    /// Min-ratio row, ties broken toward the smallest leaving variable id.
    fn leaving(&self, u: &[f64], tol: f64) -> Option<usize> {
        let mut min_ratio = f64::INFINITY;
        for i in 0..self.m {
            if u[i] > tol {
                min_ratio = min_ratio.min(self.xb[i] / u[i]);
            }
        }
        if !min_ratio.is_finite() {
            return None;
        }
        let slack = 1e-12 * (1.0 + min_ratio.abs());
        let mut pick: Option<usize> = None;
        for i in 0..self.m {
            if u[i] > tol && self.xb[i] / u[i] <= min_ratio + slack {
                match pick {
                    Some(p) if self.basis[p] <= self.basis[i] => {}
                    _ => pick = Some(i),
                }
            }
        }
        pick
    }

    fn pivot(&mut self, entering: usize, row: usize, u: &[f64]) {
        let m = self.m;
        let ratio = self.xb[row] / u[row];
        let inv_up = 1.0 / u[row];
        for r in 0..m {
            self.binv[row * m + r] *= inv_up;
        }
        for i in 0..m {
            if i == row || u[i] == 0.0 {
                continue;
            }
            let factor = u[i];
            for r in 0..m {
                self.binv[i * m + r] -= factor * self.binv[row * m + r];
            }
            self.xb[i] -= factor * ratio;
            if self.xb[i] < 0.0 {
                self.xb[i] = 0.0;
            }
        }
        self.xb[row] = ratio;
        let old = self.basis[row];
        if !self.is_artificial(old) {
            self.in_basis[old] = false;
        }
        self.basis[row] = entering;
        self.in_basis[entering] = true;
    }

    /// Rebuilds binv and xb from the basis column set via Gauss-Jordan.
    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let mut mat = vec![0.0; m * m];
        let mut inv = vec![0.0; m * m];
        let mut col = Vec::new();
        for (i, &id) in self.basis.iter().enumerate() {
            if self.is_artificial(id) {
                mat[(id - self.n) * m + i] = 1.0;
            } else {
                col.clear();
                self.src.column(id, &mut col);
                for &(r, v) in &col {
                    mat[r * m + i] = v;
                }
            }
            inv[i * m + i] = 1.0;
        }
        for pivot_col in 0..m {
            let mut best = pivot_col;
            for r in pivot_col + 1..m {
                if mat[r * m + pivot_col].abs() > mat[best * m + pivot_col].abs() {
                    best = r;
                }
            }
            if mat[best * m + pivot_col].abs() < 1e-12 {
                return Err(Error::SolverFailure {
                    message: "basis matrix became singular".into(),
                    residual: f64::NAN,
                });
            }
            if best != pivot_col {
                for c in 0..m {
                    mat.swap(pivot_col * m + c, best * m + c);
                    inv.swap(pivot_col * m + c, best * m + c);
                }
            }
            let p = mat[pivot_col * m + pivot_col];
            for c in 0..m {
                mat[pivot_col * m + c] /= p;
                inv[pivot_col * m + c] /= p;
            }
            for r in 0..m {
                if r == pivot_col {
                    continue;
                }
                let factor = mat[r * m + pivot_col];
                if factor == 0.0 {
                    continue;
                }
                for c in 0..m {
                    mat[r * m + c] -= factor * mat[pivot_col * m + c];
                    inv[r * m + c] -= factor * inv[pivot_col * m + c];
                }
            }
        }
        self.binv = inv;
        let b = self.src.rhs();
        for i in 0..m {
            let mut v = 0.0;
            for r in 0..m {
                v += self.binv[i * m + r] * b[r];
            }
            self.xb[i] = v.max(0.0);
        }
        Ok(())
    }
}

/// Decides feasibility of `A w = b, w >= 0` by minimizing the artificial mass
/// from the all-artificial starting basis.
pub fn phase_one_feasibility(
    src: &dyn ColumnSource,
    cfg: &SimplexConfig,
) -> Result<PhaseOneSolution> {
    let m = src.num_rows();
    let n = src.num_cols();
    let b = src.rhs();
    if b.len() != m {
        return Err(Error::invalid("rhs length does not match row count"));
    }
    if b.iter().any(|&v| v < 0.0) {
        return Err(Error::invalid("phase one expects a nonnegative rhs"));
    }
    let mut t = Tableau {
        src,
        m,
        n,
        basis: (0..m).map(|i| n + i).collect(),
        binv: {
            let mut id = vec![0.0; m * m];
            for i in 0..m {
                id[i * m + i] = 1.0;
            }
            id
        },
        xb: b.to_vec(),
        in_basis: vec![false; n],
        scratch_col: Vec::new(),
    };

    let mut iterations = 0u64;
    loop {
        if t.basis.iter().all(|&id| !t.is_artificial(id)) {
            break; // objective is exactly zero
        }
        let y = t.dual();
        let Some(entering) = t.entering(&y, cfg.pivot_tol) else {
            break; // optimal
        };
        let u = t.direction();
        let Some(row) = t.leaving(&u, cfg.pivot_tol) else {
            return Err(Error::SolverFailure {
                message: "phase-one direction unbounded".into(),
                residual: t.objective(),
            });
        };
        t.pivot(entering, row, &u);
        iterations += 1;
        if iterations % cfg.refactor_every == 0 {
            t.refactor()?;
        }
        if iterations >= cfg.max_iterations {
            return Err(Error::SolverFailure {
                message: format!("no optimum within {} pivots", cfg.max_iterations),
                residual: t.objective(),
            });
        }
    }

    t.refactor()?;
    let objective = t.objective();
    let feasible = objective <= cfg.feas_tol;
    let mut weights = Vec::new();
    if feasible {
        for (i, &id) in t.basis.iter().enumerate() {
            if !t.is_artificial(id) && t.xb[i] > 0.0 {
                weights.push((id, t.xb[i]));
            }
        }
        weights.sort_by_key(|&(id, _)| id);
    }
    Ok(PhaseOneSolution {
        feasible,
        objective,
        weights,
        iterations,
    })
}

/// Maximum violation |A w - b| of a weight vector, evaluated column-wise.
pub fn residual(src: &dyn ColumnSource, weights: &[(usize, f64)]) -> f64 {
    let mut r: Vec<f64> = src.rhs().iter().map(|&v| -v).collect();
    let mut col = Vec::new();
    for &(j, w) in weights {
        col.clear();
        src.column(j, &mut col);
        for &(row, v) in &col {
            r[row] += w * v;
        }
    }
    r.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}
