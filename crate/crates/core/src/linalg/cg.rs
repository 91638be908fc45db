//! Indirect KKT backend: eliminate `y` and run Jacobi-preconditioned
//! conjugate gradient on `I + P + AᵀA`.

use crate::error::{check_len, Error, Result};
use crate::linalg::SparseMatrix;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Reusable CG solver for `[[I + P, Aᵀ], [A, −I]] (x, y) = (r_x, r_y)`.
///
/// The reduced system is `(I + P + AᵀA) x = r_x + Aᵀ r_y`, followed by
/// `y = A x − r_y`.
#[derive(Debug, Clone)]
pub struct IndirectKktSolver {
    p: SparseMatrix,
    a: SparseMatrix,
    inv_diag: Vec<f64>,
    max_iter: usize,
    b: Vec<f64>,
    r: Vec<f64>,
    z: Vec<f64>,
    dir: Vec<f64>,
    kdir: Vec<f64>,
    best: Vec<f64>,
    tmp_n: Vec<f64>,
    tmp_m: Vec<f64>,
}

/// Outcome of one CG solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

impl IndirectKktSolver {
    /// `p` is the upper triangle of `P`.
    pub fn new(p: &SparseMatrix, a: &SparseMatrix) -> Result<Self> {
        let n = p.ncols();
        check_len("P rows", n, p.nrows())?;
        check_len("A columns", n, a.ncols())?;
        if !p.is_upper_triangular() {
            return Err(Error::Argument("P must be stored as an upper triangle".into()));
        }
        let m = a.nrows();
        let mut diag = vec![1.0; n];
        for (d, pjj) in diag.iter_mut().zip(p.diagonal()) {
            *d += pjj;
        }
        for j in 0..n {
            diag[j] += a.column(j).map(|(_, v)| v * v).sum::<f64>();
        }
        let inv_diag = diag.iter().map(|d| 1.0 / d).collect();
        Ok(Self {
            p: p.clone(),
            a: a.clone(),
            inv_diag,
            max_iter: 10 * n.max(1),
            b: vec![0.0; n],
            r: vec![0.0; n],
            z: vec![0.0; n],
            dir: vec![0.0; n],
            kdir: vec![0.0; n],
            best: vec![0.0; n],
            tmp_n: vec![0.0; n],
            tmp_m: vec![0.0; m],
        })
    }

    pub fn n(&self) -> usize {
        self.p.ncols()
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn max_iterations(&self) -> usize {
        self.max_iter
    }

    /// `out = (I + P + AᵀA) v`
    fn apply(&mut self, v: &[f64], out: &mut [f64]) {
        self.p.sym_upper_mul_vec_into(v, out);
        self.a.mul_vec_into(v, &mut self.tmp_m);
        self.a.tmul_vec_into(&self.tmp_m, &mut self.tmp_n);
        for ((o, vi), t) in out.iter_mut().zip(v).zip(&self.tmp_n) {
            *o += vi + t;
        }
    }

    /// Solves the KKT system for `rhs = (r_x, r_y)` into `out`.
    ///
    /// `warm` holds the starting `x` and receives the final one. Stops when
    /// `‖K_r x − b‖₂ ≤ tol·‖b‖₂` for the reduced system.
    pub fn solve(
        &mut self,
        rhs: &[f64],
        tol: f64,
        warm: &mut [f64],
        out: &mut [f64],
    ) -> Result<CgStats> {
        let (n, m) = (self.n(), self.m());
        check_len("KKT right-hand side", n + m, rhs.len())?;
        check_len("KKT solution", n + m, out.len())?;
        check_len("CG warm start", n, warm.len())?;
        if !(tol > 0.0) {
            return Err(Error::Argument(format!("CG tolerance must be positive, got {tol}")));
        }
        let (rx, ry) = rhs.split_at(n);
        self.a.tmul_vec_into(ry, &mut self.b);
        for (b, r) in self.b.iter_mut().zip(rx) {
            *b += r;
        }
        let b_norm = norm(&self.b);
        let stats = if b_norm == 0.0 {
            warm.fill(0.0);
            CgStats {
                iterations: 0,
                relative_residual: 0.0,
            }
        } else {
            self.run_cg(warm, tol, b_norm)?
        };
        let (ox, oy) = out.split_at_mut(n);
        ox.copy_from_slice(warm);
        self.a.mul_vec_into(warm, oy);
        for (y, r) in oy.iter_mut().zip(ry) {
            *y -= r;
        }
        Ok(stats)
    }

    fn run_cg(&mut self, x: &mut [f64], tol: f64, b_norm: f64) -> Result<CgStats> {
        let mut kx = std::mem::take(&mut self.kdir);
        self.apply(x, &mut kx);
        for ((r, b), k) in self.r.iter_mut().zip(&self.b).zip(&kx) {
            *r = b - k;
        }
        self.kdir = kx;
        let mut res = norm(&self.r);
        if res <= tol * b_norm {
            return Ok(CgStats {
                iterations: 0,
                relative_residual: res / b_norm,
            });
        }
        let mut best_res = res;
        self.best.copy_from_slice(x);
        for ((z, r), d) in self.z.iter_mut().zip(&self.r).zip(&self.inv_diag) {
            *z = r * d;
        }
        self.dir.copy_from_slice(&self.z);
        let mut rz = dot(&self.r, &self.z);

        for it in 1..=self.max_iter {
            let dir = std::mem::take(&mut self.dir);
            let mut kdir = std::mem::take(&mut self.kdir);
            self.apply(&dir, &mut kdir);
            let curvature = dot(&dir, &kdir);
            let alpha = rz / curvature;
            for i in 0..x.len() {
                x[i] += alpha * dir[i];
                self.r[i] -= alpha * kdir[i];
            }
            self.dir = dir;
            self.kdir = kdir;
            res = norm(&self.r);
            if res < best_res {
                best_res = res;
                self.best.copy_from_slice(x);
            }
            if res <= tol * b_norm {
                return Ok(CgStats {
                    iterations: it,
                    relative_residual: res / b_norm,
                });
            }
            for ((z, r), d) in self.z.iter_mut().zip(&self.r).zip(&self.inv_diag) {
                *z = r * d;
            }
            let rz_new = dot(&self.r, &self.z);
            let beta = rz_new / rz;
            rz = rz_new;
            for (d, z) in self.dir.iter_mut().zip(&self.z) {
                *d = z + beta * *d;
            }
        }
        Err(Error::CgNotConverged {
            iterations: self.max_iter,
            residual: best_res / b_norm,
            best: self.best.clone(),
        })
    }
}

/// One-shot indirect KKT solve; `warm` is the starting `x` (length `n`).
pub fn solve_kkt_indirect(
    p: &SparseMatrix,
    a: &SparseMatrix,
    rhs: &[f64],
    tol: f64,
    warm: &[f64],
) -> Result<Vec<f64>> {
    let mut solver = IndirectKktSolver::new(p, a)?;
    let mut x = warm.to_vec();
    check_len("CG warm start", solver.n(), x.len())?;
    let mut out = vec![0.0; rhs.len()];
    solver.solve(rhs, tol, &mut x, &mut out)?;
    Ok(out)
}

/// Relative CG tolerance for the `k`-th outer iteration (1-based):
/// `min(0.1, k^-1.5)`, floored at `1e-12`.
pub fn cg_tolerance_schedule(k: usize) -> f64 {
    let k = k.max(1) as f64;
    (0.1f64).min(k.powf(-1.5)).max(1e-12)
}
