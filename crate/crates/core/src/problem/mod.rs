//! Quadratic cone program data, validation, and its view as a monotone LCP.
//!
//! The primal-dual pair is
//!
//! ```text
//! minimize   ½xᵀPx + cᵀx          maximize  −½xᵀPx − bᵀy
//! subject to Ax + s = b, s ∈ K    subject to Px + Aᵀy + c = 0, y ∈ K*
//! ```
//!
//! and its KKT conditions form `LCP(M, q, C)` with `z = (x, y)`,
//! `M = [[P, Aᵀ], [−A, 0]]`, `q = (c, b)` and `C = ℝⁿ × K*`.

mod certificate;
pub mod io;
mod result;

pub use certificate::{
    dual_certificate, primal_certificate, verify_certificate, Certificate, CertificateKind,
    CERTIFICATE_CONE_TOL,
};
pub use result::{KktCheck, Residuals, SolveResult, Status};

use crate::cones::{Cone, ConeSpec};
use crate::error::{Error, Result, ValidationIssue};
use crate::linalg::{dot, LdlFactorization, Ordering, SparseMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct QcpProblem {
    /// Upper triangle of the PSD matrix `P` (n×n).
    pub p: SparseMatrix,
    /// Constraint matrix (m×n).
    pub a: SparseMatrix,
    pub c: Vec<f64>,
    pub b: Vec<f64>,
    /// The cone `K`, acting on the rows of `A` in order.
    pub cones: ConeSpec,
}

fn cone_rank(cone: &Cone) -> Option<u8> {
    match cone {
        Cone::Zero(_) => Some(0),
        Cone::NonNegative(_) => Some(1),
        Cone::Box { .. } => Some(2),
        Cone::SecondOrder(_) => Some(3),
        Cone::Free(_) => None,
    }
}

impl QcpProblem {
    /// Builds and validates a problem.
    pub fn new(
        p: SparseMatrix,
        a: SparseMatrix,
        c: Vec<f64>,
        b: Vec<f64>,
        cones: ConeSpec,
    ) -> Result<Self> {
        let problem = Self { p, a, c, b, cones };
        problem.validate().map_err(Error::Validation)?;
        Ok(problem)
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    /// Structural checks: dimensions, cone ordering, finite data, upper-triangular `P`.
    pub fn validate(&self) -> std::result::Result<(), Vec<ValidationIssue>> {
        let mut issues = Vec::new();
        let (n, m) = (self.n(), self.m());
        if self.p.nrows() != n || self.p.ncols() != n {
            issues.push(ValidationIssue::new(
                "P",
                format!("shape {}x{} does not match n = {n}", self.p.nrows(), self.p.ncols()),
            ));
        }
        if let Some((i, j, _)) = self.p.iter().find(|&(i, j, _)| i > j) {
            issues.push(ValidationIssue::new(
                format!("P[{i},{j}]"),
                "P must store the upper triangle only",
            ));
        }
        if self.a.nrows() != m || self.a.ncols() != n {
            issues.push(ValidationIssue::new(
                "A",
                format!(
                    "shape {}x{} does not match m x n = {m}x{n}",
                    self.a.nrows(),
                    self.a.ncols()
                ),
            ));
        }
        for (name, v) in [("c", &self.c), ("b", &self.b)] {
            for (i, x) in v.iter().enumerate() {
                if !x.is_finite() {
                    issues.push(ValidationIssue::new(format!("{name}[{i}]"), format!("non-finite value {x}")));
                }
            }
        }
        if self.cones.total_dim() != m {
            issues.push(ValidationIssue::new(
                "cones",
                format!("cone dimension mismatch: cones cover {} rows, m = {m}", self.cones.total_dim()),
            ));
        }
        let mut last_rank = 0;
        for (k, cone) in self.cones.cones().iter().enumerate() {
            match cone_rank(cone) {
                None => issues.push(ValidationIssue::new(
                    format!("cones[{k}]"),
                    "free cones are not allowed in K",
                )),
                Some(rank) if rank < last_rank => issues.push(ValidationIssue::new(
                    format!("cones[{k}]"),
                    "cones must be ordered zero, nonneg, box, soc",
                )),
                Some(rank) => last_rank = rank,
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(issues)
        }
    }

    /// Like [`validate`](Self::validate) but also rejects a `P` that is not PSD.
    pub fn validate_strict(&self) -> Result<()> {
        self.validate().map_err(Error::Validation)?;
        if !self.p_is_psd() {
            return Err(Error::Validation(vec![ValidationIssue::new(
                "P",
                "P is not positive semidefinite",
            )]));
        }
        Ok(())
    }

    /// Checks `P ⪰ 0` by factoring `P + δI` with a small relative shift.
    pub fn p_is_psd(&self) -> bool {
        let n = self.n();
        let scale = self.p.values().iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
        let shift = 1e-9 * scale;
        let mut triplets: Vec<_> = self.p.iter().collect();
        triplets.extend((0..n).map(|j| (j, j, shift)));
        let Ok(shifted) = SparseMatrix::from_triplets(n, n, &triplets) else {
            return false;
        };
        match LdlFactorization::new(&shifted, &Ordering::Amd) {
            Ok(f) => f.inertia().1 == 0,
            Err(_) => false,
        }
    }

    /// `out = P x`.
    pub fn p_mul(&self, x: &[f64], out: &mut [f64]) {
        self.p.sym_upper_mul_vec_into(x, out);
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut px = vec![0.0; self.n()];
        self.p_mul(x, &mut px);
        0.5 * dot(x, &px) + dot(&self.c, x)
    }

    pub fn to_lcp(&self) -> LcpView<'_> {
        let mut q = self.c.clone();
        q.extend_from_slice(&self.b);
        LcpView { problem: self, q }
    }
}

/// `LCP(M, q, C)` for a QCP; `M` is applied implicitly through `P` and `A`.
#[derive(Debug, Clone)]
pub struct LcpView<'a> {
    problem: &'a QcpProblem,
    q: Vec<f64>,
}

impl LcpView<'_> {
    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn n(&self) -> usize {
        self.problem.n()
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// `out = M z = (Px + Aᵀy, −Ax)`.
    pub fn apply_m(&self, z: &[f64], out: &mut [f64]) {
        let n = self.n();
        let (x, y) = z.split_at(n);
        let (ox, oy) = out.split_at_mut(n);
        self.problem.p_mul(x, ox);
        let mut aty = vec![0.0; n];
        self.problem.a.tmul_vec_into(y, &mut aty);
        for (o, v) in ox.iter_mut().zip(&aty) {
            *o += v;
        }
        self.problem.a.mul_vec_into(x, oy);
        oy.iter_mut().for_each(|v| *v = -*v);
    }

    /// Projection onto `C = ℝⁿ × K*`.
    pub fn project_c(&self, z: &mut [f64]) {
        self.problem.cones.project_dual_in_place(&mut z[self.n()..]);
    }

    /// Projection onto `C* = {0}ⁿ × K`.
    pub fn project_c_dual(&self, z: &mut [f64]) {
        let n = self.n();
        z[..n].fill(0.0);
        self.problem.cones.project_in_place(&mut z[n..]);
    }
}
