//! The quasidefinite system `[[I + P, Aᵀ], [A, −I]]` solved at every
//! iteration, and its cached direct factorization.

use crate::error::{check_len, Error, Result};
use crate::linalg::ldl::{LdlFactorization, Ordering};
use crate::linalg::SparseMatrix;

/// Assembled KKT matrix together with the data it was built from.
#[derive(Debug, Clone)]
pub struct KktSystem {
    n: usize,
    m: usize,
    p: SparseMatrix,
    a: SparseMatrix,
    assembled: SparseMatrix,
}

impl KktSystem {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Upper triangle of `P`.
    pub fn p(&self) -> &SparseMatrix {
        &self.p
    }

    pub fn a(&self) -> &SparseMatrix {
        &self.a
    }

    /// Upper triangle of the symmetric `(n+m)×(n+m)` KKT matrix.
    pub fn assembled(&self) -> &SparseMatrix {
        &self.assembled
    }
}

/// Builds `[[I + P, Aᵀ], [A, −I]]` from the upper triangle of `P` and `A`.
pub fn assemble_kkt(p: &SparseMatrix, a: &SparseMatrix) -> Result<KktSystem> {
    let n = p.ncols();
    check_len("P rows", n, p.nrows())?;
    check_len("A columns", n, a.ncols())?;
    if !p.is_upper_triangular() {
        return Err(Error::Argument("P must be stored as an upper triangle".into()));
    }
    let m = a.nrows();
    let mut triplets = Vec::with_capacity(p.nnz() + a.nnz() + n + m);
    for (i, j, v) in p.iter() {
        triplets.push((i, j, v));
    }
    for j in 0..n {
        triplets.push((j, j, 1.0));
    }
    // Aᵀ occupies the (1,2) block: entry A[i, j] lands at (j, n + i).
    for (i, j, v) in a.iter() {
        triplets.push((j, n + i, v));
    }
    for i in 0..m {
        triplets.push((n + i, n + i, -1.0));
    }
    let assembled = SparseMatrix::from_triplets(n + m, n + m, &triplets)?;
    Ok(KktSystem {
        n,
        m,
        p: p.clone(),
        a: a.clone(),
        assembled,
    })
}

/// Cached LDLᵀ factors of a [`KktSystem`] with the quasidefinite signature verified.
#[derive(Debug, Clone)]
pub struct KktFactorization {
    n: usize,
    m: usize,
    ldl: LdlFactorization,
}

impl KktFactorization {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn ldl(&self) -> &LdlFactorization {
        &self.ldl
    }

    /// Overwrites `rhs` with the solution; `work` is scratch of length `n + m`.
    pub fn solve_in_place(&self, rhs: &mut [f64], work: &mut [f64]) {
        self.ldl.solve_in_place(rhs, work);
    }
}

pub fn factor_kkt(sys: &KktSystem, ordering: &Ordering) -> Result<KktFactorization> {
    let ldl = LdlFactorization::new(&sys.assembled, ordering)?;
    let (pos, neg) = ldl.inertia();
    if pos != sys.n || neg != sys.m {
        return Err(Error::Numerical(format!(
            "KKT factorization has inertia ({pos}, {neg}), expected ({}, {}); P is not positive semidefinite",
            sys.n, sys.m
        )));
    }
    Ok(KktFactorization {
        n: sys.n,
        m: sys.m,
        ldl,
    })
}

/// Solves the KKT system exactly using cached factors.
pub fn solve_kkt_direct(fac: &KktFactorization, rhs: &[f64]) -> Result<Vec<f64>> {
    check_len("KKT right-hand side", fac.n + fac.m, rhs.len())?;
    fac.ldl.solve(rhs)
}
