//! Sparse LDLᵀ factorization of symmetric matrices stored as an upper
//! triangle, with an optional fill-reducing symmetric permutation.
//!
//! The symbolic phase builds the elimination tree and column counts of `L`;
//! the numeric phase is an up-looking factorization that computes one row of
//! `L` per step by a sparse triangular solve along the tree. No pivoting is
//! performed, so it is only safe for matrices whose LDLᵀ exists under any
//! symmetric permutation (quasidefinite or positive definite ones).

use crate::error::{check_len, Error, Result};
use crate::linalg::SparseMatrix;

const NONE: usize = usize::MAX;

/// Symmetric permutation applied before factoring.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Ordering {
    /// Approximate minimum degree.
    #[default]
    Amd,
    /// Identity permutation.
    Natural,
    /// Explicit permutation: position `k` holds original index `perm[k]`.
    Given(Vec<usize>),
}

/// `P K Pᵀ = L D Lᵀ` with unit lower-triangular `L`.
#[derive(Debug, Clone)]
pub struct LdlFactorization {
    perm: Vec<usize>,
    pinv: Vec<usize>,
    /// Strictly lower part of `L`; the unit diagonal is implicit.
    l: SparseMatrix,
    d: Vec<f64>,
    dinv: Vec<f64>,
}

impl LdlFactorization {
    /// Factors the symmetric matrix whose upper triangle is `upper`.
    pub fn new(upper: &SparseMatrix, ordering: &Ordering) -> Result<Self> {
        let n = upper.nrows();
        check_len("LDL input (square)", n, upper.ncols())?;
        if !upper.is_upper_triangular() {
            return Err(Error::Argument(
                "LDL input must be stored as an upper triangle".into(),
            ));
        }
        let perm = match ordering {
            Ordering::Natural => (0..n).collect(),
            Ordering::Given(p) => {
                check_len("permutation", n, p.len())?;
                let mut seen = vec![false; n];
                for &k in p {
                    if k >= n || seen[k] {
                        return Err(Error::Argument("not a permutation".into()));
                    }
                    seen[k] = true;
                }
                p.clone()
            }
            Ordering::Amd => amd_order(upper)?,
        };
        let mut pinv = vec![0; n];
        for (k, &i) in perm.iter().enumerate() {
            pinv[i] = k;
        }
        let permuted = permute_upper(upper, &pinv);
        let (etree, lnz) = elimination_tree(&permuted);
        let (l, d) = numeric_factor(&permuted, &etree, &lnz)?;
        let dinv = d.iter().map(|v| 1.0 / v).collect();
        Ok(Self {
            perm,
            pinv,
            l,
            d,
            dinv,
        })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn inverse_permutation(&self) -> &[usize] {
        &self.pinv
    }

    /// Strictly lower-triangular part of `L` (unit diagonal implied).
    pub fn l(&self) -> &SparseMatrix {
        &self.l
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    /// Number of positive and negative pivots.
    pub fn inertia(&self) -> (usize, usize) {
        let pos = self.d.iter().filter(|&&v| v > 0.0).count();
        (pos, self.d.len() - pos)
    }

    /// Overwrites `b` with `K⁻¹ b`; `work` must have the same length.
    pub fn solve_in_place(&self, b: &mut [f64], work: &mut [f64]) {
        for (w, &p) in work.iter_mut().zip(&self.perm) {
            *w = b[p];
        }
        let (colptr, rowidx, lx) = (self.l.colptr(), self.l.rowidx(), self.l.values());
        for j in 0..work.len() {
            let wj = work[j];
            for k in colptr[j]..colptr[j + 1] {
                work[rowidx[k]] -= lx[k] * wj;
            }
        }
        for (w, di) in work.iter_mut().zip(&self.dinv) {
            *w *= di;
        }
        for j in (0..work.len()).rev() {
            let mut acc = work[j];
            for k in colptr[j]..colptr[j + 1] {
                acc -= lx[k] * work[rowidx[k]];
            }
            work[j] = acc;
        }
        for (w, &p) in work.iter().zip(&self.perm) {
            b[p] = *w;
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        check_len("LDL solve right-hand side", self.dim(), rhs.len())?;
        let mut x = rhs.to_vec();
        let mut work = vec![0.0; rhs.len()];
        self.solve_in_place(&mut x, &mut work);
        Ok(x)
    }
}

fn amd_order(upper: &SparseMatrix) -> Result<Vec<usize>> {
    let n = upper.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let control = amd::Control::default();
    let (perm, _, _) = amd::order(n, upper.colptr(), upper.rowidx(), &control)
        .map_err(|status| Error::Numerical(format!("AMD ordering failed: {status:?}")))?;
    Ok(perm)
}

/// Upper triangle of `P K Pᵀ`, where `pinv[i]` is the new position of index `i`.
fn permute_upper(upper: &SparseMatrix, pinv: &[usize]) -> SparseMatrix {
    let triplets: Vec<_> = upper
        .iter()
        .map(|(i, j, v)| {
            let (pi, pj) = (pinv[i], pinv[j]);
            (pi.min(pj), pi.max(pj), v)
        })
        .collect();
    SparseMatrix::from_triplets(upper.nrows(), upper.ncols(), &triplets)
        .expect("permutation of a valid matrix is valid")
}

/// Elimination tree and per-column nonzero counts of `L`.
fn elimination_tree(upper: &SparseMatrix) -> (Vec<usize>, Vec<usize>) {
    let n = upper.ncols();
    let mut etree = vec![NONE; n];
    let mut lnz = vec![0usize; n];
    let mut mark = vec![NONE; n];
    for j in 0..n {
        mark[j] = j;
        for (row, _) in upper.column(j) {
            let mut i = row;
            while i != j && mark[i] != j {
                if etree[i] == NONE {
                    etree[i] = j;
                }
                lnz[i] += 1;
                mark[i] = j;
                i = etree[i];
            }
        }
    }
    (etree, lnz)
}

fn numeric_factor(
    upper: &SparseMatrix,
    etree: &[usize],
    lnz: &[usize],
) -> Result<(SparseMatrix, Vec<f64>)> {
    let n = upper.ncols();
    let mut lp = vec![0usize; n + 1];
    for i in 0..n {
        lp[i + 1] = lp[i] + lnz[i];
    }
    let nnz = lp[n];
    let mut li = vec![0usize; nnz];
    let mut lx = vec![0.0; nnz];
    let mut d = vec![0.0; n];
    let mut dinv = vec![0.0; n];

    let mut next_in_col = lp[..n].to_vec();
    let mut y_vals = vec![0.0; n];
    let mut y_marked = vec![false; n];
    let mut y_idx = vec![0usize; n];
    let mut stack = vec![0usize; n];

    for k in 0..n {
        // Pattern of row k of L: union of etree paths from the nonzeros of column k.
        let mut nnz_y = 0;
        d[k] = 0.0;
        for (row, val) in upper.column(k) {
            if row == k {
                d[k] = val;
                continue;
            }
            y_vals[row] = val;
            if !y_marked[row] {
                y_marked[row] = true;
                stack[0] = row;
                let mut depth = 1;
                let mut next = etree[row];
                while next != NONE && next < k {
                    if y_marked[next] {
                        break;
                    }
                    y_marked[next] = true;
                    stack[depth] = next;
                    depth += 1;
                    next = etree[next];
                }
                while depth > 0 {
                    depth -= 1;
                    y_idx[nnz_y] = stack[depth];
                    nnz_y += 1;
                }
            }
        }

        for &col in y_idx[..nnz_y].iter().rev() {
            let slot = next_in_col[col];
            let y_col = y_vals[col];
            for p in lp[col]..slot {
                y_vals[li[p]] -= lx[p] * y_col;
            }
            li[slot] = k;
            lx[slot] = y_col * dinv[col];
            d[k] -= y_col * lx[slot];
            next_in_col[col] += 1;
            y_vals[col] = 0.0;
            y_marked[col] = false;
        }

        if d[k] == 0.0 || !d[k].is_finite() {
            return Err(Error::ZeroPivot { column: k });
        }
        dinv[k] = 1.0 / d[k];
    }

    // Columns were filled in increasing row order, so the CSC is already sorted.
    let l = SparseMatrix::new(n, n, lp, li, lx)?;
    Ok((l, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_input_gives_identity_l() {
        let k = SparseMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        let f = LdlFactorization::new(&k, &Ordering::Natural).unwrap();
        assert_eq!(f.l().nnz(), 0);
        assert_eq!(f.d(), &[1.0, -1.0]);
        assert_eq!(f.inertia(), (1, 1));
    }

    #[test]
    fn two_by_two_hand_elimination() {
        // [[3, 3], [3, -1]] = [[1,0],[1,1]] diag(3,-4) [[1,1],[0,1]]
        let k = SparseMatrix::from_dense(&[vec![3.0, 3.0], vec![0.0, -1.0]]).unwrap();
        let f = LdlFactorization::new(&k, &Ordering::Natural).unwrap();
        assert_eq!(f.d(), &[3.0, -4.0]);
        assert_eq!(f.l().to_dense(), vec![vec![0.0, 0.0], vec![1.0, 0.0]]);
        let x = f.solve(&[6.0, 2.0]).unwrap();
        // dense solve: 3a + 3b = 6, 3a - b = 2 -> a = 1, b = 1
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_pivot_is_reported() {
        let k = SparseMatrix::from_dense(&[vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            LdlFactorization::new(&k, &Ordering::Natural),
            Err(Error::ZeroPivot { column: 0 })
        ));
    }

    #[test]
    fn rejects_lower_storage_and_bad_permutations() {
        let k = SparseMatrix::from_dense(&[vec![2.0, 0.0], vec![1.0, 2.0]]).unwrap();
        assert!(LdlFactorization::new(&k, &Ordering::Natural).is_err());
        let k = SparseMatrix::identity(3);
        assert!(LdlFactorization::new(&k, &Ordering::Given(vec![0, 0, 1])).is_err());
        assert!(LdlFactorization::new(&k, &Ordering::Given(vec![0, 1])).is_err());
    }

    #[test]
    fn amd_handles_empty_and_tridiagonal() {
        let empty = SparseMatrix::zeros(0, 0);
        let f = LdlFactorization::new(&empty, &Ordering::Amd).unwrap();
        assert_eq!(f.dim(), 0);

        let n = 6;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        let k = SparseMatrix::from_triplets(n, n, &t).unwrap();
        let f = LdlFactorization::new(&k, &Ordering::Amd).unwrap();
        let b: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let x = f.solve(&b).unwrap();
        let mut kx = vec![0.0; n];
        k.sym_upper_mul_vec_into(&x, &mut kx);
        for (u, v) in kx.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
    }
}
