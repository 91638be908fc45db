//! Compressed sparse-column storage and the matrix-vector products used by
//! every solver iteration.

use crate::error::{check_len, Error, Result};

/// Real matrix in compressed sparse-column (CSC) format.
///
/// Row indices are strictly increasing within each column and every stored
/// value is finite. Explicit zeros are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    colptr: Vec<usize>,
    rowidx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from raw CSC arrays, checking every structural invariant.
    pub fn new(
        nrows: usize,
        ncols: usize,
        colptr: Vec<usize>,
        rowidx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if colptr.len() != ncols + 1 {
            return Err(Error::Format(format!(
                "colptr has length {}, expected ncols+1 = {}",
                colptr.len(),
                ncols + 1
            )));
        }
        if colptr[0] != 0 {
            return Err(Error::Format(format!("colptr[0] is {}, expected 0", colptr[0])));
        }
        if rowidx.len() != values.len() {
            return Err(Error::Format(format!(
                "rowidx has length {} but values has length {}",
                rowidx.len(),
                values.len()
            )));
        }
        if colptr[ncols] != values.len() {
            return Err(Error::Format(format!(
                "colptr ends at {} but there are {} stored entries",
                colptr[ncols],
                values.len()
            )));
        }
        for j in 0..ncols {
            if colptr[j] > colptr[j + 1] {
                return Err(Error::Format(format!("colptr decreases at column {j}")));
            }
            let rows = &rowidx[colptr[j]..colptr[j + 1]];
            for (k, &i) in rows.iter().enumerate() {
                if i >= nrows {
                    return Err(Error::Format(format!(
                        "row index {i} in column {j} out of range for {nrows} rows"
                    )));
                }
                if k > 0 && rows[k - 1] >= i {
                    return Err(Error::Format(format!(
                        "row indices in column {j} are not strictly increasing"
                    )));
                }
            }
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!("non-finite value at entry {k}")));
        }
        Ok(Self {
            nrows,
            ncols,
            colptr,
            rowidx,
            values,
        })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            colptr: vec![0; ncols + 1],
            rowidx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            colptr: (0..=n).collect(),
            rowidx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Assembles a matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut sorted = triplets.to_vec();
        for &(i, j, _) in &sorted {
            if i >= nrows || j >= ncols {
                return Err(Error::Format(format!(
                    "triplet ({i}, {j}) outside a {nrows}x{ncols} matrix"
                )));
            }
        }
        sorted.sort_by_key(|&(i, j, _)| (j, i));
        let mut colptr = vec![0; ncols + 1];
        let mut rowidx: Vec<usize> = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            rowidx.push(i);
            values.push(v);
            colptr[j + 1] += 1;
            last = Some((i, j));
        }
        for j in 0..ncols {
            colptr[j + 1] += colptr[j];
        }
        Self::new(nrows, ncols, colptr, rowidx, values)
    }

    /// Converts a row-major dense matrix, dropping exact zeros.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            check_len("dense row", ncols, row.len())?;
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(nrows, ncols, &triplets)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.iter() {
            dense[i][j] += v;
        }
        dense
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn colptr(&self) -> &[usize] {
        &self.colptr
    }

    pub fn rowidx(&self) -> &[usize] {
        &self.rowidx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates over stored entries as `(row, col, value)` in column-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols).flat_map(move |j| {
            (self.colptr[j]..self.colptr[j + 1]).map(move |k| (self.rowidx[k], j, self.values[k]))
        })
    }

    /// Stored entries of column `j` as `(row, value)`.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.colptr[j]..self.colptr[j + 1];
        self.rowidx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.nrows + 1];
        for &i in &self.rowidx {
            counts[i + 1] += 1;
        }
        for i in 0..self.nrows {
            counts[i + 1] += counts[i];
        }
        let colptr = counts.clone();
        let mut next = counts;
        let mut rowidx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for (i, j, v) in self.iter() {
            let k = next[i];
            rowidx[k] = j;
            values[k] = v;
            next[i] += 1;
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            colptr,
            rowidx,
            values,
        }
    }

    pub fn is_upper_triangular(&self) -> bool {
        self.iter().all(|(i, j, _)| i <= j)
    }

    /// Keeps entries with `row <= col`.
    pub fn upper_triangle(&self) -> Self {
        let triplets: Vec<_> = self.iter().filter(|&(i, j, _)| i <= j).collect();
        Self::from_triplets(self.nrows, self.ncols, &triplets)
            .expect("subset of a valid matrix is valid")
    }

    /// Diagonal entries (zero where not stored); the matrix must be square.
    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows.min(self.ncols)];
        for (i, j, v) in self.iter() {
            if i == j {
                d[i] += v;
            }
        }
        d
    }

    /// `out = A x`, unchecked dimensions.
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for k in self.colptr[j]..self.colptr[j + 1] {
                out[self.rowidx[k]] += self.values[k] * xj;
            }
        }
    }

    /// `out = Aᵀ x`, unchecked dimensions.
    pub fn tmul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.colptr[j]..self.colptr[j + 1] {
                acc += self.values[k] * x[self.rowidx[k]];
            }
            *o = acc;
        }
    }

    /// `out = S x` where `self` stores the upper triangle of a symmetric `S`.
    pub fn sym_upper_mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for j in 0..self.ncols {
            for k in self.colptr[j]..self.colptr[j + 1] {
                let i = self.rowidx[k];
                let v = self.values[k];
                out[i] += v * x[j];
                if i != j {
                    out[j] += v * x[i];
                }
            }
        }
    }
}

/// Returns `A x`, or `Aᵀ x` when `transpose` is set.
pub fn spmv(a: &SparseMatrix, x: &[f64], transpose: bool) -> Result<Vec<f64>> {
    if transpose {
        check_len("spmv (transposed) input", a.nrows, x.len())?;
        let mut out = vec![0.0; a.ncols];
        a.tmul_vec_into(x, &mut out);
        Ok(out)
    } else {
        check_len("spmv input", a.ncols, x.len())?;
        let mut out = vec![0.0; a.nrows];
        a.mul_vec_into(x, &mut out);
        Ok(out)
    }
}
