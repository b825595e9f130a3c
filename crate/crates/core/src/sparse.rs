//! Compressed-row matrices and a thin wrapper over faer's sparse factorizations.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::scalar::Real;

/// Row-compressed sparse matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr<T> {
    pub nrows: usize,
    pub ncols: usize,
    pub ptr: Vec<usize>,
    pub idx: Vec<usize>,
    pub val: Vec<T>,
}

impl<T: Real> Csr<T> {
    /// Builds from per-row (column, value) lists; duplicate columns are summed
    /// and each row is sorted by column.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, T)>>) -> Self {
        let nrows = rows.len();
        let mut ptr = Vec::with_capacity(nrows + 1);
        let mut idx = Vec::new();
        let mut val = Vec::new();
        ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last = usize::MAX;
            for (j, v) in row {
                if j == last {
                    let k = val.len() - 1;
                    val[k] += v;
                } else {
                    idx.push(j);
                    val.push(v);
                    last = j;
                }
            }
            ptr.push(idx.len());
        }
        Csr {
            nrows,
            ncols,
            ptr,
            idx,
            val,
        }
    }

    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let (a, b) = (self.ptr[i], self.ptr[i + 1]);
        (&self.idx[a..b], &self.val[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (ix, v) = self.row(i);
        ix.iter()
            .position(|&c| c == j)
            .map(|p| v[p])
            .unwrap_or_else(T::zero)
    }

    pub fn nnz(&self) -> usize {
        self.idx.len()
    }

    /// y = M x.
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.nrows)
            .map(|i| {
                let (ix, v) = self.row(i);
                ix.iter()
                    .zip(v)
                    .fold(T::zero(), |s, (&j, &a)| s + a * x[j])
            })
            .collect()
    }

    /// y = Mᵀ x.
    pub fn mul_transpose_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.ncols];
        for (i, &xi) in x.iter().enumerate().take(self.nrows) {
            let (ix, v) = self.row(i);
            for (&j, &a) in ix.iter().zip(v) {
                y[j] += a * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let mut rows = vec![Vec::new(); self.ncols];
        for i in 0..self.nrows {
            let (ix, v) = self.row(i);
            for (&j, &a) in ix.iter().zip(v) {
                rows[j].push((i, a));
            }
        }
        Csr::from_rows(self.nrows, rows)
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut out = self.clone();
        out.val.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Max |M - Mᵀ| entry for square matrices.
    pub fn asymmetry(&self) -> T {
        let t = self.transpose();
        let mut m = T::zero();
        for i in 0..self.nrows {
            let (ix, v) = self.row(i);
            for (&j, &a) in ix.iter().zip(v) {
                m = m.max((a - t.get(i, j)).abs());
            }
            let (ix, v) = t.row(i);
            for (&j, &a) in ix.iter().zip(v) {
                m = m.max((a - self.get(i, j)).abs());
            }
        }
        m
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.ncols]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            let (ix, v) = self.row(i);
            for (&j, &a) in ix.iter().zip(v) {
                row[j] = a;
            }
        }
        d
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, T>, FactorError> {
        let trip: Vec<Triplet<usize, usize, T>> = (0..self.nrows)
            .flat_map(|i| {
                let (ix, v) = self.row(i);
                ix.iter()
                    .zip(v)
                    .map(move |(&j, &a)| Triplet::new(i, j, a))
                    .collect::<Vec<_>>()
            })
            .collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trip)
            .map_err(|e| FactorError(format!("{e:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("factorization failed: {0}")]
pub struct FactorError(pub String);

/// Sparse direct factorization: Cholesky for symmetric matrices, LU otherwise.
#[derive(Debug)]
pub enum Factorization<T: Real> {
    Cholesky(Llt<usize, T>),
    Lu(Box<Lu<usize, T>>),
}

impl<T: Real> Factorization<T> {
    /// Factors `m`. Symmetric input is tried with Cholesky first and falls
    /// back to LU when it is not positive definite.
    pub fn new(m: &Csr<T>, symmetric: bool) -> Result<Self, FactorError> {
        if m.nrows != m.ncols {
            return Err(FactorError("matrix is not square".into()));
        }
        let a = m.to_faer()?;
        if symmetric {
            if let Ok(llt) = a.sp_cholesky(faer::Side::Lower) {
                return Ok(Factorization::Cholesky(llt));
            }
        }
        a.sp_lu()
            .map(|f| Factorization::Lu(Box::new(f)))
            .map_err(|e| FactorError(format!("{e:?}")))
    }

    pub fn is_cholesky(&self) -> bool {
        matches!(self, Factorization::Cholesky(_))
    }

    /// Solves M X = B in place; `cols` holds the right-hand sides.
    pub fn solve_many(&self, cols: &mut [Vec<T>]) {
        self.solve_impl(cols, false)
    }

    /// Solves Mᵀ X = B in place.
    pub fn solve_transpose_many(&self, cols: &mut [Vec<T>]) {
        self.solve_impl(cols, true)
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut c = vec![b.to_vec()];
        self.solve_many(&mut c);
        c.pop().unwrap_or_default()
    }

    pub fn solve_transpose(&self, b: &[T]) -> Vec<T> {
        let mut c = vec![b.to_vec()];
        self.solve_transpose_many(&mut c);
        c.pop().unwrap_or_default()
    }

    fn solve_impl(&self, cols: &mut [Vec<T>], transpose: bool) {
        if cols.is_empty() {
            return;
        }
        let n = cols[0].len();
        let mut rhs = Mat::<T>::from_fn(n, cols.len(), |i, j| cols[j][i]);
        match (self, transpose) {
            (Factorization::Cholesky(f), _) => f.solve_in_place(rhs.as_mut()),
            (Factorization::Lu(f), false) => f.solve_in_place(rhs.as_mut()),
            (Factorization::Lu(f), true) => f.solve_transpose_in_place(rhs.as_mut()),
        }
        for (j, col) in cols.iter_mut().enumerate() {
            for (i, v) in col.iter_mut().enumerate() {
                *v = rhs[(i, j)];
            }
        }
    }
}
