use num_complex::Complex;

use crate::scalar::{cabs, CMat, Real};

/// Compressed-row complex matrix. Only what the propagators and the
/// sparsity estimates need.
#[derive(Clone, Debug)]
pub struct Csr<T: Real> {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<Complex<T>>,
}

impl<T: Real> Csr<T> {
    /// Keeps entries with `|a_ij| > drop`.
    pub fn from_dense(a: &CMat<T>, drop: T) -> Self {
        let (m, n) = a.shape();
        let mut indptr = Vec::with_capacity(m + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for i in 0..m {
            for j in 0..n {
                let z = a[(i, j)];
                if cabs(z) > drop {
                    indices.push(j);
                    values.push(z);
                }
            }
            indptr.push(indices.len());
        }
        Self { nrows: m, ncols: n, indptr, indices, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Largest number of nonzeros in any row.
    pub fn row_sparsity(&self) -> usize {
        (0..self.nrows).map(|i| self.indptr[i + 1] - self.indptr[i]).max().unwrap_or(0)
    }

    pub fn matvec(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for i in 0..self.nrows {
            let mut acc = Complex::new(T::zero(), T::zero());
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            y[i] = acc;
        }
    }

    pub fn to_dense(&self) -> CMat<T> {
        let mut a = CMat::<T>::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                a[(i, self.indices[k])] = self.values[k];
            }
        }
        a
    }
}
