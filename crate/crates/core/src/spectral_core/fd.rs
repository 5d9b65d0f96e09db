use crate::error::{invalid, Result};
use crate::scalar::{cx, re, CMat, Cx, Real};

/// `L_h = tridiag(1, -2, 1)` on `n` interior unknowns (unscaled).
pub fn second_derivative_matrix<T: Real>(n: usize) -> Result<CMat<T>> {
    if n < 1 {
        return invalid("second_derivative_matrix: need N >= 1");
    }
    Ok(CMat::<T>::from_fn(n, n, |i, j| {
        if i == j {
            re(T::of(-2.0))
        } else if i + 1 == j || j + 1 == i {
            re(T::one())
        } else {
            re(T::zero())
        }
    }))
}

/// `-2 + 2 cos(k pi/(n+1))`, `k = 1..n`, the spectrum of `L_h` (descending).
pub fn second_derivative_eigenvalues<T: Real>(n: usize) -> Vec<T> {
    (1..=n).map(|k| T::of(-2.0) + T::of(2.0) * (T::pi() * T::of_usize(k) / T::of_usize(n + 1)).cos()).collect()
}

/// `-2i cos(k pi/(n+1))`, `k = 1..n`, the spectrum of `M_h`.
pub fn central_difference_eigenvalues<T: Real>(n: usize) -> Vec<Cx<T>> {
    (1..=n).map(|k| cx(T::zero(), T::of(-2.0) * (T::pi() * T::of_usize(k) / T::of_usize(n + 1)).cos())).collect()
}

/// `M_h = tridiag(-1, 0, 1)` on `n` interior unknowns (unscaled).
pub fn central_difference_matrix<T: Real>(n: usize) -> Result<CMat<T>> {
    if n < 1 {
        return invalid("central_difference_matrix: need N >= 1");
    }
    Ok(CMat::<T>::from_fn(n, n, |i, j| {
        if i + 1 == j {
            re(T::one())
        } else if j + 1 == i {
            re(-T::one())
        } else {
            re(T::zero())
        }
    }))
}

pub fn kron<T: Real>(a: &CMat<T>, b: &CMat<T>) -> CMat<T> {
    a.kronecker(b)
}

/// `sum_k I x .. x A_k x .. x I` over the given per-axis operators.
pub fn kron_sum<T: Real>(ops: &[CMat<T>]) -> CMat<T> {
    let dims: Vec<usize> = ops.iter().map(|m| m.nrows()).collect();
    let total: usize = dims.iter().product();
    let mut out = CMat::<T>::zeros(total, total);
    for (k, op) in ops.iter().enumerate() {
        let mut term = CMat::<T>::identity(1, 1);
        for (j, &d) in dims.iter().enumerate() {
            let f = if j == k { op.clone() } else { CMat::<T>::identity(d, d) };
            term = term.kronecker(&f);
        }
        out += term;
    }
    out
}
