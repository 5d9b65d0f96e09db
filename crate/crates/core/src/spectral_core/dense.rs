use nalgebra as na;

use crate::error::{invalid, numerical, Result};
use crate::scalar::{cabs, is_real, re, CMat, CVec, Real};

pub fn identity<T: Real>(n: usize) -> CMat<T> {
    CMat::<T>::identity(n, n)
}

fn check_square<T: Real>(a: &CMat<T>, what: &str) -> Result<()> {
    if a.nrows() != a.ncols() {
        return invalid(format!("{what}: expected a square matrix, got {}x{}", a.nrows(), a.ncols()));
    }
    Ok(())
}

/// `A = A1 + i A2` with `A1 = (A + A^H)/2`, `A2 = (A - A^H)/(2i)`, both Hermitian.
pub fn hermitian_split<T: Real>(a: &CMat<T>) -> Result<(CMat<T>, CMat<T>)> {
    check_square(a, "hermitian_split")?;
    let ah = a.adjoint();
    let half = T::of(0.5);
    let a1 = (a + &ah).map(|z| z * half);
    // (A - A^H)/(2i) = -i (A - A^H)/2
    let a2 = (a - &ah).map(|z| num_complex::Complex::new(z.im * half, -z.re * half));
    Ok((a1, a2))
}

pub fn is_hermitian<T: Real>(a: &CMat<T>, tol: T) -> bool {
    if a.nrows() != a.ncols() {
        return false;
    }
    let n = a.nrows();
    for j in 0..n {
        for i in 0..=j {
            if cabs(a[(i, j)] - a[(j, i)].conj()) > tol {
                return false;
            }
        }
    }
    true
}

/// Eigenvalues (ascending) of the Hermitian part of `a`.
///
/// Falls back to a real symmetric solve when the input has no imaginary
/// part, which is roughly four times faster.
pub fn sym_eigvals<T: Real>(a: &CMat<T>) -> Result<Vec<T>> {
    check_square(a, "sym_eigvals")?;
    let half = T::of(0.5);
    let h = (a + a.adjoint()).map(|z| z * half);
    // zero rows are deflated; see sym_eigh
    let live: Vec<usize> =
        (0..h.nrows()).filter(|&i| h.row(i).iter().any(|z| z.re != T::zero() || z.im != T::zero())).collect();
    let sub = CMat::<T>::from_fn(live.len(), live.len(), |i, j| h[(live[i], live[j])]);
    let mut ev: Vec<T> = if live.is_empty() {
        vec![]
    } else if is_real(&sub) {
        sub.map(|z| z.re).symmetric_eigenvalues().iter().cloned().collect()
    } else {
        sub.symmetric_eigenvalues().iter().cloned().collect()
    };
    ev.extend(std::iter::repeat(T::zero()).take(h.nrows() - live.len()));
    if ev.iter().any(|x| !x.is_finite()) {
        return numerical("sym_eigvals: non-finite eigenvalue");
    }
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(ev)
}

/// `(lambda_min, lambda_max)` of the Hermitian part.
pub fn sym_extreme_eigs<T: Real>(a: &CMat<T>) -> Result<(T, T)> {
    let ev = sym_eigvals(a)?;
    if ev.is_empty() {
        return invalid("sym_extreme_eigs: empty matrix");
    }
    Ok((ev[0], ev[ev.len() - 1]))
}

/// Full eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Exactly zero rows are split off first (each carries eigenvalue 0 and a
/// unit vector): nalgebra's tridiagonalisation returns NaN on them.
pub fn sym_eigh<T: Real>(h: &CMat<T>) -> Result<(Vec<T>, CMat<T>)> {
    check_square(h, "sym_eigh")?;
    let half = T::of(0.5);
    let hs = (h + h.adjoint()).map(|z| z * half);
    if hs.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return numerical("sym_eigh: non-finite matrix entry");
    }
    let n = hs.nrows();
    let zero = |i: usize| hs.row(i).iter().all(|z| z.re == T::zero() && z.im == T::zero());
    let (null, live): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| zero(i));
    let sub = CMat::<T>::from_fn(live.len(), live.len(), |i, j| hs[(live[i], live[j])]);
    let (mut evals, sub_vecs): (Vec<T>, CMat<T>) = if live.is_empty() {
        (vec![], CMat::<T>::zeros(0, 0))
    } else if is_real(&sub) {
        let e = na::SymmetricEigen::new(sub.map(|z| z.re));
        (e.eigenvalues.iter().cloned().collect(), e.eigenvectors.map(re))
    } else {
        let e = na::SymmetricEigen::new(sub);
        (e.eigenvalues.iter().cloned().collect(), e.eigenvectors)
    };
    if evals.iter().any(|x| !x.is_finite()) {
        return numerical("sym_eigh: non-finite eigenvalue");
    }
    let mut evecs = CMat::<T>::zeros(n, n);
    for c in 0..live.len() {
        for (r, &i) in live.iter().enumerate() {
            evecs[(i, c)] = sub_vecs[(r, c)];
        }
    }
    for (c, &i) in null.iter().enumerate() {
        evecs[(i, live.len() + c)] = re(T::one());
        evals.push(T::zero());
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| evals[i].partial_cmp(&evals[j]).unwrap());
    let vals: Vec<T> = idx.iter().map(|&i| evals[i]).collect();
    let mut v = CMat::<T>::zeros(n, n);
    for (k, &i) in idx.iter().enumerate() {
        v.set_column(k, &evecs.column(i));
    }
    Ok((vals, v))
}

/// Logarithmic 2-norm `mu(A) = lambda_max((A + A^H)/2)`.
pub fn log_norm<T: Real>(a: &CMat<T>) -> Result<T> {
    Ok(sym_extreme_eigs(a)?.1)
}

/// Singular values in descending order.
pub fn singular_values<T: Real>(a: &CMat<T>) -> Vec<T> {
    if a.is_empty() {
        return vec![];
    }
    let mut s: Vec<T> = if is_real(a) {
        a.map(|z| z.re).singular_values().iter().cloned().collect()
    } else {
        a.singular_values().iter().cloned().collect()
    };
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s
}

pub fn spectral_norm<T: Real>(a: &CMat<T>) -> T {
    singular_values(a).first().cloned().unwrap_or_else(T::zero)
}

pub fn one_norm<T: Real>(a: &CMat<T>) -> T {
    let mut best = T::zero();
    for j in 0..a.ncols() {
        let s = a.column(j).iter().fold(T::zero(), |acc, z| acc + cabs(*z));
        if s > best {
            best = s;
        }
    }
    best
}

/// Solve `A x = b` by partial-pivot LU; fails on (numerical) singularity.
pub fn lu_solve<T: Real>(a: &CMat<T>, b: &CVec<T>) -> Result<CVec<T>> {
    check_square(a, "lu_solve")?;
    let lu = a.clone().lu();
    match lu.solve(b) {
        Some(x) if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => Ok(x),
        _ => numerical("lu_solve: singular matrix"),
    }
}

pub fn lu_solve_mat<T: Real>(a: &CMat<T>, b: &CMat<T>) -> Result<CMat<T>> {
    check_square(a, "lu_solve_mat")?;
    let lu = a.clone().lu();
    match lu.solve(b) {
        Some(x) if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => Ok(x),
        _ => numerical("lu_solve_mat: singular matrix"),
    }
}
