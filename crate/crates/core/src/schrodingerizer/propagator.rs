use num_complex::Complex;

use super::bessel::bessel_j_sequence;
use crate::error::{invalid, numerical, Result};
use crate::scalar::{cabs, CMat, Real};
use crate::spectral_core::sym_eigh;

/// Truncation threshold for the Chebyshev expansion of `exp(-i H t)`.
pub const CHEBYSHEV_TOL: f64 = 1e-16;

/// Mode dimension at or below which `Auto` uses dense eigendecompositions.
const EIGEN_AUTO_CAP: usize = 48;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PropagatorKind {
    Auto,
    /// Dense eigendecomposition of every `H_l`.
    Eigen,
    /// Sparse Chebyshev expansion with Gershgorin spectral bounds.
    Chebyshev,
}

/// `A1`, `A2` on a shared sparsity pattern, so `H_l = mu_l A1 - A2` can be
/// formed for any mode in `O(nnz)`.
#[derive(Clone, Debug)]
pub struct HermitianPair<T: Real> {
    pub n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    a1: Vec<Complex<T>>,
    a2: Vec<Complex<T>>,
    /// `A` itself is real: `A1` real symmetric and `A2` purely imaginary.
    pub real_generator: bool,
    split: Option<RealSplit<T>>,
}

/// Real form of a real generator: `H_l x = mu A1 x - i S x` with
/// `A2 = i S`. Well-filled diagonals are stored densely so the inner loops
/// run over contiguous slices; the scattered rest stays in coordinate form.
#[derive(Clone, Debug)]
struct RealSplit<T> {
    diags: Vec<Diagonal<T>>,
    /// `(row, col, a1, s)`.
    rest: Vec<(usize, usize, T, T)>,
}

#[derive(Clone, Debug)]
struct Diagonal<T> {
    off: isize,
    /// First row covered.
    lo: usize,
    a1: Vec<T>,
    /// `None` when `S` vanishes on the whole diagonal.
    s: Option<Vec<T>>,
}

impl<T: Real> RealSplit<T> {
    fn new(n: usize, indptr: &[usize], indices: &[usize], a1: &[Complex<T>], a2: &[Complex<T>]) -> Self {
        let mut counts = std::collections::BTreeMap::<isize, usize>::new();
        for i in 0..n {
            for &j in &indices[indptr[i]..indptr[i + 1]] {
                *counts.entry(j as isize - i as isize).or_default() += 1;
            }
        }
        let dense_min = (n / 8).max(4);
        let mut diags: Vec<Diagonal<T>> = vec![];
        let mut slot = std::collections::BTreeMap::<isize, usize>::new();
        for (&off, &cnt) in &counts {
            if cnt >= dense_min {
                let lo = if off < 0 { (-off) as usize } else { 0 };
                let hi = if off > 0 { n - off as usize } else { n };
                slot.insert(off, diags.len());
                diags.push(Diagonal { off, lo, a1: vec![T::zero(); hi - lo], s: None });
            }
        }
        let mut rest = vec![];
        for i in 0..n {
            for k in indptr[i]..indptr[i + 1] {
                let j = indices[k];
                let off = j as isize - i as isize;
                let (x, y) = (a1[k].re, a2[k].im);
                match slot.get(&off) {
                    Some(&d) => {
                        let dg = &mut diags[d];
                        let len = dg.a1.len();
                        dg.a1[i - dg.lo] = x;
                        if y != T::zero() {
                            dg.s.get_or_insert_with(|| vec![T::zero(); len])[i - dg.lo] = y;
                        }
                    }
                    None => rest.push((i, j, x, y)),
                }
            }
        }
        RealSplit { diags, rest }
    }

    /// `(pr, pi) <- alpha (H_l - c) (xr, xi) - (pr, pi)`.
    #[allow(clippy::too_many_arguments)]
    fn step(&self, mu: T, c: T, alpha: T, xr: &[T], xi: &[T], pr: &mut [T], pi: &mut [T], wr: &mut [T], wi: &mut [T]) {
        wr.fill(T::zero());
        wi.fill(T::zero());
        for d in &self.diags {
            let len = d.a1.len();
            let j0 = (d.lo as isize + d.off) as usize;
            let (xs, ys) = (&xr[j0..j0 + len], &xi[j0..j0 + len]);
            let (or, oi) = (&mut wr[d.lo..d.lo + len], &mut wi[d.lo..d.lo + len]);
            for k in 0..len {
                or[k] += d.a1[k] * xs[k];
                oi[k] += d.a1[k] * ys[k];
            }
        }
        for v in wr.iter_mut().chain(wi.iter_mut()) {
            *v *= mu;
        }
        for d in &self.diags {
            if let Some(sv) = &d.s {
                let len = sv.len();
                let j0 = (d.lo as isize + d.off) as usize;
                let (xs, ys) = (&xr[j0..j0 + len], &xi[j0..j0 + len]);
                let (or, oi) = (&mut wr[d.lo..d.lo + len], &mut wi[d.lo..d.lo + len]);
                for k in 0..len {
                    or[k] += sv[k] * ys[k];
                    oi[k] -= sv[k] * xs[k];
                }
            }
        }
        for &(i, j, a, s) in &self.rest {
            let a = a * mu;
            wr[i] += a * xr[j] + s * xi[j];
            wi[i] += a * xi[j] - s * xr[j];
        }
        for i in 0..pr.len() {
            pr[i] = alpha * (wr[i] - c * xr[i]) - pr[i];
            pi[i] = alpha * (wi[i] - c * xi[i]) - pi[i];
        }
    }
}

impl<T: Real> HermitianPair<T> {
    pub fn from_dense(a1: &CMat<T>, a2: &CMat<T>) -> Result<Self> {
        let n = a1.nrows();
        if a1.shape() != (n, n) || a2.shape() != (n, n) {
            return invalid("HermitianPair: A1 and A2 must be square and of equal size");
        }
        let mut indptr = vec![0];
        let (mut indices, mut v1, mut v2) = (vec![], vec![], vec![]);
        let mut real_generator = true;
        for i in 0..n {
            for j in 0..n {
                let (x, y) = (a1[(i, j)], a2[(i, j)]);
                if cabs(x) > T::zero() || cabs(y) > T::zero() {
                    indices.push(j);
                    v1.push(x);
                    v2.push(y);
                    if x.im != T::zero() || y.re != T::zero() {
                        real_generator = false;
                    }
                }
            }
            indptr.push(indices.len());
        }
        let split = if real_generator { Some(RealSplit::new(n, &indptr, &indices, &v1, &v2)) } else { None };
        Ok(Self { n, indptr, indices, a1: v1, a2: v2, real_generator, split })
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row_sparsity(&self) -> usize {
        (0..self.n).map(|i| self.indptr[i + 1] - self.indptr[i]).max().unwrap_or(0)
    }

    fn mode_values(&self, mu: T) -> Vec<Complex<T>> {
        self.a1.iter().zip(&self.a2).map(|(x, y)| x * mu - y).collect()
    }

    /// Dense `H_l = mu A1 - A2`.
    pub fn dense_mode(&self, mu: T) -> CMat<T> {
        let vals = self.mode_values(mu);
        let mut h = CMat::<T>::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in self.indptr[i]..self.indptr[i + 1] {
                h[(i, self.indices[k])] = vals[k];
            }
        }
        h
    }

    /// Gershgorin enclosure of the (real) spectrum of `H_l`.
    fn gershgorin(&self, vals: &[Complex<T>]) -> (T, T) {
        let mut lo = T::max_value().unwrap();
        let mut hi = -T::max_value().unwrap();
        for i in 0..self.n {
            let mut c = T::zero();
            let mut r = T::zero();
            for k in self.indptr[i]..self.indptr[i + 1] {
                if self.indices[k] == i {
                    c = vals[k].re;
                } else {
                    r += cabs(vals[k]);
                }
            }
            lo = lo.min(c - r);
            hi = hi.max(c + r);
        }
        (lo, hi)
    }

    /// `exp(-i H_l t) v`.
    pub fn propagate(&self, mu: T, t: T, v: &[Complex<T>], kind: PropagatorKind) -> Result<Vec<Complex<T>>> {
        if v.len() != self.n {
            return invalid("propagate: vector length does not match operator");
        }
        let kind = match kind {
            PropagatorKind::Auto if self.n <= EIGEN_AUTO_CAP => PropagatorKind::Eigen,
            PropagatorKind::Auto => PropagatorKind::Chebyshev,
            k => k,
        };
        match kind {
            PropagatorKind::Eigen => self.propagate_eigen(mu, t, v),
            _ => self.propagate_chebyshev(mu, t, v),
        }
    }

    fn propagate_eigen(&self, mu: T, t: T, v: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let (vals, q) = sym_eigh(&self.dense_mode(mu))?;
        let x = nalgebra::DVector::from_column_slice(v);
        let mut c = q.adjoint() * x;
        for (k, lam) in vals.iter().enumerate() {
            let ph = -(*lam) * t;
            c[k] *= Complex::new(ph.cos(), ph.sin());
        }
        Ok((q * c).as_slice().to_vec())
    }

    fn chebyshev_setup(&self, vals: &[Complex<T>], t: T) -> Result<ChebSetup<T>> {
        let (lo, hi) = self.gershgorin(vals);
        let c = (lo + hi) * T::of(0.5);
        let mut rho = (hi - lo) * T::of(0.5);
        rho = rho + rho * T::of(1e-12);
        if rho <= T::zero() {
            rho = T::one();
        }
        let theta = (rho * t).to_f64();
        let sign_neg = theta < 0.0;
        let x = theta.abs();
        let kcap = (x + 12.0 * x.cbrt() + 60.0).ceil() as usize;
        let jk = bessel_j_sequence(x, kcap);
        let mut kmax = 0;
        for (k, j) in jk.iter().enumerate() {
            if j.abs() > CHEBYSHEV_TOL * 1e-2 {
                kmax = k;
            }
        }
        if kmax + 1 >= jk.len() && x > 0.0 {
            return numerical("propagate: Chebyshev series did not reach tolerance");
        }
        // coefficient of T_k: 2 (-i)^k J_k, or 2 i^k J_k for negative time
        let coefs = (0..=kmax)
            .map(|k| {
                let m = T::of(if k == 0 { jk[0] } else { 2.0 * jk[k] });
                let unit = match (k % 4, sign_neg) {
                    (0, _) => Complex::new(T::one(), T::zero()),
                    (2, _) => Complex::new(-T::one(), T::zero()),
                    (1, false) | (3, true) => Complex::new(T::zero(), -T::one()),
                    _ => Complex::new(T::zero(), T::one()),
                };
                unit * m
            })
            .collect();
        Ok(ChebSetup { c, rho, coefs })
    }

    fn propagate_chebyshev(&self, mu: T, t: T, v: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let vals = self.mode_values(mu);
        let setup = self.chebyshev_setup(&vals, t)?;
        let mut acc = match &self.split {
            Some(split) => self.chebyshev_real(split, mu, &setup, v),
            None => self.chebyshev_complex(&vals, &setup, v),
        };
        let ph = -setup.c * t;
        let e = Complex::new(ph.cos(), ph.sin());
        for z in acc.iter_mut() {
            *z *= e;
        }
        if acc.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return numerical("propagate: non-finite Chebyshev result");
        }
        Ok(acc)
    }

    fn chebyshev_real(&self, split: &RealSplit<T>, mu: T, st: &ChebSetup<T>, v: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.n;
        let inv_rho = T::one() / st.rho;
        let mut pr: Vec<T> = v.iter().map(|z| z.re).collect();
        let mut pi: Vec<T> = v.iter().map(|z| z.im).collect();
        let c0 = st.coefs[0];
        let mut ar: Vec<T> = v.iter().map(|z| (z * c0).re).collect();
        let mut ai: Vec<T> = v.iter().map(|z| (z * c0).im).collect();
        if st.coefs.len() > 1 {
            let mut cr = vec![T::zero(); n];
            let mut ci = vec![T::zero(); n];
            let (mut wr, mut wi) = (vec![T::zero(); n], vec![T::zero(); n]);
            split.step(mu, st.c, inv_rho, &pr, &pi, &mut cr, &mut ci, &mut wr, &mut wi);
            accumulate(&mut ar, &mut ai, &cr, &ci, st.coefs[1]);
            let two = inv_rho + inv_rho;
            for ck in &st.coefs[2..] {
                // prev <- 2 Hn cur - prev, then it becomes the newest term
                split.step(mu, st.c, two, &cr, &ci, &mut pr, &mut pi, &mut wr, &mut wi);
                accumulate(&mut ar, &mut ai, &pr, &pi, *ck);
                std::mem::swap(&mut pr, &mut cr);
                std::mem::swap(&mut pi, &mut ci);
            }
        }
        ar.into_iter().zip(ai).map(|(r, i)| Complex::new(r, i)).collect()
    }

    fn chebyshev_complex(&self, vals: &[Complex<T>], st: &ChebSetup<T>, v: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.n;
        let c = st.c;
        let inv_rho = T::one() / st.rho;
        let two_inv_rho = inv_rho + inv_rho;
        let mut prev: Vec<Complex<T>> = v.to_vec();
        let c0 = st.coefs[0];
        let mut acc: Vec<Complex<T>> = v.iter().map(|z| z * c0).collect();
        if st.coefs.len() > 1 {
            let mut cur = vec![Complex::new(T::zero(), T::zero()); n];
            self.shifted_apply(vals, c, inv_rho, &prev, &mut cur);
            let c1 = st.coefs[1];
            for i in 0..n {
                acc[i] += cur[i] * c1;
            }
            let mut next = vec![Complex::new(T::zero(), T::zero()); n];
            for ck in &st.coefs[2..] {
                // next = 2 Hn cur - prev
                for i in 0..n {
                    let mut s = Complex::new(T::zero(), T::zero());
                    for p in self.indptr[i]..self.indptr[i + 1] {
                        s += vals[p] * cur[self.indices[p]];
                    }
                    next[i] = (s - cur[i] * c) * two_inv_rho - prev[i];
                }
                for i in 0..n {
                    acc[i] += next[i] * *ck;
                }
                std::mem::swap(&mut prev, &mut cur);
                std::mem::swap(&mut cur, &mut next);
            }
        }
        acc
    }

    fn shifted_apply(&self, vals: &[Complex<T>], c: T, inv_rho: T, x: &[Complex<T>], y: &mut [Complex<T>]) {
        for i in 0..self.n {
            let mut s = Complex::new(T::zero(), T::zero());
            for p in self.indptr[i]..self.indptr[i + 1] {
                s += vals[p] * x[self.indices[p]];
            }
            y[i] = (s - x[i] * c) * inv_rho;
        }
    }
}

struct ChebSetup<T> {
    c: T,
    rho: T,
    coefs: Vec<Complex<T>>,
}

/// `acc += coef * x` where `coef` is real or purely imaginary.
fn accumulate<T: Real>(ar: &mut [T], ai: &mut [T], xr: &[T], xi: &[T], coef: Complex<T>) {
    if coef.im == T::zero() {
        let m = coef.re;
        for i in 0..ar.len() {
            ar[i] += m * xr[i];
            ai[i] += m * xi[i];
        }
    } else {
        let m = coef.im;
        for i in 0..ar.len() {
            ar[i] -= m * xi[i];
            ai[i] += m * xr[i];
        }
    }
}
