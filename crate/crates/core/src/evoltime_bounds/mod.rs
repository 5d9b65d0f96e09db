//! Exact `||exp(-H t)||_2` curves and the upper bounds used to estimate the
//! evolution time: logarithmic norm, Jordan form, Schur form, and the
//! time-ordered bound built from the block (Laplace) structure of
//! `exp(-H t)` for block-bidiagonal `H`.

mod quadrature;

use num_complex::Complex;

use crate::error::{invalid, numerical, Error, Result};
use crate::scalar::{cabs, re, CMat, Real};
use crate::spectral_core::{log_norm, matrix_exp, singular_values, spectral_norm, BlockMatrix};

pub use quadrature::integrate;

/// Size cap for dense curves.
pub const EXACT_CURVE_CAP: usize = 256;
/// Eigenvalues closer than this are treated as one cluster.
pub const JORDAN_GAP: f64 = 1e-6;
/// Absolute tolerance of the time quadratures.
pub const QUAD_TOL: f64 = 1e-9;

/// `||exp(-H t)||_2` for every `t`.
pub fn exact_norm_curve<T: Real>(h: &CMat<T>, ts: &[T]) -> Result<Vec<T>> {
    if h.nrows() > EXACT_CURVE_CAP {
        return invalid(format!("exact_norm_curve: size {} exceeds cap {EXACT_CURVE_CAP}", h.nrows()));
    }
    let neg = -h.clone();
    ts.iter().map(|&t| Ok(spectral_norm(&matrix_exp(&neg, t)?))).collect()
}

/// `exp(mu(A) t)`.
pub fn bound_lognorm<T: Real>(a: &CMat<T>, ts: &[T]) -> Result<Vec<T>> {
    let mu = log_norm(a)?;
    Ok(ts.iter().map(|&t| (mu * t).exp()).collect())
}

/// Complex Schur form `A = U T U^H`.
pub fn schur<T: Real>(a: &CMat<T>) -> Result<(CMat<T>, CMat<T>)> {
    if a.nrows() != a.ncols() {
        return invalid("schur: matrix must be square");
    }
    let s = nalgebra::linalg::Schur::try_new(a.clone(), T::default_epsilon(), 10_000)
        .ok_or_else(|| Error::Numerical("schur: QR iteration did not converge".into()))?;
    Ok(s.unpack())
}

#[derive(Clone, Debug)]
pub struct SchurData<T: Real> {
    /// Largest real part of the spectrum.
    pub lambda: T,
    /// `||N||_2` of the strictly upper part of the Schur factor.
    pub n_norm: T,
    pub dim: usize,
}

pub fn schur_data<T: Real>(a: &CMat<T>) -> Result<SchurData<T>> {
    let (_, t) = schur(a)?;
    let n = t.nrows();
    let lambda = (0..n).map(|i| t[(i, i)].re).fold(-T::max_value().unwrap(), |m, x| m.max(x));
    let mut nil = t.clone();
    for j in 0..n {
        for i in j..n {
            nil[(i, j)] = re(T::zero());
        }
    }
    Ok(SchurData { lambda, n_norm: spectral_norm(&nil), dim: n })
}

/// `(sum_{k=0}^{n} (||N|| t)^k / k!) exp(lambda t)`.
pub fn bound_schur<T: Real>(a: &CMat<T>, ts: &[T]) -> Result<Vec<T>> {
    let d = schur_data(a)?;
    Ok(ts.iter().map(|&t| schur_series(d.n_norm * t, d.dim) * (d.lambda * t).exp()).collect())
}

fn schur_series<T: Real>(x: T, n: usize) -> T {
    let mut term = T::one();
    let mut s = T::one();
    for k in 1..=n {
        term = term * x / T::of_usize(k);
        s += term;
    }
    s
}

#[derive(Clone, Debug)]
pub struct JordanData<T: Real> {
    /// Condition number of the (Jordan) eigenvector basis.
    pub kappa: T,
    /// Largest Jordan block.
    pub alpha: usize,
    pub lambda: T,
}

/// Jordan data when the structure is numerically unambiguous, else `None`.
///
/// Clusters (eigenvalues closer than [`JORDAN_GAP`]) are accepted only when
/// they are either semisimple or a single Jordan chain, judged by a clear
/// gap in the singular values of `A - lambda I`.
pub fn jordan_data<T: Real>(a: &CMat<T>) -> Result<Option<JordanData<T>>> {
    let n = a.nrows();
    if n != a.ncols() || n == 0 {
        return invalid("jordan_data: matrix must be square and non-empty");
    }
    let (u, t) = schur(a)?;
    let eig: Vec<Complex<T>> = (0..n).map(|i| t[(i, i)]).collect();
    let lambda = eig.iter().fold(-T::max_value().unwrap(), |m, z| m.max(z.re));
    let scale = crate::scalar::max_abs(a).max(T::one());
    let gap = T::of(JORDAN_GAP) * scale;
    // cluster eigenvalues (single linkage)
    let mut label: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in 0..i {
            if cabs(eig[i] - eig[j]) <= gap {
                let (li, lj) = (label[i], label[j]);
                for l in label.iter_mut() {
                    if *l == li {
                        *l = lj;
                    }
                }
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = vec![];
    let mut seen: Vec<usize> = vec![];
    for i in 0..n {
        if let Some(pos) = seen.iter().position(|&l| l == label[i]) {
            clusters[pos].push(i);
        } else {
            seen.push(label[i]);
            clusters.push(vec![i]);
        }
    }
    let mut cols: Vec<nalgebra::DVector<Complex<T>>> = Vec::with_capacity(n);
    let mut alpha = 1;
    let small = T::of(1e-9) * scale;
    let clear = T::of(1e-5) * scale;
    for cl in &clusters {
        let m = cl.len();
        if m == 1 {
            cols.push(&u * triangular_eigvec(&t, cl[0]));
            continue;
        }
        let mean = cl.iter().fold(Complex::new(T::zero(), T::zero()), |s, &i| s + eig[i]) / re(T::of_usize(m));
        let shifted = a - CMat::<T>::identity(n, n) * mean;
        let sv = singular_values(&shifted);
        let nsmall = sv.iter().filter(|&&s| s <= small).count();
        let next = sv.iter().filter(|&&s| s > small).fold(T::max_value().unwrap(), |mn, &s| mn.min(s));
        if nsmall == 0 || next < clear {
            return Ok(None);
        }
        if nsmall == m {
            for v in null_space(&shifted, m)? {
                cols.push(v);
            }
        } else if nsmall == 1 {
            // single chain of length m
            let mut pw = CMat::<T>::identity(n, n);
            for _ in 0..m {
                pw = &shifted * pw;
            }
            let ker = null_space(&pw, m)?;
            let mut pm1 = CMat::<T>::identity(n, n);
            for _ in 0..m - 1 {
                pm1 = &shifted * pm1;
            }
            let top = ker
                .into_iter()
                .max_by(|x, y| {
                    let nx = crate::scalar::vnorm((&pm1 * x).as_slice());
                    let ny = crate::scalar::vnorm((&pm1 * y).as_slice());
                    nx.partial_cmp(&ny).unwrap()
                })
                .unwrap();
            let mut chain = vec![top];
            for _ in 1..m {
                let prev = chain.last().unwrap();
                chain.push(&shifted * prev);
            }
            chain.reverse();
            cols.extend(chain);
            alpha = alpha.max(m);
        } else {
            return Ok(None);
        }
    }
    let mut v = CMat::<T>::zeros(n, n);
    for (k, c) in cols.iter().enumerate() {
        v.set_column(k, c);
    }
    let sv = singular_values(&v);
    let smin = *sv.last().unwrap();
    if !(smin > T::zero()) {
        return Ok(None);
    }
    Ok(Some(JordanData { kappa: sv[0] / smin, alpha, lambda }))
}

fn triangular_eigvec<T: Real>(t: &CMat<T>, k: usize) -> nalgebra::DVector<Complex<T>> {
    let n = t.nrows();
    let lam = t[(k, k)];
    let mut y = nalgebra::DVector::<Complex<T>>::zeros(n);
    y[k] = re(T::one());
    for j in (0..k).rev() {
        let mut s = Complex::new(T::zero(), T::zero());
        for m in j + 1..=k {
            s += t[(j, m)] * y[m];
        }
        let mut d = t[(j, j)] - lam;
        if cabs(d) == T::zero() {
            d = re(T::default_epsilon());
        }
        y[j] = -s / d;
    }
    let nrm = crate::scalar::vnorm(y.as_slice());
    y.map(|z| z / re(nrm))
}

fn null_space<T: Real>(a: &CMat<T>, dim: usize) -> Result<Vec<nalgebra::DVector<Complex<T>>>> {
    let svd = a.clone().svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Numerical("null_space: SVD failed".into()))?;
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| svd.singular_values[i].partial_cmp(&svd.singular_values[j]).unwrap());
    Ok(idx.iter().take(dim).map(|&i| vt.row(i).adjoint()).collect())
}

/// `kappa alpha max_{r < alpha} t^r/r! exp(lambda t)`, or `None` when the
/// Jordan structure is ambiguous.
pub fn bound_jordan<T: Real>(a: &CMat<T>, ts: &[T]) -> Result<Option<Vec<T>>> {
    Ok(jordan_data(a)?.map(|d| ts.iter().map(|&t| jordan_value(&d, t)).collect()))
}

fn jordan_value<T: Real>(d: &JordanData<T>, t: T) -> T {
    let mut best = T::one();
    let mut term = T::one();
    for r in 1..d.alpha {
        term = term * t / T::of_usize(r);
        best = best.max(term);
    }
    d.kappa * T::of_usize(d.alpha) * best * (d.lambda * t).exp()
}

/// `B_k(t)`, `k = 0..nt-1`, the `(i, i+k)` blocks of `exp(-H t)` for the
/// block-bidiagonal `H` with constant `P` on the diagonal and `-Q` above it.
#[derive(Clone, Debug)]
pub struct LaplaceBlocks<T: Real> {
    /// From `B_k(t) = int_0^t e^{-P tau} Q B_{k-1}(t - tau) dtau`.
    pub left: Vec<CMat<T>>,
    /// From `B_k(t) = int_0^t B_{k-1}(t - tau) Q e^{-P tau} dtau`.
    pub right: Vec<CMat<T>>,
    /// `max_k ||left_k - right_k||_max`.
    pub ordering_gap: T,
    /// `max_k ||left_k - expm block||_max`.
    pub expm_gap: T,
    pub panels: usize,
}

/// Constant-block bidiagonal `H` of `nt` blocks.
pub fn assemble_constant_h<T: Real>(p: &CMat<T>, q: &CMat<T>, nt: usize) -> Result<BlockMatrix<T>> {
    let mut h = BlockMatrix::new(nt, p.nrows());
    for k in 0..nt {
        h.insert(k, k, p.clone())?;
        if k + 1 < nt {
            h.insert(k, k + 1, -q.clone())?;
        }
    }
    Ok(h)
}

const PANEL_NODES: usize = 16;

fn blocks_on_grid<T: Real>(p: &CMat<T>, q: &CMat<T>, nt: usize, t: T, panels: usize) -> Result<(Vec<CMat<T>>, Vec<CMat<T>>)> {
    let grid = quadrature::PanelGrid::new(t, panels, PANEL_NODES);
    let d = p.nrows();
    let mut qt = Vec::with_capacity(grid.nodes.len()); // e^{Ps} Q e^{-Ps}
    let mut qh = Vec::with_capacity(grid.nodes.len()); // e^{-Ps} Q e^{Ps}
    for &s in &grid.nodes {
        let em = matrix_exp(&(-p.clone()), s)?;
        let ep = matrix_exp(p, s)?;
        qt.push(&ep * q * &em);
        qh.push(&em * q * &ep);
    }
    let eminus_t = matrix_exp(&(-p.clone()), t)?;
    let mut left = vec![eminus_t.clone()];
    let mut right = vec![eminus_t.clone()];
    let mut y: Vec<CMat<T>> = vec![CMat::<T>::identity(d, d); grid.nodes.len()];
    let mut z = y.clone();
    for _ in 1..nt {
        let gy: Vec<CMat<T>> = qt.iter().zip(&y).map(|(a, b)| a * b).collect();
        y = grid.cumulative(&gy);
        let gz: Vec<CMat<T>> = z.iter().zip(&qh).map(|(a, b)| a * b).collect();
        z = grid.cumulative(&gz);
        left.push(&eminus_t * y.last().unwrap());
        right.push(z.last().unwrap() * &eminus_t);
    }
    Ok((left, right))
}

/// Block structure of `exp(-H t)` by the convolution recursion, evaluated
/// with composite Chebyshev panels refined until two successive panel
/// counts agree to [`QUAD_TOL`]. Both operand orderings are computed and
/// compared with the dense exponential.
pub fn laplace_blocks<T: Real>(p: &CMat<T>, q: &CMat<T>, nt: usize, t: T) -> Result<LaplaceBlocks<T>> {
    if nt == 0 || nt > 6 || p.nrows() > 8 || p.shape() != q.shape() || p.nrows() != p.ncols() {
        return invalid("laplace_blocks: need 1 <= nt <= 6, square P and Q of equal size <= 8");
    }
    if !(t >= T::zero()) {
        return invalid("laplace_blocks: t must be non-negative");
    }
    let tol = T::of(QUAD_TOL);
    let mut panels = 1;
    let (mut left, mut right) = blocks_on_grid(p, q, nt, t, panels)?;
    loop {
        if panels > 512 {
            return numerical("laplace_blocks: quadrature did not converge");
        }
        let (l2, r2) = blocks_on_grid(p, q, nt, t, panels * 2)?;
        let diff = left.iter().zip(&l2).chain(right.iter().zip(&r2)).fold(T::zero(), |m, (a, b)| m.max(crate::scalar::max_abs(&(a - b))));
        left = l2;
        right = r2;
        panels *= 2;
        if diff <= tol {
            break;
        }
    }
    let ordering_gap = left.iter().zip(&right).fold(T::zero(), |m, (a, b)| m.max(crate::scalar::max_abs(&(a - b))));
    let h = assemble_constant_h(p, q, nt)?.to_dense();
    let e = matrix_exp(&(-h), t)?;
    let d = p.nrows();
    let mut expm_gap = T::zero();
    for k in 0..nt {
        let blk = e.view((0, k * d), (d, d)).into_owned();
        expm_gap = expm_gap.max(crate::scalar::max_abs(&(&left[k] - blk)));
    }
    Ok(LaplaceBlocks { left, right, ordering_gap, expm_gap, panels })
}

#[derive(Clone, Debug)]
pub struct TimeOrderedBound<T: Real> {
    /// `||e^{-Pt}||_2 exp(int_0^t ||Q~(tau)||_2 dtau)`.
    pub value: T,
    /// `int_0^t ||e^{P tau} Q e^{-P tau}||_2 dtau`.
    pub integral: T,
    pub expm_p_norm: T,
    /// `||e^{(-P + I) t}||_2`, reported when `Q = I`.
    pub identity_form: Option<T>,
}

impl<T: Real> TimeOrderedBound<T> {
    /// Same bound with the exponential series cut after `nt` terms (the block
    /// row of a finite `H` has only `nt` blocks).
    pub fn truncated(&self, nt: usize) -> T {
        let mut term = T::one();
        let mut s = T::one();
        for i in 1..nt {
            term = term * self.integral / T::of_usize(i);
            s += term;
        }
        self.expm_p_norm * s
    }
}

pub fn bound_timeordered<T: Real>(p: &CMat<T>, q: &CMat<T>, t: T) -> Result<TimeOrderedBound<T>> {
    if p.shape() != q.shape() || p.nrows() != p.ncols() || p.nrows() > 8 {
        return invalid("bound_timeordered: need square P and Q of equal size <= 8");
    }
    let negp = -p.clone();
    let mut err: Option<Error> = None;
    let integral = integrate(
        |s: T| match (matrix_exp(p, s), matrix_exp(&negp, s)) {
            (Ok(a), Ok(b)) => spectral_norm(&(a * q * b)),
            (Err(e), _) | (_, Err(e)) => {
                err = Some(e);
                T::zero()
            }
        },
        T::zero(),
        t,
        T::of(QUAD_TOL),
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    let ep = spectral_norm(&matrix_exp(&negp, t)?);
    let id = CMat::<T>::identity(p.nrows(), p.ncols());
    let identity_form = if crate::scalar::max_abs(&(q - &id)) == T::zero() {
        Some(spectral_norm(&matrix_exp(&(&id - p), t)?))
    } else {
        None
    };
    Ok(TimeOrderedBound { value: ep * integral.exp(), integral, expm_p_norm: ep, identity_form })
}

/// Tightness benchmark for constant-block bidiagonal `H`.
#[derive(Clone, Debug)]
pub struct BoundCurve<T: Real> {
    pub ts: Vec<T>,
    pub exact: Vec<T>,
    pub lognorm: Vec<T>,
    pub jordan: Option<Vec<T>>,
    pub schur: Vec<T>,
    pub laplace_timeordered: Vec<T>,
    pub kappa: Option<T>,
    pub alpha: Option<usize>,
    pub n_norm: T,
    pub lambda: T,
}

impl<T: Real> BoundCurve<T> {
    /// Largest `exact - bound` over every family and sample (should be <= 0).
    pub fn worst_violation(&self) -> T {
        let mut w = -T::max_value().unwrap();
        for (i, e) in self.exact.iter().enumerate() {
            let mut fams = vec![self.lognorm[i], self.schur[i], self.laplace_timeordered[i]];
            if let Some(j) = &self.jordan {
                fams.push(j[i]);
            }
            for b in fams {
                w = w.max(*e - b);
            }
        }
        w
    }
}

pub fn build_bound_curve<T: Real>(p: &CMat<T>, q: &CMat<T>, nt: usize, ts: &[T]) -> Result<BoundCurve<T>> {
    let h = assemble_constant_h(p, q, nt)?.to_dense();
    let a = -h.clone();
    let exact = exact_norm_curve(&h, ts)?;
    let lognorm = bound_lognorm(&a, ts)?;
    let jd = jordan_data(&a)?;
    let jordan = jd.as_ref().map(|d| ts.iter().map(|&t| jordan_value(d, t)).collect());
    let sd = schur_data(&a)?;
    let schur = ts.iter().map(|&t| schur_series(sd.n_norm * t, sd.dim) * (sd.lambda * t).exp()).collect();
    let mut lt = Vec::with_capacity(ts.len());
    for &t in ts {
        lt.push(bound_timeordered(p, q, t)?.value);
    }
    Ok(BoundCurve {
        ts: ts.to_vec(),
        exact,
        lognorm,
        jordan,
        schur,
        laplace_timeordered: lt,
        kappa: jd.as_ref().map(|d| d.kappa),
        alpha: jd.as_ref().map(|d| d.alpha),
        n_norm: sd.n_norm,
        lambda: sd.lambda,
    })
}
