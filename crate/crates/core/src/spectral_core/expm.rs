use num_complex::Complex;

use super::dense::{identity, lu_solve_mat, one_norm, sym_eigh};
use crate::error::{invalid, numerical, Result};
use crate::scalar::{cabs, CMat, Real};

/// Inputs with `||A t||_1` above this are rejected instead of squared into overflow.
pub const EXPM_NORM_CAP: f64 = 1e4;

const THETA: [f64; 5] = [
    1.495585217958292e-2,
    2.539398330063230e-1,
    9.504178996162932e-1,
    2.097847961257068,
    5.371920351148152,
];

const B3: [f64; 4] = [120., 60., 12., 1.];
const B5: [f64; 6] = [30240., 15120., 3360., 420., 30., 1.];
const B7: [f64; 8] = [17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.];
const B9: [f64; 10] = [
    17643225600., 8821612800., 2075673600., 302702400., 30270240., 2162160., 110880., 3960., 90.,
    1.,
];
const B13: [f64; 14] = [
    64764752532480000.,
    32382376266240000.,
    7771770303897600.,
    1187353796428800.,
    129060195264000.,
    10559470521600.,
    670442572800.,
    33522128640.,
    1323241920.,
    40840800.,
    960960.,
    16380.,
    182.,
    1.,
];

fn sc<T: Real>(m: &CMat<T>, s: f64) -> CMat<T> {
    let f = T::of(s);
    m.map(|z| z * f)
}

fn pade_low<T: Real>(a: &CMat<T>, b: &[f64]) -> Result<CMat<T>> {
    let n = a.nrows();
    let id = identity::<T>(n);
    let a2 = a * a;
    // odd powers go to U, even to V
    let mut pw = id.clone();
    let mut u = sc(&id, b[1]);
    let mut v = sc(&id, b[0]);
    let m = b.len() - 1;
    let mut k = 2;
    while k <= m {
        pw = &pw * &a2;
        v += sc(&pw, b[k]);
        if k + 1 <= m {
            u += sc(&pw, b[k + 1]);
        }
        k += 2;
    }
    let u = a * u;
    lu_solve_mat(&(&v - &u), &(&v + &u))
}

fn pade13<T: Real>(a: &CMat<T>) -> Result<CMat<T>> {
    let b = &B13;
    let n = a.nrows();
    let id = identity::<T>(n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = sc(&a6, b[13]) + sc(&a4, b[11]) + sc(&a2, b[9]);
    let u = a * (&a6 * inner_u + sc(&a6, b[7]) + sc(&a4, b[5]) + sc(&a2, b[3]) + sc(&id, b[1]));
    let inner_v = sc(&a6, b[12]) + sc(&a4, b[10]) + sc(&a2, b[8]);
    let v = &a6 * inner_v + sc(&a6, b[6]) + sc(&a4, b[4]) + sc(&a2, b[2]) + sc(&id, b[0]);
    lu_solve_mat(&(&v - &u), &(&v + &u))
}

/// `exp(-i H t)` for Hermitian `H` via its eigendecomposition; exactly
/// unitary up to the accuracy of the eigenvectors.
pub fn expm_unitary<T: Real>(h: &CMat<T>, t: T) -> Result<CMat<T>> {
    let (vals, v) = sym_eigh(h)?;
    let mut d = v.clone();
    for (k, lam) in vals.iter().enumerate() {
        let ph = -(*lam) * t;
        let e = Complex::new(ph.cos(), ph.sin());
        d.column_mut(k).iter_mut().for_each(|z| *z *= e);
    }
    Ok(d * v.adjoint())
}

/// `exp(A t)` by scaling-and-squaring Pade (orders 3..13, degree picked
/// from the 1-norm). Skew-Hermitian inputs take the eigendecomposition path
/// so propagators stay unitary.
pub fn matrix_exp<T: Real>(a: &CMat<T>, t: T) -> Result<CMat<T>> {
    let n = a.nrows();
    if n != a.ncols() {
        return invalid(format!("matrix_exp: expected square matrix, got {}x{}", n, a.ncols()));
    }
    if n == 0 {
        return Ok(CMat::<T>::zeros(0, 0));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) || !t.is_finite() {
        return invalid("matrix_exp: non-finite input");
    }
    let at = a.map(|z| z * t);
    let nrm = one_norm(&at);
    if nrm.to_f64() > EXPM_NORM_CAP {
        return invalid(format!("matrix_exp: ||A t||_1 = {:.3e} exceeds cap {:.0e}", nrm.to_f64(), EXPM_NORM_CAP));
    }
    // skew-Hermitian: A = -iH
    let skew = {
        let scale = crate::scalar::max_abs(a);
        let tol = scale * T::of(1e-14) * T::of_usize(n);
        let mut ok = scale > T::zero();
        'outer: for j in 0..n {
            for i in 0..=j {
                if cabs(a[(i, j)] + a[(j, i)].conj()) > tol {
                    ok = false;
                    break 'outer;
                }
            }
        }
        ok
    };
    if skew {
        let h = a.map(|z| Complex::new(-z.im, z.re)); // i A
        return expm_unitary(&h, t);
    }
    let nf = nrm.to_f64();
    let out = if nf <= THETA[0] {
        pade_low(&at, &B3)?
    } else if nf <= THETA[1] {
        pade_low(&at, &B5)?
    } else if nf <= THETA[2] {
        pade_low(&at, &B7)?
    } else if nf <= THETA[3] {
        pade_low(&at, &B9)?
    } else {
        let s = ((nf / THETA[4]).log2().ceil()).max(0.0) as i32;
        let scaled = sc(&at, 2f64.powi(-s));
        let mut x = pade13(&scaled)?;
        for _ in 0..s {
            x = &x * &x;
        }
        x
    };
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return numerical("matrix_exp: overflow");
    }
    Ok(out)
}
