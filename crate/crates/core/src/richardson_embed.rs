//! All-at-once block form of the IMEX recursion, its steady-state flow
//! `du/dt = F - H u`, and the homogeneous (source-free) embedding of that flow.
//!
//! Ordering: the stacked unknown is `[u_nt; u_{nt-1}; ...; u_1]`, so block row
//! `k` carries step `m = nt-1-k` with `P_m` on the diagonal and `-Q_m` one
//! block to the right.

use num_complex::Complex;

use crate::error::{invalid, numerical, Result};
use crate::imex_engine::{ImexSystem, Trajectory};
use crate::scalar::{cabs, re, vnorm, CMat, CVec, Real};
use crate::spectral_core::{
    block_norm_bound, lu_solve, matrix_exp, sym_extreme_eigs, weyl_gap_bound, BlockMatrix,
};

#[derive(Clone, Debug)]
pub struct BlockSystem<T: Real> {
    pub nt: usize,
    pub dim: usize,
    pub h: BlockMatrix<T>,
    pub f: CVec<T>,
    /// Diagonal blocks `P_0..P_{nt-1}` (time order).
    pub p_blocks: Vec<CMat<T>>,
    /// Coupling blocks `Q_1..Q_{nt-1}` that appear inside `H` (time order).
    pub q_blocks: Vec<CMat<T>>,
}

impl<T: Real> BlockSystem<T> {
    pub fn size(&self) -> usize {
        self.nt * self.dim
    }

    pub fn dense_h(&self) -> CMat<T> {
        self.h.to_dense()
    }

    /// Block index of `u_m` (`m >= 1`) inside the stacked vector.
    pub fn block_of_step(&self, m: usize) -> usize {
        assert!(m >= 1 && m <= self.nt, "step {m} outside 1..={}", self.nt);
        self.nt - m
    }

    /// Extract `u_m` from a stacked vector.
    pub fn step_slice(&self, stacked: &CVec<T>, m: usize) -> CVec<T> {
        let k = self.block_of_step(m);
        stacked.rows(k * self.dim, self.dim).into_owned()
    }
}

/// Stack a trajectory `u_1..u_nt` in block order.
pub fn stack_trajectory<T: Real>(traj: &Trajectory<T>) -> CVec<T> {
    let nt = traj.states.len() - 1;
    let d = traj.states[0].len();
    let mut out = CVec::<T>::zeros(nt * d);
    for m in 1..=nt {
        let k = nt - m;
        out.rows_mut(k * d, d).copy_from(&traj.states[m]);
    }
    out
}

/// Inverse of [`stack_trajectory`]; returns `u_1..u_nt`.
pub fn unstack<T: Real>(stacked: &CVec<T>, nt: usize, dim: usize) -> Vec<CVec<T>> {
    (1..=nt).map(|m| stacked.rows((nt - m) * dim, dim).into_owned()).collect()
}

pub fn assemble_block_system<T: Real>(sys: &ImexSystem<T>) -> Result<BlockSystem<T>> {
    sys.validate()?;
    let (nt, d) = (sys.nt, sys.dim);
    let mut h = BlockMatrix::new(nt, d);
    let mut f = CVec::<T>::zeros(nt * d);
    for k in 0..nt {
        let m = nt - 1 - k;
        let st = &sys.steps[m];
        h.insert(k, k, st.p.clone())?;
        if m >= 1 {
            h.insert(k, k + 1, -st.q.clone())?;
            f.rows_mut(k * d, d).copy_from(&st.b);
        } else {
            let v = &st.q * &sys.u0 + &st.b;
            f.rows_mut(k * d, d).copy_from(&v);
        }
    }
    let p_blocks = sys.steps.iter().map(|s| s.p.clone()).collect();
    let q_blocks = sys.steps.iter().skip(1).map(|s| s.q.clone()).collect();
    Ok(BlockSystem { nt, dim: d, h, f, p_blocks, q_blocks })
}

/// `H^{-1} F`. Dense LU up to `DENSE_SOLVE_CAP` unknowns, block back-substitution beyond.
pub fn steady_state<T: Real>(bs: &BlockSystem<T>) -> Result<CVec<T>> {
    const DENSE_SOLVE_CAP: usize = 3000;
    if bs.size() <= DENSE_SOLVE_CAP {
        return lu_solve(&bs.dense_h(), &bs.f);
    }
    let d = bs.dim;
    let mut out = CVec::<T>::zeros(bs.size());
    for k in (0..bs.nt).rev() {
        let mut rhs = bs.f.rows(k * d, d).into_owned();
        if let Some(qneg) = bs.h.blocks.get(&(k, k + 1)) {
            let next = out.rows((k + 1) * d, d).into_owned();
            rhs -= qneg * next;
        }
        let x = lu_solve(&bs.h.blocks[&(k, k)], &rhs)?;
        out.rows_mut(k * d, d).copy_from(&x);
    }
    Ok(out)
}

/// Exact flow `u(t) = u_inf + e^{-Ht}(u_init - u_inf)`.
pub fn richardson_flow<T: Real>(bs: &BlockSystem<T>, u_init: &CVec<T>, t: T) -> Result<CVec<T>> {
    if u_init.len() != bs.size() {
        return invalid("richardson_flow: initial vector has wrong length");
    }
    let uinf = steady_state(bs)?;
    let e = matrix_exp(&(-bs.dense_h()), t)?;
    Ok(&uinf + e * (u_init - &uinf))
}

#[derive(Clone, Debug)]
pub struct DecayCertificate<T: Real> {
    /// `min lambda_min(sym P_j) - max ||Q_j||`.
    pub weyl_bound: T,
    /// `lambda_min((H + H^H)/2)` from a dense eigen-solve, when the size allowed it.
    pub lambda_min_h1: Option<T>,
    /// Upper bound on `||H||_2` from block diagonals.
    pub norm_bound: T,
    pub delta_ss: T,
    pub t_evol: T,
    /// Set when the Weyl bound was not positive and the numeric gap was used.
    pub warn: Option<String>,
}

/// Largest block system for which the dense Hermitian eigen-solve is run.
pub const NUMERIC_GAP_CAP: usize = 4000;

/// Evolution time after which `||u(t) - u_inf|| <= delta_ss ||u_init - u_inf||`.
pub fn decay_certificate<T: Real>(bs: &BlockSystem<T>, delta_ss: T) -> Result<DecayCertificate<T>> {
    if !(delta_ss > T::zero() && delta_ss < T::one()) {
        return invalid(format!("decay_certificate: delta_ss must lie in (0,1), got {delta_ss}"));
    }
    let weyl = weyl_gap_bound(&bs.p_blocks, &bs.q_blocks)?;
    let lam = if bs.size() <= NUMERIC_GAP_CAP { Some(sym_extreme_eigs(&bs.dense_h())?.0) } else { None };
    let log_term = (T::one() / delta_ss).ln();
    let (t_evol, warn) = if weyl > T::zero() {
        (log_term / weyl, None)
    } else {
        match lam {
            Some(l) if l > T::zero() => (
                log_term / l,
                Some(format!(
                    "Weyl bound {:.3e} is not positive; using numeric gap {:.3e}",
                    weyl.to_f64(),
                    l.to_f64()
                )),
            ),
            _ => return invalid("decay_certificate: Hermitian part of H is not positive definite"),
        }
    };
    Ok(DecayCertificate { weyl_bound: weyl, lambda_min_h1: lam, norm_bound: block_norm_bound(&bs.h), delta_ss, t_evol, warn })
}

/// How the auxiliary indicator `chi` is chosen.
#[derive(Clone, Debug)]
pub enum ChiSpec {
    /// Support of `F`.
    Auto,
    /// Explicit 0/1 pattern (must contain the support of `F`).
    Explicit(Vec<bool>),
}

/// Source-free system `d/dt [u; z] = A [u; z]` with
/// `A = [[-H, diag(F)_chi / K], [0, 0]]` restricted to the columns where
/// `chi = 1`, started from `[u_init; K 1]`.
#[derive(Clone, Debug)]
pub struct HomogeneousEmbedding<T: Real> {
    pub n_phys: usize,
    pub k: T,
    /// Physical indices where `chi = 1`, in order of the auxiliary slots.
    pub support: Vec<usize>,
    pub chi: Vec<bool>,
    pub generator: CMat<T>,
    pub init: CVec<T>,
    pub steady: CVec<T>,
    pub t_evol: T,
}

impl<T: Real> HomogeneousEmbedding<T> {
    pub fn size(&self) -> usize {
        self.generator.nrows()
    }

    pub fn chi_norm(&self) -> T {
        T::of_usize(self.support.len()).sqrt()
    }

    pub fn physical<'a>(&self, v: &'a CVec<T>) -> nalgebra::DVectorView<'a, Complex<T>> {
        v.rows(0, self.n_phys)
    }
}

pub fn build_homogeneous<T: Real>(
    bs: &BlockSystem<T>,
    k: T,
    chi: &ChiSpec,
    u_init: Option<&CVec<T>>,
    t_evol: T,
) -> Result<HomogeneousEmbedding<T>> {
    if !(k > T::zero()) {
        return invalid(format!("build_homogeneous: K must be positive, got {k}"));
    }
    let n = bs.size();
    let chi: Vec<bool> = match chi {
        ChiSpec::Auto => bs.f.iter().map(|z| cabs(*z) > T::zero()).collect(),
        ChiSpec::Explicit(v) => {
            if v.len() != n {
                return invalid(format!("chi has length {}, expected {n}", v.len()));
            }
            for (i, (&c, z)) in v.iter().zip(bs.f.iter()).enumerate() {
                if !c && cabs(*z) > T::zero() {
                    return invalid(format!("F[{i}] is nonzero outside the chi support"));
                }
            }
            v.clone()
        }
    };
    let support: Vec<usize> = chi.iter().enumerate().filter(|(_, &c)| c).map(|(i, _)| i).collect();
    let m = support.len();
    let mut a = CMat::<T>::zeros(n + m, n + m);
    a.view_mut((0, 0), (n, n)).copy_from(&(-bs.dense_h()));
    for (j, &i) in support.iter().enumerate() {
        a[(i, n + j)] = bs.f[i] / re(k);
    }
    let mut init = CVec::<T>::zeros(n + m);
    if let Some(u) = u_init {
        if u.len() != n {
            return invalid("build_homogeneous: initial physical state has wrong length");
        }
        init.rows_mut(0, n).copy_from(u);
    }
    for j in 0..m {
        init[n + j] = re(k);
    }
    let uinf = steady_state(bs)?;
    let mut steady = init.clone();
    steady.rows_mut(0, n).copy_from(&uinf);
    let resid = &a * &steady;
    let fnorm = vnorm(bs.f.as_slice());
    let scale = if fnorm > T::zero() { fnorm } else { T::one() };
    if vnorm(resid.as_slice()) > T::of(1e-8) * scale * T::of_usize(n).sqrt() {
        return numerical("build_homogeneous: steady state is not a fixed point of the generator");
    }
    Ok(HomogeneousEmbedding { n_phys: n, k, support, chi, generator: a, init, steady, t_evol })
}

/// `e^{A t} init` by dense matrix exponential.
pub fn richardson_flow_reference<T: Real>(emb: &HomogeneousEmbedding<T>, t: T) -> Result<CVec<T>> {
    Ok(matrix_exp(&emb.generator, t)? * &emb.init)
}
