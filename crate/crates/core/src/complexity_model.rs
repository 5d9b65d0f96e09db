//! Query-count, repetition and success-probability estimates, and the
//! physical-branch analysis of the telegraph embedding.
//!
//! Every cost figure here is an order estimate with all hidden constants set
//! to 1; see [`ORDER_ESTIMATE_LABEL`].

use crate::error::{invalid, numerical, Result};
use crate::imex_engine::{ImexSystem, Trajectory};
use crate::pde_frontends::TelegraphSystem;
use crate::richardson_embed::{assemble_block_system, build_homogeneous, steady_state, ChiSpec};
use crate::scalar::{cabs, max_abs, re, vnorm, CMat, CVec, Real};
use crate::schrodingerizer::PGrid;
use crate::spectral_core::{hermitian_split, spectral_norm, sym_eigh};

pub const ORDER_ESTIMATE_LABEL: &str = "order-estimate, constant=1";

/// Largest dense eigenproblem `telegraph_branch` will attempt.
pub const BRANCH_DENSE_CAP: usize = 1600;

#[derive(Clone, Debug)]
pub struct BerryEstimate<T: Real> {
    /// `s * hmax * t_evol`.
    pub chi: T,
    pub queries: T,
    /// Set when `chi/delta <= e^e`, where the log/loglog factor is no longer
    /// meaningful; `queries` is then just `chi`.
    pub flagged: bool,
}

/// `chi log(chi/delta) / log log(chi/delta)` with `chi = s hmax t_evol`.
pub fn berry_queries<T: Real>(s: usize, hmax: T, t_evol: T, delta: T) -> Result<BerryEstimate<T>> {
    if s == 0 || !(hmax > T::zero() && t_evol > T::zero()) {
        return invalid("berry_queries: s, hmax and t_evol must be positive");
    }
    if !(delta > T::zero() && delta < T::one()) {
        return invalid("berry_queries: delta must lie in (0,1)");
    }
    let chi = T::of_usize(s) * hmax * t_evol;
    let x = chi / delta;
    if x <= T::one().exp().exp() {
        return Ok(BerryEstimate { chi, queries: chi, flagged: true });
    }
    let l = x.ln();
    Ok(BerryEstimate { chi, queries: chi * l / l.ln(), flagged: false })
}

/// `Nx^2 log Nx (log 1/delta)^2`, the heat-equation target order.
pub fn heat_target_order<T: Real>(nx: usize, delta: T) -> T {
    let n = T::of_usize(nx);
    let l = (T::one() / delta).ln();
    n * n * n.ln() * l * l
}

fn row_sparsity<T: Real>(a: &CMat<T>) -> usize {
    (0..a.nrows()).map(|i| a.row(i).iter().filter(|z| z.re != T::zero() || z.im != T::zero()).count()).max().unwrap_or(0)
}

#[derive(Clone, Debug)]
pub struct HmaxSparsity<T: Real> {
    /// `max_n [s(P_n) + s(Q_n)]`.
    pub s: usize,
    /// `Np max_n [2|P_n|_max + |Q_n|_max + |b_n + [n=0] Q_0 u_0|_max]`.
    pub hmax_estimate: T,
    /// `max_l |mu_l A1 - A2|_max` over the mode blocks of the Schrodingerized
    /// Hamiltonian of the `K = 1` embedding on `grid`.
    pub hmax_exact: T,
    /// Nonzeros per row of the materialised mode blocks.
    pub s_exact: usize,
}

pub fn schr_hmax_and_sparsity<T: Real>(sys: &ImexSystem<T>, grid: &PGrid<T>) -> Result<HmaxSparsity<T>> {
    sys.validate()?;
    let mut s = 0;
    let mut m = T::zero();
    for (n, st) in sys.steps.iter().enumerate() {
        s = s.max(row_sparsity(&st.p) + row_sparsity(&st.q));
        let src = if n == 0 { &st.b + &st.q * &sys.u0 } else { st.b.clone() };
        let bmax = src.iter().fold(T::zero(), |a, z| a.max(cabs(*z)));
        m = m.max(T::of(2.0) * max_abs(&st.p) + max_abs(&st.q) + bmax);
    }
    let hmax_estimate = T::of_usize(grid.np) * m;
    let bs = assemble_block_system(sys)?;
    let emb = build_homogeneous(&bs, T::one(), &ChiSpec::Auto, None, T::one())?;
    let (a1, a2) = hermitian_split(&emb.generator)?;
    let mut hmax_exact = T::zero();
    let mut s_exact = 0;
    for k in 0..grid.np {
        let mu = grid.mu(k);
        let blk = a1.map(|z| z * mu) - &a2;
        hmax_exact = hmax_exact.max(max_abs(&blk));
        if mu != T::zero() {
            s_exact = s_exact.max(row_sparsity(&blk));
        }
    }
    Ok(HmaxSparsity { s, hmax_estimate, hmax_exact, s_exact })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RepetitionMode {
    /// Whole trajectory.
    Full,
    /// Final time block only; one extra factor `sqrt(Nt)`.
    Final,
}

#[derive(Clone, Debug)]
pub struct RepetitionCount<T: Real> {
    /// Formula value.
    pub raw: T,
    /// `max(raw, 1)`.
    pub value: T,
    /// No source term: the count is then set by the initial data alone.
    pub source_free: bool,
    /// `max_n |b_n| / tau`.
    pub b_max: T,
    /// `min_n |u_n|` over the oracle trajectory.
    pub u_min: T,
}

/// `T t_evol |b1|_{2,max} / (Nt |u|_{2,min})`, times `sqrt(Nt)` for
/// [`RepetitionMode::Final`]. Assumes the embedding has `p_diamond = 0`.
pub fn repetition_counts<T: Real>(
    sys: &ImexSystem<T>,
    oracle: &Trajectory<T>,
    t_evol: T,
    mode: RepetitionMode,
) -> Result<RepetitionCount<T>> {
    sys.validate()?;
    if oracle.states.len() != sys.nt + 1 {
        return invalid("repetition_counts: oracle trajectory does not match the system");
    }
    let u_min = oracle.states.iter().map(|u| vnorm(u.as_slice())).fold(T::max_value().unwrap(), |a, b| a.min(b));
    if !(u_min > T::zero()) {
        return numerical("repetition_counts: trajectory norm vanishes");
    }
    let b_max = sys.steps.iter().map(|s| vnorm(s.b.as_slice())).fold(T::zero(), |a, b| a.max(b)) / sys.tau;
    let horizon = sys.tau * T::of_usize(sys.nt);
    let nt = T::of_usize(sys.nt);
    let mut raw = horizon * t_evol * b_max / (nt * u_min);
    if mode == RepetitionMode::Final {
        raw *= nt.sqrt();
    }
    Ok(RepetitionCount { raw, value: raw.max(T::one()), source_free: b_max == T::zero(), b_max, u_min })
}

/// `1/2 e^{-2 p_diamond} |w(T)|^2 / (|w0|^2 + T^2 |b|^2)`.
pub fn success_probability<T: Real>(w0_norm: T, b_norm: T, wt_norm: T, t: T, p_diamond: T) -> Result<T> {
    if w0_norm < T::zero() || b_norm < T::zero() || wt_norm < T::zero() {
        return invalid("success_probability: norms must be non-negative");
    }
    let den = w0_norm * w0_norm + t * t * b_norm * b_norm;
    if !(den > T::zero()) {
        return invalid("success_probability: zero denominator");
    }
    Ok(T::of(0.5) * (-T::of(2.0) * p_diamond).exp() * wt_norm * wt_norm / den)
}

#[derive(Clone, Debug)]
pub struct ComplexityReport<T: Real> {
    pub s: usize,
    pub hmax: T,
    pub hmax_exact: T,
    pub t_evol: T,
    pub chi_berry: T,
    pub queries: T,
    pub berry_flagged: bool,
    pub reps_full: T,
    pub reps_final: T,
    pub source_free: bool,
    pub success_prob: T,
    pub p_diamond: T,
    pub np: usize,
    /// `log2 Np`.
    pub register_width: u32,
    /// `queries * reps_full`, no constants asserted.
    pub composite: T,
    pub label: &'static str,
}

/// Collects the estimates above for one solved system.
pub fn complexity_report<T: Real>(
    sys: &ImexSystem<T>,
    oracle: &Trajectory<T>,
    grid: &PGrid<T>,
    t_evol: T,
    delta: T,
    p_diamond: T,
) -> Result<ComplexityReport<T>> {
    let hs = schr_hmax_and_sparsity(sys, grid)?;
    let berry = berry_queries(hs.s, hs.hmax_estimate, t_evol, delta)?;
    let full = repetition_counts(sys, oracle, t_evol, RepetitionMode::Full)?;
    let fin = repetition_counts(sys, oracle, t_evol, RepetitionMode::Final)?;
    let w0 = vnorm(sys.u0.as_slice());
    let wt = vnorm(oracle.last().as_slice());
    let horizon = sys.tau * T::of_usize(sys.nt);
    let pr = success_probability(w0, full.b_max, wt, horizon, p_diamond)?;
    Ok(ComplexityReport {
        s: hs.s,
        hmax: hs.hmax_estimate,
        hmax_exact: hs.hmax_exact,
        t_evol,
        chi_berry: berry.chi,
        queries: berry.queries,
        berry_flagged: berry.flagged,
        reps_full: full.value,
        reps_final: fin.value,
        source_free: full.source_free,
        success_prob: pr,
        p_diamond,
        np: grid.np,
        register_width: grid.np.trailing_zeros(),
        composite: berry.queries * full.value,
        label: ORDER_ESTIMATE_LABEL,
    })
}

#[derive(Clone, Debug)]
pub struct PhysicalBranch<T: Real> {
    pub nx: usize,
    pub nt: usize,
    pub lambda_tilde: T,
    /// `2 cos(r pi/(Nt+1))`, `r = 1..Nt`.
    pub theta_r: Vec<T>,
    /// `-2 + 2 cos(s pi/(Nx+1))`, `s = 1..Nx`.
    pub ell_s: Vec<T>,
    /// `1 + (lambda_tilde/2) ell_s`.
    pub q_s: Vec<T>,
    /// `xi^(1) (x) [zeta^(1); 0]` in stacked layout.
    pub u11: CVec<T>,
    pub lam_phys_formula: T,
    /// Branch of `(H + H^T)/2` with the largest overlap against `u11`.
    pub lam_phys_numeric: Option<T>,
    pub overlap: Option<T>,
    /// `|(H + H^T)/2 - (I - P_Nt (x) Q/2)|_2`, the size of the dropped remainder.
    pub remainder_norm: Option<T>,
    /// `|diag(F)^T u11|_2`.
    pub coupling: T,
    pub k: T,
    pub k_required: T,
    /// `[u11; 0]^T E_K [u11; 0]`.
    pub first_order: Option<T>,
    /// Physical branch of the Hermitian part of the homogeneous matrix at `k`.
    pub homo_phys_numeric: Option<T>,
    pub homo_overlap: Option<T>,
    pub chi_norm_sq: usize,
    /// Stacked trajectory norm `|u|_2`.
    pub u_norm: T,
    /// `1 + K_required |chi| / |u|`.
    pub g_k: T,
    /// `1 + K |chi| / |u|` at the `K` actually used.
    pub g_k_used: T,
    /// `1/2 |u|^2 / (|u|^2 + K^2 |chi|^2)` at the `K` actually used.
    pub success_prob: T,
    pub diagnostic: Option<String>,
}

fn lam_phys<T: Real>(nx: usize, nt: usize, lt: T) -> T {
    let ct = (T::pi() / T::of_usize(nt + 1)).cos();
    let cx = (T::pi() / T::of_usize(nx + 1)).cos();
    T::one() - ct * (T::one() - lt + lt * cx)
}

/// Eigenpair of a Hermitian matrix whose vector overlaps `target` most.
fn branch<T: Real>(h: &CMat<T>, target: &CVec<T>) -> Result<(T, T)> {
    let (vals, vecs) = sym_eigh(h)?;
    let mut best = (T::zero(), T::zero());
    for (k, &v) in vals.iter().enumerate() {
        let o = vecs.column(k).dotc(target).norm_sqr().sqrt();
        if o > best.1 {
            best = (v, o);
        }
    }
    Ok(best)
}

/// Physical-branch quantities for a rescaled telegraph system, with the
/// source normalised by `k` (`None` uses the system's own `K`).
pub fn telegraph_branch<T: Real>(ts: &TelegraphSystem<T>, k: Option<T>) -> Result<PhysicalBranch<T>> {
    let (nx, nt) = (ts.nx, ts.sys.nt);
    let lt = ts.lambda_tilde;
    if nx < 2 || nt < 2 {
        return invalid("telegraph_branch: need Nx, Nt >= 2");
    }
    if !(lt > T::zero() && lt < T::one()) {
        return invalid("telegraph_branch: lambda_tilde must lie in (0,1)");
    }
    let k = k.unwrap_or(ts.k);
    let pi = T::pi();
    let theta_r: Vec<T> = (1..=nt).map(|r| T::of(2.0) * (pi * T::of_usize(r) / T::of_usize(nt + 1)).cos()).collect();
    let ell_s: Vec<T> =
        (1..=nx).map(|s| T::of(-2.0) + T::of(2.0) * (pi * T::of_usize(s) / T::of_usize(nx + 1)).cos()).collect();
    let q_s: Vec<T> = ell_s.iter().map(|&l| T::one() + lt * T::of(0.5) * l).collect();
    let bw = 2 * nx;
    let n = nt * bw;
    let xi = |j: usize| (T::of(2.0) / T::of_usize(nt + 1)).sqrt() * (pi * T::of_usize(j) / T::of_usize(nt + 1)).sin();
    let zeta = |m: usize| (T::of(2.0) / T::of_usize(nx + 1)).sqrt() * (pi * T::of_usize(m) / T::of_usize(nx + 1)).sin();
    let mut u11 = CVec::<T>::zeros(n);
    for j in 0..nt {
        for m in 0..nx {
            u11[j * bw + m] = re(xi(j + 1) * zeta(m + 1));
        }
    }
    let lam_formula = lam_phys(nx, nt, lt);
    let bs = assemble_block_system(&ts.sys)?;
    let coupling = bs.f.iter().zip(u11.iter()).map(|(f, u)| (f * u).norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt();
    let k_required = coupling / (T::of(2.0).sqrt() * lam_formula);
    let u = steady_state(&bs)?;
    let u_norm = vnorm(u.as_slice());
    let chi_norm_sq = ts.chi.iter().filter(|&&c| c).count();
    let chi_norm = T::of_usize(chi_norm_sq).sqrt();
    if !(u_norm > T::zero()) {
        return numerical("telegraph_branch: trajectory norm vanishes");
    }
    let g_k = T::one() + k_required * chi_norm / u_norm;
    let g_k_used = T::one() + k * chi_norm / u_norm;
    let homo_norm = (u_norm * u_norm + k * k * T::of_usize(chi_norm_sq)).sqrt();
    let success_prob = success_probability(homo_norm, T::zero(), u_norm, T::zero(), T::zero())?;
    let mut out = PhysicalBranch {
        nx,
        nt,
        lambda_tilde: lt,
        theta_r,
        ell_s,
        q_s,
        u11,
        lam_phys_formula: lam_formula,
        lam_phys_numeric: None,
        overlap: None,
        remainder_norm: None,
        coupling,
        k,
        k_required,
        first_order: None,
        homo_phys_numeric: None,
        homo_overlap: None,
        chi_norm_sq,
        u_norm,
        g_k,
        g_k_used,
        success_prob,
        diagnostic: None,
    };
    let m = chi_norm_sq;
    if n + m > BRANCH_DENSE_CAP {
        return Ok(out);
    }
    let h = bs.dense_h();
    let h1 = (&h + h.adjoint()).map(|z| z * T::of(0.5));
    // I - (1/2) P_Nt (x) diag(I + (lt/2) L_h, 0)
    let mut model = CMat::<T>::identity(n, n);
    for j in 0..nt - 1 {
        for a in 0..nx {
            for b in 0..nx {
                let q = if a == b {
                    T::one() - lt
                } else if a + 1 == b || b + 1 == a {
                    lt * T::of(0.5)
                } else {
                    continue;
                };
                let (r, c) = (j * bw + a, (j + 1) * bw + b);
                model[(r, c)] -= re(q * T::of(0.5));
                model[(c, r)] -= re(q * T::of(0.5));
            }
        }
    }
    out.remainder_norm = Some(spectral_norm(&(&h1 - &model)));
    let (lam, ov) = branch(&h1, &out.u11)?;
    out.lam_phys_numeric = Some(lam);
    out.overlap = Some(ov);
    let emb = build_homogeneous(&bs, k, &ChiSpec::Explicit(ts.chi.clone()), None, T::one())?;
    let hh = emb.generator.map(|z| -z);
    let hh1 = (&hh + hh.adjoint()).map(|z| z * T::of(0.5));
    let mut v = CVec::<T>::zeros(n + m);
    v.rows_mut(0, n).copy_from(&out.u11);
    let quad = |a: &CMat<T>, x: &CVec<T>| x.dotc(&(a * x)).re;
    out.first_order = Some(quad(&hh1, &v) - quad(&h1, &out.u11));
    let (lh, oh) = branch(&hh1, &v)?;
    out.homo_phys_numeric = Some(lh);
    out.homo_overlap = Some(oh);
    if ov < T::of(0.5) || oh < T::of(0.5) {
        out.diagnostic = Some(format!(
            "weak branch identification: overlap {:.3} on (H+H^T)/2, {:.3} on the homogeneous matrix; formula {:.6e}, numeric {:.6e} / {:.6e}",
            ov.to_f64(),
            oh.to_f64(),
            lam_formula.to_f64(),
            lam.to_f64(),
            lh.to_f64()
        ));
    }
    Ok(out)
}
