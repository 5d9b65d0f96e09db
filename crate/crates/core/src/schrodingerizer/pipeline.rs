use std::time::{Duration, Instant};

use super::grid::{build_grid_for_flow, GridReport, PGrid};
use super::propagator::{HermitianPair, PropagatorKind};
use super::state::{evolve, mode_norms, reconstruct, warp, Reconstruction, SchrState};
use crate::error::{invalid, Result};
use crate::imex_engine::ImexSystem;
use crate::richardson_embed::{
    assemble_block_system, build_homogeneous, decay_certificate, ChiSpec, DecayCertificate, HomogeneousEmbedding,
};
use crate::scalar::{CVec, Real};
use crate::spectral_core::{hermitian_split, sym_extreme_eigs};

/// Where the reconstruction threshold comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PDiamondRule {
    /// `max(lambda_max(A1) t, 0)`.
    Spectral,
    /// Zero, i.e. trust that the physical branch never grows.
    Zero,
}

#[derive(Clone, Debug)]
pub struct PipelineOptions<T: Real> {
    /// Total error budget, split evenly between steady-state decay,
    /// Fourier truncation and time discretisation.
    pub delta: T,
    pub k: T,
    pub chi: ChiSpec,
    pub propagator: PropagatorKind,
    pub p_rule: PDiamondRule,
    /// Reconstruction used for the primary output and for grid refinement.
    pub method: Reconstruction,
    pub start_np: usize,
    pub max_np: usize,
}

impl<T: Real> PipelineOptions<T> {
    pub fn new(delta: T) -> Self {
        Self {
            delta,
            k: T::one(),
            chi: ChiSpec::Auto,
            propagator: PropagatorKind::Auto,
            p_rule: PDiamondRule::Spectral,
            method: Reconstruction::Integral,
            start_np: 1 << 9,
            max_np: 1 << 14,
        }
    }

    pub fn budget_third(&self) -> T {
        self.delta / T::of(3.0)
    }
}

/// Warped evolution of one embedding up to time `t`.
#[derive(Clone, Debug)]
pub struct EmbeddingRun<T: Real> {
    pub a1_range: (T, T),
    pub p_diamond: T,
    pub p_star: T,
    pub grid: PGrid<T>,
    pub grid_report: GridReport<T>,
    pub state: SchrState<T>,
    /// Full embedded vector read with each formula.
    pub single: CVec<T>,
    pub integral: CVec<T>,
    /// `max_l | ||w_l(t)|| - ||w_l(0)|| |`, relative to the total norm.
    pub norm_drift: T,
    /// Relative drift of the total norm.
    pub total_drift: T,
    pub pair_nnz: usize,
    pub pair_sparsity: usize,
}

/// Schrodingerize `dv/dt = A v` from the embedding's initial vector and run it to `t`.
pub fn run_embedding<T: Real>(emb: &HomogeneousEmbedding<T>, t: T, opts: &PipelineOptions<T>) -> Result<EmbeddingRun<T>> {
    let third = opts.budget_third();
    let (a1, a2) = hermitian_split(&emb.generator)?;
    let (lmin, lmax) = sym_extreme_eigs(&a1)?;
    let p_diamond = match opts.p_rule {
        PDiamondRule::Spectral => (lmax * t).max(T::zero()),
        PDiamondRule::Zero => T::zero(),
    };
    let (grid, report) = build_grid_for_flow(third, p_diamond, (lmin, lmax), t, opts.start_np, opts.max_np, opts.method)?;
    let pair = HermitianPair::from_dense(&a1, &a2)?;
    let s0 = warp(emb.init.as_slice(), &grid);
    let n0 = mode_norms(&s0);
    let s1 = evolve(&s0, &pair, t, opts.propagator)?;
    let n1 = mode_norms(&s1);
    let (t0, t1) = (s0.total_norm(), s1.total_norm());
    let rel = if t0 > T::zero() { T::one() / t0 } else { T::one() };
    let drift = n0.iter().zip(&n1).fold(T::zero(), |m, (a, b)| m.max((*a - *b).mag())) * rel;
    let total_drift = (t1 - t0).mag() * rel;
    let (single, pstar) = reconstruct(&s1, Reconstruction::SinglePoint, p_diamond)?;
    let (integral, _) = reconstruct(&s1, Reconstruction::Integral, p_diamond)?;
    Ok(EmbeddingRun {
        a1_range: (lmin, lmax),
        p_diamond,
        p_star: pstar,
        grid,
        grid_report: report,
        state: s1,
        single,
        integral,
        norm_drift: drift,
        total_drift,
        pair_nnz: pair.nnz(),
        pair_sparsity: pair.row_sparsity(),
    })
}

#[derive(Clone, Debug)]
pub struct PipelineResult<T: Real> {
    pub certificate: DecayCertificate<T>,
    pub t_evol: T,
    pub method: Reconstruction,
    pub run: EmbeddingRun<T>,
    pub embed_size: usize,
    pub n_phys: usize,
    /// Physical block of the reconstructed state, stacked `[u_nt; ..; u_1]`.
    pub stacked_single: CVec<T>,
    pub stacked_integral: CVec<T>,
    /// `H^{-1} F`, the exact steady state.
    pub steady: CVec<T>,
    pub elapsed: Duration,
}

impl<T: Real> PipelineResult<T> {
    /// Stacked trajectory from the configured reconstruction.
    pub fn stacked(&self) -> &CVec<T> {
        match self.method {
            Reconstruction::SinglePoint => &self.stacked_single,
            Reconstruction::Integral => &self.stacked_integral,
        }
    }

    /// `(u_1, .., u_nt)` in time order.
    pub fn trajectory(&self, dim: usize) -> Vec<CVec<T>> {
        let nt = self.n_phys / dim;
        (0..nt).rev().map(|k| self.stacked().rows(k * dim, dim).into_owned()).collect()
    }
}

/// Solve an IMEX system through the steady-state flow and its warped-phase
/// Hamiltonian form, integrating every mode exactly.
pub fn solve_schrodingerized<T: Real>(sys: &ImexSystem<T>, opts: &PipelineOptions<T>) -> Result<PipelineResult<T>> {
    let start = Instant::now();
    if !(opts.delta > T::zero() && opts.delta < T::one()) {
        return invalid("solve_schrodingerized: delta must lie in (0,1)");
    }
    let bs = assemble_block_system(sys)?;
    let cert = decay_certificate(&bs, opts.budget_third())?;
    let t = cert.t_evol;
    let emb = build_homogeneous(&bs, opts.k, &opts.chi, None, t)?;
    let run = run_embedding(&emb, t, opts)?;
    let n = emb.n_phys;
    Ok(PipelineResult {
        certificate: cert,
        t_evol: t,
        method: opts.method,
        embed_size: emb.size(),
        n_phys: n,
        stacked_single: run.single.rows(0, n).into_owned(),
        stacked_integral: run.integral.rows(0, n).into_owned(),
        steady: emb.steady.rows(0, n).into_owned(),
        run,
        elapsed: start.elapsed(),
    })
}
