use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftPlanner;

use super::grid::{integral_weight, point_weight, warp_profile, PGrid};
use super::propagator::{HermitianPair, PropagatorKind};
use crate::error::{invalid, Result};
use crate::scalar::{cabs, CVec, Real};

/// Fourier-space warped state. `modes[k * n + i]` is component `i` of FFT slot `k`.
#[derive(Clone, Debug)]
pub struct SchrState<T: Real> {
    pub grid: PGrid<T>,
    pub n: usize,
    pub modes: Vec<Complex<T>>,
    pub t: T,
}

impl<T: Real> SchrState<T> {
    pub fn mode(&self, k: usize) -> &[Complex<T>] {
        &self.modes[k * self.n..(k + 1) * self.n]
    }

    pub fn total_norm(&self) -> T {
        self.modes.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt()
    }
}

/// `w(0, p) = e^{-|p|} v0`, transformed to Fourier modes.
pub fn warp<T: Real>(v0: &[Complex<T>], grid: &PGrid<T>) -> SchrState<T> {
    let g = warp_profile(grid);
    let n = v0.len();
    let mut modes = Vec::with_capacity(grid.np * n);
    for gk in &g {
        modes.extend(v0.iter().map(|z| z * gk));
    }
    SchrState { grid: grid.clone(), n, modes, t: T::zero() }
}

pub fn mode_norms<T: Real>(state: &SchrState<T>) -> Vec<T> {
    (0..state.grid.np).map(|k| crate::scalar::vnorm(state.mode(k))).collect()
}

fn conj_symmetric<T: Real>(state: &SchrState<T>) -> bool {
    let (np, n) = (state.grid.np, state.n);
    let scale = state.modes.iter().fold(T::zero(), |m, z| m.max(cabs(*z)));
    let tol = scale * T::of(1e-13);
    for k in 1..np / 2 {
        let (a, b) = (state.mode(k), state.mode(np - k));
        for i in 0..n {
            if cabs(a[i] - b[i].conj()) > tol {
                return false;
            }
        }
    }
    state.mode(0).iter().all(|z| z.im.mag() <= tol)
}

/// Advance every mode by `exp(-i (mu_l A1 - A2) t)`.
///
/// When the generator is real and the state is conjugate-symmetric across
/// `l <-> -l` (true for a real initial vector), only `l >= 0` is propagated
/// and the other half follows by conjugation.
pub fn evolve<T: Real>(state: &SchrState<T>, pair: &HermitianPair<T>, t: T, kind: PropagatorKind) -> Result<SchrState<T>> {
    if pair.n != state.n {
        return invalid(format!("evolve: operator size {} does not match state size {}", pair.n, state.n));
    }
    let np = state.grid.np;
    let n = state.n;
    let sym = pair.real_generator && conj_symmetric(state);
    let todo: Vec<usize> = if sym { (0..=np / 2).collect() } else { (0..np).collect() };
    let results: Vec<Result<Vec<Complex<T>>>> =
        todo.par_iter().map(|&k| pair.propagate(state.grid.mu(k), t, state.mode(k), kind)).collect();
    let mut modes = vec![Complex::new(T::zero(), T::zero()); np * n];
    for (&k, r) in todo.iter().zip(results) {
        let v = r?;
        modes[k * n..(k + 1) * n].copy_from_slice(&v);
    }
    if sym {
        for k in np / 2 + 1..np {
            let src = np - k;
            for i in 0..n {
                modes[k * n + i] = modes[src * n + i].conj();
            }
        }
    }
    Ok(SchrState { grid: state.grid.clone(), n, modes, t: state.t + t })
}

/// Inverse transform to `p`-space; entry `[j * n + i]` is `w_i(p_j)`.
pub fn sample_p_space<T: Real>(state: &SchrState<T>) -> Vec<Complex<T>> {
    let (np, n) = (state.grid.np, state.n);
    let mut planner = FftPlanner::<T>::new();
    let fft = planner.plan_fft_inverse(np);
    let s = T::one() / T::of_usize(np).sqrt();
    let mut out = vec![Complex::new(T::zero(), T::zero()); np * n];
    let mut buf = vec![Complex::new(T::zero(), T::zero()); np];
    for i in 0..n {
        for k in 0..np {
            buf[k] = state.modes[k * n + i];
        }
        fft.process(&mut buf);
        for j in 0..np {
            out[j * n + i] = buf[j] * s;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reconstruction {
    /// `e^{p*} w(t, p*)` at the first grid point above `p_diamond + dp`.
    SinglePoint,
    /// `e^{p*} int_{p*}^{rp} w(t, q) dq / (1 - e^{p* - rp})`, integrating
    /// the trigonometric interpolant exactly.
    Integral,
}

/// Read `v(t)` off the warped state. Returns the vector and the `p*` used.
pub fn reconstruct<T: Real>(state: &SchrState<T>, method: Reconstruction, p_diamond: T) -> Result<(CVec<T>, T)> {
    let g = &state.grid;
    if !(p_diamond < g.rp - g.dp * T::of(2.0)) {
        return invalid(format!(
            "reconstruct: p_diamond = {} is too close to rp = {}",
            p_diamond.to_f64(),
            g.rp.to_f64()
        ));
    }
    let j = g.index_above(p_diamond + g.dp).ok_or_else(|| crate::error::Error::Invalid("reconstruct: no grid point above p_diamond".into()))?;
    let pstar = g.point(j);
    let (np, n) = (g.np, state.n);
    let s = T::one() / T::of_usize(np).sqrt();
    let weights: Vec<Complex<T>> = (0..np)
        .map(|k| match method {
            Reconstruction::SinglePoint => point_weight(g, k, j),
            Reconstruction::Integral => integral_weight(g, k, pstar),
        })
        .collect();
    let mut out = CVec::<T>::zeros(n);
    for (k, wk) in weights.iter().enumerate() {
        let m = state.mode(k);
        for i in 0..n {
            out[i] += m[i] * wk;
        }
    }
    let f = pstar.exp() * s;
    Ok((out.map(|z| z * f), pstar))
}
