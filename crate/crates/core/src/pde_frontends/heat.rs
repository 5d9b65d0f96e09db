use super::{FieldFn, SpaceTimeFn, TimeFn};
use crate::error::{invalid, Result};
use crate::imex_engine::{ImexStep, ImexSystem, MultiscaleProblem};
use crate::scalar::{re, CMat, CVec, Real};
use crate::spectral_core::{kron_sum, second_derivative_matrix};
use std::sync::Arc;

/// Largest number of unknowns per time level.
pub const HEAT_STATE_CAP: usize = 4096;

/// `du/dt = sum_k a_k(t)/eps d^2u/dx_k^2` on `(0,1)^d` with Dirichlet data.
///
/// `nx` interior points per axis, `h = 1/(nx+1)`. Unknowns are ordered with
/// axis 0 varying slowest, matching the Kronecker position of `a_k`.
#[derive(Clone)]
pub struct HeatConfig<T: Real> {
    pub d: usize,
    pub nx: usize,
    /// One diffusivity profile per axis.
    pub a: Vec<TimeFn<T>>,
    pub eps: T,
    pub u0: FieldFn<T>,
    /// Dirichlet trace; `None` is homogeneous.
    pub boundary: Option<SpaceTimeFn<T>>,
    pub horizon: T,
}

impl<T: Real> HeatConfig<T> {
    pub fn h(&self) -> T {
        T::one() / T::of_usize(self.nx + 1)
    }

    pub fn tau(&self, nt: usize) -> T {
        self.horizon / T::of_usize(nt)
    }

    /// `tau / h^2`.
    pub fn lambda(&self, nt: usize) -> T {
        let h = self.h();
        self.tau(nt) / (h * h)
    }

    pub fn state_len(&self) -> usize {
        self.nx.pow(self.d as u32)
    }

    pub fn validate(&self, nt: usize) -> Result<()> {
        if self.d == 0 || self.nx < 2 {
            return invalid("heat: need d >= 1 and nx >= 2");
        }
        if self.nx.checked_pow(self.d as u32).map_or(true, |n| n > HEAT_STATE_CAP) {
            return invalid(format!("heat: nx^d exceeds the cap of {HEAT_STATE_CAP} unknowns"));
        }
        if self.a.len() != self.d {
            return invalid(format!("heat: expected {} diffusivity profiles, got {}", self.d, self.a.len()));
        }
        if !(self.eps > T::zero() && self.horizon > T::zero()) {
            return invalid("heat: eps and horizon must be positive");
        }
        if nt == 0 {
            return invalid("heat: nt must be at least 1");
        }
        let tau = self.tau(nt);
        for n in 0..=nt {
            let t = tau * T::of_usize(n);
            for (k, a) in self.a.iter().enumerate() {
                let v = a(t);
                // a = 0 is allowed: every step is then the identity
                if !(v >= T::zero()) {
                    return invalid(format!("heat: a_{} ({}) = {} is negative", k + 1, t, v));
                }
            }
        }
        Ok(())
    }

    fn l_hd(&self, t: T) -> CMat<T> {
        let lh = second_derivative_matrix::<T>(self.nx).expect("nx >= 2 checked");
        let ops: Vec<CMat<T>> = self.a.iter().map(|a| lh.map(|z| z * re(a(t)))).collect();
        kron_sum(&ops)
    }

    /// Sum over axes of `a_k(t)` times the Dirichlet values adjacent to each
    /// interior point along axis `k`.
    fn boundary_stencil(&self, t: T) -> CVec<T> {
        let n = self.state_len();
        let mut out = CVec::<T>::zeros(n);
        let g = match &self.boundary {
            Some(g) => g,
            None => return out,
        };
        let pts = heat_grid(self);
        for (idx, x) in pts.iter().enumerate() {
            let mut s = T::zero();
            let multi = multi_index(idx, self.nx, self.d);
            for k in 0..self.d {
                let ak = self.a[k](t);
                let mut y = x.clone();
                if multi[k] == 0 {
                    y[k] = T::zero();
                    s += ak * g(t, &y);
                }
                if multi[k] == self.nx - 1 {
                    y[k] = T::one();
                    s += ak * g(t, &y);
                }
            }
            out[idx] = re(s);
        }
        out
    }
}

fn multi_index(mut idx: usize, nx: usize, d: usize) -> Vec<usize> {
    let mut m = vec![0; d];
    for k in (0..d).rev() {
        m[k] = idx % nx;
        idx /= nx;
    }
    m
}

/// Interior grid points in unknown order.
pub fn heat_grid<T: Real>(cfg: &HeatConfig<T>) -> Vec<Vec<T>> {
    let h = cfg.h();
    (0..cfg.state_len())
        .map(|idx| multi_index(idx, cfg.nx, cfg.d).into_iter().map(|i| h * T::of_usize(i + 1)).collect())
        .collect()
}

/// Fully implicit scheme `P_n = eps I - lambda L_{h,d}((a)_n)`, `Q_n = eps I`,
/// `b_n = lambda (boundary stencil at n tau)`, with `(a)_n = a(n tau)`.
pub fn heat_build<T: Real>(cfg: &HeatConfig<T>, nt: usize) -> Result<ImexSystem<T>> {
    cfg.validate(nt)?;
    let n = cfg.state_len();
    let tau = cfg.tau(nt);
    let lam = cfg.lambda(nt);
    let id = CMat::<T>::identity(n, n);
    let mut steps = Vec::with_capacity(nt);
    for k in 0..nt {
        let t = tau * T::of_usize(k);
        let p = &id * re(cfg.eps) - cfg.l_hd(t) * re(lam);
        let q = &id * re(cfg.eps);
        let b = cfg.boundary_stencil(t) * re(lam);
        steps.push(ImexStep { p, q, b });
    }
    let u0 = CVec::<T>::from_iterator(n, heat_grid(cfg).iter().map(|x| re((cfg.u0)(x))));
    let sys = ImexSystem { dim: n, nt, tau, eps: cfg.eps, u0, steps };
    sys.validate()?;
    Ok(sys)
}

/// The same scheme as a generic multiscale problem. The stiff generator is
/// lagged by one step (`L1(t) = L_{h,d}(a(t - tau))/h^2`) because the
/// generic builder samples it at `(n+1) tau`; the boundary source is
/// sampled at `n tau` there already.
pub fn heat_problem<T: Real>(cfg: &HeatConfig<T>, nt: usize) -> Result<MultiscaleProblem<T>> {
    cfg.validate(nt)?;
    let n = cfg.state_len();
    let tau = cfg.tau(nt);
    let h2 = cfg.h() * cfg.h();
    let c1 = cfg.clone();
    let c2 = cfg.clone();
    Ok(MultiscaleProblem {
        dim: n,
        eps: cfg.eps,
        horizon: cfg.horizon,
        l1: Arc::new(move |t: T| c1.l_hd((t - tau).max(T::zero())) * re(T::one() / h2)),
        l2: Arc::new(move |_| CMat::<T>::zeros(n, n)),
        b1: Arc::new(move |t: T| c2.boundary_stencil(t) * re(T::one() / h2)),
        b2: Arc::new(move |_| CVec::<T>::zeros(n)),
        u0: CVec::<T>::from_iterator(n, heat_grid(cfg).iter().map(|x| re((cfg.u0)(x)))),
    })
}
