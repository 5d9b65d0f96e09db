use super::TimeFn;
use crate::error::{invalid, Result};
use crate::imex_engine::{ImexStep, ImexSystem};
use crate::scalar::{re, CMat, CVec, Real};
use crate::spectral_core::{central_difference_matrix, second_derivative_matrix};
use std::sync::Arc;

/// Which boundary source to assemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryForm {
    /// The block source exactly as displayed with the rescaled scheme: both
    /// boundary vectors of the `u` equation at `n+1` with the diffusive
    /// weight, and the diffusive weight on the explicit convective trace.
    Displayed,
    /// The source implied by the pointwise stencil: explicit diffusion
    /// traces at `n`, convective traces weighted by `tau/(2h)`.
    Consistent,
}

/// `u_t + v_x = 0`, `eps^2 v_t + a(t) u_x = -v` on `(0,1)`, discretised by
/// the IMEX scheme with artificial viscosity `h^{1/beta}/2`.
#[derive(Clone)]
pub struct TelegraphConfig<T: Real> {
    /// Interior unknowns per field; `h = 1/(nx+1)`.
    pub nx: usize,
    pub beta: T,
    pub a: TimeFn<T>,
    pub eps: T,
    pub u0: Arc<dyn Fn(T) -> T + Send + Sync>,
    pub v0: Arc<dyn Fn(T) -> T + Send + Sync>,
    /// Dirichlet traces `u(t,0)`, `u(t,1)`, `v(t,0)`, `v(t,1)`; `None` is zero.
    pub traces: [Option<TimeFn<T>>; 4],
    /// Source normalisation; `None` is `sqrt(nx)`.
    pub k: Option<T>,
    pub horizon: T,
    pub form: BoundaryForm,
}

impl<T: Real> TelegraphConfig<T> {
    /// Data of the published telegraph example: `a(t) = 0.5 t + 0.25`,
    /// `u0 = sin(pi x)`, well-prepared `v0 = -A_0 u0'`, zero traces, `T = 0.1`.
    pub fn example(nx: usize, beta: T, eps: T) -> Self {
        let a0 = T::of(0.25) - eps * eps;
        TelegraphConfig {
            nx,
            beta,
            a: Arc::new(|t: T| T::of(0.5) * t + T::of(0.25)),
            eps,
            u0: Arc::new(|x: T| (T::pi() * x).sin()),
            v0: Arc::new(move |x: T| -a0 * T::pi() * (T::pi() * x).cos()),
            traces: [None, None, None, None],
            k: None,
            horizon: T::of(0.1),
            form: BoundaryForm::Displayed,
        }
    }

    pub fn h(&self) -> T {
        T::one() / T::of_usize(self.nx + 1)
    }

    pub fn tau(&self, nt: usize) -> T {
        self.horizon / T::of_usize(nt)
    }

    /// `tau / h`.
    pub fn lambda(&self, nt: usize) -> T {
        self.tau(nt) / self.h()
    }

    /// `tau / h^{2 - 1/beta}`.
    pub fn lambda_tilde(&self, nt: usize) -> T {
        self.tau(nt) / self.h().powf(T::of(2.0) - T::one() / self.beta)
    }

    /// Step from the rule `dt = c h^{2 - 1/beta}`.
    pub fn dt_rule(&self, c: T) -> T {
        c * self.h().powf(T::of(2.0) - T::one() / self.beta)
    }

    pub fn k_value(&self) -> T {
        self.k.unwrap_or_else(|| T::of_usize(self.nx).sqrt())
    }

    /// `A_n = a(n tau) - eps^2`.
    pub fn a_shift(&self, nt: usize, n: usize) -> T {
        (self.a)(self.tau(nt) * T::of_usize(n)) - self.eps * self.eps
    }

    pub fn grid(&self) -> Vec<T> {
        (1..=self.nx).map(|j| self.h() * T::of_usize(j)).collect()
    }

    fn trace(&self, i: usize, t: T) -> T {
        self.traces[i].as_ref().map_or(T::zero(), |f| f(t))
    }

    pub fn validate(&self, nt: usize) -> Result<()> {
        if self.nx < 2 || nt == 0 {
            return invalid("telegraph: need nx >= 2 and nt >= 1");
        }
        if !(self.beta >= T::one()) {
            return invalid("telegraph: beta must be >= 1");
        }
        if !(self.eps > T::zero() && self.horizon > T::zero()) {
            return invalid("telegraph: eps and horizon must be positive");
        }
        if !(self.k_value() > T::zero()) {
            return invalid("telegraph: K must be positive");
        }
        let lt = self.lambda_tilde(nt);
        if !(lt > T::zero() && lt < T::one()) {
            return invalid(format!("telegraph: lambda_tilde = {lt} must lie in (0,1)"));
        }
        for n in 0..=nt {
            let an = self.a_shift(nt, n);
            if !(an > T::zero()) {
                return invalid(format!("telegraph: A_{n} = a - eps^2 = {an} is not positive"));
            }
        }
        Ok(())
    }

    /// Boundary vectors `(b1, b2, c1, c2)` at time level `n`.
    fn boundary_vectors(&self, nt: usize, n: usize) -> [CVec<T>; 4] {
        let t = self.tau(nt) * T::of_usize(n);
        let (ul, ur, vl, vr) = (self.trace(0, t), self.trace(1, t), self.trace(2, t), self.trace(3, t));
        let m = self.nx;
        let edge = |first: T, last: T| {
            let mut v = CVec::<T>::zeros(m);
            v[0] = re(first);
            v[m - 1] += re(last);
            v
        };
        [edge(ul, ur), edge(-ul, ur), edge(vl, vr), edge(-vl, vr)]
    }

    /// Unscaled `(P_n, Q_n, b_n)` acting on `w = [u; v]`.
    fn unscaled_step(&self, nt: usize, n: usize, lh: &CMat<T>, mh: &CMat<T>) -> (CMat<T>, CMat<T>, CVec<T>) {
        let m = self.nx;
        let eps2 = self.eps * self.eps;
        let tau = self.tau(nt);
        let lam = self.lambda(nt);
        let lt = self.lambda_tilde(nt);
        let an = self.a_shift(nt, n);
        let id = CMat::<T>::identity(m, m);
        let half = T::of(0.5);
        let diff = &id + lh * re(lt * half);
        let mut p = CMat::<T>::zeros(2 * m, 2 * m);
        p.view_mut((0, 0), (m, m)).copy_from(&id);
        p.view_mut((0, m), (m, m)).copy_from(&(mh * re(lam * half)));
        p.view_mut((m, 0), (m, m)).copy_from(&(mh * re(lam * an * half / eps2)));
        p.view_mut((m, m), (m, m)).copy_from(&(&id * re(T::one() + tau / eps2)));
        let mut q = CMat::<T>::zeros(2 * m, 2 * m);
        q.view_mut((0, 0), (m, m)).copy_from(&diff);
        q.view_mut((m, 0), (m, m)).copy_from(&(mh * re(-lam * half)));
        q.view_mut((m, m), (m, m)).copy_from(&diff);
        let [b1n, b2n, c1n, _] = self.boundary_vectors(nt, n);
        let [b1m, b2m, _, c2m] = self.boundary_vectors(nt, n + 1);
        let relax = b2m * re(-lam * an * half / eps2);
        let (upper, lower) = match self.form {
            BoundaryForm::Displayed => ((b1m - c2m) * re(lt * half), (b2n - c1n) * re(-lt * half) + relax),
            BoundaryForm::Consistent => (
                b1n * re(lt * half) - c2m * re(lam * half),
                b2n * re(-lam * half) + c1n * re(lt * half) + relax,
            ),
        };
        let mut b = CVec::<T>::zeros(2 * m);
        b.rows_mut(0, m).copy_from(&upper);
        b.rows_mut(m, m).copy_from(&lower);
        (p, q, b)
    }
}

/// Rescaled telegraph system and the data needed to undo the rescaling.
#[derive(Clone, Debug)]
pub struct TelegraphSystem<T: Real> {
    pub sys: ImexSystem<T>,
    pub nx: usize,
    pub h: T,
    pub tau: T,
    pub lambda: T,
    pub lambda_tilde: T,
    /// `A_n`, `n = 0..=nt`.
    pub a_shift: Vec<T>,
    pub k: T,
    /// Auxiliary support over the stacked unknowns: the four boundary
    /// entries of every block plus the whole block of the first step.
    pub chi: Vec<bool>,
}

impl<T: Real> TelegraphSystem<T> {
    /// `(u_n, v_n)` for `n = 0..=nt` from rescaled states.
    pub fn recover_all(&self, states: &[CVec<T>]) -> Result<Vec<(CVec<T>, CVec<T>)>> {
        states.iter().enumerate().map(|(n, w)| telegraph_recover(w, self.a_shift[n], self.tau)).collect()
    }
}

/// `P^_n = S_n P_n T_n`, `Q^_n = S_n Q_n T_n`, `b^_n = S_n b_n` with
/// `S_n = diag(I, eps^2/sqrt(tau A_n) I)`, `T_n = diag(I, sqrt(A_n/tau) I)`,
/// and `w^_0 = [u0; sqrt(tau/A_0) v0]`.
pub fn telegraph_build<T: Real>(cfg: &TelegraphConfig<T>, nt: usize) -> Result<TelegraphSystem<T>> {
    cfg.validate(nt)?;
    let m = cfg.nx;
    let lh = second_derivative_matrix::<T>(m)?;
    let mh = central_difference_matrix::<T>(m)?;
    let tau = cfg.tau(nt);
    let eps2 = cfg.eps * cfg.eps;
    let mut steps = Vec::with_capacity(nt);
    for n in 0..nt {
        let (p, q, b) = cfg.unscaled_step(nt, n, &lh, &mh);
        let an = cfg.a_shift(nt, n);
        let s_low = eps2 / (tau * an).sqrt();
        let t_low = (an / tau).sqrt();
        let scale = |mut a: CMat<T>| {
            for i in m..2 * m {
                for j in 0..2 * m {
                    a[(i, j)] *= re(s_low);
                }
            }
            for j in m..2 * m {
                for i in 0..2 * m {
                    a[(i, j)] *= re(t_low);
                }
            }
            a
        };
        let mut bh = b;
        for i in m..2 * m {
            bh[i] *= re(s_low);
        }
        steps.push(ImexStep { p: scale(p), q: scale(q), b: bh });
    }
    let a0 = cfg.a_shift(nt, 0);
    let grid = cfg.grid();
    let mut w0 = CVec::<T>::zeros(2 * m);
    for (j, &x) in grid.iter().enumerate() {
        w0[j] = re((cfg.u0)(x));
        w0[m + j] = re((cfg.v0)(x) * (tau / a0).sqrt());
    }
    let sys = ImexSystem { dim: 2 * m, nt, tau, eps: cfg.eps, u0: w0, steps };
    sys.validate()?;
    let mut chi = vec![false; 2 * m * nt];
    for blk in 0..nt {
        let base = blk * 2 * m;
        if blk == nt - 1 {
            chi[base..base + 2 * m].iter_mut().for_each(|c| *c = true);
        } else {
            for off in [0, m - 1, m, 2 * m - 1] {
                chi[base + off] = true;
            }
        }
    }
    Ok(TelegraphSystem {
        sys,
        nx: m,
        h: cfg.h(),
        tau,
        lambda: cfg.lambda(nt),
        lambda_tilde: cfg.lambda_tilde(nt),
        a_shift: (0..=nt).map(|n| cfg.a_shift(nt, n)).collect(),
        k: cfg.k_value(),
        chi,
    })
}

/// The scheme on `w = [u; v]` before rescaling.
pub fn telegraph_build_unrescaled<T: Real>(cfg: &TelegraphConfig<T>, nt: usize) -> Result<ImexSystem<T>> {
    cfg.validate(nt)?;
    let m = cfg.nx;
    let lh = second_derivative_matrix::<T>(m)?;
    let mh = central_difference_matrix::<T>(m)?;
    let steps = (0..nt)
        .map(|n| {
            let (p, q, b) = cfg.unscaled_step(nt, n, &lh, &mh);
            ImexStep { p, q, b }
        })
        .collect();
    let grid = cfg.grid();
    let mut w0 = CVec::<T>::zeros(2 * m);
    for (j, &x) in grid.iter().enumerate() {
        w0[j] = re((cfg.u0)(x));
        w0[m + j] = re((cfg.v0)(x));
    }
    let sys = ImexSystem { dim: 2 * m, nt, tau: cfg.tau(nt), eps: cfg.eps, u0: w0, steps };
    sys.validate()?;
    Ok(sys)
}

/// `u = upper half`, `v = sqrt(A_n/tau) lower half`.
pub fn telegraph_recover<T: Real>(w_hat: &CVec<T>, a_n: T, tau: T) -> Result<(CVec<T>, CVec<T>)> {
    if w_hat.len() % 2 != 0 {
        return invalid(format!("telegraph_recover: odd length {}", w_hat.len()));
    }
    if !(a_n > T::zero() && tau > T::zero()) {
        return invalid("telegraph_recover: A_n and tau must be positive");
    }
    let m = w_hat.len() / 2;
    let u = w_hat.rows(0, m).into_owned();
    let v = w_hat.rows(m, m) * re((a_n / tau).sqrt());
    Ok((u, v))
}
