//! First-order IMEX time stepping for `du/dt = (1/eps) L1 u + L2 u + (1/eps) b1 + b2`.
//!
//! The stiff part is implicit and the nonstiff part explicit; multiplying a
//! step through by `eps` gives `P_n u_{n+1} = Q_n u_n + b_n` with
//! `P_n = eps I - tau L1(t_{n+1})`, `Q_n = eps (I + tau L2(t_n))`,
//! `b_n = tau b1(t_n) + tau eps b2(t_n)`.

use std::sync::Arc;

use crate::error::{invalid, numerical, Result};
use crate::scalar::{vnorm, CMat, CVec, Real};
use crate::spectral_core::{log_norm, lu_solve, spectral_norm};

pub type MatFn<T> = Arc<dyn Fn(T) -> CMat<T> + Send + Sync>;
pub type VecFn<T> = Arc<dyn Fn(T) -> CVec<T> + Send + Sync>;

/// Continuous-time multiscale problem on `[0, horizon]`.
#[derive(Clone)]
pub struct MultiscaleProblem<T: Real> {
    pub dim: usize,
    pub eps: T,
    pub horizon: T,
    pub l1: MatFn<T>,
    pub l2: MatFn<T>,
    pub b1: VecFn<T>,
    pub b2: VecFn<T>,
    pub u0: CVec<T>,
}

impl<T: Real> MultiscaleProblem<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > T::zero()) {
            return invalid(format!("eps must be positive, got {}", self.eps));
        }
        if !(self.horizon > T::zero()) {
            return invalid(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.u0.len() != self.dim {
            return invalid(format!("u0 has length {}, expected {}", self.u0.len(), self.dim));
        }
        for t in [T::zero(), self.horizon] {
            let (a, b) = ((self.l1)(t), (self.l2)(t));
            if a.shape() != (self.dim, self.dim) || b.shape() != (self.dim, self.dim) {
                return invalid("L1/L2 shape does not match dim");
            }
            if (self.b1)(t).len() != self.dim || (self.b2)(t).len() != self.dim {
                return invalid("b1/b2 length does not match dim");
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ImexStep<T: Real> {
    pub p: CMat<T>,
    pub q: CMat<T>,
    pub b: CVec<T>,
}

/// The discrete recursion `P_n u_{n+1} = Q_n u_n + b_n`, `n = 0..nt-1`.
#[derive(Clone, Debug)]
pub struct ImexSystem<T: Real> {
    pub dim: usize,
    pub nt: usize,
    pub tau: T,
    pub eps: T,
    pub u0: CVec<T>,
    pub steps: Vec<ImexStep<T>>,
}

impl<T: Real> ImexSystem<T> {
    /// Checks shapes and that every `P_n` admits an LU solve.
    pub fn validate(&self) -> Result<()> {
        if self.steps.len() != self.nt || self.nt == 0 {
            return invalid(format!("system has {} steps, expected nt = {}", self.steps.len(), self.nt));
        }
        if self.u0.len() != self.dim {
            return invalid("u0 length does not match dim");
        }
        for (n, s) in self.steps.iter().enumerate() {
            if s.p.shape() != (self.dim, self.dim) || s.q.shape() != (self.dim, self.dim) || s.b.len() != self.dim {
                return invalid(format!("step {n}: block shapes do not match dim {}", self.dim));
            }
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<T> {
        (0..=self.nt).map(|n| self.tau * T::of_usize(n)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    /// `u_0, ..., u_nt`.
    pub states: Vec<CVec<T>>,
    /// `max_n ||P_n u_{n+1} - Q_n u_n - b_n|| / scale_n`.
    pub max_residual: T,
}

impl<T: Real> Trajectory<T> {
    pub fn last(&self) -> &CVec<T> {
        self.states.last().expect("non-empty trajectory")
    }
}

/// Assemble `(P_n, Q_n, b_n)` on a uniform grid of `nt` steps.
pub fn build_imex<T: Real>(problem: &MultiscaleProblem<T>, nt: usize) -> Result<ImexSystem<T>> {
    problem.validate()?;
    if nt == 0 {
        return invalid("build_imex: nt must be >= 1");
    }
    let n = problem.dim;
    let eps = problem.eps;
    let tau = problem.horizon / T::of_usize(nt);
    let id = CMat::<T>::identity(n, n);
    let mut steps = Vec::with_capacity(nt);
    for k in 0..nt {
        let tn = tau * T::of_usize(k);
        let tn1 = tau * T::of_usize(k + 1);
        let p = id.map(|z| z * eps) - (problem.l1)(tn1).map(|z| z * tau);
        let q = (&id + (problem.l2)(tn).map(|z| z * tau)).map(|z| z * eps);
        let b = (problem.b1)(tn).map(|z| z * tau) + (problem.b2)(tn).map(|z| z * (tau * eps));
        steps.push(ImexStep { p, q, b });
    }
    let sys = ImexSystem { dim: n, nt, tau, eps, u0: problem.u0.clone(), steps };
    sys.validate()?;
    Ok(sys)
}

/// Sequential solve; the classical oracle for every downstream stage.
pub fn classical_imex_solve<T: Real>(sys: &ImexSystem<T>) -> Result<Trajectory<T>> {
    sys.validate()?;
    let mut states = Vec::with_capacity(sys.nt + 1);
    states.push(sys.u0.clone());
    let mut worst = T::zero();
    for (n, s) in sys.steps.iter().enumerate() {
        let un = &states[n];
        let rhs = &s.q * un + &s.b;
        let next = lu_solve(&s.p, &rhs).map_err(|_| {
            crate::error::Error::Numerical(format!("classical_imex_solve: P_{n} is singular"))
        })?;
        let r = &s.p * &next - &rhs;
        let scale = vnorm(rhs.as_slice()) + frob_norm(&s.p) * vnorm(next.as_slice());
        if scale > T::zero() {
            let rel = vnorm(r.as_slice()) / scale;
            if rel > worst {
                worst = rel;
            }
        }
        if next.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return numerical(format!("classical_imex_solve: non-finite state at step {}", n + 1));
        }
        states.push(next);
    }
    Ok(Trajectory { times: sys.times(), states, max_residual: worst })
}

// Frobenius norm: cheap upper bound on the 2-norm, fine for residual scaling.
fn frob_norm<T: Real>(a: &CMat<T>) -> T {
    a.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt()
}

/// Finite-difference derivative constants that enter the step-count estimate.
#[derive(Clone, Debug)]
pub struct DerivativeConstants<T: Real> {
    pub u_dd: T,
    pub l2u_d: T,
    pub b1_d: T,
    pub b2_d: T,
    pub u_final: T,
}

#[derive(Clone, Debug)]
pub struct StepEstimate<T: Real> {
    /// `ceil(T/delta * (eps/2 |u''| + eps |(L2u)'| + |b1'| + eps |b2'|) / (gap |u(T)|))`.
    pub nt_simplified: usize,
    /// Smallest `nt` meeting the unsimplified error recursion bound, when it was affordable.
    pub nt_full: Option<usize>,
    pub gap: T,
    pub constants: DerivativeConstants<T>,
}

/// Number of coarse steps used to estimate derivative constants.
pub const COARSE_STEPS: usize = 32;
/// Safety factor applied to the finite-difference derivative estimates.
pub const DERIVATIVE_INFLATION: f64 = 2.0;

/// `-sup_t lambda_max((L1 + L1^H)/2)` sampled on `samples + 1` points.
pub fn dissipation_gap<T: Real>(problem: &MultiscaleProblem<T>, samples: usize) -> Result<T> {
    let mut worst = -T::max_value().unwrap();
    for k in 0..=samples {
        let t = problem.horizon * T::of_usize(k) / T::of_usize(samples.max(1));
        let mu = log_norm(&(problem.l1)(t))?;
        if mu > worst {
            worst = mu;
        }
    }
    Ok(-worst)
}

/// Largest `eps` for which `||P_n^{-1} Q_n|| < 1` is guaranteed: `gap / sup ||L2||`.
pub fn contraction_threshold<T: Real>(problem: &MultiscaleProblem<T>, samples: usize) -> Result<T> {
    let gap = dissipation_gap(problem, samples)?;
    let mut l2max = T::zero();
    for k in 0..=samples {
        let t = problem.horizon * T::of_usize(k) / T::of_usize(samples.max(1));
        let v = spectral_norm(&(problem.l2)(t));
        if v > l2max {
            l2max = v;
        }
    }
    if l2max == T::zero() {
        return Ok(T::max_value().unwrap());
    }
    Ok(gap / l2max)
}

fn derivative_constants<T: Real>(problem: &MultiscaleProblem<T>) -> Result<DerivativeConstants<T>> {
    let sys = build_imex(problem, COARSE_STEPS)?;
    let traj = classical_imex_solve(&sys)?;
    let tau = sys.tau;
    let u = &traj.states;
    let infl = T::of(DERIVATIVE_INFLATION);
    let mut u_dd = T::zero();
    for n in 1..COARSE_STEPS {
        let d = &u[n + 1] - u[n].map(|z| z * T::of(2.0)) + &u[n - 1];
        u_dd = u_dd.max(vnorm(d.as_slice()) / (tau * tau));
    }
    let (mut l2u_d, mut b1_d, mut b2_d) = (T::zero(), T::zero(), T::zero());
    let t_at = |n: usize| tau * T::of_usize(n);
    for n in 0..COARSE_STEPS {
        let a = (problem.l2)(t_at(n + 1)) * &u[n + 1] - (problem.l2)(t_at(n)) * &u[n];
        l2u_d = l2u_d.max(vnorm(a.as_slice()) / tau);
        let b = (problem.b1)(t_at(n + 1)) - (problem.b1)(t_at(n));
        b1_d = b1_d.max(vnorm(b.as_slice()) / tau);
        let c = (problem.b2)(t_at(n + 1)) - (problem.b2)(t_at(n));
        b2_d = b2_d.max(vnorm(c.as_slice()) / tau);
    }
    Ok(DerivativeConstants {
        u_dd: u_dd * infl,
        l2u_d: l2u_d * infl,
        b1_d: b1_d * infl,
        b2_d: b2_d * infl,
        u_final: vnorm(traj.last().as_slice()),
    })
}

/// Step count that keeps the global IMEX error below `delta * ||u(T)||`.
///
/// `full_dim_cap` bounds the state dimension for which the unsimplified
/// bound (which needs `||P_n^{-1}||` and `||P_n^{-1} Q_n||` at every step of
/// every trial `nt`) is evaluated.
pub fn estimate_step_count<T: Real>(
    problem: &MultiscaleProblem<T>,
    delta: T,
    full_dim_cap: usize,
) -> Result<StepEstimate<T>> {
    problem.validate()?;
    if !(delta > T::zero()) {
        return invalid("estimate_step_count: delta must be positive");
    }
    let gap = dissipation_gap(problem, COARSE_STEPS)?;
    if !(gap > T::zero()) {
        return invalid(format!("estimate_step_count: L1 is not dissipative (gap = {gap})"));
    }
    let c = derivative_constants(problem)?;
    if !(c.u_final > T::zero()) {
        return invalid("estimate_step_count: ||u(T)|| vanishes, relative target undefined");
    }
    let eps = problem.eps;
    let half = T::of(0.5);
    let numer = eps * half * c.u_dd + eps * c.l2u_d + c.b1_d + eps * c.b2_d;
    let raw = problem.horizon / delta * numer / (gap * c.u_final);
    let nt_simplified = raw.to_f64().ceil().max(1.0) as usize;
    let nt_full = if problem.dim <= full_dim_cap { full_bound_steps(problem, delta, numer, c.u_final)? } else { None };
    Ok(StepEstimate { nt_simplified, nt_full, gap, constants: c })
}

fn full_bound_holds<T: Real>(problem: &MultiscaleProblem<T>, nt: usize, delta: T, numer: T, uf: T) -> Result<bool> {
    let sys = build_imex(problem, nt)?;
    let mut pinv_max = T::zero();
    let mut contr_max = T::zero();
    for s in &sys.steps {
        let pinv = s.p.clone().try_inverse().ok_or_else(|| crate::error::Error::Numerical("P_n singular".into()))?;
        pinv_max = pinv_max.max(spectral_norm(&pinv));
        contr_max = contr_max.max(spectral_norm(&(&pinv * &s.q)));
    }
    if contr_max >= T::one() {
        return Ok(false);
    }
    let tau = sys.tau;
    let bound = pinv_max * tau * tau * numer / (T::one() - contr_max);
    Ok(bound <= delta * uf)
}

fn full_bound_steps<T: Real>(problem: &MultiscaleProblem<T>, delta: T, numer: T, uf: T) -> Result<Option<usize>> {
    const MAX_NT: usize = 1 << 20;
    let mut hi = 1usize;
    while !full_bound_holds(problem, hi, delta, numer, uf)? {
        hi *= 2;
        if hi > MAX_NT {
            return Ok(None);
        }
    }
    let mut lo = hi / 2;
    if lo == 0 {
        return Ok(Some(hi));
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if full_bound_holds(problem, mid, delta, numer, uf)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Convenience: a constant-coefficient problem `(L1, L2, b1, b2)`.
pub fn constant_problem<T: Real>(
    eps: T,
    horizon: T,
    l1: CMat<T>,
    l2: CMat<T>,
    b1: CVec<T>,
    b2: CVec<T>,
    u0: CVec<T>,
) -> MultiscaleProblem<T> {
    let dim = u0.len();
    MultiscaleProblem {
        dim,
        eps,
        horizon,
        l1: Arc::new(move |_| l1.clone()),
        l2: Arc::new(move |_| l2.clone()),
        b1: Arc::new(move |_| b1.clone()),
        b2: Arc::new(move |_| b2.clone()),
        u0,
    }
}

