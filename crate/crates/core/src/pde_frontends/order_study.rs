use super::telegraph::{telegraph_build, BoundaryForm, TelegraphConfig};
use super::steps_for_dt;
use crate::error::{invalid, numerical, Result};
use crate::scalar::{CVec, Real};
use std::sync::Arc;

/// Exact decaying mode of the constant-speed telegraph system:
/// `u = e^{-g t} sin(pi x)`, `v = -(g/pi) e^{-g t} cos(pi x)` with
/// `eps^2 g^2 - g + a pi^2 = 0` (the root that stays bounded as `eps -> 0`).
#[derive(Clone, Copy, Debug)]
pub struct ManufacturedTelegraph<T: Real> {
    pub a: T,
    pub eps: T,
    pub gamma: T,
    pub horizon: T,
    /// Target `tau / h^{2-1/beta}`.
    pub lambda_tilde: T,
}

impl<T: Real> ManufacturedTelegraph<T> {
    pub fn u(&self, t: T, x: T) -> T {
        (-self.gamma * t).exp() * (T::pi() * x).sin()
    }

    pub fn v(&self, t: T, x: T) -> T {
        -(self.gamma / T::pi()) * (-self.gamma * t).exp() * (T::pi() * x).cos()
    }

    pub fn config(&self, nx: usize, beta: T) -> Result<(TelegraphConfig<T>, usize)> {
        let me = *self;
        let mut cfg = TelegraphConfig::example(nx, beta, self.eps);
        cfg.a = Arc::new(move |_| me.a);
        cfg.horizon = self.horizon;
        cfg.u0 = Arc::new(move |x| me.u(T::zero(), x));
        cfg.v0 = Arc::new(move |x| me.v(T::zero(), x));
        cfg.traces = [
            Some(Arc::new(move |t| me.u(t, T::zero()))),
            Some(Arc::new(move |t| me.u(t, T::one()))),
            Some(Arc::new(move |t| me.v(t, T::zero()))),
            Some(Arc::new(move |t| me.v(t, T::one()))),
        ];
        cfg.form = BoundaryForm::Consistent;
        let nt = steps_for_dt(self.horizon, cfg.dt_rule(self.lambda_tilde))?;
        Ok((cfg, nt))
    }
}

pub fn manufactured_telegraph<T: Real>(a: T, eps: T, horizon: T, lambda_tilde: T) -> Result<ManufacturedTelegraph<T>> {
    let pi2 = T::pi() * T::pi();
    let disc = T::one() - T::of(4.0) * eps * eps * a * pi2;
    if !(a > T::zero() && eps > T::zero() && disc > T::zero()) {
        return invalid("manufactured_telegraph: need a > 0, eps > 0 and 4 eps^2 a pi^2 < 1");
    }
    // 2 a pi^2 / (1 + sqrt(disc)) avoids the cancellation in (1 - sqrt(disc)) / (2 eps^2)
    let gamma = T::of(2.0) * a * pi2 / (T::one() + disc.sqrt());
    Ok(ManufacturedTelegraph { a, eps, gamma, horizon, lambda_tilde })
}

#[derive(Clone, Debug)]
pub struct OrderStudy<T: Real> {
    pub beta: T,
    pub nx: Vec<usize>,
    pub hs: Vec<T>,
    pub nts: Vec<usize>,
    /// `max_n sqrt(h) (||u_n - u(t_n)|| + eps ||v_n - v(t_n)||)`.
    pub errors: Vec<T>,
    /// Least-squares slope of `log error` against `log h`.
    pub slope: T,
    /// `min(2 - 1/beta, 2, 1/beta)`.
    pub predicted: T,
    /// False when some refinement failed to reduce the error.
    pub monotone: bool,
}

fn march<T: Real>(sys: &crate::imex_engine::ImexSystem<T>) -> Result<Vec<CVec<T>>> {
    let mut out = Vec::with_capacity(sys.nt + 1);
    out.push(sys.u0.clone());
    let mut lu = None;
    for (n, s) in sys.steps.iter().enumerate() {
        if n == 0 || s.p != sys.steps[n - 1].p {
            lu = Some(s.p.clone().lu());
        }
        let rhs = &s.q * out.last().unwrap() + &s.b;
        let next = lu
            .as_ref()
            .unwrap()
            .solve(&rhs)
            .ok_or_else(|| crate::Error::Numerical(format!("order study: singular P at step {n}")))?;
        out.push(next);
    }
    Ok(out)
}

/// Runs the manufactured problem on each `nx` with `tau = lambda_tilde h^{2-1/beta}`
/// and fits the observed order in `h`.
pub fn dissipative_order_study<T: Real>(m: &ManufacturedTelegraph<T>, beta: T, nx_list: &[usize]) -> Result<OrderStudy<T>> {
    if nx_list.len() < 3 {
        return invalid("dissipative_order_study: need at least 3 grid levels");
    }
    if nx_list.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("dissipative_order_study: nx levels must increase");
    }
    let (mut hs, mut nts, mut errors) = (Vec::new(), Vec::new(), Vec::new());
    for &nx in nx_list {
        let (cfg, nt) = m.config(nx, beta)?;
        let ts = telegraph_build(&cfg, nt)?;
        let states = march(&ts.sys)?;
        let pairs = ts.recover_all(&states)?;
        let grid = cfg.grid();
        let h = cfg.h();
        let mut worst = T::zero();
        for (n, (u, v)) in pairs.iter().enumerate() {
            let t = ts.tau * T::of_usize(n);
            let (mut eu, mut ev) = (T::zero(), T::zero());
            for (j, &x) in grid.iter().enumerate() {
                eu += (u[j].re - m.u(t, x)).powi(2) + u[j].im.powi(2);
                ev += (v[j].re - m.v(t, x)).powi(2) + v[j].im.powi(2);
            }
            let e = h.sqrt() * (eu.sqrt() + m.eps * ev.sqrt());
            if !e.is_finite() {
                return numerical(format!("order study: non-finite error at nx = {nx}, step {n}"));
            }
            worst = worst.max(e);
        }
        hs.push(h);
        nts.push(nt);
        errors.push(worst);
    }
    let xs: Vec<f64> = hs.iter().map(|h| h.to_f64().ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.to_f64().max(f64::MIN_POSITIVE).ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let inv = T::one() / beta;
    let predicted = (T::of(2.0) - inv).min(T::of(2.0)).min(inv);
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    Ok(OrderStudy {
        beta,
        nx: nx_list.to_vec(),
        hs,
        nts,
        errors,
        slope: T::of(sxy / sxx),
        predicted,
        monotone,
    })
}
