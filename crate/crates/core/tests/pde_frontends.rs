mod common;

use common::*;
use qimex::imex_engine::classical_imex_solve;
use qimex::pde_frontends::*;
use qimex::scalar::{re, CVec};
use qimex::spectral_core::second_derivative_eigenvalues;
use std::sync::Arc;

fn constant(v: f64) -> TimeFn<f64> {
    Arc::new(move |_| v)
}

fn heat(d: usize, nx: usize, a: f64) -> HeatConfig<f64> {
    HeatConfig {
        d,
        nx,
        a: (0..d).map(|_| constant(a)).collect(),
        eps: 1.0,
        u0: Arc::new(|x: &[f64]| x.iter().map(|&y| (std::f64::consts::PI * y).sin()).product()),
        boundary: None,
        horizon: 0.1,
    }
}

#[test]
fn heat_one_d_layout() {
    let cfg = heat(1, 3, 2.0);
    let sys = heat_build(&cfg, 4).unwrap();
    let lam = cfg.lambda(4);
    assert!((lam - 0.025 * 16.0).abs() < 1e-14);
    let p = &sys.steps[0].p;
    assert!((p[(0, 0)].re - (1.0 + 4.0 * lam)).abs() < 1e-13);
    assert!((p[(0, 1)].re + 2.0 * lam).abs() < 1e-13);
    assert_eq!(p[(0, 2)], re(0.0));
    assert_eq!(sys.steps[0].q, ident(3));
    assert!(sys.steps[0].b.iter().all(|z| *z == re(0.0)));
}

#[test]
fn heat_two_d_spectrum_is_kronecker_sum() {
    let cfg = heat(2, 4, 1.5);
    let sys = heat_build(&cfg, 3).unwrap();
    let lam = cfg.lambda(3);
    let p = sys.steps[0].p.map(|z| z.re);
    let mut numeric: Vec<f64> = p.symmetric_eigen().eigenvalues.iter().copied().collect();
    numeric.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ev = second_derivative_eigenvalues::<f64>(4);
    let mut expect = vec![];
    for a in &ev {
        for b in &ev {
            expect.push(1.0 - lam * 1.5 * (a + b));
        }
    }
    expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (a, b) in numeric.iter().zip(&expect) {
        assert!((a - b).abs() < 1e-10 * b.abs());
    }
}

#[test]
fn heat_constant_boundary_is_a_fixed_point() {
    for d in [1, 2] {
        let mut cfg = heat(d, 5, 0.7);
        cfg.u0 = Arc::new(|_| 1.0);
        cfg.boundary = Some(Arc::new(|_, _| 1.0));
        let sys = heat_build(&cfg, 6).unwrap();
        let traj = classical_imex_solve(&sys).unwrap();
        for u in &traj.states {
            assert!(u.iter().all(|z| (z.re - 1.0).abs() < 1e-12), "d = {d}");
        }
    }
}

#[test]
fn heat_decays_monotonically() {
    let mut cfg = heat(1, 15, 1.0);
    cfg.a = vec![Arc::new(|t: f64| 100.0 / (t + 1.0))];
    let sys = heat_build(&cfg, 52).unwrap();
    let traj = classical_imex_solve(&sys).unwrap();
    for w in traj.states.windows(2) {
        assert!(norm(&w[1]) < norm(&w[0]));
    }
}

#[test]
fn heat_zero_diffusivity_freezes_state() {
    let sys = heat_build(&heat(1, 6, 0.0), 5).unwrap();
    let traj = classical_imex_solve(&sys).unwrap();
    assert!(traj.states.iter().all(|u| (u - &sys.u0).norm() < 1e-15));
}

#[test]
fn heat_validation() {
    assert!(heat_build(&heat(1, 1, 1.0), 4).is_err());
    assert!(heat_build(&heat(1, 4, -1.0), 4).is_err());
    assert!(heat_build(&heat(1, 4, 1.0), 0).is_err());
    assert!(heat_build(&heat(2, 65, 1.0), 4).is_err());
    let mut cfg = heat(2, 4, 1.0);
    cfg.a.pop();
    assert!(heat_build(&cfg, 4).is_err());
    let mut cfg = heat(1, 4, 1.0);
    cfg.a = vec![Arc::new(|t: f64| 0.05 - t)];
    assert!(heat_build(&cfg, 4).is_err());
}

#[test]
fn heat_grid_order() {
    let g = heat_grid(&heat(2, 3, 1.0));
    assert_eq!(g.len(), 9);
    assert_eq!(g[1], vec![0.25, 0.5]);
    assert_eq!(g[3], vec![0.5, 0.25]);
}

#[test]
fn steps_for_dt_rounding() {
    assert_eq!(steps_for_dt(0.1, 0.1 / 52.0).unwrap(), 52);
    assert_eq!(steps_for_dt(0.1, 0.03).unwrap(), 4);
    assert_eq!(steps_for_dt(0.1, 1.0).unwrap(), 1);
    assert!(steps_for_dt(0.1, 0.0).is_err());
}

/// Residual of the pointwise scheme with ghost values taken from the traces.
fn pointwise_residual(cfg: &TelegraphConfig<f64>, nt: usize, n: usize, new: &[f64], old: &[f64]) -> Vec<f64> {
    let m = cfg.nx;
    let (tau, h) = (cfg.tau(nt), cfg.h());
    let lam = tau / h;
    let lt = cfg.lambda_tilde(nt);
    let eps2 = cfg.eps * cfg.eps;
    let an = cfg.a_shift(nt, n);
    let tr = |i: usize, k: usize| cfg.traces[i].as_ref().map_or(0.0, |f| f(tau * k as f64));
    let ext = |w: &[f64], field: usize, k: usize| {
        let mut e = vec![tr(2 * field, k)];
        e.extend_from_slice(&w[field * m..(field + 1) * m]);
        e.push(tr(2 * field + 1, k));
        e
    };
    let (un, vn) = (ext(new, 0, n + 1), ext(new, 1, n + 1));
    let (uo, vo) = (ext(old, 0, n), ext(old, 1, n));
    let mut r = vec![0.0; 2 * m];
    for j in 1..=m {
        r[j - 1] = un[j] + lam / 2.0 * (vn[j + 1] - vn[j - 1])
            - uo[j]
            - lt / 2.0 * (uo[j + 1] - 2.0 * uo[j] + uo[j - 1]);
        r[m + j - 1] = lam * an / (2.0 * eps2) * (un[j + 1] - un[j - 1]) + (1.0 + tau / eps2) * vn[j]
            + lam / 2.0 * (uo[j + 1] - uo[j - 1])
            - vo[j]
            - lt / 2.0 * (vo[j + 1] - 2.0 * vo[j] + vo[j - 1]);
    }
    r
}

fn traced_config(form: BoundaryForm) -> TelegraphConfig<f64> {
    let mut cfg = TelegraphConfig::<f64>::example(6, 2.0, 0.1);
    cfg.traces = [
        Some(Arc::new(|t| 1.0 + t)),
        Some(Arc::new(|t| 0.5 - t)),
        Some(Arc::new(|t| 0.3 * t)),
        Some(Arc::new(|t| -0.2 + t * t)),
    ];
    cfg.form = form;
    cfg
}

#[test]
fn consistent_form_matches_pointwise_stencil() {
    let cfg = traced_config(BoundaryForm::Consistent);
    let nt = steps_for_dt(cfg.horizon, cfg.dt_rule(0.5)).unwrap();
    let sys = telegraph_build_unrescaled(&cfg, nt).unwrap();
    let mut r = rng(31);
    for n in [0, nt / 2, nt - 1] {
        let new = uniform_vec(&mut r, 12);
        let old = uniform_vec(&mut r, 12);
        let st = &sys.steps[n];
        let mat = &st.p * &new - &st.q * &old - &st.b;
        let pw = pointwise_residual(
            &cfg,
            nt,
            n,
            &new.iter().map(|z| z.re).collect::<Vec<_>>(),
            &old.iter().map(|z| z.re).collect::<Vec<_>>(),
        );
        for (a, b) in mat.iter().zip(&pw) {
            assert!((a.re - b).abs() < 1e-9 * (1.0 + b.abs()), "step {n}: {} vs {b}", a.re);
        }
    }
}

#[test]
fn forms_agree_without_traces() {
    let mut a = TelegraphConfig::<f64>::example(6, 2.0, 0.1);
    a.form = BoundaryForm::Consistent;
    let b = TelegraphConfig::<f64>::example(6, 2.0, 0.1);
    let nt = 8;
    let sa = telegraph_build_unrescaled(&a, nt).unwrap();
    let sb = telegraph_build_unrescaled(&b, nt).unwrap();
    for (x, y) in sa.steps.iter().zip(&sb.steps) {
        assert_eq!(x.p, y.p);
        assert!(x.b.iter().chain(y.b.iter()).all(|z| *z == re(0.0)));
    }
}

#[test]
fn rescaled_and_unrescaled_agree_for_constant_speed() {
    let mut cfg = traced_config(BoundaryForm::Consistent);
    cfg.a = constant(0.4);
    let nt = steps_for_dt(cfg.horizon, cfg.dt_rule(0.5)).unwrap();
    let ts = telegraph_build(&cfg, nt).unwrap();
    let raw = classical_imex_solve(&telegraph_build_unrescaled(&cfg, nt).unwrap()).unwrap();
    let scaled = classical_imex_solve(&ts.sys).unwrap();
    let pairs = ts.recover_all(&scaled.states).unwrap();
    for (w, (u, v)) in raw.states.iter().zip(&pairs) {
        let mut joined = u.clone().data.as_vec().clone();
        joined.extend_from_slice(v.as_slice());
        let j = CVec::<f64>::from_vec(joined);
        assert!((&j - w).norm() < 1e-10 * w.norm());
    }
}

#[test]
fn rescaling_symmetrises_the_convective_coupling() {
    let cfg = TelegraphConfig::<f64>::example(5, 2.0, 1e-3);
    let nt = steps_for_dt(cfg.horizon, cfg.dt_rule(0.5)).unwrap();
    let ts = telegraph_build(&cfg, nt).unwrap();
    let p = &ts.sys.steps[0].p;
    let m = 5;
    let upper = p.view((0, m), (m, m)).into_owned();
    let lower = p.view((m, 0), (m, m)).into_owned();
    // both off-diagonal blocks become (lambda/2) sqrt(A_0/tau) M_h
    let w = 0.5 * ts.lambda * (ts.a_shift[0] / ts.tau).sqrt();
    assert!(max_diff(&upper, &lower) < 1e-12 * w);
    assert!((upper[(0, 1)].re - w).abs() < 1e-12 * w);
}

#[test]
fn chi_support_layout() {
    let cfg = TelegraphConfig::<f64>::example(8, 2.0, 1e-2);
    let nt = steps_for_dt(cfg.horizon, cfg.dt_rule(0.5)).unwrap();
    let ts = telegraph_build(&cfg, nt).unwrap();
    assert_eq!(ts.chi.len(), 16 * nt);
    assert_eq!(ts.chi.iter().filter(|&&c| c).count(), 4 * (nt - 1) + 16);
    assert!(ts.chi[..16].iter().enumerate().all(|(i, &c)| c == [0, 7, 8, 15].contains(&i)));
    assert!(ts.chi[16 * (nt - 1)..].iter().all(|&c| c));
    assert_eq!(ts.k, 8f64.sqrt());
}

#[test]
fn recover_round_trip() {
    let mut r = rng(32);
    let u = uniform_vec(&mut r, 5);
    let v = uniform_vec(&mut r, 5);
    let (a, tau) = (0.3, 0.01);
    let mut w = u.clone().data.as_vec().clone();
    w.extend(v.iter().map(|z| z * re((tau / a as f64).sqrt())));
    let (u2, v2) = telegraph_recover(&CVec::<f64>::from_vec(w), a, tau).unwrap();
    assert!((&u2 - &u).norm() < 1e-15);
    assert!((&v2 - &v).norm() < 1e-14);
    assert!(telegraph_recover(&CVec::<f64>::zeros(3), a, tau).is_err());
    assert!(telegraph_recover(&CVec::<f64>::zeros(4), 0.0, tau).is_err());
}

#[test]
fn telegraph_validation() {
    let cfg = TelegraphConfig::<f64>::example(8, 2.0, 1e-2);
    assert!(telegraph_build(&cfg, 1).is_err()); // lambda_tilde > 1
    let mut bad = cfg.clone();
    bad.beta = 0.5;
    assert!(telegraph_build(&bad, 20).is_err());
    let mut bad = cfg.clone();
    bad.eps = 0.6; // a - eps^2 < 0
    assert!(telegraph_build(&bad, 20).is_err());
    let mut bad = cfg.clone();
    bad.k = Some(0.0);
    assert!(telegraph_build(&bad, 20).is_err());
    let mut bad = cfg;
    bad.nx = 1;
    assert!(telegraph_build(&bad, 20).is_err());
}

#[test]
fn manufactured_mode_solves_the_pde() {
    let m = manufactured_telegraph(0.25f64, 1e-2, 0.1, 0.5).unwrap();
    let pi = std::f64::consts::PI;
    assert!((m.eps * m.eps * m.gamma * m.gamma - m.gamma + m.a * pi * pi).abs() < 1e-12);
    // eps^2 v_t + a u_x + v = 0 at a sample point
    let (t, x, d) = (0.05, 0.3, 1e-6);
    let vt = (m.v(t + d, x) - m.v(t - d, x)) / (2.0 * d);
    let ux = (m.u(t, x + d) - m.u(t, x - d)) / (2.0 * d);
    assert!((m.eps * m.eps * vt + m.a * ux + m.v(t, x)).abs() < 1e-7);
    assert!(manufactured_telegraph(0.25f64, 1.0, 0.1, 0.5).is_err());
}

#[test]
fn order_study_first_order_for_beta_one() {
    let m = manufactured_telegraph(0.25f64, 1e-2, 0.1, 0.5).unwrap();
    let s = dissipative_order_study(&m, 1.0, &[15, 31, 63]).unwrap();
    assert!(s.monotone);
    assert_eq!(s.predicted, 1.0);
    assert!((s.slope - 1.0).abs() <= 0.25, "slope {}", s.slope);
    assert!((s.slope - loglog_slope(&s.hs, &s.errors)).abs() < 1e-12);
    assert!(dissipative_order_study(&m, 1.0, &[15, 31]).is_err());
    assert!(dissipative_order_study(&m, 1.0, &[31, 15, 63]).is_err());
}
