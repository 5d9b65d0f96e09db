mod common;

use common::*;
use proptest::prelude::*;
use qimex::imex_engine::{classical_imex_solve, ImexStep, ImexSystem};
use qimex::richardson_embed::{assemble_block_system, richardson_flow, stack_trajectory, steady_state};
use qimex::scalar::{cx, re, CMat, CVec};
use qimex::schrodingerizer::{evolve, mode_norms, warp, HermitianPair, PGrid, PropagatorKind};
use qimex::spectral_core::{hermitian_split, log_norm, matrix_exp, sym_extreme_eigs};
use qimex::evoltime_bounds::{bound_lognorm, exact_norm_curve};

fn cmat(n: usize) -> impl Strategy<Value = CMat<f64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
        .prop_map(move |v| CMat::<f64>::from_iterator(n, n, v.into_iter().map(|(a, b)| cx(a, b))))
}

fn rmat(n: usize) -> impl Strategy<Value = CMat<f64>> {
    prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| CMat::<f64>::from_iterator(n, n, v.into_iter().map(re)))
}

fn rvec(n: usize) -> impl Strategy<Value = CVec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n).prop_map(|v| CVec::<f64>::from_iterator(v.len(), v.into_iter().map(re)))
}

fn sized_cmat() -> impl Strategy<Value = CMat<f64>> {
    (1usize..6).prop_flat_map(cmat)
}

/// Small dissipative system: `P = 2I + 0.3 G/sqrt(d)`, `Q = 0.5 G'/sqrt(d)`.
fn system() -> impl Strategy<Value = ImexSystem<f64>> {
    (1usize..4, 1usize..5).prop_flat_map(|(dim, nt)| {
        let s = 1.0 / (dim as f64).sqrt();
        (prop::collection::vec((rmat(dim), rmat(dim), rvec(dim)), nt), rvec(dim)).prop_map(move |(steps, u0)| ImexSystem {
            dim,
            nt,
            tau: 0.1,
            eps: 1.0,
            u0,
            steps: steps
                .into_iter()
                .map(|(g, g2, b)| ImexStep { p: ident(dim) * re(2.0) + g * re(0.3 * s), q: g2 * re(0.5 * s), b })
                .collect(),
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn split_reassembles(a in sized_cmat()) {
        let (a1, a2) = hermitian_split(&a).unwrap();
        prop_assert!(max_diff(&(&a1 - a1.adjoint()), &(&a1 * re(0.0))) < 1e-15);
        prop_assert!(max_diff(&(&a2 - a2.adjoint()), &(&a2 * re(0.0))) < 1e-15);
        prop_assert!(max_diff(&(&a1 + a2.map(|z| z * cx(0.0, 1.0))), &a) < 1e-14);
    }

    #[test]
    fn skew_exponential_is_unitary(a in sized_cmat(), t in 0.0f64..4.0) {
        let s = &a - a.adjoint();
        let e = matrix_exp(&s, t).unwrap();
        prop_assert!(max_diff(&(e.adjoint() * &e), &ident(a.nrows())) < 1e-11);
    }

    #[test]
    fn norm_curve_below_lognorm(a in sized_cmat(), t in 0.05f64..3.0) {
        let e = exact_norm_curve(&(-a.clone()), &[t]).unwrap()[0];
        let l = bound_lognorm(&a, &[t]).unwrap()[0];
        prop_assert!(e <= l * (1.0 + 1e-10));
        prop_assert!(((log_norm(&a).unwrap() * t).exp() - l).abs() <= 1e-14 * l);
        let o = taylor_expm(&(&a * re(t)));
        let on = o.svd(false, false).singular_values.max();
        prop_assert!((e - on).abs() < 1e-9 * on.max(1.0));
    }

    #[test]
    fn steady_state_is_stacked_trajectory(sys in system()) {
        let bs = assemble_block_system(&sys).unwrap();
        let u = steady_state(&bs).unwrap();
        let traj = classical_imex_solve(&sys).unwrap();
        let st = stack_trajectory(&traj);
        prop_assert!((&u - &st).norm() < 1e-10 * st.norm().max(1.0));
    }

    #[test]
    fn flow_decays_at_dissipation_rate(sys in system(), t in 0.1f64..3.0) {
        let bs = assemble_block_system(&sys).unwrap();
        let h = bs.dense_h();
        let (lmin, _) = sym_extreme_eigs(&((&h + h.adjoint()) * re(0.5))).unwrap();
        prop_assert!(lmin > 0.0);
        let u = steady_state(&bs).unwrap();
        let zero = CVec::<f64>::zeros(bs.size());
        let v = richardson_flow(&bs, &zero, t).unwrap();
        prop_assert!((&v - &u).norm() <= (-lmin * t).exp() * u.norm() * (1.0 + 1e-9) + 1e-13);
    }

    #[test]
    fn evolution_preserves_mode_norms(a in (1usize..4).prop_flat_map(cmat), t in 0.0f64..2.0, seed in 0u64..1000) {
        let n = a.nrows();
        let mut r = rng(seed);
        let v0 = uniform_vec(&mut r, n);
        let grid = PGrid::<f64>::new(-6.0, 6.0, 32).unwrap();
        let (a1, a2) = hermitian_split(&a).unwrap();
        let pair = HermitianPair::from_dense(&a1, &a2).unwrap();
        let s0 = warp(v0.as_slice(), &grid);
        let s1 = evolve(&s0, &pair, t, PropagatorKind::Auto).unwrap();
        for (x, y) in mode_norms(&s0).iter().zip(mode_norms(&s1)) {
            prop_assert!((x - y).abs() < 1e-10 * x.max(1.0));
        }
    }

    #[test]
    fn telegraph_recover_inverts_rescaling(v in rvec(6), a in 0.01f64..2.0, tau in 1e-4f64..0.1) {
        let w = CVec::<f64>::from_iterator(6, v.iter().enumerate().map(|(i, z)| if i < 3 { *z } else { z * re((tau / a).sqrt()) }));
        let (u, vv) = qimex::pde_frontends::telegraph_recover(&w, a, tau).unwrap();
        for i in 0..3 {
            prop_assert!((u[i] - v[i]).norm() < 1e-15);
            prop_assert!((vv[i] - v[i + 3]).norm() < 1e-14);
        }
    }
}
