#![allow(dead_code)]

use qimex::imex_engine::{ImexStep, ImexSystem};
use qimex::scalar::{cx, re, CMat, CVec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_real(r: &mut ChaCha8Rng, n: usize, m: usize) -> CMat<f64> {
    CMat::<f64>::from_fn(n, m, |_, _| re(r.gen_range(-1.0..1.0)))
}

pub fn uniform_complex(r: &mut ChaCha8Rng, n: usize, m: usize) -> CMat<f64> {
    CMat::<f64>::from_fn(n, m, |_, _| cx(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
}

pub fn uniform_vec(r: &mut ChaCha8Rng, n: usize) -> CVec<f64> {
    CVec::<f64>::from_fn(n, |_, _| re(r.gen_range(-1.0..1.0)))
}

pub fn ident(n: usize) -> CMat<f64> {
    CMat::<f64>::identity(n, n)
}

pub fn scalar_mat(x: f64) -> CMat<f64> {
    CMat::<f64>::from_element(1, 1, re(x))
}

pub fn scalar_vec(x: f64) -> CVec<f64> {
    CVec::<f64>::from_element(1, re(x))
}

/// `P = 2I + 0.3 G/sqrt(d)`, `Q = 0.5 G'/sqrt(d)`: `min eig(sym P) - ||Q||`
/// stays above roughly 0.4 for these scalings.
pub fn dissipative_system(r: &mut ChaCha8Rng, dim: usize, nt: usize) -> ImexSystem<f64> {
    let s = 1.0 / (dim as f64).sqrt();
    let steps = (0..nt)
        .map(|_| ImexStep {
            p: ident(dim) * re(2.0) + uniform_real(r, dim, dim) * re(0.3 * s),
            q: uniform_real(r, dim, dim) * re(0.5 * s),
            b: uniform_vec(r, dim),
        })
        .collect();
    ImexSystem { dim, nt, tau: 0.1, eps: 1.0, u0: uniform_vec(r, dim), steps }
}

pub fn constant_system(p: CMat<f64>, q: CMat<f64>, b: CVec<f64>, u0: CVec<f64>, nt: usize) -> ImexSystem<f64> {
    let dim = u0.len();
    let steps = (0..nt).map(|_| ImexStep { p: p.clone(), q: q.clone(), b: b.clone() }).collect();
    ImexSystem { dim, nt, tau: 1.0 / nt as f64, eps: 1.0, u0, steps }
}

pub fn norm(v: &CVec<f64>) -> f64 {
    v.norm()
}

pub fn max_diff(a: &CMat<f64>, b: &CMat<f64>) -> f64 {
    (a - b).iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// `exp(A)` by an independent route: scale so that `||A/2^s|| <= 1/2`,
/// sum 200 Taylor terms, then square `s` times.
pub fn taylor_expm(a: &CMat<f64>) -> CMat<f64> {
    let n = a.nrows();
    let nrm = a.iter().fold(0.0, |s, z| s + z.norm_sqr()).sqrt();
    let mut s = 0;
    while nrm / 2f64.powi(s) > 0.5 {
        s += 1;
    }
    let b = a * re(1.0 / 2f64.powi(s));
    let mut term = ident(n);
    let mut sum = ident(n);
    for k in 1..200 {
        term = &term * &b * re(1.0 / k as f64);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
