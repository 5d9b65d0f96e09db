use std::sync::Arc;
use std::time::Instant;

use qimex::complexity_model::{complexity_report, heat_target_order, telegraph_branch, ComplexityReport, PhysicalBranch};
use qimex::evoltime_bounds::{
    assemble_constant_h, bound_jordan, bound_lognorm, bound_schur, build_bound_curve, exact_norm_curve,
};
use qimex::imex_engine::{classical_imex_solve, ImexSystem, Trajectory};
use qimex::pde_frontends::{
    dissipative_order_study, heat_build, heat_grid, manufactured_telegraph, steps_for_dt, telegraph_build,
    BoundaryForm, HeatConfig, TelegraphConfig, TelegraphSystem, TimeFn,
};
use qimex::richardson_embed::{assemble_block_system, build_homogeneous, decay_certificate, stack_trajectory, ChiSpec};
use qimex::scalar::{cx, re, rel_err, CMat, CVec};
use qimex::schrodingerizer::{
    build_grid, solve_schrodingerized, PDiamondRule, PGrid, PipelineOptions, PipelineResult, PropagatorKind,
    Reconstruction,
};
use qimex::spectral_core::{hermitian_split, spectral_norm, sym_extreme_eigs};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, FormName, Kind, PRuleName, PropagatorName, ReconstructionName};
use crate::expr::Expr;
use crate::table::{num, Table};

#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Numerical(String),
}

impl From<qimex::Error> for Failure {
    fn from(e: qimex::Error) -> Self {
        match e {
            qimex::Error::Invalid(m) => Failure::Invalid(m),
            qimex::Error::Numerical(m) => Failure::Numerical(m),
        }
    }
}

impl From<String> for Failure {
    fn from(m: String) -> Self {
        Failure::Invalid(m)
    }
}

type Res<T> = Result<T, Failure>;

/// Everything one run writes: CSV tables by file name and the report body.
pub struct Outcome {
    pub tables: Vec<(String, Table)>,
    pub report: Value,
}

/// A number together with the library operation that produced it.
fn m(value: f64, op: &str) -> Value {
    json!({ "value": value, "op": op })
}

fn bad<T>(msg: impl Into<String>) -> Res<T> {
    Err(Failure::Invalid(msg.into()))
}

pub fn run(cfg: &ExperimentConfig) -> Res<Outcome> {
    cfg.check_common()?;
    match cfg.kind {
        Kind::Heat1d | Kind::Heat2d | Kind::Telegraph => {
            if cfg.epsilons.is_some() {
                return bad("epsilons given for a single run; use the sweep command");
            }
            let eps = ExperimentConfig::req(cfg.epsilon, "epsilon", cfg.kind)?;
            let fr = run_frontend(cfg, cfg.kind, eps)?;
            Ok(Outcome { tables: vec![("solution.csv".into(), fr.table)], report: fr.report })
        }
        Kind::EpsilonSweep => sweep(cfg),
        Kind::ComplexityReport => complexity_only(cfg),
        Kind::EvoltimeBench => evoltime_bench(cfg),
        Kind::OrderStudy => order_study(cfg),
    }
}

fn pipeline_options(cfg: &ExperimentConfig, k: f64, chi: ChiSpec) -> PipelineOptions<f64> {
    let mut o = PipelineOptions::new(cfg.delta);
    o.k = k;
    o.chi = chi;
    if let Some(r) = cfg.reconstruction {
        o.method = match r {
            ReconstructionName::Integral => Reconstruction::Integral,
            ReconstructionName::SinglePoint => Reconstruction::SinglePoint,
        };
    }
    if let Some(r) = cfg.p_diamond_rule {
        o.p_rule = match r {
            PRuleName::Spectral => PDiamondRule::Spectral,
            PRuleName::Zero => PDiamondRule::Zero,
        };
    }
    if let Some(p) = cfg.propagator {
        o.propagator = match p {
            PropagatorName::Auto => PropagatorKind::Auto,
            PropagatorName::Eigen => PropagatorKind::Eigen,
            PropagatorName::Chebyshev => PropagatorKind::Chebyshev,
        };
    }
    if let Some(np) = cfg.np {
        o.start_np = np;
        o.max_np = np;
    } else if let Some(mx) = cfg.max_np {
        o.max_np = mx;
        o.start_np = o.start_np.min(mx);
    }
    o
}

/// Step count from exactly one of `nt`, `dt`, `dt_rule` (with `rule_dt = c -> dt`).
fn resolve_nt(cfg: &ExperimentConfig, horizon: f64, rule_dt: impl Fn(f64) -> f64) -> Res<usize> {
    let given = [cfg.nt.is_some(), cfg.dt.is_some(), cfg.dt_rule.is_some()].iter().filter(|b| **b).count();
    if given != 1 {
        return bad(format!("{}: give exactly one of nt, dt, dt_rule", cfg.kind.name()));
    }
    if let Some(nt) = cfg.nt {
        if nt == 0 {
            return bad("nt must be at least 1");
        }
        return Ok(nt);
    }
    let dt = cfg.dt.unwrap_or_else(|| rule_dt(cfg.dt_rule.unwrap()));
    Ok(steps_for_dt(horizon, dt)?)
}

fn time_fn(src: &str) -> Res<TimeFn<f64>> {
    let e = Expr::parse(src, &["t"])?;
    Ok(Arc::new(move |t| e.eval(&[t])))
}

fn heat_setup(cfg: &ExperimentConfig, kind: Kind, eps: f64) -> Res<(HeatConfig<f64>, usize)> {
    let d = if kind == Kind::Heat1d { 1 } else { 2 };
    let nx = ExperimentConfig::req(cfg.nx, "nx", kind)?;
    let horizon = ExperimentConfig::req(cfg.horizon, "horizon", kind)?;
    let a_src = cfg.a.as_ref().ok_or_else(|| format!("{}: missing required field \"a\"", kind.name()))?;
    let scale = if cfg.scale_a_by_epsilon { eps } else { 1.0 };
    let mut a: Vec<TimeFn<f64>> = vec![];
    for src in a_src.per_axis(d)? {
        let e = Expr::parse(&src, &["t"])?;
        a.push(Arc::new(move |t| scale * e.eval(&[t])));
    }
    let vars: &[&'static str] = if d == 1 { &["x"] } else { &["x", "y"] };
    let u0e = Expr::parse(ExperimentConfig::req_str(&cfg.u0, "u0", kind)?, vars)?;
    let boundary = match &cfg.boundary {
        Some(src) => {
            let bvars: &[&'static str] = if d == 1 { &["t", "x"] } else { &["t", "x", "y"] };
            let e = Expr::parse(src, bvars)?;
            Some(Arc::new(move |t: f64, x: &[f64]| {
                let mut v = vec![t];
                v.extend_from_slice(x);
                e.eval(&v)
            }) as qimex::pde_frontends::SpaceTimeFn<f64>)
        }
        None => None,
    };
    if cfg.traces.is_some() || cfg.v0.is_some() || cfg.boundary_form.is_some() {
        return bad("heat: traces, v0 and boundary_form belong to telegraph configs");
    }
    let hc = HeatConfig { d, nx, a, eps, u0: Arc::new(move |x: &[f64]| u0e.eval(x)), boundary, horizon };
    let h = hc.h();
    let nt = resolve_nt(cfg, horizon, |c| c * h * h)?;
    hc.validate(nt)?;
    Ok((hc, nt))
}

fn telegraph_setup(cfg: &ExperimentConfig, eps: f64) -> Res<(TelegraphConfig<f64>, usize)> {
    let kind = Kind::Telegraph;
    if cfg.scale_a_by_epsilon || cfg.boundary.is_some() {
        return bad("telegraph: scale_a_by_epsilon and boundary belong to heat configs");
    }
    let nx = ExperimentConfig::req(cfg.nx, "nx", kind)?;
    let beta = ExperimentConfig::req(cfg.beta, "beta", kind)?;
    let horizon = ExperimentConfig::req(cfg.horizon, "horizon", kind)?;
    let a_src = match &cfg.a {
        Some(crate::config::OneOrMany::One(s)) => s.clone(),
        _ => return bad("telegraph: \"a\" must be one formula in t"),
    };
    let a = time_fn(&a_src)?;
    let a0 = a(0.0) - eps * eps;
    let u0e = Expr::parse(ExperimentConfig::req_str(&cfg.u0, "u0", kind)?, &["x"])?;
    let v0e = Expr::parse(ExperimentConfig::req_str(&cfg.v0, "v0", kind)?, &["x", "a0", "eps"])?;
    let tr = cfg.traces.clone().unwrap_or_default();
    let opt = |s: &Option<String>| -> Res<Option<TimeFn<f64>>> { s.as_deref().map(time_fn).transpose() };
    let traces = [opt(&tr.u_left)?, opt(&tr.u_right)?, opt(&tr.v_left)?, opt(&tr.v_right)?];
    let form = match cfg.boundary_form {
        Some(FormName::Consistent) => BoundaryForm::Consistent,
        _ => BoundaryForm::Displayed,
    };
    let tc = TelegraphConfig {
        nx,
        beta,
        a,
        eps,
        u0: Arc::new(move |x| u0e.eval(&[x])),
        v0: Arc::new(move |x| v0e.eval(&[x, a0, eps])),
        traces,
        k: cfg.k,
        horizon,
        form,
    };
    let nt = resolve_nt(cfg, horizon, |c| tc.dt_rule(c))?;
    tc.validate(nt)?;
    Ok((tc, nt))
}

/// Result of one heat or telegraph pipeline run.
pub struct FrontendRun {
    pub nt: usize,
    pub error: f64,
    pub error_single: f64,
    pub error_integral: f64,
    pub error_final: f64,
    pub t_evol: f64,
    pub table: Table,
    pub report: Value,
}

fn pipeline_section(r: &PipelineResult<f64>) -> Value {
    let rep = &r.run.grid_report;
    json!({
        "t_evol": m(r.t_evol, "richardson_embed::decay_certificate"),
        "weyl_bound": m(r.certificate.weyl_bound, "spectral_core::weyl_gap_bound"),
        "lambda_min_h1": r.certificate.lambda_min_h1.map(|v| m(v, "spectral_core::sym_extreme_eigs")),
        "norm_bound": m(r.certificate.norm_bound, "spectral_core::block_norm_bound"),
        "delta_ss": r.certificate.delta_ss,
        "certificate_warning": r.certificate.warn,
        "a1_range": [r.run.a1_range.0, r.run.a1_range.1],
        "p_diamond": m(r.run.p_diamond, "schrodingerizer::run_embedding"),
        "p_star": r.run.p_star,
        "p_grid": {
            "lp": r.run.grid.lp, "rp": r.run.grid.rp, "np": r.run.grid.np,
            "refinement": rep.refinement.iter().map(|(n, c)| json!([n, c])).collect::<Vec<_>>(),
            "truncation_single": m(rep.truncation_single, "schrodingerizer::build_grid_for_flow"),
            "truncation_integral": m(rep.truncation_integral, "schrodingerizer::build_grid_for_flow"),
            "reach": rep.reach,
        },
        "mode_norm_drift": m(r.run.norm_drift, "schrodingerizer::mode_norms"),
        "total_norm_drift": r.run.total_drift,
        "embedding_size": r.embed_size,
        "hamiltonian_nnz": r.run.pair_nnz,
        "hamiltonian_row_sparsity": r.run.pair_sparsity,
        "method": format!("{:?}", r.method),
        "elapsed_s": r.elapsed.as_secs_f64(),
    })
}

fn complexity_section(c: &ComplexityReport<f64>) -> Value {
    let op = "complexity_model::complexity_report";
    json!({
        "label": c.label,
        "sparsity": c.s,
        "hmax": m(c.hmax, op),
        "hmax_exact": m(c.hmax_exact, "complexity_model::schr_hmax_and_sparsity"),
        "t_evol": c.t_evol,
        "chi_berry": m(c.chi_berry, "complexity_model::berry_queries"),
        "queries": m(c.queries, "complexity_model::berry_queries"),
        "berry_flagged": c.berry_flagged,
        "repetitions_full": m(c.reps_full, "complexity_model::repetition_counts"),
        "repetitions_final": m(c.reps_final, "complexity_model::repetition_counts"),
        "source_free": c.source_free,
        "success_probability": m(c.success_prob, "complexity_model::success_probability"),
        "p_diamond": c.p_diamond,
        "np": c.np,
        "register_width": c.register_width,
        "composite": m(c.composite, op),
    })
}

fn branch_section(b: &PhysicalBranch<f64>) -> Value {
    let op = "complexity_model::telegraph_branch";
    json!({
        "lambda_phys_formula": m(b.lam_phys_formula, op),
        "lambda_phys_numeric": b.lam_phys_numeric,
        "overlap": b.overlap,
        "remainder_norm": b.remainder_norm,
        "coupling": m(b.coupling, op),
        "k": b.k,
        "k_required": m(b.k_required, op),
        "first_order": b.first_order,
        "homogeneous_branch_numeric": b.homo_phys_numeric,
        "homogeneous_overlap": b.homo_overlap,
        "chi_norm_sq": b.chi_norm_sq,
        "u_norm": b.u_norm,
        "g_k_required": m(b.g_k, op),
        "g_k_used": m(b.g_k_used, op),
        "success_probability": b.success_prob,
        "diagnostic": b.diagnostic,
    })
}

fn final_block(stacked: &CVec<f64>, dim: usize) -> CVec<f64> {
    stacked.rows(0, dim).into_owned()
}

fn run_frontend(cfg: &ExperimentConfig, kind: Kind, eps: f64) -> Res<FrontendRun> {
    let start = Instant::now();
    match kind {
        Kind::Heat1d | Kind::Heat2d => {
            let (hc, nt) = heat_setup(cfg, kind, eps)?;
            let sys = heat_build(&hc, nt)?;
            let oracle = classical_imex_solve(&sys)?;
            let opts = pipeline_options(cfg, cfg.k.unwrap_or(1.0), ChiSpec::Auto);
            let r = solve_schrodingerized(&sys, &opts)?;
            let (errs, cx_rep) = compare(&sys, &oracle, &r, cfg.delta)?;
            let pts = heat_grid(&hc);
            let q = r.trajectory(sys.dim);
            let d = hc.d;
            let mut header = vec!["n".to_string(), "t".into(), "x".into()];
            if d == 2 {
                header.push("y".into());
            }
            header.extend(["u_classical".into(), "u_quantum".into()]);
            let mut table = Table::new(header);
            for n in 0..=nt {
                let uq = if n == 0 { &sys.u0 } else { &q[n - 1] };
                for (i, x) in pts.iter().enumerate() {
                    let mut row = vec![n.to_string(), num(oracle.times[n])];
                    row.extend(x.iter().map(|v| num(*v)));
                    row.push(num(oracle.states[n][i].re));
                    row.push(num(uq[i].re));
                    table.push(row);
                }
            }
            let report = json!({
                "problem": {
                    "kind": kind.name(), "d": d, "nx": hc.nx, "nt": nt, "epsilon": eps,
                    "tau": sys.tau, "h": hc.h(), "lambda": m(hc.lambda(nt), "pde_frontends::HeatConfig::lambda"),
                },
                "metrics": errs.json(),
                "certificates": pipeline_section(&r),
                "complexity": cx_rep,
                "target_order": m(heat_target_order(hc.nx, cfg.delta), "complexity_model::heat_target_order"),
                "wall_clock_s": start.elapsed().as_secs_f64(),
                "operations": ["pde_frontends::heat_build", "imex_engine::classical_imex_solve", "schrodingerizer::solve_schrodingerized"],
            });
            Ok(errs.into_run(nt, r.t_evol, table, report))
        }
        Kind::Telegraph => {
            let (tc, nt) = telegraph_setup(cfg, eps)?;
            let ts = telegraph_build(&tc, nt)?;
            let oracle = classical_imex_solve(&ts.sys)?;
            let opts = pipeline_options(cfg, ts.k, ChiSpec::Explicit(ts.chi.clone()));
            let r = solve_schrodingerized(&ts.sys, &opts)?;
            let classical = ts.recover_all(&oracle.states)?;
            let dim = ts.sys.dim;
            let blocks = |s: &CVec<f64>| -> Vec<CVec<f64>> { (0..nt).rev().map(|k| s.rows(k * dim, dim).into_owned()).collect() };
            let err_of = |s: &CVec<f64>| -> Res<(f64, f64)> {
                let qs = blocks(s);
                let (mut num_, mut den, mut nf, mut df) = (0.0, 0.0, 0.0, 0.0);
                for n in 1..=nt {
                    let (uq, vq) = qimex::pde_frontends::telegraph_recover(&qs[n - 1], ts.a_shift[n], ts.tau)?;
                    let (uc, vc) = &classical[n];
                    let e = (uc - &uq).norm_squared() + (vc - &vq).norm_squared();
                    let c = uc.norm_squared() + vc.norm_squared();
                    num_ += e;
                    den += c;
                    if n == nt {
                        nf = e;
                        df = c;
                    }
                }
                Ok(((num_ / den).sqrt(), (nf / df).sqrt()))
            };
            let (ei, fi) = err_of(&r.stacked_integral)?;
            let (es, fs) = err_of(&r.stacked_single)?;
            let (error, error_final) = match r.method {
                Reconstruction::Integral => (ei, fi),
                Reconstruction::SinglePoint => (es, fs),
            };
            let errs = Errors { error, error_single: es, error_integral: ei, error_final };
            let cr = complexity_report(&ts.sys, &oracle, &r.run.grid, r.t_evol, cfg.delta, r.run.p_diamond)?;
            let branch = telegraph_branch(&ts, None)?;
            let q = blocks(r.stacked());
            let mut table = Table::new(
                ["n", "t", "x", "u_classical", "u_quantum", "v_classical", "v_quantum"].map(String::from).to_vec(),
            );
            let grid = tc.grid();
            for n in 0..=nt {
                let (uc, vc) = &classical[n];
                let (uq, vq) = if n == 0 { classical[0].clone() } else { ts_recover(&ts, &q[n - 1], n)? };
                for (i, x) in grid.iter().enumerate() {
                    table.push(vec![
                        n.to_string(),
                        num(oracle.times[n]),
                        num(*x),
                        num(uc[i].re),
                        num(uq[i].re),
                        num(vc[i].re),
                        num(vq[i].re),
                    ]);
                }
            }
            let report = json!({
                "problem": {
                    "kind": "telegraph", "nx": tc.nx, "nt": nt, "epsilon": eps, "beta": tc.beta,
                    "tau": ts.tau, "h": ts.h, "lambda": ts.lambda,
                    "lambda_tilde": m(ts.lambda_tilde, "pde_frontends::TelegraphConfig::lambda_tilde"),
                    "k": ts.k, "chi_size": ts.chi.iter().filter(|c| **c).count(),
                    "boundary_form": format!("{:?}", tc.form),
                },
                "metrics": errs.json(),
                "certificates": pipeline_section(&r),
                "complexity": complexity_section(&cr),
                "physical_branch": branch_section(&branch),
                "wall_clock_s": start.elapsed().as_secs_f64(),
                "operations": ["pde_frontends::telegraph_build", "imex_engine::classical_imex_solve", "schrodingerizer::solve_schrodingerized", "pde_frontends::telegraph_recover"],
            });
            Ok(errs.into_run(nt, r.t_evol, table, report))
        }
        _ => bad(format!("{} is not a single-problem kind", kind.name())),
    }
}

fn ts_recover(ts: &TelegraphSystem<f64>, w: &CVec<f64>, n: usize) -> Res<(CVec<f64>, CVec<f64>)> {
    Ok(qimex::pde_frontends::telegraph_recover(w, ts.a_shift[n], ts.tau)?)
}

struct Errors {
    error: f64,
    error_single: f64,
    error_integral: f64,
    error_final: f64,
}

impl Errors {
    fn json(&self) -> Value {
        let op = "scalar::rel_err(solve_schrodingerized, classical_imex_solve)";
        json!({
            "rel_l2_error": m(self.error, op),
            "rel_l2_error_single_point": m(self.error_single, op),
            "rel_l2_error_integral": m(self.error_integral, op),
            "rel_l2_error_final_time": m(self.error_final, op),
            "single_vs_integral": (self.error_single - self.error_integral).abs(),
        })
    }

    fn into_run(self, nt: usize, t_evol: f64, table: Table, report: Value) -> FrontendRun {
        FrontendRun {
            nt,
            error: self.error,
            error_single: self.error_single,
            error_integral: self.error_integral,
            error_final: self.error_final,
            t_evol,
            table,
            report,
        }
    }
}

/// Trajectory errors for a directly stacked system, plus its complexity report.
fn compare(
    sys: &ImexSystem<f64>,
    oracle: &Trajectory<f64>,
    r: &PipelineResult<f64>,
    delta: f64,
) -> Res<(Errors, Value)> {
    let stacked = stack_trajectory(oracle);
    let ei = rel_err(r.stacked_integral.as_slice(), stacked.as_slice());
    let es = rel_err(r.stacked_single.as_slice(), stacked.as_slice());
    let fin = final_block(&stacked, sys.dim);
    let fq = final_block(r.stacked(), sys.dim);
    let ef = rel_err(fq.as_slice(), fin.as_slice());
    let error = match r.method {
        Reconstruction::Integral => ei,
        Reconstruction::SinglePoint => es,
    };
    let cr = complexity_report(sys, oracle, &r.run.grid, r.t_evol, delta, r.run.p_diamond)?;
    Ok((Errors { error, error_single: es, error_integral: ei, error_final: ef }, complexity_section(&cr)))
}

pub fn sweep(cfg: &ExperimentConfig) -> Res<Outcome> {
    cfg.check_common()?;
    let base = if cfg.kind == Kind::EpsilonSweep {
        ExperimentConfig::req(cfg.base, "base", cfg.kind)?
    } else {
        cfg.kind
    };
    if !base.is_frontend() {
        return bad(format!("cannot sweep epsilon for kind {}", base.name()));
    }
    if cfg.epsilon.is_some() {
        return bad("sweep: use \"epsilons\", not \"epsilon\"");
    }
    let eps = cfg.epsilons.clone().ok_or_else(|| "sweep: missing required field \"epsilons\"".to_string())?;
    if eps.len() < 2 {
        return bad(format!("sweep: need at least 2 epsilon values, got {}", eps.len()));
    }
    let runs: Vec<Res<FrontendRun>> = eps.par_iter().map(|&e| run_frontend(cfg, base, e)).collect();
    let runs: Vec<FrontendRun> = runs.into_iter().collect::<Res<_>>()?;
    let spread = |v: &[f64]| {
        let hi = v.iter().cloned().fold(f64::MIN, f64::max);
        let lo = v.iter().cloned().fold(f64::MAX, f64::min);
        (hi - lo, if hi > 0.0 { (hi - lo) / hi } else { 0.0 })
    };
    let errs: Vec<f64> = runs.iter().map(|r| r.error).collect();
    let nts: Vec<f64> = runs.iter().map(|r| r.nt as f64).collect();
    let (err_abs, err_rel) = spread(&errs);
    let (nt_abs, nt_rel) = spread(&nts);
    let mut table = Table::new(
        ["epsilon", "nt", "t_evol", "rel_l2_error", "rel_l2_error_single_point", "rel_l2_error_integral", "rel_l2_error_final_time"]
            .map(String::from)
            .to_vec(),
    );
    for (e, r) in eps.iter().zip(&runs) {
        table.push(vec![
            num(*e),
            r.nt.to_string(),
            num(r.t_evol),
            num(r.error),
            num(r.error_single),
            num(r.error_integral),
            num(r.error_final),
        ]);
    }
    let mut tables = vec![("sweep.csv".to_string(), table)];
    let mut per = vec![];
    for (i, (e, r)) in eps.iter().zip(runs).enumerate() {
        tables.push((format!("eps_{i}/solution.csv"), r.table));
        per.push(json!({ "epsilon": e, "report": r.report }));
    }
    let report = json!({
        "base": base.name(),
        "epsilons": eps,
        "aggregate": {
            "error_spread": m(err_abs, "max - min of rel_l2_error over epsilon"),
            "error_relative_spread": err_rel,
            "nt_spread": nt_abs,
            "nt_relative_spread": nt_rel,
            "error_spread_within_2_delta": err_abs <= 2.0 * cfg.delta,
        },
        "runs": per,
    });
    Ok(Outcome { tables, report })
}

fn complexity_only(cfg: &ExperimentConfig) -> Res<Outcome> {
    let base = ExperimentConfig::req(cfg.base, "base", cfg.kind)?;
    if !base.is_frontend() {
        return bad("complexity-report: base must be heat1d, heat2d or telegraph");
    }
    let eps = ExperimentConfig::req(cfg.epsilon, "epsilon", cfg.kind)?;
    let (sys, chi, k, extra) = match base {
        Kind::Telegraph => {
            let (tc, nt) = telegraph_setup(cfg, eps)?;
            let ts = telegraph_build(&tc, nt)?;
            let b = telegraph_branch(&ts, None)?;
            (ts.sys.clone(), ChiSpec::Explicit(ts.chi.clone()), ts.k, json!({ "physical_branch": branch_section(&b) }))
        }
        _ => {
            let (hc, nt) = heat_setup(cfg, base, eps)?;
            let sys = heat_build(&hc, nt)?;
            let order = heat_target_order(hc.nx, cfg.delta);
            (sys, ChiSpec::Auto, cfg.k.unwrap_or(1.0), json!({ "target_order": m(order, "complexity_model::heat_target_order") }))
        }
    };
    let oracle = classical_imex_solve(&sys)?;
    let bs = assemble_block_system(&sys)?;
    let cert = decay_certificate(&bs, cfg.delta / 3.0)?;
    let emb = build_homogeneous(&bs, k, &chi, None, cert.t_evol)?;
    let (a1, _) = hermitian_split(&emb.generator)?;
    let (_, lmax) = sym_extreme_eigs(&a1)?;
    let p_diamond = match cfg.p_diamond_rule {
        Some(PRuleName::Zero) => 0.0,
        _ => (lmax * cert.t_evol).max(0.0),
    };
    let mut grid = build_grid(cfg.delta / 3.0, p_diamond)?;
    if let Some(np) = cfg.np {
        grid = PGrid::new(grid.lp, grid.rp, np)?;
    }
    let cr = complexity_report(&sys, &oracle, &grid, cert.t_evol, cfg.delta, p_diamond)?;
    let mut table = Table::new(["quantity", "value", "op"].map(String::from).to_vec());
    let c = &cr;
    let rows: [(&str, f64, &str); 11] = [
        ("sparsity", c.s as f64, "schr_hmax_and_sparsity"),
        ("hmax", c.hmax, "schr_hmax_and_sparsity"),
        ("hmax_exact", c.hmax_exact, "schr_hmax_and_sparsity"),
        ("t_evol", c.t_evol, "decay_certificate"),
        ("chi_berry", c.chi_berry, "berry_queries"),
        ("queries", c.queries, "berry_queries"),
        ("repetitions_full", c.reps_full, "repetition_counts"),
        ("repetitions_final", c.reps_final, "repetition_counts"),
        ("success_probability", c.success_prob, "success_probability"),
        ("np", c.np as f64, "build_grid"),
        ("composite", c.composite, "complexity_report"),
    ];
    for (name, v, op) in rows {
        table.push(vec![name.into(), num(v), op.into()]);
    }
    let report = json!({
        "base": base.name(),
        "problem": { "dim": sys.dim, "nt": sys.nt, "tau": sys.tau, "epsilon": eps },
        "certificates": {
            "t_evol": m(cert.t_evol, "richardson_embed::decay_certificate"),
            "weyl_bound": cert.weyl_bound,
            "lambda_min_h1": cert.lambda_min_h1,
            "certificate_warning": cert.warn,
            "p_diamond": p_diamond,
            "lambda_max_a1": lmax,
        },
        "complexity": complexity_section(&cr),
        "extra": extra,
        "operations": ["complexity_model::complexity_report", "richardson_embed::build_homogeneous"],
    });
    Ok(Outcome { tables: vec![("bounds.csv".into(), table)], report })
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, scale: f64, shift: f64) -> CMat<f64> {
    CMat::from_fn(n, n, |i, j| re(scale * rng.gen_range(-1.0..1.0) + if i == j { shift } else { 0.0 }))
}

fn evoltime_bench(cfg: &ExperimentConfig) -> Res<Outcome> {
    let seed = cfg.seed.unwrap_or(0);
    let count = cfg.matrices.unwrap_or(10);
    let dim = cfg.dim.unwrap_or(4);
    let nt = cfg.nt.unwrap_or(3);
    let ts = cfg.times.clone().unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
    let remark = cfg.remark_a.clone().unwrap_or_else(|| vec![8.0]);
    if !(1..=8).contains(&dim) || !(1..=6).contains(&nt) {
        return bad("evoltime-bench: need 1 <= dim <= 8 and 1 <= nt <= 6");
    }
    if ts.is_empty() || ts.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return bad("evoltime-bench: times must be non-negative");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = 1.0 / (dim as f64).sqrt();
    let pairs: Vec<(CMat<f64>, CMat<f64>)> =
        (0..count).map(|_| (random_matrix(&mut rng, dim, s, 2.0), random_matrix(&mut rng, dim, 0.5 * s, 0.0))).collect();
    let curves: Vec<Res<_>> = pairs
        .par_iter()
        .map(|(p, q)| {
            let c = build_bound_curve(p, q, nt, &ts)?;
            let h = assemble_constant_h(p, q, nt)?.to_dense();
            Ok((c, spectral_norm(&h)))
        })
        .collect();
    let mut table = Table::new(
        ["case", "t", "exact", "exp_alpha", "lognorm", "jordan", "schur", "laplace_timeordered", "exp_norm"]
            .map(String::from)
            .to_vec(),
    );
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    let mut worst = f64::MIN;
    let mut chain_violations = 0usize;
    let mut summaries = vec![];
    for (i, c) in curves.into_iter().enumerate() {
        let (c, hnorm) = c?;
        worst = worst.max(c.worst_violation());
        for (k, &t) in c.ts.iter().enumerate() {
            let ea = (c.lambda * t).exp();
            let en = (hnorm * t).exp();
            let slack = 1e-8;
            if ea > c.exact[k] + slack || c.exact[k] > c.lognorm[k] + slack || c.lognorm[k] > en + slack {
                chain_violations += 1;
            }
            table.push(vec![
                format!("random-{i}"),
                num(t),
                num(c.exact[k]),
                num(ea),
                num(c.lognorm[k]),
                opt(c.jordan.as_ref().map(|j| j[k])),
                num(c.schur[k]),
                num(c.laplace_timeordered[k]),
                num(en),
            ]);
        }
        summaries.push(json!({
            "case": format!("random-{i}"), "kappa": c.kappa, "alpha": c.alpha, "n_norm": c.n_norm, "lambda": c.lambda,
        }));
    }
    let mut crossover = vec![];
    for &a in &remark {
        let am = CMat::from_row_slice(2, 2, &[cx(-1.0, 0.0), cx(a, 0.0), cx(0.0, 0.0), cx(-2.0, 0.0)]);
        let exact = exact_norm_curve(&(-am.clone()), &ts)?;
        let ln = bound_lognorm(&am, &ts)?;
        let jo = bound_jordan(&am, &ts)?;
        let sc = bound_schur(&am, &ts)?;
        let an = spectral_norm(&am);
        for (k, &t) in ts.iter().enumerate() {
            let j = jo.as_ref().map(|v| v[k]);
            crossover.push(json!({ "a": a, "t": t, "jordan_below_lognorm": j.map(|v| v < ln[k]) }));
            table.push(vec![
                format!("remark-a{a}"),
                num(t),
                num(exact[k]),
                num((-t).exp()),
                num(ln[k]),
                opt(j),
                num(sc[k]),
                String::new(),
                num((an * t).exp()),
            ]);
        }
    }
    let report = json!({
        "seed": seed,
        "matrices": count, "dim": dim, "nt": nt, "times": ts,
        "metrics": {
            "worst_bound_violation": m(worst, "evoltime_bounds::BoundCurve::worst_violation"),
            "chain_violations": chain_violations,
            "remark_crossover": crossover,
        },
        "cases": summaries,
        "operations": ["evoltime_bounds::build_bound_curve", "evoltime_bounds::exact_norm_curve", "evoltime_bounds::bound_jordan"],
    });
    Ok(Outcome { tables: vec![("bounds.csv".into(), table)], report })
}

fn order_study(cfg: &ExperimentConfig) -> Res<Outcome> {
    let kind = cfg.kind;
    let eps = ExperimentConfig::req(cfg.epsilon, "epsilon", kind)?;
    let horizon = ExperimentConfig::req(cfg.horizon, "horizon", kind)?;
    let lt = ExperimentConfig::req(cfg.dt_rule, "dt_rule", kind)?;
    let a = match &cfg.a {
        Some(crate::config::OneOrMany::One(s)) => Expr::parse(s, &[])?.eval(&[]),
        _ => return bad("order-study: \"a\" must be one constant formula"),
    };
    let betas = cfg.betas.clone().ok_or_else(|| "order-study: missing required field \"betas\"".to_string())?;
    let nxs = cfg.nx_list.clone().ok_or_else(|| "order-study: missing required field \"nx_list\"".to_string())?;
    let mt = manufactured_telegraph(a, eps, horizon, lt)?;
    let studies: Vec<Res<_>> = betas.par_iter().map(|&b| Ok(dissipative_order_study(&mt, b, &nxs)?)).collect();
    let mut table = Table::new(["beta", "nx", "h", "nt", "error"].map(String::from).to_vec());
    let mut per = vec![];
    for s in studies {
        let s = s?;
        for i in 0..s.nx.len() {
            table.push(vec![num(s.beta), s.nx[i].to_string(), num(s.hs[i]), s.nts[i].to_string(), num(s.errors[i])]);
        }
        per.push(json!({
            "beta": s.beta,
            "slope": m(s.slope, "pde_frontends::dissipative_order_study"),
            "predicted": s.predicted,
            "monotone": s.monotone,
            "within_quarter": (s.slope - s.predicted).abs() <= 0.25,
        }));
    }
    let report = json!({
        "problem": { "a": a, "epsilon": eps, "horizon": horizon, "lambda_tilde": lt, "gamma": mt.gamma },
        "studies": per,
        "operations": ["pde_frontends::manufactured_telegraph", "pde_frontends::dissipative_order_study"],
    });
    Ok(Outcome { tables: vec![("study.csv".into(), table)], report })
}
