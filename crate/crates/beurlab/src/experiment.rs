//! Batch experiment dispatch: one flat configuration in, one deterministic
//! report out.
//!
//! Configuration-shaped problems — unknown command, unknown or malformed
//! key, unparseable expression — surface as [`Error::Config`] before
//! anything runs. Errors raised while the experiment itself runs are
//! captured into the report as an aborted verdict whose single row carries
//! the error message, so a batch driver always gets a report back for a
//! well-formed configuration.

use crate::beck::{self, RebuildMode};
use crate::config::ExperimentConfig;
use crate::error::Error;
use crate::expr::{self, Params};
use crate::flows::{make_function, tau_increment_residual, time_change, FlowFunc};
use crate::kernels::{fe_residual, EquationFuncs, EquationId, KernelKind, KernelSpec};
use crate::limits::{self, GridSpec, LimitEstimate, LimitMode};
use crate::num::Func;
use crate::popa::{suite_residuals, PopaParams, ResidualReport};
use crate::report::{Cell, ExperimentReport, Verdict};
use crate::tauberian::{
    tauberian_experiment, ConvolutionKernel, TauberianData, DEFAULT_MESH,
};
use crate::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

/// Every command the dispatcher understands.
pub const COMMANDS: [&str; 12] = [
    "popa-check",
    "kernel-check",
    "timechange",
    "tau-increment",
    "limit",
    "limsup",
    "window-limsup",
    "heiberg-seneta",
    "tauberian",
    "beck",
    "represent",
    "riesz",
];

/// Dispatch a validated configuration to its experiment and return the
/// finished report. An `Err` from this function is always a configuration
/// or usage problem; run-time failures come back as aborted reports.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match cfg.command.as_str() {
        "popa-check" => popa_check(cfg),
        "kernel-check" => kernel_check(cfg),
        "timechange" => timechange_cmd(cfg),
        "tau-increment" => tau_increment(cfg),
        "limit" => limit_cmd(cfg, "limit", LimitMode::Lim),
        "limsup" => limit_cmd(cfg, "limsup", LimitMode::Limsup),
        "window-limsup" => window_limsup(cfg),
        "heiberg-seneta" => heiberg_seneta_cmd(cfg),
        "tauberian" => tauberian_cmd(cfg),
        "beck" => beck_cmd(cfg),
        "represent" => represent_cmd(cfg),
        "riesz" => riesz_cmd(cfg),
        other => Err(Error::Config {
            what: format!(
                "unknown command `{other}` (expected one of: {})",
                COMMANDS.join(", ")
            ),
        }),
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

fn config_err(key: &str, e: Error) -> Error {
    Error::Config {
        what: format!("key `{key}`: {e}"),
    }
}

fn require_positive(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Config {
            what: format!("key `{key}`: {v} must be positive and finite"),
        })
    }
}

fn params_from(cfg: &ExperimentConfig) -> Result<Params> {
    Ok(Params {
        rho: cfg.f64_opt("rho")?,
        gamma: cfg.f64_opt("gamma")?,
    })
}

/// Resolve a flow-speed key to its compiled function plus the registry
/// text it came from, so reports can echo the text verbatim.
fn flow_from(cfg: &ExperimentConfig, key: &str, default: &str) -> Result<(FlowFunc, String)> {
    let text = cfg.str_or(key, default);
    let flow = make_function(&text, &params_from(cfg)?).map_err(|e| config_err(key, e))?;
    Ok((flow, text))
}

fn func_from(cfg: &ExperimentConfig, key: &str, default: &str) -> Result<Func> {
    let text = cfg.str_or(key, default);
    expr::compile(&text, &params_from(cfg)?).map_err(|e| config_err(key, e))
}

fn func_req(cfg: &ExperimentConfig, key: &str) -> Result<Func> {
    let text = cfg.str_req(key)?;
    expr::compile(&text, &params_from(cfg)?).map_err(|e| config_err(key, e))
}

const GRID_KEYS: [&str; 5] = ["x0", "ratio", "count", "t_grid", "delta_grid"];

fn grid_from(cfg: &ExperimentConfig) -> Result<GridSpec> {
    let d = GridSpec::default();
    let grid = GridSpec {
        x0: cfg.f64_or("x0", d.x0)?,
        ratio: cfg.f64_or("ratio", d.ratio)?,
        count: cfg.usize_or("count", d.count)?,
        t_grid: cfg.list_or("t_grid", &d.t_grid)?,
        delta_grid: cfg.list_or("delta_grid", &d.delta_grid)?,
    };
    grid.validate().map_err(|e| Error::Config {
        what: format!("grid: {e}"),
    })?;
    Ok(grid)
}

/// Run-phase error capture: a failed experiment becomes an aborted report
/// carrying the resolved configuration echo and the error message.
fn finish(
    started: Instant,
    command: &str,
    echo: &[(String, String)],
    outcome: Result<ExperimentReport>,
) -> Result<ExperimentReport> {
    match outcome {
        Ok(report) => Ok(report),
        Err(e) => {
            let mut report = ExperimentReport::new(command);
            report.config = echo.to_vec();
            let mut report = report.abort(e.to_string());
            report.stamp_runtime(started);
            Ok(report)
        }
    }
}

fn echo_pairs(pairs: &[(&str, String)]) -> Vec<(String, String)> {
    pairs
        .iter()
        .map(|(k, v)| ((*k).to_string(), v.clone()))
        .collect()
}

fn columns(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| (*s).to_string()).collect()
}

// ---------------------------------------------------------------------------
// popa-check: circle-group law residuals over seeded random triples.
// ---------------------------------------------------------------------------

fn popa_check(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.check_keys(&["rho", "samples", "seed", "range", "tol"])?;
    let started = Instant::now();
    let rho = cfg.f64_or("rho", 1.0)?;
    let samples = cfg.usize_or("samples", 1000)?;
    let seed = cfg.u64_or("seed", 17)?;
    let range = require_positive("range", cfg.f64_or("range", 10.0)?)?;
    let tol = require_positive("tol", cfg.f64_or("tol", 1e-12)?)?;
    if samples == 0 {
        return Err(Error::Config {
            what: "key `samples`: need at least one sample".into(),
        });
    }
    let group = PopaParams::new(rho).map_err(|e| config_err("rho", e))?;
    let echo = echo_pairs(&[
        ("rho", fmt(rho)),
        ("samples", samples.to_string()),
        ("seed", seed.to_string()),
        ("range", fmt(range)),
        ("tol", fmt(tol)),
    ]);

    let outcome = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut merged = ResidualReport::default();
        let mut accepted = 0usize;
        let mut attempts = 0usize;
        while accepted < samples {
            attempts += 1;
            if attempts > samples.saturating_mul(50) {
                return Err(Error::Nonconvergence {
                    what: "triple sampling kept landing on the excluded point".into(),
                });
            }
            let a = rng.gen_range(-range..range);
            let b = rng.gen_range(-range..range);
            let c = rng.gen_range(-range..range);
            match suite_residuals(&group, a, b, c) {
                Ok(r) => {
                    merged.merge(r);
                    accepted += 1;
                }
                Err(e) if e.is_domain_breach() => continue,
                Err(e) => return Err(e),
            }
        }
        let mut report = ExperimentReport::new("popa-check");
        report.config = echo.clone();
        report
            .config
            .push(("worst_rel_residual".into(), fmt(merged.worst())));
        report.columns = columns(&["law", "rel_residual", "at_a", "at_b", "status"]);
        let mut statuses = Vec::new();
        for entry in &merged.entries {
            let rel = entry.relative();
            let status = Verdict::classify(rel, tol);
            statuses.push(status);
            report.rows.push(vec![
                Cell::text(entry.label),
                Cell::Num(rel),
                Cell::Num(entry.at.0),
                Cell::Num(entry.at.1),
                Cell::text(status.name()),
            ]);
        }
        report.verdict = Verdict::fold(statuses);
        report.stamp_runtime(started);
        Ok(report)
    })();
    finish(started, "popa-check", &echo, outcome)
}

// ---------------------------------------------------------------------------
// kernel-check: functional-equation residuals of the closed-form kernels.
// ---------------------------------------------------------------------------

struct EquationSetup {
    funcs: EquationFuncs,
    /// Magnitude of the equation's dominant term at a sample, for relative
    /// residuals (clamped below by 1).
    scale: Box<dyn Fn(f64, f64) -> Result<f64>>,
}

fn equation_setup(eq: EquationId, rho: f64, gamma: f64) -> Result<EquationSetup> {
    let eta_func = |r: f64| -> Result<Func> {
        Ok(KernelSpec::new(KernelKind::Eta, r, 0.0)?.as_func())
    };
    Ok(match eq {
        EquationId::Gs => {
            let h = eta_func(rho)?;
            let probe = h.clone();
            EquationSetup {
                funcs: EquationFuncs::new().h(h),
                scale: Box::new(move |u, v| {
                    Ok((probe.eval(u)? * probe.eval(v)?).abs().max(1.0))
                }),
            }
        }
        EquationId::Bfe => {
            let eta = eta_func(rho)?;
            let probe = eta.clone();
            EquationSetup {
                funcs: EquationFuncs::new().eta(eta),
                scale: Box::new(move |u, v| {
                    Ok((probe.eval(u)? * probe.eval(v)?).abs().max(1.0))
                }),
            }
        }
        EquationId::Gfe | EquationId::Gfi => {
            let kernel = KernelSpec::new(KernelKind::HGamma, 0.0, gamma)?.as_func();
            let g = KernelSpec::new(KernelKind::ExpG, 0.0, gamma)?.as_func();
            let probe = kernel.clone();
            EquationSetup {
                funcs: EquationFuncs::new().kernel(kernel).g(g),
                scale: Box::new(move |u, v| Ok(probe.eval(u + v)?.abs().max(1.0))),
            }
        }
        EquationId::GbeP => {
            let kernel = KernelSpec::new(KernelKind::KRhoGamma, rho, gamma)?.as_func();
            let h = eta_func(rho)?;
            let g = KernelSpec::new(KernelKind::ExpG, rho, gamma)?.as_func();
            let (kp, hp) = (kernel.clone(), h.clone());
            EquationSetup {
                funcs: EquationFuncs::new()
                    .kernel(kernel.clone())
                    .kappa(kernel)
                    .h(h)
                    .g(g),
                scale: Box::new(move |u, v| {
                    Ok(kp.eval(v + u * hp.eval(v)?)?.abs().max(1.0))
                }),
            }
        }
        EquationId::GbeGroup => {
            let kernel = KernelSpec::new(KernelKind::KRhoGamma, rho, gamma)?.as_func();
            let h = eta_func(rho)?;
            let target = eta_func(rho * gamma)?;
            let (kp, hp) = (kernel.clone(), h.clone());
            EquationSetup {
                funcs: EquationFuncs::new().kernel(kernel).h(h).k(target),
                scale: Box::new(move |u, v| {
                    Ok(kp.eval(v + u * hp.eval(v)?)?.abs().max(1.0))
                }),
            }
        }
        EquationId::Cbe => {
            let f = KernelSpec::new(KernelKind::FlowRateF, rho, gamma)?.as_func();
            let h = eta_func(rho)?;
            let probe = f.clone();
            EquationSetup {
                funcs: EquationFuncs::new().f(f).h(h),
                scale: Box::new(move |u, v| {
                    Ok((probe.eval(u)? * probe.eval(v)?).abs().max(1.0))
                }),
            }
        }
    })
}

fn kernel_check(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.check_keys(&["equation", "rho", "gamma", "samples", "seed", "range", "tol"])?;
    let started = Instant::now();
    let rho = cfg.f64_or("rho", 0.5)?;
    let gamma = cfg.f64_or("gamma", 2.0)?;
    let samples = cfg.usize_or("samples", 500)?;
    let seed = cfg.u64_or("seed", 17)?;
    let range = require_positive("range", cfg.f64_or("range", 2.0)?)?;
    let tol = require_positive("tol", cfg.f64_or("tol", 1e-12)?)?;
    let eq_text = cfg.str_or("equation", "all");
    let equations: Vec<EquationId> = if eq_text == "all" {
        EquationId::all().to_vec()
    } else {
        vec![EquationId::parse(&eq_text).map_err(|e| config_err("equation", e))?]
    };
    let echo = echo_pairs(&[
        ("equation", eq_text.clone()),
        ("rho", fmt(rho)),
        ("gamma", fmt(gamma)),
        ("samples", samples.to_string()),
        ("seed", seed.to_string()),
        ("range", fmt(range)),
        ("tol", fmt(tol)),
    ]);

    let outcome = (|| {
        let mut report = ExperimentReport::new("kernel-check");
        report.config = echo.clone();
        report.columns = columns(&["equation", "worst_rel_residual", "at_u", "at_v", "status"]);
        let mut statuses = Vec::new();
        for &eq in &equations {
            let setup = equation_setup(eq, rho, gamma)?;
            // Fresh stream per equation: every equation sees the same points.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst = 0.0f64;
            let mut worst_at = (0.0, 0.0);
            for _ in 0..samples {
                let u = rng.gen_range(0.0..range);
                let v = rng.gen_range(0.0..range);
                let residual = fe_residual(eq, &setup.funcs, u, v)?;
                let rel = residual.abs() / (setup.scale)(u, v)?;
                if rel > worst {
                    worst = rel;
                    worst_at = (u, v);
                }
            }
            let status = Verdict::classify(worst, tol);
            statuses.push(status);
            report.rows.push(vec![
                Cell::text(eq.name()),
                Cell::Num(worst),
                Cell::Num(worst_at.0),
                Cell::Num(worst_at.1),
                Cell::text(status.name()),
            ]);
        }
        report.verdict = Verdict::fold(statuses);
        report.stamp_runtime(started);
        Ok(report)
    })();
    finish(started, "kernel-check", &echo, outcome)
}

// ---------------------------------------------------------------------------
// timechange: paced increments of a conjugated observable against the
// exponential-growth shape, plus the log-additivity of the conjugated speed.
// ---------------------------------------------------------------------------

fn timechange_cmd(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.check_keys(&[
        "phi", "u", "base", "y", "s_grid", "c", "tol", "log_tol", "rho", "gamma",
    ])?;
    let started = Instant::now();
    let (phi, phi_text) = flow_from(cfg, "phi", "linear:1")?;
    let rho = phi.declared_rho.ok_or_else(|| Error::Config {
        what: "key `phi`: the time-change check needs a family with a declared index".into(),
    })?;
    let u_text = cfg.str_or("u", "2*x");
    let observable = func_from(cfg, "u", "2*x")?;
    let base = require_positive("base", cfg.f64_or("base", 1.0)?)?;
    let y = cfg.f64_or("y", 20.0)?;
    let s_grid = cfg.list_or("s_grid", &[0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0])?;
    let c_given = cfg.f64_opt("c")?;
    let tol = require_positive("tol", cfg.f64_or("tol", 1e-6)?)?;
    let log_tol = require_positive("log_tol", cfg.f64_or("log_tol", 1e-9)?)?;
    let mut echo = echo_pairs(&[
        ("phi", phi_text.clone()),
        ("u", u_text),
        ("base", fmt(base)),
        ("y", fmt(y)),
        ("tol", fmt(tol)),
        ("log_tol", fmt(log_tol)),
    ]);

    let outcome = (|| {
        let (tc, conjugated) = time_change(observable, phi.clone(), base)?;
        let shape = KernelSpec::new(KernelKind::HGamma, 0.0, rho)?.as_func();
        let g_y = tc.g(y)?;
        let v_y = conjugated.eval(y)?;
        let mut paced = Vec::with_capacity(s_grid.len());
        for &s in &s_grid {
            let value = (conjugated.eval(y + s)? - v_y) / g_y;
            paced.push((s, value, shape.eval(s)?));
        }
        let (c, c_mode) = match c_given {
            Some(c) => (c, "supplied"),
            None => {
                let num: f64 = paced.iter().map(|&(_, v, h)| v * h).sum();
                let den: f64 = paced.iter().map(|&(_, _, h)| h * h).sum();
                if !(den > 0.0) {
                    return Err(Error::DegenerateFit {
                        what: "the s-grid gives no leverage to fit the pace constant".into(),
                    });
                }
                (num / den, "fitted")
            }
        };
        let mut report = ExperimentReport::new("timechange");
        echo.push(("c".into(), fmt(c)));
        echo.push(("c_mode".into(), c_mode.into()));
        report.config = echo.clone();
        report.columns = columns(&["table", "s", "value", "target", "abs_error", "status"]);
        let mut statuses = Vec::new();
        for &(s, value, h) in &paced {
            let target = c * h;
            let err = (value - target).abs();
            let status = Verdict::classify(err, tol);
            statuses.push(status);
            report.rows.push(vec![
                Cell::text("paced_increment"),
                Cell::Num(s),
                Cell::Num(value),
                Cell::Num(target),
                Cell::Num(err),
                Cell::text(status.name()),
            ]);
        }
        let log_g_y = g_y.ln();
        for &s in &s_grid {
            let value = tc.g(y + s)?.ln() - log_g_y;
            let target = rho * s;
            let err = (value - target).abs();
            let status = Verdict::classify(err, log_tol);
            statuses.push(status);
            report.rows.push(vec![
                Cell::text("log_speed"),
                Cell::Num(s),
                Cell::Num(value),
                Cell::Num(target),
                Cell::Num(err),
                Cell::text(status.name()),
            ]);
        }
        report.verdict = Verdict::fold(statuses);
        report.stamp_runtime(started);
        Ok(report)
    })();
    finish(started, "timechange", &echo, outcome)
}

// ---------------------------------------------------------------------------
// tau-increment: occupation-time increments against their limit shape.
// ---------------------------------------------------------------------------

fn tau_increment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut keys = vec!["phi", "tol", "rho", "gamma"];
    keys.extend(GRID_KEYS);
    cfg.check_keys(&keys)?;
    let started = Instant::now();
    let (phi, phi_text) = flow_from(cfg, "phi", "linear_plus_root:0.5")?;
    let grid = grid_from(cfg)?;
    let tol = require_positive("tol", cfg.f64_or("tol", 1e-9)?)?;
    let echo = echo_pairs(&[("phi", phi_text.clone()), ("tol", fmt(tol))]);

    let outcome = (|| {
        let mut report = ExperimentReport::new("tau-increment");
        report.config = echo.clone();
        report.columns = columns(&["x", "s", "residual", "abs_error", "status"]);
        let xs = grid.xs();
        let mut top_statuses = Vec::new();
        for (i, &x) in xs.iter().enumerate() {
            for &s in &grid.t_grid {
                let residual = tau_increment_residual(&phi, x, s)?;
                let err = residual.abs();
                let status = Verdict::classify(err, tol);
                if i + 1 == xs.len() {
                    top_statuses.push(status);
                }
                report.rows.push(vec![
                    Cell::Num(x),
                    Cell::Num(s),
                    Cell::Num(residual),
                    Cell::Num(err),
                    Cell::text(status.name()),
                ]);
            }
        }
        // Rows at small x are convergence data; the verdict reads the
        // largest abscissa, the best proxy for the limit.
        report.verdict = Verdict::fold(top_statuses);
        report.stamp_runtime(started);
        Ok(report)
    })();
    finish(started, "tau-increment", &echo, outcome)
}

// ---------------------------------------------------------------------------
// limit / limsup / window-limsup: paced-increment limit estimates.
// ---------------------------------------------------------------------------

fn limit_verdict(est: &LimitEstimate, expect: Option<f64>, tol: f64) -> Verdict {
    match (est.converged, expect) {
        (false, _) => Verdict::Undecided,
        (true, None) => Verdict::Pass,
        (true, Some(target)) => Verdict::classify((est.value - target).abs(), tol),
    }
}

fn estimate_report(
    command: &str,
    mut echo: Vec<(String, String)>,
    est: &LimitEstimate,
    expect: Option<f64>,
    tol: f64,
    started: Instant,
) -> ExperimentReport {
    let mut report = ExperimentReport::new(command);
    echo.push(("estimate".into(), fmt(est.value)));
    echo.push(("error_proxy".into(), fmt(est.error_proxy)));
    echo.push(("converged".into(), est.converged.to_string()));
    if let Some(target) = expect {
        echo.push(("expect".into(), fmt(target)));
    }
    report.config = echo;
    report.columns = columns(&["x", "value"]);
    for &(x, v) in &est.samples {
        report.rows.push(vec![Cell::Num(x), Cell::Num(v)]);
    }
    report.verdict = limit_verdict(est, expect, tol);
    report.stamp_runtime(started);
    report
}

fn limit_cmd(
    cfg: &ExperimentConfig,
    command: &str,
    mode: LimitMode,
) -> Result<ExperimentReport> {
    let mut keys = vec!["f", "phi", "psi", "t", "tol", "expect", "rho", "gamma"];
    keys.extend(GRID_KEYS);
    cfg.check_keys(&keys)?;
    let started = Instant::now();
    let f = func_req(cfg, "f")?;
    let (phi, phi_text) = flow_from(cfg, "phi", "linear:1")?;
    let psi_text = cfg.str_or("psi", &cfg.str_or("phi", "linear:1"));
    let psi = make_function(&psi_text, &params_from(cfg)?)
        .map_err(|e| config_err("psi", e))?
        .func;
    let t = cfg.f64_or("t", 1.0)?;
    let grid = grid_from(cfg)?;
    let tol = require_positive("tol", cfg.f64_or("tol", 1e-6)?)?;
    let expect = cfg.f64_opt("expect")?;
    let echo = echo_pairs(&[
        ("mode", mode.name().to_string()),
        ("f", f.label().to_string()),
        ("phi", phi_text.clone()),
        ("psi", psi_text),
        ("t", fmt(t)),
        ("tol", fmt(tol)),
    ]);

    let outcome = (|| {
        let est = limits::estimate_limit(&f, &phi, &psi, t, &grid, mode, tol)?;
        Ok(estimate_report(command, echo.clone(), &est, expect, tol, started))
    })();
    finish(started, command, &echo, outcome)
}

fn window_limsup(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut keys = vec!["f", "phi", "psi", "t", "tol", "expect", "rho", "gamma"];
    keys.extend(GRID_KEYS);
    cfg.check_keys(&keys)?;
    let started = Instant::now();
    let f = func_req(cfg, "f")?;
    let (phi, phi_text) = flow_from(cfg, "phi", "linear:1")?;
    let psi_text = cfg.str_or("psi", &cfg.str_or("phi", "linear:1"));
    let psi = make_function(&psi_text, &params_from(cfg)?)
        .map_err(|e| config_err("psi", e))?
        .func;
    let t = cfg.f64_or("t", 1.0)?;
    let grid = grid_from(cfg)?;
    let tol = require_positive("tol", cfg.f64_or("tol", 1e-6)?)?;
    let expect = cfg.f64_opt("expect")?;
    let echo = echo_pairs(&[
        ("mode", "window-sup".to_string()),
        ("f", f.label().to_string()),
        ("phi", phi_text.clone()),
        ("psi", psi_text),
        ("t", fmt(t)),
        ("tol", fmt(tol)),
    ]);

    let outcome = (|| {
        let est = limits::window_sup_limit(&f, &phi, &psi, t, &grid, tol)?;
        Ok(estimate_report(
            "window-limsup",
            echo.clone(),
            &est,
            expect,
            tol,
            started,
        ))
    })();
    finish(started, "window-limsup", &echo, outcome)
}

// ---------------------------------------------------------------------------
// heiberg-seneta: vanishing window suprema at shrinking shift scales.
// ---------------------------------------------------------------------------

fn heiberg_seneta_cmd(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut keys = vec!["h", "phi", "tol", "rho", "gamma"];
    keys.extend(GRID_KEYS);
    cfg.check_keys(&keys)?;
    let started = Instant::now();
    let h = func_req(cfg, "h")?;
    let (phi, phi_text) = flow_from(cfg, "phi", "linear:1")?;
    let grid = grid_from(cfg)?;
    let tol = require_positive("tol", cfg.f64_or("tol", 1e-3)?)?;
    let echo = echo_pairs(&[
        ("h", h.label().to_string()),
        ("phi", phi_text.clone()),
        ("tol", fmt(tol)),
    ]);

    let outcome = (|| {
        let out = limits::heiberg_seneta(&h, &phi, &grid, tol)?;
        let mut report = ExperimentReport::new("heiberg-seneta");
        let mut echo = echo.clone();
        echo.push(("margin".into(), fmt(out.margin)));
        echo.push(("holds".into(), out.holds.to_string()));
        if !out.skipped.is_empty() {
            let skipped: Vec<String> = out.skipped.iter().map(|s| fmt(*s)).collect();
            echo.push(("skipped_scales".into(), skipped.join(",")));
        }
        report.config = echo;
        report.columns = columns(&["scale", "window_sup"]);
        for &(scale, sup) in &out.per_scale {
            report.rows.push(vec![Cell::Num(scale), Cell::Num(sup)]);
        }
        report.verdict = if out.holds { Verdict::Pass } else { Verdict::Fail };
        report.stamp_runtime(started);
        Ok(report)
    })();
    finish(started, "heiberg-seneta", &echo, outcome)
}

// ---------------------------------------------------------------------------
// tauberian: convergence transfer between moving-average kernels.
// ---------------------------------------------------------------------------

fn parse_kernel(key: &str, text: &str) -> Result<ConvolutionKernel> {
    let wrap = |e| config_err(key, e);
    if text == "gaussian" {
        Ok(ConvolutionKernel::gaussian())
    } else if text == "triangle" {
        Ok(ConvolutionKernel::triangle())
    } else if let Some(rest) = text.strip_prefix("box:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::Config {
                what: format!("key `{key}`: box kernel syntax is box:<lo>,<hi>, got `{text}`"),
            });
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| Error::Config {
            what: format!("key `{key}`: `{}` is not a number", parts[0]),
        })?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| Error::Config {
            what: format!("key `{key}`: `{}` is not a number", parts[1]),
        })?;
        ConvolutionKernel::box_on(lo, hi).map_err(wrap)
    } else if let Some(rest) = text.strip_prefix("avg:") {
        let width: f64 = rest.trim().parse().map_err(|_| Error::Config {
            what: format!("key `{key}`: `{rest}` is not a number"),
        })?;
        ConvolutionKernel::indicator_average(width).map_err(wrap)
    } else {
        Err(Error::Config {
            what: format!(
                "key `{key}`: unknown kernel `{text}` \
                 (expected gaussian, triangle, box:<lo>,<hi>, or avg:<width>)"
            ),
        })
    }
}

fn parse_data(cfg: &ExperimentConfig, text: &str) -> Result<TauberianData> {
    if let Some(src) = text.strip_prefix("lebesgue:") {
        let f = expr::compile(src, &params_from(cfg)?).map_err(|e| config_err("data", e))?;
        Ok(TauberianData::Lebesgue(f))
    } else if let Some(src) = text.strip_prefix("stieltjes:") {
        let f = expr::compile(src, &params_from(cfg)?).map_err(|e| config_err("data", e))?;
        Ok(TauberianData::Stieltjes(f))
    } else {
        Err(Error::Config {
            what: format!(
                "key `data`: expected lebesgue:<expr> or stieltjes:<expr>, got `{text}`"
            ),
        })
    }
}

fn tauberian_cmd(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut keys = vec!["k", "g", "data", "phi", "c", "tol", "mesh", "rho", "gamma"];
    keys.extend(GRID_KEYS);
    cfg.check_keys(&keys)?;
    let started = Instant::now();
    let k = parse_kernel("k", &cfg.str_or("k", "gaussian"))?;
    let g = parse_kernel("g", &cfg.str_or("g", "triangle"))?;
    let data_text = cfg.str_or("data", "stieltjes:x");
    let data = parse_data(cfg, &data_text)?;
    let (phi, phi_text) = flow_from(cfg, "phi", "linear:1")?;
    let c_expected = cfg.f64_or("c", 1.0)?;
    let grid = grid_from(cfg)?;
    let tol = require_positive("tol", cfg.f64_or("tol", 1e-3)?)?;
    let mesh = require_positive("mesh", cfg.f64_or("mesh", DEFAULT_MESH)?)?;
    let echo = echo_pairs(&[
        ("k", cfg.str_or("k", "gaussian")),
        ("g", cfg.str_or("g", "triangle")),
        ("data", data_text),
        ("phi", phi_text.clone()),
        ("c", fmt(c_expected)),
        ("tol", fmt(tol)),
        ("mesh", fmt(mesh)),
    ]);

    let outcome = tauberian_experiment(&k, &g, &data, &phi, c_expected, &grid, tol, mesh);
    finish(started, "tauberian", &echo, outcome)
}

// ---------------------------------------------------------------------------
// beck: chains, growth envelopes, the linear recurrence, and the
// logarithmic-growth scan.
// ---------------------------------------------------------------------------

fn beck_cmd(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut keys = vec![
        "mode", "rho", "gamma", "a", "epsilon", "m_max", "phi", "x0_chain", "u", "n", "b",
        "r", "v1", "n_max", "tol", "h", "a0", "u_grid",
    ];
    keys.extend(GRID_KEYS);
    cfg.check_keys(&keys)?;
    match cfg.str_or("mode", "bounds").as_str() {
        "bounds" => beck_bounds(cfg),
        "chain" => beck_chain(cfg),
        "recurrence" => beck_recurrence(cfg),
        "log-bound" => beck_log_bound(cfg),
        other => Err(Error::Config {
            what: format!(
                "key `mode`: unknown beck mode `{other}` \
                 (expected bounds, chain, recurrence, or log-bound)"
            ),
        }),
    }
}

fn beck_bounds(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    let rho = cfg.f64_or("rho", 1.0)?;
    let a = cfg.f64_or("a", 2.0)?;
    let epsilon = cfg.f64_or("epsilon", 0.5)?;
    let m_max = cfg.usize_or("m_max", 30)? as u32;
    let echo = echo_pairs(&[
        ("mode", "bounds".to_string()),
        ("rho", fmt(rho)),
        ("a", fmt(a)),
        ("epsilon", fmt(epsilon)),
        ("m_max", m_max.to_string()),
    ]);

    let outcome = (|| {
        let gb = beck::growth_bounds(rho, a, epsilon)?;
        let mut report = ExperimentReport::new("beck");
        let mut echo = echo.clone();
        echo.push(("eta_a".into(), fmt(gb.eta_a)));
        echo.push(("delta".into(), fmt(gb.delta)));
        echo.push(("c_minus".into(), fmt(gb.c_minus)));
        echo.push(("c_plus".into(), fmt(gb.c_plus)));
        report.config = echo;
        report.columns = columns(&[
            "m",
            "lower",
            "growth_power",
            "upper",
            "log_window_lo",
            "log_window_hi",
            "status",
        ]);
        let mut statuses = Vec::new();
        for m in 1..=m_max {
            let power = gb.eta_a.powi(m as i32);
            let (lo, up) = (gb.lower(m), gb.upper(m));
            let (wlo, whi) = gb.log_sandwich(m);
            let status = if lo <= power && power <= up {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            statuses.push(status);
            report.rows.push(vec![
                Cell::Num(m as f64),
                Cell::Num(lo),
                Cell::Num(power),
                Cell::Num(up),
                Cell::Num(wlo),
                Cell::Num(whi),
                Cell::text(status.name()),
            ]);
        }
        report.verdict = Verdict::fold(statuses);
        report.stamp_runtime(started);
        Ok(report)
    })();
    finish(started, "beck", &echo, outcome)
}

fn beck_chain(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    let (phi, phi_text) = flow_from(cfg, "phi", "linear:1")?;
    // `x0` belongs to the shared grid vocabulary, so the chain start gets
    // its own key.
    let x0 = cfg.f64_or("x0_chain", 1.0)?;
    let u = cfg.f64_or("u", 1.0)?;
    let n = cfg.usize_or("n", 40)?;
    let echo = echo_pairs(&[
        ("mode", "chain".to_string()),
        ("phi", phi_text.clone()),
        ("x0_chain", fmt(x0)),
        ("u", fmt(u)),
        ("n", n.to_string()),
    ]);

    let outcome = (|| {
        let chain = beck::beck_sequence(&phi, x0, u, n)?;
        let ladder = chain.ladder()?;
        let mut report = ExperimentReport::new("beck");
        let mut echo = echo.clone();
        echo.push(("diverged".into(), chain.diverged().to_string()));
        report.config = echo;
        report.columns = columns(&["m", "value", "ladder"]);
        report
            .rows
            .push(vec![Cell::Num(0.0), Cell::Num(chain.values[0]), Cell::Num(0.0)]);
        for (m, (&value, &rung)) in chain.values[1..].iter().zip(&ladder).enumerate() {
            report
                .rows
                .push(vec![Cell::Num((m + 1) as f64), Cell::Num(value), Cell::Num(rung)]);
        }
        let increasing = chain.values.windows(2).all(|w| w[1] > w[0]);
        report.verdict = if increasing { Verdict::Pass } else { Verdict::Fail };
        report.stamp_runtime(started);
        Ok(report)
    })();
    finish(started, "beck", &echo, outcome)
}

fn beck_recurrence(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    let b = cfg.f64_or("b", 2.0)?;
    let r = cfg.f64_or("r", 3.0)?;
    let v1 = cfg.f64_or("v1", 1.0)?;
    let n_max = cfg.usize_or("n_max", 20)? as u32;
    let tol = require_positive("tol", cfg.f64_or("tol", 1e-10)?)?;
    let echo = echo_pairs(&[
        ("mode", "recurrence".to_string()),
        ("b", fmt(b)),
        ("r", fmt(r)),
        ("v1", fmt(v1)),
        ("n_max", n_max.to_string()),
        ("tol", fmt(tol)),
    ]);

    let outcome = (|| {
        if n_max < 1 {
            return Err(Error::BadParam {
                what: "n_max must be at least 1".into(),
            });
        }
        let mut report = ExperimentReport::new("beck");
        report.config = echo.clone();
        report.columns = columns(&["n", "closed_form", "iterated", "rel_error", "status"]);
        let mut statuses = Vec::new();
        let mut iterated = v1;
        for n in 1..=n_max {
            if n > 1 {
                iterated = (r.powi(n as i32 - 1) + iterated) / b;
            }
            let closed = beck::solve_recurrence(b, r, v1, n)?;
            let rel = (closed - iterated).abs() / closed.abs().max(1.0);
            let status = Verdict::classify(rel, tol);
            statuses.push(status);
            report.rows.push(vec![
                Cell::Num(n as f64),
                Cell::Num(closed),
                Cell::Num(iterated),
                Cell::Num(rel),
                Cell::text(status.name()),
            ]);
        }
        report.verdict = Verdict::fold(statuses);
        report.stamp_runtime(started);
        Ok(report)
    })();
    finish(started, "beck", &echo, outcome)
}

fn beck_log_bound(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    let h = func_from(cfg, "h", "log(x)")?;
    let (phi, phi_text) = flow_from(cfg, "phi", "linear:1")?;
    let a0 = cfg.f64_or("a0", 1.0)?;
    let grid = grid_from(cfg)?;
    let u_grid = cfg.list_or("u_grid", &[2.0, 10.0, 100.0, 1e4])?;
    let echo = echo_pairs(&[
        ("mode", "log-bound".to_string()),
        ("h", h.label().to_string()),
        ("phi", phi_text.clone()),
        ("a0", fmt(a0)),
    ]);

    let outcome = beck::log_bound_scan(&h, &phi, a0, &grid.xs(), &u_grid);
    finish(started, "beck", &echo, outcome)
}

// ---------------------------------------------------------------------------
// represent: the linear-plus-vanishing-remainder representation, both ways.
// ---------------------------------------------------------------------------

fn represent_cmd(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.check_keys(&[
        "direction", "b", "c", "e", "f", "phi", "x_grid", "u_grid", "anchor", "u0", "mode",
        "tol", "rho", "gamma",
    ])?;
    let started = Instant::now();
    match cfg.str_or("direction", "forward").as_str() {
        "forward" => {
            let b = cfg.f64_or("b", 0.0)?;
            let c = cfg.f64_or("c", 1.0)?;
            let e = func_from(cfg, "e", "0")?;
            let (phi, phi_text) = flow_from(cfg, "phi", "power:0.5")?;
            let x_grid = cfg.list_or("x_grid", &[1e2, 1e4, 1e6])?;
            let u_grid = cfg.list_or("u_grid", &[0.5, 1.0, 2.0])?;
            let tol = require_positive("tol", cfg.f64_or("tol", 0.01)?)?;
            let echo = echo_pairs(&[
                ("direction", "forward".to_string()),
                ("b", fmt(b)),
                ("c", fmt(c)),
                ("e", e.label().to_string()),
                ("phi", phi_text.clone()),
                ("tol", fmt(tol)),
            ]);
            let outcome =
                beck::representation_forward(b, c, &e, &phi, &x_grid, &u_grid, tol);
            finish(started, "represent", &echo, outcome)
        }
        "reverse" => {
            let f = func_req(cfg, "f")?;
            let c = cfg.f64_opt("c")?;
            let (phi, phi_text) = flow_from(cfg, "phi", "power:0.5")?;
            let anchor = cfg.f64_or("anchor", 100.0)?;
            let x_grid = cfg.list_or("x_grid", &[1e3, 1e4, 1e5, 1e6])?;
            let u0 = cfg.f64_or("u0", 0.01)?;
            let mode = match cfg.str_or("mode", "integral").as_str() {
                "integral" => RebuildMode::Integral,
                "chain" => RebuildMode::Chain,
                other => {
                    return Err(Error::Config {
                        what: format!(
                            "key `mode`: unknown rebuild mode `{other}` \
                             (expected integral or chain)"
                        ),
                    })
                }
            };
            let tol = require_positive("tol", cfg.f64_or("tol", 1e-3)?)?;
            let echo = echo_pairs(&[
                ("direction", "reverse".to_string()),
                ("f", f.label().to_string()),
                ("phi", phi_text.clone()),
                ("anchor", fmt(anchor)),
                ("u0", fmt(u0)),
                ("tol", fmt(tol)),
            ]);
            let outcome = beck::representation_reverse(
                &f, c, &phi, anchor, &x_grid, u0, mode, tol,
            );
            finish(started, "represent", &echo, outcome)
        }
        other => Err(Error::Config {
            what: format!(
                "key `direction`: unknown direction `{other}` (expected forward or reverse)"
            ),
        }),
    }
}

// ---------------------------------------------------------------------------
// riesz: the flow-weighted mean next to its windowed-average companion.
// ---------------------------------------------------------------------------

/// The riesz command reports both sides of the normalization question —
/// the weighted mean and the unit-window flow average — without asserting
/// their equivalence, so its verdict is always `undecided`.
fn riesz_cmd(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.check_keys(&["data", "phi", "x", "base", "rho", "gamma"])?;
    let started = Instant::now();
    let data = func_from(cfg, "data", "x")?;
    let (phi, phi_text) = flow_from(cfg, "phi", "linear:1")?;
    let x = cfg.f64_or("x", 10.0)?;
    let base = cfg.f64_or("base", 1.0)?;
    let echo = echo_pairs(&[
        ("data", data.label().to_string()),
        ("phi", phi_text.clone()),
        ("x", fmt(x)),
        ("base", fmt(base)),
        ("comparison", "reported, not judged".to_string()),
    ]);

    let outcome = (|| {
        let out = beck::riesz_mean(&data, &phi, x, base)?;
        let mut report = ExperimentReport::new("riesz");
        report.config = echo.clone();
        report.columns = columns(&["x", "weighted_mean", "weight_at_x", "window_average"]);
        report.rows.push(vec![
            Cell::Num(x),
            Cell::Num(out.mean),
            Cell::Num(out.lambda_x),
            Cell::Num(out.moving_average),
        ]);
        report.verdict = Verdict::Undecided;
        report.stamp_runtime(started);
        Ok(report)
    })();
    finish(started, "riesz", &echo, outcome)
}
