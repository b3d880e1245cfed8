//! Limit estimation for normalized increment ratios
//! `(F(x + t·φ(x)) − F(x)) / ψ(x)` along geometric `x`-grids: pointwise and
//! windowed (sup/inf) estimates, shrinking-band right limits, uniformity
//! reports, slope/profile fits, and three-valued membership classification.
//!
//! Every estimator reports a [`LimitEstimate`] whose `converged` flag is a
//! conservative certificate: the error proxy (difference of the last two grid
//! values) must sit below the caller's tolerance *and* the proxy sequence must
//! be non-increasing over the final three grid points.  A single non-monotone
//! step flips the flag instead of raising an error, so "did not converge" is
//! always an inspectable outcome rather than an exception.

use std::fmt;

use crate::error::{Error, Result};
use crate::flows::FlowFunc;
use crate::num::{self, Func};
use crate::popa::PopaParams;

/// Samples per decade when a windowed extreme (sup or inf) is taken over `x`.
pub const WINDOW_SAMPLES: usize = 64;

/// Samples per shift band when an extreme is taken over `s` in a band.
pub const BAND_SAMPLES: usize = 33;

/// Geometric evaluation grid: `x`-decades `x0·ratio^k`, a set of shifts `t`,
/// and a strictly decreasing ladder of band widths for shrinking-window
/// estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// First grid abscissa (must be positive).
    pub x0: f64,
    /// Geometric step between grid abscissae (must exceed 1).
    pub ratio: f64,
    /// Number of grid abscissae.
    pub count: usize,
    /// Shift values fed to fits and scans.
    pub t_grid: Vec<f64>,
    /// Band widths for shrinking-window estimates, strictly decreasing.
    pub delta_grid: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x0: 100.0,
            ratio: 10.0,
            count: 5,
            t_grid: vec![0.5, 1.0, 2.0],
            delta_grid: vec![0.5, 0.25, 0.1, 0.05, 0.02],
        }
    }
}

impl GridSpec {
    /// Checks finiteness and ordering constraints on all grid components.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::BadParam { what });
        if !self.x0.is_finite() || self.x0 <= 0.0 {
            return bad(format!("grid x0 must be positive and finite, got {}", self.x0));
        }
        if !self.ratio.is_finite() || self.ratio <= 1.0 {
            return bad(format!("grid ratio must exceed 1, got {}", self.ratio));
        }
        if self.count == 0 {
            return bad("grid count must be at least 1".into());
        }
        let top = self.x0 * self.ratio.powi(self.count as i32 - 1);
        if !top.is_finite() {
            return bad(format!(
                "top of the x-grid overflows: x0 = {}, ratio = {}, count = {}",
                self.x0, self.ratio, self.count
            ));
        }
        if self.t_grid.is_empty() || self.t_grid.iter().any(|t| !t.is_finite()) {
            return bad("t-grid must be a non-empty list of finite shifts".into());
        }
        if self.delta_grid.len() < 2 {
            return bad("delta-grid needs at least two band widths for the shrink trend".into());
        }
        if self.delta_grid.iter().any(|d| !d.is_finite() || *d <= 0.0) {
            return bad("delta-grid entries must be positive and finite".into());
        }
        if self.delta_grid.windows(2).any(|w| w[1] >= w[0]) {
            return bad("delta-grid must be strictly decreasing".into());
        }
        Ok(())
    }

    /// The `k`-th grid abscissa `x0·ratio^k`.
    pub fn x_at(&self, k: usize) -> f64 {
        self.x0 * self.ratio.powi(k as i32)
    }

    /// All grid abscissae in increasing order.
    pub fn xs(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.x_at(k)).collect()
    }

    /// Log-spaced samples covering the decade `[x_k, x_k·ratio)`.
    fn window(&self, k: usize) -> Vec<f64> {
        let x = self.x_at(k);
        (0..WINDOW_SAMPLES)
            .map(|j| x * self.ratio.powf(j as f64 / WINDOW_SAMPLES as f64))
            .collect()
    }
}

/// Evenly spaced samples of the half-open shift band `[lo, hi)`.
fn band(lo: f64, hi: f64) -> Vec<f64> {
    (0..BAND_SAMPLES)
        .map(|j| lo + (hi - lo) * j as f64 / BAND_SAMPLES as f64)
        .collect()
}

/// Which limiting value of the increment ratio to estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitMode {
    /// Extrapolated limit along the sparse grid abscissae.
    Lim,
    /// Extrapolated per-decade window suprema.
    Limsup,
    /// Extrapolated per-decade window infima.
    Liminf,
}

impl LimitMode {
    pub fn name(self) -> &'static str {
        match self {
            LimitMode::Lim => "lim",
            LimitMode::Limsup => "limsup",
            LimitMode::Liminf => "liminf",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lim" => Ok(LimitMode::Lim),
            "limsup" => Ok(LimitMode::Limsup),
            "liminf" => Ok(LimitMode::Liminf),
            _ => Err(Error::Config {
                what: format!("unknown limit mode `{s}` (expected lim, limsup, or liminf)"),
            }),
        }
    }
}

impl fmt::Display for LimitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Three-valued verdict for membership-style questions: numerics can certify
/// an answer in either direction or decline to answer, but an undecided
/// outcome is never collapsed into a failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict3 {
    Yes,
    No,
    Undecided,
}

impl Verdict3 {
    pub fn name(self) -> &'static str {
        match self {
            Verdict3::Yes => "yes",
            Verdict3::No => "no",
            Verdict3::Undecided => "undecided",
        }
    }
}

impl fmt::Display for Verdict3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of a limit estimation: the extrapolated value, a difference-based
/// error proxy, a conservative convergence certificate, and the per-grid-point
/// samples that produced it.
#[derive(Debug, Clone)]
pub struct LimitEstimate {
    /// Extrapolated limiting value.
    pub value: f64,
    /// `|last − previous|` over the sample sequence (or the band-trend fit
    /// residual for shrinking-band estimates, whichever is larger).
    pub error_proxy: f64,
    /// True only when the proxy is below tolerance and the gap sequence is
    /// non-increasing over the final three grid points.
    pub converged: bool,
    /// `(abscissa, value)` pairs underlying the extrapolation.
    pub samples: Vec<(f64, f64)>,
}

/// Extrapolates a sample course and applies the convergence certificate.
fn settle(samples: Vec<(f64, f64)>, tol: f64) -> LimitEstimate {
    let vals: Vec<f64> = samples.iter().map(|&(_, v)| v).collect();
    let value = num::extrapolate(&vals);
    let error_proxy = num::last_gap(&vals);
    let slack = 1e-12 * value.abs().max(1.0);
    let converged = value.is_finite()
        && error_proxy.is_finite()
        && error_proxy <= tol
        && num::gaps_shrinking(&vals, slack);
    LimitEstimate { value, error_proxy, converged, samples }
}

/// Normalized increment ratio `(F(x + t·φ(x)) − F(x)) / ψ(x)`.
pub fn delta_ratio(f: &Func, phi: &FlowFunc, psi: &Func, x: f64, t: f64) -> Result<f64> {
    let step = phi.eval(x)?;
    let denom = psi.eval(x)?;
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::domain(format!(
            "normalizer {} vanishes or is not finite at x = {x}",
            psi.label()
        )));
    }
    Ok((f.eval(x + t * step)? - f.eval(x)?) / denom)
}

/// Rejects shifts at or below the group boundary `-1/ρ` when the auxiliary
/// function carries a declared index.
fn guard_shift(phi: &FlowFunc, t: f64) -> Result<()> {
    if !t.is_finite() {
        return Err(Error::BadParam { what: format!("shift must be finite, got {t}") });
    }
    if let Some(rho) = phi.declared_rho {
        if rho > 0.0 && t <= -1.0 / rho {
            return Err(Error::domain(format!(
                "shift t = {t} lies at or below the excluded point -1/rho = {}",
                -1.0 / rho
            )));
        }
    }
    Ok(())
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::BadParam { what: format!("tolerance must be positive, got {tol}") });
    }
    Ok(())
}

fn fold_extreme(vals: &[f64], upper: bool) -> f64 {
    let pick: fn(f64, f64) -> f64 = if upper { f64::max } else { f64::min };
    let seed = if upper { f64::NEG_INFINITY } else { f64::INFINITY };
    vals.iter().copied().fold(seed, pick)
}

/// Per-decade window extrema of the increment ratio at a fixed shift.
fn window_course(
    f: &Func,
    phi: &FlowFunc,
    psi: &Func,
    t: f64,
    grid: &GridSpec,
    upper: bool,
) -> Result<Vec<(f64, f64)>> {
    let mut samples = Vec::with_capacity(grid.count);
    for k in 0..grid.count {
        let xs = grid.window(k);
        let vals: Result<Vec<f64>> =
            num::par_map_ordered(&xs, |&x| delta_ratio(f, phi, psi, x, t))
                .into_iter()
                .collect();
        samples.push((grid.x_at(k), fold_extreme(&vals?, upper)));
    }
    Ok(samples)
}

/// Estimates the limiting increment ratio at shift `t` along the grid.
///
/// `Lim` extrapolates the ratio sampled at the sparse grid abscissae;
/// `Limsup`/`Liminf` first take per-decade window extrema
/// ([`WINDOW_SAMPLES`] log-spaced points per decade) and extrapolate those.
/// Non-convergence is reported through the `converged` flag, never as an
/// error.
pub fn estimate_limit(
    f: &Func,
    phi: &FlowFunc,
    psi: &Func,
    t: f64,
    grid: &GridSpec,
    mode: LimitMode,
    tol: f64,
) -> Result<LimitEstimate> {
    grid.validate()?;
    guard_shift(phi, t)?;
    check_tol(tol)?;
    let samples = match mode {
        LimitMode::Lim => {
            let xs = grid.xs();
            let vals: Result<Vec<f64>> =
                num::par_map_ordered(&xs, |&x| delta_ratio(f, phi, psi, x, t))
                    .into_iter()
                    .collect();
            xs.into_iter().zip(vals?).collect()
        }
        LimitMode::Limsup => window_course(f, phi, psi, t, grid, true)?,
        LimitMode::Liminf => window_course(f, phi, psi, t, grid, false)?,
    };
    Ok(settle(samples, tol))
}

/// Windowed extreme of increment ratios when the shift ranges over the fixed
/// band `[s_lo, s_hi)`: per decade, the extreme over a
/// [`WINDOW_SAMPLES`] × [`BAND_SAMPLES`] lattice of `(x, s)` pairs, with the
/// decade extrema extrapolated across the `x`-grid.
#[allow(clippy::too_many_arguments)]
pub fn band_extreme_limit(
    f: &Func,
    phi: &FlowFunc,
    psi: &Func,
    s_lo: f64,
    s_hi: f64,
    grid: &GridSpec,
    upper: bool,
    tol: f64,
) -> Result<LimitEstimate> {
    grid.validate()?;
    check_tol(tol)?;
    if !(s_hi > s_lo) {
        return Err(Error::BadParam {
            what: format!("shift band must have positive width, got [{s_lo}, {s_hi})"),
        });
    }
    guard_shift(phi, s_lo)?;
    let ss = band(s_lo, s_hi);
    let pick: fn(f64, f64) -> f64 = if upper { f64::max } else { f64::min };
    let seed = if upper { f64::NEG_INFINITY } else { f64::INFINITY };
    let mut samples = Vec::with_capacity(grid.count);
    for k in 0..grid.count {
        let xs = grid.window(k);
        let vals: Result<Vec<f64>> = num::par_map_ordered(&xs, |&x| {
            let step = phi.eval(x)?;
            let denom = psi.eval(x)?;
            if denom == 0.0 || !denom.is_finite() {
                return Err(Error::domain(format!(
                    "normalizer {} vanishes or is not finite at x = {x}",
                    psi.label()
                )));
            }
            let fx = f.eval(x)?;
            let mut w = seed;
            for &s in &ss {
                w = pick(w, (f.eval(x + s * step)? - fx) / denom);
            }
            Ok(w)
        })
        .into_iter()
        .collect();
        samples.push((grid.x_at(k), fold_extreme(&vals?, upper)));
    }
    Ok(settle(samples, tol))
}

/// Shared scaffold for shrinking-band estimates: evaluates the windowed
/// extreme on each band width, then extrapolates the band trend linearly to
/// width zero using the three smallest widths.  `symmetric` selects bands
/// `[t−δ, t+δ)` instead of right bands `[t, t+δ)`.
#[allow(clippy::too_many_arguments)]
fn band_trend(
    f: &Func,
    phi: &FlowFunc,
    psi: &Func,
    t: f64,
    grid: &GridSpec,
    upper: bool,
    symmetric: bool,
    tol: f64,
) -> Result<LimitEstimate> {
    grid.validate()?;
    check_tol(tol)?;
    guard_shift(phi, t)?;
    let mut dsamples: Vec<(f64, f64)> = Vec::with_capacity(grid.delta_grid.len());
    let mut inner_ok = true;
    let mut inner_proxy: f64 = 0.0;
    for &d in &grid.delta_grid {
        let mut lo = if symmetric { t - d } else { t };
        if symmetric {
            // Intersect the band with the group domain so that symmetric
            // windows near the boundary stay evaluable.
            if let Some(rho) = phi.declared_rho {
                if rho > 0.0 {
                    let floor = -1.0 / rho;
                    lo = lo.max(floor + (1e-9 * floor.abs()).max(1e-12));
                }
            }
        }
        let hi = t + d;
        if !(hi > lo) {
            return Err(Error::domain(format!(
                "band [{lo}, {hi}) around t = {t} collapses under the domain constraint"
            )));
        }
        let est = band_extreme_limit(f, phi, psi, lo, hi, grid, upper, tol)?;
        inner_ok &= est.converged;
        inner_proxy = inner_proxy.max(est.error_proxy);
        dsamples.push((d, est.value));
    }
    let tail = &dsamples[dsamples.len().saturating_sub(3)..];
    let ds: Vec<f64> = tail.iter().map(|&(d, _)| d).collect();
    let vs: Vec<f64> = tail.iter().map(|&(_, v)| v).collect();
    let (value, fit_resid) = match num::linear_fit(&ds, &vs) {
        Some((intercept, slope)) => {
            let r = tail
                .iter()
                .map(|&(d, v)| (v - (intercept + slope * d)).abs())
                .fold(0.0, f64::max);
            (intercept, r)
        }
        None => (*vs.last().unwrap(), f64::INFINITY),
    };
    let all_vals: Vec<f64> = dsamples.iter().map(|&(_, v)| v).collect();
    let slack = 1e-12 * value.abs().max(1.0);
    let error_proxy = inner_proxy.max(fit_resid);
    let converged = inner_ok
        && value.is_finite()
        && error_proxy.is_finite()
        && error_proxy <= tol
        && num::gaps_shrinking(&all_vals, slack);
    Ok(LimitEstimate { value, error_proxy, converged, samples: dsamples })
}

/// Right-window supremum limit: for each band width δ the windowed supremum
/// of increment ratios with shifts in `[t, t+δ)`, extrapolated across the
/// `x`-grid, then extrapolated linearly in δ to width zero.  `samples` holds
/// the per-width values `(δ, value_δ)`.
pub fn window_sup_limit(
    h: &Func,
    phi: &FlowFunc,
    psi: &Func,
    t: f64,
    grid: &GridSpec,
    tol: f64,
) -> Result<LimitEstimate> {
    band_trend(h, phi, psi, t, grid, true, false, tol)
}

/// Uniformity diagnosis at a shift: symmetric-window upper and lower limits
/// against the pointwise limit.
#[derive(Debug, Clone)]
pub struct UniformityReport {
    /// Shrinking symmetric-window supremum limit at the shift.
    pub upper: LimitEstimate,
    /// Shrinking symmetric-window infimum limit at the shift.
    pub lower: LimitEstimate,
    /// Plain pointwise estimate at the shift.
    pub pointwise: LimitEstimate,
    /// `Yes` when both window limits agree with the pointwise value within
    /// tolerance (plus proxies); `No` when they disagree decisively;
    /// `Undecided` whenever any ingredient failed to converge.
    pub verdict: Verdict3,
}

/// Compares shrinking symmetric-window upper/lower limits at `t` with the
/// pointwise limit and issues a three-valued uniformity verdict.
pub fn uniformity_report(
    f: &Func,
    phi: &FlowFunc,
    psi: &Func,
    t: f64,
    grid: &GridSpec,
    tol: f64,
) -> Result<UniformityReport> {
    let pointwise = estimate_limit(f, phi, psi, t, grid, LimitMode::Lim, tol)?;
    let upper = band_trend(f, phi, psi, t, grid, true, true, tol)?;
    let lower = band_trend(f, phi, psi, t, grid, false, true, tol)?;
    let band_tol = tol + pointwise.error_proxy + upper.error_proxy + lower.error_proxy;
    let du = (upper.value - pointwise.value).abs();
    let dl = (lower.value - pointwise.value).abs();
    let verdict = if !(pointwise.converged && upper.converged && lower.converged) {
        Verdict3::Undecided
    } else if du <= band_tol && dl <= band_tol {
        Verdict3::Yes
    } else if du.max(dl) > 5.0 * band_tol {
        Verdict3::No
    } else {
        Verdict3::Undecided
    };
    Ok(UniformityReport { upper, lower, pointwise, verdict })
}

/// Outcome of the vanishing-window-supremum test at shrinking symmetric
/// scales.
#[derive(Debug, Clone)]
pub struct HeibergSeneta {
    /// Extrapolated worst window supremum as the scale shrinks to zero.
    pub margin: f64,
    /// True when the margin is at or below the tolerance.
    pub holds: bool,
    /// `(scale, worst window supremum over ±scale)` per usable scale.
    pub per_scale: Vec<(f64, f64)>,
    /// Scales skipped because both signed shifts breached the domain.
    pub skipped: Vec<f64>,
}

/// Tests whether the windowed supremum of increments vanishes as the shift
/// scale shrinks to zero symmetrically.  For each scale σ in the band ladder
/// the windowed supremum limit is taken at `+σ` and `−σ` (domain breaches
/// skip a side; scales with both sides breached are recorded in `skipped`),
/// and the worst of the two is extrapolated linearly in σ from the smallest
/// usable scales.
pub fn heiberg_seneta(
    h: &Func,
    phi: &FlowFunc,
    grid: &GridSpec,
    tol: f64,
) -> Result<HeibergSeneta> {
    grid.validate()?;
    check_tol(tol)?;
    let one = Func::constant(1.0);
    let mut per_scale = Vec::new();
    let mut skipped = Vec::new();
    for &sig in &grid.delta_grid {
        let mut worst: Option<f64> = None;
        for u in [sig, -sig] {
            match window_sup_limit(h, phi, &one, u, grid, tol) {
                Ok(est) => worst = Some(worst.map_or(est.value, |w| w.max(est.value))),
                Err(e) if e.is_domain_breach() => {}
                Err(e) => return Err(e),
            }
        }
        match worst {
            Some(w) => per_scale.push((sig, w)),
            None => skipped.push(sig),
        }
    }
    if per_scale.len() < 2 {
        return Err(Error::Hypothesis {
            what: "fewer than two scales survive the domain constraints".into(),
        });
    }
    let tail = &per_scale[per_scale.len().saturating_sub(3)..];
    let ds: Vec<f64> = tail.iter().map(|&(d, _)| d).collect();
    let vs: Vec<f64> = tail.iter().map(|&(_, v)| v).collect();
    let (margin, _) = num::linear_fit(&ds, &vs).ok_or_else(|| Error::DegenerateFit {
        what: "scale trend is rank deficient".into(),
    })?;
    Ok(HeibergSeneta { margin, holds: margin <= tol, per_scale, skipped })
}

/// Right-window supremum limits scanned over a compact shift interval.
#[derive(Debug, Clone)]
pub struct BoundednessScan {
    /// `(shift, estimate)` per scanned shift.
    pub per_t: Vec<(f64, LimitEstimate)>,
    /// Largest estimated window supremum limit over the scan.
    pub max_value: f64,
    /// True when every estimate converged to a finite value, certifying a
    /// finite bound over the interval.
    pub certified: bool,
}

/// Scans [`window_sup_limit`] over `n` evenly spaced shifts in
/// `[t_lo, t_hi]` and reports the largest value together with a
/// convergence certificate.
#[allow(clippy::too_many_arguments)]
pub fn boundedness_scan(
    h: &Func,
    phi: &FlowFunc,
    psi: &Func,
    t_lo: f64,
    t_hi: f64,
    n: usize,
    grid: &GridSpec,
    tol: f64,
) -> Result<BoundednessScan> {
    if !(t_hi > t_lo) || !t_lo.is_finite() || !t_hi.is_finite() {
        return Err(Error::BadParam {
            what: format!("scan interval must be ordered and finite, got [{t_lo}, {t_hi}]"),
        });
    }
    if n < 2 {
        return Err(Error::BadParam { what: "scan needs at least two shifts".into() });
    }
    let mut per_t = Vec::with_capacity(n);
    let mut max_value = f64::NEG_INFINITY;
    let mut certified = true;
    for i in 0..n {
        let t = t_lo + (t_hi - t_lo) * i as f64 / (n - 1) as f64;
        let est = window_sup_limit(h, phi, psi, t, grid, tol)?;
        certified &= est.converged && est.value.is_finite();
        max_value = max_value.max(est.value);
        per_t.push((t, est));
    }
    Ok(BoundednessScan { per_t, max_value, certified })
}

/// Additive homomorphism defect of an estimated index function with respect
/// to the circle operation: `K(u∘v) − K(u) − K(v)`.
pub fn hom_residual(k_est: &Func, p: &PopaParams, u: f64, v: f64) -> Result<f64> {
    Ok(k_est.eval(p.circ(u, v)?)? - k_est.eval(u)? - k_est.eval(v)?)
}

/// Parametric models for fitting sampled limit values against a shift grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    /// `value = c · log(1 + ρt)`; fits `c`.
    CLogEta,
    /// `value = c · (e^{γt} − 1)/γ`; fits `c` and `γ`.
    CHGamma,
    /// `value = c · t`; fits `c`.
    CLinear,
    /// `value = [(1+ρt)^{γ+1} − 1]/[ρ(1+γ)]` with `ρ` given; fits `γ` only.
    PowerProfile,
}

impl FitModel {
    pub fn name(self) -> &'static str {
        match self {
            FitModel::CLogEta => "c_log_eta",
            FitModel::CHGamma => "c_H_gamma",
            FitModel::CLinear => "c_linear",
            FitModel::PowerProfile => "power_profile",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "c_log_eta" => Ok(FitModel::CLogEta),
            "c_H_gamma" => Ok(FitModel::CHGamma),
            "c_linear" => Ok(FitModel::CLinear),
            "power_profile" => Ok(FitModel::PowerProfile),
            _ => Err(Error::Config { what: format!("unknown fit model `{s}`") }),
        }
    }
}

impl fmt::Display for FitModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Result of a model fit: scale, optional exponent, and RMS misfit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: FitModel,
    /// Fitted (or fixed) scale factor.
    pub c: f64,
    /// Fitted exponent for the models that have one.
    pub gamma: Option<f64>,
    /// Root-mean-square residual of the fitted model over the samples.
    pub rms: f64,
}

fn rms_of(resid: impl Iterator<Item = f64>, n: usize) -> f64 {
    (resid.map(|r| r * r).sum::<f64>() / n as f64).sqrt()
}

/// Flat-kernel model value `(e^{γt} − 1)/γ` with the exact `γ = 0` branch.
fn flat_kernel(gamma: f64, t: f64) -> f64 {
    if gamma == 0.0 {
        t
    } else {
        (gamma * t).exp_m1() / gamma
    }
}

/// Power-profile model value `[(1+ρt)^{γ+1} − 1]/[ρ(1+γ)]`, continuous
/// through `γ = −1`.
fn power_profile(rho: f64, gamma: f64, t: f64) -> f64 {
    let z = 1.0 + rho * t;
    let g1 = gamma + 1.0;
    if g1.abs() < 1e-9 {
        z.ln() / rho
    } else {
        (g1 * z.ln()).exp_m1() / (rho * g1)
    }
}

/// Fits one of the parametric limit models to `(shift, value)` samples.
///
/// Requires at least three samples with distinct shifts inside the positive
/// group domain.  The exponent searches assume the misfit is unimodal over
/// the search bracket (γ ∈ [−4, 4] for the flat kernel, γ ∈ [−0.95, 8] for
/// the power profile).
pub fn fit_indices(samples: &[(f64, f64)], p: &PopaParams, model: FitModel) -> Result<FitResult> {
    if samples.len() < 3 {
        return Err(Error::DegenerateFit {
            what: format!("need at least 3 samples, got {}", samples.len()),
        });
    }
    let ts: Vec<f64> = samples.iter().map(|&(t, _)| t).collect();
    let ys: Vec<f64> = samples.iter().map(|&(_, y)| y).collect();
    for &t in &ts {
        if !t.is_finite() || !p.in_g_plus(t) {
            return Err(Error::domain(format!(
                "sample shift t = {t} lies outside the positive group domain for rho = {}",
                p.rho
            )));
        }
    }
    let mut sorted = ts.clone();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::DegenerateFit { what: "duplicate sample shifts".into() });
    }
    let scale_fit = |m: &[f64]| -> Result<(f64, f64)> {
        let c = num::fit_scale(m, &ys).ok_or_else(|| Error::DegenerateFit {
            what: "model vector is numerically zero".into(),
        })?;
        let rms = rms_of(m.iter().zip(&ys).map(|(mi, yi)| yi - c * mi), ys.len());
        Ok((c, rms))
    };
    match model {
        FitModel::CLinear => {
            let (c, rms) = scale_fit(&ts)?;
            Ok(FitResult { model, c, gamma: None, rms })
        }
        FitModel::CLogEta => {
            let m: Vec<f64> = ts.iter().map(|&t| (p.rho * t).ln_1p()).collect();
            let (c, rms) = scale_fit(&m)?;
            Ok(FitResult { model, c, gamma: None, rms })
        }
        FitModel::CHGamma => {
            let sse = |g: f64| -> f64 {
                let m: Vec<f64> = ts.iter().map(|&t| flat_kernel(g, t)).collect();
                match num::fit_scale(&m, &ys) {
                    Some(c) => m
                        .iter()
                        .zip(&ys)
                        .map(|(mi, yi)| {
                            let r = yi - c * mi;
                            r * r
                        })
                        .sum(),
                    None => f64::INFINITY,
                }
            };
            let gamma = num::golden_min(sse, -4.0, 4.0, 200);
            let m: Vec<f64> = ts.iter().map(|&t| flat_kernel(gamma, t)).collect();
            let (c, rms) = scale_fit(&m)?;
            Ok(FitResult { model, c, gamma: Some(gamma), rms })
        }
        FitModel::PowerProfile => {
            if p.rho <= 0.0 {
                return Err(Error::BadParam {
                    what: format!("power-profile fit requires rho > 0, got {}", p.rho),
                });
            }
            let sse = |g: f64| -> f64 {
                ts.iter()
                    .zip(&ys)
                    .map(|(&t, yi)| {
                        let r = yi - power_profile(p.rho, g, t);
                        r * r
                    })
                    .sum()
            };
            let gamma = num::golden_min(sse, -0.95, 8.0, 240);
            let rms = rms_of(
                ts.iter().zip(&ys).map(|(&t, yi)| yi - power_profile(p.rho, gamma, t)),
                ys.len(),
            );
            Ok(FitResult { model, c: 1.0, gamma: Some(gamma), rms })
        }
    }
}

/// Index slope recovered from local scaling ratios, with a cross-check.
#[derive(Debug, Clone, Copy)]
pub struct RhoEstimate {
    /// Through-origin slope of `η_x(t) − 1` against `t` at the largest grid
    /// abscissa.
    pub rho: f64,
    /// Same slope at the second-largest abscissa.
    pub cross_check: f64,
    /// Absolute difference of the two slopes.
    pub error_proxy: f64,
}

/// Estimates the scaling index of an auxiliary function from its local
/// ratios `η_x(t) = φ(x + tφ(x))/φ(x)` at the two largest grid abscissae.
/// The two slopes must agree within 10%; a larger disagreement signals that
/// the function does not self-stabilize and is reported as an error.
pub fn fit_rho(phi: &FlowFunc, grid: &GridSpec) -> Result<RhoEstimate> {
    grid.validate()?;
    if grid.count < 2 {
        return Err(Error::BadParam { what: "index fit needs at least two grid decades".into() });
    }
    let slope_at = |x: f64| -> Result<f64> {
        let mut ys = Vec::with_capacity(grid.t_grid.len());
        for &t in &grid.t_grid {
            ys.push(phi.eta_x(x, t)? - 1.0);
        }
        num::fit_scale(&grid.t_grid, &ys).ok_or_else(|| Error::DegenerateFit {
            what: "t-grid is degenerate for the slope fit".into(),
        })
    };
    let rho = slope_at(grid.x_at(grid.count - 1))?;
    let cross_check = slope_at(grid.x_at(grid.count - 2))?;
    let error_proxy = (rho - cross_check).abs();
    if error_proxy > 0.10 * rho.abs().max(cross_check.abs()) && error_proxy > 1e-9 {
        return Err(Error::NonSeIndex { first: rho, second: cross_check });
    }
    Ok(RhoEstimate { rho, cross_check, error_proxy })
}

/// True when the sample course trends away monotonically with widening gaps
/// — the numerical signature of a divergent quantity (in either direction).
pub fn appears_divergent(est: &LimitEstimate, tol: f64) -> bool {
    fn one_sided(vals: &[f64], tol: f64) -> bool {
        if vals.len() < 3 {
            return false;
        }
        if !vals.windows(2).all(|w| w[1] > w[0]) {
            return false;
        }
        let gaps: Vec<f64> = vals.windows(2).map(|w| w[1] - w[0]).collect();
        let tail = &gaps[gaps.len().saturating_sub(3)..];
        let widening = tail.windows(2).all(|g| g[1] >= g[0]);
        let total = vals[vals.len() - 1] - vals[0];
        widening && total > 5.0 * tol.max(1e-12) * vals[vals.len() - 1].abs().max(1.0)
    }
    let vals: Vec<f64> = est.samples.iter().map(|&(_, v)| v).collect();
    let flipped: Vec<f64> = vals.iter().map(|v| -v).collect();
    one_sided(&vals, tol) || one_sided(&flipped, tol)
}

/// Three-valued classification of a shift with respect to the pointwise,
/// uniform, and finite-window-supremum convergence classes, together with
/// every estimate that fed the verdicts.
#[derive(Debug, Clone)]
pub struct MembershipReport {
    /// The classified shift.
    pub t: f64,
    /// Does the pointwise limit exist at this shift?
    pub in_a_phi: Verdict3,
    /// Does the limit hold uniformly in shrinking symmetric windows?
    pub in_a_u: Verdict3,
    /// Is the right-window supremum limit finite?
    pub in_a_dagger: Verdict3,
    pub pointwise: LimitEstimate,
    pub upper_window: LimitEstimate,
    pub lower_window: LimitEstimate,
    /// Right-window supremum limit at the shift.
    pub window_sup: LimitEstimate,
    pub uniformity: UniformityReport,
}

/// Classifies a shift into the three convergence classes.
///
/// A certified strict gap between the windowed upper and lower estimates
/// overrides sparse-grid pointwise convergence (each window brackets its
/// grid point, so the gap is the stronger evidence).  Certified uniform
/// membership implies pointwise membership, and a pointwise failure rules
/// out uniform membership; the verdicts are coerced to respect both
/// implications.  Everything that cannot be certified stays `Undecided` —
/// an undecided shift is never reported as a failure.
pub fn membership(
    f: &Func,
    phi: &FlowFunc,
    psi: &Func,
    t: f64,
    grid: &GridSpec,
    tol: f64,
) -> Result<MembershipReport> {
    let pointwise = estimate_limit(f, phi, psi, t, grid, LimitMode::Lim, tol)?;
    let upper_window = estimate_limit(f, phi, psi, t, grid, LimitMode::Limsup, tol)?;
    let lower_window = estimate_limit(f, phi, psi, t, grid, LimitMode::Liminf, tol)?;
    let uniformity = uniformity_report(f, phi, psi, t, grid, tol)?;
    let window_sup = window_sup_limit(f, phi, psi, t, grid, tol)?;

    let gap = upper_window.value - lower_window.value;
    let gap_floor = 5.0 * (tol + upper_window.error_proxy + lower_window.error_proxy);
    let mut in_a_phi = if upper_window.converged && lower_window.converged && gap > gap_floor {
        Verdict3::No
    } else if pointwise.converged {
        Verdict3::Yes
    } else {
        Verdict3::Undecided
    };

    let mut in_a_u = uniformity.verdict;

    let dmin = *grid.delta_grid.last().unwrap();
    let probe = band_extreme_limit(f, phi, psi, t, t + dmin, grid, true, tol)?;
    let in_a_dagger = if window_sup.converged && window_sup.value.is_finite() {
        Verdict3::Yes
    } else if appears_divergent(&probe, tol) {
        Verdict3::No
    } else {
        Verdict3::Undecided
    };

    if in_a_u == Verdict3::Yes && in_a_phi != Verdict3::Yes {
        in_a_phi = Verdict3::Yes;
    }
    if in_a_phi == Verdict3::No && in_a_u != Verdict3::No {
        in_a_u = Verdict3::No;
    }

    Ok(MembershipReport {
        t,
        in_a_phi,
        in_a_u,
        in_a_dagger,
        pointwise,
        upper_window,
        lower_window,
        window_sup,
        uniformity,
    })
}

#[cfg(test)]
// Reference values are spelled at full precision on purpose.
#[allow(clippy::approx_constant, clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::flows::make_function;
    use std::f64::consts::PI;

    fn log_func() -> Func {
        Func::new("log", |x: f64| {
            if x > 0.0 {
                Ok(x.ln())
            } else {
                Err(Error::domain(format!("log needs a positive argument, got {x}")))
            }
        })
    }

    fn log1p_func() -> Func {
        Func::new("log1p", |u: f64| {
            if 1.0 + u > 0.0 {
                Ok(u.ln_1p())
            } else {
                Err(Error::domain(format!("log1p needs 1 + u > 0, got u = {u}")))
            }
        })
    }

    /// Oscillation whose period in `log x` is exactly one grid decade, so
    /// every decade window sees one full period and window extrema repeat
    /// identically from decade to decade.
    fn decade_wave() -> Func {
        Func::new("decade-wave", |x: f64| {
            if x > 0.0 {
                Ok((2.0 * PI * x.ln() / std::f64::consts::LN_10).sin())
            } else {
                Err(Error::domain(format!("needs x > 0, got {x}")))
            }
        })
    }

    fn linear_flow(rho: f64) -> FlowFunc {
        make_function(&format!("linear:{rho}"), &crate::expr::Params::default()).unwrap()
    }

    fn unit_flow() -> FlowFunc {
        make_function("constant:1", &crate::expr::Params::default()).unwrap()
    }

    fn one() -> Func {
        Func::constant(1.0)
    }

    #[test]
    fn grid_validation_accepts_default_and_rejects_bad_shapes() {
        let g = GridSpec::default();
        g.validate().unwrap();
        assert_eq!(g.xs(), vec![100.0, 1e3, 1e4, 1e5, 1e6]);

        let bad = GridSpec {
            ratio: 1.0,
            ..GridSpec::default()
        };
        assert!(matches!(bad.validate(), Err(Error::BadParam { .. })));

        let bad = GridSpec {
            delta_grid: vec![0.5],
            ..GridSpec::default()
        };
        assert!(matches!(bad.validate(), Err(Error::BadParam { .. })));

        let bad = GridSpec {
            delta_grid: vec![0.1, 0.5],
            ..GridSpec::default()
        };
        assert!(matches!(bad.validate(), Err(Error::BadParam { .. })));

        let bad = GridSpec {
            x0: 1e300,
            count: 10,
            ..GridSpec::default()
        };
        assert!(matches!(bad.validate(), Err(Error::BadParam { .. })));
    }

    #[test]
    fn delta_ratio_is_exact_for_scaling_models() {
        let f = Func::total("3x", |x| 3.0 * x);
        let phi = linear_flow(0.5);
        let psi = phi.func.clone();
        let r = delta_ratio(&f, &phi, &psi, 7.0, 1.3).unwrap();
        assert!((r - 3.9).abs() < 1e-12, "got {r}");
        assert_eq!(delta_ratio(&f, &phi, &psi, 7.0, 0.0).unwrap(), 0.0);

        let h = log_func();
        let phi1 = linear_flow(1.0);
        let r = delta_ratio(&h, &phi1, &one(), 77.0, 2.0).unwrap();
        assert!((r - 3f64.ln()).abs() < 1e-13, "got {r}");
    }

    #[test]
    fn delta_ratio_rejects_vanishing_normalizer() {
        let f = Func::total("x", |x| x);
        let phi = unit_flow();
        let psi = Func::total("x-5", |x| x - 5.0);
        assert!(matches!(
            delta_ratio(&f, &phi, &psi, 5.0, 1.0),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn exact_scaling_model_converges_with_tiny_proxy() {
        let f = Func::total("3x", |x| 3.0 * x);
        let phi = linear_flow(0.5);
        let psi = phi.func.clone();
        let grid = GridSpec::default();
        let est = estimate_limit(&f, &phi, &psi, 1.5, &grid, LimitMode::Lim, 1e-10).unwrap();
        assert!((est.value - 4.5).abs() < 1e-12, "value {}", est.value);
        assert!(est.error_proxy <= 1e-12, "proxy {}", est.error_proxy);
        assert!(est.converged);
        assert_eq!(est.samples.len(), 5);
        assert_eq!(est.samples[0].0, 100.0);
    }

    #[test]
    fn slowly_vanishing_increments_extrapolate_to_zero() {
        let f = log_func();
        let phi = unit_flow();
        let grid = GridSpec::default();
        let est = estimate_limit(&f, &phi, &one(), 1.0, &grid, LimitMode::Lim, 1e-4).unwrap();
        assert!(est.value.abs() < 1e-6, "value {}", est.value);
        assert!(est.converged, "proxy {}", est.error_proxy);
    }

    #[test]
    fn windowed_modes_certify_a_strict_gap_for_the_decade_wave() {
        let h = decade_wave();
        let phi = linear_flow(1.0);
        let grid = GridSpec::default();
        let up = estimate_limit(&h, &phi, &one(), 1.0, &grid, LimitMode::Limsup, 1e-6).unwrap();
        let lo = estimate_limit(&h, &phi, &one(), 1.0, &grid, LimitMode::Liminf, 1e-6).unwrap();
        let expected = 2.0 * (PI * 2f64.ln() / std::f64::consts::LN_10).sin();
        assert!(up.converged && lo.converged);
        assert!((up.value - expected).abs() < 0.01, "limsup {}", up.value);
        assert!((lo.value + expected).abs() < 0.01, "liminf {}", lo.value);
        assert!(up.value - lo.value > 3.0);
    }

    #[test]
    fn converging_model_orders_liminf_lim_limsup() {
        let h = log_func();
        let phi = linear_flow(1.0);
        let grid = GridSpec::default();
        let lim = estimate_limit(&h, &phi, &one(), 1.0, &grid, LimitMode::Lim, 1e-8).unwrap();
        let up = estimate_limit(&h, &phi, &one(), 1.0, &grid, LimitMode::Limsup, 1e-8).unwrap();
        let lo = estimate_limit(&h, &phi, &one(), 1.0, &grid, LimitMode::Liminf, 1e-8).unwrap();
        assert!(lim.converged && up.converged && lo.converged);
        let slack = 1e-12 + lim.error_proxy + up.error_proxy + lo.error_proxy;
        assert!(lo.value <= lim.value + slack);
        assert!(lim.value <= up.value + slack);
        assert!((lim.value - 2f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn window_sup_limit_matches_the_closed_form_increment_bound() {
        let h = log_func();
        let phi = linear_flow(1.0);
        let grid = GridSpec::default();
        for t in [0.5, 1.0, 2.0] {
            let est = window_sup_limit(&h, &phi, &one(), t, &grid, 0.01).unwrap();
            assert!(
                (est.value - (1.0 + t).ln()).abs() < 0.01,
                "t = {t}: value {} vs {}",
                est.value,
                (1.0 + t).ln()
            );
            assert!(est.converged, "t = {t}: proxy {}", est.error_proxy);
            assert_eq!(est.samples.len(), grid.delta_grid.len());
        }
        let zero = Func::constant(0.0);
        let est = window_sup_limit(&zero, &phi, &one(), 1.0, &grid, 1e-10).unwrap();
        assert!(est.value.abs() <= 1e-12 && est.converged);
    }

    #[test]
    fn uniformity_holds_for_the_exact_log_model_including_shift_zero() {
        let h = log_func();
        let phi = linear_flow(1.0);
        let grid = GridSpec::default();
        let rep = uniformity_report(&h, &phi, &one(), 1.0, &grid, 0.01).unwrap();
        assert_eq!(rep.verdict, Verdict3::Yes);
        assert!((rep.upper.value - 2f64.ln()).abs() < 0.02);
        assert!((rep.lower.value - 2f64.ln()).abs() < 0.02);

        let rep0 = uniformity_report(&h, &phi, &one(), 0.0, &grid, 0.01).unwrap();
        assert_eq!(rep0.verdict, Verdict3::Yes);
        assert!(rep0.pointwise.value.abs() < 1e-12);
    }

    #[test]
    fn vanishing_window_test_separates_log_from_accelerating_oscillation() {
        let h = log_func();
        let phi = linear_flow(1.0);
        let grid = GridSpec::default();
        let hs = heiberg_seneta(&h, &phi, &grid, 0.01).unwrap();
        assert!(hs.holds, "margin {}", hs.margin);
        assert!(hs.margin < 0.01);
        assert!(hs.skipped.is_empty());

        let chirp = Func::total("sin(x^2)", |x| (x * x).sin());
        let hs = heiberg_seneta(&chirp, &unit_flow(), &grid, 0.01).unwrap();
        assert!(!hs.holds, "margin {}", hs.margin);
        assert!(hs.margin > 1.5, "margin {}", hs.margin);
    }

    #[test]
    fn boundedness_scan_certifies_the_log_model_on_a_compact_interval() {
        let h = log_func();
        let phi = linear_flow(1.0);
        let grid = GridSpec::default();
        let scan = boundedness_scan(&h, &phi, &one(), 0.5, 2.0, 7, &grid, 0.01).unwrap();
        assert!(scan.certified);
        assert!(scan.max_value.is_finite());
        assert!((scan.max_value - 3f64.ln()).abs() < 0.01, "max {}", scan.max_value);
        assert_eq!(scan.per_t.len(), 7);
    }

    #[test]
    fn log_kernel_is_an_additive_homomorphism_for_the_circle_operation() {
        let k = log1p_func();
        let p = PopaParams::new(1.0).unwrap();
        for u in [0.1, 0.5, 1.0, 2.0, 5.0] {
            for v in [0.25, 1.0, 3.0] {
                let r = hom_residual(&k, &p, u, v).unwrap();
                assert!(r.abs() < 1e-12, "u={u} v={v}: {r}");
            }
        }
        assert_eq!(k.eval(0.0).unwrap(), 0.0);
        for t in [0.3, 1.0, 4.0] {
            let inv = p.inv(t).unwrap();
            let sum = k.eval(inv).unwrap() + k.eval(t).unwrap();
            assert!(sum.abs() < 1e-12, "t={t}: {sum}");
        }
    }

    #[test]
    fn fits_recover_exact_synthetic_parameters() {
        let p = PopaParams::new(1.0).unwrap();
        let ts: [f64; 4] = [0.5, 1.0, 2.0, 4.0];

        let log_samples: Vec<(f64, f64)> =
            ts.iter().map(|&t| (t, 2.0 * (1.0 + t).ln())).collect();
        let fit = fit_indices(&log_samples, &p, FitModel::CLogEta).unwrap();
        assert!((fit.c - 2.0).abs() < 1e-12, "c {}", fit.c);
        assert!(fit.rms < 1e-12);

        let lin_samples: Vec<(f64, f64)> = ts.iter().map(|&t| (t, 3.0 * t)).collect();
        let fit = fit_indices(&lin_samples, &p, FitModel::CLinear).unwrap();
        assert!((fit.c - 3.0).abs() < 1e-12);

        // Frozen reference values of the power profile at rho = 1, gamma = 2.
        let pp_samples = [
            (0.5, 0.791_666_666_666_666_7),
            (1.0, 2.333_333_333_333_333_3),
            (2.0, 8.666_666_666_666_666),
            (4.0, 41.333_333_333_333_33),
        ];
        let fit = fit_indices(&pp_samples, &p, FitModel::PowerProfile).unwrap();
        let gamma = fit.gamma.unwrap();
        assert!((gamma - 2.0).abs() < 1e-6, "gamma {gamma}");
        assert!(fit.rms < 1e-8, "rms {}", fit.rms);

        let hg_samples: Vec<(f64, f64)> =
            ts.iter().map(|&t| (t, 1.5 * (0.7 * t).exp_m1() / 0.7)).collect();
        let fit = fit_indices(&hg_samples, &p, FitModel::CHGamma).unwrap();
        let gamma = fit.gamma.unwrap();
        assert!((gamma - 0.7).abs() < 1e-5, "gamma {gamma}");
        assert!((fit.c - 1.5).abs() < 1e-5, "c {}", fit.c);
    }

    #[test]
    fn fit_guards_reject_degenerate_and_out_of_domain_samples() {
        let p = PopaParams::new(1.0).unwrap();
        let two = [(0.5, 1.0), (1.0, 2.0)];
        assert!(matches!(
            fit_indices(&two, &p, FitModel::CLinear),
            Err(Error::DegenerateFit { .. })
        ));
        let dup = [(0.5, 1.0), (0.5, 1.0), (1.0, 2.0)];
        assert!(matches!(
            fit_indices(&dup, &p, FitModel::CLinear),
            Err(Error::DegenerateFit { .. })
        ));
        let flat = PopaParams::new(0.0).unwrap();
        let s = [(0.5, 1.0), (1.0, 2.0), (2.0, 3.0)];
        assert!(matches!(
            fit_indices(&s, &flat, FitModel::CLogEta),
            Err(Error::DegenerateFit { .. })
        ));
        assert!(matches!(
            fit_indices(&s, &flat, FitModel::PowerProfile),
            Err(Error::BadParam { .. })
        ));
        let outside = [(-2.0, 1.0), (1.0, 2.0), (2.0, 3.0)];
        assert!(matches!(
            fit_indices(&outside, &p, FitModel::CLinear),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn index_fit_recovers_known_scaling_slopes() {
        let grid = GridSpec::default();
        let est = fit_rho(&linear_flow(1.0), &grid).unwrap();
        assert!((est.rho - 1.0).abs() < 1e-12, "rho {}", est.rho);
        assert!(est.error_proxy < 1e-12);

        let est = fit_rho(&unit_flow(), &grid).unwrap();
        assert!(est.rho.abs() < 1e-12);

        let lpr = make_function("linear_plus_root:0.5", &crate::expr::Params::default()).unwrap();
        let far = GridSpec { x0: 1e4, ..GridSpec::default() };
        let est = fit_rho(&lpr, &far).unwrap();
        assert!((est.rho - 0.5).abs() < 1e-3, "rho {}", est.rho);
    }

    #[test]
    fn index_fit_rejects_a_non_stabilizing_function() {
        let wobble = FlowFunc {
            func: Func::total("wobble", |x| x * (2.0 + (PI * x.log10()).cos())),
            domain_min: 1e-6,
            declared_rho: None,
            family: "custom".into(),
        };
        let grid = GridSpec::default();
        assert!(matches!(fit_rho(&wobble, &grid), Err(Error::NonSeIndex { .. })));
    }

    #[test]
    fn membership_classifies_the_three_model_regimes() {
        let grid = GridSpec::default();
        let phi = linear_flow(1.0);

        let rep = membership(&log_func(), &phi, &one(), 1.0, &grid, 0.01).unwrap();
        assert_eq!(rep.in_a_phi, Verdict3::Yes);
        assert_eq!(rep.in_a_u, Verdict3::Yes);
        assert_eq!(rep.in_a_dagger, Verdict3::Yes);

        let rep = membership(&decade_wave(), &phi, &one(), 1.0, &grid, 0.01).unwrap();
        assert_eq!(rep.in_a_phi, Verdict3::No);
        assert_eq!(rep.in_a_u, Verdict3::No);
        assert_eq!(rep.in_a_dagger, Verdict3::Yes);

        let quad = Func::total("x^2", |x| x * x);
        let rep = membership(&quad, &unit_flow(), &one(), 1.0, &grid, 0.01).unwrap();
        assert_eq!(rep.in_a_dagger, Verdict3::No);
        assert_eq!(rep.in_a_phi, Verdict3::Undecided);
        assert_eq!(rep.in_a_u, Verdict3::Undecided);
    }

    #[test]
    fn estimated_window_bound_is_subadditive_with_slack() {
        // Bounded oscillation with a full period per decade keeps the
        // windowed estimates certified while exercising the inequality away
        // from the purely additive case.
        let h = Func::new("log+wave", |x: f64| {
            if x > 0.0 {
                Ok(x.ln() + 0.1 * (2.0 * PI * x.ln() / std::f64::consts::LN_10).sin())
            } else {
                Err(Error::domain(format!("needs x > 0, got {x}")))
            }
        });
        let phi = linear_flow(1.0);
        let grid = GridSpec::default();
        let kstar = |u: f64| window_sup_limit(&h, &phi, &one(), u, &grid, 0.05).unwrap();
        for (u, v) in [(0.25, 0.25), (0.25, 0.5), (0.5, 1.0), (1.0, 1.0)] {
            let ku = kstar(u);
            let kv = kstar(v);
            let kuv = kstar(u + v);
            let slack = 2.0 * (ku.error_proxy + kv.error_proxy + kuv.error_proxy) + 1e-9;
            assert!(
                kuv.value <= ku.value + kv.value + slack,
                "u={u} v={v}: {} vs {} + {}",
                kuv.value,
                ku.value,
                kv.value
            );
        }
    }

    #[test]
    fn window_limits_chain_through_the_group_increment() {
        let h = log_func();
        let phi = linear_flow(1.0);
        let grid = GridSpec::default();
        let at_zero = window_sup_limit(&h, &phi, &one(), 0.0, &grid, 0.01).unwrap();
        for u in [0.5, 1.0, 2.0] {
            let at_u = window_sup_limit(&h, &phi, &one(), u, &grid, 0.01).unwrap();
            let chained = (1.0 + u).ln() + at_zero.value;
            assert!(
                (at_u.value - chained).abs() < 0.02,
                "u={u}: {} vs {}",
                at_u.value,
                chained
            );
        }
    }

    #[test]
    fn monotone_perturbation_keeps_the_window_bound_subadditive_in_sign() {
        let h = Func::new("log+decay", |x: f64| {
            if x > 1.0 {
                Ok(x.ln() + 1.0 / (1.0 + x.ln()))
            } else {
                Err(Error::domain(format!("needs x > 1, got {x}")))
            }
        });
        let phi = linear_flow(1.0);
        let grid = GridSpec::default();
        let p = PopaParams::new(1.0).unwrap();
        let kstar = |u: f64| window_sup_limit(&h, &phi, &one(), u, &grid, 0.05).unwrap();
        for (u, v) in [(0.5, 0.5), (0.5, 1.0), (1.0, 1.0)] {
            let uv = p.circ(u, v).unwrap();
            let r = kstar(uv).value - kstar(u).value - kstar(v).value;
            assert!(r <= 0.02, "u={u} v={v}: residual {r}");
        }
    }
}
