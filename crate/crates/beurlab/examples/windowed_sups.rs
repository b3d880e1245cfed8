//! Window suprema: uniformity, vanishing scales, and boundedness.
//!
//! Pointwise convergence of paced increments can hide wild behaviour
//! between grid points. These diagnostics chase that gap: symmetric-window
//! limits against the pointwise value (uniformity), window suprema at
//! shrinking shift scales (the vanishing-scale test), and a sweep of
//! window-sup limits over a whole shift interval (boundedness).
//!
//! Run with `cargo run --example windowed_sups`.

use beurlab::expr::{self, Params};
use beurlab::flows::make_function;
use beurlab::limits::{
    boundedness_scan, heiberg_seneta, uniformity_report, window_sup_limit, GridSpec,
};
use beurlab::num::Func;

fn main() -> beurlab::Result<()> {
    let grid = GridSpec::default();
    let phi = make_function("linear:1", &Params::default())?;
    let one = Func::constant(1.0);

    // A uniformly well-behaved observable...
    let smooth = expr::compile("log(x)", &Params::default())?;
    let report = uniformity_report(&smooth, &phi, &one, 1.0, &grid, 1e-6)?;
    println!(
        "log x at t = 1: pointwise {:.9}, window upper {:.9}, window lower {:.9}",
        report.pointwise.value, report.upper.value, report.lower.value
    );
    println!("  uniform? {}", report.verdict.name());

    // ...versus an oscillator, where the windows pull apart.
    let wobble = expr::compile("sin(log(x))", &Params::default())?;
    let report = uniformity_report(&wobble, &phi, &one, 1.0, &grid, 1e-3)?;
    println!(
        "sin(log x) at t = 1: pointwise {:.6}, window upper {:.6}, window lower {:.6}",
        report.pointwise.value, report.upper.value, report.lower.value
    );
    println!("  uniform? {}", report.verdict.name());

    // Vanishing-scale test: window suprema of increments of log x shrink
    // to zero with the scale, so the slowly-varying verdict holds. The
    // margin extrapolates the sups to scale zero; the tolerance absorbs
    // the extrapolation's own curvature error.
    let hs = heiberg_seneta(&smooth, &phi, &grid, 5e-3)?;
    println!("\nvanishing-scale test for log x:");
    for &(scale, sup) in &hs.per_scale {
        println!("  scale {scale:>5}: window sup {sup:.6}");
    }
    println!("  margin {:.3e}, holds: {}", hs.margin, hs.holds);

    // One window-sup limit at a single shift...
    let est = window_sup_limit(&wobble, &phi, &one, 1.0, &grid, 1e-3)?;
    println!(
        "\nwindow-sup limit of sin(log x) at t = 1: {:.6} (converged: {})",
        est.value, est.converged
    );

    // ...and the certified maximum over a whole shift interval.
    let scan = boundedness_scan(&wobble, &phi, &one, 0.25, 2.0, 8, &grid, 1e-3)?;
    println!("\nboundedness over t in [0.25, 2]:");
    for (t, est) in &scan.per_t {
        println!("  t = {t:>5.3}: window sup {:.6}", est.value);
    }
    println!(
        "  max {:.6}, certified everywhere: {}",
        scan.max_value, scan.certified
    );
    Ok(())
}
