//! Limit estimation along geometric grids.
//!
//! The estimator samples a paced increment ratio at geometrically spaced
//! abscissas, extrapolates the tail, and reports an error proxy together
//! with a convergence flag — an estimate that does not settle is reported
//! as unconverged rather than guessed. Upper/lower variants take windowed
//! extremes first, which separates oscillating ratios cleanly.
//!
//! Run with `cargo run --example limit_estimates`.

use beurlab::expr::{self, Params};
use beurlab::flows::make_function;
use beurlab::limits::{estimate_limit, fit_rho, membership, GridSpec, LimitMode};
use beurlab::num::Func;

fn main() -> beurlab::Result<()> {
    let grid = GridSpec::default();
    let phi = make_function("linear:1", &Params::default())?;
    let one = Func::constant(1.0);

    // log is additively regular against phi(x) = x: the paced increment
    // (log(x + t x) - log x) / 1 equals log(1 + t) for every x.
    let f = expr::compile("log(x)", &Params::default())?;
    println!("increments of log x against phi(x) = x:");
    for t in [0.5, 1.0, 3.0] {
        let est = estimate_limit(&f, &phi, &one, t, &grid, LimitMode::Lim, 1e-9)?;
        println!(
            "  t = {t}: estimate {:.12} (log(1+t) = {:.12}, converged: {})",
            est.value,
            (1.0 + t).ln(),
            est.converged
        );
    }

    // An oscillating ratio: h(x) = sin(log x). Its increment at shift t
    // swings forever between +/- 2 sin(log(1+t)/2); the pointwise limit
    // fails while the windowed extremes settle.
    let h = expr::compile("sin(log(x))", &Params::default())?;
    let t = 1.0;
    let sup = estimate_limit(&h, &phi, &one, t, &grid, LimitMode::Limsup, 1e-2)?;
    let inf = estimate_limit(&h, &phi, &one, t, &grid, LimitMode::Liminf, 1e-2)?;
    let swing = 2.0 * ((1.0f64 + t).ln() / 2.0).sin();
    println!("\nincrements of sin(log x) at t = {t}:");
    println!("  windowed upper {:.6} (ideal {swing:.6})", sup.value);
    println!("  windowed lower {:.6} (ideal {:.6})", inf.value, -swing);

    // Class membership wraps all of this into three-valued verdicts:
    // pointwise / uniform / finite-window-sup, never guessing on
    // unconverged evidence.
    let m = membership(&f, &phi, &one, t, &grid, 1e-6)?;
    println!("\nmembership of log x at t = {t}:");
    println!("  pointwise: {}   uniform: {}   window-sup finite: {}",
        m.in_a_phi.name(), m.in_a_u.name(), m.in_a_dagger.name());
    let m = membership(&h, &phi, &one, t, &grid, 1e-3)?;
    println!("membership of sin(log x) at t = {t}:");
    println!("  pointwise: {}   uniform: {}   window-sup finite: {}",
        m.in_a_phi.name(), m.in_a_u.name(), m.in_a_dagger.name());

    // The growth index of a speed is recovered from its own increments.
    println!();
    for family in ["linear:0.7", "linear_plus_root:0.25", "constant:3"] {
        let speed = make_function(family, &Params::default())?;
        let est = fit_rho(&speed, &grid)?;
        println!(
            "index fit for {family}: rho = {:.9} (cross-check {:.9})",
            est.rho, est.cross_check
        );
    }

    // A slope still drifting across the grid is refused, not mislabeled:
    // sqrt's local slope halves every grid decade, so no stable index
    // exists at this resolution.
    let speed = make_function("power:0.5", &Params::default())?;
    match fit_rho(&speed, &grid) {
        Ok(est) => println!("index fit for power:0.5: rho = {:.9} (unexpected)", est.rho),
        Err(e) => println!("index fit for power:0.5 is refused: {e}"),
    }
    Ok(())
}
