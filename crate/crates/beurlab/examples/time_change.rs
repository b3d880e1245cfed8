//! Occupation time and the exponential time change.
//!
//! A positive speed `φ` induces the occupation time `τ(x) = ∫ dx/φ` and the
//! conjugated clock `y = τ(x)`. Observables transported to the new clock
//! have increments paced by the conjugated speed `g(y) = φ(τ⁻¹(y))`, and
//! for `φ(x) = x` everything is exactly exponential: `τ⁻¹(y) = e^y`,
//! `g(y) = e^y`, and the paced increments of `U(x) = 2x` reproduce
//! `2·(e^s − 1)`, the flat-kernel shape at index 1.
//!
//! Run with `cargo run --example time_change`.

use beurlab::expr::Params;
use beurlab::flows::{make_function, tau_increment_residual, time_change};
use beurlab::kernels::{KernelKind, KernelSpec};
use beurlab::num::Func;

fn main() -> beurlab::Result<()> {
    let phi = make_function("linear:1", &Params::default())?;
    let observable = Func::total("2*x", |x| 2.0 * x);
    let (clock, conjugated) = time_change(observable, phi.clone(), 1.0)?;

    println!("phi(x) = x, base 1: tau(x) = log x, tau_inv(y) = e^y");
    for x in [1.0, 10.0, 1e4] {
        let y = clock.tau(x)?;
        println!(
            "  tau({x:>8}) = {y:>10.6}   tau_inv back: {:>12.4}   g(y) = {:.4}",
            clock.tau_inv(y)?,
            clock.g(y)?
        );
    }

    // Paced increments of the conjugated observable against the
    // flat-kernel shape H_1(s) = e^s - 1, scaled by the fitted pace 2.
    let shape = KernelSpec::new(KernelKind::HGamma, 0.0, 1.0)?.as_func();
    let y = 20.0;
    let g_y = clock.g(y)?;
    let v_y = conjugated.eval(y)?;
    println!("\npaced increments at y = {y}:");
    println!("{:>6} {:>24} {:>24} {:>12}", "s", "(V(y+s)-V(y))/g(y)", "2*H_1(s)", "abs error");
    for s in [0.0, 0.5, 1.0, 2.0, 3.0] {
        let paced = (conjugated.eval(y + s)? - v_y) / g_y;
        let target = 2.0 * shape.eval(s)?;
        println!("{s:>6} {paced:>24.12} {target:>24.12} {:>12.3e}", (paced - target).abs());
    }

    // The conjugated speed is exactly log-additive at index 1:
    // log g(y+s) - log g(y) = s.
    println!("\nlog-speed additivity:");
    for s in [0.5, 1.5, 3.0] {
        let lhs = clock.g(y + s)?.ln() - g_y.ln();
        println!("  log g({y}+{s}) - log g({y}) = {lhs:.12}  (target {s})");
    }

    // For a speed with declared index rho, occupation-time increments over
    // [x, x + s phi(x)] approach the flat-kernel value at rho; the
    // residual decays as x grows.
    let mixed = make_function("linear_plus_root:0.5", &Params::default())?;
    println!("\noccupation-increment residuals for phi(x) = x/2 + sqrt(x):");
    for x in [1e2, 1e4, 1e6, 1e8] {
        let r = tau_increment_residual(&mixed, x, 1.0)?;
        println!("  x = {x:>9.0e}   residual {r:>12.3e}");
    }
    Ok(())
}
