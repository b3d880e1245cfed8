//! The circle group on the interval above `-1/ρ`.
//!
//! `a ∘ b = a + b + ρab` makes `(-1/ρ, ∞)` an abelian group whose neutral
//! element is 0. This example walks the algebra: composition, inverses,
//! powers, the isomorphism onto the multiplicative half line, and the exact
//! identity suite at random triples. It then localizes the same structure
//! at a base point of a flow speed.
//!
//! Run with `cargo run --example circle_groups`.

use beurlab::expr::Params;
use beurlab::flows::make_function;
use beurlab::popa::{suite_residuals, LocalContext, PopaParams};

fn main() -> beurlab::Result<()> {
    let group = PopaParams::new(1.0)?;
    println!("group with rho = {}, domain ({}, inf)", group.rho, group.rho_star());

    let (a, b) = (2.0, 0.5);
    let ab = group.circ(a, b)?;
    println!("\n{a} o {b} = {ab}");
    println!("{b} o {a} = {} (commutative)", group.circ(b, a)?);

    let inv = group.inv(a)?;
    println!("inverse of {a} is {inv}; {a} o inv = {}", group.circ(a, inv)?);

    println!("\npowers of 1 under o (these are 2^n - 1):");
    for n in 0..=5 {
        println!("  1^({n}) = {}", group.iterate(1.0, n)?);
    }

    // eta*(x) = 1 + rho x maps (o) to ordinary multiplication.
    let (x, y) = (3.0, 4.0);
    println!(
        "\neta*({x} o {y}) = {} = eta*({x}) * eta*({y}) = {}",
        group.eta_star(group.circ(x, y)?),
        group.eta_star(x) * group.eta_star(y)
    );
    println!("eta*^-1(eta*({x})) = {}", group.eta_star_inv(group.eta_star(x))?);

    // The reflection u -> -u/(1 + rho u) conjugates inversion.
    println!("reflect({a}) = {} (equals the group inverse)", group.reflect(a)?);

    println!("\nidentity suite at a few random-looking triples:");
    for (a, b, c) in [(0.7, -0.3, 2.0), (5.0, 1.5, -0.49), (-0.9, 12.0, 0.25)] {
        let report = suite_residuals(&group, a, b, c)?;
        println!(
            "  ({a:5}, {b:5}, {c:5})  worst relative residual {:.3e}",
            report.worst()
        );
    }

    // The same composition localizes at a base point x of a flow speed:
    // s o_x t = s + t * eta_x(s) with eta_x(s) = phi(x + s phi(x)) / phi(x).
    let phi = make_function("linear:1", &Params::default())?;
    let local = LocalContext::new(phi, 10.0)?;
    println!("\nlocal composition at x = {} under phi(x) = x:", local.x);
    println!("  step by 1:        x o_phi 1 = {}", local.step(1.0)?);
    println!("  2 o_x 3           = {}", local.circ_local(2.0, 3.0)?);
    println!("  inverse of 2      = {}", local.inv_local(2.0)?);
    let ids = local.identity_residuals(0.8, 1.7, 6)?;
    for entry in &ids.entries {
        println!("  {:<16} relative residual {:.3e}", entry.label, entry.relative());
    }
    Ok(())
}
