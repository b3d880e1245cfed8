//! Closed-form kernels and the functional equations they solve.
//!
//! Each kernel family is a named closed form with up to two indices; each
//! functional equation relates the roles (kernel, auxiliary `h`, weight
//! `g`, ...). This example prints the closed forms on a small grid, wires
//! the known solution family into every equation, and shows the residuals
//! sitting at rounding level.
//!
//! Run with `cargo run --example kernel_equations`.

use beurlab::kernels::{
    fe_residual, solve_gbe_kernel, EquationFuncs, EquationId, KernelKind, KernelSpec,
};

fn main() -> beurlab::Result<()> {
    let (rho, gamma) = (0.5, 2.0);

    println!("closed forms at rho = {rho}, gamma = {gamma}:");
    let kinds = [
        KernelKind::Eta,
        KernelKind::HGamma,
        KernelKind::ExpG,
        KernelKind::KRhoGamma,
        KernelKind::FlowRateF,
    ];
    print!("{:>14}", "x");
    for kind in kinds {
        print!("{:>16}", kind.name());
    }
    println!();
    for x in [0.0, 0.5, 1.0, 2.0] {
        print!("{x:>14}");
        for kind in kinds {
            let spec = KernelSpec::new(kind, rho, gamma)?;
            print!("{:>16.6}", spec.eval(x)?);
        }
        println!();
    }

    // Wire the solution family into each equation and measure residuals.
    let eta = KernelSpec::new(KernelKind::Eta, rho, 0.0)?.as_func();
    let eta_rg = KernelSpec::new(KernelKind::Eta, rho * gamma, 0.0)?.as_func();
    let h_gamma = KernelSpec::new(KernelKind::HGamma, 0.0, gamma)?.as_func();
    let exp_g = KernelSpec::new(KernelKind::ExpG, 0.0, gamma)?.as_func();
    let krg = KernelSpec::new(KernelKind::KRhoGamma, rho, gamma)?.as_func();
    let weight = KernelSpec::new(KernelKind::ExpG, rho, gamma)?.as_func();
    let rate = KernelSpec::new(KernelKind::FlowRateF, rho, gamma)?.as_func();

    let wiring: Vec<(EquationId, EquationFuncs)> = vec![
        (EquationId::Gs, EquationFuncs::new().h(eta.clone())),
        (EquationId::Bfe, EquationFuncs::new().eta(eta.clone())),
        (
            EquationId::Gfe,
            EquationFuncs::new().kernel(h_gamma.clone()).g(exp_g.clone()),
        ),
        (
            EquationId::GbeP,
            EquationFuncs::new()
                .kernel(krg.clone())
                .kappa(krg.clone())
                .h(eta.clone())
                .g(weight),
        ),
        (
            EquationId::GbeGroup,
            EquationFuncs::new().kernel(krg).h(eta.clone()).k(eta_rg),
        ),
        (EquationId::Cbe, EquationFuncs::new().f(rate).h(eta)),
        (EquationId::Gfi, EquationFuncs::new().kernel(h_gamma).g(exp_g)),
    ];

    println!("\nequation residuals with the matching solution family:");
    for (eq, funcs) in &wiring {
        let mut worst = 0.0f64;
        for u in [0.1, 0.7, 1.3] {
            for v in [0.2, 0.9, 1.8] {
                worst = worst.max(fe_residual(*eq, funcs, u, v)?.abs());
            }
        }
        println!("  {:<10} worst |residual| {:.3e}", eq.name(), worst);
    }

    // Given the auxiliary eta and the weight, the composite equation's
    // kernel can be solved for directly.
    let h_spec = KernelSpec::new(KernelKind::Eta, rho, 0.0)?;
    let g_spec = KernelSpec::new(KernelKind::ExpG, rho, gamma)?;
    let solved = solve_gbe_kernel(&h_spec, &g_spec)?;
    println!(
        "\nsolved composite kernel: {} (value at 1: {:.12})",
        solved.as_func().label(),
        solved.eval(1.0)?
    );
    Ok(())
}
