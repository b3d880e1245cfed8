//! Convergence transfer between moving-average kernels.
//!
//! If the `φ`-paced moving averages of data against one kernel settle at
//! `c` times that kernel's mass, they settle likewise for any other
//! integrable kernel — provided the first kernel's Fourier transform never
//! vanishes. The example probes that hypothesis on both a Gaussian (no
//! zeros) and a box (zeros at every sinc node), then runs the full
//! transfer experiment and prints its report.
//!
//! Run with `cargo run --example tauberian_transfer`.

use beurlab::expr::{self, Params};
use beurlab::flows::make_function;
use beurlab::limits::GridSpec;
use beurlab::tauberian::{
    tauberian_experiment, wiener_check, ConvolutionKernel, TauberianData, WienerCheck,
    DEFAULT_MESH,
};

fn main() -> beurlab::Result<()> {
    let gaussian = ConvolutionKernel::gaussian();
    let box_kernel = ConvolutionKernel::box_on(0.0, 1.0)?;

    println!("transform nonvanishing probe (finite grid, so evidence, not proof):");
    for (name, kernel) in [("gaussian", &gaussian), ("box[0,1]", &box_kernel)] {
        let check = wiener_check(
            kernel,
            WienerCheck::DEFAULT_XI_MAX,
            WienerCheck::DEFAULT_N_POINTS,
            WienerCheck::DEFAULT_THRESHOLD,
        )?;
        match check.zero_at {
            Some(xi) => println!(
                "  {name:<9} min |transform| {:.3e}  zero detected near xi = {xi:.4}",
                check.min_modulus
            ),
            None => println!(
                "  {name:<9} min |transform| {:.3e}  no zero detected",
                check.min_modulus
            ),
        }
    }

    // Data whose paced averages settle at pace 1: the Stieltjes integrator
    // U(x) = x against phi(x) = x gives moving averages that converge to
    // the kernel mass.
    let data = TauberianData::Stieltjes(expr::compile("x", &Params::default())?);
    let phi = make_function("linear:1", &Params::default())?;
    let grid = GridSpec::default();

    let triangle = ConvolutionKernel::triangle();
    let report = tauberian_experiment(
        &gaussian,
        &triangle,
        &data,
        &phi,
        1.0,
        &grid,
        1e-3,
        DEFAULT_MESH,
    )?;
    println!("\ntransfer gaussian -> triangle, U(x) = x, phi(x) = x:");
    println!("  verdict: {}", report.verdict.name());
    print!("{}", report.to_csv());

    // The box kernel cannot serve as the hypothesis side: its transform
    // has zeros, so the experiment aborts at the gate instead of claiming
    // anything.
    let aborted = tauberian_experiment(
        &box_kernel,
        &triangle,
        &data,
        &phi,
        1.0,
        &grid,
        1e-3,
        DEFAULT_MESH,
    );
    match aborted {
        Err(e) => println!("\nbox as hypothesis kernel is refused: {e}"),
        Ok(r) => println!("\nbox as hypothesis kernel: verdict {}", r.verdict.name()),
    }
    Ok(())
}
