//! The expression language behind every `--key` that takes a function.
//!
//! One variable `x`, the usual arithmetic with `^` for powers, a small
//! function vocabulary, and two bindable parameters `rho` and `gamma` that
//! come from the surrounding configuration. Compilation returns a labeled
//! function; evaluation is checked, so domain breaches surface as errors
//! instead of NaNs.
//!
//! Run with `cargo run --example expressions`.

use beurlab::expr::{compile, Params};
use beurlab::flows::make_function;

fn main() -> beurlab::Result<()> {
    let plain = Params::default();

    println!("arithmetic and functions:");
    for src in [
        "2*x + 1",
        "x^2 - sqrt(x)",
        "sin(log(x)) * exp(-x/100)",
        "max(x, 10) / min(x, 10)",
        "pow(x, 1/3)",
    ] {
        let f = compile(src, &plain)?;
        println!("  {:<28} at x = 8: {:.9}", f.label(), f.eval(8.0)?);
    }

    // rho and gamma bind from Params; unbound use is a compile error.
    let bound = Params { rho: Some(0.5), gamma: Some(2.0) };
    let f = compile("eta(x) + H(x) + Krg(x)", &bound)?;
    println!("\nkernel shorthands at rho = 0.5, gamma = 2:");
    println!("  {} at x = 1: {:.9}", f.label(), f.eval(1.0)?);

    println!("\nerrors are reported, not swallowed:");
    for src in ["rho * x", "2 ** x", "log(x"] {
        match compile(src, &plain) {
            Ok(_) => println!("  {src:<12} compiled (unexpected)"),
            Err(e) => println!("  {src:<12} -> {e}"),
        }
    }
    let f = compile("log(x - 5)", &plain)?;
    match f.eval(2.0) {
        Ok(v) => println!("  log(2 - 5) evaluated to {v} (unexpected)"),
        Err(e) => println!("  log(x-5) at x = 2 -> {e}"),
    }

    // The flow-speed registry accepts expr:<text> next to the named
    // families, with domain floor 1 and no declared growth index.
    println!("\nflow-speed registry:");
    for family in ["linear:2", "power:0.5", "log", "expr:sqrt(x)+1"] {
        let speed = make_function(family, &plain)?;
        println!(
            "  {family:<16} phi(100) = {:>10.4}   declared index: {:?}",
            speed.eval(100.0)?,
            speed.declared_rho
        );
    }
    Ok(())
}
