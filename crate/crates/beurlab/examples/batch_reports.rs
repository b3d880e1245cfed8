//! The batch layer as a library: configurations in, reports out.
//!
//! Everything the `beurlab` binary does is available in-process: build an
//! [`ExperimentConfig`], dispatch it, and render the report as CSV or
//! JSON. Reports are deterministic — the same configuration produces a
//! byte-identical body, with elapsed time carried separately.
//!
//! Run with `cargo run --example batch_reports`.

use beurlab::config::ExperimentConfig;
use beurlab::experiment::run_experiment;

fn main() -> beurlab::Result<()> {
    // A configuration is one command plus flat key=value settings.
    let mut cfg = ExperimentConfig::new("popa-check");
    cfg.set("rho", "1");
    cfg.set("samples", "250");
    cfg.set("seed", "7");

    let report = run_experiment(&cfg)?;
    println!("popa-check as CSV:\n{}", report.to_csv());
    println!("verdict: {}\n", report.verdict.name());

    // The same text a --config file would hold parses directly.
    let text = "\
        # growth envelopes\n\
        mode = bounds\n\
        rho = 1\n\
        a = 2\n\
        epsilon = 0.5\n\
        m_max = 6\n";
    let cfg = ExperimentConfig::from_text("beck", text)?;
    let report = run_experiment(&cfg)?;
    println!("beck bounds as JSON:\n{}", report.to_json());

    // Determinism: the body (everything except elapsed time) is
    // byte-identical across runs.
    let again = run_experiment(&cfg)?;
    assert_eq!(report.body(), again.body());
    println!("re-run body is byte-identical: true");

    // Configuration mistakes are errors before anything runs...
    let mut bad = ExperimentConfig::new("popa-check");
    bad.set("rho_typo", "1");
    match run_experiment(&bad) {
        Err(e) => println!("\nconfig mistake: {e}"),
        Ok(_) => println!("\nconfig mistake went unnoticed (unexpected)"),
    }

    // ...whereas failures during the run come back as aborted reports.
    let mut gated = ExperimentConfig::new("tauberian");
    gated.set("k", "box:0,1");
    gated.set("count", "3");
    let report = run_experiment(&gated)?;
    println!(
        "gate failure during the run: verdict {} ({} row)",
        report.verdict.name(),
        report.columns.join("/")
    );
    Ok(())
}
