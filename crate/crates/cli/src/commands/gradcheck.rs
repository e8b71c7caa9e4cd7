//! `graphkan gradcheck`: the finite-difference suite over every analytic
//! backward pass, including the whole 3-layer models.

use std::process::ExitCode;

use anyhow::Result;
use clap::Args;

use graphkan::gradcheck::{run_suite, DEFAULT_TOLERANCE};

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    /// Hidden widths of the whole-model checks, e.g. 8,8,8.
    #[arg(long, default_value = "8,8,8", value_parser = crate::options::parse_widths_pub)]
    pub sizes: [usize; 3],
    /// Relative-error tolerance (absolute floor 1e-8).
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

pub fn run(args: GradcheckArgs) -> Result<ExitCode> {
    let report = run_suite(args.seed, args.tolerance, args.sizes);
    println!(
        "gradient checks: eps {:.0e}, tolerance {:.0e}, widths {:?}",
        report.eps, report.tolerance, args.sizes
    );
    for c in &report.components {
        println!(
            "{:<24} worst {} err {:>12.3e} (at {}) threshold {:.0e}  {}",
            c.name,
            c.metric,
            c.worst_err,
            if c.worst_at.is_empty() { "-" } else { &c.worst_at },
            c.threshold,
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    if report.all_pass() {
        println!("all components pass");
        Ok(ExitCode::SUCCESS)
    } else {
        let failed: Vec<&str> = report
            .components
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect();
        eprintln!("failed components: {}", failed.join(", "));
        Ok(ExitCode::from(1))
    }
}
