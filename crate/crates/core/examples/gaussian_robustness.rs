//! A small run of the Gaussian contamination benchmark, as the CLI's
//! `experiment gaussian` would do it.

use qapca::experiment::{run_gaussian, Method, RunConfig};

fn main() -> qapca::Result<()> {
    let config = RunConfig {
        k: 2,
        n: 20,
        d: 10,
        trials: 20,
        outlier_fraction: Some(0.2),
        outlier_sigma: 10.0,
        methods: vec![Method::QapcaR, Method::L1bf, Method::Svd],
        seed: 42,
        ..RunConfig::default()
    };
    let result = run_gaussian(&config)?;
    println!("method    held-out error (mean +- sem)");
    for row in &result.summary {
        println!(
            "{:<9} {:.4} +- {:.4}",
            row.method.name(),
            row.recon_test_mean.unwrap_or(f64::NAN),
            row.recon_test_sem.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
