//! One L1 principal component of a tiny data set, solved exactly.
//!
//! cargo run --example fit_single

use qapca::ising::SolverChoice;
use qapca::qapca::{l1_objective, qapca_single, QapcaConfig};
use qapca::DataMatrix;

fn main() -> qapca::Result<()> {
    // 2 features x 3 samples; columns are samples
    let x = DataMatrix::from_row_slice(2, 3, &[1.0, 1.0, -1.0, 0.0, 1.0, 1.0])?;
    let config = QapcaConfig {
        solver: SolverChoice::exhaustive(),
        ..QapcaConfig::default()
    };
    let fit = qapca_single(&x, &config)?;

    println!("sign vector b = {:?}", fit.assignment.column(0));
    println!("|Xb|^2        = {}", l1_objective(&x, &fit.assignment)?);
    println!("component r   = {:?}", fit.basis.as_matrix().column(0).as_slice());
    println!(
        "kappa {} / {} couplers, best raw energy {}",
        fit.diagnostics.kappa, fit.diagnostics.coupler_count, fit.diagnostics.best_energy
    );
    Ok(())
}
