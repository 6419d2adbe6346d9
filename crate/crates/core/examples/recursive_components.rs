//! Several components by repeated single-component fits with deflation,
//! compared with ordinary PCA and the bit-flipping L1 baseline.

use qapca::baselines::{l1_bf, l2_pca, L1bfConfig};
use qapca::eval::{gen_gaussian_toy, principal_angles, reconstruction_error};
use qapca::qapca::{qapca_recursive, QapcaConfig};

fn main() -> qapca::Result<()> {
    let x = &gen_gaussian_toy(10, 30, 5)?;
    let k = 3;

    let config = QapcaConfig { k, reads: 5, seed: 5, ..QapcaConfig::default() };
    let fit = qapca_recursive(x, &config)?;
    let l2 = l2_pca(x, k)?;
    let bf = l1_bf(x, k, &L1bfConfig { restarts: 4, ..L1bfConfig::default() })?;

    println!("orthonormality error |R'R - I| = {:.2e}", fit.basis.orthonormality_error());
    for (name, basis) in [("qapca-r", &fit.basis), ("l2-pca", &l2), ("l1-bf", &bf.basis)] {
        println!("{name:>8}: reconstruction error {:.4}", reconstruction_error(x, basis)?);
    }
    let angles = principal_angles(&fit.basis, &l2)?;
    println!("principal angles to l2-pca (rad): {angles:.3?}");
    for (step, d) in fit.diagnostics.iter().enumerate() {
        println!("step {step}: kappa {}, best energy {:.4}", d.kappa, d.best_energy);
    }
    Ok(())
}
