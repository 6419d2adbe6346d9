//! Joint K-component formulation: how the cross-block penalty epsilon shapes
//! the optimum. With K = 2 the exact minimizer pairs a sign vector with its
//! negation, so the columns span a single direction whatever epsilon is.

use nalgebra::DMatrix;
use qapca::ising::SolverChoice;
use qapca::qapca::{epsilon_upper_bound, qapca_multi, BinaryAssignment, QapcaConfig};
use qapca::{DataMatrix, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> qapca::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = DataMatrix::new(DMatrix::from_fn(6, 6, |_, _| rng.sample(StandardNormal)))?;

    for eps in [0.0, 0.5, 2.0, 100.0] {
        let config = QapcaConfig {
            k: 2,
            epsilon: eps,
            solver: SolverChoice::exhaustive(),
            ..QapcaConfig::default()
        };
        let b: BinaryAssignment = match qapca_multi(&x, &config) {
            Ok(fit) => fit.assignment,
            Err(Error::DegenerateComponents { assignment, rank, .. }) => {
                println!("eps {eps:>5}: degenerate, rank {rank}");
                *assignment
            }
            Err(e) => return Err(e),
        };
        println!("           b1 = {:?}", b.column(0));
        println!("           b2 = {:?}", b.column(1));
    }

    // the bound is defined only where the cross terms are positive
    let b = BinaryAssignment::new(6, 2, vec![1; 12])?;
    match epsilon_upper_bound(&x, &b) {
        Ok(bound) => println!("epsilon bound for all-ones B: {bound:.4}"),
        Err(e) => println!("epsilon bound undefined: {e}"),
    }
    Ok(())
}
