//! The JSON solve protocol against the bundled in-process server.
//!
//! Point `SolverChoice::remote` at any service speaking the same protocol to
//! use real hardware.

use qapca::eval::gen_gaussian_toy;
use qapca::ising::mock::{MockBackend, MockBehavior, MockServer};
use qapca::ising::SolverChoice;
use qapca::qapca::{qapca_single, QapcaConfig};

fn main() -> qapca::Result<()> {
    let server = MockServer::start(MockBackend::Anneal { sweeps: 500 }, MockBehavior::Honest)?;
    println!("mock annealer at {}", server.url());

    let x = gen_gaussian_toy(5, 12, 1)?;
    let config = QapcaConfig {
        solver: SolverChoice::remote(server.url()),
        reads: 8,
        ..QapcaConfig::default()
    };
    let fit = qapca_single(&x, &config)?;
    let samples = &fit.diagnostics.samples;
    println!("{} distinct samples from {} reads", samples.len(), samples.total_reads());
    for (s, e) in samples.samples().iter().zip(samples.energies()).take(3) {
        println!("  {e:>9.4}  {s:?}");
    }

    // a server that lies about energies is caught client-side
    let liar = MockServer::start(MockBackend::Exhaustive, MockBehavior::CorruptEnergies)?;
    let config = QapcaConfig { solver: SolverChoice::remote(liar.url()), ..config };
    match qapca_single(&x, &config) {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}
