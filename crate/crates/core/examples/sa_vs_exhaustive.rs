//! Simulated annealing against exhaustive search on the same Ising problems.

use std::time::Instant;

use qapca::eval::gen_gaussian_toy;
use qapca::ising::{solve_exhaustive, solve_sa, AnnealSchedule};
use qapca::qapca::{Qapca, QapcaConfig};

fn main() -> qapca::Result<()> {
    let runner = Qapca::new(QapcaConfig::default())?;
    let mut matched = 0;
    let trials = 20;
    let (mut t_exact, mut t_sa) = (0.0, 0.0);
    for seed in 0..trials {
        let x = gen_gaussian_toy(8, 16, seed)?;
        let prepared = runner.prepare(&x, 1)?;

        let start = Instant::now();
        let exact = solve_exhaustive(&prepared.problem)?;
        t_exact += start.elapsed().as_secs_f64();

        let start = Instant::now();
        let schedule = AnnealSchedule { reads: 10, sweeps: 1000, seed, ..AnnealSchedule::default() };
        let sa = solve_sa(&prepared.problem, &schedule)?;
        t_sa += start.elapsed().as_secs_f64();

        let (e, s) = (exact.best().unwrap().1, sa.best().unwrap().1);
        if s <= e + 1e-9 {
            matched += 1;
        }
    }
    println!("SA matched the exact ground state in {matched}/{trials} problems");
    println!("time: exhaustive {t_exact:.3}s, sa {t_sa:.3}s");
    Ok(())
}
