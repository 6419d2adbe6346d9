use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{IsingProblem, SampleSet, Spin};
use crate::error::{Error, Result};

/// Classical annealing parameters.
///
/// Read `r` draws from its own stream seeded with `seed + r`, so results do
/// not depend on how reads are spread over threads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub sweeps: usize,
    pub beta_initial: f64,
    pub beta_final: f64,
    pub reads: usize,
    pub seed: u64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self {
            sweeps: 1000,
            beta_initial: 0.1,
            beta_final: 10.0,
            reads: 10,
            seed: 0,
        }
    }
}

impl AnnealSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 {
            return Err(Error::InvalidSchedule("sweeps must be positive".into()));
        }
        if self.reads == 0 {
            return Err(Error::InvalidSchedule("reads must be positive".into()));
        }
        if !(self.beta_initial.is_finite() && self.beta_initial > 0.0) {
            return Err(Error::InvalidSchedule(
                "initial inverse temperature must be positive".into(),
            ));
        }
        if !(self.beta_final.is_finite() && self.beta_final > self.beta_initial) {
            return Err(Error::InvalidSchedule(
                "final inverse temperature must exceed the initial one".into(),
            ));
        }
        Ok(())
    }

    /// Inverse temperature at `sweep`, geometric from initial to final.
    pub fn beta(&self, sweep: usize) -> f64 {
        if self.sweeps == 1 {
            return self.beta_final;
        }
        let t = sweep as f64 / (self.sweeps - 1) as f64;
        self.beta_initial * (self.beta_final / self.beta_initial).powf(t)
    }
}

/// Single-spin-flip Metropolis annealing, `schedule.reads` independent
/// restarts. Each read contributes its best visited state.
pub fn solve_sa(problem: &IsingProblem, schedule: &AnnealSchedule) -> Result<SampleSet> {
    schedule.validate()?;
    let adj = problem.neighbors();
    let reads: Vec<Vec<Spin>> = (0..schedule.reads)
        .into_par_iter()
        .map(|r| anneal_read(problem, &adj, schedule, r).0)
        .collect();
    SampleSet::from_reads(problem, reads)
}

/// One read: returns the best state and the best-so-far energy after each
/// sweep.
pub(crate) fn anneal_read(
    problem: &IsingProblem,
    adj: &[Vec<(usize, f64)>],
    schedule: &AnnealSchedule,
    read: usize,
) -> (Vec<Spin>, Vec<f64>) {
    let m = problem.size();
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed.wrapping_add(read as u64));
    let mut spins: Vec<Spin> = (0..m)
        .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
        .collect();
    let mut field: Vec<f64> = adj
        .iter()
        .map(|row| row.iter().map(|&(j, w)| w * f64::from(spins[j])).sum())
        .collect();
    let mut energy = problem.energy_unchecked(&spins);
    let mut best = spins.clone();
    let mut best_energy = energy;
    let mut trace = Vec::with_capacity(schedule.sweeps);

    for sweep in 0..schedule.sweeps {
        let beta = schedule.beta(sweep);
        for _ in 0..m {
            let k = rng.gen_range(0..m);
            let s = f64::from(spins[k]);
            let delta = -2.0 * s * field[k];
            let accept = delta <= 0.0 || rng.gen::<f64>() < (-beta * delta).exp();
            if !accept {
                continue;
            }
            spins[k] = -spins[k];
            energy += delta;
            for &(j, w) in &adj[k] {
                field[j] -= 2.0 * s * w;
            }
            if energy < best_energy {
                best_energy = energy;
                best.copy_from_slice(&spins);
            }
        }
        trace.push(best_energy);
    }
    (best, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::test_support::dense_problem;
    use crate::ising::{solve_exhaustive, Coupling};
    use crate::linalg::{gram, test_support::random_matrix, DataMatrix};

    fn schedule(reads: usize, seed: u64) -> AnnealSchedule {
        AnnealSchedule {
            reads,
            seed,
            ..AnnealSchedule::default()
        }
    }

    #[test]
    fn validation() {
        assert!(AnnealSchedule::default().validate().is_ok());
        for bad in [
            AnnealSchedule { sweeps: 0, ..Default::default() },
            AnnealSchedule { reads: 0, ..Default::default() },
            AnnealSchedule { beta_initial: 0.0, ..Default::default() },
            AnnealSchedule { beta_final: 0.05, ..Default::default() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::InvalidSchedule(_))));
        }
    }

    #[test]
    fn beta_ramp_endpoints() {
        let s = AnnealSchedule::default();
        assert!((s.beta(0) - 0.1).abs() < 1e-15);
        assert!((s.beta(999) - 10.0).abs() < 1e-12);
        assert!((s.beta(500) - s.beta(499)) > 0.0);
    }

    #[test]
    fn zero_couplings() {
        let p = IsingProblem::new(5, vec![Coupling::new(0, 3, 0.0)]).unwrap();
        let set = solve_sa(&p, &schedule(3, 1)).unwrap();
        assert_eq!(set.best().unwrap().1, 0.0);
    }

    #[test]
    fn ferromagnetic_chain() {
        let m = 50;
        let c = (0..m - 1).map(|i| Coupling::new(i, i + 1, -1.0)).collect();
        let p = IsingProblem::new(m, c).unwrap();
        let set = solve_sa(&p, &schedule(10, 7)).unwrap();
        let (s, e) = set.best().unwrap();
        assert_eq!(e, -((m - 1) as f64));
        assert!(s.iter().all(|&v| v == 1));
    }

    #[test]
    fn matches_exhaustive_on_small_problems() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut hits = 0;
        for trial in 0..100 {
            let m = rng.gen_range(4..=20);
            let x = DataMatrix::new(random_matrix(&mut rng, 6, m)).unwrap();
            let p = dense_problem(&-gram(&x));
            let exact = solve_exhaustive(&p).unwrap().best().unwrap().1;
            let sa = solve_sa(&p, &schedule(10, trial)).unwrap().best().unwrap().1;
            assert!(sa >= exact - 1e-9);
            if sa <= exact + 1e-9 * exact.abs().max(1.0) {
                hits += 1;
            }
        }
        assert!(hits >= 95, "{hits}/100");
    }

    #[test]
    fn best_so_far_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let a = random_matrix(&mut rng, 12, 12);
        let p = dense_problem(&((&a + a.transpose()) * 0.5));
        let adj = p.neighbors();
        let sched = schedule(4, 3);
        for r in 0..4 {
            let (best, trace) = anneal_read(&p, &adj, &sched, r);
            assert_eq!(trace.len(), sched.sweeps);
            assert!(trace.windows(2).all(|w| w[1] <= w[0]));
            let exact = p.energy(&best).unwrap();
            assert!((exact - trace.last().unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_across_thread_pools() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x = DataMatrix::new(random_matrix(&mut rng, 5, 18)).unwrap();
        let p = dense_problem(&-gram(&x));
        let sched = schedule(16, 99);
        let parallel = solve_sa(&p, &sched).unwrap();
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| solve_sa(&p, &sched).unwrap());
        assert_eq!(parallel, serial);
        assert_eq!(parallel.total_reads(), 16);
    }
}
