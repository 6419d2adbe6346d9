//! Ising problems over `{-1, +1}` spins and the solvers that minimize them.
//!
//! The energy of a spin vector `s` is `sum w * s_i * s_j` over the coupling
//! list. A diagonal entry `(i, i, w)` contributes the constant `w`. There are
//! no linear fields, so `E(s) = E(-s)` and every [`SampleSet`] reports spin
//! vectors with the first spin fixed to `+1`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod anneal;
mod exhaustive;
pub mod mock;
mod remote;

pub use anneal::{solve_sa, AnnealSchedule};
pub use exhaustive::{solve_exhaustive, solve_exhaustive_capped, DEFAULT_EXHAUSTIVE_CAP};
pub use remote::{solve_remote, SolveRequest, SolveResponse, SOLVE_PATH};

pub type Spin = i8;

/// One upper-triangular coupling `(i, j, weight)` with `i <= j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(usize, usize, f64)", into = "(usize, usize, f64)")]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

impl Coupling {
    pub fn new(i: usize, j: usize, weight: f64) -> Self {
        Self { i, j, weight }
    }
}

impl From<(usize, usize, f64)> for Coupling {
    fn from((i, j, weight): (usize, usize, f64)) -> Self {
        Self { i, j, weight }
    }
}

impl From<Coupling> for (usize, usize, f64) {
    fn from(c: Coupling) -> Self {
        (c.i, c.j, c.weight)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsingProblem {
    size: usize,
    couplings: Vec<Coupling>,
}

impl IsingProblem {
    pub fn new(size: usize, couplings: Vec<Coupling>) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidCoupling("problem has no spins".into()));
        }
        let mut seen = HashSet::with_capacity(couplings.len());
        for c in &couplings {
            if c.i > c.j {
                return Err(Error::InvalidCoupling(format!(
                    "({}, {}) is below the diagonal",
                    c.i, c.j
                )));
            }
            if c.j >= size {
                return Err(Error::InvalidCoupling(format!(
                    "({}, {}) out of range for {size} spins",
                    c.i, c.j
                )));
            }
            if !c.weight.is_finite() {
                return Err(Error::InvalidCoupling(format!(
                    "({}, {}) has non-finite weight",
                    c.i, c.j
                )));
            }
            if !seen.insert((c.i, c.j)) {
                return Err(Error::InvalidCoupling(format!(
                    "duplicate coupling ({}, {})",
                    c.i, c.j
                )));
            }
        }
        Ok(Self { size, couplings })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    pub fn energy(&self, spins: &[Spin]) -> Result<f64> {
        self.check_spins(spins)?;
        Ok(self.energy_unchecked(spins))
    }

    pub(crate) fn energy_unchecked(&self, spins: &[Spin]) -> f64 {
        self.couplings
            .iter()
            .map(|c| c.weight * f64::from(spins[c.i] * spins[c.j]))
            .sum()
    }

    pub fn check_spins(&self, spins: &[Spin]) -> Result<()> {
        if spins.len() != self.size {
            return Err(Error::SpinLength {
                expected: self.size,
                got: spins.len(),
            });
        }
        if let Some(index) = spins.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidSpin {
                index,
                value: i64::from(spins[index]),
            });
        }
        Ok(())
    }

    /// Sum of the diagonal weights: the energy offset shared by all states.
    pub fn constant(&self) -> f64 {
        self.couplings
            .iter()
            .filter(|c| c.i == c.j)
            .map(|c| c.weight)
            .sum()
    }

    /// Symmetric adjacency of the off-diagonal couplings.
    pub(crate) fn neighbors(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.size];
        for c in self.couplings.iter().filter(|c| c.i != c.j) {
            adj[c.i].push((c.j, c.weight));
            adj[c.j].push((c.i, c.weight));
        }
        adj
    }

    /// Largest absolute coupling weight.
    pub fn max_abs_weight(&self) -> f64 {
        self.couplings
            .iter()
            .map(|c| c.weight.abs())
            .fold(0.0, f64::max)
    }

    /// The same problem with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            size: self.size,
            couplings: self
                .couplings
                .iter()
                .map(|c| Coupling::new(c.i, c.j, c.weight * factor))
                .collect(),
        }
    }
}

/// Flips `spins` in place so that the first spin is `+1`.
pub fn canonicalize(spins: &mut [Spin]) {
    if spins.first() == Some(&-1) {
        for s in spins.iter_mut() {
            *s = -*s;
        }
    }
}

/// Solver output, sorted by ascending energy.
///
/// Spin vectors are stored with their first spin fixed to `+1`. Equal spin
/// vectors are merged and their occurrences summed; equal energies are broken
/// by lexicographic order with `-1 < +1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    samples: Vec<Vec<Spin>>,
    energies: Vec<f64>,
    occurrences: Vec<u32>,
}

impl SampleSet {
    /// Builds a sample set from raw reads, computing energies with `problem`.
    pub fn from_reads(problem: &IsingProblem, reads: Vec<Vec<Spin>>) -> Result<Self> {
        let weighted = reads.into_iter().map(|s| (s, 1)).collect();
        Self::from_weighted(problem, weighted)
    }

    pub(crate) fn from_weighted(
        problem: &IsingProblem,
        reads: Vec<(Vec<Spin>, u32)>,
    ) -> Result<Self> {
        let mut entries: Vec<(Vec<Spin>, f64, u32)> = Vec::with_capacity(reads.len());
        for (mut spins, count) in reads {
            problem.check_spins(&spins)?;
            canonicalize(&mut spins);
            let e = problem.energy_unchecked(&spins);
            entries.push((spins, e, count));
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Vec<Spin>, f64, u32)> = Vec::with_capacity(entries.len());
        for entry in entries {
            match merged.last_mut() {
                Some(last) if last.0 == entry.0 => last.2 += entry.2,
                _ => merged.push(entry),
            }
        }
        merged.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        let mut set = Self {
            samples: Vec::with_capacity(merged.len()),
            energies: Vec::with_capacity(merged.len()),
            occurrences: Vec::with_capacity(merged.len()),
        };
        for (s, e, c) in merged {
            set.samples.push(s);
            set.energies.push(e);
            set.occurrences.push(c);
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Vec<Spin>] {
        &self.samples
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn occurrences(&self) -> &[u32] {
        &self.occurrences
    }

    pub fn best(&self) -> Option<(&[Spin], f64)> {
        self.samples
            .first()
            .map(|s| (s.as_slice(), self.energies[0]))
    }

    pub fn total_reads(&self) -> u64 {
        self.occurrences.iter().map(|&c| u64::from(c)).sum()
    }
}

/// Which backend minimizes the Ising problems an algorithm produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverChoice {
    Exhaustive {
        #[serde(default = "default_cap")]
        max_size: usize,
    },
    Anneal {
        sweeps: usize,
        beta_initial: f64,
        beta_final: f64,
    },
    Remote {
        endpoint: String,
    },
}

fn default_cap() -> usize {
    DEFAULT_EXHAUSTIVE_CAP
}

impl SolverChoice {
    pub fn exhaustive() -> Self {
        Self::Exhaustive {
            max_size: DEFAULT_EXHAUSTIVE_CAP,
        }
    }

    /// Simulated annealing with the default schedule constants.
    pub fn anneal() -> Self {
        let d = AnnealSchedule::default();
        Self::Anneal {
            sweeps: d.sweeps,
            beta_initial: d.beta_initial,
            beta_final: d.beta_final,
        }
    }

    pub fn remote(endpoint: impl Into<String>) -> Self {
        Self::Remote {
            endpoint: endpoint.into(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Exhaustive { .. } => "exhaustive",
            Self::Anneal { .. } => "sa",
            Self::Remote { .. } => "remote",
        }
    }

    /// Runs the backend with `reads` repetitions. Exhaustive search ignores
    /// `reads` since one pass is already exact.
    pub fn solve(&self, problem: &IsingProblem, reads: usize, seed: u64) -> Result<SampleSet> {
        match self {
            Self::Exhaustive { max_size } => solve_exhaustive_capped(problem, *max_size),
            Self::Anneal {
                sweeps,
                beta_initial,
                beta_final,
            } => {
                let schedule = AnnealSchedule {
                    sweeps: *sweeps,
                    beta_initial: *beta_initial,
                    beta_final: *beta_final,
                    reads,
                    seed,
                };
                solve_sa(problem, &schedule)
            }
            Self::Remote { endpoint } => solve_remote(problem, endpoint, reads, Some(seed)),
        }
    }
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;
    use crate::linalg::test_support::random_matrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small() -> IsingProblem {
        IsingProblem::new(
            2,
            vec![
                Coupling::new(0, 0, -1.0),
                Coupling::new(1, 1, -1.0),
                Coupling::new(0, 1, -2.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn energy_examples() {
        let p = IsingProblem::new(2, vec![Coupling::new(0, 1, -1.0)]).unwrap();
        assert_eq!(p.energy(&[1, 1]).unwrap(), -1.0);
        // b^T J b with J = -[[1,1],[1,1]]
        assert_eq!(small().energy(&[1, 1]).unwrap(), -4.0);
        assert_eq!(small().energy(&[1, -1]).unwrap(), 0.0);
    }

    #[test]
    fn energy_rejects_bad_spins() {
        assert!(matches!(
            small().energy(&[1]),
            Err(Error::SpinLength { expected: 2, got: 1 })
        ));
        assert!(matches!(
            small().energy(&[1, 0]),
            Err(Error::InvalidSpin { index: 1, value: 0 })
        ));
    }

    #[test]
    fn problem_validation() {
        assert!(IsingProblem::new(2, vec![Coupling::new(1, 0, 1.0)]).is_err());
        assert!(IsingProblem::new(2, vec![Coupling::new(0, 2, 1.0)]).is_err());
        assert!(IsingProblem::new(2, vec![Coupling::new(0, 1, f64::INFINITY)]).is_err());
        assert!(IsingProblem::new(
            2,
            vec![Coupling::new(0, 1, 1.0), Coupling::new(0, 1, 2.0)]
        )
        .is_err());
        assert!(IsingProblem::new(0, vec![]).is_err());
    }

    #[test]
    fn sample_set_merges_and_sorts() {
        let p = small();
        let set = SampleSet::from_reads(&p, vec![vec![1, -1], vec![-1, -1], vec![1, 1], vec![-1, 1]])
            .unwrap();
        assert_eq!(set.samples(), &[vec![1, 1], vec![1, -1]]);
        assert_eq!(set.energies(), &[-4.0, 0.0]);
        assert_eq!(set.occurrences(), &[2, 2]);
        assert_eq!(set.total_reads(), 4);
    }

    #[test]
    fn diagonal_terms_never_move_the_argmin() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let m = rng.gen_range(2..=15);
            let j = random_matrix(&mut rng, m, m);
            let sym = (&j + j.transpose()) * 0.5;
            let with = dense_problem(&sym);
            let without = IsingProblem::new(
                m,
                with.couplings()
                    .iter()
                    .copied()
                    .filter(|c| c.i != c.j)
                    .collect(),
            )
            .unwrap();
            let (e1, a1) = brute_min(&with);
            let (e0, a0) = brute_min(&without);
            assert_eq!(a1, a0);
            assert!((e1 - e0 - with.constant()).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn energy_is_negation_symmetric(
            weights in proptest::collection::vec(-5.0f64..5.0, 21),
            bits in proptest::collection::vec(any::<bool>(), 6),
        ) {
            let mut c = Vec::new();
            let mut w = weights.into_iter();
            for i in 0..6 {
                for j in i..6 {
                    c.push(Coupling::new(i, j, w.next().unwrap()));
                }
            }
            let p = IsingProblem::new(6, c).unwrap();
            let s: Vec<Spin> = bits.iter().map(|&b| if b { 1 } else { -1 }).collect();
            let neg: Vec<Spin> = s.iter().map(|v| -v).collect();
            prop_assert!((p.energy(&s).unwrap() - p.energy(&neg).unwrap()).abs() < 1e-12);
        }
    }
}
