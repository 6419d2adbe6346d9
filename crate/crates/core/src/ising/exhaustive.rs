use nalgebra::DMatrix;

use super::{IsingProblem, SampleSet, Spin};
use crate::error::{Error, Result};

pub const DEFAULT_EXHAUSTIVE_CAP: usize = 25;

// Ground states kept when the optimum is degenerate.
const MAX_TIES: usize = 4096;

/// Exact minimization over all `2^M` spin vectors, capped at
/// [`DEFAULT_EXHAUSTIVE_CAP`] spins.
pub fn solve_exhaustive(problem: &IsingProblem) -> Result<SampleSet> {
    solve_exhaustive_capped(problem, DEFAULT_EXHAUSTIVE_CAP)
}

/// Exact minimization with a caller-chosen size cap.
///
/// Walks a Gray code over spins `1..M` with spin 0 pinned to `+1`, which
/// covers every state up to global sign. The returned set holds every ground
/// state (up to sign), each with occurrence 1.
pub fn solve_exhaustive_capped(problem: &IsingProblem, cap: usize) -> Result<SampleSet> {
    let m = problem.size();
    if m > cap {
        return Err(Error::TooLarge { size: m, cap });
    }
    let mut w = DMatrix::<f64>::zeros(m, m);
    for c in problem.couplings().iter().filter(|c| c.i != c.j) {
        w[(c.i, c.j)] = c.weight;
        w[(c.j, c.i)] = c.weight;
    }

    let mut spins: Vec<Spin> = vec![1; m];
    let mut field: Vec<f64> = (0..m).map(|k| w.row(k).sum()).collect();
    let mut energy = problem.energy_unchecked(&spins);

    let mut best = energy;
    let mut ties: Vec<Vec<Spin>> = vec![spins.clone()];

    let states: u64 = 1 << (m - 1);
    for g in 1..states {
        let k = g.trailing_zeros() as usize + 1;
        let old = f64::from(spins[k]);
        energy -= 2.0 * old * field[k];
        spins[k] = -spins[k];
        let delta = -2.0 * old;
        for (j, f) in field.iter_mut().enumerate() {
            *f += w[(j, k)] * delta;
        }

        let tol = tie_tolerance(best);
        if energy < best - tol {
            best = energy;
            ties.clear();
            ties.push(spins.clone());
        } else if energy <= best + tol && ties.len() < MAX_TIES {
            ties.push(spins.clone());
        }
    }

    // Incremental energies drift; settle ties on exact recomputed values.
    let exact: Vec<f64> = ties.iter().map(|s| problem.energy_unchecked(s)).collect();
    let min = exact.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = tie_tolerance(min);
    let ground: Vec<Vec<Spin>> = ties
        .into_iter()
        .zip(exact)
        .filter(|(_, e)| *e <= min + tol)
        .map(|(s, _)| s)
        .collect();
    SampleSet::from_reads(problem, ground)
}

fn tie_tolerance(reference: f64) -> f64 {
    1e-9 * reference.abs().max(1.0)
}
