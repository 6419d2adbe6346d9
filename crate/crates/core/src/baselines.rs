//! Classical comparison methods: SVD PCA and bit-flipping L1-PCA.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::Spin;
use crate::linalg::{nearest_orthonormal, svd, ComponentBasis, DataMatrix, RANK_TOL};
use crate::qapca::{assignment_rank, l1_objective, BinaryAssignment};

fn check_k(x: &DataMatrix, k: usize) -> Result<()> {
    let limit = x.features().min(x.samples());
    if k == 0 || k > limit {
        return Err(Error::InvalidArgument(format!(
            "K={k} must lie in 1..=min(D, N) = {limit}"
        )));
    }
    Ok(())
}

/// Top-`k` left singular vectors of `x`.
pub fn l2_pca(x: &DataMatrix, k: usize) -> Result<ComponentBasis> {
    check_k(x, k)?;
    let dec = svd(x.as_matrix())?;
    let rank = dec.rank(RANK_TOL);
    if rank < k {
        return Err(Error::RankDeficient { rank, required: k });
    }
    ComponentBasis::new(dec.u.columns(0, k).into_owned())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct L1bfConfig {
    pub restarts: usize,
    /// Flip cap per restart; `None` means `100 * N * K`.
    pub max_flips: Option<usize>,
    pub seed: u64,
}

impl Default for L1bfConfig {
    fn default() -> Self {
        Self {
            restarts: 1,
            max_flips: None,
            seed: 0,
        }
    }
}

impl L1bfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        if self.max_flips == Some(0) {
            return Err(Error::Config("max_flips must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct L1bfFit {
    pub basis: ComponentBasis,
    pub assignment: BinaryAssignment,
    pub objective: f64,
    /// Restart that produced the winner.
    pub restart: usize,
    /// Objective after initialization and after every accepted flip.
    pub trace: Vec<f64>,
}

struct Climb {
    b: Vec<Spin>,
    objective: f64,
    trace: Vec<f64>,
}

/// `||X B||_*^2` from the `K x K` Gram matrix of `X B`.
fn objective_from_gram(g: &DMatrix<f64>) -> f64 {
    if g.nrows() == 1 {
        return g[(0, 0)];
    }
    let eig = SymmetricEigen::new(g.clone());
    let s: f64 = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).sum();
    s * s
}

/// Steepest ascent over single sign flips from `b` (column-major `N x K`).
fn climb(x: &DMatrix<f64>, k: usize, mut b: Vec<Spin>, max_flips: usize) -> Climb {
    let n = x.ncols();
    let bm = DMatrix::from_iterator(n, k, b.iter().map(|&v| f64::from(v)));
    let mut xb = x * bm;
    let mut g = xb.transpose() * &xb;
    let mut objective = objective_from_gram(&g);
    let mut trace = vec![objective];
    let norms: Vec<f64> = x.column_iter().map(|c| c.norm_squared()).collect();
    for _ in 0..max_flips {
        let mut best: Option<(usize, usize, f64)> = None;
        let proj = xb.transpose() * x;
        for c in 0..k {
            for i in 0..n {
                // column c of XB changes by -2 b_ic x_i
                let s = -2.0 * f64::from(b[c * n + i]);
                let mut trial = g.clone();
                for j in 0..k {
                    trial[(c, j)] += s * proj[(j, i)];
                    trial[(j, c)] += s * proj[(j, i)];
                }
                trial[(c, c)] += s * s * norms[i];
                let value = objective_from_gram(&trial);
                if value > best.map_or(objective, |b| b.2) {
                    best = Some((i, c, value));
                }
            }
        }
        let Some((i, c, value)) = best else { break };
        if value <= objective + 1e-12 * objective.abs().max(1.0) {
            break;
        }
        let s = -2.0 * f64::from(b[c * n + i]);
        let update = x.column(i) * s;
        let mut col = xb.column_mut(c);
        col += update;
        b[c * n + i] = -b[c * n + i];
        g = xb.transpose() * &xb;
        objective = value;
        trace.push(objective);
    }
    Climb { b, objective, trace }
}

fn sign(v: f64) -> Spin {
    if v < 0.0 {
        -1
    } else {
        1
    }
}

/// L1-PCA by greedy bit flipping.
///
/// Restart 0 starts from the signs of the top-`K` right singular vectors,
/// restart `r > 0` from random signs drawn with seed `seed + r`. Each restart
/// repeatedly applies the single flip that most increases `||X B||_*^2` until
/// no flip strictly improves it or the flip cap is hit. Restarts run in
/// parallel; the best objective wins, ties going to the lower restart.
pub fn l1_bf(x: &DataMatrix, k: usize, config: &L1bfConfig) -> Result<L1bfFit> {
    check_k(x, k)?;
    config.validate()?;
    let n = x.samples();
    let max_flips = config.max_flips.unwrap_or(100 * n * k);
    let v = svd(x.as_matrix())?.v;
    let m = x.as_matrix();

    let climbs: Vec<Climb> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let init: Vec<Spin> = if r == 0 {
                (0..k)
                    .flat_map(|c| (0..n).map(move |i| (i, c)))
                    .map(|(i, c)| sign(v[(i, c)]))
                    .collect()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(r as u64));
                (0..n * k).map(|_| if rng.gen() { 1 } else { -1 }).collect()
            };
            climb(m, k, init, max_flips)
        })
        .collect();

    let (restart, best) = climbs
        .into_iter()
        .enumerate()
        .reduce(|a, b| if b.1.objective > a.1.objective { b } else { a })
        .expect("at least one restart");
    let assignment = BinaryAssignment::new(n, k, best.b)?;
    let rank = assignment_rank(x, &assignment)?;
    if rank < k {
        return Err(Error::DegenerateComponents {
            rank,
            k,
            assignment: Box::new(assignment),
        });
    }
    let basis = nearest_orthonormal(&(m * assignment.as_matrix()))?;
    Ok(L1bfFit {
        basis,
        objective: l1_objective(x, &assignment)?,
        assignment,
        restart,
        trace: best.trace,
    })
}
