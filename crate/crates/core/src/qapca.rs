//! L1-PCA through Ising optimization.
//!
//! For one component the L1 problem `max_b ||X b||_2` over `b in {+-1}^N` is
//! already the Ising problem `min_b b^T J b` with `J = -X^T X`, and the
//! component is `X b / ||X b||`. Further components come either from
//! deflating the data and repeating ([`Qapca::recursive`]) or from one joint
//! problem over `K * N` spins with a cross-term penalty ([`Qapca::multi`]).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::embedding::{CouplerBudget, DiagonalScale, EmbeddingCache, EmbeddingLayout};
use crate::error::{Error, Result};
use crate::ising::{IsingProblem, SampleSet, SolverChoice, Spin};
use crate::linalg::{gram, nearest_orthonormal, nullspace_project, svd, ComponentBasis, DataMatrix};

/// Relative tolerance for the numerical rank of `X B`.
pub const ASSIGNMENT_RANK_TOL: f64 = 1e-8;

/// An `N x K` sign matrix, stored column-major so that the flat storage is
/// exactly `b' = [b_1; ...; b_K]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryAssignment {
    n: usize,
    k: usize,
    values: Vec<Spin>,
}

impl BinaryAssignment {
    pub fn new(n: usize, k: usize, values: Vec<Spin>) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::Empty { rows: n, cols: k });
        }
        if values.len() != n * k {
            return Err(Error::SpinLength {
                expected: n * k,
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|&v| v != 1 && v != -1) {
            return Err(Error::InvalidSpin {
                index,
                value: i64::from(values[index]),
            });
        }
        Ok(Self { n, k, values })
    }

    /// Reshapes a vectorized `b'` of length `K * N`.
    pub fn from_vectorized(n: usize, k: usize, b: &[Spin]) -> Result<Self> {
        Self::new(n, k, b.to_vec())
    }

    pub fn from_columns(columns: &[Vec<Spin>]) -> Result<Self> {
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::Dimension("columns have different lengths".into()));
        }
        Self::new(n, columns.len(), columns.concat())
    }

    pub fn samples(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> usize {
        self.k
    }

    pub fn vectorized(&self) -> &[Spin] {
        &self.values
    }

    pub fn column(&self, k: usize) -> &[Spin] {
        &self.values[k * self.n..(k + 1) * self.n]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[Spin]> {
        self.values.chunks(self.n)
    }

    pub fn as_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_iterator(self.n, self.k, self.values.iter().map(|&v| f64::from(v)))
    }

    pub fn negate_column(&mut self, k: usize) {
        for v in &mut self.values[k * self.n..(k + 1) * self.n] {
            *v = -*v;
        }
    }

    /// Number of columns that differ up to a global sign.
    pub fn distinct_columns(&self) -> usize {
        let mut seen: Vec<Vec<Spin>> = Vec::new();
        for c in self.columns() {
            let s = c[0];
            let canon: Vec<Spin> = c.iter().map(|v| v * s).collect();
            if !seen.contains(&canon) {
                seen.push(canon);
            }
        }
        seen.len()
    }
}

fn check_dims(x: &DataMatrix, b: &BinaryAssignment) -> Result<()> {
    if x.samples() != b.samples() {
        return Err(Error::Dimension(format!(
            "data has {} samples, assignment has {} rows",
            x.samples(),
            b.samples()
        )));
    }
    Ok(())
}

/// `||M||_*^2`, evaluated as `||M||_F^2 + 2 sum_{i<j} sigma_i sigma_j` with
/// singular values at the rounding floor dropped. Keeps the identity
/// `||M||_*^2 = ||M||_F^2` exact for numerically rank-one `M`.
pub fn nuclear_norm_squared(m: &DMatrix<f64>) -> Result<f64> {
    let sigma = svd(m)?.singular_values;
    let max = sigma.iter().copied().fold(0.0, f64::max);
    let floor = max * f64::EPSILON * (m.nrows().max(m.ncols()) as f64);
    let kept: Vec<f64> = sigma.iter().copied().filter(|&s| s > floor).collect();
    let mut cross = 0.0;
    for i in 0..kept.len() {
        for j in (i + 1)..kept.len() {
            cross += kept[i] * kept[j];
        }
    }
    Ok(m.norm_squared() + 2.0 * cross)
}

/// L1-PCA objective `||X B||_*^2`.
pub fn l1_objective(x: &DataMatrix, b: &BinaryAssignment) -> Result<f64> {
    check_dims(x, b)?;
    nuclear_norm_squared(&(x.as_matrix() * b.as_matrix()))
}

/// `G_B = B^T X^T X B`.
pub fn assignment_gram(x: &DataMatrix, b: &BinaryAssignment) -> Result<DMatrix<f64>> {
    check_dims(x, b)?;
    let xb = x.as_matrix() * b.as_matrix();
    Ok(xb.transpose() * xb)
}

/// `(K + eps) Tr(G_B) - eps 1^T G_B 1`, the penalized surrogate that sits
/// between `||X B||_*^2` and `K Tr(G_B)` for admissible `eps`.
pub fn penalized_objective(x: &DataMatrix, b: &BinaryAssignment, epsilon: f64) -> Result<f64> {
    let g = assignment_gram(x, b)?;
    let k = b.components() as f64;
    Ok((k + epsilon) * g.trace() - epsilon * g.sum())
}

/// Largest `eps` for which the penalized surrogate stays above the nuclear
/// norm objective:
/// `[K Tr(G_B) - ||X B||_*^2] / [1^T G_B 1 - Tr(G_B)]`.
///
/// The bound is undefined (and reported as such) when the cross terms do not
/// sum to a positive value.
pub fn epsilon_upper_bound(x: &DataMatrix, b: &BinaryAssignment) -> Result<f64> {
    let g = assignment_gram(x, b)?;
    let trace = g.trace();
    let denominator = g.sum() - trace;
    let scale = g.abs().sum().max(f64::MIN_POSITIVE);
    if denominator <= 1e-12 * scale {
        return Err(Error::BoundUndefined { denominator });
    }
    let nuclear = l1_objective(x, b)?;
    let numerator = b.components() as f64 * trace - nuclear;
    Ok(numerator.max(0.0) / denominator)
}

/// `sum_{k1 != k2} b_k1^T X^T X b_k2`.
pub fn cross_term_alignment(x: &DataMatrix, b: &BinaryAssignment) -> Result<f64> {
    let g = assignment_gram(x, b)?;
    Ok(g.sum() - g.trace())
}

/// The same cross-term sum through the eigendecomposition
/// `X^T X = Q Lambda Q^T`: `sum_{k1 != k2} sum_n lambda_n z_{n,k1} z_{n,k2}`
/// with `z_k = Q^T b_k`.
pub fn cross_term_alignment_spectral(x: &DataMatrix, b: &BinaryAssignment) -> Result<f64> {
    check_dims(x, b)?;
    let eig = SymmetricEigen::new(gram(x));
    let z = eig.eigenvectors.transpose() * b.as_matrix();
    let mut total = 0.0;
    for k1 in 0..b.components() {
        for k2 in 0..b.components() {
            if k1 == k2 {
                continue;
            }
            total += (0..z.nrows())
                .map(|n| eig.eigenvalues[n] * z[(n, k1)] * z[(n, k2)])
                .sum::<f64>();
        }
    }
    Ok(total)
}

/// Settings shared by the QAPCA variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QapcaConfig {
    pub k: usize,
    pub epsilon: f64,
    pub reads: usize,
    pub solver: SolverChoice,
    pub budget: CouplerBudget,
    pub seed: u64,
    #[serde(default)]
    pub diagonal_scale: DiagonalScale,
}

impl Default for QapcaConfig {
    fn default() -> Self {
        Self {
            k: 1,
            epsilon: 100.0,
            reads: 10,
            solver: SolverChoice::anneal(),
            budget: CouplerBudget::default(),
            seed: 0,
            diagonal_scale: DiagonalScale::default(),
        }
    }
}

impl QapcaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.reads == 0 {
            return Err(Error::Config("reads must be at least 1".into()));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::Config(format!(
                "epsilon must be finite and nonnegative, got {}",
                self.epsilon
            )));
        }
        if self.budget.c_limit == 0 {
            return Err(Error::Config("coupler budget must be positive".into()));
        }
        Ok(())
    }
}

/// What the solver saw and produced for one Ising problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveDiagnostics {
    pub kappa: usize,
    pub band_offset: usize,
    pub coupler_count: u64,
    /// Factor between raw and normalized energies.
    pub energy_scale: f64,
    /// Best energy in raw (unnormalized) units.
    pub best_energy: f64,
    pub samples: SampleSet,
}

#[derive(Debug, Clone)]
pub struct SingleFit {
    pub basis: ComponentBasis,
    pub assignment: BinaryAssignment,
    pub diagnostics: SolveDiagnostics,
}

#[derive(Debug, Clone)]
pub struct RecursiveFit {
    pub basis: ComponentBasis,
    /// Column `k` is the sign vector found on the `k`-times deflated data.
    pub assignment: BinaryAssignment,
    pub diagnostics: Vec<SolveDiagnostics>,
}

#[derive(Debug, Clone)]
pub struct MultiFit {
    pub basis: ComponentBasis,
    pub assignment: BinaryAssignment,
    pub diagnostics: SolveDiagnostics,
}

/// Ising problem for a `K`-component fit, ready for a solver: the banded
/// coupling scaled to `max |w| = 1`.
#[derive(Debug, Clone)]
pub struct PreparedProblem {
    pub problem: IsingProblem,
    pub energy_scale: f64,
    pub layout: Arc<EmbeddingLayout>,
}

/// QAPCA runner holding a layout cache shared across calls.
#[derive(Debug, Clone)]
pub struct Qapca {
    config: QapcaConfig,
    cache: Arc<EmbeddingCache>,
}

impl Qapca {
    pub fn new(config: QapcaConfig) -> Result<Self> {
        Self::with_cache(config, Arc::new(EmbeddingCache::new()))
    }

    pub fn with_cache(config: QapcaConfig, cache: Arc<EmbeddingCache>) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, cache })
    }

    pub fn config(&self) -> &QapcaConfig {
        &self.config
    }

    pub fn cache(&self) -> &Arc<EmbeddingCache> {
        &self.cache
    }

    /// Gram matrix, banding and normalization for `k` components.
    pub fn prepare(&self, x: &DataMatrix, k: usize) -> Result<PreparedProblem> {
        let n = x.samples();
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "QAPCA needs at least 2 samples, got {n}"
            )));
        }
        let layout = self.cache.get_or_build(n, k, &self.config.budget)?;
        let j = -gram(x);
        let banded = layout.apply(&j, self.config.epsilon, self.config.diagonal_scale)?;
        let (problem, energy_scale) = banded.normalized()?;
        Ok(PreparedProblem {
            problem,
            energy_scale,
            layout,
        })
    }

    fn solve(&self, prepared: &PreparedProblem, seed: u64) -> Result<(Vec<Spin>, SolveDiagnostics)> {
        let samples = self
            .config
            .solver
            .solve(&prepared.problem, self.config.reads, seed)?;
        let (best, energy) = samples
            .best()
            .map(|(s, e)| (s.to_vec(), e))
            .ok_or_else(|| Error::MalformedResponse("solver returned no samples".into()))?;
        let diagnostics = SolveDiagnostics {
            kappa: prepared.layout.kappa(),
            band_offset: prepared.layout.band_offset(),
            coupler_count: prepared.layout.coupler_count(),
            energy_scale: prepared.energy_scale,
            best_energy: energy * prepared.energy_scale,
            samples,
        };
        Ok((best, diagnostics))
    }

    /// One component: the best sign vector `b` and `X b / ||X b||`.
    pub fn single(&self, x: &DataMatrix) -> Result<SingleFit> {
        self.single_seeded(x, self.config.seed)
    }

    fn single_seeded(&self, x: &DataMatrix, seed: u64) -> Result<SingleFit> {
        let prepared = self.prepare(x, 1)?;
        let (b, diagnostics) = self.solve(&prepared, seed)?;
        let assignment = BinaryAssignment::new(x.samples(), 1, b)?;
        let r = project_sign_vector(x, assignment.column(0))?;
        Ok(SingleFit {
            basis: ComponentBasis::from_orthonormal(DMatrix::from_columns(&[r])),
            assignment,
            diagnostics,
        })
    }

    /// QAPCA-R: `K` single-component fits, each on the data deflated by the
    /// components found so far. Component `k` uses seed `seed + k`.
    pub fn recursive(&self, x: &DataMatrix) -> Result<RecursiveFit> {
        let k = self.config.k;
        if k > x.features().min(x.samples()) {
            return Err(Error::InvalidArgument(format!(
                "K={k} exceeds min(D, N) = {}",
                x.features().min(x.samples())
            )));
        }
        let reference = x.frobenius_norm();
        let mut current = x.clone();
        let mut components: Vec<DVector<f64>> = Vec::with_capacity(k);
        let mut columns = Vec::with_capacity(k);
        let mut diagnostics = Vec::with_capacity(k);
        for step in 0..k {
            if current.frobenius_norm() <= 1e-10 * reference {
                return Err(Error::DeflationExhausted {
                    achieved: step,
                    requested: k,
                });
            }
            let fit = self.single_seeded(&current, self.config.seed.wrapping_add(step as u64))?;
            let mut r = fit.basis.as_matrix().column(0).into_owned();
            // one re-orthogonalization pass against rounding drift
            for prev in &components {
                r -= prev * prev.dot(&r);
            }
            let norm = r.norm();
            if norm <= 1e-10 {
                return Err(Error::DeflationExhausted {
                    achieved: step,
                    requested: k,
                });
            }
            r /= norm;
            current = nullspace_project(&current, &r)?;
            components.push(r);
            columns.push(fit.assignment.column(0).to_vec());
            diagnostics.push(fit.diagnostics);
        }
        Ok(RecursiveFit {
            basis: ComponentBasis::from_orthonormal(DMatrix::from_columns(&components)),
            assignment: BinaryAssignment::from_columns(&columns)?,
            diagnostics,
        })
    }

    /// Simultaneous QAPCA over `K * N` spins, returning `Phi(X B)`.
    ///
    /// When `X B` has rank below `K` the sign matrix is returned inside
    /// [`Error::DegenerateComponents`] instead of being patched up.
    pub fn multi(&self, x: &DataMatrix) -> Result<MultiFit> {
        let k = self.config.k;
        if k > x.features() {
            return Err(Error::InvalidArgument(format!(
                "K={k} exceeds the {} available features",
                x.features()
            )));
        }
        let prepared = self.prepare(x, k)?;
        let (b, diagnostics) = self.solve(&prepared, self.config.seed)?;
        let assignment = BinaryAssignment::from_vectorized(x.samples(), k, &b)?;
        let rank = assignment_rank(x, &assignment)?;
        if rank < k {
            return Err(Error::DegenerateComponents {
                rank,
                k,
                assignment: Box::new(assignment),
            });
        }
        let basis = nearest_orthonormal(&(x.as_matrix() * assignment.as_matrix()))?;
        Ok(MultiFit {
            basis,
            assignment,
            diagnostics,
        })
    }
}

/// Numerical rank of `X B` at [`ASSIGNMENT_RANK_TOL`].
pub fn assignment_rank(x: &DataMatrix, b: &BinaryAssignment) -> Result<usize> {
    check_dims(x, b)?;
    let xb = x.as_matrix() * b.as_matrix();
    if xb.iter().all(|&v| v == 0.0) {
        return Ok(0);
    }
    Ok(svd(&xb)?.rank(ASSIGNMENT_RANK_TOL))
}

/// `Phi(X b) = X b / ||X b||`.
pub fn project_sign_vector(x: &DataMatrix, b: &[Spin]) -> Result<DVector<f64>> {
    if b.len() != x.samples() {
        return Err(Error::SpinLength {
            expected: x.samples(),
            got: b.len(),
        });
    }
    let bv = DVector::from_iterator(b.len(), b.iter().map(|&v| f64::from(v)));
    let xb = x.as_matrix() * bv;
    let norm = xb.norm();
    if norm <= crate::linalg::RANK_TOL * x.frobenius_norm() || norm == 0.0 {
        return Err(Error::RankDeficient {
            rank: 0,
            required: 1,
        });
    }
    Ok(xb / norm)
}

pub fn qapca_single(x: &DataMatrix, config: &QapcaConfig) -> Result<SingleFit> {
    Qapca::new(config.clone())?.single(x)
}

pub fn qapca_recursive(x: &DataMatrix, config: &QapcaConfig) -> Result<RecursiveFit> {
    Qapca::new(config.clone())?.recursive(x)
}

pub fn qapca_multi(x: &DataMatrix, config: &QapcaConfig) -> Result<MultiFit> {
    Qapca::new(config.clone())?.multi(x)
}
