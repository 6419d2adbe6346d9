//! Fitting coupling matrices under a coupler budget.
//!
//! The dense coupling matrix `J` is loaded band by band: first the main
//! diagonal, then super-diagonals of increasing offset until the next band
//! would overflow `C_limit`. With `K` components the problem lives on `K * N`
//! spins, spin `k * N + i` standing for sample `i` of component `k`, and the
//! coupling matrix is the Kronecker block form
//! `I_K (x) s J + (1_K - I_K) (x) (-eps J)`.
//!
//! Weights follow the half-diagonal convention: for a full band the emitted
//! energy equals half of `b'^T M b'` for the dense block matrix `M`, which has
//! the same minimizers.
//!
//! `kappa` below always counts off-diagonal bands. A band offset `kappa + 1`
//! keeps every entry with `|j - i| < kappa + 1`.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, RwLock};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{Coupling, IsingProblem};

/// Hardware-style budget on usable couplers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplerBudget {
    pub c_limit: u64,
    pub n_limit: usize,
    pub chain_margin: usize,
}

impl Default for CouplerBudget {
    /// `N_limit = 175` derated by 25 for chains, giving `C_limit = 11325`.
    fn default() -> Self {
        Self::from_n_limit(175, 25).expect("static budget")
    }
}

impl CouplerBudget {
    /// Budget whose `C_limit` fully embeds `n_limit - chain_margin` samples for
    /// one component.
    pub fn from_n_limit(n_limit: usize, chain_margin: usize) -> Result<Self> {
        if n_limit <= chain_margin {
            return Err(Error::Config(format!(
                "n_limit {n_limit} must exceed chain margin {chain_margin}"
            )));
        }
        Ok(Self {
            c_limit: coupler_count(n_limit - chain_margin, 1),
            n_limit,
            chain_margin,
        })
    }

    /// Budget given directly by its coupler limit.
    pub fn from_c_limit(c_limit: u64) -> Result<Self> {
        if c_limit == 0 {
            return Err(Error::Config("c_limit must be positive".into()));
        }
        let mut n = 1;
        while coupler_count(n + 1, 1) <= c_limit {
            n += 1;
        }
        Ok(Self {
            c_limit,
            n_limit: n,
            chain_margin: 0,
        })
    }

    /// Checks the budget can at least hold the diagonal of an `n`-spin
    /// problem.
    pub fn validate_for(&self, n: usize, k: usize) -> Result<()> {
        if self.c_limit < (n * k) as u64 {
            return Err(Error::InfeasibleBudget {
                n,
                k,
                c_limit: self.c_limit,
                needed: (n * k) as u64,
            });
        }
        Ok(())
    }
}

/// Couplers needed to fully embed `K` components over `N` samples:
/// `(K^2 N^2 - K N) / 2 + K N`.
pub fn coupler_count(n: usize, k: usize) -> u64 {
    let kn = (k * n) as u64;
    (kn * kn - kn) / 2 + kn
}

/// Couplers in one diagonal block with `kappa` off-diagonal bands:
/// `(2N - kappa)(kappa + 1) / 2`.
pub fn diagonal_block_couplers(n: usize, kappa: usize) -> u64 {
    let (n, kappa) = (n as u64, kappa as u64);
    (2 * n - kappa) * (kappa + 1) / 2
}

/// Couplers in one off-diagonal block: the band on both sides of the
/// diagonal.
pub fn cross_block_couplers(n: usize, kappa: usize) -> u64 {
    2 * diagonal_block_couplers(n, kappa) - n as u64
}

/// Total couplers of a `K`-component layout with `kappa` bands.
pub fn banded_coupler_count(n: usize, k: usize, kappa: usize) -> u64 {
    let k = k as u64;
    k * diagonal_block_couplers(n, kappa) + (k * k - k) / 2 * cross_block_couplers(n, kappa)
}

/// Largest `kappa` in `0..N` with `(2N - kappa)(kappa + 1) / 2 <= C_limit`.
///
/// A result below 1 would leave spins without any partner, so that case is
/// reported as an infeasible budget.
pub fn compute_kappa(n: usize, c_limit: u64) -> Result<usize> {
    compute_kappa_for(n, 1, c_limit)
}

/// [`compute_kappa`] generalized to the `K`-component block layout.
pub fn compute_kappa_for(n: usize, k: usize, c_limit: u64) -> Result<usize> {
    if n < 2 || k == 0 {
        return Err(Error::InvalidArgument(format!(
            "banding needs N >= 2 and K >= 1 (got N={n}, K={k})"
        )));
    }
    // coupler count is increasing in kappa
    let (mut lo, mut hi) = (0usize, n - 1);
    if banded_coupler_count(n, k, 0) > c_limit {
        return Err(infeasible(n, k, c_limit));
    }
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if banded_coupler_count(n, k, mid) <= c_limit {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    if lo < 1 {
        return Err(infeasible(n, k, c_limit));
    }
    Ok(lo)
}

fn infeasible(n: usize, k: usize, c_limit: u64) -> Error {
    Error::InfeasibleBudget {
        n,
        k,
        c_limit,
        needed: banded_coupler_count(n, k, 1),
    }
}

/// Scale applied to the diagonal (same-component) blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalScale {
    /// `K`, as in the Kronecker Ising form.
    #[default]
    ComponentCount,
    /// `K + eps`, matching the penalized objective before it is rewritten.
    ComponentCountPlusEpsilon,
    /// Unscaled `J`.
    Unit,
}

impl DiagonalScale {
    pub fn factor(self, k: usize, epsilon: f64) -> f64 {
        match self {
            Self::ComponentCount => k as f64,
            Self::ComponentCountPlusEpsilon => k as f64 + epsilon,
            Self::Unit => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockRole {
    /// `(kN + i, kN + i)`: `s J_ii / 2`.
    Diagonal,
    /// `(kN + i, kN + j)`, `i < j`: `s J_ij`.
    Intra,
    /// `(k1 N + i, k2 N + j)`, `k1 < k2`, `i != j`: `-eps J_ij`.
    Cross,
    /// `(k1 N + i, k2 N + i)`, `k1 < k2`: `-eps J_ii`.
    CrossDiagonal,
}

/// One coupler slot: the spin pair it joins and the `J` entry it reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutEntry {
    pub spins: (usize, usize),
    pub source: (usize, usize),
    pub role: BlockRole,
}

/// Coupler index layout for a given `(N, K, kappa)`, independent of `J`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingLayout {
    n: usize,
    k: usize,
    kappa: usize,
    entries: Vec<LayoutEntry>,
}

impl EmbeddingLayout {
    pub fn build(n: usize, k: usize, kappa: usize) -> Result<Self> {
        if n < 2 || k == 0 {
            return Err(Error::InvalidArgument(format!(
                "layout needs N >= 2 and K >= 1 (got N={n}, K={k})"
            )));
        }
        if kappa == 0 || kappa >= n {
            return Err(Error::InvalidBand {
                offset: kappa + 1,
                n,
            });
        }
        let mut entries = Vec::with_capacity(banded_coupler_count(n, k, kappa) as usize);
        for k1 in 0..k {
            for k2 in k1..k {
                for i in 0..n {
                    let lo = if k1 == k2 { i } else { i.saturating_sub(kappa) };
                    let hi = (i + kappa).min(n - 1);
                    for j in lo..=hi {
                        let role = match (k1 == k2, i == j) {
                            (true, true) => BlockRole::Diagonal,
                            (true, false) => BlockRole::Intra,
                            (false, true) => BlockRole::CrossDiagonal,
                            (false, false) => BlockRole::Cross,
                        };
                        entries.push(LayoutEntry {
                            spins: (k1 * n + i, k2 * n + j),
                            source: (i, j),
                            role,
                        });
                    }
                }
            }
        }
        entries.sort_by_key(|e| e.spins);
        Ok(Self {
            n,
            k,
            kappa,
            entries,
        })
    }

    pub fn samples(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> usize {
        self.k
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn band_offset(&self) -> usize {
        self.kappa + 1
    }

    pub fn entries(&self) -> &[LayoutEntry] {
        &self.entries
    }

    pub fn coupler_count(&self) -> u64 {
        self.entries.len() as u64
    }

    /// Fills the layout with weights read from the symmetric matrix `j`.
    pub fn apply(&self, j: &DMatrix<f64>, epsilon: f64, scale: DiagonalScale) -> Result<BandedCoupling> {
        check_symmetric(j, self.n)?;
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be finite and nonnegative, got {epsilon}"
            )));
        }
        let s = scale.factor(self.k, epsilon);
        let couplings = self
            .entries
            .iter()
            .map(|e| {
                let v = j[e.source];
                let w = match e.role {
                    BlockRole::Diagonal => 0.5 * s * v,
                    BlockRole::Intra => s * v,
                    BlockRole::Cross | BlockRole::CrossDiagonal => -epsilon * v,
                };
                Coupling::new(e.spins.0, e.spins.1, w)
            })
            .collect();
        Ok(BandedCoupling {
            n: self.n,
            k: self.k,
            kappa: self.kappa,
            epsilon,
            diagonal_scale: s,
            couplings,
        })
    }

    /// Per-slot coefficients, i.e. the layout applied to an all-ones `J`.
    pub fn template(&self, epsilon: f64, scale: DiagonalScale) -> Result<BandedCoupling> {
        self.apply(&DMatrix::from_element(self.n, self.n, 1.0), epsilon, scale)
    }
}

fn check_symmetric(j: &DMatrix<f64>, n: usize) -> Result<()> {
    if j.nrows() != n || j.ncols() != n {
        return Err(Error::Dimension(format!(
            "coupling matrix is {}x{}, layout expects {n}x{n}",
            j.nrows(),
            j.ncols()
        )));
    }
    let tol = 1e-10 * j.amax().max(1.0);
    for c in 0..n {
        for r in (c + 1)..n {
            let (a, b) = (j[(r, c)], j[(c, r)]);
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::NonFinite { row: r, col: c });
            }
            if (a - b).abs() > tol {
                return Err(Error::Asymmetric { row: r, col: c });
            }
        }
    }
    Ok(())
}

/// Banded coupling list over `K * N` spins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandedCoupling {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub kappa: usize,
    pub epsilon: f64,
    pub diagonal_scale: f64,
    pub couplings: Vec<Coupling>,
}

impl BandedCoupling {
    pub fn spins(&self) -> usize {
        self.n * self.k
    }

    pub fn coupler_count(&self) -> u64 {
        self.couplings.len() as u64
    }

    pub fn problem(&self) -> Result<IsingProblem> {
        IsingProblem::new(self.spins(), self.couplings.clone())
    }

    /// The problem rescaled to `max |w| = 1`, with the factor that maps its
    /// energies back: `E_raw = factor * E_normalized`.
    pub fn normalized(&self) -> Result<(IsingProblem, f64)> {
        let raw = self.problem()?;
        let max = raw.max_abs_weight();
        if max == 0.0 {
            return Ok((raw, 1.0));
        }
        Ok((raw.scaled(1.0 / max), max))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// Bands a single-component coupling matrix: keeps `J_ij` for
/// `0 < j - i < band_offset` and `J_ii / 2` on the diagonal.
pub fn band_single(j: &DMatrix<f64>, band_offset: usize) -> Result<BandedCoupling> {
    let n = j.nrows();
    check_offset(n, band_offset)?;
    EmbeddingLayout::build(n, 1, band_offset - 1)?.apply(j, 0.0, DiagonalScale::Unit)
}

/// Bands the `K`-component block matrix: diagonal blocks carry the scaled
/// banded `J`, upper off-diagonal blocks carry `-eps J` on the band.
pub fn band_multi(
    j: &DMatrix<f64>,
    k: usize,
    epsilon: f64,
    band_offset: usize,
    scale: DiagonalScale,
) -> Result<BandedCoupling> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "multi-component banding needs K >= 2, got {k}"
        )));
    }
    let n = j.nrows();
    check_offset(n, band_offset)?;
    EmbeddingLayout::build(n, k, band_offset - 1)?.apply(j, epsilon, scale)
}

fn check_offset(n: usize, offset: usize) -> Result<()> {
    if n < 2 || offset < 2 || offset > n {
        return Err(Error::InvalidBand { offset, n });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheKey {
    pub n: usize,
    pub k: usize,
    pub c_limit: u64,
}

/// Layouts keyed by problem shape and budget. Concurrent readers share the
/// map; a racing duplicate build inserts nothing new since layouts are
/// deterministic.
#[derive(Debug, Default)]
pub struct EmbeddingCache {
    layouts: RwLock<HashMap<CacheKey, Arc<EmbeddingLayout>>>,
    builds: AtomicUsize,
}

#[derive(Serialize, Deserialize)]
struct CacheFileEntry {
    key: CacheKey,
    layout: EmbeddingLayout,
}

impl EmbeddingCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, n: usize, k: usize, budget: &CouplerBudget) -> Option<Arc<EmbeddingLayout>> {
        let key = CacheKey {
            n,
            k,
            c_limit: budget.c_limit,
        };
        self.layouts.read().expect("cache lock").get(&key).cloned()
    }

    pub fn get_or_build(
        &self,
        n: usize,
        k: usize,
        budget: &CouplerBudget,
    ) -> Result<Arc<EmbeddingLayout>> {
        if let Some(hit) = self.get(n, k, budget) {
            return Ok(hit);
        }
        budget.validate_for(n, k)?;
        let kappa = compute_kappa_for(n, k, budget.c_limit)?;
        let layout = Arc::new(EmbeddingLayout::build(n, k, kappa)?);
        self.builds.fetch_add(1, Ordering::Relaxed);
        let key = CacheKey {
            n,
            k,
            c_limit: budget.c_limit,
        };
        let mut map = self.layouts.write().expect("cache lock");
        Ok(Arc::clone(map.entry(key).or_insert(layout)))
    }

    /// Number of layouts built (cache misses) so far.
    pub fn builds(&self) -> usize {
        self.builds.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.layouts.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let entries: Vec<CacheFileEntry> =
            serde_json::from_str(&text).map_err(|e| Error::Serialization(e.to_string()))?;
        let cache = Self::new();
        {
            let mut map = cache.layouts.write().expect("cache lock");
            for e in entries {
                map.insert(e.key, Arc::new(e.layout));
            }
        }
        Ok(cache)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let map = self.layouts.read().expect("cache lock");
        let mut entries: Vec<CacheFileEntry> = map
            .iter()
            .map(|(k, v)| CacheFileEntry {
                key: *k,
                layout: (**v).clone(),
            })
            .collect();
        entries.sort_by_key(|e| (e.key.n, e.key.k, e.key.c_limit));
        let text =
            serde_json::to_string(&entries).map_err(|e| Error::Serialization(e.to_string()))?;
        std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::test_support::{all_states, brute_min};
    use crate::ising::{solve_exhaustive, Spin};
    use crate::linalg::{gram, test_support::random_matrix, DataMatrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_kappa(n: usize, c_limit: u64) -> Option<usize> {
        (0..n)
            .filter(|&k| (2 * n as u64 - k as u64) * (k as u64 + 1) / 2 <= c_limit)
            .max()
    }

    fn random_j(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let x = DataMatrix::new(random_matrix(rng, 4, n)).unwrap();
        -gram(&x)
    }

    fn quad(m: &DMatrix<f64>, s: &[Spin]) -> f64 {
        let v = nalgebra::DVector::from_iterator(s.len(), s.iter().map(|&x| f64::from(x)));
        (v.transpose() * m * &v)[(0, 0)]
    }

    #[test]
    fn coupler_count_examples() {
        assert_eq!(coupler_count(150, 1), 11_325);
        assert_eq!(coupler_count(1, 1), 1);
        assert_eq!(coupler_count(4, 2), 36);
        assert_eq!(CouplerBudget::default().c_limit, 11_325);
    }

    #[test]
    fn compute_kappa_examples() {
        assert_eq!(compute_kappa(300, 11_325).unwrap(), 39);
        assert_eq!(compute_kappa(150, 11_325).unwrap(), 149);
        assert_eq!(brute_kappa(4, 10), Some(3));
        assert_eq!(compute_kappa(4, 10).unwrap(), 3);
        assert!(matches!(
            compute_kappa(2, 1),
            Err(Error::InfeasibleBudget { .. })
        ));
        // 2N - 1 is the smallest budget with every spin coupled
        assert_eq!(compute_kappa(10, 19).unwrap(), 1);
        assert!(compute_kappa(10, 18).is_err());
    }

    #[test]
    fn compute_kappa_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..1000 {
            let n = rng.gen_range(2..=500);
            let c = rng.gen_range(1..=coupler_count(n, 1) + 50);
            match (compute_kappa(n, c), brute_kappa(n, c)) {
                (Ok(k), Some(b)) => assert_eq!(k, b),
                (Err(_), Some(b)) => assert_eq!(b, 0),
                (Err(_), None) => {}
                (Ok(k), None) => panic!("kappa {k} where brute force found none"),
            }
        }
    }

    #[test]
    fn budget_is_respected_for_every_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..300 {
            let n = rng.gen_range(2..=120);
            let k = rng.gen_range(1..=4);
            let c = rng.gen_range(1..=coupler_count(n, k) + 10);
            if let Ok(kappa) = compute_kappa_for(n, k, c) {
                let layout = EmbeddingLayout::build(n, k, kappa).unwrap();
                assert!(layout.coupler_count() <= c);
                assert_eq!(layout.coupler_count(), banded_coupler_count(n, k, kappa));
                if kappa + 1 < n {
                    assert!(banded_coupler_count(n, k, kappa + 1) > c);
                }
            }
        }
    }

    #[test]
    fn band_single_example() {
        let j = -DMatrix::from_element(2, 2, 1.0);
        let b = band_single(&j, 2).unwrap();
        assert_eq!(
            b.couplings,
            vec![
                Coupling::new(0, 0, -0.5),
                Coupling::new(0, 1, -1.0),
                Coupling::new(1, 1, -0.5)
            ]
        );
        assert_eq!(b.kappa, 1);
    }

    #[test]
    fn band_single_superdiagonal_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for n in 2..12 {
            let b = band_single(&random_j(&mut rng, n), 2).unwrap();
            assert_eq!(b.coupler_count(), 2 * n as u64 - 1);
            assert!(b.couplings.iter().all(|c| c.j - c.i <= 1));
        }
    }

    #[test]
    fn full_band_reproduces_quadratic_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for n in 2..=10 {
            let j = random_j(&mut rng, n);
            let b = band_single(&j, n).unwrap();
            let p = b.problem().unwrap();
            for s in all_states(n) {
                let lhs = 2.0 * p.energy(&s).unwrap();
                assert!((lhs - quad(&j, &s)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn band_rejects_bad_input() {
        let mut j = DMatrix::from_element(3, 3, 1.0);
        j[(0, 2)] = 2.0;
        assert!(matches!(band_single(&j, 3), Err(Error::Asymmetric { .. })));
        let j = DMatrix::from_element(3, 3, 1.0);
        assert!(matches!(band_single(&j, 1), Err(Error::InvalidBand { .. })));
        assert!(matches!(band_single(&j, 4), Err(Error::InvalidBand { .. })));
        assert!(band_multi(&j, 1, 1.0, 3, DiagonalScale::default()).is_err());
        assert!(band_multi(&j, 2, -1.0, 3, DiagonalScale::default()).is_err());
    }

    #[test]
    fn multi_full_band_reproduces_kronecker_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for (n, k) in [(2, 2), (3, 2), (4, 3), (5, 2)] {
            let j = random_j(&mut rng, n);
            let eps = rng.gen_range(0.0..3.0);
            let b = band_multi(&j, k, eps, n, DiagonalScale::ComponentCount).unwrap();
            assert_eq!(b.coupler_count(), coupler_count(n, k));
            let mut dense = DMatrix::zeros(k * n, k * n);
            for k1 in 0..k {
                for k2 in 0..k {
                    let block = if k1 == k2 { &j * k as f64 } else { &j * -eps };
                    dense.view_mut((k1 * n, k2 * n), (n, n)).copy_from(&block);
                }
            }
            let p = b.problem().unwrap();
            for s in all_states(k * n) {
                assert!((2.0 * p.energy(&s).unwrap() - quad(&dense, &s)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn multi_block_counts() {
        for n in 2..9 {
            for kappa in 1..n {
                let layout = EmbeddingLayout::build(n, 3, kappa).unwrap();
                let diag = diagonal_block_couplers(n, kappa);
                let cross = cross_block_couplers(n, kappa);
                assert_eq!(layout.coupler_count(), 3 * diag + 3 * cross);
            }
            assert_eq!(banded_coupler_count(n, 3, n - 1), coupler_count(n, 3));
        }
    }

    #[test]
    fn two_by_two_multi_optimum() {
        let j = -DMatrix::from_element(2, 2, 1.0);
        let b = band_multi(&j, 2, 1.0, 2, DiagonalScale::ComponentCount).unwrap();
        let set = solve_exhaustive(&b.problem().unwrap()).unwrap();
        // every column is +-[1,1]; the cross blocks make the two columns opposite
        assert_eq!(set.samples(), &[vec![1, 1, -1, -1]]);
    }

    #[test]
    fn every_spin_is_coupled() {
        for n in 2..15 {
            for k in 1..4 {
                for kappa in 1..n {
                    let layout = EmbeddingLayout::build(n, k, kappa).unwrap();
                    let mut seen = vec![false; n * k];
                    for e in layout.entries().iter().filter(|e| e.spins.0 != e.spins.1) {
                        seen[e.spins.0] = true;
                        seen[e.spins.1] = true;
                    }
                    assert!(seen.iter().all(|&s| s), "N={n} K={k} kappa={kappa}");
                }
            }
        }
    }

    #[test]
    fn full_band_argmin_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for _ in 0..30 {
            let n = rng.gen_range(2..=12);
            let j = random_j(&mut rng, n);
            let banded = solve_exhaustive(&band_single(&j, n).unwrap().problem().unwrap()).unwrap();
            let dense = brute_min(&crate::ising::test_support::dense_problem(&j)).1;
            assert_eq!(banded.samples(), &dense[..]);
        }
    }

    #[test]
    fn zero_epsilon_decouples_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        for _ in 0..20 {
            let n = rng.gen_range(2..=6);
            let j = random_j(&mut rng, n);
            let single = solve_exhaustive(&band_single(&j, n).unwrap().problem().unwrap()).unwrap();
            let multi = band_multi(&j, 2, 0.0, n, DiagonalScale::default()).unwrap();
            let set = solve_exhaustive(&multi.problem().unwrap()).unwrap();
            let best = &single.samples()[0];
            for s in set.samples() {
                for block in s.chunks(n) {
                    let sign = block[0];
                    let canon: Vec<Spin> = block.iter().map(|v| v * sign).collect();
                    assert_eq!(&canon, best);
                }
            }
        }
    }

    #[test]
    fn normalization_scales_to_unit() {
        let j = DMatrix::from_row_slice(2, 2, &[-4.0, 2.0, 2.0, -1.0]);
        let b = band_single(&j, 2).unwrap();
        let (p, factor) = b.normalized().unwrap();
        assert_eq!(factor, 2.0);
        assert_eq!(p.max_abs_weight(), 1.0);
        let raw = b.problem().unwrap();
        let s = [1, -1];
        assert_eq!(raw.energy(&s).unwrap(), factor * p.energy(&s).unwrap());
    }

    #[test]
    fn json_shape() {
        let j = -DMatrix::from_element(2, 2, 1.0);
        let v: serde_json::Value =
            serde_json::from_str(&band_single(&j, 2).unwrap().to_json().unwrap()).unwrap();
        assert_eq!(v["N"], 2);
        assert_eq!(v["K"], 1);
        assert_eq!(v["kappa"], 1);
        assert_eq!(v["couplings"][1], serde_json::json!([0, 1, -1.0]));
    }

    #[test]
    fn cache_behaviour() {
        let cache = EmbeddingCache::new();
        let budget = CouplerBudget::default();
        let a = cache.get_or_build(150, 1, &budget).unwrap();
        let b = cache.get_or_build(150, 1, &budget).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(cache.builds(), 1);
        assert_eq!(*a, EmbeddingLayout::build(150, 1, 149).unwrap());
        assert_eq!(a.coupler_count(), 11_325);

        let c = cache.get_or_build(150, 2, &budget).unwrap();
        assert_eq!(cache.builds(), 2);
        assert_eq!(cache.len(), 2);
        assert_ne!(*a, *c);
        assert!(c.coupler_count() <= budget.c_limit);
    }

    #[test]
    fn cache_round_trips_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.json");
        let cache = EmbeddingCache::new();
        let budget = CouplerBudget::from_c_limit(500).unwrap();
        let built = cache.get_or_build(40, 2, &budget).unwrap();
        cache.save(&path).unwrap();
        let loaded = EmbeddingCache::load(&path).unwrap();
        assert_eq!(*loaded.get(40, 2, &budget).unwrap(), *built);
        assert_eq!(loaded.builds(), 0);
    }

    #[test]
    fn concurrent_builds_agree() {
        let cache = Arc::new(EmbeddingCache::new());
        let budget = CouplerBudget::default();
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let cache = Arc::clone(&cache);
                std::thread::spawn(move || cache.get_or_build(80, 2, &budget).unwrap())
            })
            .collect();
        let layouts: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        assert!(layouts.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(cache.len(), 1);
    }
}
