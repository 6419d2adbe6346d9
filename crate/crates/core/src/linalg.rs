//! Dense linear-algebra substrate.
//!
//! Everything here works on [`nalgebra::DMatrix<f64>`]. Problem sizes stay in
//! the low hundreds, so nothing is sparse. The SVD is nalgebra's bidiagonal
//! QR iteration; callers only rely on the round-trip contract.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Tolerance used for orthonormality checks on component bases.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// `sigma_min <= RANK_TOL * sigma_max` marks a matrix as rank deficient.
pub const RANK_TOL: f64 = 1e-10;

const SVD_MAX_ITERATIONS: usize = 10_000;

/// A `D x N` sample matrix: one column per sample, one row per feature.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix(DMatrix<f64>);

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::Empty {
                rows: values.nrows(),
                cols: values.ncols(),
            });
        }
        check_finite(&values)?;
        Ok(Self(values))
    }

    /// Builds a matrix from row-major values (`features` rows).
    pub fn from_row_slice(features: usize, samples: usize, values: &[f64]) -> Result<Self> {
        if values.len() != features * samples {
            return Err(Error::Dimension(format!(
                "{} values for a {features}x{samples} matrix",
                values.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(features, samples, values))
    }

    pub fn from_columns(columns: &[DVector<f64>]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Empty { rows: 0, cols: 0 });
        }
        Self::new(DMatrix::from_columns(columns))
    }

    pub fn features(&self) -> usize {
        self.0.nrows()
    }

    pub fn samples(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// Keeps the given sample columns, in order.
    pub fn select_samples(&self, indices: &[usize]) -> Result<Self> {
        let cols: Vec<DVector<f64>> = indices
            .iter()
            .map(|&i| self.0.column(i).into_owned())
            .collect();
        Self::from_columns(&cols)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }
}

impl TryFrom<DMatrix<f64>> for DataMatrix {
    type Error = Error;

    fn try_from(value: DMatrix<f64>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<DataMatrix> for DMatrix<f64> {
    fn from(value: DataMatrix) -> Self {
        value.0
    }
}

/// Orthonormal `D x K` basis of principal components.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentBasis(DMatrix<f64>);

impl ComponentBasis {
    /// Wraps `values`, checking `R^T R = I` within [`ORTHONORMAL_TOL`].
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.ncols() > values.nrows() {
            return Err(Error::Dimension(format!(
                "basis with {} columns in dimension {}",
                values.ncols(),
                values.nrows()
            )));
        }
        check_finite(&values)?;
        let basis = Self(values);
        let err = basis.orthonormality_error();
        if err > ORTHONORMAL_TOL {
            return Err(Error::InvalidArgument(format!(
                "columns are not orthonormal (max deviation {err:e})"
            )));
        }
        Ok(basis)
    }

    pub(crate) fn from_orthonormal(values: DMatrix<f64>) -> Self {
        Self(values)
    }

    pub fn dimension(&self) -> usize {
        self.0.nrows()
    }

    pub fn components(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// `R R^T`, the orthogonal projector onto the component span.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.0 * self.0.transpose()
    }

    /// `max |R^T R - I|` over all entries.
    pub fn orthonormality_error(&self) -> f64 {
        let k = self.0.ncols();
        let gram = self.0.tr_mul(&self.0);
        (gram - DMatrix::<f64>::identity(k, k)).amax()
    }

    /// Residual `x - R R^T x` for every column of `x`.
    pub fn residual(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let coords = self.0.tr_mul(x);
        x - &self.0 * coords
    }
}

/// Compact SVD `M = U diag(sigma) V^T` with `sigma` sorted descending.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl SvdResult {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.u.clone();
        for (mut col, s) in scaled.column_iter_mut().zip(self.singular_values.iter()) {
            col *= *s;
        }
        scaled * self.v.transpose()
    }

    /// Number of singular values above `rel_tol * sigma_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let max = self.singular_values.iter().copied().fold(0.0, f64::max);
        if max == 0.0 {
            return 0;
        }
        self.singular_values
            .iter()
            .filter(|&&s| s > rel_tol * max)
            .count()
    }
}

fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    for (c, col) in m.column_iter().enumerate() {
        if let Some(r) = col.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: r, col: c });
        }
    }
    Ok(())
}

/// `X^T X`, exactly symmetric.
pub fn gram(x: &DataMatrix) -> DMatrix<f64> {
    let m = x.as_matrix();
    let n = m.ncols();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        let ci = m.column(i);
        for j in i..n {
            let v = ci.dot(&m.column(j));
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

pub fn svd(m: &DMatrix<f64>) -> Result<SvdResult> {
    check_finite(m)?;
    let r = m.nrows().min(m.ncols());
    if r == 0 {
        return Err(Error::Empty {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let decomposition = m
        .clone()
        .try_svd(true, true, f64::EPSILON, SVD_MAX_ITERATIONS)
        .ok_or(Error::SvdNoConvergence {
            max_iterations: SVD_MAX_ITERATIONS,
        })?;
    let u = decomposition.u.expect("u requested");
    let v_t = decomposition.v_t.expect("v_t requested");
    Ok(SvdResult {
        u,
        singular_values: decomposition.singular_values,
        v: v_t.transpose(),
    })
}

/// Nearest matrix with orthonormal columns in Frobenius distance, `U V^T`.
///
/// Fails with [`Error::RankDeficient`] when the smallest singular value is at
/// most [`RANK_TOL`] times the largest, where the minimizer is not unique.
pub fn nearest_orthonormal(t: &DMatrix<f64>) -> Result<ComponentBasis> {
    let k = t.ncols();
    if k > t.nrows() {
        return Err(Error::Dimension(format!(
            "nearest orthonormal of a {}x{k} matrix needs K <= D",
            t.nrows()
        )));
    }
    let dec = svd(t)?;
    let rank = dec.rank(RANK_TOL);
    if rank < k {
        return Err(Error::RankDeficient { rank, required: k });
    }
    Ok(ComponentBasis(dec.u * dec.v.transpose()))
}

pub fn nuclear_norm(m: &DMatrix<f64>) -> Result<f64> {
    Ok(svd(m)?.singular_values.sum())
}

/// Removes the `r` direction from every sample: `X - r r^T X`.
pub fn nullspace_project(x: &DataMatrix, r: &DVector<f64>) -> Result<DataMatrix> {
    if r.len() != x.features() {
        return Err(Error::Dimension(format!(
            "direction of length {} for {} features",
            r.len(),
            x.features()
        )));
    }
    let norm = r.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotUnitVector { norm });
    }
    let coords = r.transpose() * x.as_matrix();
    DataMatrix::new(x.as_matrix() - r * coords)
}

#[cfg(test)]
pub(crate) mod test_support {
    use nalgebra::DMatrix;
    use rand::Rng;

    pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    /// Random matrix with orthonormal columns via Gram-Schmidt.
    pub fn random_orthonormal<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
        loop {
            let mut m = random_matrix(rng, rows, cols);
            let mut ok = true;
            for c in 0..cols {
                for p in 0..c {
                    let proj = m.column(p).dot(&m.column(c));
                    let prev = m.column(p).into_owned();
                    m.column_mut(c).axpy(-proj, &prev, 1.0);
                }
                let n = m.column(c).norm();
                if n < 1e-6 {
                    ok = false;
                    break;
                }
                m.column_mut(c).unscale_mut(n);
            }
            if ok {
                return m;
            }
        }
    }

    /// Naive triple-loop product, kept independent of nalgebra's kernels.
    pub fn naive_mul(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(a.nrows(), b.ncols());
        for i in 0..a.nrows() {
            for j in 0..b.ncols() {
                let mut s = 0.0;
                for l in 0..a.ncols() {
                    s += a[(i, l)] * b[(l, j)];
                }
                out[(i, j)] = s;
            }
        }
        out
    }
}
