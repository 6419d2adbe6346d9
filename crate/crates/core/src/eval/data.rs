//! Synthetic data generation and per-feature scaling.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::DataMatrix;

/// Data split into a training pool and an optional held-out set.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub train: DataMatrix,
    pub train_labels: Option<Vec<String>>,
    pub test: Option<DataMatrix>,
    pub test_labels: Option<Vec<String>>,
    /// First faulty sample index within `test`.
    pub fault_onset: Option<usize>,
    pub feature_names: Vec<String>,
}

impl LabeledDataset {
    pub fn unlabeled(train: DataMatrix) -> Self {
        let names = (0..train.features()).map(|i| format!("x{}", i + 1)).collect();
        Self {
            train,
            train_labels: None,
            test: None,
            test_labels: None,
            fault_onset: None,
            feature_names: names,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.train.features();
        if self.feature_names.len() != d {
            return Err(Error::Dimension(format!(
                "{} feature names for {d} features",
                self.feature_names.len()
            )));
        }
        if let Some(test) = &self.test {
            if test.features() != d {
                return Err(Error::Dimension(format!(
                    "train has {d} features, test has {}",
                    test.features()
                )));
            }
        }
        let check = |labels: &Option<Vec<String>>, n: usize, what: &str| match labels {
            Some(l) if l.len() != n => Err(Error::Dimension(format!(
                "{} {what} labels for {n} samples",
                l.len()
            ))),
            _ => Ok(()),
        };
        check(&self.train_labels, self.train.samples(), "train")?;
        if let Some(test) = &self.test {
            check(&self.test_labels, test.samples(), "test")?;
        } else if self.test_labels.is_some() {
            return Err(Error::Dimension("test labels without test data".into()));
        }
        if let (Some(onset), Some(test)) = (self.fault_onset, &self.test) {
            if onset > test.samples() {
                return Err(Error::Dimension(format!(
                    "fault onset {onset} beyond {} test samples",
                    test.samples()
                )));
            }
        }
        Ok(())
    }

    /// Distinct training labels in first-seen order.
    pub fn classes(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for l in self.train_labels.iter().flatten() {
            if !out.contains(l) {
                out.push(l.clone());
            }
        }
        out
    }
}

/// Three Gaussians whose sample-wise sum forms the toy dataset.
///
/// Means and covariance entries are uniform on `[-1, 1]` (upper triangle
/// mirrored); the third covariance has `-9` added to every entry. Each
/// covariance is repaired to the nearest PSD matrix by clipping negative
/// eigenvalues to zero.
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    means: Vec<DVector<f64>>,
    covariances: Vec<DMatrix<f64>>,
    factors: Vec<DMatrix<f64>>,
}

impl GaussianMixture {
    pub fn random<R: Rng>(d: usize, rng: &mut R) -> Self {
        let mut means = Vec::with_capacity(3);
        let mut covariances = Vec::with_capacity(3);
        let mut factors = Vec::with_capacity(3);
        for component in 0..3 {
            means.push(DVector::from_fn(d, |_, _| rng.gen_range(-1.0..=1.0)));
            let mut cov = DMatrix::zeros(d, d);
            for i in 0..d {
                for j in i..d {
                    let v = rng.gen_range(-1.0..=1.0);
                    cov[(i, j)] = v;
                    cov[(j, i)] = v;
                }
            }
            if component == 2 {
                cov.add_scalar_mut(-9.0);
            }
            let eig = SymmetricEigen::new(cov);
            let clipped = eig.eigenvalues.map(|l: f64| l.max(0.0));
            let q = eig.eigenvectors;
            let repaired = &q * DMatrix::from_diagonal(&clipped) * q.transpose();
            let repaired = (&repaired + repaired.transpose()) * 0.5;
            let factor = &q * DMatrix::from_diagonal(&clipped.map(f64::sqrt));
            covariances.push(repaired);
            factors.push(factor);
        }
        Self {
            means,
            covariances,
            factors,
        }
    }

    pub fn dimension(&self) -> usize {
        self.means[0].len()
    }

    pub fn covariances(&self) -> &[DMatrix<f64>] {
        &self.covariances
    }

    /// `n` raw (unstandardized) samples, one draw per component summed.
    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> DMatrix<f64> {
        let d = self.dimension();
        let mut out = DMatrix::zeros(d, n);
        for s in 0..n {
            let mut col = out.column_mut(s);
            for (mean, factor) in self.means.iter().zip(&self.factors) {
                let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                col += mean + factor * z;
            }
        }
        out
    }
}

/// Per-feature affine map `(x - center) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub center: DVector<f64>,
    pub scale: DVector<f64>,
}

impl Standardizer {
    /// Mean and population standard deviation per feature; constant features
    /// keep scale 1.
    pub fn fit(x: &DMatrix<f64>) -> Self {
        let n = x.ncols() as f64;
        let center = DVector::from_fn(x.nrows(), |i, _| x.row(i).sum() / n);
        let scale = DVector::from_fn(x.nrows(), |i, _| {
            let var = x.row(i).iter().map(|v| (v - center[i]).powi(2)).sum::<f64>() / n;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        });
        Self { center, scale }
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DataMatrix> {
        if x.nrows() != self.center.len() {
            return Err(Error::Dimension(format!(
                "scaler fitted on {} features, data has {}",
                self.center.len(),
                x.nrows()
            )));
        }
        let mut out = x.clone();
        for mut col in out.column_iter_mut() {
            col -= &self.center;
            col.component_div_assign(&self.scale);
        }
        DataMatrix::new(out)
    }
}

/// Gaussian toy data, standardized to zero mean and unit (population)
/// standard deviation per feature.
pub fn gen_gaussian_toy(d: usize, n: usize, seed: u64) -> Result<DataMatrix> {
    if n < 2 || d == 0 {
        return Err(Error::InvalidArgument(format!(
            "Gaussian toy needs D >= 1 and N >= 2 (got D={d}, N={n})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mixture = GaussianMixture::random(d, &mut rng);
    let raw = mixture.sample(n, &mut rng);
    Standardizer::fit(&raw).apply(&raw)
}

/// Linear-interpolation quantile of sorted values, position `p (n - 1)`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Median centering with the first and third quartiles mapped to -1 and +1.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustScaler(Standardizer);

impl RobustScaler {
    /// Zero-IQR features are only centered.
    pub fn fit(x: &DataMatrix) -> Result<Self> {
        if x.samples() < 4 {
            return Err(Error::InvalidArgument(format!(
                "robust scaling needs at least 4 samples, got {}",
                x.samples()
            )));
        }
        let m = x.as_matrix();
        let d = m.nrows();
        let mut center = DVector::zeros(d);
        let mut scale = DVector::from_element(d, 1.0);
        for i in 0..d {
            let mut row: Vec<f64> = m.row(i).iter().copied().collect();
            row.sort_by(f64::total_cmp);
            center[i] = quantile_sorted(&row, 0.5);
            let half_iqr = (quantile_sorted(&row, 0.75) - quantile_sorted(&row, 0.25)) / 2.0;
            if half_iqr > 0.0 {
                scale[i] = half_iqr;
            }
        }
        Ok(Self(Standardizer { center, scale }))
    }

    pub fn apply(&self, x: &DataMatrix) -> Result<DataMatrix> {
        self.0.apply(x.as_matrix())
    }
}

pub fn robust_scale(x: &DataMatrix) -> Result<DataMatrix> {
    RobustScaler::fit(x)?.apply(x)
}

/// Settings for the synthetic process-monitoring data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessSpec {
    pub features: usize,
    pub latent: usize,
    pub train_samples: usize,
    pub test_samples: usize,
    pub fault_onset: usize,
    /// Step added to the faulty variables after onset, in noise-free
    /// standard deviations.
    pub fault_magnitude: f64,
    pub faulty_variables: usize,
    pub noise: f64,
}

impl Default for ProcessSpec {
    fn default() -> Self {
        Self {
            features: 20,
            latent: 3,
            train_samples: 100,
            test_samples: 200,
            fault_onset: 40,
            fault_magnitude: 3.0,
            faulty_variables: 3,
            noise: 0.1,
        }
    }
}

/// Low-rank process data: `x = A z + noise` with a step fault on a few
/// variables in the test set from `fault_onset` on. Labels are `normal` and
/// `fault`. Not standardized.
pub fn gen_process_data(spec: &ProcessSpec, seed: u64) -> Result<LabeledDataset> {
    if spec.latent == 0 || spec.latent > spec.features || spec.faulty_variables > spec.features {
        return Err(Error::InvalidArgument(
            "process spec needs 1 <= latent <= features and faulty_variables <= features".into(),
        ));
    }
    if spec.fault_onset > spec.test_samples || spec.train_samples == 0 || spec.test_samples == 0 {
        return Err(Error::InvalidArgument("invalid process sample counts".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = spec.features;
    let a = DMatrix::from_fn(d, spec.latent, |_, _| rng.sample::<f64, _>(StandardNormal));
    let draw = |n: usize, rng: &mut ChaCha8Rng| {
        let z = DMatrix::from_fn(spec.latent, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let e = DMatrix::from_fn(d, n, |_, _| spec.noise * rng.sample::<f64, _>(StandardNormal));
        &a * z + e
    };
    let train = draw(spec.train_samples, &mut rng);
    let mut test = draw(spec.test_samples, &mut rng);
    let typical = (a.row_iter().map(|r| r.norm_squared()).sum::<f64>() / d as f64).sqrt();
    let faulty = rand::seq::index::sample(&mut rng, d, spec.faulty_variables).into_vec();
    for s in spec.fault_onset..spec.test_samples {
        for &v in &faulty {
            test[(v, s)] += spec.fault_magnitude * typical;
        }
    }
    let test_labels = (0..spec.test_samples)
        .map(|s| if s < spec.fault_onset { "normal" } else { "fault" }.to_string())
        .collect();
    let dataset = LabeledDataset {
        train: DataMatrix::new(train)?,
        train_labels: Some(vec!["normal".into(); spec.train_samples]),
        test: Some(DataMatrix::new(test)?),
        test_labels: Some(test_labels),
        fault_onset: Some(spec.fault_onset),
        feature_names: (0..d).map(|i| format!("v{}", i + 1)).collect(),
    };
    dataset.validate()?;
    Ok(dataset)
}

/// Two classes living near different low-dimensional subspaces, labeled `B`
/// (the larger class) and `M`. A stand-in for a diagnostic dataset.
pub fn gen_two_class(
    features: usize,
    per_class: (usize, usize),
    seed: u64,
) -> Result<LabeledDataset> {
    if features < 2 || per_class.0 == 0 || per_class.1 == 0 {
        return Err(Error::InvalidArgument("two-class data needs D >= 2 and both classes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let latent = 2.min(features);
    let block = |n: usize, spread: f64, offset: f64, rng: &mut ChaCha8Rng| {
        let a = DMatrix::from_fn(features, latent, |_, _| rng.sample::<f64, _>(StandardNormal));
        let z = DMatrix::from_fn(latent, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let e = DMatrix::from_fn(features, n, |_, _| 0.2 * rng.sample::<f64, _>(StandardNormal));
        (a * z) * spread + e + DMatrix::from_element(features, n, offset)
    };
    let benign = block(per_class.0, 1.0, 0.0, &mut rng);
    let malignant = block(per_class.1, 3.0, 2.0, &mut rng);
    let mut all = DMatrix::zeros(features, per_class.0 + per_class.1);
    all.columns_mut(0, per_class.0).copy_from(&benign);
    all.columns_mut(per_class.0, per_class.1).copy_from(&malignant);
    let labels = std::iter::repeat_n("B".to_string(), per_class.0)
        .chain(std::iter::repeat_n("M".to_string(), per_class.1))
        .collect();
    let dataset = LabeledDataset {
        train: DataMatrix::new(all)?,
        train_labels: Some(labels),
        test: None,
        test_labels: None,
        fault_onset: None,
        feature_names: (0..features).map(|i| format!("f{}", i + 1)).collect(),
    };
    dataset.validate()?;
    Ok(dataset)
}
