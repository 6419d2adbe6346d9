//! Training-set corruption protocols.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::linalg::DataMatrix;

fn check_fraction(fraction: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!(
            "fraction must lie in [0, 1], got {fraction}"
        )));
    }
    Ok(())
}

/// Class contamination of the training pool.
///
/// The new training set holds every `target` sample of `data.train`, with
/// `ceil(fraction * N)` of them (chosen uniformly) swapped for uniformly
/// chosen samples of the other classes. Returned labels are the true labels
/// of the resulting samples; the second value lists the replaced positions.
/// The test split is untouched.
pub fn corrupt_mislabel(
    data: &LabeledDataset,
    target: &str,
    fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, Vec<usize>)> {
    check_fraction(fraction)?;
    let labels = data
        .train_labels
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("mislabeling needs training labels".into()))?;
    let targets: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == target).collect();
    let others: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != target).collect();
    if targets.is_empty() || others.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "mislabeling needs samples of class '{target}' and of another class"
        )));
    }
    let n = targets.len();
    let count = ((fraction * n as f64) - 1e-9).ceil().max(0.0) as usize;
    if count > others.len() {
        return Err(Error::InvalidArgument(format!(
            "{count} replacements requested but only {} other-class samples",
            others.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut replaced = sample(&mut rng, n, count).into_vec();
    replaced.sort_unstable();
    let donors = sample(&mut rng, others.len(), count).into_vec();

    let mut chosen = targets.clone();
    for (&slot, &donor) in replaced.iter().zip(&donors) {
        chosen[slot] = others[donor];
    }
    let train = data.train.select_samples(&chosen)?;
    let train_labels = chosen.iter().map(|&i| labels[i].clone()).collect();
    Ok((
        LabeledDataset {
            train,
            train_labels: Some(train_labels),
            ..data.clone()
        },
        replaced,
    ))
}

/// Adds i.i.d. `N(0, sigma^2)` noise to every entry of `round(fraction * N)`
/// uniformly chosen samples. Returns the data and the corrupted indices.
pub fn corrupt_noise(
    x: &DataMatrix,
    fraction: f64,
    sigma: f64,
    seed: u64,
) -> Result<(DataMatrix, Vec<usize>)> {
    check_fraction(fraction)?;
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sigma must be finite and nonnegative, got {sigma}"
        )));
    }
    let n = x.samples();
    let count = (fraction * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = sample(&mut rng, n, count).into_vec();
    chosen.sort_unstable();
    let mut out: DMatrix<f64> = x.as_matrix().clone();
    if sigma > 0.0 {
        for &s in &chosen {
            for v in out.column_mut(s).iter_mut() {
                *v += sigma * rng.sample::<f64, _>(StandardNormal);
            }
        }
    }
    Ok((DataMatrix::new(out)?, chosen))
}
