//! SPE-based fault detection on a synthetic process: learn the normal
//! subspace, score test samples by squared residual, sweep thresholds.

use qapca::baselines::l2_pca;
use qapca::eval::{gen_process_data, roc_prc, spe_scores, ProcessSpec, Standardizer, ThresholdGrid};
use qapca::qapca::{qapca_recursive, QapcaConfig};

fn main() -> qapca::Result<()> {
    let spec = ProcessSpec::default();
    let data = gen_process_data(&spec, 11)?;
    let scaler = Standardizer::fit(data.train.as_matrix());
    let train = scaler.apply(data.train.as_matrix())?;
    let test = scaler.apply(data.test.as_ref().expect("process data has a test split").as_matrix())?;
    let faulty: Vec<bool> = (0..test.samples()).map(|i| i >= spec.fault_onset).collect();

    let k = spec.latent;
    let qapca = qapca_recursive(&train.select_samples(&(0..40).collect::<Vec<_>>())?, &QapcaConfig {
        k,
        reads: 5,
        ..QapcaConfig::default()
    })?;
    let pca = l2_pca(&train, k)?;
    let grid = ThresholdGrid::standard();
    for (name, basis) in [("qapca-r", &qapca.basis), ("l2-pca", &pca)] {
        let curves = roc_prc(&spe_scores(&test, basis)?, &faulty, &grid)?;
        println!("{name:>8}: AUROC {:.3}  AUPRC {:.3}", curves.auroc, curves.auprc);
    }
    Ok(())
}
