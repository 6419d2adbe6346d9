//! Benchmark protocols: Gaussian toy, two-class mislabeling and process fault
//! detection, each run over seeded trials for every method.
//!
//! Trial `t` uses seed `seed + t` for its data and solvers, so per-trial rows
//! do not depend on how trials are spread over threads.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{l1_bf, l2_pca, L1bfConfig};
use crate::embedding::{CouplerBudget, DiagonalScale, EmbeddingCache};
use crate::error::{Error, Result};
use crate::eval::data::{gen_process_data, gen_two_class, GaussianMixture, ProcessSpec, Standardizer};
use crate::eval::{
    corrupt_mislabel, corrupt_noise, load_csv, mean_sem, reconstruction_error, robust_scale,
    roc_prc, spe_scores, CsvSchema, LabeledDataset, ThresholdGrid,
};
use crate::ising::SolverChoice;
use crate::linalg::{svd, ComponentBasis, DataMatrix};
use crate::qapca::{assignment_rank, BinaryAssignment, Qapca, QapcaConfig, SolveDiagnostics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "qapca")]
    Qapca,
    #[serde(rename = "qapca-r")]
    QapcaR,
    #[serde(rename = "l1-bf")]
    L1bf,
    #[serde(rename = "svd")]
    Svd,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Qapca, Method::QapcaR, Method::L1bf, Method::Svd];

    pub fn name(self) -> &'static str {
        match self {
            Self::Qapca => "qapca",
            Self::QapcaR => "qapca-r",
            Self::L1bf => "l1-bf",
            Self::Svd => "svd",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method '{s}' (qapca, qapca-r, l1-bf, svd)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Gaussian,
    Wbcd,
    Tep,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Wbcd => "wbcd",
            Self::Tep => "tep",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "wbcd" => Ok(Self::Wbcd),
            "tep" => Ok(Self::Tep),
            _ => Err(Error::Config(format!(
                "unknown experiment '{s}' (gaussian, wbcd, tep)"
            ))),
        }
    }
}

/// Every knob of a run. Serialized verbatim into result files so a run can
/// be repeated from its output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub k: usize,
    pub epsilon: f64,
    /// Reads per solve; unset means 10 for qapca and 5 per component for
    /// qapca-r.
    pub reads: Option<usize>,
    /// `exhaustive`, `sa` or `remote`.
    pub solver: String,
    pub sweeps: usize,
    pub remote_url: Option<String>,
    pub seed: u64,
    pub band_climit: Option<u64>,
    pub n_limit: usize,
    pub chain_margin: usize,
    pub diagonal_scale: DiagonalScale,
    /// Method used by `fit`.
    pub method: Method,
    /// Methods compared by `experiment`.
    pub methods: Vec<Method>,
    pub l1bf_restarts: usize,
    pub trials: usize,
    pub n: usize,
    pub d: usize,
    pub test_samples: usize,
    /// Fraction of training samples hit by additive noise; unset means 0 for
    /// gaussian and 0.2 for tep.
    pub outlier_fraction: Option<f64>,
    pub outlier_sigma: f64,
    pub mislabel_fraction: f64,
    pub target_class: Option<String>,
    pub input: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub test_data: Option<PathBuf>,
    pub label_column: Option<String>,
    pub drop_columns: Vec<String>,
    pub fault_onset: Option<usize>,
    pub synthetic: bool,
    pub out: Option<PathBuf>,
    /// `csv` or `json`.
    pub format: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            k: 2,
            epsilon: 100.0,
            reads: None,
            solver: "sa".into(),
            sweeps: 1000,
            remote_url: None,
            seed: 0,
            band_climit: None,
            n_limit: 175,
            chain_margin: 25,
            diagonal_scale: DiagonalScale::default(),
            method: Method::Qapca,
            methods: Method::ALL.to_vec(),
            l1bf_restarts: 1,
            trials: 10,
            n: 20,
            d: 50,
            test_samples: 200,
            outlier_fraction: None,
            outlier_sigma: 100.0,
            mislabel_fraction: 0.2,
            target_class: None,
            input: None,
            data: None,
            test_data: None,
            label_column: None,
            drop_columns: Vec::new(),
            fault_onset: None,
            synthetic: false,
            out: None,
            format: "csv".into(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.reads == Some(0) {
            return bad("reads must be at least 1".into());
        }
        if self.sweeps == 0 {
            return bad("sweeps must be at least 1".into());
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return bad(format!("epsilon must be finite and nonnegative, got {}", self.epsilon));
        }
        if self.l1bf_restarts == 0 {
            return bad("l1bf_restarts must be at least 1".into());
        }
        if self.n < 2 {
            return bad("n must be at least 2".into());
        }
        if self.d == 0 {
            return bad("d must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        match self.solver.as_str() {
            "exhaustive" | "sa" => {}
            "remote" if self.remote_url.is_some() => {}
            "remote" => return bad("solver 'remote' needs remote_url".into()),
            other => return bad(format!("unknown solver '{other}' (exhaustive, sa, remote)")),
        }
        if !matches!(self.format.as_str(), "csv" | "json") {
            return bad(format!("unknown format '{}' (csv, json)", self.format));
        }
        for (name, f) in [
            ("outlier_fraction", self.outlier_fraction.unwrap_or(0.0)),
            ("mislabel_fraction", self.mislabel_fraction),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return bad(format!("{name} must lie in [0, 1], got {f}"));
            }
        }
        if !(self.outlier_sigma.is_finite() && self.outlier_sigma >= 0.0) {
            return bad("outlier_sigma must be finite and nonnegative".into());
        }
        self.budget()?;
        Ok(())
    }

    pub fn budget(&self) -> Result<CouplerBudget> {
        match self.band_climit {
            Some(c) => CouplerBudget::from_c_limit(c),
            None => CouplerBudget::from_n_limit(self.n_limit, self.chain_margin),
        }
    }

    pub fn solver_choice(&self) -> Result<SolverChoice> {
        Ok(match self.solver.as_str() {
            "exhaustive" => SolverChoice::exhaustive(),
            "sa" => match SolverChoice::anneal() {
                SolverChoice::Anneal {
                    beta_initial,
                    beta_final,
                    ..
                } => SolverChoice::Anneal {
                    sweeps: self.sweeps,
                    beta_initial,
                    beta_final,
                },
                other => other,
            },
            "remote" => SolverChoice::remote(self.remote_url.clone().unwrap_or_default()),
            other => return Err(Error::Config(format!("unknown solver '{other}'"))),
        })
    }

    pub fn qapca_config(&self, method: Method, seed: u64) -> Result<QapcaConfig> {
        let default_reads = if method == Method::QapcaR { 5 } else { 10 };
        Ok(QapcaConfig {
            k: self.k,
            epsilon: self.epsilon,
            reads: self.reads.unwrap_or(default_reads),
            solver: self.solver_choice()?,
            budget: self.budget()?,
            seed,
            diagonal_scale: self.diagonal_scale,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    /// Parses a TOML config. Result CSVs are accepted too: their leading
    /// `# ` lines are the echoed config.
    pub fn from_toml(text: &str) -> Result<Self> {
        let body = if text.lines().next().is_some_and(|l| l.starts_with("# ")) {
            text.lines()
                .take_while(|l| l.starts_with('#'))
                .map(|l| l.trim_start_matches('#').trim_start())
                .collect::<Vec<_>>()
                .join("\n")
        } else {
            text.to_string()
        };
        toml::from_str(&body).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    /// Fewer than `K` independent components; the basis spans what was found.
    Degenerate,
    Failed,
}

/// A fitted basis plus what the method reported along the way.
#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub method: Method,
    pub status: Status,
    pub basis: Option<ComponentBasis>,
    pub assignment: Option<BinaryAssignment>,
    /// Rank of `X B` (or of the basis for SVD).
    pub rank: usize,
    pub diagnostics: Vec<SolveDiagnostics>,
    pub message: Option<String>,
}

fn degenerate_basis(x: &DataMatrix, b: &BinaryAssignment, rank: usize) -> Result<Option<ComponentBasis>> {
    if rank == 0 {
        return Ok(None);
    }
    let u = svd(&(x.as_matrix() * b.as_matrix()))?.u;
    Ok(Some(ComponentBasis::new(u.columns(0, rank).into_owned())?))
}

/// Fits `method` on `x`. Degenerate components are reported, not raised.
pub fn run_method(
    method: Method,
    x: &DataMatrix,
    config: &RunConfig,
    seed: u64,
    cache: &Arc<EmbeddingCache>,
) -> Result<MethodOutcome> {
    let k = config.k;
    let outcome = |status, basis, assignment, rank, diagnostics| MethodOutcome {
        method,
        status,
        basis,
        assignment,
        rank,
        diagnostics,
        message: None,
    };
    let degenerate = |rank: usize, b: BinaryAssignment, diagnostics| -> Result<MethodOutcome> {
        let basis = degenerate_basis(x, &b, rank)?;
        Ok(MethodOutcome {
            message: Some(format!("rank {rank} < K={k}")),
            ..outcome(Status::Degenerate, basis, Some(b), rank, diagnostics)
        })
    };
    match method {
        Method::Qapca => {
            let runner = Qapca::with_cache(config.qapca_config(method, seed)?, Arc::clone(cache))?;
            match runner.multi(x) {
                Ok(fit) => Ok(outcome(Status::Ok, Some(fit.basis), Some(fit.assignment), k, vec![fit.diagnostics])),
                Err(Error::DegenerateComponents { rank, assignment, .. }) => degenerate(rank, *assignment, vec![]),
                Err(e) => Err(e),
            }
        }
        Method::QapcaR => {
            let runner = Qapca::with_cache(config.qapca_config(method, seed)?, Arc::clone(cache))?;
            let fit = runner.recursive(x)?;
            let rank = fit.basis.components();
            Ok(outcome(Status::Ok, Some(fit.basis), Some(fit.assignment), rank, fit.diagnostics))
        }
        Method::L1bf => {
            let cfg = L1bfConfig {
                restarts: config.l1bf_restarts,
                max_flips: None,
                seed,
            };
            match l1_bf(x, k, &cfg) {
                Ok(fit) => Ok(outcome(Status::Ok, Some(fit.basis), Some(fit.assignment), k, vec![])),
                Err(Error::DegenerateComponents { rank, assignment, .. }) => degenerate(rank, *assignment, vec![]),
                Err(e) => Err(e),
            }
        }
        Method::Svd => {
            let basis = l2_pca(x, k)?;
            Ok(outcome(Status::Ok, Some(basis), None, k, vec![]))
        }
    }
}

/// One method on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub experiment: String,
    pub trial: usize,
    pub seed: u64,
    pub method: Method,
    pub k: usize,
    pub n: usize,
    pub epsilon: f64,
    pub status: Status,
    pub rank: usize,
    pub components: usize,
    pub recon_train: Option<f64>,
    pub recon_test: Option<f64>,
    pub orthonormality_error: Option<f64>,
    pub auroc: Option<f64>,
    pub auprc: Option<f64>,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub trials: usize,
    pub ok: usize,
    pub degenerate: usize,
    pub failed: usize,
    pub rank_mean: f64,
    pub recon_train_mean: Option<f64>,
    pub recon_train_sem: Option<f64>,
    pub recon_test_mean: Option<f64>,
    pub recon_test_sem: Option<f64>,
    pub auroc_mean: Option<f64>,
    pub auroc_sem: Option<f64>,
    pub auprc_mean: Option<f64>,
    pub auprc_sem: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub experiment: ExperimentKind,
    pub config: RunConfig,
    pub trials: Vec<TrialRow>,
    pub summary: Vec<SummaryRow>,
}

/// Training data and the held-out evaluation set for one trial.
struct TrialData {
    train: DataMatrix,
    test: DataMatrix,
    /// Faulty flags of `test`, for detection experiments.
    faulty: Option<Vec<bool>>,
}

fn evaluate(
    kind: ExperimentKind,
    trial: usize,
    seed: u64,
    data: &TrialData,
    config: &RunConfig,
    cache: &Arc<EmbeddingCache>,
) -> Vec<TrialRow> {
    config
        .methods
        .iter()
        .map(|&method| {
            let mut row = TrialRow {
                experiment: kind.name().into(),
                trial,
                seed,
                method,
                k: config.k,
                n: data.train.samples(),
                epsilon: config.epsilon,
                status: Status::Failed,
                rank: 0,
                components: 0,
                recon_train: None,
                recon_test: None,
                orthonormality_error: None,
                auroc: None,
                auprc: None,
                message: None,
            };
            let result = run_method(method, &data.train, config, seed, cache).and_then(|out| {
                row.status = out.status;
                row.rank = out.rank;
                row.message = out.message;
                if let Some(basis) = &out.basis {
                    row.components = basis.components();
                    row.orthonormality_error = Some(basis.orthonormality_error());
                    row.recon_train = Some(reconstruction_error(&data.train, basis)?);
                    row.recon_test = Some(reconstruction_error(&data.test, basis)?);
                    if let Some(faulty) = &data.faulty {
                        let scores = spe_scores(&data.test, basis)?;
                        let curves = roc_prc(&scores, faulty, &ThresholdGrid::standard())?;
                        row.auroc = Some(curves.auroc);
                        row.auprc = Some(curves.auprc);
                    }
                }
                Ok(())
            });
            if let Err(e) = result {
                row.status = Status::Failed;
                row.message = Some(e.to_string());
            }
            row
        })
        .collect()
}

fn summarize(config: &RunConfig, rows: &[TrialRow]) -> Vec<SummaryRow> {
    config
        .methods
        .iter()
        .map(|&method| {
            let mine: Vec<&TrialRow> = rows.iter().filter(|r| r.method == method).collect();
            let stat = |f: &dyn Fn(&TrialRow) -> Option<f64>| {
                let v: Vec<f64> = mine.iter().filter_map(|r| f(r)).collect();
                if v.is_empty() {
                    (None, None)
                } else {
                    let (m, s) = mean_sem(&v);
                    (Some(m), Some(s))
                }
            };
            let (recon_train_mean, recon_train_sem) = stat(&|r| r.recon_train);
            let (recon_test_mean, recon_test_sem) = stat(&|r| r.recon_test);
            let (auroc_mean, auroc_sem) = stat(&|r| r.auroc);
            let (auprc_mean, auprc_sem) = stat(&|r| r.auprc);
            let count = |s: Status| mine.iter().filter(|r| r.status == s).count();
            SummaryRow {
                method,
                trials: mine.len(),
                ok: count(Status::Ok),
                degenerate: count(Status::Degenerate),
                failed: count(Status::Failed),
                rank_mean: mine.iter().map(|r| r.rank as f64).sum::<f64>() / mine.len().max(1) as f64,
                recon_train_mean,
                recon_train_sem,
                recon_test_mean,
                recon_test_sem,
                auroc_mean,
                auroc_sem,
                auprc_mean,
                auprc_sem,
            }
        })
        .collect()
}

fn run_trials<F>(kind: ExperimentKind, config: &RunConfig, make: F) -> Result<ExperimentResult>
where
    F: Fn(usize, u64) -> Result<TrialData> + Sync,
{
    config.validate()?;
    let cache = Arc::new(EmbeddingCache::new());
    let per_trial: Vec<Result<Vec<TrialRow>>> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let seed = config.seed.wrapping_add(t as u64);
            let data = make(t, seed)?;
            Ok(evaluate(kind, t, seed, &data, config, &cache))
        })
        .collect();
    let mut trials = Vec::new();
    for rows in per_trial {
        trials.extend(rows?);
    }
    Ok(ExperimentResult {
        experiment: kind,
        summary: summarize(config, &trials),
        config: config.clone(),
        trials,
    })
}

/// Sum of three Gaussians in `d` dimensions; `n` training and
/// `test_samples` held-out samples, standardized with training statistics.
/// A fraction of training samples then receives `N(0, sigma^2)` noise.
pub fn run_gaussian(config: &RunConfig) -> Result<ExperimentResult> {
    let fraction = config.outlier_fraction.unwrap_or(0.0);
    run_trials(ExperimentKind::Gaussian, config, |_, seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mixture = GaussianMixture::random(config.d, &mut rng);
        let train_raw = mixture.sample(config.n, &mut rng);
        let test_raw = mixture.sample(config.test_samples.max(1), &mut rng);
        let scaler = Standardizer::fit(&train_raw);
        let (train, _) = corrupt_noise(&scaler.apply(&train_raw)?, fraction, config.outlier_sigma, seed)?;
        Ok(TrialData {
            train,
            test: scaler.apply(&test_raw)?,
            faulty: None,
        })
    })
}

fn load_wbcd(config: &RunConfig) -> Result<LabeledDataset> {
    if config.synthetic {
        return gen_two_class(30, (357, 212), config.seed);
    }
    let path = config.data.as_ref().ok_or_else(|| {
        Error::Config("wbcd needs --data <csv> (or --synthetic)".into())
    })?;
    let schema = CsvSchema {
        label_column: Some(config.label_column.clone().unwrap_or_else(|| "diagnosis".into())),
        drop_columns: if config.drop_columns.is_empty() {
            vec!["id".into()]
        } else {
            config.drop_columns.clone()
        },
    };
    load_csv(path, &schema)
}

/// Robustly scaled two-class data. Per trial, `n` samples of the target
/// class (by default the most frequent one) form the training set, with a
/// fraction swapped for other-class samples; the remaining target samples
/// are the clean held-out set.
pub fn run_wbcd(config: &RunConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let raw = load_wbcd(config)?;
    let scaled = robust_scale(&raw.train)?;
    let labels = raw
        .train_labels
        .clone()
        .ok_or_else(|| Error::Config("wbcd data needs a label column".into()))?;
    let classes = raw.classes();
    let target = match &config.target_class {
        Some(t) => t.clone(),
        None => classes
            .iter()
            .max_by_key(|c| (labels.iter().filter(|l| l == c).count(), std::cmp::Reverse((*c).clone())))
            .cloned()
            .ok_or_else(|| Error::Config("no classes found".into()))?,
    };
    let target_idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == target).collect();
    let other_idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != target).collect();
    if config.n >= target_idx.len() {
        return Err(Error::Config(format!(
            "n={} leaves no held-out samples of class '{target}' ({} available)",
            config.n,
            target_idx.len()
        )));
    }
    run_trials(ExperimentKind::Wbcd, config, |_, seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut shuffled = target_idx.clone();
        shuffled.shuffle(&mut rng);
        let (train_idx, test_idx) = shuffled.split_at(config.n);
        let pool_idx: Vec<usize> = train_idx.iter().chain(&other_idx).copied().collect();
        let pool = LabeledDataset {
            train: scaled.select_samples(&pool_idx)?,
            train_labels: Some(pool_idx.iter().map(|&i| labels[i].clone()).collect()),
            test: None,
            test_labels: None,
            fault_onset: None,
            feature_names: raw.feature_names.clone(),
        };
        let (corrupted, _) = corrupt_mislabel(&pool, &target, config.mislabel_fraction, seed)?;
        Ok(TrialData {
            train: corrupted.train,
            test: scaled.select_samples(test_idx)?,
            faulty: None,
        })
    })
}

fn load_tep(config: &RunConfig) -> Result<LabeledDataset> {
    if config.synthetic {
        let spec = ProcessSpec {
            features: 22,
            latent: 4,
            train_samples: 500,
            test_samples: 960,
            fault_onset: config.fault_onset.unwrap_or(160),
            ..ProcessSpec::default()
        };
        return gen_process_data(&spec, config.seed);
    }
    let (Some(train), Some(test)) = (&config.data, &config.test_data) else {
        return Err(Error::Config(
            "tep needs --data <normal csv> and --test-data <faulty csv> (or --synthetic)".into(),
        ));
    };
    let schema = CsvSchema {
        label_column: None,
        drop_columns: config
            .drop_columns
            .iter()
            .cloned()
            .chain(config.label_column.clone())
            .collect(),
    };
    let normal = load_csv(train, &schema)?;
    let faulty = load_csv(test, &schema)?;
    if normal.feature_names != faulty.feature_names {
        return Err(Error::Dimension("train and test files have different columns".into()));
    }
    let onset = config.fault_onset.unwrap_or(160);
    let dataset = LabeledDataset {
        test: Some(faulty.train),
        fault_onset: Some(onset),
        ..normal
    };
    dataset.validate()?;
    Ok(dataset)
}

/// Fault detection: training samples drawn from normal operation, a fraction
/// hit by large noise; SPE of the test samples swept over the threshold grid.
/// Samples at and after the fault onset count as faulty.
pub fn run_tep(config: &RunConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let data = load_tep(config)?;
    let test_raw = data.test.clone().expect("tep data has a test split");
    let onset = data.fault_onset.unwrap_or(0);
    let scaler = Standardizer::fit(data.train.as_matrix());
    let pool = scaler.apply(data.train.as_matrix())?;
    let test = scaler.apply(test_raw.as_matrix())?;
    let faulty: Vec<bool> = (0..test.samples()).map(|i| i >= onset).collect();
    if config.n > pool.samples() {
        return Err(Error::Config(format!(
            "n={} exceeds the {} normal training samples",
            config.n,
            pool.samples()
        )));
    }
    let fraction = config.outlier_fraction.unwrap_or(0.2);
    run_trials(ExperimentKind::Tep, config, |_, seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx: Vec<usize> = (0..pool.samples()).collect();
        idx.shuffle(&mut rng);
        idx.truncate(config.n);
        idx.sort_unstable();
        let (train, _) = corrupt_noise(&pool.select_samples(&idx)?, fraction, config.outlier_sigma, seed)?;
        Ok(TrialData {
            train,
            test: test.clone(),
            faulty: Some(faulty.clone()),
        })
    })
}

pub fn run_experiment(kind: ExperimentKind, config: &RunConfig) -> Result<ExperimentResult> {
    match kind {
        ExperimentKind::Gaussian => run_gaussian(config),
        ExperimentKind::Wbcd => run_wbcd(config),
        ExperimentKind::Tep => run_tep(config),
    }
}

fn csv_table<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Serialization(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
}

/// Config lines prefixed with `# `.
pub fn config_comment(config: &RunConfig) -> Result<String> {
    Ok(config
        .to_toml()?
        .lines()
        .map(|l| format!("# {l}\n"))
        .collect())
}

impl ExperimentResult {
    /// Per-trial table preceded by the echoed config.
    pub fn trials_csv(&self) -> Result<String> {
        Ok(config_comment(&self.config)? + &csv_table(&self.trials)?)
    }

    pub fn summary_csv(&self) -> Result<String> {
        Ok(config_comment(&self.config)? + &csv_table(&self.summary)?)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn summary_for(&self, method: Method) -> Option<&SummaryRow> {
        self.summary.iter().find(|s| s.method == method)
    }

    /// Held-out reconstruction errors of `method` over trials with a basis.
    pub fn recon_test(&self, method: Method) -> Vec<f64> {
        self.trials
            .iter()
            .filter(|r| r.method == method)
            .filter_map(|r| r.recon_test)
            .collect()
    }
}

/// Basis as a `D x K` table with one row per feature.
pub fn basis_csv(basis: &ComponentBasis, feature_names: &[String]) -> Result<String> {
    let m: &DMatrix<f64> = basis.as_matrix();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["feature".to_string()];
    header.extend((1..=m.ncols()).map(|k| format!("r{k}")));
    let err = |e: csv::Error| Error::Serialization(e.to_string());
    w.write_record(&header).map_err(err)?;
    for (i, row) in m.row_iter().enumerate() {
        let mut rec = vec![feature_names.get(i).cloned().unwrap_or_else(|| format!("x{}", i + 1))];
        rec.extend(row.iter().map(|v| format!("{v:.17e}")));
        w.write_record(&rec).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
}

/// Sign matrix as an `N x K` table.
pub fn assignment_csv(b: &BinaryAssignment) -> String {
    let mut out: String = (1..=b.components()).map(|k| format!("b{k}")).collect::<Vec<_>>().join(",");
    out.push('\n');
    for i in 0..b.samples() {
        let row: Vec<String> = (0..b.components()).map(|k| b.column(k)[i].to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Numerical rank of `X B` for an outcome's assignment, if it has one.
pub fn outcome_rank(x: &DataMatrix, outcome: &MethodOutcome) -> Result<Option<usize>> {
    outcome.assignment.as_ref().map(|b| assignment_rank(x, b)).transpose()
}
