//! Command-line front end behind the `qapca` binary.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::embedding::{compute_kappa_for, DiagonalScale, EmbeddingCache};
use crate::error::Error;
use crate::eval::{load_csv, CsvSchema};
use crate::experiment::{
    assignment_csv, basis_csv, run_experiment, run_method, ExperimentKind, RunConfig, Status,
};

#[derive(Debug, Parser)]
#[command(name = "qapca", version, about = "L1-norm PCA through Ising optimization")]
pub struct Cli {
    /// TOML config; flags override its values. Result CSVs also work.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit components to a CSV file (rows are samples).
    Fit(FitArgs),
    /// Run a benchmark protocol over seeded trials.
    Experiment(ExperimentArgs),
    /// Compute (or reuse) the banded coupler layout for N samples and K components.
    Embed(EmbedArgs),
}

#[derive(Debug, Args, Default)]
pub struct SolverArgs {
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub reads: Option<usize>,
    /// exhaustive, sa or remote
    #[arg(long)]
    pub solver: Option<String>,
    #[arg(long)]
    pub sweeps: Option<usize>,
    #[arg(long)]
    pub remote_url: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub band_climit: Option<u64>,
    #[arg(long)]
    pub n_limit: Option<usize>,
    /// k, k-plus-epsilon or unit
    #[arg(long)]
    pub diagonal_scale: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// qapca, qapca-r, l1-bf or svd
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub label_column: Option<String>,
    #[arg(long = "drop-column")]
    pub drop_columns: Vec<String>,
    #[arg(long)]
    pub l1bf_restarts: Option<usize>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// gaussian, wbcd or tep
    pub name: String,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub test_samples: Option<usize>,
    /// Comma-separated subset of qapca,qapca-r,l1-bf,svd
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    #[arg(long)]
    pub l1bf_restarts: Option<usize>,
    #[arg(long)]
    pub outlier_fraction: Option<f64>,
    #[arg(long)]
    pub outlier_sigma: Option<f64>,
    #[arg(long)]
    pub mislabel_fraction: Option<f64>,
    #[arg(long)]
    pub target_class: Option<String>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub test_data: Option<PathBuf>,
    #[arg(long)]
    pub label_column: Option<String>,
    #[arg(long = "drop-column")]
    pub drop_columns: Vec<String>,
    #[arg(long)]
    pub fault_onset: Option<usize>,
    /// Use generated stand-in data instead of files.
    #[arg(long)]
    pub synthetic: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long)]
    pub band_climit: Option<u64>,
    #[arg(long)]
    pub n_limit: Option<usize>,
    #[arg(long)]
    pub chain_margin: Option<usize>,
    /// Epsilon used for the coefficient template written with --out.
    #[arg(long, default_value_t = 100.0)]
    pub epsilon: f64,
    /// Layout cache file, read if present and updated afterwards.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Write the coefficient template (layout applied to an all-ones J).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure with its exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => Self::Usage(m),
            other => Self::Runtime(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Runtime(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            Self::Usage(m) => format!("error: {m}"),
            Self::Runtime(e) => format!("error: {e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn parse_scale(s: &str) -> CliResult<DiagonalScale> {
    match s {
        "k" => Ok(DiagonalScale::ComponentCount),
        "k-plus-epsilon" => Ok(DiagonalScale::ComponentCountPlusEpsilon),
        "unit" => Ok(DiagonalScale::Unit),
        other => Err(CliError::Usage(format!(
            "unknown diagonal scale '{other}' (k, k-plus-epsilon, unit)"
        ))),
    }
}

fn base_config(path: Option<&Path>) -> CliResult<RunConfig> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    RunConfig::from_toml(&text).map_err(CliError::from)
}

fn apply_solver_args(c: &mut RunConfig, a: &SolverArgs) -> CliResult<()> {
    macro_rules! set {
        ($field:ident) => {
            if let Some(v) = &a.$field {
                c.$field = v.clone();
            }
        };
    }
    set!(k);
    set!(epsilon);
    set!(solver);
    set!(sweeps);
    set!(seed);
    set!(n_limit);
    set!(format);
    if a.reads.is_some() {
        c.reads = a.reads;
    }
    if a.remote_url.is_some() {
        c.remote_url = a.remote_url.clone();
    }
    if a.band_climit.is_some() {
        c.band_climit = a.band_climit;
    }
    if a.out.is_some() {
        c.out = a.out.clone();
    }
    if let Some(s) = &a.diagonal_scale {
        c.diagonal_scale = parse_scale(s)?;
    }
    Ok(())
}

fn write_or_print(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| {
            CliError::Runtime(Error::Io {
                path: p.to_path_buf(),
                source,
            })
        }),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Runtime(Error::Serialization(e.to_string()))),
    }
}

fn cmd_fit(config_path: Option<&Path>, args: &FitArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let mut c = base_config(config_path)?;
    apply_solver_args(&mut c, &args.solver)?;
    if let Some(m) = &args.method {
        c.method = m.parse()?;
    }
    if args.input.is_some() {
        c.input = args.input.clone();
    }
    if args.label_column.is_some() {
        c.label_column = args.label_column.clone();
    }
    if !args.drop_columns.is_empty() {
        c.drop_columns = args.drop_columns.clone();
    }
    if let Some(r) = args.l1bf_restarts {
        c.l1bf_restarts = r;
    }
    c.validate()?;
    let input = c
        .input
        .clone()
        .ok_or_else(|| CliError::Usage("fit needs --input <csv>".into()))?;
    if !input.is_file() {
        return Err(CliError::Usage(format!("input file not found: {}", input.display())));
    }
    let schema = CsvSchema {
        label_column: c.label_column.clone(),
        drop_columns: c.drop_columns.clone(),
    };
    let data = load_csv(&input, &schema)?;
    let x = &data.train;
    let cache = Arc::new(EmbeddingCache::new());
    let outcome = run_method(c.method, x, &c, c.seed, &cache)?;
    let basis = match (&outcome.basis, outcome.status) {
        (Some(b), Status::Ok) => b,
        _ => {
            return Err(CliError::Runtime(Error::DegenerateComponents {
                rank: outcome.rank,
                k: c.k,
                assignment: Box::new(outcome.assignment.clone().expect("degenerate outcome has B")),
            }))
        }
    };
    let diagnostics: Vec<_> = outcome
        .diagnostics
        .iter()
        .map(|d| {
            json!({
                "kappa": d.kappa,
                "band_offset": d.band_offset,
                "coupler_count": d.coupler_count,
                "energy_scale": d.energy_scale,
                "best_energy": d.best_energy,
                "energies": d.samples.energies(),
                "occurrences": d.samples.occurrences(),
            })
        })
        .collect();
    let components: Vec<Vec<f64>> = basis
        .as_matrix()
        .column_iter()
        .map(|col| col.iter().copied().collect())
        .collect();
    let assignment = outcome
        .assignment
        .as_ref()
        .map(|b| b.columns().map(<[i8]>::to_vec).collect::<Vec<_>>());
    let config_value = serde_json::to_value(&c).map_err(|e| Error::Serialization(e.to_string()))?;
    let document = json!({
        "config": config_value,
        "method": c.method.name(),
        "features": data.feature_names,
        "samples": x.samples(),
        "components": components,
        "assignment": assignment,
        "diagnostics": diagnostics,
    });

    match &c.out {
        None => {
            let text = serde_json::to_string_pretty(&document).map_err(|e| Error::Serialization(e.to_string()))?;
            write_or_print(None, &(text + "\n"), stdout)
        }
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|source| Error::Io {
                path: dir.clone(),
                source,
            })?;
            if c.format == "json" {
                let text = serde_json::to_string_pretty(&document).map_err(|e| Error::Serialization(e.to_string()))?;
                write_or_print(Some(&dir.join("fit.json")), &text, stdout)?;
            } else {
                write_or_print(Some(&dir.join("components.csv")), &basis_csv(basis, &data.feature_names)?, stdout)?;
                if let Some(b) = &outcome.assignment {
                    write_or_print(Some(&dir.join("assignment.csv")), &assignment_csv(b), stdout)?;
                }
                let diag = serde_json::to_string_pretty(&diagnostics).map_err(|e| Error::Serialization(e.to_string()))?;
                write_or_print(Some(&dir.join("diagnostics.json")), &diag, stdout)?;
            }
            write_or_print(Some(&dir.join("config.toml")), &c.to_toml()?, stdout)?;
            writeln!(stdout, "wrote {}", dir.display())
                .map_err(|e| CliError::Runtime(Error::Serialization(e.to_string())))
        }
    }
}

fn cmd_experiment(config_path: Option<&Path>, args: &ExperimentArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let kind: ExperimentKind = args.name.parse()?;
    let mut c = base_config(config_path)?;
    apply_solver_args(&mut c, &args.solver)?;
    macro_rules! set {
        ($field:ident) => {
            if let Some(v) = &args.$field {
                c.$field = v.clone();
            }
        };
    }
    set!(trials);
    set!(n);
    set!(d);
    set!(test_samples);
    set!(l1bf_restarts);
    set!(outlier_sigma);
    set!(mislabel_fraction);
    if args.outlier_fraction.is_some() {
        c.outlier_fraction = args.outlier_fraction;
    }
    for (dst, src) in [
        (&mut c.target_class, &args.target_class),
        (&mut c.label_column, &args.label_column),
    ] {
        if src.is_some() {
            *dst = src.clone();
        }
    }
    for (dst, src) in [(&mut c.data, &args.data), (&mut c.test_data, &args.test_data)] {
        if src.is_some() {
            *dst = src.clone();
        }
    }
    if args.fault_onset.is_some() {
        c.fault_onset = args.fault_onset;
    }
    if !args.drop_columns.is_empty() {
        c.drop_columns = args.drop_columns.clone();
    }
    if !args.methods.is_empty() {
        c.methods = args
            .methods
            .iter()
            .map(|m| m.parse())
            .collect::<Result<_, _>>()?;
    }
    c.synthetic |= args.synthetic;
    c.validate()?;
    for p in [&c.data, &c.test_data].into_iter().flatten() {
        if !c.synthetic && !p.is_file() {
            return Err(CliError::Usage(format!("data file not found: {}", p.display())));
        }
    }

    let result = run_experiment(kind, &c)?;
    if c.format == "json" {
        return write_or_print(c.out.as_deref(), &(result.to_json()? + "\n"), stdout);
    }
    match &c.out {
        Some(path) => {
            write_or_print(Some(path), &result.trials_csv()?, stdout)?;
            let summary = path.with_extension("summary.csv");
            write_or_print(Some(&summary), &result.summary_csv()?, stdout)?;
            writeln!(stdout, "wrote {} and {}", path.display(), summary.display())
                .map_err(|e| CliError::Runtime(Error::Serialization(e.to_string())))
        }
        None => {
            let text = format!("{}\n{}", result.trials_csv()?, result.summary_csv()?);
            write_or_print(None, &text, stdout)
        }
    }
}

fn cmd_embed(config_path: Option<&Path>, args: &EmbedArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let mut c = base_config(config_path)?;
    if args.band_climit.is_some() {
        c.band_climit = args.band_climit;
    }
    if let Some(n) = args.n_limit {
        c.n_limit = n;
    }
    if let Some(m) = args.chain_margin {
        c.chain_margin = m;
    }
    if args.k == 0 {
        return Err(CliError::Usage("k must be at least 1".into()));
    }
    let budget = c.budget()?;
    let cache = match &args.cache {
        Some(p) if p.is_file() => EmbeddingCache::load(p)?,
        _ => EmbeddingCache::new(),
    };
    let hit = cache.get(args.n, args.k, &budget).is_some();
    let kappa = compute_kappa_for(args.n, args.k, budget.c_limit)?;
    let layout = cache.get_or_build(args.n, args.k, &budget)?;
    debug_assert_eq!(layout.kappa(), kappa);
    if let Some(p) = &args.cache {
        cache.save(p)?;
    }
    if let Some(out) = &args.out {
        let template = layout.template(args.epsilon, c.diagonal_scale)?;
        write_or_print(Some(out), &template.to_json()?, stdout)?;
    }
    let summary = json!({
        "N": args.n,
        "K": args.k,
        "c_limit": budget.c_limit,
        "kappa": layout.kappa(),
        "band_offset": layout.band_offset(),
        "coupler_count": layout.coupler_count(),
        "cache": if hit { "hit" } else { "miss" },
    });
    writeln!(stdout, "{summary}").map_err(|e| CliError::Runtime(Error::Serialization(e.to_string())))
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    let config = cli.config.as_deref();
    match &cli.command {
        Command::Fit(a) => cmd_fit(config, a, stdout),
        Command::Experiment(a) => cmd_experiment(config, a, stdout),
        Command::Embed(a) => cmd_embed(config, a, stdout),
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(stdout, "{e}") } else { write!(stderr, "{e}") };
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.message());
            e.exit_code()
        }
    }
}
