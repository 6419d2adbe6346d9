//! Client for annealer services speaking the JSON solve protocol.
//!
//! `POST {endpoint}/v1/ising/solve` with a [`SolveRequest`] body; the service
//! answers with a [`SolveResponse`]. Reported energies are recomputed locally
//! and any disagreement above `1e-6` is an integrity failure.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Coupling, IsingProblem, SampleSet, Spin};
use crate::error::{Error, Result};

pub const SOLVE_PATH: &str = "/v1/ising/solve";

const ENERGY_TOLERANCE: f64 = 1e-6;
const TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRequest {
    pub size: usize,
    pub couplings: Vec<Coupling>,
    pub num_reads: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl SolveRequest {
    pub fn new(problem: &IsingProblem, num_reads: usize, seed: Option<u64>) -> Self {
        Self {
            size: problem.size(),
            couplings: problem.couplings().to_vec(),
            num_reads,
            seed,
        }
    }
}

/// Aligned arrays, ascending by energy. Spins are kept as plain integers so
/// that out-of-range values surface as validation errors, not parse errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResponse {
    pub samples: Vec<Vec<i64>>,
    pub energies: Vec<f64>,
    pub occurrences: Vec<u64>,
}

impl From<&SampleSet> for SolveResponse {
    fn from(set: &SampleSet) -> Self {
        Self {
            samples: set
                .samples()
                .iter()
                .map(|s| s.iter().map(|&v| i64::from(v)).collect())
                .collect(),
            energies: set.energies().to_vec(),
            occurrences: set.occurrences().iter().map(|&c| u64::from(c)).collect(),
        }
    }
}

impl SolveResponse {
    /// Checks shape and spin values, recomputes energies, and builds a
    /// [`SampleSet`].
    pub fn validate(self, problem: &IsingProblem) -> Result<SampleSet> {
        let n = self.samples.len();
        if self.energies.len() != n || self.occurrences.len() != n {
            return Err(Error::MalformedResponse(format!(
                "misaligned arrays: {n} samples, {} energies, {} occurrences",
                self.energies.len(),
                self.occurrences.len()
            )));
        }
        if n == 0 {
            return Err(Error::MalformedResponse("no samples returned".into()));
        }
        let mut weighted = Vec::with_capacity(n);
        for (index, ((raw, reported), count)) in self
            .samples
            .into_iter()
            .zip(self.energies)
            .zip(self.occurrences)
            .enumerate()
        {
            if raw.len() != problem.size() {
                return Err(Error::MalformedResponse(format!(
                    "sample {index} has {} spins, expected {}",
                    raw.len(),
                    problem.size()
                )));
            }
            if let Some(bad) = raw.iter().find(|&&v| v != 1 && v != -1) {
                return Err(Error::MalformedResponse(format!(
                    "sample {index} contains spin value {bad}"
                )));
            }
            if count == 0 {
                return Err(Error::MalformedResponse(format!(
                    "sample {index} has zero occurrences"
                )));
            }
            let count = u32::try_from(count).map_err(|_| {
                Error::MalformedResponse(format!("sample {index} occurrence count overflows"))
            })?;
            let spins: Vec<Spin> = raw.iter().map(|&v| v as Spin).collect();
            let recomputed = problem.energy_unchecked(&spins);
            if !reported.is_finite() || (recomputed - reported).abs() > ENERGY_TOLERANCE {
                return Err(Error::EnergyMismatch {
                    index,
                    reported,
                    recomputed,
                });
            }
            weighted.push((spins, count));
        }
        SampleSet::from_weighted(problem, weighted)
    }
}

/// Submits `problem` to a remote solver at `endpoint` (scheme, host and port,
/// e.g. `http://127.0.0.1:8080`).
pub fn solve_remote(
    problem: &IsingProblem,
    endpoint: &str,
    reads: usize,
    seed: Option<u64>,
) -> Result<SampleSet> {
    if reads == 0 {
        return Err(Error::InvalidArgument("reads must be positive".into()));
    }
    let url = format!("{}{SOLVE_PATH}", endpoint.trim_end_matches('/'));
    let body = serde_json::to_string(&SolveRequest::new(problem, reads, seed))
        .map_err(|e| Error::Serialization(e.to_string()))?;

    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(TIMEOUT))
        .build()
        .into();
    let transport = |message: String| Error::Transport {
        endpoint: endpoint.to_string(),
        message,
    };
    let mut response = agent
        .post(&url)
        .header("Content-Type", "application/json")
        .send(body.as_str())
        .map_err(|e| transport(e.to_string()))?;
    let text = response
        .body_mut()
        .read_to_string()
        .map_err(|e| transport(e.to_string()))?;
    let parsed: SolveResponse =
        serde_json::from_str(&text).map_err(|e| Error::MalformedResponse(e.to_string()))?;
    parsed.validate(problem)
}
