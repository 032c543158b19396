//! Client (and request handler) for the remote sampling wire protocol.
//!
//! A request is POSTed as JSON:
//! `{format_version, num_nodes, edges, couplings, num_reads, seed}`;
//! the service answers with
//! `{states, energies, occurrences, timing: {programming_s, per_sample_s}}`.
//! Responses are never trusted: lengths, spins, read counts and every energy
//! are checked against a local re-evaluation.

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{CostModel, SampleSet, Sampler, SamplerError};
use crate::instance::Graph;
use crate::objectives::{ScalarIsing, SpinState};

pub const WIRE_FORMAT_VERSION: u32 = 1;
/// Environment variable holding the bearer token for the remote backend.
pub const TOKEN_ENV: &str = "PARETO_ANNEAL_REMOTE_TOKEN";
/// Relative tolerance on reported energies.
pub const REMOTE_ENERGY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRequest {
    pub format_version: u32,
    pub num_nodes: usize,
    pub edges: Vec<[usize; 2]>,
    pub couplings: Vec<f64>,
    pub num_reads: u64,
    pub seed: u64,
}

impl SampleRequest {
    pub fn new(problem: &ScalarIsing, num_reads: u64, seed: u64) -> Self {
        Self {
            format_version: WIRE_FORMAT_VERSION,
            num_nodes: problem.num_nodes(),
            edges: problem.graph().edges().iter().map(|&(u, v)| [u, v]).collect(),
            couplings: problem.couplings().to_vec(),
            num_reads,
            seed,
        }
    }

    /// Rebuilds the problem on the serving side.
    pub fn problem(&self) -> Result<ScalarIsing, String> {
        if self.format_version != WIRE_FORMAT_VERSION {
            return Err(format!("unsupported format_version {}", self.format_version));
        }
        if self.edges.len() != self.couplings.len() {
            return Err("edges and couplings differ in length".into());
        }
        let graph = Graph::new(self.num_nodes, self.edges.iter().map(|e| (e[0], e[1]))).map_err(|e| e.to_string())?;
        if graph.edges().iter().zip(&self.edges).any(|(a, b)| a.0 != b[0] || a.1 != b[1]) {
            return Err("edges must be sorted with u < v".into());
        }
        Ok(ScalarIsing::new(Arc::new(graph), self.couplings.clone()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireTiming {
    pub programming_s: f64,
    pub per_sample_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResponse {
    pub states: Vec<Vec<i8>>,
    pub energies: Vec<f64>,
    pub occurrences: Vec<u64>,
    pub timing: WireTiming,
}

/// Serves one request with a local sampler; what a loopback service runs.
pub fn handle_request(sampler: &dyn Sampler, request: &SampleRequest, cost: &CostModel) -> Result<SampleResponse, String> {
    let problem = request.problem()?;
    let set = sampler.sample(&problem, request.num_reads, request.seed).map_err(|e| e.to_string())?;
    Ok(SampleResponse {
        states: set.states.into_iter().map(Vec::from).collect(),
        energies: set.energies,
        occurrences: set.occurrences,
        timing: WireTiming { programming_s: cost.programming_time, per_sample_s: cost.per_sample() },
    })
}

/// Checks a response against the problem and converts it to a [`SampleSet`].
pub fn decode_response(
    endpoint: &str,
    problem: &ScalarIsing,
    num_reads: u64,
    response: SampleResponse,
) -> Result<SampleSet, SamplerError> {
    let malformed = |message: String| SamplerError::Malformed { endpoint: endpoint.to_string(), message };
    let n = response.states.len();
    if response.energies.len() != n || response.occurrences.len() != n {
        return Err(malformed(format!(
            "array lengths differ: {} states, {} energies, {} occurrences",
            n,
            response.energies.len(),
            response.occurrences.len()
        )));
    }
    let total: u64 = response.occurrences.iter().sum();
    if total != num_reads {
        return Err(malformed(format!("occurrences sum to {total}, requested {num_reads}")));
    }
    let timing = response.timing;
    if !(timing.programming_s >= 0.0 && timing.per_sample_s >= 0.0) {
        return Err(malformed("negative or non-finite timing".into()));
    }
    let mut states = Vec::with_capacity(n);
    for (i, raw) in response.states.into_iter().enumerate() {
        if raw.len() != problem.num_nodes() {
            return Err(malformed(format!("state {i} has {} spins, expected {}", raw.len(), problem.num_nodes())));
        }
        states.push(SpinState::new(raw).map_err(|e| malformed(format!("state {i}: {e}")))?);
    }
    let set = SampleSet {
        states,
        energies: response.energies,
        occurrences: response.occurrences,
        timing: timing.programming_s + num_reads as f64 * timing.per_sample_s,
    };
    match set.validate(problem, REMOTE_ENERGY_TOLERANCE) {
        Err(SamplerError::Malformed { message, .. }) => Err(malformed(message)),
        other => other.map(|_| set),
    }
}

/// Blocking HTTP client for a remote sampling service.
#[derive(Debug, Clone)]
pub struct RemoteSampler {
    endpoint: String,
    token: Option<String>,
    timeout: Duration,
}

impl RemoteSampler {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self { endpoint: endpoint.into(), token: None, timeout: Duration::from_secs(60) }
    }

    pub fn with_token(mut self, token: Option<String>) -> Self {
        self.token = token;
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

impl Sampler for RemoteSampler {
    fn sample(&self, problem: &ScalarIsing, num_reads: u64, seed: u64) -> Result<SampleSet, SamplerError> {
        if num_reads == 0 {
            return Err(SamplerError::NoReads);
        }
        let transport = |message: String| SamplerError::Transport { endpoint: self.endpoint.clone(), message };
        let agent: ureq::Agent = ureq::Agent::config_builder().timeout_global(Some(self.timeout)).build().into();
        let mut request = agent.post(&self.endpoint);
        if let Some(token) = &self.token {
            request = request.header("Authorization", &format!("Bearer {token}"));
        }
        let mut response = request
            .send_json(SampleRequest::new(problem, num_reads, seed))
            .map_err(|e| transport(e.to_string()))?;
        let body: SampleResponse = response.body_mut().read_json().map_err(|e| SamplerError::Malformed {
            endpoint: self.endpoint.clone(),
            message: e.to_string(),
        })?;
        decode_response(&self.endpoint, problem, num_reads, body)
    }

    fn name(&self) -> String {
        format!("remote:{}", self.endpoint)
    }
}
