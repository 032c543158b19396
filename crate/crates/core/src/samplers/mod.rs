//! Sample-generating backends for scalarized Ising problems.
//!
//! Every backend implements [`Sampler`]: given a problem, a read count and a
//! seed it returns a [`SampleSet`] whose occurrences sum to the read count.
//! [`batch_sample`] groups problems into tiled calls and stamps each set with
//! the modeled call time from a [`CostModel`].

pub mod anneal;
pub mod exact;
pub mod exhaustive;
pub mod remote;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objectives::{ScalarIsing, SpinState};
use crate::rng::derive_seed;

pub use anneal::{sa_sample, AnnealSchedule, SimulatedAnnealing};
pub use exact::{exact_ground_state, ExactDpSampler, GroundState, DEFAULT_MAX_CYCLOMATIC};
pub use exhaustive::{exhaustive_optimum, ExhaustiveSampler, DEFAULT_MAX_EXHAUSTIVE_NODES};
pub use remote::RemoteSampler;

/// Relative tolerance for the energy re-evaluation of locally produced sample sets.
pub const ENERGY_CHECK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("problem has {nodes} nodes, exhaustive enumeration is capped at {cap}")]
    TooManyNodes { nodes: usize, cap: usize },
    #[error("cyclomatic number {found} exceeds the cap of {cap}")]
    TooManyCycles { found: usize, cap: usize },
    #[error("num_reads must be at least 1")]
    NoReads,
    #[error("invalid anneal schedule: {0}")]
    Schedule(String),
    #[error("problems in one batch must share a graph (problem {index} differs)")]
    MixedGraphs { index: usize },
    #[error("remote endpoint {endpoint}: transport failure: {message}")]
    Transport { endpoint: String, message: String },
    #[error("remote endpoint {endpoint}: malformed response: {message}")]
    Malformed { endpoint: String, message: String },
    #[error("energy validation failed for sample {index}: reported {reported}, recomputed {recomputed}")]
    EnergyMismatch { index: usize, reported: f64, recomputed: f64 },
    #[error("unknown backend selector {0:?}")]
    UnknownBackend(String),
}

/// Distinct states with their energies and read counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub states: Vec<SpinState>,
    pub energies: Vec<f64>,
    pub occurrences: Vec<u64>,
    /// Modeled seconds charged for the call that produced this set.
    pub timing: f64,
}

impl SampleSet {
    /// Aggregates raw reads into distinct states, keeping first-seen order.
    pub fn from_reads(problem: &ScalarIsing, reads: impl IntoIterator<Item = SpinState>) -> Self {
        let mut index: HashMap<SpinState, usize> = HashMap::new();
        let mut set = SampleSet { states: Vec::new(), energies: Vec::new(), occurrences: Vec::new(), timing: 0.0 };
        for s in reads {
            match index.get(&s) {
                Some(&i) => set.occurrences[i] += 1,
                None => {
                    index.insert(s.clone(), set.states.len());
                    set.energies.push(problem.energy_of(s.spins()));
                    set.states.push(s);
                    set.occurrences.push(1);
                }
            }
        }
        set
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn num_reads(&self) -> u64 {
        self.occurrences.iter().sum()
    }

    pub fn min_energy(&self) -> Option<f64> {
        self.energies.iter().copied().reduce(f64::min)
    }

    /// Checks array lengths, spin values, positive counts and that every
    /// stored energy matches `problem` within `rel_tol * max(1, |E|)`.
    pub fn validate(&self, problem: &ScalarIsing, rel_tol: f64) -> Result<(), SamplerError> {
        let malformed = |message: String| SamplerError::Malformed { endpoint: "local".into(), message };
        if self.states.len() != self.energies.len() || self.states.len() != self.occurrences.len() {
            return Err(malformed(format!(
                "array lengths differ: {} states, {} energies, {} occurrences",
                self.states.len(),
                self.energies.len(),
                self.occurrences.len()
            )));
        }
        for (i, ((s, &e), &n)) in self.states.iter().zip(&self.energies).zip(&self.occurrences).enumerate() {
            if s.len() != problem.num_nodes() {
                return Err(malformed(format!("state {i} has {} spins, expected {}", s.len(), problem.num_nodes())));
            }
            if n == 0 {
                return Err(malformed(format!("state {i} has zero occurrences")));
            }
            let recomputed = problem.energy_of(s.spins());
            if !((e - recomputed).abs() <= rel_tol * recomputed.abs().max(1.0)) {
                return Err(SamplerError::EnergyMismatch { index: i, reported: e, recomputed });
            }
        }
        Ok(())
    }
}

/// The sampler contract shared by all backends.
pub trait Sampler: Send + Sync {
    /// Deterministic per `(backend, problem, num_reads, seed)`.
    fn sample(&self, problem: &ScalarIsing, num_reads: u64, seed: u64) -> Result<SampleSet, SamplerError>;

    fn name(&self) -> String;
}

/// Per-call time model of an annealing-style sampler, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub programming_time: f64,
    pub anneal_time: f64,
    pub readout_time: f64,
}

impl CostModel {
    /// Faster-readout generation: 1 us anneal, 98 us readout, 0.1 s per-call overhead.
    ///
    /// The overhead is an estimate chosen so a 1000-read call costs about 0.2 s.
    pub const ADVANTAGE2: CostModel = CostModel { programming_time: 0.1, anneal_time: 1e-6, readout_time: 98e-6 };
    /// Previous generation: 235 us readout, same anneal and overhead estimate.
    pub const ADVANTAGE: CostModel = CostModel { programming_time: 0.1, anneal_time: 1e-6, readout_time: 235e-6 };

    pub fn preset(name: &str) -> Option<CostModel> {
        match name {
            "advantage2" => Some(Self::ADVANTAGE2),
            "advantage" => Some(Self::ADVANTAGE),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let all = [self.programming_time, self.anneal_time, self.readout_time];
        if all.iter().all(|t| t.is_finite() && *t >= 0.0) {
            Ok(())
        } else {
            Err(format!("cost model times must be finite and non-negative: {self:?}"))
        }
    }

    pub fn per_sample(&self) -> f64 {
        self.anneal_time + self.readout_time
    }

    pub fn call_time(&self, num_reads: u64) -> f64 {
        self.programming_time + num_reads as f64 * self.per_sample()
    }
}

impl Default for CostModel {
    fn default() -> Self {
        Self::ADVANTAGE2
    }
}

/// Number of disjoint problem copies packed into one sampler call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TilingPlan {
    pub copies: usize,
}

impl TilingPlan {
    pub fn new(copies: usize) -> Self {
        assert!(copies >= 1, "tiling needs at least one copy per call");
        Self { copies }
    }

    pub fn num_calls(&self, num_problems: usize) -> usize {
        num_problems.div_ceil(self.copies)
    }
}

impl Default for TilingPlan {
    fn default() -> Self {
        Self { copies: 96 }
    }
}

/// Samples one tiled call: every problem in `problems` shares the call and
/// its modeled time. Problems are sampled in parallel; output order follows input.
pub fn sample_group(
    sampler: &dyn Sampler,
    problems: &[ScalarIsing],
    seeds: &[u64],
    num_reads: u64,
    cost: &CostModel,
) -> Result<Vec<SampleSet>, SamplerError> {
    assert_eq!(problems.len(), seeds.len());
    check_shared_graph(problems)?;
    let call_time = cost.call_time(num_reads);
    problems
        .par_iter()
        .zip(seeds.par_iter())
        .map(|(p, &seed)| {
            let mut set = sampler.sample(p, num_reads, seed)?;
            set.timing = call_time;
            Ok(set)
        })
        .collect()
}

fn check_shared_graph(problems: &[ScalarIsing]) -> Result<(), SamplerError> {
    if let Some(first) = problems.first() {
        for (i, p) in problems.iter().enumerate().skip(1) {
            if !std::sync::Arc::ptr_eq(first.shared_graph(), p.shared_graph()) && first.graph() != p.graph() {
                return Err(SamplerError::MixedGraphs { index: i });
            }
        }
    }
    Ok(())
}

/// Processes `problems` in groups of `plan.copies`. Problem `i` is sampled
/// with seed `derive_seed(seed, [i])`.
pub fn batch_sample(
    sampler: &dyn Sampler,
    problems: &[ScalarIsing],
    num_reads: u64,
    seed: u64,
    plan: TilingPlan,
    cost: &CostModel,
) -> Result<Vec<SampleSet>, SamplerError> {
    check_shared_graph(problems)?;
    let mut out = Vec::with_capacity(problems.len());
    for (g, group) in problems.chunks(plan.copies).enumerate() {
        let seeds: Vec<u64> =
            (0..group.len()).map(|j| derive_seed(seed, &[(g * plan.copies + j) as u64])).collect();
        out.extend(sample_group(sampler, group, &seeds, num_reads, cost)?);
    }
    Ok(out)
}

/// Backend selector as written in configs and on the command line:
/// `exhaustive`, `exact-dp`, `sa` or `remote:<url>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BackendSpec {
    Exhaustive {
        #[serde(default = "default_exhaustive_cap")]
        max_nodes: usize,
    },
    ExactDp {
        #[serde(default = "default_cyclomatic_cap")]
        max_cyclomatic: usize,
    },
    Sa {
        #[serde(default)]
        schedule: AnnealSchedule,
    },
    Remote {
        url: String,
        #[serde(default = "default_remote_timeout")]
        timeout_s: f64,
    },
}

fn default_exhaustive_cap() -> usize {
    DEFAULT_MAX_EXHAUSTIVE_NODES
}

fn default_cyclomatic_cap() -> usize {
    DEFAULT_MAX_CYCLOMATIC
}

fn default_remote_timeout() -> f64 {
    60.0
}

impl BackendSpec {
    /// Builds the sampler. The remote backend reads its token from
    /// `PARETO_ANNEAL_REMOTE_TOKEN` when set.
    pub fn build(&self) -> Box<dyn Sampler> {
        match self {
            BackendSpec::Exhaustive { max_nodes } => Box::new(ExhaustiveSampler { max_nodes: *max_nodes }),
            BackendSpec::ExactDp { max_cyclomatic } => Box::new(ExactDpSampler { max_cyclomatic: *max_cyclomatic }),
            BackendSpec::Sa { schedule } => Box::new(SimulatedAnnealing::new(*schedule)),
            BackendSpec::Remote { url, timeout_s } => Box::new(
                RemoteSampler::new(url.clone())
                    .with_token(std::env::var(remote::TOKEN_ENV).ok())
                    .with_timeout(std::time::Duration::from_secs_f64(*timeout_s)),
            ),
        }
    }
}

impl FromStr for BackendSpec {
    type Err = SamplerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exhaustive" => Ok(BackendSpec::Exhaustive { max_nodes: DEFAULT_MAX_EXHAUSTIVE_NODES }),
            "exact-dp" => Ok(BackendSpec::ExactDp { max_cyclomatic: DEFAULT_MAX_CYCLOMATIC }),
            "sa" => Ok(BackendSpec::Sa { schedule: AnnealSchedule::default() }),
            _ => match s.strip_prefix("remote:") {
                Some(url) if !url.is_empty() => Ok(BackendSpec::Remote { url: url.to_string(), timeout_s: default_remote_timeout() }),
                _ => Err(SamplerError::UnknownBackend(s.to_string())),
            },
        }
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::Exhaustive { .. } => write!(f, "exhaustive"),
            BackendSpec::ExactDp { .. } => write!(f, "exact-dp"),
            BackendSpec::Sa { .. } => write!(f, "sa"),
            BackendSpec::Remote { url, .. } => write!(f, "remote:{url}"),
        }
    }
}
