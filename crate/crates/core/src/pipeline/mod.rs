//! The sweep workflow: weight vectors -> scalarized problems -> tiled sampler
//! calls -> archive updates, with one time-series event per call.

mod aggregate;
mod experiment;
mod record;

use std::collections::HashMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::instance::MultiObjectiveInstance;
use crate::objectives::{self, autoscale, scalarize, ObjectiveError, ObjectiveVector, SpinState, WeightDistribution, WeightVector};
use crate::pareto::{self, figure_of_merit, hypervolume, FrontArchive, FrontPoint, ParetoError, ReferencePoint};
use crate::rng::{self, derive_seed};
use crate::samplers::{sample_group, BackendSpec, CostModel, Sampler, SamplerError, TilingPlan};

pub use aggregate::{aggregate, BandRow, BandedSeries};
pub use experiment::{
    build_reference_front, exhaustive_pareto_front, merge_fronts, run_experiment, ExperimentError, ExperimentOptions,
    ExperimentOutcome, RepetitionResult, StrategyResult,
};
pub use record::{instance_digest, Diagnostics, RunHeader, RunRecord, RUN_RECORD_FORMAT_VERSION};

pub const DEFAULT_NUM_READS: u64 = 1000;
pub const DEFAULT_REPETITIONS: usize = 5;

/// Weight vectors per sweep when the config leaves it unset.
pub fn default_num_weight_vectors(num_objectives: usize) -> usize {
    if num_objectives >= 4 {
        20_000
    } else {
        5_000
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid run config: {0}")]
    Config(String),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error("reference front improved: hypervolume {hv} exceeds {hv_max}")]
    ReferenceImproved { hv: f64, hv_max: f64, improved_front: Vec<FrontPoint> },
    #[error("cannot aggregate an empty list of series")]
    EmptyAggregate,
    #[error(transparent)]
    Pareto(#[from] ParetoError),
}

/// Cost model given either by preset name or explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CostSetting {
    Preset(String),
    Custom(CostModel),
}

impl CostSetting {
    pub fn resolve(&self) -> Result<CostModel, PipelineError> {
        let model = match self {
            CostSetting::Preset(name) => {
                CostModel::preset(name).ok_or_else(|| PipelineError::Config(format!("unknown cost preset {name:?}")))?
            }
            CostSetting::Custom(m) => *m,
        };
        model.validate().map_err(PipelineError::Config)?;
        Ok(model)
    }
}

impl Default for CostSetting {
    fn default() -> Self {
        CostSetting::Preset("advantage2".into())
    }
}

fn default_reads() -> u64 {
    DEFAULT_NUM_READS
}

fn default_reps() -> usize {
    DEFAULT_REPETITIONS
}

fn default_range() -> (f64, f64) {
    objectives::DEFAULT_COUPLING_RANGE
}

/// One sampling strategy, repeated `repetitions` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub label: String,
    /// Defaults to 5000 (M <= 3) or 20000 (M >= 4).
    #[serde(default)]
    pub num_weight_vectors: Option<usize>,
    #[serde(default = "default_reads")]
    pub num_reads: u64,
    pub backend: BackendSpec,
    #[serde(default)]
    pub tiling: TilingPlan,
    #[serde(default)]
    pub cost: CostSetting,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    #[serde(default)]
    pub weight_distribution: WeightDistribution,
    #[serde(default = "default_range")]
    pub coupling_range: (f64, f64),
}

impl RunConfig {
    pub fn new(label: impl Into<String>, backend: BackendSpec) -> Self {
        Self {
            label: label.into(),
            num_weight_vectors: None,
            num_reads: DEFAULT_NUM_READS,
            backend,
            tiling: TilingPlan::default(),
            cost: CostSetting::default(),
            seed: 0,
            repetitions: DEFAULT_REPETITIONS,
            weight_distribution: WeightDistribution::default(),
            coupling_range: objectives::DEFAULT_COUPLING_RANGE,
        }
    }

    pub fn weight_vectors_for(&self, num_objectives: usize) -> usize {
        self.num_weight_vectors.unwrap_or_else(|| default_num_weight_vectors(num_objectives))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(format!("{}: {m}", self.label)));
        if self.num_weight_vectors == Some(0) {
            return bad("num_weight_vectors must be positive");
        }
        if self.num_reads == 0 {
            return bad("num_reads must be positive");
        }
        if self.repetitions == 0 {
            return bad("repetitions must be >= 1");
        }
        if self.tiling.copies == 0 {
            return bad("tiling copies must be >= 1");
        }
        let (lo, hi) = self.coupling_range;
        if !(lo < 0.0 && hi > 0.0) {
            return bad("coupling range must straddle zero");
        }
        if let WeightDistribution::Dirichlet { concentration } = self.weight_distribution {
            if !(concentration > 0.0 && concentration.is_finite()) {
                return bad("Dirichlet concentration must be positive");
            }
        }
        self.cost.resolve()?;
        Ok(())
    }
}

/// Fixed hypervolume baseline for an experiment: the best-known front, its
/// componentwise-minimum reference point and its hypervolume.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub front: Vec<FrontPoint>,
    pub point: ReferencePoint,
    pub hv_max: f64,
    pub id: String,
}

impl Reference {
    pub fn from_front(mut front: Vec<FrontPoint>) -> Result<Self, PipelineError> {
        front.sort_by(|a, b| a.objectives.total_cmp(&b.objectives));
        let vectors: Vec<ObjectiveVector> = front.iter().map(|p| p.objectives.clone()).collect();
        let point = pareto::reference_point(&vectors)?;
        let hv_max = hypervolume(&vectors, &point)?;
        let mut hasher = Sha256::new();
        for v in &vectors {
            for x in v.values() {
                hasher.update(x.to_bits().to_le_bytes());
            }
        }
        let id = hasher.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect();
        Ok(Self { front, point, hv_max, id })
    }

    pub fn from_archive(archive: &FrontArchive) -> Result<Self, PipelineError> {
        Self::from_front(archive.points().to_vec())
    }
}

/// What one sampler call changed.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub time_s: f64,
    pub offered: u64,
    pub archive_size: usize,
    /// Points accepted into the archive during this call, in insertion order.
    pub accepted: Vec<FrontPoint>,
}

/// Unscored record of one repetition.
#[derive(Debug, Clone)]
pub struct SweepTrace {
    pub repetition: usize,
    pub events: Vec<TraceEvent>,
    pub archive: FrontArchive,
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeEvent {
    pub time_s: f64,
    pub archive_size: usize,
    pub hypervolume: f64,
    pub figure_of_merit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub hv_max: f64,
    pub events: Vec<TimeEvent>,
}

impl TimeSeries {
    /// Figure of merit before any sample arrives.
    pub fn initial_fom(&self) -> f64 {
        self.hv_max + 1.0
    }

    pub fn final_fom(&self) -> Option<f64> {
        self.events.last().map(|e| e.figure_of_merit)
    }
}

/// Weight vectors of one repetition, drawn up front from substream `(seed, repetition)`.
pub fn draw_weight_vectors(config: &RunConfig, num_objectives: usize, repetition: usize) -> Vec<WeightVector> {
    let rep_seed = derive_seed(config.seed, &[repetition as u64]);
    let mut stream = rng::stream(derive_seed(rep_seed, &[0]));
    (0..config.weight_vectors_for(num_objectives))
        .map(|_| config.weight_distribution.sample(num_objectives, &mut stream))
        .collect()
}

/// Runs one repetition and records, per sampler call, the modeled time and
/// the archive changes. Output is independent of the rayon worker count.
pub fn trace_sweep(
    instance: &MultiObjectiveInstance,
    config: &RunConfig,
    repetition: usize,
    sampler: &dyn Sampler,
) -> Result<SweepTrace, PipelineError> {
    config.validate()?;
    let started = Instant::now();
    let m = instance.num_objectives();
    let cost = config.cost.resolve()?;
    let (lo, hi) = config.coupling_range;
    let rep_seed = derive_seed(config.seed, &[repetition as u64]);
    let weights = draw_weight_vectors(config, m, repetition);

    let mut archive = FrontArchive::new(m);
    let mut events = Vec::with_capacity(config.tiling.num_calls(weights.len()));
    let mut clock = 0.0;
    let mut objective_buf = vec![0.0; m];
    for (g, group) in weights.chunks(config.tiling.copies).enumerate() {
        let base = g * config.tiling.copies;
        let problems = group
            .iter()
            .map(|c| scalarize(instance, c).map(|p| autoscale(&p, lo, hi)))
            .collect::<Result<Vec<_>, _>>()?;
        let seeds: Vec<u64> = (0..group.len()).map(|j| derive_seed(rep_seed, &[1, (base + j) as u64])).collect();
        let sets = sample_group(sampler, &problems, &seeds, config.num_reads, &cost)?;
        clock += cost.call_time(config.num_reads);

        let mut counts: HashMap<&SpinState, usize> = HashMap::new();
        let mut distinct: Vec<(&SpinState, u64)> = Vec::new();
        let mut offered = 0;
        for set in &sets {
            for (s, &n) in set.states.iter().zip(&set.occurrences) {
                if s.len() != instance.num_nodes() {
                    return Err(ObjectiveError::StateLength { expected: instance.num_nodes(), found: s.len() }.into());
                }
                offered += n;
                match counts.get(s) {
                    Some(&i) => distinct[i].1 += n,
                    None => {
                        counts.insert(s, distinct.len());
                        distinct.push((s, n));
                    }
                }
            }
        }
        let candidates = distinct
            .into_iter()
            .map(|(s, n)| {
                objectives::objectives_into(instance, s.spins(), &mut objective_buf);
                let objectives = ObjectiveVector::new(objective_buf.clone())?;
                Ok((FrontPoint { objectives, state: s.clone() }, n))
            })
            .collect::<Result<Vec<_>, ObjectiveError>>()?;
        let accepted_vectors = archive.offer_batch(candidates);
        let accepted = accepted_vectors
            .iter()
            .filter_map(|v| archive.points().iter().find(|p| &p.objectives == v).cloned())
            .collect::<Vec<_>>();
        // A later point in the same batch cannot evict an earlier accepted one (the batch is pre-filtered).
        debug_assert_eq!(accepted.len(), accepted_vectors.len());
        events.push(TraceEvent { time_s: clock, offered, archive_size: archive.len(), accepted });
    }
    Ok(SweepTrace { repetition, events, archive, wall_clock_s: started.elapsed().as_secs_f64() })
}

/// Replays a trace against a fixed reference, recomputing the hypervolume
/// from scratch after every call.
pub fn score_trace(trace: &SweepTrace, reference: &Reference) -> Result<TimeSeries, PipelineError> {
    let dim = reference.point.values().len();
    let mut replay = FrontArchive::new(dim);
    let mut events = Vec::with_capacity(trace.events.len());
    for ev in &trace.events {
        for p in &ev.accepted {
            replay.insert(p.clone());
        }
        let vectors = replay.objective_vectors();
        let hv = hypervolume(&vectors, &reference.point)?;
        let fom = match figure_of_merit(hv, reference.hv_max) {
            Ok(f) => f,
            Err(ParetoError::ReferenceImproved { hv, hv_max }) => {
                let improved = merge_fronts(dim, [reference.front.as_slice(), trace.archive.points()]);
                return Err(PipelineError::ReferenceImproved { hv, hv_max, improved_front: improved.into_points() });
            }
            Err(e) => return Err(e.into()),
        };
        events.push(TimeEvent { time_s: ev.time_s, archive_size: replay.len(), hypervolume: hv, figure_of_merit: fom });
    }
    Ok(TimeSeries { hv_max: reference.hv_max, events })
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub series: TimeSeries,
    pub archive: FrontArchive,
    pub trace: SweepTrace,
}

/// One repetition end to end. Without a reference, the run's own final
/// archive serves as the reference front.
pub fn run_sweep(
    instance: &MultiObjectiveInstance,
    config: &RunConfig,
    repetition: usize,
    reference: Option<&Reference>,
) -> Result<SweepOutcome, PipelineError> {
    let sampler = config.backend.build();
    let trace = trace_sweep(instance, config, repetition, sampler.as_ref())?;
    let own;
    let reference = match reference {
        Some(r) => r,
        None => {
            own = if trace.archive.is_empty() {
                return Ok(SweepOutcome {
                    series: TimeSeries { hv_max: 0.0, events: Vec::new() },
                    archive: trace.archive.clone(),
                    trace,
                });
            } else {
                Reference::from_archive(&trace.archive)?
            };
            &own
        }
    };
    let series = score_trace(&trace, reference)?;
    Ok(SweepOutcome { series, archive: trace.archive.clone(), trace })
}

/// Runs `f` on a dedicated rayon pool with `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool")
        .install(f)
}
