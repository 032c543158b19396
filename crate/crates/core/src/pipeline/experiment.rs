use rayon::prelude::*;
use thiserror::Error;

use super::{score_trace, trace_sweep, PipelineError, Reference, RunConfig, SweepTrace, TimeSeries};
use crate::instance::MultiObjectiveInstance;
use crate::objectives::{self, ObjectiveVector, SpinState};
use crate::pareto::{FrontArchive, FrontPoint};
use crate::samplers::{SamplerError, DEFAULT_MAX_EXHAUSTIVE_NODES};

const ENUMERATION_CHUNK_BITS: u32 = 14;

/// True Pareto front by enumerating every state with spin 0 fixed to +1
/// (a global flip leaves every objective unchanged). Chunks run in parallel
/// and are merged in chunk order, so the stored witness states are deterministic.
pub fn exhaustive_pareto_front(instance: &MultiObjectiveInstance, max_nodes: usize) -> Result<FrontArchive, SamplerError> {
    let n = instance.num_nodes();
    let m = instance.num_objectives();
    if n > max_nodes.min(63) {
        return Err(SamplerError::TooManyNodes { nodes: n, cap: max_nodes.min(63) });
    }
    let free_bits = n.saturating_sub(1) as u32;
    let total: u64 = 1 << free_bits;
    let chunk = 1u64 << ENUMERATION_CHUNK_BITS.min(free_bits);
    let chunks: Vec<FrontArchive> = (0..total / chunk)
        .into_par_iter()
        .map(|c| {
            let mut local = FrontArchive::new(m);
            let mut buf = vec![0.0; m];
            let mut spins = vec![1i8; n];
            for code in c * chunk..(c + 1) * chunk {
                for (i, s) in spins.iter_mut().enumerate().skip(1) {
                    *s = if code >> (i - 1) & 1 == 1 { -1 } else { 1 };
                }
                objectives::objectives_into(instance, &spins, &mut buf);
                let objectives = ObjectiveVector::new(buf.clone()).expect("finite weights give finite objectives");
                local.insert(FrontPoint { objectives, state: SpinState::new(spins.clone()).expect("spins are +-1") });
            }
            local
        })
        .collect();
    let mut archive = merge_fronts(m, chunks.iter().map(FrontArchive::points));
    // Every enumerated state was offered once; the merge re-offers survivors.
    archive.set_insert_count(total);
    Ok(archive)
}

/// Union of fronts, re-filtered; earlier fronts win ties on identical vectors.
pub fn merge_fronts<'a>(dim: usize, fronts: impl IntoIterator<Item = &'a [FrontPoint]>) -> FrontArchive {
    let mut archive = FrontArchive::new(dim);
    for front in fronts {
        for p in front {
            archive.insert(p.clone());
        }
    }
    archive
}

/// Runs every strategy and repetition and returns the union of their final
/// archives, joined with the exhaustive true front when N <= `exhaustive_cap`.
pub fn build_reference_front(
    instance: &MultiObjectiveInstance,
    strategies: &[RunConfig],
    exhaustive_cap: usize,
) -> Result<FrontArchive, PipelineError> {
    if strategies.is_empty() {
        return Err(PipelineError::Config("at least one strategy is required".into()));
    }
    let traces = run_all(instance, strategies).map_err(|e| e.source)?;
    reference_from_traces(instance, &traces, exhaustive_cap, None)
}

fn reference_from_traces(
    instance: &MultiObjectiveInstance,
    traces: &[(usize, SweepTrace)],
    exhaustive_cap: usize,
    external: Option<&[FrontPoint]>,
) -> Result<FrontArchive, PipelineError> {
    let m = instance.num_objectives();
    let exhaustive = if instance.num_nodes() <= exhaustive_cap {
        Some(exhaustive_pareto_front(instance, exhaustive_cap)?)
    } else {
        None
    };
    let mut fronts: Vec<&[FrontPoint]> = Vec::new();
    if let Some(ext) = external {
        fronts.push(ext);
    }
    if let Some(ex) = &exhaustive {
        fronts.push(ex.points());
    }
    fronts.extend(traces.iter().map(|(_, t)| t.archive.points()));
    Ok(merge_fronts(m, fronts))
}

#[derive(Debug, Clone)]
pub struct ExperimentOptions {
    /// Previously published or computed front to compare against.
    pub external_reference: Option<Vec<FrontPoint>>,
    /// Largest N for which the exhaustive true front joins the reference.
    pub exhaustive_cap: usize,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self { external_reference: None, exhaustive_cap: DEFAULT_MAX_EXHAUSTIVE_NODES }
    }
}

#[derive(Debug, Clone)]
pub struct RepetitionResult {
    pub repetition: usize,
    pub trace: SweepTrace,
    pub series: TimeSeries,
}

#[derive(Debug, Clone)]
pub struct StrategyResult {
    pub config: RunConfig,
    pub repetitions: Vec<RepetitionResult>,
}

impl StrategyResult {
    pub fn series(&self) -> Vec<TimeSeries> {
        self.repetitions.iter().map(|r| r.series.clone()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub reference: Reference,
    pub strategies: Vec<StrategyResult>,
    /// Set when the runs improved on the external reference; the experiment
    /// was re-baselined on the merged front and this holds the old baseline.
    pub improved_over: Option<Reference>,
}

/// A failed experiment, with whatever repetitions finished before the failure.
#[derive(Debug, Error)]
#[error("{label} repetition {repetition}: {source}")]
pub struct ExperimentError {
    pub label: String,
    pub repetition: usize,
    #[source]
    pub source: PipelineError,
    /// Finished traces as (strategy index, trace).
    pub completed: Vec<(usize, SweepTrace)>,
}

fn run_all(instance: &MultiObjectiveInstance, strategies: &[RunConfig]) -> Result<Vec<(usize, SweepTrace)>, ExperimentError> {
    let mut done = Vec::new();
    for (si, config) in strategies.iter().enumerate() {
        let fail = |repetition, source, done| ExperimentError { label: config.label.clone(), repetition, source, completed: done };
        if let Err(e) = config.validate() {
            return Err(fail(0, e, done));
        }
        let sampler = config.backend.build();
        let results: Vec<Result<SweepTrace, PipelineError>> = (0..config.repetitions)
            .into_par_iter()
            .map(|rep| trace_sweep(instance, config, rep, sampler.as_ref()))
            .collect();
        for (rep, r) in results.into_iter().enumerate() {
            match r {
                Ok(t) => done.push((si, t)),
                Err(e) => return Err(fail(rep, e, done)),
            }
        }
    }
    Ok(done)
}

/// Runs all strategies, fixes the reference front from their union (plus the
/// exhaustive front for small N and any external reference), then scores
/// every repetition against it.
pub fn run_experiment(
    instance: &MultiObjectiveInstance,
    strategies: &[RunConfig],
    options: &ExperimentOptions,
) -> Result<ExperimentOutcome, ExperimentError> {
    if strategies.is_empty() {
        return Err(ExperimentError {
            label: String::new(),
            repetition: 0,
            source: PipelineError::Config("at least one strategy is required".into()),
            completed: Vec::new(),
        });
    }
    let traces = run_all(instance, strategies)?;
    let wrap = |source: PipelineError, traces: &[(usize, SweepTrace)]| ExperimentError {
        label: String::from("reference"),
        repetition: 0,
        source,
        completed: traces.to_vec(),
    };
    let merged = reference_from_traces(instance, &traces, options.exhaustive_cap, options.external_reference.as_deref())
        .map_err(|e| wrap(e, &traces))?;
    let reference = Reference::from_archive(&merged).map_err(|e| wrap(e, &traces))?;
    let improved_over = match &options.external_reference {
        Some(ext) => {
            let old = Reference::from_front(ext.clone()).map_err(|e| wrap(e, &traces))?;
            let tolerance = 1e-9 * old.hv_max.abs();
            let hv = crate::pareto::hypervolume(&merged.objective_vectors(), &old.point).map_err(|e| wrap(e.into(), &traces))?;
            (hv > old.hv_max + tolerance).then_some(old)
        }
        None => None,
    };

    let mut strategies_out: Vec<StrategyResult> =
        strategies.iter().map(|c| StrategyResult { config: c.clone(), repetitions: Vec::new() }).collect();
    for (si, trace) in traces.iter() {
        let series = score_trace(trace, &reference).map_err(|e| wrap(e, &traces))?;
        strategies_out[*si].repetitions.push(RepetitionResult { repetition: trace.repetition, trace: trace.clone(), series });
    }
    Ok(ExperimentOutcome { reference, strategies: strategies_out, improved_over })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_gaussian_weights, Graph};
    use crate::samplers::{BackendSpec, TilingPlan};

    fn ring(n: usize) -> Graph {
        Graph::new(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    #[test]
    fn exhaustive_front_is_mutually_nondominated() {
        let inst = generate_gaussian_weights(ring(8), 3, 5);
        let front = exhaustive_pareto_front(&inst, 30).unwrap();
        front.check_invariants().unwrap();
        assert_eq!(front.insert_count(), 128);
        assert!(front.points().iter().all(|p| p.state.spins()[0] == 1));
    }

    #[test]
    fn single_strategy_reference_matches_run() {
        let inst = generate_gaussian_weights(ring(6), 2, 1);
        let cfg = RunConfig {
            num_weight_vectors: Some(5),
            num_reads: 64,
            tiling: TilingPlan::new(2),
            repetitions: 1,
            ..RunConfig::new("ex", BackendSpec::Exhaustive { max_nodes: 16 })
        };
        let by_union = build_reference_front(&inst, std::slice::from_ref(&cfg), 0).unwrap();
        let run = trace_sweep(&inst, &cfg, 0, cfg.backend.build().as_ref()).unwrap();
        let mut a = by_union.objective_vectors();
        let mut b = run.archive.objective_vectors();
        a.sort_by(|x, y| x.total_cmp(y));
        b.sort_by(|x, y| x.total_cmp(y));
        assert_eq!(a, b);
    }

    #[test]
    fn improved_external_reference_is_rebaselined() {
        let inst = generate_gaussian_weights(ring(6), 2, 9);
        let truth = exhaustive_pareto_front(&inst, 30).unwrap();
        let weaker: Vec<FrontPoint> = truth
            .points()
            .iter()
            .map(|p| FrontPoint {
                objectives: ObjectiveVector::new(p.objectives.values().iter().map(|x| x - 1.0).collect()).unwrap(),
                state: p.state.clone(),
            })
            .collect();
        let cfg = RunConfig {
            num_weight_vectors: Some(4),
            num_reads: 64,
            repetitions: 1,
            ..RunConfig::new("ex", BackendSpec::Exhaustive { max_nodes: 16 })
        };
        let opts = ExperimentOptions { external_reference: Some(weaker), exhaustive_cap: 30 };
        let out = run_experiment(&inst, &[cfg], &opts).unwrap();
        assert!(out.improved_over.is_some());
        assert_eq!(out.reference.front.len(), truth.len());
    }
}
