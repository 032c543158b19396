//! `run` and `compare`: execute an experiment config and write its artifacts.

use std::path::{Path, PathBuf};

use pareto_anneal::pareto::FrontPoint;
use pareto_anneal::pipeline::{
    aggregate, merge_fronts, run_experiment, score_trace, with_workers, ExperimentError, ExperimentOptions,
    ExperimentOutcome, PipelineError, Reference, RunRecord,
};
use pareto_anneal::samplers::{SamplerError, DEFAULT_MAX_EXHAUSTIVE_NODES};
use pareto_anneal::{MultiObjectiveInstance, SpinState};
use serde::Serialize;

use crate::config::{ExperimentConfig, InstanceSource};
use crate::error::CliError;
use crate::files::{file_stem, load_samples, to_pretty_json, write_atomic, write_partial, FrontEntry, FrontFile, FRONT_FORMAT_VERSION};
use crate::plot;

pub struct RunSettings {
    pub include_diagnostics: bool,
    pub workers: Option<usize>,
    pub force_plot: bool,
}

#[derive(Serialize)]
struct RepetitionReport {
    repetition: usize,
    front_size: usize,
    model_time_s: f64,
    final_hypervolume: f64,
    final_figure_of_merit: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_clock_s: Option<f64>,
}

#[derive(Serialize)]
struct StrategyReport {
    label: String,
    mean_final_figure_of_merit: f64,
    repetitions: Vec<RepetitionReport>,
}

#[derive(Serialize)]
struct ExperimentReport {
    reference_id: String,
    reference_front_size: usize,
    reference_point: Vec<f64>,
    hv_max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    improved_over_reference_id: Option<String>,
    strategies: Vec<StrategyReport>,
}

pub fn front_file(points: &[FrontPoint], dim: usize) -> FrontFile {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.objectives.total_cmp(&b.objectives));
    FrontFile {
        format_version: FRONT_FORMAT_VERSION,
        dimension: dim,
        points: sorted
            .into_iter()
            .map(|p| FrontEntry { state: (!p.state.is_empty()).then_some(p.state), objectives: p.objectives })
            .collect(),
    }
}

fn load_external(path: &Path, instance: &MultiObjectiveInstance) -> Result<Vec<FrontPoint>, CliError> {
    let entries = load_samples(path, None)?;
    if entries.is_empty() {
        return Err(CliError::usage(format!("{}: reference front is empty", path.display())));
    }
    let m = instance.num_objectives();
    if entries[0].objectives.dim() != m {
        return Err(CliError::usage(format!(
            "{}: reference front has {} objectives, instance has {m}",
            path.display(),
            entries[0].objectives.dim()
        )));
    }
    Ok(entries
        .into_iter()
        .map(|e| FrontPoint {
            objectives: e.objectives,
            state: e.state.unwrap_or_else(|| SpinState::new(Vec::new()).expect("empty state")),
        })
        .collect())
}

fn record_path(dir: &Path, label: &str, rep: usize) -> PathBuf {
    dir.join("records").join(format!("{}-rep{rep}.jsonl", file_stem(label)))
}

/// Saved copy of the effective config, pointing at the instance copy next to it.
fn saved_config(cfg: &ExperimentConfig) -> ExperimentConfig {
    let mut saved = cfg.clone();
    saved.instance = InstanceSource::Path(PathBuf::from("instance.json"));
    saved.output_dir = PathBuf::from(".");
    if let Some(r) = &saved.reference_front {
        saved.reference_front = Some(std::fs::canonicalize(r).unwrap_or_else(|_| r.clone()));
    }
    saved
}

fn write_partial_records(
    cfg: &ExperimentConfig,
    instance: &MultiObjectiveInstance,
    err: &ExperimentError,
    settings: &RunSettings,
) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    let archives: Vec<&[FrontPoint]> = err.completed.iter().map(|(_, t)| t.archive.points()).collect();
    let merged = merge_fronts(instance.num_objectives(), archives);
    if merged.is_empty() {
        return Ok(written);
    }
    let reference = Reference::from_archive(&merged).map_err(|e| CliError::Backend(e.to_string()))?;
    for (si, trace) in &err.completed {
        let config = &cfg.strategies[*si];
        let series = score_trace(trace, &reference).map_err(|e| CliError::Backend(e.to_string()))?;
        let record = RunRecord::new(config, instance, &reference, trace, &series);
        let path = record_path(&cfg.output_dir, &config.label, trace.repetition);
        written.push(write_partial(&path, record.to_jsonl(settings.include_diagnostics).as_bytes())?);
    }
    Ok(written)
}

fn classify(err: &ExperimentError) -> CliError {
    match &err.source {
        PipelineError::Config(m) => CliError::usage(m.clone()),
        PipelineError::Sampler(SamplerError::UnknownBackend(b)) => CliError::usage(format!("unknown backend {b:?}")),
        _ => CliError::Backend(err.to_string()),
    }
}

pub fn execute(cfg: &ExperimentConfig, settings: &RunSettings) -> Result<ExperimentOutcome, CliError> {
    cfg.validate()?;
    let instance = cfg.load_instance()?;
    let m = instance.num_objectives();
    let external = cfg.reference_front.as_deref().map(|p| load_external(p, &instance)).transpose()?;
    let options = ExperimentOptions {
        external_reference: external,
        exhaustive_cap: cfg.exhaustive_cap.unwrap_or(DEFAULT_MAX_EXHAUSTIVE_NODES),
    };
    let dir = &cfg.output_dir;
    write_atomic(&dir.join("instance.json"), instance.to_json().as_bytes())?;
    write_atomic(&dir.join("config.json"), &to_pretty_json(&saved_config(cfg)))?;

    let run = || run_experiment(&instance, &cfg.strategies, &options);
    let result = match settings.workers {
        Some(w) => with_workers(w, run),
        None => run(),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(err) => {
            let kept = write_partial_records(cfg, &instance, &err, settings)?;
            for p in &kept {
                eprintln!("kept partial record {}", p.display());
            }
            return Err(classify(&err));
        }
    };

    let mut strategy_reports = Vec::new();
    let mut bands = Vec::new();
    for s in &outcome.strategies {
        let mut reps = Vec::new();
        for r in &s.repetitions {
            let record = RunRecord::new(&s.config, &instance, &outcome.reference, &r.trace, &r.series);
            write_atomic(&record_path(dir, &s.config.label, r.repetition), record.to_jsonl(settings.include_diagnostics).as_bytes())?;
            let last = r.series.events.last();
            reps.push(RepetitionReport {
                repetition: r.repetition,
                front_size: r.trace.archive.len(),
                model_time_s: last.map_or(0.0, |e| e.time_s),
                final_hypervolume: last.map_or(0.0, |e| e.hypervolume),
                final_figure_of_merit: r.series.final_fom().unwrap_or(r.series.initial_fom()),
                wall_clock_s: settings.include_diagnostics.then_some(r.trace.wall_clock_s),
            });
        }
        let band = aggregate(s.config.label.clone(), &s.series()).map_err(|e| CliError::Backend(e.to_string()))?;
        write_atomic(&dir.join("aggregate").join(format!("{}.csv", file_stem(&s.config.label))), band.to_csv().as_bytes())?;
        bands.push(band);
        let mean = reps.iter().map(|r| r.final_figure_of_merit).sum::<f64>() / reps.len().max(1) as f64;
        strategy_reports.push(StrategyReport { label: s.config.label.clone(), mean_final_figure_of_merit: mean, repetitions: reps });
    }

    let reference_file = front_file(&outcome.reference.front, m);
    write_atomic(&dir.join("reference_front.json"), &to_pretty_json(&reference_file))?;
    let report = ExperimentReport {
        reference_id: outcome.reference.id.clone(),
        reference_front_size: outcome.reference.front.len(),
        reference_point: outcome.reference.point.values().to_vec(),
        hv_max: outcome.reference.hv_max,
        improved_over_reference_id: outcome.improved_over.as_ref().map(|r| r.id.clone()),
        strategies: strategy_reports,
    };
    write_atomic(&dir.join("hv_report.json"), &to_pretty_json(&report))?;

    if cfg.plot.enabled || settings.force_plot {
        let title = cfg.plot.title.clone().unwrap_or_else(|| instance.label().to_string());
        let svg = plot::render(&bands, &title).map_err(CliError::usage)?;
        write_atomic(&dir.join("plot.svg"), svg.as_bytes())?;
    }

    if let Some(old) = &outcome.improved_over {
        let path = dir.join("improved_front.json");
        write_atomic(&path, &to_pretty_json(&reference_file))?;
        return Err(CliError::ReferenceImproved(format!(
            "hypervolume {} beats reference {} ({} -> {} points); improved front written to {}",
            pareto_anneal::hypervolume(&outcome.reference.front.iter().map(|p| p.objectives.clone()).collect::<Vec<_>>(), &old.point)
                .unwrap_or(f64::NAN),
            old.hv_max,
            old.front.len(),
            outcome.reference.front.len(),
            path.display()
        )));
    }
    Ok(outcome)
}

pub fn print_summary(outcome: &ExperimentOutcome) {
    println!("reference front: {} points, hv_max {}", outcome.reference.front.len(), outcome.reference.hv_max);
    for s in &outcome.strategies {
        let finals: Vec<f64> = s.repetitions.iter().filter_map(|r| r.series.final_fom()).collect();
        let mean = finals.iter().sum::<f64>() / finals.len().max(1) as f64;
        println!("{}: {} repetitions, mean final figure of merit {mean}", s.config.label, finals.len());
    }
}
