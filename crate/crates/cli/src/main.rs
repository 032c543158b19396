mod config;
mod error;
mod files;
mod plot;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pareto_anneal::pareto::{figure_of_merit, reference_point, ParetoError};
use pareto_anneal::pipeline::{BandedSeries, CostSetting};
use pareto_anneal::samplers::{BackendSpec, TilingPlan};
use pareto_anneal::{hypervolume, nondominated_filter, MultiObjectiveInstance, ObjectiveVector};
use serde::Serialize;

use config::{ExperimentConfig, GenerateSpec};
use error::CliError;
use files::{load_samples, read_text, to_pretty_json, write_atomic, FrontEntry, FrontFile, FRONT_FORMAT_VERSION};

/// Pareto fronts of multi-objective weighted max-cut by scalarized Ising sampling.
#[derive(Parser, Debug)]
#[command(name = "pareto-anneal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a heavy-hex instance with Gaussian objective weights.
    Generate(GenerateArgs),
    /// Run every strategy of an experiment config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run a config (optionally once per backend) and plot the strategies together.
    Compare {
        config: PathBuf,
        /// Comma-separated backends; each runs the first strategy's settings.
        #[arg(long, value_delimiter = ',')]
        backends: Vec<String>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Reduce a samples file to its non-dominated front.
    Front {
        samples: PathBuf,
        /// Evaluate spin states against this instance.
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Hypervolume of a front against a reference front.
    Hv {
        front: PathBuf,
        reference: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Plot aggregate CSVs as an SVG.
    Plot {
        #[arg(required = true)]
        csvs: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        title: Option<String>,
    },
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long, default_value_t = 3)]
    objectives: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CostPreset {
    Advantage2,
    Advantage,
    /// Keep the explicit cost model given in the config.
    Custom,
}

/// Overrides applied to every strategy in the config.
#[derive(Args, Debug, Default)]
struct RunFlags {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    reads: Option<u64>,
    #[arg(long)]
    vectors: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long = "tiling-k")]
    tiling_k: Option<usize>,
    #[arg(long = "cost-preset", value_enum)]
    cost_preset: Option<CostPreset>,
    /// Omit wall-clock fields so outputs are byte-reproducible.
    #[arg(long)]
    no_diagnostics: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long = "output-dir")]
    output_dir: Option<PathBuf>,
}

fn parse_backend(s: &str) -> Result<BackendSpec, CliError> {
    s.parse().map_err(|e: pareto_anneal::samplers::SamplerError| CliError::usage(e.to_string()))
}

impl RunFlags {
    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<(), CliError> {
        let backend = self.backend.as_deref().map(parse_backend).transpose()?;
        if self.tiling_k == Some(0) {
            return Err(CliError::usage("--tiling-k must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(CliError::usage("--workers must be at least 1"));
        }
        for s in &mut cfg.strategies {
            if let Some(seed) = self.seed {
                s.seed = seed;
            }
            if let Some(b) = &backend {
                s.backend = b.clone();
            }
            if let Some(r) = self.reads {
                s.num_reads = r;
            }
            if let Some(v) = self.vectors {
                s.num_weight_vectors = Some(v);
            }
            if let Some(r) = self.reps {
                s.repetitions = r;
            }
            if let Some(k) = self.tiling_k {
                s.tiling = TilingPlan::new(k);
            }
            match self.cost_preset {
                Some(CostPreset::Advantage2) => s.cost = CostSetting::Preset("advantage2".into()),
                Some(CostPreset::Advantage) => s.cost = CostSetting::Preset("advantage".into()),
                Some(CostPreset::Custom) if !matches!(s.cost, CostSetting::Custom(_)) => {
                    return Err(CliError::usage(format!(
                        "--cost-preset custom needs an explicit cost model in strategy {:?}",
                        s.label
                    )))
                }
                _ => {}
            }
        }
        if let Some(d) = &self.output_dir {
            cfg.output_dir = d.clone();
        }
        Ok(())
    }

    fn settings(&self, force_plot: bool) -> run::RunSettings {
        run::RunSettings { include_diagnostics: !self.no_diagnostics, workers: self.workers, force_plot }
    }
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match output {
        Some(p) if p != Path::new("-") => write_atomic(p, bytes),
        _ => {
            use std::io::Write;
            std::io::stdout().write_all(bytes).map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn cmd_generate(args: &GenerateArgs) -> Result<(), CliError> {
    let spec = GenerateSpec {
        preset: args.preset.clone(),
        rows: args.rows,
        cols: args.cols,
        objectives: args.objectives,
        seed: args.seed,
    };
    let inst = spec.build()?;
    emit(args.output.as_deref(), inst.to_json().as_bytes())
}

fn cmd_run(config: &Path, flags: &RunFlags, backends: Option<&[String]>) -> Result<(), CliError> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(list) = backends.filter(|l| !l.is_empty()) {
        let template = cfg.strategies.first().cloned().ok_or_else(|| CliError::usage("config lists no strategies"))?;
        cfg.strategies = list
            .iter()
            .map(|b| {
                let mut s = template.clone();
                s.backend = parse_backend(b)?;
                s.label = b.clone();
                Ok(s)
            })
            .collect::<Result<_, CliError>>()?;
    }
    flags.apply(&mut cfg)?;
    let outcome = run::execute(&cfg, &flags.settings(backends.is_some()))?;
    run::print_summary(&outcome);
    Ok(())
}

fn cmd_front(samples: &Path, instance: Option<&Path>, output: Option<&Path>) -> Result<(), CliError> {
    let inst = instance
        .map(|p| {
            MultiObjectiveInstance::from_json(&read_text(p)?).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))
        })
        .transpose()?;
    let entries = load_samples(samples, inst.as_ref())?;
    let vectors: Vec<ObjectiveVector> = entries.iter().map(|e| e.objectives.clone()).collect();
    let keep = nondominated_filter(&vectors);
    let mut points: Vec<FrontEntry> = keep.into_iter().map(|i| entries[i].clone()).collect();
    points.sort_by(|a, b| a.objectives.total_cmp(&b.objectives));
    let dimension = entries.first().map_or(inst.as_ref().map_or(0, |i| i.num_objectives()), |e| e.objectives.dim());
    eprintln!("{} samples -> {} non-dominated points", entries.len(), points.len());
    let front = FrontFile { format_version: FRONT_FORMAT_VERSION, dimension, points };
    emit(output, &to_pretty_json(&front))
}

#[derive(Serialize)]
struct HvReport {
    num_points: usize,
    num_reference_points: usize,
    reference_point: Vec<f64>,
    hypervolume: f64,
    hv_max: f64,
    figure_of_merit: Option<f64>,
    reference_improved: bool,
    /// The reference front spans no volume above its own componentwise minimum.
    degenerate: bool,
}

fn cmd_hv(front: &Path, reference: &Path, output: Option<&Path>) -> Result<(), CliError> {
    let pts: Vec<ObjectiveVector> = load_samples(front, None)?.into_iter().map(|e| e.objectives).collect();
    let refs: Vec<ObjectiveVector> = load_samples(reference, None)?.into_iter().map(|e| e.objectives).collect();
    if refs.is_empty() {
        return Err(CliError::usage(format!("{}: reference front is empty", reference.display())));
    }
    if let Some(p) = pts.first().filter(|p| p.dim() != refs[0].dim()) {
        return Err(CliError::usage(format!("front has {} objectives, reference front has {}", p.dim(), refs[0].dim())));
    }
    let r = reference_point(&refs).map_err(|e| CliError::usage(e.to_string()))?;
    let hv_max = hypervolume(&refs, &r).map_err(|e| CliError::usage(e.to_string()))?;
    let hv = hypervolume(&pts, &r).map_err(|e| CliError::usage(e.to_string()))?;
    let (fom, improved) = match figure_of_merit(hv, hv_max) {
        Ok(f) => (Some(f), false),
        Err(ParetoError::ReferenceImproved { .. }) => (None, true),
        Err(e) => return Err(CliError::usage(e.to_string())),
    };
    let report = HvReport {
        num_points: pts.len(),
        num_reference_points: refs.len(),
        reference_point: r.values().to_vec(),
        hypervolume: hv,
        hv_max,
        figure_of_merit: fom,
        reference_improved: improved,
        degenerate: hv_max == 0.0,
    };
    emit(output, &to_pretty_json(&report))?;
    if improved {
        return Err(CliError::ReferenceImproved(format!("hypervolume {hv} exceeds reference {hv_max}")));
    }
    Ok(())
}

fn cmd_plot(csvs: &[PathBuf], output: &Path, title: Option<&str>) -> Result<(), CliError> {
    let series = csvs
        .iter()
        .map(|p| {
            let fallback = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            BandedSeries::from_csv(&read_text(p)?, &fallback).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let svg = plot::render(&series, title.unwrap_or("figure of merit vs model time")).map_err(CliError::usage)?;
    write_atomic(output, svg.as_bytes())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(args) => cmd_generate(&args),
        Command::Run { config, flags } => cmd_run(&config, &flags, None),
        Command::Compare { config, backends, flags } => cmd_run(&config, &flags, Some(&backends)),
        Command::Front { samples, instance, output } => cmd_front(&samples, instance.as_deref(), output.as_deref()),
        Command::Hv { front, reference, output } => cmd_hv(&front, &reference, output.as_deref()),
        Command::Plot { csvs, output, title } => cmd_plot(&csvs, &output, title.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
