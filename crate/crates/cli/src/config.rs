//! Experiment config: one JSON document describing instance, strategies and outputs.

use std::path::{Path, PathBuf};

use pareto_anneal::instance::{generate_heavy_hex, PAPER_PRESET};
use pareto_anneal::pipeline::RunConfig;
use pareto_anneal::{generate_gaussian_weights, validate_instance, MultiObjectiveInstance};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    pub objectives: usize,
    #[serde(default)]
    pub seed: u64,
}

impl GenerateSpec {
    pub fn build(&self) -> Result<MultiObjectiveInstance, CliError> {
        let (rows, cols) = match (self.preset.as_deref(), self.rows, self.cols) {
            (Some("paper"), None, None) => PAPER_PRESET,
            (Some(p), None, None) => return Err(CliError::usage(format!("unknown preset {p:?} (known: paper)"))),
            (Some(_), _, _) => return Err(CliError::usage("--preset cannot be combined with --rows/--cols")),
            (None, Some(r), Some(c)) if r >= 1 && c >= 1 => (r, c),
            (None, Some(_), Some(_)) => return Err(CliError::usage("--rows and --cols must be at least 1")),
            (None, _, _) => return Err(CliError::usage("give --preset paper or both --rows and --cols")),
        };
        if self.objectives < 2 {
            return Err(CliError::usage("--objectives must be at least 2"));
        }
        let inst = generate_gaussian_weights(generate_heavy_hex(rows, cols), self.objectives, self.seed);
        let violations = validate_instance(&inst);
        if !violations.is_empty() {
            return Err(CliError::usage(format!("generated instance is invalid: {violations:?}")));
        }
        Ok(inst)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSource {
    Path(PathBuf),
    Generate(GenerateSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotOptions {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
}

fn yes() -> bool {
    true
}

impl Default for PlotOptions {
    fn default() -> Self {
        Self { enabled: true, title: None }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Relative paths inside the document are resolved against its directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub instance: InstanceSource,
    pub strategies: Vec<RunConfig>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Front file an earlier experiment produced; runs that beat it exit with code 4.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_front: Option<PathBuf>,
    /// Largest N for which the exhaustive true front joins the reference.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exhaustive_cap: Option<usize>,
    #[serde(default)]
    pub plot: PlotOptions,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = crate::files::read_text(path)?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let InstanceSource::Path(p) = &mut cfg.instance {
            resolve(p);
        }
        resolve(&mut cfg.output_dir);
        if let Some(p) = &mut cfg.reference_front {
            resolve(p);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::usage(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.strategies.is_empty() {
            return Err(CliError::usage("config lists no strategies"));
        }
        let mut stems = std::collections::HashSet::new();
        for s in &self.strategies {
            s.validate().map_err(|e| CliError::usage(e.to_string()))?;
            if !stems.insert(crate::files::file_stem(&s.label)) {
                return Err(CliError::usage(format!("strategy label {:?} is not unique", s.label)));
            }
        }
        Ok(())
    }

    pub fn load_instance(&self) -> Result<MultiObjectiveInstance, CliError> {
        match &self.instance {
            InstanceSource::Generate(g) => g.build(),
            InstanceSource::Path(p) => {
                let text = crate::files::read_text(p)?;
                MultiObjectiveInstance::from_json(&text).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))
            }
        }
    }
}
