//! File helpers: atomic writes and the front / samples formats.

use std::fs;
use std::path::{Path, PathBuf};

use pareto_anneal::objectives::evaluate_all;
use pareto_anneal::{MultiObjectiveInstance, ObjectiveVector, SpinState};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const FRONT_FORMAT_VERSION: u32 = 1;

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn partial_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".partial");
    path.with_file_name(name)
}

/// Writes `<path>.partial` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let tmp = partial_path(path);
    fs::write(&tmp, contents).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// Leaves output deliberately incomplete under a `.partial` name.
pub fn write_partial(path: &Path, contents: &[u8]) -> Result<PathBuf, CliError> {
    let tmp = partial_path(path);
    if let Some(dir) = tmp.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(&tmp, contents).map_err(|e| CliError::io(&tmp, e))?;
    Ok(tmp)
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontEntry {
    pub objectives: ObjectiveVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<SpinState>,
}

/// A non-dominated set, sorted by objective vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontFile {
    pub format_version: u32,
    pub dimension: usize,
    pub points: Vec<FrontEntry>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawEntry {
    Point { objectives: Vec<f64>, #[serde(default)] state: Option<Vec<i8>> },
    State { state: Vec<i8> },
    Numbers(Vec<f64>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawSamples {
    Front(FrontFile),
    Entries(Vec<RawEntry>),
}

fn malformed(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::usage(format!("{}: {msg}", path.display()))
}

/// Reads a samples file: a front file, or a JSON array whose entries are
/// objective vectors, `{objectives, state}` objects or `{state}` objects.
/// With an instance, bare arrays are spin states and every state is evaluated.
pub fn load_samples(path: &Path, instance: Option<&MultiObjectiveInstance>) -> Result<Vec<FrontEntry>, CliError> {
    let text = read_text(path)?;
    let raw: RawSamples = serde_json::from_str(&text).map_err(|e| malformed(path, e))?;
    let entries = match raw {
        RawSamples::Front(f) => {
            if f.points.iter().any(|p| p.objectives.dim() != f.dimension) {
                return Err(malformed(path, "point dimension differs from the declared dimension"));
            }
            f.points.into_iter().map(|p| (Some(p.objectives.values().to_vec()), p.state.map(Vec::from))).collect()
        }
        RawSamples::Entries(list) => list
            .into_iter()
            .map(|e| match (e, instance) {
                (RawEntry::Point { objectives, state }, _) => (Some(objectives), state),
                (RawEntry::State { state }, _) => (None, Some(state)),
                (RawEntry::Numbers(v), Some(_)) => (None, Some(v.into_iter().map(|x| if x == 1.0 { 1 } else if x == -1.0 { -1 } else { 0 }).collect())),
                (RawEntry::Numbers(v), None) => (Some(v), None),
            })
            .collect::<Vec<_>>(),
    };
    let mut out = Vec::with_capacity(entries.len());
    for (i, (objectives, state)) in entries.into_iter().enumerate() {
        let state = state
            .map(|s| SpinState::new(s).map_err(|e| malformed(path, format!("entry {i}: {e}"))))
            .transpose()?;
        let objectives = match (instance, &state) {
            (Some(inst), Some(s)) => evaluate_all(inst, s).map_err(|e| malformed(path, format!("entry {i}: {e}")))?,
            (_, _) => {
                let v = objectives.ok_or_else(|| malformed(path, format!("entry {i}: a state needs --instance")))?;
                ObjectiveVector::new(v).map_err(|e| malformed(path, format!("entry {i}: {e}")))?
            }
        };
        out.push(FrontEntry { objectives, state });
    }
    if let Some(first) = out.first() {
        let dim = first.objectives.dim();
        if let Some(i) = out.iter().position(|p| p.objectives.dim() != dim) {
            return Err(malformed(path, format!("entry {i} has dimension {}, expected {dim}", out[i].objectives.dim())));
        }
        if dim == 0 {
            return Err(malformed(path, "objective vectors are empty"));
        }
    }
    Ok(out)
}

/// Sanitized file stem for a strategy label.
pub fn file_stem(label: &str) -> String {
    let s: String =
        label.chars().map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' }).collect();
    if s.is_empty() {
        "strategy".into()
    } else {
        s
    }
}
