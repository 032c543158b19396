use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{PipelineError, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub time_s: f64,
    pub mean_fom: f64,
    pub min_fom: f64,
    pub max_fom: f64,
}

/// Figure of merit across repetitions on a common time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSeries {
    pub label: String,
    pub rows: Vec<BandRow>,
}

/// Step-interpolates every series onto the union of event times (last value
/// carried forward; before its first event a series sits at `hv_max + 1`).
pub fn aggregate(label: impl Into<String>, series: &[TimeSeries]) -> Result<BandedSeries, PipelineError> {
    if series.is_empty() {
        return Err(PipelineError::EmptyAggregate);
    }
    let mut grid: Vec<f64> = series.iter().flat_map(|s| s.events.iter().map(|e| e.time_s)).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut cursors = vec![0usize; series.len()];
    let mut current: Vec<f64> = series.iter().map(TimeSeries::initial_fom).collect();
    let rows = grid
        .into_iter()
        .map(|t| {
            for (i, s) in series.iter().enumerate() {
                while cursors[i] < s.events.len() && s.events[cursors[i]].time_s <= t {
                    current[i] = s.events[cursors[i]].figure_of_merit;
                    cursors[i] += 1;
                }
            }
            BandRow {
                time_s: t,
                mean_fom: current.iter().sum::<f64>() / current.len() as f64,
                min_fom: current.iter().copied().fold(f64::INFINITY, f64::min),
                max_fom: current.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();
    Ok(BandedSeries { label: label.into(), rows })
}

pub const CSV_HEADER: &str = "time_s,mean_fom,min_fom,max_fom";

impl BandedSeries {
    /// CSV with a leading `# label=<name>` comment line.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# label={}\n{CSV_HEADER}\n", self.label.replace('\n', " "));
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", r.time_s, r.mean_fom, r.min_fom, r.max_fom).expect("writing to a String");
        }
        out
    }

    /// Parses [`BandedSeries::to_csv`] output. A missing label line yields `fallback_label`.
    pub fn from_csv(text: &str, fallback_label: &str) -> Result<Self, String> {
        let mut label = None;
        let mut header_seen = false;
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(l) = comment.trim().strip_prefix("label=") {
                    label.get_or_insert_with(|| l.to_string());
                }
                continue;
            }
            if !header_seen {
                let cols: Vec<&str> = line.split(',').map(str::trim).collect();
                if cols.join(",") != CSV_HEADER {
                    return Err(format!("line {}: expected header {CSV_HEADER:?}", lineno + 1));
                }
                header_seen = true;
                continue;
            }
            let vals = line
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| format!("line {}: {e}", lineno + 1)))
                .collect::<Result<Vec<f64>, String>>()?;
            if vals.len() != 4 || vals.iter().any(|v| !v.is_finite()) {
                return Err(format!("line {}: expected four finite numbers", lineno + 1));
            }
            rows.push(BandRow { time_s: vals[0], mean_fom: vals[1], min_fom: vals[2], max_fom: vals[3] });
        }
        if !header_seen {
            return Err("missing CSV header".into());
        }
        Ok(Self { label: label.unwrap_or_else(|| fallback_label.to_string()), rows })
    }
}
