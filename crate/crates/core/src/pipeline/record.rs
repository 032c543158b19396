use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Reference, RunConfig, SweepTrace, TimeEvent, TimeSeries};
use crate::instance::MultiObjectiveInstance;
use crate::pareto::{FrontPoint, ReferencePoint};

pub const RUN_RECORD_FORMAT_VERSION: u32 = 1;

/// Wall-clock facts that vary between otherwise identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub wall_clock_s: f64,
    pub worker_threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub format_version: u32,
    pub config: RunConfig,
    pub repetition: usize,
    pub instance_label: String,
    pub instance_digest: String,
    pub reference_id: String,
    pub reference_point: ReferencePoint,
    pub hv_max: f64,
    pub num_events: usize,
    pub states_offered: u64,
    pub final_front: Vec<FrontPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
}

/// One repetition: a JSON header line followed by one line per sampler call.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub header: RunHeader,
    pub events: Vec<TimeEvent>,
}

/// Hex SHA-256 of the canonical instance JSON.
pub fn instance_digest(instance: &MultiObjectiveInstance) -> String {
    Sha256::digest(instance.to_json().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunRecord {
    pub fn new(
        config: &RunConfig,
        instance: &MultiObjectiveInstance,
        reference: &Reference,
        trace: &SweepTrace,
        series: &TimeSeries,
    ) -> Self {
        Self {
            header: RunHeader {
                format_version: RUN_RECORD_FORMAT_VERSION,
                config: config.clone(),
                repetition: trace.repetition,
                instance_label: instance.label().to_string(),
                instance_digest: instance_digest(instance),
                reference_id: reference.id.clone(),
                reference_point: reference.point.clone(),
                hv_max: reference.hv_max,
                num_events: series.events.len(),
                states_offered: trace.archive.insert_count(),
                final_front: trace.archive.sorted_points(),
                diagnostics: Some(Diagnostics {
                    wall_clock_s: trace.wall_clock_s,
                    worker_threads: rayon::current_num_threads(),
                }),
            },
            events: series.events.clone(),
        }
    }

    pub fn to_jsonl(&self, include_diagnostics: bool) -> String {
        let mut header = self.header.clone();
        if !include_diagnostics {
            header.diagnostics = None;
        }
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, String> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: RunHeader =
            serde_json::from_str(lines.next().ok_or("empty run record")?).map_err(|e| format!("header: {e}"))?;
        let events = lines
            .enumerate()
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("event {i}: {e}")))
            .collect::<Result<Vec<TimeEvent>, String>>()?;
        if events.len() != header.num_events {
            return Err(format!("header announces {} events, found {}", header.num_events, events.len()));
        }
        Ok(Self { header, events })
    }
}
