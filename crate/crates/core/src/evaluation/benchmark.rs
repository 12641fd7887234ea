//! Cross-product evaluation of trackers over sequences.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluation::dataset::Sequence;
use crate::evaluation::metrics::{compute_metrics, MetricsReport};
use crate::evaluation::protocol::{
    generate_sre_initializations, generate_tre_segments, run_reset_protocol_with, run_tracker, DcfTracker,
};
use crate::trackers::{BoundingBox, TrackerConfig, TrackerKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// One pass from the first frame.
    Plain,
    /// Re-initialize after failures.
    Reset,
    /// Temporal robustness: restarts at 20 evenly spaced frames.
    Tre,
    /// Spatial robustness: 12 perturbed first-frame boxes.
    Sre,
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Plain => "plain",
            Protocol::Reset => "reset",
            Protocol::Tre => "tre",
            Protocol::Sre => "sre",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plain" | "ope" => Ok(Protocol::Plain),
            "reset" | "vot" => Ok(Protocol::Reset),
            "tre" => Ok(Protocol::Tre),
            "sre" => Ok(Protocol::Sre),
            _ => Err(Error::arg(format!(
                "unknown protocol '{s}'; valid protocols: plain, reset, tre, sre"
            ))),
        }
    }
}

/// One tracker on one sequence.
#[derive(Clone, Debug, Serialize)]
pub struct SequenceResult {
    pub sequence: String,
    pub tracker: TrackerKind,
    pub protocol: Protocol,
    pub frames: usize,
    pub metrics: MetricsReport,
}

pub fn evaluate_sequence(
    kind: TrackerKind,
    config: &TrackerConfig,
    seq: &Sequence,
    protocol: Protocol,
) -> Result<SequenceResult> {
    let mut tracker = DcfTracker::new(kind, config.clone());
    let mut predictions: Vec<BoundingBox> = Vec::new();
    let mut truth: Vec<BoundingBox> = Vec::new();
    let mut seconds = 0.0;
    let mut reset = None;
    match protocol {
        Protocol::Plain => {
            let run = run_tracker(&mut tracker, &seq.frames, seq.ground_truth[0])?;
            seconds = run.seconds;
            predictions = run.predictions;
            truth = seq.ground_truth.clone();
        }
        Protocol::Reset => {
            let out = run_reset_protocol_with(&mut tracker, seq)?;
            seconds = out.seconds;
            truth = out.evaluated.iter().map(|&k| seq.ground_truth[k]).collect();
            predictions = out.predictions.clone();
            reset = Some(out);
        }
        Protocol::Tre => {
            for s in generate_tre_segments(seq) {
                let run = run_tracker(&mut tracker, &seq.frames[s.start..s.end], seq.ground_truth[s.start])?;
                seconds += run.seconds;
                predictions.extend(run.predictions);
                truth.extend_from_slice(&seq.ground_truth[s.start..s.end]);
            }
        }
        Protocol::Sre => {
            for init in generate_sre_initializations(&seq.ground_truth[0]) {
                let run = run_tracker(&mut tracker, &seq.frames, init)?;
                seconds += run.seconds;
                predictions.extend(run.predictions);
                truth.extend_from_slice(&seq.ground_truth);
            }
        }
    }
    let mut metrics = compute_metrics(&predictions, &truth)?;
    metrics.fps = Some(if seconds > 0.0 {
        predictions.len() as f64 / seconds
    } else {
        f64::INFINITY
    });
    if let Some(r) = reset {
        metrics.failures = Some(r.failures);
        metrics.mean_overlap = Some(r.mean_overlap);
    }
    Ok(SequenceResult {
        sequence: seq.name.clone(),
        tracker: kind,
        protocol,
        frames: seq.len(),
        metrics,
    })
}

/// Runs every tracker on every sequence with `threads` workers (0 = all
/// cores). Results are ordered by sequence, then tracker, independent of the
/// thread count.
pub fn run_benchmark(
    trackers: &[(TrackerKind, TrackerConfig)],
    sequences: &[Sequence],
    protocol: Protocol,
    threads: usize,
) -> Result<Vec<SequenceResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::state(format!("cannot start worker pool: {e}")))?;
    let jobs: Vec<(&Sequence, &(TrackerKind, TrackerConfig))> =
        sequences.iter().flat_map(|s| trackers.iter().map(move |t| (s, t))).collect();
    pool.install(|| {
        jobs.par_iter()
            .map(|(seq, (kind, cfg))| evaluate_sequence(*kind, cfg, seq, protocol))
            .collect()
    })
}
