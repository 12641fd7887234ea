//! Result files: one JSON record per sequence run, a flat results CSV, a
//! per-tracker summary CSV and the mean success curve.
//!
//! Numbers are written with six decimals. With timing disabled the FPS
//! fields are left empty so reruns are byte-identical.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluation::benchmark::SequenceResult;
use crate::evaluation::metrics::success_thresholds;

pub const RESULTS_HEADER: [&str; 8] = ["sequence", "tracker", "OP", "DP", "AUC", "FPS", "failures", "mean_overlap"];

fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::ingest(path, format!("{other:?}")),
    }
}

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map_err(|e| Error::io(path, e))
}

fn fps_field(fps: Option<f64>, timing: bool) -> String {
    match fps {
        Some(f) if timing => fmt6(f),
        _ => String::new(),
    }
}

pub fn write_results_csv(results: &[SequenceResult], path: &Path, timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(RESULTS_HEADER).map_err(|e| csv_err(path, e))?;
    for r in results {
        let m = &r.metrics;
        w.write_record([
            r.sequence.clone(),
            r.tracker.to_string(),
            fmt6(m.op),
            fmt6(m.dp),
            fmt6(m.auc),
            fps_field(m.fps, timing),
            m.failures.map(|f| f.to_string()).unwrap_or_default(),
            m.mean_overlap.map(fmt6).unwrap_or_default(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Per-tracker means, in first-appearance order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrackerSummary {
    pub tracker: String,
    pub sequences: usize,
    pub mean_op: f64,
    pub mean_dp: f64,
    pub mean_auc: f64,
    pub mean_fps: Option<f64>,
    pub failures: Option<usize>,
    pub mean_overlap: Option<f64>,
    pub success_curve: Vec<f64>,
}

pub fn summarize(results: &[SequenceResult]) -> Vec<TrackerSummary> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<&SequenceResult>> = BTreeMap::new();
    for r in results {
        let name = r.tracker.to_string();
        if !groups.contains_key(&name) {
            order.push(name.clone());
        }
        groups.entry(name).or_default().push(r);
    }
    order
        .into_iter()
        .map(|name| {
            let rs = &groups[&name];
            let n = rs.len() as f64;
            let mean = |f: &dyn Fn(&SequenceResult) -> f64| rs.iter().map(|r| f(r)).sum::<f64>() / n;
            let fps: Option<Vec<f64>> = rs.iter().map(|r| r.metrics.fps).collect();
            let fails: Option<Vec<usize>> = rs.iter().map(|r| r.metrics.failures).collect();
            let overlap: Option<Vec<f64>> = rs.iter().map(|r| r.metrics.mean_overlap).collect();
            let curve_len = rs[0].metrics.success_curve.len();
            let success_curve = (0..curve_len).map(|i| mean(&|r| r.metrics.success_curve[i])).collect();
            TrackerSummary {
                sequences: rs.len(),
                mean_op: mean(&|r| r.metrics.op),
                mean_dp: mean(&|r| r.metrics.dp),
                mean_auc: mean(&|r| r.metrics.auc),
                mean_fps: fps.map(|v| v.iter().sum::<f64>() / n),
                failures: fails.map(|v| v.iter().sum()),
                mean_overlap: overlap.map(|v| v.iter().sum::<f64>() / n),
                success_curve,
                tracker: name,
            }
        })
        .collect()
}

pub fn write_summary_csv(summary: &[TrackerSummary], path: &Path, timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record([
        "tracker",
        "sequences",
        "mean_OP",
        "mean_DP",
        "mean_AUC",
        "mean_FPS",
        "failures",
        "mean_overlap",
    ])
    .map_err(|e| csv_err(path, e))?;
    for s in summary {
        w.write_record([
            s.tracker.clone(),
            s.sequences.to_string(),
            fmt6(s.mean_op),
            fmt6(s.mean_dp),
            fmt6(s.mean_auc),
            fps_field(s.mean_fps, timing),
            s.failures.map(|f| f.to_string()).unwrap_or_default(),
            s.mean_overlap.map(fmt6).unwrap_or_default(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Mean success curve per tracker: `tracker,threshold,mean_OP`.
pub fn write_success_csv(summary: &[TrackerSummary], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["tracker", "threshold", "mean_OP"]).map_err(|e| csv_err(path, e))?;
    for s in summary {
        for (t, v) in success_thresholds().iter().zip(&s.success_curve) {
            w.write_record([s.tracker.clone(), format!("{t:.2}"), fmt6(*v)])
                .map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One JSON object per line, per-frame overlaps and errors included.
pub fn write_jsonl(results: &[SequenceResult], path: &Path, timing: bool) -> Result<()> {
    let mut w = BufWriter::new(create(path)?);
    for r in results {
        let mut r = r.clone();
        if !timing {
            r.metrics.fps = None;
        }
        let line = serde_json::to_string(&r).map_err(|e| Error::state(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// A row of a results CSV as read back.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub sequence: String,
    pub tracker: String,
    pub values: BTreeMap<String, Option<f64>>,
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let idx = |name: &str| headers.iter().position(|h| h == name);
    let (si, ti) = match (idx("sequence"), idx("tracker")) {
        (Some(s), Some(t)) => (s, t),
        _ => return Err(Error::ingest(path, "missing 'sequence' or 'tracker' column")),
    };
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let mut values = BTreeMap::new();
        for (i, h) in headers.iter().enumerate() {
            if i == si || i == ti {
                continue;
            }
            let raw = rec.get(i).unwrap_or("").trim();
            let v = if raw.is_empty() {
                None
            } else {
                Some(raw.parse::<f64>().map_err(|_| {
                    Error::ingest(path, format!("non-numeric value '{raw}' in column {h}"))
                })?)
            };
            values.insert(h.to_string(), v);
        }
        rows.push(ResultRow {
            sequence: rec.get(si).unwrap_or("").to_string(),
            tracker: rec.get(ti).unwrap_or("").to_string(),
            values,
        });
    }
    Ok(rows)
}

/// Difference `b − a` of one metric for a `(sequence, tracker)` pair.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricDelta {
    pub sequence: String,
    pub tracker: String,
    pub metric: String,
    pub before: Option<f64>,
    pub after: Option<f64>,
}

impl MetricDelta {
    pub fn delta(&self) -> Option<f64> {
        Some(self.after? - self.before?)
    }
}

/// Pairs rows by `(sequence, tracker)`; rows present on one side only are
/// reported with the other side empty.
pub fn compare_results(a: &[ResultRow], b: &[ResultRow]) -> Vec<MetricDelta> {
    let key = |r: &ResultRow| (r.sequence.clone(), r.tracker.clone());
    let mut keys: Vec<(String, String)> = a.iter().map(key).collect();
    for r in b {
        if !keys.contains(&key(r)) {
            keys.push(key(r));
        }
    }
    let mut out = Vec::new();
    for (seq, trk) in keys {
        let ra = a.iter().find(|r| r.sequence == seq && r.tracker == trk);
        let rb = b.iter().find(|r| r.sequence == seq && r.tracker == trk);
        for metric in RESULTS_HEADER[2..].iter() {
            let get = |r: Option<&ResultRow>| r.and_then(|r| r.values.get(*metric).copied().flatten());
            let (before, after) = (get(ra), get(rb));
            if before.is_none() && after.is_none() {
                continue;
            }
            out.push(MetricDelta {
                sequence: seq.clone(),
                tracker: trk.clone(),
                metric: metric.to_string(),
                before,
                after,
            });
        }
    }
    out
}
