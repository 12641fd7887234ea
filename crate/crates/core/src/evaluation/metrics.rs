//! Overlap and center-error metrics.
//!
//! Conventions: OP counts frames with IoU strictly above the threshold and DP
//! frames with center error strictly below it. The success curve is sampled
//! at `0, 0.05, …, 1` and counts IoU `≥ t`, so a perfect tracker reaches 1 at
//! every threshold while disjoint predictions only score at `t = 0`. AUC is
//! the mean of the 21 samples.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::trackers::BoundingBox;

pub const OP_THRESHOLD: f64 = 0.5;
pub const DP_THRESHOLD: f64 = 20.0;
pub const CURVE_SAMPLES: usize = 21;

/// Intersection over union; 0 for disjoint boxes.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iw = (a.x + a.width).min(b.x + b.width) - a.x.max(b.x);
    let ih = (a.y + a.height).min(b.y + b.height) - a.y.max(b.y);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

pub fn center_error(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    (ax - bx).hypot(ay - by)
}

pub fn success_thresholds() -> Vec<f64> {
    (0..CURVE_SAMPLES).map(|i| i as f64 * 0.05).collect()
}

/// Fraction of overlaps strictly above `threshold`.
pub fn overlap_precision(overlaps: &[f64], threshold: f64) -> f64 {
    fraction(overlaps, |o| o > threshold)
}

/// Fraction of center errors strictly below `threshold` pixels.
pub fn distance_precision(errors: &[f64], threshold: f64) -> f64 {
    fraction(errors, |e| e < threshold)
}

pub fn success_curve(overlaps: &[f64]) -> Vec<f64> {
    success_thresholds()
        .into_iter()
        .map(|t| fraction(overlaps, |o| o >= t))
        .collect()
}

fn fraction(values: &[f64], pred: impl Fn(f64) -> bool) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().filter(|&&v| pred(v)).count() as f64 / values.len() as f64
}

/// Per-sequence evaluation summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub ious: Vec<f64>,
    pub center_errors: Vec<f64>,
    pub op: f64,
    pub dp: f64,
    pub success_curve: Vec<f64>,
    pub auc: f64,
    /// Frames per second over init + track; `None` when timing is disabled.
    pub fps: Option<f64>,
    /// Reset-protocol failures, when that protocol ran.
    pub failures: Option<usize>,
    pub mean_overlap: Option<f64>,
}

pub fn compute_metrics(predictions: &[BoundingBox], ground_truth: &[BoundingBox]) -> Result<MetricsReport> {
    if predictions.len() != ground_truth.len() {
        return Err(Error::arg(format!(
            "{} predictions for {} ground-truth boxes",
            predictions.len(),
            ground_truth.len()
        )));
    }
    let ious: Vec<f64> = predictions.iter().zip(ground_truth).map(|(p, g)| iou(p, g)).collect();
    let center_errors: Vec<f64> = predictions
        .iter()
        .zip(ground_truth)
        .map(|(p, g)| center_error(p, g))
        .collect();
    let curve = success_curve(&ious);
    Ok(MetricsReport {
        op: overlap_precision(&ious, OP_THRESHOLD),
        dp: distance_precision(&center_errors, DP_THRESHOLD),
        auc: curve.iter().sum::<f64>() / curve.len() as f64,
        success_curve: curve,
        ious,
        center_errors,
        fps: None,
        failures: None,
        mean_overlap: None,
    })
}
