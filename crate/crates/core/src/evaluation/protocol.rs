//! One-pass, reset, temporal (TRE) and spatial (SRE) evaluation protocols.

use std::time::Instant;

use crate::error::Result;
use crate::evaluation::dataset::Sequence;
use crate::evaluation::metrics::iou;
use crate::features::image::GrayImage;
use crate::trackers::{self, BoundingBox, TrackerConfig, TrackerHandle, TrackerKind};

/// Frames between a failure and re-initialization.
pub const RESET_GAP: usize = 5;
pub const TRE_SEGMENTS: usize = 20;

/// Anything that can be run over a sequence.
pub trait SequenceTracker {
    fn initialize(&mut self, frame: &GrayImage, bbox: BoundingBox) -> Result<()>;
    fn update(&mut self, frame: &GrayImage) -> Result<BoundingBox>;
}

/// Adapter running one of the built-in trackers.
pub struct DcfTracker {
    kind: TrackerKind,
    config: TrackerConfig,
    handle: Option<TrackerHandle>,
}

impl DcfTracker {
    pub fn new(kind: TrackerKind, config: TrackerConfig) -> Self {
        Self {
            kind,
            config,
            handle: None,
        }
    }

    pub fn handle(&self) -> Option<&TrackerHandle> {
        self.handle.as_ref()
    }
}

impl SequenceTracker for DcfTracker {
    fn initialize(&mut self, frame: &GrayImage, bbox: BoundingBox) -> Result<()> {
        self.handle = Some(trackers::init(self.kind, frame, bbox, &self.config)?);
        Ok(())
    }

    fn update(&mut self, frame: &GrayImage) -> Result<BoundingBox> {
        let h = self
            .handle
            .as_mut()
            .ok_or_else(|| crate::error::Error::state("tracker used before initialization"))?;
        Ok(h.track(frame)?.0)
    }
}

/// Predictions of one run plus the time spent inside the tracker.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub predictions: Vec<BoundingBox>,
    pub seconds: f64,
}

impl RunOutput {
    pub fn fps(&self) -> f64 {
        if self.seconds > 0.0 {
            self.predictions.len() as f64 / self.seconds
        } else {
            f64::INFINITY
        }
    }
}

/// Initializes on `frames[0]` with `init` and tracks the rest. The first
/// prediction is the initial box.
pub fn run_tracker<T: SequenceTracker + ?Sized>(
    tracker: &mut T,
    frames: &[GrayImage],
    init: BoundingBox,
) -> Result<RunOutput> {
    let mut predictions = Vec::with_capacity(frames.len());
    let mut seconds = 0.0;
    if let Some((first, rest)) = frames.split_first() {
        let t = Instant::now();
        tracker.initialize(first, init)?;
        seconds += t.elapsed().as_secs_f64();
        predictions.push(init);
        for f in rest {
            let t = Instant::now();
            let b = tracker.update(f)?;
            seconds += t.elapsed().as_secs_f64();
            predictions.push(b);
        }
    }
    Ok(RunOutput { predictions, seconds })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResetOutcome {
    pub failures: usize,
    pub mean_overlap: f64,
    /// Indices of frames that entered the overlap average.
    pub evaluated: Vec<usize>,
    pub overlaps: Vec<f64>,
    /// Boxes on the evaluated frames; ground truth on initialization frames.
    pub predictions: Vec<BoundingBox>,
    /// Frames where the tracker was (re-)initialized.
    pub initializations: Vec<usize>,
    pub seconds: f64,
}

/// Reset protocol: a frame with zero overlap is a failure; the tracker is
/// re-initialized from ground truth `RESET_GAP` frames later and the frames
/// in between are skipped. Initialization frames count with overlap 1 and a
/// failure frame with overlap 0.
pub fn run_reset_protocol_with<T: SequenceTracker + ?Sized>(tracker: &mut T, seq: &Sequence) -> Result<ResetOutcome> {
    let n = seq.len();
    let mut out = ResetOutcome {
        failures: 0,
        mean_overlap: 0.0,
        evaluated: Vec::new(),
        overlaps: Vec::new(),
        predictions: Vec::new(),
        initializations: Vec::new(),
        seconds: 0.0,
    };
    let mut k = 0;
    let mut init_at = Some(0);
    while k < n {
        let t = Instant::now();
        if init_at == Some(k) {
            tracker.initialize(&seq.frames[k], seq.ground_truth[k])?;
            out.seconds += t.elapsed().as_secs_f64();
            out.initializations.push(k);
            out.evaluated.push(k);
            out.overlaps.push(1.0);
            out.predictions.push(seq.ground_truth[k]);
            init_at = None;
            k += 1;
            continue;
        }
        let b = tracker.update(&seq.frames[k])?;
        out.seconds += t.elapsed().as_secs_f64();
        let o = iou(&b, &seq.ground_truth[k]);
        out.evaluated.push(k);
        out.overlaps.push(o);
        out.predictions.push(b);
        if o == 0.0 {
            out.failures += 1;
            k += RESET_GAP;
            init_at = Some(k);
        } else {
            k += 1;
        }
    }
    out.mean_overlap = if out.overlaps.is_empty() {
        0.0
    } else {
        out.overlaps.iter().sum::<f64>() / out.overlaps.len() as f64
    };
    Ok(out)
}

pub fn run_reset_protocol(kind: TrackerKind, seq: &Sequence, config: &TrackerConfig) -> Result<ResetOutcome> {
    run_reset_protocol_with(&mut DcfTracker::new(kind, config.clone()), seq)
}

/// The 12 perturbed initializations: 8 shifts by 10% of the target size
/// (right, left, down, up, then the four diagonals) followed by
/// center-preserving rescales by 0.8, 0.9, 1.1 and 1.2.
pub fn generate_sre_initializations(gt: &BoundingBox) -> Vec<BoundingBox> {
    let (dx, dy) = (0.1 * gt.width, 0.1 * gt.height);
    let shifts = [
        (1.0, 0.0),
        (-1.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (1.0, 1.0),
        (1.0, -1.0),
        (-1.0, 1.0),
        (-1.0, -1.0),
    ];
    let mut out: Vec<BoundingBox> = shifts
        .iter()
        .map(|&(sx, sy)| BoundingBox {
            x: gt.x + sx * dx,
            y: gt.y + sy * dy,
            ..*gt
        })
        .collect();
    let c = gt.center();
    for f in [0.8, 0.9, 1.1, 1.2] {
        out.push(BoundingBox::from_center(c, (gt.width * f, gt.height * f)));
    }
    out
}

/// Start frames of the temporal segments: `⌊i·n/20⌋` for `i < 20`, or every
/// frame when there are fewer than 20.
pub fn generate_tre_starts(num_frames: usize) -> Vec<usize> {
    if num_frames < TRE_SEGMENTS {
        return (0..num_frames).collect();
    }
    (0..TRE_SEGMENTS).map(|i| i * num_frames / TRE_SEGMENTS).collect()
}

/// A contiguous run of frames `start..end`, initialized from ground truth at `start`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
}

pub fn generate_tre_segments(seq: &Sequence) -> Vec<Segment> {
    generate_tre_starts(seq.len())
        .into_iter()
        .map(|start| Segment { start, end: seq.len() })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sre_fixture() {
        let gt = BoundingBox::new(0.0, 0.0, 100.0, 100.0).unwrap();
        let b = generate_sre_initializations(&gt);
        assert_eq!(b.len(), 12);
        assert_eq!(b[0], BoundingBox::new(10.0, 0.0, 100.0, 100.0).unwrap());
        assert_eq!(b[8], BoundingBox::new(10.0, 10.0, 80.0, 80.0).unwrap());
        for i in 0..12 {
            for j in 0..i {
                assert_ne!(b[i], b[j]);
            }
        }
    }

    #[test]
    fn tre_spacing() {
        assert_eq!(generate_tre_starts(20), (0..20).collect::<Vec<_>>());
        assert_eq!(generate_tre_starts(100), (0..20).map(|i| 5 * i).collect::<Vec<_>>());
        assert_eq!(generate_tre_starts(7).len(), 7);
    }
}
