//! Tracker variants built on the multi-channel filter.
//!
//! All trackers are driven through [`TrackerHandle`]: [`init`] trains on the
//! first frame and [`TrackerHandle::track`] detects and updates on each
//! subsequent frame.

mod components;
pub mod config;
pub mod state;

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::image::GrayImage;
use crate::features::sample::scale_levels;
pub use config::{TrackerConfig, TrackerKind};
pub use state::{BoundingBox, TargetState};

use components::{JointFilter, ScaleFilter, TranslationFilter};

/// Wall-clock seconds spent per stage of one frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StageTimings {
    pub translation: f64,
    pub scale: f64,
    pub update: f64,
}

/// Per-frame internals, for inspection and tests.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FrameDiagnostics {
    /// Maximum of the translation (or joint) scores.
    pub translation_peak: f64,
    /// Estimated displacement `(dx, dy)` in pixels.
    pub translation_shift: (f64, f64),
    /// Signed argmax bin of the scale scores, or the pyramid level.
    pub scale_bin: Option<isize>,
    pub scale_peak: Option<f64>,
    /// Raw scale scores (interpolated when enabled), zero shift first.
    pub scale_scores: Vec<f64>,
    /// Fraction of template energy kept by the PCA projection.
    pub energy_retained: Option<f64>,
    pub iterations: usize,
    pub timings: StageTimings,
}

enum Engine {
    Translation(TranslationFilter),
    MultiResolution {
        filter: TranslationFilter,
        factors: Vec<f64>,
    },
    Joint {
        filter: JointFilter,
        iterative: bool,
    },
    ScaleSpace {
        translation: TranslationFilter,
        scale: ScaleFilter,
    },
}

/// A running tracker.
pub struct TrackerHandle {
    kind: TrackerKind,
    config: TrackerConfig,
    state: TargetState,
    frame_size: (usize, usize),
    scale_limits: (f64, f64),
    engine: Engine,
    frames: usize,
}

/// Starts a tracker on `frame` with the target at `bbox`.
pub fn init(kind: TrackerKind, frame: &GrayImage, bbox: BoundingBox, config: &TrackerConfig) -> Result<TrackerHandle> {
    config.validate()?;
    let bbox = BoundingBox::new(bbox.x, bbox.y, bbox.width, bbox.height)?;
    if bbox.width < 2.0 || bbox.height < 2.0 {
        return Err(Error::arg(format!(
            "target {}x{} is too small to track",
            bbox.width, bbox.height
        )));
    }
    let (cx, cy) = bbox.center();
    let (w, h) = (frame.width() as f64, frame.height() as f64);
    if !(0.0..=w).contains(&cx) || !(0.0..=h).contains(&cy) {
        return Err(Error::arg(format!(
            "target center ({cx:.1}, {cy:.1}) lies outside the {w}x{h} frame"
        )));
    }
    let state = TargetState::from_bbox(&bbox)?;
    let base = state.base_size;
    let engine = match kind {
        TrackerKind::Translation => Engine::Translation(TranslationFilter::new(base, config)?),
        TrackerKind::MultiResolution => Engine::MultiResolution {
            filter: TranslationFilter::new(base, config)?,
            factors: scale_levels(config.num_scales)
                .iter()
                .map(|&n| config.scale_step.powi(n))
                .collect(),
        },
        TrackerKind::Joint | TrackerKind::IterativeJoint => Engine::Joint {
            filter: JointFilter::new(base, config)?,
            iterative: kind == TrackerKind::IterativeJoint,
        },
        TrackerKind::Dsst | TrackerKind::Fdsst => Engine::ScaleSpace {
            translation: TranslationFilter::new(base, config)?,
            scale: ScaleFilter::new(base, config)?,
        },
    };
    let window = match &engine {
        Engine::Translation(f) | Engine::MultiResolution { filter: f, .. } => f.layout.extent,
        Engine::ScaleSpace { translation, .. } => translation.layout.extent,
        Engine::Joint { filter, .. } => filter.layout().extent,
    };
    // keep the search window at least a few pixels and the target inside the frame
    let min_scale = (5.0 / window.0).max(5.0 / window.1).min(1.0);
    let max_scale = (w / base.0).min(h / base.1).max(1.0);
    let mut handle = TrackerHandle {
        kind,
        config: config.clone(),
        state,
        frame_size: (frame.width(), frame.height()),
        scale_limits: (min_scale, max_scale),
        engine,
        frames: 0,
    };
    handle.train(frame)?;
    handle.frames = 1;
    Ok(handle)
}

impl TrackerHandle {
    pub fn kind(&self) -> TrackerKind {
        self.kind
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn state(&self) -> &TargetState {
        &self.state
    }

    pub fn bbox(&self) -> BoundingBox {
        self.state.bbox()
    }

    /// Frames processed so far, including the initial one.
    pub fn frames(&self) -> usize {
        self.frames
    }

    fn train(&mut self, frame: &GrayImage) -> Result<()> {
        let st = self.state;
        match &mut self.engine {
            Engine::Translation(f) | Engine::MultiResolution { filter: f, .. } => {
                f.train(frame, st.position, st.scale)
            }
            Engine::Joint { filter, .. } => filter.train(frame, st.position, st.scale),
            Engine::ScaleSpace { translation, scale } => {
                translation.train(frame, st.position, st.scale)?;
                scale.train(frame, &st)
            }
        }
    }

    fn moved(&self, pos: (f64, f64), shift: (f64, f64)) -> (f64, f64) {
        let (w, h) = (self.frame_size.0 as f64, self.frame_size.1 as f64);
        ((pos.0 + shift.0).clamp(0.0, w), (pos.1 + shift.1).clamp(0.0, h))
    }

    fn rescaled(&self, scale: f64, factor: f64) -> f64 {
        (scale * factor).clamp(self.scale_limits.0, self.scale_limits.1)
    }

    /// Locates the target in `frame`, updates the models and returns the new box.
    pub fn track(&mut self, frame: &GrayImage) -> Result<(BoundingBox, FrameDiagnostics)> {
        if (frame.width(), frame.height()) != self.frame_size {
            return Err(Error::arg(format!(
                "frame size changed from {}x{} to {}x{}",
                self.frame_size.0,
                self.frame_size.1,
                frame.width(),
                frame.height()
            )));
        }
        let mut diag = FrameDiagnostics {
            iterations: 1,
            ..Default::default()
        };
        let t0 = Instant::now();
        let st = self.state;
        let mut next = st;
        match &self.engine {
            Engine::Translation(f) => {
                let est = f.detect(frame, st.position, st.scale)?;
                diag.translation_peak = est.peak;
                diag.translation_shift = est.shift;
                diag.timings.translation = t0.elapsed().as_secs_f64();
                next.position = self.moved(st.position, est.shift);
            }
            Engine::MultiResolution { filter, factors } => {
                let mut i = 0;
                let mut est = filter.detect(frame, st.position, st.scale * factors[0])?;
                for (j, &fac) in factors.iter().enumerate().skip(1) {
                    let e = filter.detect(frame, st.position, st.scale * fac)?;
                    if e.peak > est.peak {
                        (i, est) = (j, e);
                    }
                }
                let level = i as isize - (factors.len() as isize - 1) / 2;
                let fac = factors[i];
                diag.translation_peak = est.peak;
                diag.translation_shift = est.shift;
                diag.scale_bin = Some(level);
                diag.timings.translation = t0.elapsed().as_secs_f64();
                next.position = self.moved(st.position, est.shift);
                next.scale = self.rescaled(st.scale, fac);
            }
            Engine::Joint { filter, iterative } => {
                let max_iter = if *iterative { self.config.max_iterations } else { 1 };
                let step = filter.step;
                let mut total = (0.0, 0.0);
                let mut pos = st.position;
                let mut scale = st.scale;
                let mut iterations = 0;
                let mut level_sum = 0;
                for _ in 0..max_iter {
                    let est = filter.detect(frame, pos, scale)?;
                    iterations += 1;
                    diag.translation_peak = est.peak;
                    pos = (pos.0 + est.shift.0, pos.1 + est.shift.1);
                    total = (total.0 + est.shift.0, total.1 + est.shift.1);
                    scale = (scale * step.powi(est.level)).clamp(self.scale_limits.0, self.scale_limits.1);
                    level_sum += est.level;
                    if est.level == 0 && est.shift == (0.0, 0.0) {
                        break;
                    }
                }
                diag.translation_shift = total;
                diag.scale_bin = Some(level_sum as isize);
                diag.iterations = iterations;
                diag.timings.translation = t0.elapsed().as_secs_f64();
                next.position = self.moved(st.position, total);
                next.scale = scale;
            }
            Engine::ScaleSpace { translation, scale } => {
                let est = translation.detect(frame, st.position, st.scale)?;
                diag.translation_peak = est.peak;
                diag.translation_shift = est.shift;
                diag.timings.translation = t0.elapsed().as_secs_f64();
                next.position = self.moved(st.position, est.shift);
                let t1 = Instant::now();
                let sc = scale.detect(frame, &next)?;
                let factor = self.config.scale_step.powf(sc.exponent);
                diag.scale_bin = Some(sc.bin);
                diag.scale_peak = Some(sc.peak);
                diag.scale_scores = sc.scores;
                diag.timings.scale = t1.elapsed().as_secs_f64();
                next.scale = self.rescaled(st.scale, factor);
            }
        }
        self.state = next;
        let t2 = Instant::now();
        self.train(frame)?;
        diag.timings.update = t2.elapsed().as_secs_f64();
        if let Engine::ScaleSpace { translation, .. } = &self.engine {
            diag.energy_retained = translation.energy;
        }
        self.frames += 1;
        Ok((self.state.bbox(), diag))
    }
}
