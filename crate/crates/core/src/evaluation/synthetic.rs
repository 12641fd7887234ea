//! Seeded synthetic sequences with exact ground truth.
//!
//! A smoothed-noise target texture is resampled onto a smoothed-noise
//! background along a parametric trajectory: linear drift plus sinusoidal pan
//! for the center and a linear zoom for the size. Optional occluding
//! rectangles and additive Gaussian noise are applied last. Frames are
//! quantized to 8 bits so that in-memory and on-disk copies agree.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluation::dataset::{Sequence, SequenceSource};
use crate::features::image::GrayImage;
use crate::kv::KvFile;
use crate::trackers::BoundingBox;

/// Ground-truth coordinates are rounded to this step, which keeps the
/// 1-based text round trip exact.
const GT_STEP: f64 = 1.0 / 64.0;

/// Rectangle drawn over frames `start..end`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Occlusion {
    pub start: usize,
    pub end: usize,
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SyntheticSpec {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub seed: u64,
    /// Target `(width, height)` at zoom 1.
    pub target_size: (f64, f64),
    /// Target center at frame 0.
    pub center: (f64, f64),
    /// Drift in pixels per frame.
    pub velocity: (f64, f64),
    /// Pan amplitude in pixels; both axes follow `sin(2πt/period)`.
    pub pan_amplitude: (f64, f64),
    pub pan_period: f64,
    /// Zoom at the first and last frame, interpolated linearly.
    pub zoom: (f64, f64),
    /// Standard deviation of additive noise, in intensity units.
    pub noise: f64,
    /// Box-filter radius of both textures.
    pub smoothing: usize,
    /// Peak-to-peak background contrast relative to the target's.
    pub background_contrast: f64,
    pub occlusions: Vec<Occlusion>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            width: 128,
            height: 128,
            frames: 50,
            seed: 1,
            target_size: (32.0, 24.0),
            center: (64.0, 64.0),
            velocity: (0.0, 0.0),
            pan_amplitude: (0.0, 0.0),
            pan_period: 50.0,
            zoom: (1.0, 1.0),
            noise: 0.01,
            smoothing: 1,
            background_contrast: 0.5,
            occlusions: Vec::new(),
        }
    }
}

fn quantize(v: f64) -> f64 {
    (v / GT_STEP).round() * GT_STEP
}

impl SyntheticSpec {
    /// Built-in sequences: `zoom`, `static`, `pan`, `shrink`, `occlusion`,
    /// `exit` and `smoke`.
    pub fn builtin(name: &str, seed: u64) -> Option<Self> {
        let base = Self {
            name: name.to_string(),
            seed,
            ..Self::default()
        };
        Some(match name {
            "zoom" => Self {
                frames: 100,
                pan_amplitude: (10.0, 5.0),
                pan_period: 50.0,
                zoom: (1.0, 1.5),
                noise: 0.02,
                ..base
            },
            "static" => Self {
                frames: 20,
                ..base
            },
            "pan" => Self {
                width: 160,
                height: 120,
                frames: 60,
                center: (60.0, 55.0),
                velocity: (0.6, 0.2),
                pan_amplitude: (12.0, 8.0),
                pan_period: 40.0,
                ..base
            },
            "shrink" => Self {
                frames: 80,
                target_size: (36.0, 28.0),
                zoom: (1.3, 0.9),
                pan_amplitude: (6.0, 6.0),
                pan_period: 60.0,
                ..base
            },
            "occlusion" => Self {
                frames: 60,
                zoom: (1.0, 1.2),
                pan_amplitude: (8.0, 0.0),
                occlusions: vec![Occlusion {
                    start: 25,
                    end: 32,
                    x: 40.0,
                    y: 56.0,
                    width: 16.0,
                    height: 40.0,
                }],
                ..base
            },
            "exit" => Self {
                frames: 50,
                target_size: (20.0, 20.0),
                center: (30.0, 64.0),
                velocity: (1.9, 0.0),
                ..base
            },
            "smoke" => Self {
                width: 96,
                height: 96,
                frames: 20,
                center: (48.0, 48.0),
                target_size: (24.0, 20.0),
                pan_amplitude: (4.0, 2.0),
                pan_period: 20.0,
                zoom: (1.0, 1.1),
                ..base
            },
            _ => return None,
        })
    }

    pub const BUILTINS: [&'static str; 7] = ["zoom", "static", "pan", "shrink", "occlusion", "exit", "smoke"];

    pub fn scale_at(&self, t: usize) -> f64 {
        let frac = if self.frames > 1 { t as f64 / (self.frames - 1) as f64 } else { 0.0 };
        self.zoom.0 + (self.zoom.1 - self.zoom.0) * frac
    }

    pub fn center_at(&self, t: usize) -> (f64, f64) {
        let tf = t as f64;
        let phase = (2.0 * PI * tf / self.pan_period).sin();
        (
            self.center.0 + self.velocity.0 * tf + self.pan_amplitude.0 * phase,
            self.center.1 + self.velocity.1 * tf + self.pan_amplitude.1 * phase,
        )
    }

    /// Ground-truth box of frame `t`.
    pub fn box_at(&self, t: usize) -> BoundingBox {
        let s = self.scale_at(t);
        let (cx, cy) = self.center_at(t);
        let (w, h) = (quantize(self.target_size.0 * s), quantize(self.target_size.1 * s));
        BoundingBox {
            x: quantize(cx - w / 2.0),
            y: quantize(cy - h / 2.0),
            width: w,
            height: h,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 8 || self.height < 8 {
            return Err(Error::arg(format!("canvas {}x{} is too small", self.width, self.height)));
        }
        if self.frames < 2 {
            return Err(Error::arg("a synthetic sequence needs at least 2 frames"));
        }
        if !(self.target_size.0 >= 2.0 && self.target_size.1 >= 2.0) {
            return Err(Error::arg("target must be at least 2x2 pixels"));
        }
        if !(self.zoom.0 > 0.0 && self.zoom.1 > 0.0) {
            return Err(Error::arg("zoom must stay positive"));
        }
        if !(self.pan_period > 0.0) || !(self.noise >= 0.0) || !(self.background_contrast >= 0.0) {
            return Err(Error::arg("pan_period must be positive; noise and contrast non-negative"));
        }
        let (cw, ch) = (self.width as f64, self.height as f64);
        for t in 0..self.frames {
            let b = self.box_at(t);
            let iw = (b.x + b.width).min(cw) - b.x.max(0.0);
            let ih = (b.y + b.height).min(ch) - b.y.max(0.0);
            let inside = iw.max(0.0) * ih.max(0.0);
            if inside < 0.5 * b.area() {
                return Err(Error::arg(format!(
                    "trajectory leaves less than half of the target in frame at frame {t}"
                )));
            }
        }
        for o in &self.occlusions {
            if o.end <= o.start || !(o.width > 0.0 && o.height > 0.0) {
                return Err(Error::arg("occlusion needs start < end and positive size"));
            }
        }
        Ok(())
    }

    /// Reads a spec file; `base = <builtin>` starts from a built-in sequence.
    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        let mut spec = Self::default();
        let entries: Vec<(&str, &str)> = kv.entries.iter().map(|(_, k, v)| (k.as_str(), v.as_str())).collect();
        if let Some((_, b)) = entries.iter().find(|(k, _)| *k == "base") {
            spec = Self::builtin(b, spec.seed)
                .ok_or_else(|| Error::arg(format!("unknown built-in sequence '{b}'")))?;
        }
        fn num<T: std::str::FromStr>(k: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::arg(format!("invalid value '{v}' for {k}")))
        }
        let mut occlusions_set = false;
        for (k, v) in entries {
            match k {
                "base" => {}
                "name" => spec.name = v.to_string(),
                "width" => spec.width = num(k, v)?,
                "height" => spec.height = num(k, v)?,
                "frames" => spec.frames = num(k, v)?,
                "seed" => spec.seed = num(k, v)?,
                "target_width" => spec.target_size.0 = num(k, v)?,
                "target_height" => spec.target_size.1 = num(k, v)?,
                "center_x" => spec.center.0 = num(k, v)?,
                "center_y" => spec.center.1 = num(k, v)?,
                "velocity_x" => spec.velocity.0 = num(k, v)?,
                "velocity_y" => spec.velocity.1 = num(k, v)?,
                "pan_x" => spec.pan_amplitude.0 = num(k, v)?,
                "pan_y" => spec.pan_amplitude.1 = num(k, v)?,
                "pan_period" => spec.pan_period = num(k, v)?,
                "zoom_start" => spec.zoom.0 = num(k, v)?,
                "zoom_end" => spec.zoom.1 = num(k, v)?,
                "noise" => spec.noise = num(k, v)?,
                "smoothing" => spec.smoothing = num(k, v)?,
                "background_contrast" => spec.background_contrast = num(k, v)?,
                "occlusion" => {
                    if !occlusions_set {
                        spec.occlusions.clear();
                        occlusions_set = true;
                    }
                    let p: Vec<&str> = v.split(',').map(str::trim).collect();
                    if p.len() != 6 {
                        return Err(Error::arg(format!("occlusion expects 'start,end,x,y,w,h', got '{v}'")));
                    }
                    spec.occlusions.push(Occlusion {
                        start: num(k, p[0])?,
                        end: num(k, p[1])?,
                        x: num(k, p[2])?,
                        y: num(k, p[3])?,
                        width: num(k, p[4])?,
                        height: num(k, p[5])?,
                    });
                }
                other => return Err(Error::arg(format!("unknown synthetic spec key '{other}'"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_kv(&KvFile::load(path)?)
    }

    /// Spec file text that [`SyntheticSpec::load`] reads back unchanged.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "name = {}", self.name);
        for (k, v) in [
            ("width", self.width.to_string()),
            ("height", self.height.to_string()),
            ("frames", self.frames.to_string()),
            ("seed", self.seed.to_string()),
            ("target_width", self.target_size.0.to_string()),
            ("target_height", self.target_size.1.to_string()),
            ("center_x", self.center.0.to_string()),
            ("center_y", self.center.1.to_string()),
            ("velocity_x", self.velocity.0.to_string()),
            ("velocity_y", self.velocity.1.to_string()),
            ("pan_x", self.pan_amplitude.0.to_string()),
            ("pan_y", self.pan_amplitude.1.to_string()),
            ("pan_period", self.pan_period.to_string()),
            ("zoom_start", self.zoom.0.to_string()),
            ("zoom_end", self.zoom.1.to_string()),
            ("noise", self.noise.to_string()),
            ("smoothing", self.smoothing.to_string()),
            ("background_contrast", self.background_contrast.to_string()),
        ] {
            let _ = writeln!(s, "{k} = {v}");
        }
        for o in &self.occlusions {
            let _ = writeln!(
                s,
                "occlusion = {},{},{},{},{},{}",
                o.start, o.end, o.x, o.y, o.width, o.height
            );
        }
        s
    }
}

/// Uniform noise smoothed by a `(2r+1)²` box filter, rescaled to span
/// `[-amp, amp]`.
fn smooth_texture(rng: &mut ChaCha8Rng, w: usize, h: usize, radius: usize, amp: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..w * h).map(|_| rng.random_range(-0.5..0.5)).collect();
    let r = radius as isize;
    let blur = |src: &[f64], horizontal: bool| -> Vec<f64> {
        let mut out = vec![0.0; w * h];
        for y in 0..h as isize {
            for x in 0..w as isize {
                let mut acc = 0.0;
                for k in -r..=r {
                    let (sx, sy) = if horizontal { (x + k, y) } else { (x, y + k) };
                    let sx = sx.clamp(0, w as isize - 1) as usize;
                    let sy = sy.clamp(0, h as isize - 1) as usize;
                    acc += src[sy * w + sx];
                }
                out[y as usize * w + x as usize] = acc / (2 * r + 1) as f64;
            }
        }
        out
    };
    let smooth = blur(&blur(&raw, true), false);
    let (lo, hi) = smooth
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = (hi - lo).max(1e-12);
    smooth.iter().map(|v| ((v - lo) / span * 2.0 - 1.0) * amp).collect()
}

pub fn render_synthetic(spec: &SyntheticSpec) -> Result<Sequence> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let max_zoom = spec.zoom.0.max(spec.zoom.1);
    let tw = (spec.target_size.0 * max_zoom).ceil().max(2.0) as usize;
    let th = (spec.target_size.1 * max_zoom).ceil().max(2.0) as usize;
    let texture = GrayImage::new(tw, th, smooth_texture(&mut rng, tw, th, spec.smoothing, 0.4))?;
    let (w, h) = (spec.width, spec.height);
    let amp = 0.4 * spec.background_contrast.min(1.0);
    let background = smooth_texture(&mut rng, w, h, spec.smoothing + 1, amp);
    let occluder = smooth_texture(&mut rng, w, h, spec.smoothing, 0.3);
    let noise = Normal::new(0.0, spec.noise).map_err(|e| Error::arg(e.to_string()))?;

    let mut frames = Vec::with_capacity(spec.frames);
    let mut ground_truth = Vec::with_capacity(spec.frames);
    for t in 0..spec.frames {
        let b = spec.box_at(t);
        let mut px = background.clone();
        let x0 = b.x.floor().max(0.0) as usize;
        let y0 = b.y.floor().max(0.0) as usize;
        let x1 = ((b.x + b.width).ceil().max(0.0) as usize).min(w);
        let y1 = ((b.y + b.height).ceil().max(0.0) as usize).min(h);
        for y in y0..y1 {
            let cy = y as f64 + 0.5;
            if cy < b.y || cy >= b.y + b.height {
                continue;
            }
            let v = (cy - b.y) / b.height * th as f64 - 0.5;
            for x in x0..x1 {
                let cx = x as f64 + 0.5;
                if cx < b.x || cx >= b.x + b.width {
                    continue;
                }
                let u = (cx - b.x) / b.width * tw as f64 - 0.5;
                px[y * w + x] = texture.bilinear(u, v);
            }
        }
        for o in spec.occlusions.iter().filter(|o| (o.start..o.end).contains(&t)) {
            for y in 0..h {
                let cy = y as f64 + 0.5;
                if cy < o.y || cy >= o.y + o.height {
                    continue;
                }
                for x in 0..w {
                    let cx = x as f64 + 0.5;
                    if cx >= o.x && cx < o.x + o.width {
                        px[y * w + x] = occluder[y * w + x];
                    }
                }
            }
        }
        if spec.noise > 0.0 {
            for p in px.iter_mut() {
                *p += noise.sample(&mut rng);
            }
        }
        let bytes: Vec<u8> = px
            .iter()
            .map(|v| ((v + 0.5) * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect();
        frames.push(GrayImage::from_luma8(w, h, &bytes)?);
        ground_truth.push(b);
    }
    Sequence::new(
        spec.name.clone(),
        frames,
        ground_truth,
        SequenceSource::Synthetic(spec.name.clone()),
    )
}
