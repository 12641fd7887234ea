//! Translation, scale and joint filters as used inside the trackers.

use crate::compression::{learn_projection, qr_factor, qr_reduce, CompressedFilterModel, Template};
use crate::error::Result;
use crate::features::image::GrayImage;
use crate::features::sample::{
    pyramid_sample, scale_levels, scale_sample, translation_sample_at, ScaleLayout, TranslationLayout,
};
use crate::mcdcf::{scores_from_spectrum, CorrelationScores, DesiredOutput, FeatureSample, FilterModel};
use crate::spectral::{circular_offset, gaussian_response, hann_window, interpolate_scores, ComplexGrid, RealGrid};
use crate::trackers::config::TrackerConfig;
use crate::trackers::state::TargetState;

fn translation_sigmas(base_size: (f64, f64), cfg: &TrackerConfig) -> [f64; 2] {
    let cell = cfg.cell_size as f64;
    [
        base_size.1 * cfg.translation_sigma_factor / cell,
        base_size.0 * cfg.translation_sigma_factor / cell,
    ]
}

enum TranslationModel {
    Plain(FilterModel),
    Compressed {
        template: Template,
        model: CompressedFilterModel,
        dims: usize,
    },
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct TranslationEstimate {
    /// Displacement `(dx, dy)` in image pixels.
    pub shift: (f64, f64),
    pub peak: f64,
}

pub(crate) struct TranslationFilter {
    pub layout: TranslationLayout,
    output: DesiredOutput,
    model: TranslationModel,
    interp: Option<[usize; 2]>,
    eta: f64,
    pub energy: Option<f64>,
}

impl TranslationFilter {
    pub fn new(base_size: (f64, f64), cfg: &TrackerConfig) -> Result<Self> {
        let layout = TranslationLayout::new(base_size, cfg.padding, cfg.cell_size)?;
        let output = DesiredOutput::new(gaussian_response(&layout.grid, &translation_sigmas(base_size, cfg))?)?;
        let model = match cfg.pca_dims {
            None => TranslationModel::Plain(FilterModel::new(&layout.grid, layout.channels(), cfg.lambda)?),
            Some(d) => TranslationModel::Compressed {
                template: Template::new(),
                model: CompressedFilterModel::new(&layout.grid, cfg.lambda)?,
                dims: d.min(layout.channels()),
            },
        };
        let [rows, cols] = layout.grid;
        let interp = (cfg.translation_interpolation && cfg.cell_size > 1)
            .then_some([rows * cfg.cell_size, cols * cfg.cell_size]);
        Ok(Self {
            layout,
            output,
            model,
            interp,
            eta: cfg.eta,
            energy: None,
        })
    }

    fn spectrum(&self, z: &FeatureSample) -> Result<ComplexGrid> {
        match &self.model {
            TranslationModel::Plain(m) => m.detect_spectrum(z),
            TranslationModel::Compressed { model, .. } => model.detect_spectrum(z),
        }
    }

    pub fn scores(&self, img: &GrayImage, center: (f64, f64), scale: f64) -> Result<CorrelationScores> {
        let z = translation_sample_at(img, center, scale, &self.layout)?;
        let spec = self.spectrum(&z)?;
        Ok(match self.interp {
            Some(t) => CorrelationScores::from_scores(interpolate_scores(&spec, &t)?),
            None => scores_from_spectrum(spec),
        })
    }

    pub fn detect(&self, img: &GrayImage, center: (f64, f64), scale: f64) -> Result<TranslationEstimate> {
        let s = self.scores(img, center, scale)?;
        let dims = s.scores.dims();
        let dy = circular_offset(s.argmax_index[0], dims[0]) as f64 * self.layout.extent.1 * scale / dims[0] as f64;
        let dx = circular_offset(s.argmax_index[1], dims[1]) as f64 * self.layout.extent.0 * scale / dims[1] as f64;
        Ok(TranslationEstimate {
            shift: (dx, dy),
            peak: s.argmax_value,
        })
    }

    pub fn train(&mut self, img: &GrayImage, center: (f64, f64), scale: f64) -> Result<()> {
        let f = translation_sample_at(img, center, scale, &self.layout)?;
        match &mut self.model {
            TranslationModel::Plain(m) => m.update(&f, &self.output, self.eta),
            TranslationModel::Compressed { template, model, dims } => {
                template.update(&f, self.eta)?;
                let u = template.sample().expect("template updated above");
                let p = learn_projection(u, *dims)?;
                self.energy = p.energy_retained();
                model.update(p, &f, u, &self.output, self.eta)
            }
        }
    }
}

enum ScaleModel {
    Plain(FilterModel),
    Compressed {
        template: Template,
        model: CompressedFilterModel,
    },
}

#[derive(Clone, Debug)]
pub(crate) struct ScaleEstimate {
    /// Exponent `n` of the selected factor `a^n`, fractional when interpolated.
    pub exponent: f64,
    /// Signed argmax bin on the (possibly interpolated) score grid.
    pub bin: isize,
    pub peak: f64,
    pub scores: Vec<f64>,
}

pub(crate) struct ScaleFilter {
    pub layout: ScaleLayout,
    output: DesiredOutput,
    model: ScaleModel,
    interp: Option<usize>,
    /// Sample spacing in powers of the scale step: `Ŝ/S` when interpolating,
    /// so each refined bin is exactly one step.
    spacing: f64,
    eta: f64,
}

impl ScaleFilter {
    pub fn new(base_size: (f64, f64), cfg: &TrackerConfig) -> Result<Self> {
        let s = cfg.num_scales;
        let interp = (cfg.interp_scales > s).then_some(cfg.interp_scales);
        let spacing = interp.map_or(1.0, |n| n as f64 / s as f64);
        let layout = ScaleLayout::new(
            base_size,
            s,
            cfg.scale_step.powf(spacing),
            cfg.scale_model_max_area,
            cfg.scale_cell_size,
        )?;
        let output = DesiredOutput::new(gaussian_response(&[s], &[s as f64 * cfg.scale_sigma_factor])?)?;
        let model = if cfg.scale_compression {
            ScaleModel::Compressed {
                template: Template::new(),
                model: CompressedFilterModel::new(&[s], cfg.lambda)?,
            }
        } else {
            ScaleModel::Plain(FilterModel::new(&[s], layout.feature_len(), cfg.lambda)?)
        };
        Ok(Self {
            layout,
            output,
            model,
            interp,
            spacing,
            eta: cfg.eta,
        })
    }

    pub fn detect(&self, img: &GrayImage, state: &TargetState) -> Result<ScaleEstimate> {
        let z = scale_sample(img, state, &self.layout)?;
        let spec = match &self.model {
            ScaleModel::Plain(m) => m.detect_spectrum(&z)?,
            ScaleModel::Compressed { model, .. } => model.detect_spectrum(&z)?,
        };
        let scores = match self.interp {
            Some(n) => CorrelationScores::from_scores(interpolate_scores(&spec, &[n])?),
            None => scores_from_spectrum(spec),
        };
        let len = scores.scores.len();
        let bin = circular_offset(scores.argmax_index[0], len);
        Ok(ScaleEstimate {
            // refined point j of the interpolant sits at j·S/Ŝ on the sampled grid
            exponent: bin as f64 * self.layout.count() as f64 / len as f64 * self.spacing,
            bin,
            peak: scores.argmax_value,
            scores: scores.scores.into_values(),
        })
    }

    pub fn train(&mut self, img: &GrayImage, state: &TargetState) -> Result<()> {
        let f = scale_sample(img, state, &self.layout)?;
        match &mut self.model {
            ScaleModel::Plain(m) => m.update(&f, &self.output, self.eta),
            ScaleModel::Compressed { template, model } => {
                template.update(&f, self.eta)?;
                let u = template.sample().expect("template updated above");
                // Qᵀx = R, so both compressed samples come straight from the factorizations
                let (pu, u_proj) = qr_factor(u);
                model.update_projected(pu, &u_proj, &qr_reduce(&f), &self.output, self.eta)
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct JointEstimate {
    pub shift: (f64, f64),
    pub level: i32,
    pub peak: f64,
}

/// 3-D filter over a `S × rows × cols` feature pyramid.
pub(crate) struct JointFilter {
    layout: TranslationLayout,
    factors: Vec<f64>,
    window: RealGrid,
    output: DesiredOutput,
    model: FilterModel,
    eta: f64,
    pub step: f64,
}

impl JointFilter {
    pub fn new(base_size: (f64, f64), cfg: &TrackerConfig) -> Result<Self> {
        let layout = TranslationLayout::new(base_size, cfg.padding, cfg.cell_size)?;
        let s = cfg.num_scales;
        let factors = scale_levels(s).iter().map(|&n| cfg.scale_step.powi(n)).collect();
        let dims = [s, layout.grid[0], layout.grid[1]];
        let [sy, sx] = translation_sigmas(base_size, cfg);
        let output = DesiredOutput::new(gaussian_response(&dims, &[s as f64 * cfg.scale_sigma_factor, sy, sx])?)?;
        Ok(Self {
            window: hann_window(&dims)?,
            model: FilterModel::new(&dims, layout.channels(), cfg.lambda)?,
            layout,
            factors,
            output,
            eta: cfg.eta,
            step: cfg.scale_step,
        })
    }

    pub fn layout(&self) -> &TranslationLayout {
        &self.layout
    }

    fn sample(&self, img: &GrayImage, center: (f64, f64), scale: f64) -> Result<FeatureSample> {
        pyramid_sample(img, center, scale, &self.factors, &self.layout, &self.window)
    }

    pub fn detect(&self, img: &GrayImage, center: (f64, f64), scale: f64) -> Result<JointEstimate> {
        let s = self.model.detect(&self.sample(img, center, scale)?)?;
        let dims = s.scores.dims();
        let level = circular_offset(s.argmax_index[0], dims[0]) as i32;
        let new_scale = scale * self.step.powi(level);
        let (px, py) = self.layout.pixels_per_cell(new_scale);
        let dy = circular_offset(s.argmax_index[1], dims[1]) as f64 * py;
        let dx = circular_offset(s.argmax_index[2], dims[2]) as f64 * px;
        Ok(JointEstimate {
            shift: (dx, dy),
            level,
            peak: s.argmax_value,
        })
    }

    pub fn train(&mut self, img: &GrayImage, center: (f64, f64), scale: f64) -> Result<()> {
        let f = self.sample(img, center, scale)?;
        self.model.update(&f, &self.output, self.eta)
    }
}
