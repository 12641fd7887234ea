//! Assembly of windowed feature samples for the translation, scale and joint filters.

use crate::error::{Error, Result};
use crate::features::hog::{cell_means, compute_hog, HogParams, HOG_CHANNELS};
use crate::features::image::{extract_patch, GrayImage};
use crate::mcdcf::FeatureSample;
use crate::spectral::{hann_1d, hann_window, RealGrid};
use crate::trackers::TargetState;

/// Geometry of the translation filter: a fixed feature grid covering a
/// padded window around the target.
#[derive(Clone, Debug)]
pub struct TranslationLayout {
    /// Grid extents `[rows, cols]` in feature cells.
    pub grid: [usize; 2],
    pub cell_size: usize,
    /// Window size `(width, height)` in image pixels at scale 1.
    pub extent: (f64, f64),
    pub window: RealGrid,
}

fn even_cells(px: f64, cell: usize) -> usize {
    let n = (px / cell as f64).round() as usize;
    (n + n % 2).max(2)
}

impl TranslationLayout {
    /// `base_size` is the initial target `(width, height)`.
    pub fn new(base_size: (f64, f64), padding: f64, cell_size: usize) -> Result<Self> {
        if !(padding > 0.0) {
            return Err(Error::arg("padding must be positive"));
        }
        HogParams::new(cell_size)?;
        let rows = even_cells(base_size.1 * padding, cell_size);
        let cols = even_cells(base_size.0 * padding, cell_size);
        Ok(Self {
            grid: [rows, cols],
            cell_size,
            extent: ((cols * cell_size) as f64, (rows * cell_size) as f64),
            window: hann_window(&[rows, cols])?,
        })
    }

    pub fn channels(&self) -> usize {
        HOG_CHANNELS + 1
    }

    /// Image pixels per grid cell at target scale `scale`.
    pub fn pixels_per_cell(&self, scale: f64) -> (f64, f64) {
        (
            self.extent.0 * scale / self.grid[1] as f64,
            self.extent.1 * scale / self.grid[0] as f64,
        )
    }
}

/// Unwindowed HOG + intensity channels of the window centered at `center`
/// with image-space extent `layout.extent × scale`.
pub fn translation_features(
    img: &GrayImage,
    center: (f64, f64),
    scale: f64,
    layout: &TranslationLayout,
) -> Result<Vec<Vec<f64>>> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::state(format!("degenerate target scale {scale}")));
    }
    let cell = layout.cell_size;
    let [rows, cols] = layout.grid;
    let patch = extract_patch(
        img,
        center,
        layout.extent.0 * scale,
        layout.extent.1 * scale,
        cols * cell,
        rows * cell,
    )?;
    let hog = compute_hog(&patch, HogParams::new(cell)?)?;
    let mut channels: Vec<Vec<f64>> = hog.channels().to_vec();
    let intensity = if cell == 1 {
        patch.pixels().to_vec()
    } else {
        cell_means(&patch, cell)
    };
    channels.push(intensity);
    Ok(channels)
}

/// Windowed translation sample at the target's current position and scale.
pub fn translation_sample(
    img: &GrayImage,
    state: &TargetState,
    layout: &TranslationLayout,
) -> Result<FeatureSample> {
    translation_sample_at(img, state.position, state.scale, layout)
}

pub fn translation_sample_at(
    img: &GrayImage,
    center: (f64, f64),
    scale: f64,
    layout: &TranslationLayout,
) -> Result<FeatureSample> {
    let channels = translation_features(img, center, scale, layout)?;
    let mut sample = FeatureSample::from_raw(layout.grid.to_vec(), channels, false);
    sample.apply_window(&layout.window)?;
    Ok(sample)
}

/// Fixed patch size for scale features: the initial target size, shrunk to
/// `max_area` pixels (aspect ratio preserved) when larger.
pub fn scale_model_size(base_size: (f64, f64), max_area: f64) -> (usize, usize) {
    let area = base_size.0 * base_size.1;
    let factor = if area > max_area { (max_area / area).sqrt() } else { 1.0 };
    (
        (base_size.0 * factor).floor() as usize,
        (base_size.1 * factor).floor() as usize,
    )
}

/// Signed scale levels `⌊-(S-1)/2⌋ ..= ⌊(S-1)/2⌋`.
pub fn scale_levels(count: usize) -> Vec<i32> {
    let lo = (-((count as f64 - 1.0) / 2.0)).floor() as i32;
    (0..count as i32).map(|i| lo + i).collect()
}

/// Geometry of the 1-D scale filter.
#[derive(Clone, Debug)]
pub struct ScaleLayout {
    pub levels: Vec<i32>,
    pub factors: Vec<f64>,
    pub model_size: (usize, usize),
    pub cell_size: usize,
    pub window: RealGrid,
}

impl ScaleLayout {
    pub fn new(
        base_size: (f64, f64),
        count: usize,
        step: f64,
        max_area: f64,
        cell_size: usize,
    ) -> Result<Self> {
        if count == 0 {
            return Err(Error::arg("scale filter needs at least one scale"));
        }
        if !(step > 1.0) {
            return Err(Error::arg(format!("scale step must exceed 1, got {step}")));
        }
        let model_size = scale_model_size(base_size, max_area);
        if model_size.0 < cell_size || model_size.1 < cell_size {
            return Err(Error::state(format!(
                "scale model {}x{} smaller than one {cell_size}px HOG cell",
                model_size.0, model_size.1
            )));
        }
        let levels = scale_levels(count);
        let factors = levels.iter().map(|&n| step.powi(n)).collect();
        Ok(Self {
            levels,
            factors,
            model_size,
            cell_size,
            window: RealGrid::new(&[count], hann_1d(count))?,
        })
    }

    pub fn count(&self) -> usize {
        self.levels.len()
    }

    pub fn feature_len(&self) -> usize {
        (self.model_size.0 / self.cell_size) * (self.model_size.1 / self.cell_size) * HOG_CHANNELS
    }
}

/// Stack of flattened HOG descriptors of patches at geometrically spaced
/// sizes around the target, windowed along the scale axis.
pub fn scale_sample(
    img: &GrayImage,
    state: &TargetState,
    layout: &ScaleLayout,
) -> Result<FeatureSample> {
    let (pw, ph) = state.current_size();
    let s = layout.count();
    let d = layout.feature_len();
    let mut channels = vec![vec![0.0; s]; d];
    let params = HogParams::new(layout.cell_size)?;
    for (n, &factor) in layout.factors.iter().enumerate() {
        let patch = extract_patch(
            img,
            state.position,
            (pw * factor).max(1.0),
            (ph * factor).max(1.0),
            layout.model_size.0,
            layout.model_size.1,
        )?;
        let hog = compute_hog(&patch, params)?;
        let w = layout.window.values()[n];
        for (k, v) in hog.channels().iter().flatten().enumerate() {
            channels[k][n] = v * w;
        }
    }
    Ok(FeatureSample::from_raw(vec![s], channels, true))
}

/// `S × rows × cols` cuboid from a feature pyramid around the target,
/// windowed by a 3-D Hann window.
pub fn pyramid_sample(
    img: &GrayImage,
    center: (f64, f64),
    scale: f64,
    factors: &[f64],
    layout: &TranslationLayout,
    window: &RealGrid,
) -> Result<FeatureSample> {
    let [rows, cols] = layout.grid;
    let plane = rows * cols;
    let dims = vec![factors.len(), rows, cols];
    let mut channels = vec![vec![0.0; factors.len() * plane]; layout.channels()];
    for (n, &f) in factors.iter().enumerate() {
        let level = translation_features(img, center, scale * f, layout)?;
        for (dst, src) in channels.iter_mut().zip(level) {
            dst[n * plane..(n + 1) * plane].copy_from_slice(&src);
        }
    }
    let mut sample = FeatureSample::from_raw(dims, channels, false);
    sample.apply_window(window)?;
    Ok(sample)
}
