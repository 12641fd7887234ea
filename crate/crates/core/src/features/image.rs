use std::path::Path;

use crate::error::{Error, Result};

/// Grayscale image with intensities in `[-1/2, 1/2]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::arg(format!("image must be at least 1x1, got {width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(Error::arg(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        if let Some(v) = pixels.iter().find(|v| !(-0.5..=0.5).contains(*v)) {
            return Err(Error::arg(format!("pixel value {v} outside [-0.5, 0.5]")));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Constant image.
    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Maps 8-bit intensities to `[-1/2, 1/2]`.
    pub fn from_luma8(width: usize, height: usize, data: &[u8]) -> Result<Self> {
        Self::new(
            width,
            height,
            data.iter().map(|&v| v as f64 / 255.0 - 0.5).collect(),
        )
    }

    /// Converts interleaved RGB with BT.601 luma weights.
    pub fn from_rgb8(width: usize, height: usize, data: &[u8]) -> Result<Self> {
        if data.len() != 3 * width * height {
            return Err(Error::arg("rgb buffer length does not match dimensions"));
        }
        let luma: Vec<f64> = data
            .chunks_exact(3)
            .map(|p| (0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64) / 255.0 - 0.5)
            .map(|v| v.clamp(-0.5, 0.5))
            .collect();
        Self::new(width, height, luma)
    }

    /// Reads a raster file (PNG, JPEG, PNM, BMP).
    pub fn load(path: &Path) -> Result<Self> {
        let img = image::open(path).map_err(|e| Error::ingest(path, e.to_string()))?;
        let (w, h) = (img.width() as usize, img.height() as usize);
        match img {
            image::DynamicImage::ImageLuma8(g) => Self::from_luma8(w, h, g.as_raw()),
            other => Self::from_rgb8(w, h, other.to_rgb8().as_raw()),
        }
    }

    /// Quantizes back to 8 bits.
    pub fn to_luma8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|v| ((v + 0.5) * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        image::save_buffer(
            path,
            &self.to_luma8(),
            self.width as u32,
            self.height as u32,
            image::ColorType::L8,
        )
        .map_err(|e| Error::ingest(path, e.to_string()))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Pixel lookup with edge replication.
    #[inline]
    pub fn clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.pixels[y * self.width + x]
    }

    /// Bilinear sample at pixel-index coordinates (pixel `i` is centered at `i`).
    #[inline]
    pub fn bilinear(&self, x: f64, y: f64) -> f64 {
        let x0 = fast_floor(x);
        let y0 = fast_floor(y);
        let fx = x - x0;
        let fy = y - y0;
        let (xi, yi) = (x0 as isize, y0 as isize);
        let top = self.clamped(xi, yi) * (1.0 - fx) + self.clamped(xi + 1, yi) * fx;
        if fy == 0.0 {
            return top;
        }
        let bottom = self.clamped(xi, yi + 1) * (1.0 - fx) + self.clamped(xi + 1, yi + 1) * fx;
        top * (1.0 - fy) + bottom * fy
    }
}

/// `floor` without the libm call; exact for `|v| < 2^53`.
#[inline]
pub(crate) fn fast_floor(v: f64) -> f64 {
    let t = v as i64 as f64;
    if t > v {
        t - 1.0
    } else {
        t
    }
}

/// Resampled image region.
#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pub center: (f64, f64),
    pub source_width: f64,
    pub source_height: f64,
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Patch {
    /// Wraps a raw pixel grid as a patch (source rectangle equals the grid).
    pub fn from_pixels(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::arg("patch dimensions do not match pixel count"));
        }
        Ok(Self {
            center: (width as f64 / 2.0, height as f64 / 2.0),
            source_width: width as f64,
            source_height: height as f64,
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.pixels[y * self.width + x]
    }
}

/// Source taps `(index, weight)` of each output sample along one axis of
/// length `len`: linear interpolation between the two pixel centers around
/// `start + (j + 1/2)·step`. Indices are clamped, which replicates the edge.
fn axis_taps(start: f64, step: f64, count: usize, len: usize) -> Vec<[(usize, f64); 2]> {
    let clamp = |i: isize| i.clamp(0, len as isize - 1) as usize;
    (0..count)
        .map(|j| {
            let x = start + (j as f64 + 0.5) * step - 0.5;
            let x0 = fast_floor(x);
            let f = x - x0;
            let i = x0 as isize;
            [(clamp(i), 1.0 - f), (clamp(i + 1), f)]
        })
        .collect()
}

/// Bilinearly resamples the axis-aligned rectangle of size `width × height`
/// centered at `center` (continuous coordinates, pixel `i` spans `[i, i+1)`)
/// onto an `out_width × out_height` grid. Out-of-image samples replicate the
/// nearest edge pixel.
pub fn extract_patch(
    img: &GrayImage,
    center: (f64, f64),
    width: f64,
    height: f64,
    out_width: usize,
    out_height: usize,
) -> Result<Patch> {
    if out_width == 0 || out_height == 0 {
        return Err(Error::arg("output patch size must be positive"));
    }
    if !(width > 0.0 && height > 0.0) || !width.is_finite() || !height.is_finite() {
        return Err(Error::arg(format!("source size must be positive, got {width}x{height}")));
    }
    if !center.0.is_finite() || !center.1.is_finite() {
        return Err(Error::arg("patch center must be finite"));
    }
    let cols = axis_taps(center.0 - width / 2.0, width / out_width as f64, out_width, img.width);
    let rows = axis_taps(center.1 - height / 2.0, height / out_height as f64, out_height, img.height);
    let mut pixels = vec![0.0; out_width * out_height];
    for (out_row, row_taps) in pixels.chunks_exact_mut(out_width).zip(&rows) {
        for &(r, wr) in row_taps.iter().filter(|t| t.1 != 0.0) {
            let src = &img.pixels[r * img.width..(r + 1) * img.width];
            for (dst, col_taps) in out_row.iter_mut().zip(&cols) {
                let v: f64 = col_taps.iter().map(|&(c, wc)| wc * src[c]).sum();
                *dst += wr * v;
            }
        }
    }
    Ok(Patch {
        center,
        source_width: width,
        source_height: height,
        width: out_width,
        height: out_height,
        pixels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> GrayImage {
        let px = (0..w * h).map(|i| (i as f64 / (w * h) as f64) - 0.5).collect();
        GrayImage::new(w, h, px).unwrap()
    }

    #[test]
    fn native_extraction_is_identity() {
        let img = ramp(12, 9);
        let p = extract_patch(&img, (2.0 + 3.0, 1.0 + 2.5), 6.0, 5.0, 6, 5).unwrap();
        for i in 0..5 {
            for j in 0..6 {
                assert_eq!(p.pixels()[i * 6 + j], img.get(2 + j, 1 + i));
            }
        }
    }

    #[test]
    fn constant_image_gives_constant_patch() {
        let img = GrayImage::filled(10, 10, 0.25).unwrap();
        for (w, ow) in [(3.7, 11), (20.0, 4), (1.0, 1)] {
            let p = extract_patch(&img, (-3.0, 4.4), w, w * 0.8, ow, ow + 1).unwrap();
            assert!(p.pixels().iter().all(|&v| (v - 0.25).abs() < 1e-15));
        }
    }

    #[test]
    fn checkerboard_downscale_averages_blocks() {
        let px: Vec<f64> = (0..16)
            .map(|i| if (i / 4 + i % 4) % 2 == 0 { 0.5 } else { -0.5 })
            .collect();
        let img = GrayImage::new(4, 4, px.clone()).unwrap();
        let p = extract_patch(&img, (2.0, 2.0), 4.0, 4.0, 2, 2).unwrap();
        for bi in 0..2 {
            for bj in 0..2 {
                let mut avg = 0.0;
                for di in 0..2 {
                    for dj in 0..2 {
                        avg += px[(2 * bi + di) * 4 + 2 * bj + dj] / 4.0;
                    }
                }
                assert!((p.pixels()[bi * 2 + bj] - avg).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn out_of_bounds_replicates_edges() {
        let img = ramp(5, 5);
        let p = extract_patch(&img, (-10.0, -10.0), 2.0, 2.0, 2, 2).unwrap();
        assert!(p.pixels().iter().all(|&v| v == img.get(0, 0)));
    }

    #[test]
    fn invalid_sizes_rejected() {
        let img = ramp(5, 5);
        assert!(extract_patch(&img, (2.0, 2.0), 2.0, 2.0, 0, 2).is_err());
        assert!(extract_patch(&img, (2.0, 2.0), 0.0, 2.0, 2, 2).is_err());
        assert!(GrayImage::new(2, 2, vec![0.0, 0.0, 0.0, 0.7]).is_err());
    }

    #[test]
    fn luma_round_trip() {
        let data: Vec<u8> = (0..=255).collect();
        let img = GrayImage::from_luma8(16, 16, &data).unwrap();
        assert_eq!(img.to_luma8(), data);
    }
}
