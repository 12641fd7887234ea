//! 31-channel HOG in the Felzenszwalb layout: 18 contrast-sensitive and 9
//! contrast-insensitive orientation channels, each block-normalized over the
//! four 2×2 cell neighborhoods and truncated, followed by 4 texture channels.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::features::image::{fast_floor, Patch};
use crate::mcdcf::FeatureSample;

pub const HOG_CHANNELS: usize = 31;
pub const TRUNCATION: f64 = 0.2;
const TEXTURE_GAIN: f64 = 0.2357;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HogParams {
    pub cell_size: usize,
}

impl HogParams {
    pub fn new(cell_size: usize) -> Result<Self> {
        if cell_size == 0 {
            return Err(Error::arg("HOG cell size must be at least 1"));
        }
        Ok(Self { cell_size })
    }

    pub fn channels(&self) -> usize {
        HOG_CHANNELS
    }
}

/// Orientation bin of a gradient among 18 signed directions `o·π/9`.
#[inline]
pub fn orientation_bin(dx: f64, dy: f64, basis: &[(f64, f64); 9]) -> usize {
    let mut best = 0.0;
    let mut bin = 0;
    for (o, &(u, v)) in basis.iter().enumerate() {
        let dot = u * dx + v * dy;
        if dot > best {
            best = dot;
            bin = o;
        } else if -dot > best {
            best = -dot;
            bin = o + 9;
        }
    }
    bin
}

pub fn orientation_basis() -> [(f64, f64); 9] {
    let mut b = [(0.0, 0.0); 9];
    for (o, slot) in b.iter_mut().enumerate() {
        let a = o as f64 * PI / 9.0;
        *slot = (a.cos(), a.sin());
    }
    b
}

/// Per-cell 18-bin gradient histograms with bilinear spatial voting.
fn cell_histograms(patch: &Patch, cell: usize, cells_y: usize, cells_x: usize) -> Vec<[f64; 18]> {
    let basis = orientation_basis();
    let mut hist = vec![[0.0; 18]; cells_y * cells_x];
    let inv = 1.0 / cell as f64;
    for y in 0..patch.height() {
        let yi = y as isize;
        let yp = (y as f64 + 0.5) * inv - 0.5;
        let iy = fast_floor(yp);
        let vy0 = yp - iy;
        let iy = iy as isize;
        for x in 0..patch.width() {
            let xi = x as isize;
            let dx = patch.clamped(xi + 1, yi) - patch.clamped(xi - 1, yi);
            let dy = patch.clamped(xi, yi + 1) - patch.clamped(xi, yi - 1);
            let mag = (dx * dx + dy * dy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let bin = orientation_bin(dx, dy, &basis);
            let xp = (x as f64 + 0.5) * inv - 0.5;
            let ix = fast_floor(xp);
            let vx0 = xp - ix;
            let ix = ix as isize;
            for (cy, wy) in [(iy, 1.0 - vy0), (iy + 1, vy0)] {
                if wy == 0.0 || cy < 0 || cy >= cells_y as isize {
                    continue;
                }
                for (cx, wx) in [(ix, 1.0 - vx0), (ix + 1, vx0)] {
                    if wx == 0.0 || cx < 0 || cx >= cells_x as isize {
                        continue;
                    }
                    hist[cy as usize * cells_x + cx as usize][bin] += mag * wx * wy;
                }
            }
        }
    }
    hist
}

/// Computes the 31-channel HOG grid of `⌊H/cell⌋ × ⌊W/cell⌋` cells.
pub fn compute_hog(patch: &Patch, params: HogParams) -> Result<FeatureSample> {
    let cell = params.cell_size;
    if cell == 0 {
        return Err(Error::arg("HOG cell size must be at least 1"));
    }
    if patch.width() < cell || patch.height() < cell {
        return Err(Error::arg(format!(
            "patch {}x{} smaller than one {cell}x{cell} cell",
            patch.width(),
            patch.height()
        )));
    }
    let cells_y = patch.height() / cell;
    let cells_x = patch.width() / cell;
    let n = cells_y * cells_x;
    let hist = cell_histograms(patch, cell, cells_y, cells_x);

    let energy: Vec<f64> = hist
        .iter()
        .map(|h| (0..9).map(|o| (h[o] + h[o + 9]).powi(2)).sum())
        .collect();
    let eps = 1e-4 / (4.0 * (cell as f64).powi(4));
    let at = |y: isize, x: isize| -> f64 {
        let y = y.clamp(0, cells_y as isize - 1) as usize;
        let x = x.clamp(0, cells_x as isize - 1) as usize;
        energy[y * cells_x + x]
    };
    let block = |y: isize, x: isize| -> f64 {
        1.0 / (at(y, x) + at(y, x + 1) + at(y + 1, x) + at(y + 1, x + 1) + eps).sqrt()
    };

    let mut channels = vec![vec![0.0; n]; HOG_CHANNELS];
    for y in 0..cells_y {
        for x in 0..cells_x {
            let c = y * cells_x + x;
            let h = &hist[c];
            if h.iter().all(|&v| v == 0.0) {
                continue;
            }
            let (yi, xi) = (y as isize, x as isize);
            let norms = [
                block(yi, xi),
                block(yi, xi - 1),
                block(yi - 1, xi),
                block(yi - 1, xi - 1),
            ];
            let mut texture = [0.0; 4];
            for o in 0..18 {
                let mut sum = 0.0;
                for (t, nrm) in texture.iter_mut().zip(norms) {
                    let v = (h[o] * nrm).min(TRUNCATION);
                    sum += v;
                    *t += v;
                }
                channels[o][c] = 0.5 * sum;
            }
            for o in 0..9 {
                let both = h[o] + h[o + 9];
                let sum: f64 = norms.iter().map(|nrm| (both * nrm).min(TRUNCATION)).sum();
                channels[18 + o][c] = 0.5 * sum;
            }
            for (j, t) in texture.iter().enumerate() {
                channels[27 + j][c] = TEXTURE_GAIN * t;
            }
        }
    }
    Ok(FeatureSample::from_raw(vec![cells_y, cells_x], channels, false))
}

/// Mean intensity per cell, on the same grid as [`compute_hog`].
pub fn cell_means(patch: &Patch, cell: usize) -> Vec<f64> {
    let cells_y = patch.height() / cell;
    let cells_x = patch.width() / cell;
    let mut out = vec![0.0; cells_y * cells_x];
    let norm = 1.0 / (cell * cell) as f64;
    for cy in 0..cells_y {
        for cx in 0..cells_x {
            let mut s = 0.0;
            for y in cy * cell..(cy + 1) * cell {
                let row = &patch.pixels()[y * patch.width()..];
                s += row[cx * cell..(cx + 1) * cell].iter().sum::<f64>();
            }
            out[cy * cells_x + cx] = s * norm;
        }
    }
    out
}
