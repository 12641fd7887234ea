//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's FFT or filter code.
#![allow(dead_code)]

use std::f64::consts::PI;

use dcftrack_core::spectral::{ravel, unravel, Complex};
use dcftrack_core::{ComplexGrid, FeatureSample, RealGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// O(N²) multi-dimensional DFT; `sign` −1 forward, +1 inverse (unnormalized).
pub fn direct_dft(dims: &[usize], x: &[Complex], sign: f64) -> Vec<Complex> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let ki = unravel(dims, k);
            let mut acc = Complex::new(0.0, 0.0);
            for (m, xv) in x.iter().enumerate() {
                let mi = unravel(dims, m);
                let phase: f64 = ki
                    .iter()
                    .zip(&mi)
                    .zip(dims)
                    .map(|((&a, &b), &d)| ((a * b) % d) as f64 / d as f64)
                    .sum();
                acc += xv * Complex::from_polar(1.0, sign * 2.0 * PI * phase);
            }
            acc
        })
        .collect()
}

pub fn direct_dft_real(dims: &[usize], x: &[f64]) -> Vec<Complex> {
    let c: Vec<Complex> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    direct_dft(dims, &c, -1.0)
}

/// Real part of the normalized inverse DFT.
pub fn direct_idft_real(dims: &[usize], x: &[Complex]) -> Vec<f64> {
    let n = x.len() as f64;
    direct_dft(dims, x, 1.0).iter().map(|v| v.re / n).collect()
}

/// `(h ⋆ f)(n) = Σ_m h(m) f(m + n)` with periodic indexing.
pub fn circular_correlation(dims: &[usize], h: &[f64], f: &[f64]) -> Vec<f64> {
    let n = h.len();
    (0..n)
        .map(|o| {
            let oi = unravel(dims, o);
            let mut acc = 0.0;
            for (m, hv) in h.iter().enumerate() {
                let mi = unravel(dims, m);
                let idx: Vec<usize> = mi.iter().zip(&oi).zip(dims).map(|((&a, &b), &d)| (a + b) % d).collect();
                acc += hv * f[ravel(dims, &idx)];
            }
            acc
        })
        .collect()
}

/// Ridge loss `‖Σ_l h^l ⋆ f^l − g‖² + λ Σ_l ‖h^l‖²`, evaluated spatially.
pub fn dcf_loss(dims: &[usize], h: &[Vec<f64>], f: &FeatureSample, g: &[f64], lambda: f64) -> f64 {
    let n = g.len();
    let mut response = vec![0.0; n];
    for (hl, fl) in h.iter().zip(f.channels()) {
        for (r, c) in response.iter_mut().zip(circular_correlation(dims, hl, fl)) {
            *r += c;
        }
    }
    let fit: f64 = response.iter().zip(g).map(|(r, gv)| (r - gv).powi(2)).sum();
    let reg: f64 = h.iter().flatten().map(|v| v * v).sum();
    fit + lambda * reg
}

/// Signed frequency of index `k` on an axis of length `n` (Nyquist split
/// handled by the caller).
fn freq(k: usize, n: usize) -> f64 {
    if 2 * k < n {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// Evaluates the trigonometric polynomial with coefficients `spectrum`
/// (normalized like an inverse DFT) at fractional position `pos`. For even
/// lengths the Nyquist term contributes `cos(π N t / N)` shared evenly
/// between ±N/2, i.e. its real cosine form.
pub fn trig_poly(dims: &[usize], spectrum: &[Complex], pos: &[f64]) -> f64 {
    let n: usize = spectrum.len();
    let mut acc = Complex::new(0.0, 0.0);
    for (k, c) in spectrum.iter().enumerate() {
        let ki = unravel(dims, k);
        // product of per-axis basis functions
        let mut basis = Complex::new(1.0, 0.0);
        for ((&kk, &d), &t) in ki.iter().zip(dims).zip(pos) {
            let b = if d % 2 == 0 && 2 * kk == d {
                Complex::new((PI * t).cos(), 0.0)
            } else {
                Complex::from_polar(1.0, 2.0 * PI * freq(kk, d) * t / d as f64)
            };
            basis *= b;
        }
        acc += c * basis;
    }
    acc.re / n as f64
}

pub fn random_real(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn random_sample(rng: &mut ChaCha8Rng, dims: &[usize], d: usize) -> FeatureSample {
    let n = dims.iter().product();
    FeatureSample::new(dims, (0..d).map(|_| random_real(rng, n)).collect()).unwrap()
}

pub fn real_grid(dims: &[usize], v: Vec<f64>) -> RealGrid {
    RealGrid::new(dims, v).unwrap()
}

/// Spectrum of a real signal, so interpolation yields real values.
pub fn hermitian_spectrum(rng: &mut ChaCha8Rng, dims: &[usize]) -> ComplexGrid {
    let n = dims.iter().product();
    let x = random_real(rng, n);
    ComplexGrid::new(dims, direct_dft_real(dims, &x)).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn rel_err(a: &[Complex], b: &[Complex]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}
