//! Discrete Fourier transforms on small dense grids, window and desired-response
//! synthesis, and trigonometric (zero-padding) interpolation of correlation scores.
//!
//! Conventions: grids are row-major with the last axis varying fastest. The
//! forward DFT is unnormalized and the inverse carries the `1/N` factor.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub type Complex = Complex64;

/// Dense row-major grid with 1 to 3 axes.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    dims: Vec<usize>,
    values: Vec<T>,
}

pub type RealGrid = Grid<f64>;
pub type ComplexGrid = Grid<Complex>;

/// Finite-value check used by the validating constructors.
pub trait GridValue: Copy + Default {
    fn is_finite_value(&self) -> bool;
}

impl GridValue for f64 {
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl GridValue for Complex {
    fn is_finite_value(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::arg("grid must have at least one axis"));
    }
    if dims.len() > 3 {
        return Err(Error::arg(format!("grid has {} axes, at most 3 supported", dims.len())));
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::arg(format!("grid extents must be positive, got {dims:?}")));
    }
    Ok(dims.iter().product())
}

impl<T: GridValue> Grid<T> {
    pub fn new(dims: &[usize], values: Vec<T>) -> Result<Self> {
        let len = check_dims(dims)?;
        if len != values.len() {
            return Err(Error::arg(format!(
                "grid {dims:?} needs {len} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite_value()) {
            return Err(Error::arg("grid values must be finite"));
        }
        Ok(Self {
            dims: dims.to_vec(),
            values,
        })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        let len = check_dims(dims)?;
        Ok(Self {
            dims: dims.to_vec(),
            values: vec![T::default(); len],
        })
    }

    /// Builds a grid without validation. Callers guarantee the invariants.
    pub(crate) fn from_raw(dims: Vec<usize>, values: Vec<T>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), values.len());
        Self { dims, values }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Row-major offset of a multi-index.
    pub fn offset(&self, index: &[usize]) -> usize {
        ravel(&self.dims, index)
    }

    pub fn get(&self, index: &[usize]) -> T {
        self.values[self.offset(index)]
    }
}

impl RealGrid {
    pub fn to_complex(&self) -> ComplexGrid {
        Grid::from_raw(
            self.dims.clone(),
            self.values.iter().map(|&v| Complex::new(v, 0.0)).collect(),
        )
    }
}

impl ComplexGrid {
    pub fn real_part(&self) -> RealGrid {
        Grid::from_raw(self.dims.clone(), self.values.iter().map(|c| c.re).collect())
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |m, c| m.max(c.im.abs()))
    }
}

pub fn ravel(dims: &[usize], index: &[usize]) -> usize {
    debug_assert_eq!(dims.len(), index.len());
    index
        .iter()
        .zip(dims)
        .fold(0, |acc, (&i, &d)| acc * d + i)
}

pub fn unravel(dims: &[usize], mut offset: usize) -> Vec<usize> {
    let mut index = vec![0; dims.len()];
    for (slot, &d) in index.iter_mut().zip(dims).rev() {
        *slot = offset % d;
        offset /= d;
    }
    index
}

/// Signed circular shift encoded by bin `k` on an axis of length `n`.
pub fn circular_offset(k: usize, n: usize) -> isize {
    if k <= n / 2 {
        k as isize
    } else {
        k as isize - n as isize
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// In-place multi-dimensional DFT over a batch of grids laid out back to back.
///
/// `buf.len()` must be a multiple of `∏dims`. The inverse includes the `1/N` factor.
pub(crate) fn fft_batch_inplace(buf: &mut [Complex], dims: &[usize], inverse: bool) {
    let grid_len: usize = dims.iter().product();
    if grid_len == 0 || buf.is_empty() {
        return;
    }
    debug_assert_eq!(buf.len() % grid_len, 0);

    let mut block = Vec::new();
    for axis in 0..dims.len() {
        let n = dims[axis];
        if n == 1 {
            continue;
        }
        let fft = plan(n, inverse);
        let mut scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        let stride: usize = dims[axis + 1..].iter().product();
        if stride == 1 {
            fft.process_with_scratch(buf, &mut scratch);
            continue;
        }
        // Each (grid, outer) pair owns an n×stride block; transpose so the
        // axis is contiguous, transform all lines at once, transpose back.
        block.resize(n * stride, Complex::default());
        for chunk in buf.chunks_exact_mut(n * stride) {
            for i in 0..n {
                for s in 0..stride {
                    block[s * n + i] = chunk[i * stride + s];
                }
            }
            fft.process_with_scratch(&mut block, &mut scratch);
            for i in 0..n {
                for s in 0..stride {
                    chunk[i * stride + s] = block[s * n + i];
                }
            }
        }
    }
    if inverse {
        let scale = 1.0 / grid_len as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }
}

/// Unnormalized forward DFT of a complex grid.
pub fn dft_forward(x: &ComplexGrid) -> Result<ComplexGrid> {
    check_dims(&x.dims)?;
    let mut values = x.values.clone();
    fft_batch_inplace(&mut values, &x.dims, false);
    Ok(Grid::from_raw(x.dims.clone(), values))
}

/// Unnormalized forward DFT of a real grid.
pub fn dft_forward_real(x: &RealGrid) -> Result<ComplexGrid> {
    check_dims(&x.dims)?;
    let mut values: Vec<Complex> = x.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft_batch_inplace(&mut values, &x.dims, false);
    Ok(Grid::from_raw(x.dims.clone(), values))
}

/// Inverse DFT (with `1/N` normalization).
pub fn dft_inverse(x: &ComplexGrid) -> Result<ComplexGrid> {
    check_dims(&x.dims)?;
    let mut values = x.values.clone();
    fft_batch_inplace(&mut values, &x.dims, true);
    Ok(Grid::from_raw(x.dims.clone(), values))
}

/// Symmetric 1-D Hann window; a single-sample window is `[1]`.
pub fn hann_1d(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let denom = (n - 1) as f64;
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / denom).cos()))
        .collect()
}

/// Separable Hann window: outer product of symmetric 1-D windows per axis.
pub fn hann_window(dims: &[usize]) -> Result<RealGrid> {
    let len = check_dims(dims)?;
    let axes: Vec<Vec<f64>> = dims.iter().map(|&n| hann_1d(n)).collect();
    let values = (0..len)
        .map(|off| {
            unravel(dims, off)
                .iter()
                .zip(&axes)
                .map(|(&i, w)| w[i])
                .product()
        })
        .collect();
    Ok(Grid::from_raw(dims.to_vec(), values))
}

/// Circularly wrapped Gaussian with peak 1 at the zero-shift bin.
pub fn gaussian_response(dims: &[usize], sigmas: &[f64]) -> Result<RealGrid> {
    let len = check_dims(dims)?;
    if sigmas.len() != dims.len() {
        return Err(Error::arg(format!(
            "expected {} sigmas, got {}",
            dims.len(),
            sigmas.len()
        )));
    }
    if sigmas.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::arg(format!("sigmas must be positive, got {sigmas:?}")));
    }
    let values = (0..len)
        .map(|off| {
            let e: f64 = unravel(dims, off)
                .iter()
                .zip(dims.iter().zip(sigmas))
                .map(|(&k, (&n, &s))| {
                    let d = circular_offset(k, n) as f64;
                    d * d / (2.0 * s * s)
                })
                .sum();
            (-e).exp()
        })
        .collect();
    Ok(Grid::from_raw(dims.to_vec(), values))
}

/// Zero-pads the high frequencies of a spectrum along one axis.
///
/// For even source length the Nyquist coefficient is split evenly between
/// the `+N/2` and `-N/2` positions of the padded axis.
fn pad_axis(src: &[Complex], dims: &[usize], axis: usize, target: usize) -> Vec<Complex> {
    let n = dims[axis];
    let outer: usize = dims[..axis].iter().product();
    let stride: usize = dims[axis + 1..].iter().product();
    let mut out = vec![Complex::default(); outer * target * stride];
    let half = n / 2;
    for o in 0..outer {
        let src_block = &src[o * n * stride..(o + 1) * n * stride];
        let dst_block = &mut out[o * target * stride..(o + 1) * target * stride];
        for k in 0..n {
            let line = &src_block[k * stride..(k + 1) * stride];
            if n % 2 == 0 && k == half && target > n {
                let lo = half;
                let hi = target - half;
                for s in 0..stride {
                    dst_block[lo * stride + s] += line[s] * 0.5;
                    dst_block[hi * stride + s] += line[s] * 0.5;
                }
                continue;
            }
            let dst_k = if k <= (n - 1) / 2 || n == target { k } else { target - (n - k) };
            for s in 0..stride {
                dst_block[dst_k * stride + s] += line[s];
            }
        }
    }
    out
}

/// Trigonometric interpolation of correlation scores given their spectrum.
///
/// The spectrum is zero-padded to `target_dims`, rescaled by
/// `∏target/∏source`, inverse transformed, and the real part returned.
/// The mean is carried separately so constants are reproduced exactly.
pub fn interpolate_scores(spectrum: &ComplexGrid, target_dims: &[usize]) -> Result<RealGrid> {
    check_dims(target_dims)?;
    if target_dims.len() != spectrum.dims.len() {
        return Err(Error::arg(format!(
            "target dims {target_dims:?} do not match spectrum rank {}",
            spectrum.dims.len()
        )));
    }
    if let Some((&t, &s)) = target_dims
        .iter()
        .zip(&spectrum.dims)
        .find(|(&t, &s)| t < s)
    {
        return Err(Error::arg(format!(
            "interpolation cannot shrink an axis ({s} -> {t})"
        )));
    }
    let mut dims = spectrum.dims.clone();
    let mut values = spectrum.values.clone();
    for axis in 0..dims.len() {
        if target_dims[axis] != dims[axis] {
            values = pad_axis(&values, &dims, axis, target_dims[axis]);
            dims[axis] = target_dims[axis];
        }
    }
    let source_len = spectrum.dims.iter().product::<usize>() as f64;
    let gain = target_dims.iter().product::<usize>() as f64 / source_len;
    // The DC term is added back analytically, so a constant signal comes out
    // exactly constant whatever roundoff the inverse transform has.
    let dc = std::mem::take(&mut values[0]).re / source_len;
    if gain != 1.0 {
        for v in values.iter_mut() {
            *v *= gain;
        }
    }
    fft_batch_inplace(&mut values, &dims, true);
    Ok(Grid::from_raw(dims, values.into_iter().map(|c| dc + c.re).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn direct_dft(x: &ComplexGrid, sign: f64) -> Vec<Complex> {
        let dims = x.dims();
        let n = x.len();
        (0..n)
            .map(|k| {
                let ki = unravel(dims, k);
                let mut acc = Complex::default();
                for m in 0..n {
                    let mi = unravel(dims, m);
                    let phase: f64 = ki
                        .iter()
                        .zip(&mi)
                        .zip(dims)
                        .map(|((&a, &b), &d)| (a * b) as f64 / d as f64)
                        .sum();
                    acc += x.values()[m] * Complex::from_polar(1.0, sign * 2.0 * PI * phase);
                }
                acc
            })
            .collect()
    }

    fn random_complex(rng: &mut ChaCha8Rng, dims: &[usize]) -> ComplexGrid {
        let n = dims.iter().product();
        let v = (0..n)
            .map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        Grid::new(dims, v).unwrap()
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let x = RealGrid::new(&[4], vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let y = dft_forward_real(&x).unwrap();
        for v in y.values() {
            assert_abs_diff_eq!(v.re, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn constant_signal_concentrates_in_dc() {
        let c = 0.7;
        let x = RealGrid::new(&[6], vec![c; 6]).unwrap();
        let y = dft_forward_real(&x).unwrap();
        assert_abs_diff_eq!(y.values()[0].re, 6.0 * c, epsilon = 1e-12);
        for v in &y.values()[1..] {
            assert!(v.norm() < 1e-12);
        }
        let back = dft_inverse(&y).unwrap();
        for v in back.values() {
            assert_abs_diff_eq!(v.re, c, epsilon = 1e-12);
        }
    }

    #[test]
    fn forward_matches_direct_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for dims in [vec![4, 4], vec![5], vec![3, 4, 2], vec![6, 5]] {
            let x = random_complex(&mut rng, &dims);
            let fast = dft_forward(&x).unwrap();
            let slow = direct_dft(&x, -1.0);
            let norm: f64 = slow.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            let err: f64 = fast
                .values()
                .iter()
                .zip(&slow)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(err / norm < 1e-12, "dims {dims:?}: rel err {}", err / norm);
        }
    }

    #[test]
    fn inverse_of_known_spectrum() {
        let y = ComplexGrid::new(
            &[4],
            [2.0, 1.0, 0.0, 1.0].iter().map(|&v| Complex::new(v, 0.0)).collect(),
        )
        .unwrap();
        let x = dft_inverse(&y).unwrap();
        let expected = [1.0, 0.5, 0.0, 0.5];
        for (v, e) in x.values().iter().zip(expected) {
            assert_abs_diff_eq!(v.re, e, epsilon = 1e-15);
            assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn round_trip_8x8() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_complex(&mut rng, &[8, 8]);
        let back = dft_inverse(&dft_forward(&x).unwrap()).unwrap();
        for (a, b) in x.values().iter().zip(back.values()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn empty_grids_are_rejected() {
        assert!(matches!(RealGrid::new(&[], vec![]), Err(Error::InvalidArgument(_))));
        assert!(matches!(RealGrid::zeros(&[0, 3]), Err(Error::InvalidArgument(_))));
        assert!(hann_window(&[3, 0]).is_err());
    }

    #[test]
    fn hann_closed_forms() {
        let w = hann_window(&[3]).unwrap();
        assert_eq!(w.values().len(), 3);
        assert_abs_diff_eq!(w.values()[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.values()[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.values()[2], 0.0, epsilon = 1e-15);
        assert_eq!(hann_window(&[1]).unwrap().values(), &[1.0]);
        let w2 = hann_window(&[3, 3]).unwrap();
        assert_abs_diff_eq!(w2.get(&[1, 1]), 1.0, epsilon = 1e-15);
        for (i, j) in [(0, 0), (0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1), (2, 2)] {
            assert_abs_diff_eq!(w2.get(&[i, j]), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn gaussian_closed_forms() {
        let g = gaussian_response(&[4], &[1.0]).unwrap();
        let e = [1.0, (-0.5f64).exp(), (-2.0f64).exp(), (-0.5f64).exp()];
        for (v, e) in g.values().iter().zip(e) {
            assert_abs_diff_eq!(*v, e, epsilon = 1e-15);
        }
        let g = gaussian_response(&[5, 5], &[1.0, 2.0]).unwrap();
        assert_eq!(g.get(&[0, 0]), 1.0);
        for r in 0..5 {
            for c in 0..5 {
                let dr = [0.0, 1.0, 2.0, -2.0, -1.0][r];
                let dc = [0.0, 1.0, 2.0, -2.0, -1.0][c];
                let want = (-(dr * dr) / 2.0 - dc * dc / 8.0f64).exp();
                assert_abs_diff_eq!(g.get(&[r, c]), want, epsilon = 1e-15);
            }
        }
        assert!(gaussian_response(&[4], &[0.0]).is_err());
        assert!(gaussian_response(&[4, 4], &[1.0]).is_err());
    }

    #[test]
    fn interpolation_examples() {
        let y = dft_forward_real(&RealGrid::new(&[2], vec![3.0, 3.0]).unwrap()).unwrap();
        let up = interpolate_scores(&y, &[4]).unwrap();
        for v in up.values() {
            assert_abs_diff_eq!(*v, 3.0, epsilon = 1e-15);
        }
        let y = dft_forward_real(&RealGrid::new(&[2], vec![1.0, 0.0]).unwrap()).unwrap();
        let up = interpolate_scores(&y, &[4]).unwrap();
        for (v, e) in up.values().iter().zip([1.0, 0.5, 0.0, 0.5]) {
            assert_abs_diff_eq!(*v, e, epsilon = 1e-15);
        }
        assert!(interpolate_scores(&y, &[1]).is_err());
    }

    #[test]
    fn interpolation_reproduces_sublattice() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = RealGrid::new(&[4, 4], v).unwrap();
        let up = interpolate_scores(&dft_forward_real(&x).unwrap(), &[16, 16]).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                assert!((up.get(&[4 * r, 4 * c]) - x.get(&[r, c])).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn circular_offsets() {
        assert_eq!(circular_offset(0, 5), 0);
        assert_eq!(circular_offset(2, 5), 2);
        assert_eq!(circular_offset(3, 5), -2);
        assert_eq!(circular_offset(2, 4), 2);
        assert_eq!(circular_offset(3, 4), -1);
    }
}
