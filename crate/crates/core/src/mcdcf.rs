//! Multi-channel discriminative correlation filters.
//!
//! A filter is kept in the Fourier domain as one numerator per feature channel
//! and a single shared denominator. Training is the running-average
//! approximation of the multi-sample ridge regression; the exact per-frequency
//! normal-equation solve is kept around as [`brute_force_solve`] for checking.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spectral::{
    dft_forward_real, fft_batch_inplace, unravel, Complex, ComplexGrid, Grid, RealGrid,
};

/// A grid of `d`-dimensional feature vectors, stored channel by channel.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSample {
    dims: Vec<usize>,
    channels: Vec<Vec<f64>>,
    windowed: bool,
}

impl FeatureSample {
    pub fn new(dims: &[usize], channels: Vec<Vec<f64>>) -> Result<Self> {
        let len: usize = RealGrid::zeros(dims)?.len();
        if channels.is_empty() {
            return Err(Error::arg("feature sample needs at least one channel"));
        }
        for (l, ch) in channels.iter().enumerate() {
            if ch.len() != len {
                return Err(Error::arg(format!(
                    "channel {l} has {} values, grid {dims:?} needs {len}",
                    ch.len()
                )));
            }
            if ch.iter().any(|v| !v.is_finite()) {
                return Err(Error::arg(format!("channel {l} has non-finite values")));
            }
        }
        Ok(Self {
            dims: dims.to_vec(),
            channels,
            windowed: false,
        })
    }

    pub(crate) fn from_raw(dims: Vec<usize>, channels: Vec<Vec<f64>>, windowed: bool) -> Self {
        Self {
            dims,
            channels,
            windowed,
        }
    }

    pub fn zeros(dims: &[usize], num_channels: usize) -> Result<Self> {
        let len = RealGrid::zeros(dims)?.len();
        Self::new(dims, vec![vec![0.0; len]; num_channels.max(1)])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn grid_len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn channel(&self, l: usize) -> &[f64] {
        &self.channels[l]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn channels_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.channels
    }

    pub fn is_windowed(&self) -> bool {
        self.windowed
    }

    /// Feature vector at a flat grid offset.
    pub fn vector_at(&self, offset: usize) -> Vec<f64> {
        self.channels.iter().map(|c| c[offset]).collect()
    }

    /// Multiplies every channel by `window` and marks the sample windowed.
    pub fn apply_window(&mut self, window: &RealGrid) -> Result<()> {
        if window.dims() != self.dims.as_slice() {
            return Err(Error::arg(format!(
                "window {:?} does not match sample {:?}",
                window.dims(),
                self.dims
            )));
        }
        for ch in &mut self.channels {
            for (v, w) in ch.iter_mut().zip(window.values()) {
                *v *= w;
            }
        }
        self.windowed = true;
        Ok(())
    }

    /// DFT of every channel.
    pub fn spectra(&self) -> Vec<ComplexGrid> {
        let len = self.grid_len();
        let mut buf: Vec<Complex> = self
            .channels
            .iter()
            .flat_map(|c| c.iter().map(|&v| Complex::new(v, 0.0)))
            .collect();
        fft_batch_inplace(&mut buf, &self.dims, false);
        buf.chunks_exact(len)
            .map(|c| Grid::from_raw(self.dims.clone(), c.to_vec()))
            .collect()
    }

    fn check_compatible(&self, dims: &[usize], channels: usize) -> Result<()> {
        if self.dims != dims {
            return Err(Error::arg(format!(
                "sample dims {:?} do not match {:?}",
                self.dims, dims
            )));
        }
        if self.channels.len() != channels {
            return Err(Error::arg(format!(
                "sample has {} channels, expected {channels}",
                self.channels.len()
            )));
        }
        Ok(())
    }
}

/// Desired correlation output `g` together with its DFT.
#[derive(Clone, Debug)]
pub struct DesiredOutput {
    response: RealGrid,
    spectrum: ComplexGrid,
}

impl DesiredOutput {
    pub fn new(response: RealGrid) -> Result<Self> {
        let spectrum = dft_forward_real(&response)?;
        Ok(Self { response, spectrum })
    }

    pub fn response(&self) -> &RealGrid {
        &self.response
    }

    pub fn spectrum(&self) -> &ComplexGrid {
        &self.spectrum
    }

    pub fn dims(&self) -> &[usize] {
        self.response.dims()
    }
}

/// Correlation scores with their maximum located.
#[derive(Clone, Debug)]
pub struct CorrelationScores {
    pub scores: RealGrid,
    pub argmax_index: Vec<usize>,
    pub argmax_value: f64,
}

impl CorrelationScores {
    /// Locates the maximum; ties go to the smallest row-major offset.
    pub fn from_scores(scores: RealGrid) -> Self {
        let (best, value) = scores
            .values()
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            });
        let argmax_index = unravel(scores.dims(), best);
        Self {
            scores,
            argmax_index,
            argmax_value: value,
        }
    }
}

/// Numerator/denominator form of a learned filter.
#[derive(Clone, Debug)]
pub struct FilterModel {
    dims: Vec<usize>,
    numerators: Vec<ComplexGrid>,
    denominator: RealGrid,
    lambda: f64,
    frame_count: usize,
}

impl FilterModel {
    /// Creates an untrained model.
    pub fn new(dims: &[usize], channels: usize, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::arg(format!("lambda must be positive, got {lambda}")));
        }
        if channels == 0 {
            return Err(Error::arg("filter needs at least one channel"));
        }
        let denominator = RealGrid::zeros(dims)?;
        let numerators = vec![ComplexGrid::zeros(dims)?; channels];
        Ok(Self {
            dims: dims.to_vec(),
            numerators,
            denominator,
            lambda,
            frame_count: 0,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_channels(&self) -> usize {
        self.numerators.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn numerators(&self) -> &[ComplexGrid] {
        &self.numerators
    }

    pub fn denominator(&self) -> &RealGrid {
        &self.denominator
    }

    /// Running-average update of numerator and denominator with a new sample.
    ///
    /// The first update assigns the sample's terms with full weight.
    pub fn update(&mut self, f: &FeatureSample, g: &DesiredOutput, eta: f64) -> Result<()> {
        f.check_compatible(&self.dims, self.numerators.len())?;
        if g.dims() != self.dims.as_slice() {
            return Err(Error::arg("desired output dims do not match the filter"));
        }
        self.update_spectra(&f.spectra(), g, eta)
    }

    /// Same as [`FilterModel::update`] with precomputed channel spectra.
    pub fn update_spectra(
        &mut self,
        spectra: &[ComplexGrid],
        g: &DesiredOutput,
        eta: f64,
    ) -> Result<()> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::arg(format!("learning rate must be in (0, 1], got {eta}")));
        }
        if spectra.len() != self.numerators.len() {
            return Err(Error::arg(format!(
                "got {} channel spectra, filter has {}",
                spectra.len(),
                self.numerators.len()
            )));
        }
        let rate = if self.frame_count == 0 { 1.0 } else { eta };
        let keep = 1.0 - rate;
        let gs = g.spectrum().values();

        let mut energy = vec![0.0; self.denominator.len()];
        for (num, spec) in self.numerators.iter_mut().zip(spectra) {
            if spec.dims() != self.dims.as_slice() {
                return Err(Error::arg("channel spectrum dims do not match the filter"));
            }
            for ((a, &fv), &gv) in num.values_mut().iter_mut().zip(spec.values()).zip(gs) {
                *a = *a * keep + gv.conj() * fv * rate;
            }
            for (e, fv) in energy.iter_mut().zip(spec.values()) {
                *e += fv.norm_sqr();
            }
        }
        for (b, e) in self.denominator.values_mut().iter_mut().zip(energy) {
            *b = *b * keep + e * rate;
        }
        self.frame_count += 1;
        Ok(())
    }

    /// Fourier-domain scores `Σ_l conj(A^l) Z^l / (B + λ)`.
    pub fn detect_spectrum(&self, z: &FeatureSample) -> Result<ComplexGrid> {
        z.check_compatible(&self.dims, self.numerators.len())?;
        self.detect_spectrum_from(&z.spectra())
    }

    pub fn detect_spectrum_from(&self, z_spectra: &[ComplexGrid]) -> Result<ComplexGrid> {
        if self.frame_count == 0 {
            return Err(Error::state("filter has not been trained"));
        }
        if z_spectra.len() != self.numerators.len() {
            return Err(Error::arg("test sample channel count does not match the filter"));
        }
        Ok(correlate_spectra(
            &self.dims,
            &self.numerators,
            z_spectra,
            &self.denominator,
            self.lambda,
        ))
    }

    /// Correlation scores of the filter on a test sample.
    pub fn detect(&self, z: &FeatureSample) -> Result<CorrelationScores> {
        let spectrum = self.detect_spectrum(z)?;
        Ok(scores_from_spectrum(spectrum))
    }
}

pub(crate) fn correlate_spectra(
    dims: &[usize],
    numerators: &[ComplexGrid],
    z_spectra: &[ComplexGrid],
    denominator: &RealGrid,
    lambda: f64,
) -> ComplexGrid {
    let mut acc = vec![Complex::default(); denominator.len()];
    for (a, z) in numerators.iter().zip(z_spectra) {
        for ((y, av), zv) in acc.iter_mut().zip(a.values()).zip(z.values()) {
            *y += av.conj() * zv;
        }
    }
    for (y, b) in acc.iter_mut().zip(denominator.values()) {
        *y /= b + lambda;
    }
    Grid::from_raw(dims.to_vec(), acc)
}

/// Inverse-transforms a score spectrum and locates its maximum.
pub fn scores_from_spectrum(spectrum: ComplexGrid) -> CorrelationScores {
    let dims = spectrum.dims().to_vec();
    let mut values = spectrum.into_values();
    fft_batch_inplace(&mut values, &dims, true);
    let real = Grid::from_raw(dims, values.into_iter().map(|c| c.re).collect());
    CorrelationScores::from_scores(real)
}

/// Filter coefficients `H^l` materialized per channel (Fourier domain).
#[derive(Clone, Debug)]
pub struct MaterializedFilter {
    pub channels: Vec<ComplexGrid>,
}

impl MaterializedFilter {
    /// Spatial-domain filters (real parts of the inverse DFT).
    pub fn spatial(&self) -> Vec<RealGrid> {
        self.channels
            .iter()
            .map(|h| {
                let dims = h.dims().to_vec();
                let mut v = h.values().to_vec();
                fft_batch_inplace(&mut v, &dims, true);
                Grid::from_raw(dims, v.into_iter().map(|c| c.re).collect())
            })
            .collect()
    }
}

fn check_problem(f: &FeatureSample, g: &RealGrid, lambda: f64) -> Result<()> {
    if f.dims() != g.dims() {
        return Err(Error::arg(format!(
            "desired output {:?} does not match sample {:?}",
            g.dims(),
            f.dims()
        )));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::arg(format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

/// Closed-form single-sample filter `H^l = conj(G) F^l / (Σ_k |F^k|² + λ)`.
pub fn solve_single(f: &FeatureSample, g: &RealGrid, lambda: f64) -> Result<MaterializedFilter> {
    check_problem(f, g, lambda)?;
    let gs = dft_forward_real(g)?;
    let spectra = f.spectra();
    let mut denom = vec![lambda; g.len()];
    for s in &spectra {
        for (d, v) in denom.iter_mut().zip(s.values()) {
            *d += v.norm_sqr();
        }
    }
    let channels = spectra
        .iter()
        .map(|s| {
            let v = s
                .values()
                .iter()
                .zip(gs.values())
                .zip(&denom)
                .map(|((fv, gv), d)| gv.conj() * fv / d)
                .collect();
            Grid::from_raw(f.dims().to_vec(), v)
        })
        .collect();
    Ok(MaterializedFilter { channels })
}

/// Closed form of `(x x* + λI)⁻¹ x c`, i.e. `x c / (x* x + λ)`.
pub fn rank1_inverse_apply(x: &[Complex], c: Complex, lambda: f64) -> Vec<Complex> {
    let energy: f64 = x.iter().map(|v| v.norm_sqr()).sum();
    x.iter().map(|v| v * c / (energy + lambda)).collect()
}

/// Exact per-frequency solution together with the largest relative
/// discrepancy seen between the linear solve and the rank-1 closed form.
#[derive(Clone, Debug)]
pub struct BruteForceSolution {
    pub filter: MaterializedFilter,
    pub rank1_discrepancy: f64,
}

/// Solves the `d×d` normal equations `(F F* + λI) H = F conj(G)` at every
/// frequency by LU decomposition. Oracle scale only.
pub fn brute_force_solve(f: &FeatureSample, g: &RealGrid, lambda: f64) -> Result<BruteForceSolution> {
    check_problem(f, g, lambda)?;
    let d = f.num_channels();
    if d > 4 || f.dims().iter().any(|&n| n > 16) {
        return Err(Error::arg(format!(
            "brute-force solve limited to d ≤ 4 and extents ≤ 16, got d={d}, dims={:?}",
            f.dims()
        )));
    }
    let gs = dft_forward_real(g)?;
    let spectra = f.spectra();
    let n = g.len();
    let mut out = vec![vec![Complex::default(); n]; d];
    let mut discrepancy: f64 = 0.0;
    for k in 0..n {
        let fv = DVector::from_iterator(d, spectra.iter().map(|s| s.values()[k]));
        let gc = gs.values()[k].conj();
        let system = &fv * fv.adjoint() + DMatrix::<Complex>::identity(d, d) * Complex::new(lambda, 0.0);
        let rhs = &fv * gc;
        let h = system
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::state("normal equations singular despite λ > 0"))?;
        let closed = rank1_inverse_apply(fv.as_slice(), gc, lambda);
        let scale = h.norm().max(f64::MIN_POSITIVE);
        let diff = h
            .iter()
            .zip(&closed)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if h.norm() > 0.0 {
            discrepancy = discrepancy.max(diff / scale);
        }
        for (l, v) in h.iter().enumerate() {
            out[l][k] = *v;
        }
    }
    let channels = out
        .into_iter()
        .map(|v| Grid::from_raw(f.dims().to_vec(), v))
        .collect();
    Ok(BruteForceSolution {
        filter: MaterializedFilter { channels },
        rank1_discrepancy: discrepancy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::gaussian_response;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sample(rng: &mut ChaCha8Rng, dims: &[usize], d: usize) -> FeatureSample {
        let n: usize = dims.iter().product();
        let ch = (0..d)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        FeatureSample::new(dims, ch).unwrap()
    }

    fn impulse(dims: &[usize]) -> FeatureSample {
        let n: usize = dims.iter().product();
        let mut v = vec![0.0; n];
        v[0] = 1.0;
        FeatureSample::new(dims, vec![v]).unwrap()
    }

    #[test]
    fn impulse_sample_gives_scaled_conjugate_target() {
        let dims = [6, 5];
        let g = gaussian_response(&dims, &[1.0, 1.5]).unwrap();
        let gs = dft_forward_real(&g).unwrap();
        let h = solve_single(&impulse(&dims), &g, 0.3).unwrap();
        for (hv, gv) in h.channels[0].values().iter().zip(gs.values()) {
            assert!((hv - gv.conj() / 1.3).norm() < 1e-12);
        }
    }

    #[test]
    fn regularization_shrinks_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_sample(&mut rng, &[4, 4], 2);
        let g = gaussian_response(&[4, 4], &[1.0, 1.0]).unwrap();
        let norm = |lambda| -> f64 {
            solve_single(&f, &g, lambda)
                .unwrap()
                .channels
                .iter()
                .flat_map(|c| c.values().iter().map(|v| v.norm_sqr()))
                .sum::<f64>()
        };
        assert!(norm(1e4) < norm(1e2));
        assert!(norm(1e2) < norm(1.0));
    }

    #[test]
    fn scalar_brute_force_is_division() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f = random_sample(&mut rng, &[7], 1);
        let g = gaussian_response(&[7], &[1.0]).unwrap();
        let gs = dft_forward_real(&g).unwrap();
        let fs = f.spectra();
        let sol = brute_force_solve(&f, &g, 0.01).unwrap();
        for k in 0..7 {
            let fv = fs[0].values()[k];
            let want = gs.values()[k].conj() * fv / (fv.norm_sqr() + 0.01);
            assert!((sol.filter.channels[0].values()[k] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn brute_force_rejects_oversize() {
        let f = FeatureSample::zeros(&[17], 1).unwrap();
        let g = RealGrid::zeros(&[17]).unwrap();
        assert!(brute_force_solve(&f, &g, 0.01).is_err());
        let f = FeatureSample::zeros(&[4], 5).unwrap();
        let g = RealGrid::zeros(&[4]).unwrap();
        assert!(brute_force_solve(&f, &g, 0.01).is_err());
    }

    #[test]
    fn first_update_has_full_weight_and_eta_one_forgets() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let dims = [4, 6];
        let g = DesiredOutput::new(gaussian_response(&dims, &[1.0, 1.0]).unwrap()).unwrap();
        let f1 = random_sample(&mut rng, &dims, 3);
        let f2 = random_sample(&mut rng, &dims, 3);

        let mut a = FilterModel::new(&dims, 3, 0.01).unwrap();
        a.update(&f1, &g, 0.025).unwrap();
        a.update(&f2, &g, 1.0).unwrap();
        let mut b = FilterModel::new(&dims, 3, 0.01).unwrap();
        b.update(&f2, &g, 0.5).unwrap();
        assert_eq!(a.frame_count(), 2);
        for (x, y) in a.numerators().iter().zip(b.numerators()) {
            for (u, v) in x.values().iter().zip(y.values()) {
                assert!((u - v).norm() < 1e-12);
            }
        }
        for (u, v) in a.denominator().values().iter().zip(b.denominator().values()) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn half_rate_average_matches_hand_combination() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let dims = [5];
        let g = DesiredOutput::new(gaussian_response(&dims, &[1.0]).unwrap()).unwrap();
        let f1 = random_sample(&mut rng, &dims, 2);
        let f2 = random_sample(&mut rng, &dims, 2);
        let mut m = FilterModel::new(&dims, 2, 0.01).unwrap();
        m.update(&f1, &g, 0.5).unwrap();
        m.update(&f2, &g, 0.5).unwrap();

        let (s1, s2) = (f1.spectra(), f2.spectra());
        let gs = g.spectrum().values();
        for k in 0..5 {
            let mut b = 0.0;
            for l in 0..2 {
                let want = 0.5 * gs[k].conj() * s1[l].values()[k] + 0.5 * gs[k].conj() * s2[l].values()[k];
                assert!((m.numerators()[l].values()[k] - want).norm() < 1e-12);
                b += 0.5 * s1[l].values()[k].norm_sqr() + 0.5 * s2[l].values()[k].norm_sqr();
            }
            assert!((m.denominator().values()[k] - b).abs() < 1e-12);
        }
    }

    #[test]
    fn repeated_identical_updates_are_a_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let dims = [4, 4];
        let g = DesiredOutput::new(gaussian_response(&dims, &[1.0, 1.0]).unwrap()).unwrap();
        let f = random_sample(&mut rng, &dims, 2);
        let mut m = FilterModel::new(&dims, 2, 0.01).unwrap();
        m.update(&f, &g, 0.1).unwrap();
        let first = m.clone();
        for _ in 0..30 {
            m.update(&f, &g, 0.1).unwrap();
        }
        for (u, v) in m.denominator().values().iter().zip(first.denominator().values()) {
            assert!((u - v).abs() < 1e-9 * v.abs().max(1.0));
        }
    }

    #[test]
    fn detect_requires_training_and_zero_input_gives_zero() {
        let dims = [4, 4];
        let m = FilterModel::new(&dims, 1, 0.01).unwrap();
        let z = FeatureSample::zeros(&dims, 1).unwrap();
        assert!(matches!(m.detect(&z), Err(Error::InvalidState(_))));

        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut m = m;
        let g = DesiredOutput::new(gaussian_response(&dims, &[1.0, 1.0]).unwrap()).unwrap();
        m.update(&random_sample(&mut rng, &dims, 1), &g, 0.025).unwrap();
        let s = m.detect(&z).unwrap();
        assert!(s.scores.values().iter().all(|&v| v == 0.0));
        assert_eq!(s.argmax_index, vec![0, 0]);
    }

    #[test]
    fn mismatched_samples_are_rejected() {
        let dims = [4, 4];
        let g = DesiredOutput::new(gaussian_response(&dims, &[1.0, 1.0]).unwrap()).unwrap();
        let mut m = FilterModel::new(&dims, 2, 0.01).unwrap();
        assert!(m.update(&FeatureSample::zeros(&dims, 3).unwrap(), &g, 0.1).is_err());
        assert!(m.update(&FeatureSample::zeros(&[4, 5], 2).unwrap(), &g, 0.1).is_err());
        assert!(m.update(&FeatureSample::zeros(&dims, 2).unwrap(), &g, 0.0).is_err());
        assert!(FilterModel::new(&dims, 2, 0.0).is_err());
    }

    #[test]
    fn ties_resolve_to_first_offset() {
        let s = CorrelationScores::from_scores(RealGrid::new(&[2, 2], vec![0.0, 1.0, 1.0, 0.5]).unwrap());
        assert_eq!(s.argmax_index, vec![0, 1]);
        assert_eq!(s.argmax_value, 1.0);
    }
}
