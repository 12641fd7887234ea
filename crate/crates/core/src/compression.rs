//! Feature compression for the fast tracker.
//!
//! The translation filter projects its features onto the leading principal
//! directions of a running-average target template. The scale filter uses a
//! QR factorization of the (tall) scale template and sample, which compresses
//! to `S` dimensions without loss because both live in an `S`-dimensional span.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::mcdcf::{
    correlate_spectra, scores_from_spectrum, CorrelationScores, DesiredOutput, FeatureSample,
    FilterModel,
};
use crate::spectral::{ComplexGrid, Grid, RealGrid};

/// Exponential running average of training samples.
#[derive(Clone, Debug, Default)]
pub struct Template {
    mean: Option<FeatureSample>,
    frames: usize,
}

impl Template {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sample(&self) -> Option<&FeatureSample> {
        self.mean.as_ref()
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    /// `u ← (1-η)u + ηf`; the first sample initializes `u = f`.
    pub fn update(&mut self, f: &FeatureSample, eta: f64) -> Result<()> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::arg(format!("learning rate must be in (0, 1], got {eta}")));
        }
        match &mut self.mean {
            None => self.mean = Some(f.clone()),
            Some(u) => {
                if u.dims() != f.dims() || u.num_channels() != f.num_channels() {
                    return Err(Error::arg(format!(
                        "template shape {:?}x{} does not match sample {:?}x{}",
                        u.dims(),
                        u.num_channels(),
                        f.dims(),
                        f.num_channels()
                    )));
                }
                for (uc, fc) in u.channels_mut().iter_mut().zip(f.channels()) {
                    for (a, b) in uc.iter_mut().zip(fc) {
                        *a = (1.0 - eta) * *a + eta * b;
                    }
                }
            }
        }
        self.frames += 1;
        Ok(())
    }
}

/// Functional form of [`Template::update`].
pub fn update_template(mut u: Template, f: &FeatureSample, eta: f64) -> Result<Template> {
    u.update(f, eta)?;
    Ok(u)
}

/// `d̃ × d` matrix with orthonormal rows.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    /// Eigenvalues of the template autocorrelation, descending (PCA only).
    spectrum: Vec<f64>,
}

impl ProjectionMatrix {
    pub fn identity(d: usize) -> Self {
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            data[i * d + i] = 1.0;
        }
        Self {
            rows: d,
            cols: d,
            data,
            spectrum: Vec::new(),
        }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || rows > cols || data.len() != rows * cols {
            return Err(Error::arg(format!(
                "projection {rows}x{cols} inconsistent with {} values",
                data.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            data,
            spectrum: Vec::new(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Fraction of template energy kept by the projection, when known.
    pub fn energy_retained(&self) -> Option<f64> {
        if self.spectrum.is_empty() {
            return None;
        }
        let total: f64 = self.spectrum.iter().sum();
        if total <= 0.0 {
            return Some(1.0);
        }
        Some(self.spectrum[..self.rows].iter().sum::<f64>() / total)
    }

    /// Largest deviation of `P Pᵀ` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.rows {
                let dot: f64 = self.row(i).iter().zip(self.row(j)).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - want).abs());
            }
        }
        worst
    }

    /// Applies `P` at every grid location.
    pub fn project(&self, f: &FeatureSample) -> Result<FeatureSample> {
        if f.num_channels() != self.cols {
            return Err(Error::state(format!(
                "projection expects {} channels, sample has {}",
                self.cols,
                f.num_channels()
            )));
        }
        let n = f.grid_len();
        let d = self.cols;
        // feature vectors laid out contiguously so each output is one dot product
        let mut xt = vec![0.0; n * d];
        for (l, ch) in f.channels().iter().enumerate() {
            for (k, &v) in ch.iter().enumerate() {
                xt[k * d + l] = v;
            }
        }
        let out = (0..self.rows)
            .map(|i| {
                let p = self.row(i);
                xt.chunks_exact(d).map(|x| dot(x, p)).collect()
            })
            .collect();
        Ok(FeatureSample::from_raw(f.dims().to_vec(), out, f.is_windowed()))
    }

    /// Applies `Pᵀ` at every grid location.
    pub fn reconstruct(&self, compressed: &FeatureSample) -> Result<FeatureSample> {
        if compressed.num_channels() != self.rows {
            return Err(Error::arg("compressed sample does not match projection rows"));
        }
        let n = compressed.grid_len();
        let mut out = vec![vec![0.0; n]; self.cols];
        for (i, src) in compressed.channels().iter().enumerate() {
            for (j, dst) in out.iter_mut().enumerate() {
                let p = self.data[i * self.cols + j];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += p * s;
                }
            }
        }
        Ok(FeatureSample::from_raw(
            compressed.dims().to_vec(),
            out,
            compressed.is_windowed(),
        ))
    }

    /// Row-permuted or rotated copy `Q P` for an orthonormal `k×k` matrix `q`.
    pub fn rotated(&self, q: &[f64]) -> Result<Self> {
        let k = self.rows;
        if q.len() != k * k {
            return Err(Error::arg("rotation must be square in the projection rank"));
        }
        let mut data = vec![0.0; self.data.len()];
        for i in 0..k {
            for m in 0..k {
                let w = q[i * k + m];
                for j in 0..self.cols {
                    data[i * self.cols + j] += w * self.data[m * self.cols + j];
                }
            }
        }
        Ok(Self {
            rows: k,
            cols: self.cols,
            data,
            spectrum: self.spectrum.clone(),
        })
    }
}

/// Dot product with four independent accumulators so it vectorizes.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn sample_matrix(u: &FeatureSample) -> DMatrix<f64> {
    let d = u.num_channels();
    let n = u.grid_len();
    DMatrix::from_fn(d, n, |l, k| u.channel(l)[k])
}

/// Sum over the grid of `‖u(n) − PᵀP u(n)‖²`.
pub fn reconstruction_error(u: &FeatureSample, p: &ProjectionMatrix) -> Result<f64> {
    let back = p.reconstruct(&p.project(u)?)?;
    Ok(u
        .channels()
        .iter()
        .zip(back.channels())
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)))
        .sum())
}

/// Leading `d̃` eigenvectors of `C = Σ_n u(n) u(n)ᵀ`, as rows, by descending eigenvalue.
pub fn learn_projection(u: &FeatureSample, d_tilde: usize) -> Result<ProjectionMatrix> {
    let d = u.num_channels();
    if d_tilde == 0 || d_tilde > d {
        return Err(Error::arg(format!(
            "compressed dimension must be in 1..={d}, got {d_tilde}"
        )));
    }
    let x = sample_matrix(u);
    let c = &x * x.transpose();
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let floor = 1e-12 * max;
    let spectrum: Vec<f64> = order
        .iter()
        .map(|&i| {
            let v = eig.eigenvalues[i];
            if v < floor {
                0.0
            } else {
                v
            }
        })
        .collect();
    let mut data = Vec::with_capacity(d_tilde * d);
    for &i in &order[..d_tilde] {
        data.extend(eig.eigenvectors.column(i).iter());
    }
    Ok(ProjectionMatrix {
        rows: d_tilde,
        cols: d,
        data,
        spectrum,
    })
}

fn qr_projection(x: &FeatureSample) -> ProjectionMatrix {
    qr_factor(x).0
}

/// Thin QR of the `d × S` sample matrix: the projection `Qᵀ` and the
/// projected sample `Qᵀx = R`, which comes for free. With `d < S` the
/// identity and `x` itself are returned.
pub fn qr_factor(x: &FeatureSample) -> (ProjectionMatrix, FeatureSample) {
    let d = x.num_channels();
    let s = x.grid_len();
    if d < s {
        return (ProjectionMatrix::identity(d), x.clone());
    }
    let qr = sample_matrix(x).qr();
    let q = qr.q();
    let r = qr.r();
    // Column j of Q becomes row j of the projection.
    let mut rows = vec![0.0; s * d];
    for (j, col) in q.column_iter().enumerate() {
        for (dst, v) in rows[j * d..(j + 1) * d].iter_mut().zip(col.iter()) {
            *dst = *v;
        }
    }
    let projected = (0..s).map(|j| r.row(j).iter().copied().collect()).collect();
    (
        ProjectionMatrix {
            rows: s,
            cols: d,
            data: rows,
            spectrum: Vec::new(),
        },
        FeatureSample::from_raw(x.dims().to_vec(), projected, x.is_windowed()),
    )
}

/// `R` of the thin QR of `x`, i.e. `x` compressed by its own `Qᵀ`, without forming `Q`.
pub fn qr_reduce(x: &FeatureSample) -> FeatureSample {
    let s = x.grid_len();
    if x.num_channels() < s {
        return x.clone();
    }
    let r = sample_matrix(x).qr().r();
    let rows = (0..s).map(|j| r.row(j).iter().copied().collect()).collect();
    FeatureSample::from_raw(x.dims().to_vec(), rows, x.is_windowed())
}

/// Orthonormal projections spanning the scale template and the scale sample.
///
/// With `d ≥ S`, both have `S` rows and reconstruct their input exactly.
/// With `d < S` the identity is returned.
pub fn qr_scale_projection(
    u_scale: &FeatureSample,
    f_scale: &FeatureSample,
) -> Result<(ProjectionMatrix, ProjectionMatrix)> {
    if u_scale.dims().len() != 1 || f_scale.dims() != u_scale.dims() {
        return Err(Error::arg("scale samples must be 1-D with matching length"));
    }
    if u_scale.num_channels() != f_scale.num_channels() {
        return Err(Error::arg("scale template and sample channel counts differ"));
    }
    Ok((qr_projection(u_scale), qr_projection(f_scale)))
}

/// Filter trained on projected features.
#[derive(Clone, Debug)]
pub struct CompressedFilterModel {
    dims: Vec<usize>,
    numerators: Vec<ComplexGrid>,
    denominator: RealGrid,
    projection: Option<ProjectionMatrix>,
    lambda: f64,
    frame_count: usize,
}

impl CompressedFilterModel {
    pub fn new(dims: &[usize], lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::arg(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self {
            dims: dims.to_vec(),
            numerators: Vec::new(),
            denominator: RealGrid::zeros(dims)?,
            projection: None,
            lambda,
            frame_count: 0,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn num_channels(&self) -> usize {
        self.numerators.len()
    }

    pub fn projection(&self) -> Option<&ProjectionMatrix> {
        self.projection.as_ref()
    }

    pub fn numerators(&self) -> &[ComplexGrid] {
        &self.numerators
    }

    pub fn denominator(&self) -> &RealGrid {
        &self.denominator
    }

    /// Update with one projection for both template and sample.
    pub fn update(
        &mut self,
        projection: ProjectionMatrix,
        f: &FeatureSample,
        u: &FeatureSample,
        g: &DesiredOutput,
        eta: f64,
    ) -> Result<()> {
        let pf = projection.clone();
        self.update_split(projection, u, &pf, f, g, eta)
    }

    /// Numerator `Ã = conj(G)·DFT(P_u u)` recomputed from the template;
    /// denominator averaged with `Σ_k |DFT(P_f f)_k|²`. `P_u` is kept for detection.
    pub fn update_split(
        &mut self,
        template_projection: ProjectionMatrix,
        u: &FeatureSample,
        sample_projection: &ProjectionMatrix,
        f: &FeatureSample,
        g: &DesiredOutput,
        eta: f64,
    ) -> Result<()> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::arg(format!("learning rate must be in (0, 1], got {eta}")));
        }
        for s in [u, f] {
            if s.dims() != self.dims.as_slice() {
                return Err(Error::arg(format!(
                    "sample dims {:?} do not match filter {:?}",
                    s.dims(),
                    self.dims
                )));
            }
        }
        if g.dims() != self.dims.as_slice() {
            return Err(Error::arg("desired output dims do not match the filter"));
        }
        let pu = template_projection.project(u)?;
        let pf = sample_projection.project(f)?;
        self.update_projected(template_projection, &pu, &pf, g, eta)
    }

    /// Update from samples already compressed: `u_proj = P_u u` and
    /// `f_proj = P_f f`. `projection` (`P_u`) is stored for detection.
    pub fn update_projected(
        &mut self,
        projection: ProjectionMatrix,
        u_proj: &FeatureSample,
        f_proj: &FeatureSample,
        g: &DesiredOutput,
        eta: f64,
    ) -> Result<()> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::arg(format!("learning rate must be in (0, 1], got {eta}")));
        }
        if u_proj.dims() != self.dims.as_slice() || f_proj.dims() != self.dims.as_slice() {
            return Err(Error::arg("projected sample dims do not match the filter"));
        }
        if g.dims() != self.dims.as_slice() {
            return Err(Error::arg("desired output dims do not match the filter"));
        }
        let k = projection.rows();
        if u_proj.num_channels() != k || f_proj.num_channels() != k {
            return Err(Error::state("template and sample projections differ in rank"));
        }
        if self.frame_count > 0 && k != self.numerators.len() {
            return Err(Error::state(format!(
                "projection rank changed from {} to {k}",
                self.numerators.len()
            )));
        }
        let u_spec = u_proj.spectra();
        let f_spec = f_proj.spectra();
        let gs = g.spectrum().values();

        self.numerators = u_spec
            .into_iter()
            .map(|s| {
                let v = s.values().iter().zip(gs).map(|(uv, gv)| gv.conj() * uv).collect();
                Grid::from_raw(self.dims.clone(), v)
            })
            .collect();

        let rate = if self.frame_count == 0 { 1.0 } else { eta };
        let mut energy = vec![0.0; self.denominator.len()];
        for s in &f_spec {
            for (e, v) in energy.iter_mut().zip(s.values()) {
                *e += v.norm_sqr();
            }
        }
        for (b, e) in self.denominator.values_mut().iter_mut().zip(energy) {
            *b = (1.0 - rate) * *b + rate * e;
        }
        self.projection = Some(projection);
        self.frame_count += 1;
        Ok(())
    }

    /// Score spectrum on a test sample compressed with the stored projection.
    pub fn detect_spectrum(&self, z: &FeatureSample) -> Result<ComplexGrid> {
        let p = self
            .projection
            .as_ref()
            .ok_or_else(|| Error::state("compressed filter has not been trained"))?;
        if z.dims() != self.dims.as_slice() {
            return Err(Error::arg("test sample dims do not match the filter"));
        }
        let z_spec = p.project(z)?.spectra();
        Ok(correlate_spectra(
            &self.dims,
            &self.numerators,
            &z_spec,
            &self.denominator,
            self.lambda,
        ))
    }

    pub fn detect(&self, z: &FeatureSample) -> Result<CorrelationScores> {
        Ok(scores_from_spectrum(self.detect_spectrum(z)?))
    }

    /// Relative gap `‖B̃ − B‖ / ‖B‖` against an uncompressed denominator.
    pub fn denominator_gap(&self, exact: &FilterModel) -> f64 {
        let num: f64 = self
            .denominator
            .values()
            .iter()
            .zip(exact.denominator().values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let den: f64 = exact.denominator().values().iter().map(|b| b * b).sum();
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }
}

/// Applies the compressed filter; same as [`CompressedFilterModel::detect`].
pub fn compressed_detect(model: &CompressedFilterModel, z: &FeatureSample) -> Result<CorrelationScores> {
    model.detect(z)
}
