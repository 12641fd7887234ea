//! Python bindings for `dcftrack-core`.
//!
//! Frames cross the boundary as 8-bit grayscale `bytes` plus width and
//! height; boxes are `(x, y, width, height)` tuples with a 0-based origin.

use std::collections::HashMap;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use dcftrack_core::evaluation::{
    center_error as core_center_error, compute_metrics as core_compute_metrics, generate_sre_initializations,
    generate_tre_starts, iou as core_iou, render_synthetic, SyntheticSpec,
};
use dcftrack_core::spectral::{dft_forward_real, gaussian_response, hann_window, interpolate_scores};
use dcftrack_core::{BoundingBox, Error, GrayImage, RealGrid, TrackerConfig, TrackerHandle, TrackerKind};

type PyBox = (f64, f64, f64, f64);

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_) => PyValueError::new_err(e.to_string()),
        Error::Ingestion { .. } | Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::InvalidState(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

fn bbox(b: PyBox) -> PyResult<BoundingBox> {
    BoundingBox::new(b.0, b.1, b.2, b.3).map_err(to_py_err)
}

fn tuple(b: &BoundingBox) -> PyBox {
    (b.x, b.y, b.width, b.height)
}

fn frame(data: &[u8], width: usize, height: usize) -> PyResult<GrayImage> {
    if data.len() != width * height {
        return Err(PyValueError::new_err(format!(
            "frame has {} bytes, expected {width}x{height} = {}",
            data.len(),
            width * height
        )));
    }
    GrayImage::from_luma8(width, height, data).map_err(to_py_err)
}

/// A single-target tracker. `params` overrides configuration keys, e.g.
/// `Tracker("fdsst", {"pca_dims": 12})`.
#[pyclass(unsendable)]
struct Tracker {
    kind: TrackerKind,
    config: TrackerConfig,
    handle: Option<TrackerHandle>,
}

#[pymethods]
impl Tracker {
    #[new]
    #[pyo3(signature = (kind = "dsst", params = None))]
    fn new(kind: &str, params: Option<HashMap<String, Bound<'_, PyAny>>>) -> PyResult<Self> {
        let kind: TrackerKind = kind.parse().map_err(to_py_err)?;
        let mut config = TrackerConfig::for_kind(kind);
        for (k, v) in params.unwrap_or_default() {
            let text = if v.is_none() { "0".to_string() } else { v.str()?.to_string() };
            config.set(&k, &text.to_ascii_lowercase()).map_err(to_py_err)?;
        }
        config.validate().map_err(to_py_err)?;
        Ok(Tracker {
            kind,
            config,
            handle: None,
        })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.kind.name()
    }

    /// Frames processed since `init`, the first included.
    #[getter]
    fn frames(&self) -> usize {
        self.handle.as_ref().map_or(0, |h| h.frames())
    }

    /// `(center_x, center_y, scale)`, or `None` before `init`.
    #[getter]
    fn state(&self) -> Option<(f64, f64, f64)> {
        self.handle.as_ref().map(|h| {
            let s = h.state();
            (s.position.0, s.position.1, s.scale)
        })
    }

    fn init(&mut self, data: &[u8], width: usize, height: usize, bbox_: PyBox) -> PyResult<()> {
        let img = frame(data, width, height)?;
        self.handle = Some(dcftrack_core::init(self.kind, &img, bbox(bbox_)?, &self.config).map_err(to_py_err)?);
        Ok(())
    }

    /// Tracks one frame; returns the new box.
    fn update(&mut self, data: &[u8], width: usize, height: usize) -> PyResult<PyBox> {
        let img = frame(data, width, height)?;
        let handle = self
            .handle
            .as_mut()
            .ok_or_else(|| PyRuntimeError::new_err("tracker is not initialized; call init first"))?;
        handle.track(&img).map(|(b, _)| tuple(&b)).map_err(to_py_err)
    }

    /// Like `update`, plus a dict of per-frame internals.
    fn update_with_diagnostics<'py>(
        &mut self,
        py: Python<'py>,
        data: &[u8],
        width: usize,
        height: usize,
    ) -> PyResult<(PyBox, Bound<'py, PyDict>)> {
        let img = frame(data, width, height)?;
        let handle = self
            .handle
            .as_mut()
            .ok_or_else(|| PyRuntimeError::new_err("tracker is not initialized; call init first"))?;
        let (b, d) = handle.track(&img).map_err(to_py_err)?;
        let m = PyDict::new(py);
        m.set_item("translation_peak", d.translation_peak)?;
        m.set_item("translation_shift", d.translation_shift)?;
        m.set_item("scale_bin", d.scale_bin)?;
        m.set_item("scale_peak", d.scale_peak)?;
        m.set_item("scale_scores", d.scale_scores)?;
        m.set_item("energy_retained", d.energy_retained)?;
        m.set_item("iterations", d.iterations)?;
        Ok((tuple(&b), m))
    }
}

#[pyfunction]
fn tracker_kinds() -> Vec<&'static str> {
    TrackerKind::ALL.iter().map(|k| k.name()).collect()
}

#[pyfunction]
fn iou(a: PyBox, b: PyBox) -> PyResult<f64> {
    Ok(core_iou(&bbox(a)?, &bbox(b)?))
}

#[pyfunction]
fn center_error(a: PyBox, b: PyBox) -> PyResult<f64> {
    Ok(core_center_error(&bbox(a)?, &bbox(b)?))
}

/// Dict with `op`, `dp`, `auc`, `success_curve`, `ious` and `center_errors`.
#[pyfunction]
fn compute_metrics<'py>(py: Python<'py>, predictions: Vec<PyBox>, ground_truth: Vec<PyBox>) -> PyResult<Bound<'py, PyDict>> {
    let p = predictions.into_iter().map(bbox).collect::<PyResult<Vec<_>>>()?;
    let g = ground_truth.into_iter().map(bbox).collect::<PyResult<Vec<_>>>()?;
    let m = core_compute_metrics(&p, &g).map_err(to_py_err)?;
    let d = PyDict::new(py);
    d.set_item("op", m.op)?;
    d.set_item("dp", m.dp)?;
    d.set_item("auc", m.auc)?;
    d.set_item("success_curve", m.success_curve)?;
    d.set_item("ious", m.ious)?;
    d.set_item("center_errors", m.center_errors)?;
    Ok(d)
}

/// The 12 perturbed initial boxes: 8 shifts, then 4 rescalings.
#[pyfunction]
fn sre_initializations(gt: PyBox) -> PyResult<Vec<PyBox>> {
    Ok(generate_sre_initializations(&bbox(gt)?).iter().map(tuple).collect())
}

#[pyfunction]
fn tre_starts(num_frames: usize) -> Vec<usize> {
    generate_tre_starts(num_frames)
}

/// Separable Hann window, row-major.
#[pyfunction]
fn hann(dims: Vec<usize>) -> PyResult<Vec<f64>> {
    Ok(hann_window(&dims).map_err(to_py_err)?.into_values())
}

/// Wrapped Gaussian peaked at index zero, row-major.
#[pyfunction]
fn gaussian(dims: Vec<usize>, sigmas: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(gaussian_response(&dims, &sigmas).map_err(to_py_err)?.into_values())
}

/// Trigonometric interpolation of real samples onto a finer grid.
#[pyfunction]
fn interpolate(values: Vec<f64>, dims: Vec<usize>, target_dims: Vec<usize>) -> PyResult<Vec<f64>> {
    let grid = RealGrid::new(&dims, values).map_err(to_py_err)?;
    let spectrum = dft_forward_real(&grid).map_err(to_py_err)?;
    Ok(interpolate_scores(&spectrum, &target_dims).map_err(to_py_err)?.into_values())
}

/// Renders a built-in synthetic sequence. Returns a dict with `name`,
/// `width`, `height`, `frames` (list of bytes) and `ground_truth`.
#[pyfunction]
#[pyo3(signature = (name = "zoom", seed = 1))]
fn synthetic<'py>(py: Python<'py>, name: &str, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let spec = SyntheticSpec::builtin(name, seed).ok_or_else(|| {
        PyValueError::new_err(format!(
            "unknown built-in sequence '{name}'; available: {}",
            SyntheticSpec::BUILTINS.join(", ")
        ))
    })?;
    let seq = render_synthetic(&spec).map_err(to_py_err)?;
    let d = PyDict::new(py);
    d.set_item("name", &seq.name)?;
    d.set_item("width", seq.frames[0].width())?;
    d.set_item("height", seq.frames[0].height())?;
    let frames: Vec<Bound<'py, pyo3::types::PyBytes>> = seq
        .frames
        .iter()
        .map(|f| pyo3::types::PyBytes::new(py, &f.to_luma8()))
        .collect();
    d.set_item("frames", frames)?;
    d.set_item("ground_truth", seq.ground_truth.iter().map(tuple).collect::<Vec<_>>())?;
    Ok(d)
}

#[pymodule]
fn dcftrack(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Tracker>()?;
    m.add_function(wrap_pyfunction!(tracker_kinds, m)?)?;
    m.add_function(wrap_pyfunction!(iou, m)?)?;
    m.add_function(wrap_pyfunction!(center_error, m)?)?;
    m.add_function(wrap_pyfunction!(compute_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(sre_initializations, m)?)?;
    m.add_function(wrap_pyfunction!(tre_starts, m)?)?;
    m.add_function(wrap_pyfunction!(hann, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(interpolate, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic, m)?)?;
    Ok(())
}
