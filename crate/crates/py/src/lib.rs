//! Python bindings (`difpy`).
//!
//! Images cross the boundary as flat, channel-interleaved lists of floats
//! (`RGBRGB...`, row-major) together with their width, height and channel
//! count. Errors surface as `ValueError`, or `OSError` for file problems.

use dif_core::color::Chroma;
use dif_core::forgery::{ConsistencyParams, RegionSpec};
use dif_core::io::{self, BitDepth};
use dif_core::synth::{self, SceneSpec};
use dif_core::video::{self, ReferenceSpec};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: dif_core::Error) -> PyErr {
    match e {
        dif_core::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// A floating-point image with samples nominally in `[0, 1]`.
#[pyclass(name = "FloatImage", module = "difpy", skip_from_py_object)]
#[derive(Clone)]
struct PyFloatImage {
    inner: dif_core::FloatImage,
}

impl From<dif_core::FloatImage> for PyFloatImage {
    fn from(inner: dif_core::FloatImage) -> Self {
        Self { inner }
    }
}

#[pymethods]
impl PyFloatImage {
    #[new]
    fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> PyResult<Self> {
        dif_core::FloatImage::from_interleaved(width, height, channels, &data)
            .map(Self::from)
            .map_err(py_err)
    }

    #[staticmethod]
    fn filled(width: usize, height: usize, channels: usize, value: f64) -> PyResult<Self> {
        dif_core::FloatImage::filled(width, height, channels, value)
            .map(Self::from)
            .map_err(py_err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn channels(&self) -> usize {
        self.inner.channels()
    }

    #[getter]
    fn shape(&self) -> (usize, usize, usize) {
        self.inner.shape()
    }

    /// Interleaved samples.
    fn to_list(&self) -> Vec<f64> {
        self.inner.to_interleaved()
    }

    fn get(&self, channel: usize, x: usize, y: usize) -> PyResult<f64> {
        let (w, h, c) = self.inner.shape();
        if channel >= c || x >= w || y >= h {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.inner.get(channel, x, y))
    }

    /// `(value, (channel, x, y))` of the first maximum.
    fn argmax(&self) -> (f64, (usize, usize, usize)) {
        self.inner.argmax()
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn __eq__(&self, other: PyRef<'_, PyFloatImage>) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        let (w, h, c) = self.inner.shape();
        format!("FloatImage(width={w}, height={h}, channels={c})")
    }
}

/// A binary pixel mask.
#[pyclass(name = "Mask", module = "difpy", skip_from_py_object)]
#[derive(Clone)]
struct PyMask {
    inner: dif_core::Mask,
}

#[pymethods]
impl PyMask {
    #[new]
    fn new(width: usize, height: usize, bits: Vec<bool>) -> PyResult<Self> {
        dif_core::Mask::new(width, height, bits)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn to_list(&self) -> Vec<bool> {
        self.inner.bits().to_vec()
    }

    fn count(&self) -> usize {
        self.inner.count()
    }

    fn get(&self, x: usize, y: usize) -> PyResult<bool> {
        if x >= self.inner.width() || y >= self.inner.height() {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.inner.get(x, y))
    }

    fn iou(&self, other: PyRef<'_, PyMask>) -> PyResult<f64> {
        if other.inner.width() != self.inner.width() || other.inner.height() != self.inner.height() {
            return Err(PyValueError::new_err("mask shapes differ"));
        }
        Ok(self.inner.iou(&other.inner))
    }

    fn __repr__(&self) -> String {
        format!("Mask(width={}, height={}, count={})", self.inner.width(), self.inner.height(), self.inner.count())
    }
}

/// Spatial and temporal filtering parameters.
#[pyclass(name = "AnalysisParams", module = "difpy", skip_from_py_object)]
#[derive(Clone)]
struct PyParams {
    #[pyo3(get, set)]
    sigma: f64,
    #[pyo3(get, set)]
    truncation_radius: Option<usize>,
    #[pyo3(get, set)]
    temporal_window: usize,
    #[pyo3(get, set)]
    zero_floor: f64,
}

impl PyParams {
    fn to_core(&self) -> PyResult<dif_core::AnalysisParams> {
        let params = dif_core::AnalysisParams {
            sigma: self.sigma,
            truncation_radius: self.truncation_radius,
            temporal_window: self.temporal_window,
            zero_floor: self.zero_floor,
        };
        params.validate().map_err(py_err)?;
        Ok(params)
    }
}

fn params_or_default(params: Option<PyRef<'_, PyParams>>) -> PyResult<dif_core::AnalysisParams> {
    params.map_or_else(|| Ok(dif_core::AnalysisParams::default()), |p| p.to_core())
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (
        sigma = dif_core::params::DEFAULT_SIGMA,
        truncation_radius = None,
        temporal_window = dif_core::params::DEFAULT_TEMPORAL_WINDOW,
        zero_floor = dif_core::params::DEFAULT_ZERO_FLOOR,
    ))]
    fn new(sigma: f64, truncation_radius: Option<usize>, temporal_window: usize, zero_floor: f64) -> PyResult<Self> {
        let p = Self {
            sigma,
            truncation_radius,
            temporal_window,
            zero_floor,
        };
        p.to_core()?;
        Ok(p)
    }

    /// Effective kernel half-width.
    fn radius(&self) -> PyResult<usize> {
        Ok(self.to_core()?.radius())
    }

    fn __repr__(&self) -> String {
        format!(
            "AnalysisParams(sigma={}, truncation_radius={:?}, temporal_window={}, zero_floor={})",
            self.sigma, self.truncation_radius, self.temporal_window, self.zero_floor
        )
    }
}

/// Amplified positive and negative difference images with their gains.
#[pyclass(name = "AmplifiedPair", module = "difpy", skip_from_py_object)]
#[derive(Clone)]
struct PyPair {
    inner: dif_core::AmplifiedPair,
}

#[pymethods]
impl PyPair {
    #[getter]
    fn d_plus(&self) -> PyFloatImage {
        self.inner.d_plus.clone().into()
    }

    /// Magnitudes of the negative side.
    #[getter]
    fn d_minus(&self) -> PyFloatImage {
        self.inner.d_minus.clone().into()
    }

    #[getter]
    fn gain_plus(&self) -> f64 {
        self.inner.gain_plus
    }

    #[getter]
    fn gain_minus(&self) -> f64 {
        self.inner.gain_minus
    }

    #[getter]
    fn degenerate_plus(&self) -> bool {
        self.inner.degenerate_plus
    }

    #[getter]
    fn degenerate_minus(&self) -> bool {
        self.inner.degenerate_minus
    }

    /// `(channel, x, y)` of the `D+` maximum, `None` when degenerate.
    fn argmax_plus(&self) -> Option<(usize, usize, usize)> {
        self.inner.argmax_plus()
    }

    fn argmax_minus(&self) -> Option<(usize, usize, usize)> {
        self.inner.argmax_minus()
    }

    fn __repr__(&self) -> String {
        format!(
            "AmplifiedPair(gain_plus={}, gain_minus={}, degenerate_plus={}, degenerate_minus={})",
            self.inner.gain_plus, self.inner.gain_minus, self.inner.degenerate_plus, self.inner.degenerate_minus
        )
    }
}

#[pyclass(name = "VideoResult", module = "difpy")]
struct PyVideoResult {
    inner: video::VideoResult,
}

#[pymethods]
impl PyVideoResult {
    #[getter]
    fn frame_indices(&self) -> Vec<i64> {
        self.inner.frame_indices.clone()
    }

    #[getter]
    fn energy(&self) -> Vec<f64> {
        self.inner.energy.clone()
    }

    #[getter]
    fn reference_used(&self) -> Option<PyFloatImage> {
        self.inner.reference_used.clone().map(Into::into)
    }

    fn __len__(&self) -> usize {
        self.inner.per_frame.len()
    }

    fn pair(&self, position: usize) -> PyResult<PyPair> {
        self.inner
            .per_frame
            .get(position)
            .map(|p| PyPair { inner: p.clone() })
            .ok_or_else(|| PyValueError::new_err("position out of range"))
    }

    /// Frame index following the largest energy increase.
    fn change_point(&self) -> Option<i64> {
        self.inner.change_point()
    }
}

#[pyclass(name = "ConsistencyReport", module = "difpy")]
struct PyConsistency {
    #[pyo3(get)]
    evidence_chroma: Option<(f64, f64)>,
    #[pyo3(get)]
    query_chroma: (f64, f64),
    #[pyo3(get)]
    chroma_distance: Option<f64>,
    #[pyo3(get)]
    evidence_mask_fraction: f64,
    /// `"consistent"`, `"inconsistent"` or `"insufficient-evidence"`.
    #[pyo3(get)]
    verdict: String,
    #[pyo3(get)]
    evidence_mask: PyMask,
    #[pyo3(get)]
    pair: PyPair,
}

#[pymethods]
impl PyConsistency {
    fn __repr__(&self) -> String {
        format!("ConsistencyReport(verdict={:?}, chroma_distance={:?})", self.verdict, self.chroma_distance)
    }
}

fn chroma_tuple(c: Chroma) -> (f64, f64) {
    (c.r, c.g)
}

#[pyfunction]
fn subtract(p: PyRef<'_, PyFloatImage>, p_r: PyRef<'_, PyFloatImage>) -> PyResult<PyFloatImage> {
    dif_core::subtract(&p.inner, &p_r.inner).map(Into::into).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (image, sigma, radius = None))]
fn spatial_filter(image: PyRef<'_, PyFloatImage>, sigma: f64, radius: Option<usize>) -> PyResult<PyFloatImage> {
    let radius = radius.unwrap_or((3.0 * sigma).ceil() as usize);
    let kernel = dif_core::GaussianKernel::new(sigma, radius).map_err(py_err)?;
    Ok(dif_core::spatial_filter(&image.inner, &kernel).into())
}

#[pyfunction]
#[pyo3(signature = (d, zero_floor = dif_core::params::DEFAULT_ZERO_FLOOR))]
fn amplify_split(d: PyRef<'_, PyFloatImage>, zero_floor: f64) -> PyResult<PyPair> {
    dif_core::amplify_split(&d.inner, zero_floor)
        .map(|inner| PyPair { inner })
        .map_err(py_err)
}

/// Subtract, filter and amplify a scene against its reference.
#[pyfunction]
#[pyo3(signature = (p, p_r, params = None))]
fn analyze_pair(
    py: Python<'_>,
    p: PyRef<'_, PyFloatImage>,
    p_r: PyRef<'_, PyFloatImage>,
    params: Option<PyRef<'_, PyParams>>,
) -> PyResult<PyPair> {
    let params = params_or_default(params)?;
    let (p, p_r) = (&p.inner, &p_r.inner);
    py.detach(|| dif_core::analyze_pair(p, p_r, &params))
        .map(|inner| PyPair { inner })
        .map_err(py_err)
}

/// Analyze frames against a baseline. Give exactly one of `ref_range`
/// (inclusive frame-index pair), `ref_image` or `adjacent_lag`. Frames are
/// indexed from 0 in list order.
#[pyfunction]
#[pyo3(signature = (frames, params = None, ref_range = None, ref_image = None, adjacent_lag = None, analyze_range = None))]
fn analyze_video(
    py: Python<'_>,
    frames: Vec<PyRef<'_, PyFloatImage>>,
    params: Option<PyRef<'_, PyParams>>,
    ref_range: Option<(i64, i64)>,
    ref_image: Option<PyRef<'_, PyFloatImage>>,
    adjacent_lag: Option<usize>,
    analyze_range: Option<(i64, i64)>,
) -> PyResult<PyVideoResult> {
    let params = params_or_default(params)?;
    let reference = match (ref_range, ref_image, adjacent_lag) {
        (Some((start, end)), None, None) => ReferenceSpec::FrameRangeAverage { start, end },
        (None, Some(img), None) => ReferenceSpec::ExternalImage(img.inner.clone()),
        (None, None, Some(lag)) => ReferenceSpec::AdjacentFrame { lag },
        _ => {
            return Err(PyValueError::new_err(
                "give exactly one of ref_range, ref_image, adjacent_lag",
            ))
        }
    };
    let images = frames.iter().map(|f| f.inner.clone()).collect();
    let stream = video::FrameStream::from_images(images).map_err(py_err)?;
    py.detach(|| video::analyze_video(&stream, &reference, &params, analyze_range))
        .map(|inner| PyVideoResult { inner })
        .map_err(py_err)
}

/// Check whether the colors inside a suspect rectangle `(x, y, w, h)` (or
/// mask) agree with the latent evidence recovered from the rest of the frame.
#[pyfunction]
#[pyo3(signature = (
    p, p_r, rect = None, mask = None, params = None,
    evidence_threshold = 0.5, tau = 0.15, min_support = 1e-4,
))]
#[allow(clippy::too_many_arguments)]
fn forgery_score(
    py: Python<'_>,
    p: PyRef<'_, PyFloatImage>,
    p_r: PyRef<'_, PyFloatImage>,
    rect: Option<(usize, usize, usize, usize)>,
    mask: Option<PyRef<'_, PyMask>>,
    params: Option<PyRef<'_, PyParams>>,
    evidence_threshold: f64,
    tau: f64,
    min_support: f64,
) -> PyResult<PyConsistency> {
    let params = params_or_default(params)?;
    let region = match (rect, mask) {
        (Some((x, y, w, h)), None) => RegionSpec::Rect { x, y, w, h },
        (None, Some(m)) => RegionSpec::Mask(m.inner.clone()),
        _ => return Err(PyValueError::new_err("give exactly one of rect, mask")),
    };
    let consistency = ConsistencyParams {
        evidence_threshold,
        tau,
        min_support,
    };
    let (p, p_r) = (&p.inner, &p_r.inner);
    let out = py
        .detach(|| dif_core::forgery_score(p, p_r, &region, &params, &consistency))
        .map_err(py_err)?;
    let r = out.report;
    Ok(PyConsistency {
        evidence_chroma: r.evidence_chroma.map(chroma_tuple),
        query_chroma: chroma_tuple(r.query_chroma),
        chroma_distance: r.chroma_distance,
        evidence_mask_fraction: r.evidence_mask_fraction,
        verdict: r.verdict.to_string(),
        evidence_mask: PyMask { inner: out.evidence_mask },
        pair: PyPair { inner: out.pair },
    })
}

/// Render a scene described in the text config format; returns
/// `(p, p_r, truth_masks)`.
#[pyfunction]
fn generate_pair(spec: &str) -> PyResult<(PyFloatImage, PyFloatImage, Vec<PyMask>)> {
    let spec: SceneSpec = spec.parse().map_err(py_err)?;
    let scene = synth::generate_pair(&spec).map_err(py_err)?;
    Ok((
        scene.p.into(),
        scene.p_r.into(),
        scene.truth.into_iter().map(|inner| PyMask { inner }).collect(),
    ))
}

/// Render `frames` frames of a scene whose evidence appears at `entry`;
/// returns `(frames, truth_masks)`.
#[pyfunction]
fn generate_stream(spec: &str, frames: usize, entry: usize) -> PyResult<(Vec<PyFloatImage>, Vec<PyMask>)> {
    let spec: SceneSpec = spec.parse().map_err(py_err)?;
    let s = synth::generate_stream(&spec, frames, entry).map_err(py_err)?;
    Ok((
        s.stream.frames().iter().map(|f| f.image.clone().into()).collect(),
        s.truth.into_iter().map(|inner| PyMask { inner }).collect(),
    ))
}

/// Score a pair against a truth mask; returns a dict with `iou`,
/// `argmax_hit` and `chroma_error`.
#[pyfunction]
#[pyo3(signature = (pair, truth, threshold = 0.5, chroma = None))]
fn evaluate_recovery<'py>(
    py: Python<'py>,
    pair: PyRef<'_, PyPair>,
    truth: PyRef<'_, PyMask>,
    threshold: f64,
    chroma: Option<(f64, f64, f64)>,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let chroma = chroma.map(|(r, g, b)| Chroma::from_rgb(r, g, b));
    let m = synth::evaluate_recovery(&pair.inner, &truth.inner, threshold, chroma).map_err(py_err)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("iou", m.iou)?;
    d.set_item("argmax_hit", m.argmax_hit)?;
    d.set_item("chroma_error", m.chroma_error)?;
    Ok(d)
}

/// Read a PNG/PGM/PPM raster or a `.difd` float dump.
#[pyfunction]
fn read_image(path: &str) -> PyResult<PyFloatImage> {
    io::read_any(path).map(Into::into).map_err(py_err)
}

/// Write a PNG/PGM/PPM raster (chosen by extension) at 8 or 16 bits.
#[pyfunction]
#[pyo3(signature = (image, path, bits = 8))]
fn write_image(image: PyRef<'_, PyFloatImage>, path: &str, bits: u8) -> PyResult<()> {
    let depth = BitDepth::from_bits(bits).map_err(py_err)?;
    io::write_image(&image.inner, path, depth).map_err(py_err)
}

#[pyfunction]
fn write_float_dump(image: PyRef<'_, PyFloatImage>, path: &str) -> PyResult<()> {
    io::write_float_dump(&image.inner, path).map_err(py_err)
}

#[pyfunction]
fn read_float_dump(path: &str) -> PyResult<PyFloatImage> {
    io::read_float_dump(path).map(Into::into).map_err(py_err)
}

#[pymodule]
fn difpy(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFloatImage>()?;
    m.add_class::<PyMask>()?;
    m.add_class::<PyParams>()?;
    m.add_class::<PyPair>()?;
    m.add_class::<PyVideoResult>()?;
    m.add_class::<PyConsistency>()?;
    m.add_function(wrap_pyfunction!(subtract, m)?)?;
    m.add_function(wrap_pyfunction!(spatial_filter, m)?)?;
    m.add_function(wrap_pyfunction!(amplify_split, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_pair, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_video, m)?)?;
    m.add_function(wrap_pyfunction!(forgery_score, m)?)?;
    m.add_function(wrap_pyfunction!(generate_pair, m)?)?;
    m.add_function(wrap_pyfunction!(generate_stream, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_recovery, m)?)?;
    m.add_function(wrap_pyfunction!(read_image, m)?)?;
    m.add_function(wrap_pyfunction!(write_image, m)?)?;
    m.add_function(wrap_pyfunction!(write_float_dump, m)?)?;
    m.add_function(wrap_pyfunction!(read_float_dump, m)?)?;
    Ok(())
}
