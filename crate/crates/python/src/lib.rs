//! Python bindings. Images cross the boundary as raw row-major `bytes`
//! (`height * width * channels`) or as encoded PNG/JPEG/BMP files.

use std::collections::BTreeMap;

use annulus_scan::metrics::{self, Polygon2D};
use annulus_scan::params::{ConfigEcho, SectorParamsFile};
use annulus_scan::raster::{decode_any, decode_any_file, encode, encode_png_bytes};
use annulus_scan::resample::{self, footprint, LinearImage};
use annulus_scan::synth::{self, CorruptionSpec, GridCase, SectorSpec};
use annulus_scan::{
    extract_gray, AnnulusSector, AnyImage, ExtractConfig, Interpolation, LineariseOptions, Point, RansacParams, Raster,
};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;

create_exception!(annulus_scan_py, AnnulusScanError, PyValueError);

fn to_py(e: annulus_scan::Error) -> PyErr {
    AnnulusScanError::new_err(format!("{}: {e}", e.code()))
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(format!("invalid {what}: {e}")))
}

fn interpolation(name: &str) -> PyResult<Interpolation> {
    match name {
        "spline" => Ok(Interpolation::Spline),
        "bilinear" => Ok(Interpolation::Bilinear),
        other => Err(PyValueError::new_err(format!(
            "interp must be 'spline' or 'bilinear', got '{other}'"
        ))),
    }
}

/// An 8-bit grayscale or RGB raster.
#[pyclass(frozen, module = "annulus_scan_py", name = "Image")]
pub struct PyImage {
    inner: AnyImage,
}

#[pymethods]
impl PyImage {
    #[new]
    fn new(height: usize, width: usize, channels: usize, data: &[u8]) -> PyResult<Self> {
        AnyImage::from_raw(height, width, channels, data.to_vec())
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn open(path: &str) -> PyResult<Self> {
        decode_any_file(path).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn decode(encoded: &[u8]) -> PyResult<Self> {
        decode_any(encoded).map(|inner| Self { inner }).map_err(to_py)
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn channels(&self) -> usize {
        self.inner.channels()
    }

    /// Raw row-major pixels.
    fn data<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.inner.data())
    }

    fn to_png<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &encode_png_bytes(&self.inner))
    }

    fn save(&self, path: &str) -> PyResult<()> {
        encode(&self.inner, path).map_err(to_py)
    }

    fn to_gray(&self) -> Self {
        Self {
            inner: AnyImage::Gray(self.inner.to_gray()),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "Image(height={}, width={}, channels={})",
            self.height(),
            self.width(),
            self.channels()
        )
    }
}

/// Annulus-sector geometry. Angles are in radians except `theta_deg`.
#[pyclass(frozen, module = "annulus_scan_py", name = "Sector")]
pub struct PySector {
    inner: AnnulusSector,
}

#[pymethods]
impl PySector {
    #[staticmethod]
    #[pyo3(signature = (origin, theta_deg, r_inner, r_outer, source_dims))]
    fn from_geometry(
        origin: (f64, f64),
        theta_deg: f64,
        r_inner: f64,
        r_outer: f64,
        source_dims: (usize, usize),
    ) -> Self {
        Self {
            inner: AnnulusSector::from_geometry(
                Point::new(origin.0, origin.1),
                theta_deg.to_radians(),
                r_inner,
                r_outer,
                source_dims,
            ),
        }
    }

    /// Parse a parameter file written by `extract` or `synth`.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        SectorParamsFile::from_json(text)
            .map(|p| Self { inner: p.sector() })
            .map_err(to_py)
    }

    #[pyo3(signature = (image_id = "image"))]
    fn to_json(&self, image_id: &str) -> String {
        let echo = ConfigEcho::new(&RansacParams::default(), Interpolation::default(), false);
        SectorParamsFile::new(image_id, &self.inner, echo).to_json()
    }

    #[getter]
    fn origin(&self) -> (f64, f64) {
        (self.inner.origin.row, self.inner.origin.col)
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta
    }

    #[getter]
    fn theta_deg(&self) -> f64 {
        self.inner.theta.to_degrees()
    }

    #[getter]
    fn r_inner(&self) -> f64 {
        self.inner.r_inner
    }

    #[getter]
    fn r_outer(&self) -> f64 {
        self.inner.r_outer
    }

    #[getter]
    fn axis_col(&self) -> f64 {
        self.inner.axis_col
    }

    #[getter]
    fn cropped_top(&self) -> bool {
        self.inner.cropped_top
    }

    #[getter]
    fn source_dims(&self) -> (usize, usize) {
        self.inner.source_dims
    }

    /// The seven key points as `{name: (row, col)}`.
    #[getter]
    fn keypoints(&self) -> BTreeMap<&'static str, (f64, f64)> {
        self.inner.keypoints.named().map(|(k, p)| (k, (p.row, p.col))).collect()
    }

    fn contains(&self, row: f64, col: f64) -> bool {
        self.inner.contains(&Point::new(row, col))
    }

    fn __repr__(&self) -> String {
        let s = &self.inner;
        format!(
            "Sector(origin=({:.2}, {:.2}), theta_deg={:.3}, r_inner={:.2}, r_outer={:.2})",
            s.origin.row,
            s.origin.col,
            s.theta.to_degrees(),
            s.r_inner,
            s.r_outer
        )
    }
}

/// Estimate the sector of a convex ultrasound image.
#[pyfunction]
#[pyo3(signature = (image, seed = 7, ransac_threshold = 2.0, ransac_iters = 1000, closing = false))]
fn extract(
    image: &PyImage,
    seed: u64,
    ransac_threshold: f64,
    ransac_iters: usize,
    closing: bool,
) -> PyResult<PySector> {
    let config = ExtractConfig {
        ransac: RansacParams {
            inlier_threshold: ransac_threshold,
            iterations: ransac_iters,
            seed,
        },
        closing,
    };
    extract_gray(&image.inner.to_gray(), &config)
        .map(|ex| PySector { inner: ex.sector })
        .map_err(to_py)
}

/// Resample the plane along its scan lines.
#[pyfunction]
#[pyo3(signature = (image, sector, interp = "spline", downsample = 1.0))]
fn linearise(image: &PyImage, sector: &PySector, interp: &str, downsample: f64) -> PyResult<PyImage> {
    let opts = LineariseOptions {
        interp: interpolation(interp)?,
        downsample,
    };
    let lin = resample::linearise(&image.inner, &sector.inner, &opts).map_err(to_py)?;
    Ok(PyImage { inner: lin.to_image() })
}

/// Project a linearised image back onto the sector's source canvas.
#[pyfunction]
#[pyo3(signature = (linear, sector, interp = "spline"))]
fn invert(linear: &PyImage, sector: &PySector, interp: &str) -> PyResult<PyImage> {
    let lin = LinearImage::from_raster(&linear.inner, sector.inner.clone());
    Ok(PyImage {
        inner: resample::invert(&lin, sector.inner.source_dims, interpolation(interp)?),
    })
}

/// Normalised squared difference of two images over the sector footprint.
#[pyfunction]
fn roundtrip_mse(a: &PyImage, b: &PyImage, sector: &PySector) -> PyResult<f64> {
    metrics::roundtrip_mse(&a.inner.to_gray(), &b.inner.to_gray(), &footprint(&sector.inner)).map_err(to_py)
}

fn polygon(points: Vec<(f64, f64)>) -> Polygon2D {
    Polygon2D::new(points.into_iter().map(|(r, c)| Point::new(r, c)).collect())
}

#[pyfunction]
fn circularity(points: Vec<(f64, f64)>) -> PyResult<f64> {
    metrics::circularity(&polygon(points)).map_err(to_py)
}

#[pyfunction]
fn procrustes_disparity(a: Vec<(f64, f64)>, b: Vec<(f64, f64)>) -> PyResult<f64> {
    metrics::procrustes_disparity(&polygon(a), &polygon(b)).map_err(to_py)
}

#[pyfunction]
fn ms_ssim(a: &PyImage, b: &PyImage) -> PyResult<f64> {
    metrics::ms_ssim(&a.inner.to_gray(), &b.inner.to_gray()).map_err(to_py)
}

/// Render a synthetic sector from a JSON specification, optionally corrupted.
#[pyfunction]
#[pyo3(signature = (spec_json, corruption_json = None, seed = 0))]
fn render(spec_json: &str, corruption_json: Option<&str>, seed: u64) -> PyResult<(PyImage, PySector)> {
    let spec: SectorSpec = parse_json(spec_json, "sector spec")?;
    let corruption: Option<CorruptionSpec> = corruption_json.map(|c| parse_json(c, "corruption spec")).transpose()?;
    let case = GridCase {
        id: "render".into(),
        spec,
        corruption,
        seed,
    };
    let (img, truth) = case.render().map_err(to_py)?;
    Ok((
        PyImage {
            inner: AnyImage::Gray(img),
        },
        PySector { inner: truth },
    ))
}

/// Identifiers of the standard grids, `"clean"` or `"corrupted"`.
#[pyfunction]
fn grid_cases(set: &str) -> PyResult<Vec<String>> {
    let cases = match set {
        "clean" => synth::clean_grid(),
        "corrupted" => synth::corrupted_grid(),
        other => return Err(PyValueError::new_err(format!("unknown grid '{other}'"))),
    };
    cases
        .iter()
        .map(|c| serde_json::to_string(c).map_err(|e| PyValueError::new_err(e.to_string())))
        .collect()
}

#[pymodule]
fn annulus_scan_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("AnnulusScanError", m.py().get_type::<AnnulusScanError>())?;
    m.add_class::<PyImage>()?;
    m.add_class::<PySector>()?;
    m.add_function(wrap_pyfunction!(extract, m)?)?;
    m.add_function(wrap_pyfunction!(linearise, m)?)?;
    m.add_function(wrap_pyfunction!(invert, m)?)?;
    m.add_function(wrap_pyfunction!(roundtrip_mse, m)?)?;
    m.add_function(wrap_pyfunction!(circularity, m)?)?;
    m.add_function(wrap_pyfunction!(procrustes_disparity, m)?)?;
    m.add_function(wrap_pyfunction!(ms_ssim, m)?)?;
    m.add_function(wrap_pyfunction!(render, m)?)?;
    m.add_function(wrap_pyfunction!(grid_cases, m)?)?;
    Ok(())
}
