//! Python bindings. Structured values cross the boundary as plain dicts and
//! lists with the same field names as the JSON the CLI reads and writes.

use aerialscan::calibration_qc::{self as qc, CalibrationGeometry, Distortions, ScanLayout};
use aerialscan::economics::{self, CostParams, Gbp, Scenario};
use aerialscan::photogrammetry::{self as pg, ByteConvention, LinePairResolution, ScaleRatio};
use aerialscan::preservation::{self, IssueCorrelation, IssueRates, PrintCondition, SamplerOptions};
use aerialscan::scan_cell::{self, CellConfig, HumanParams, RoboticParams, ThroughputMode, ThroughputReport};
use aerialscan::{reproduce, sortie_id};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_error)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(value_error)
}

fn from_py_or_default<T: DeserializeOwned + Default>(obj: Option<&Bound<'_, PyAny>>) -> PyResult<T> {
    match obj {
        Some(o) if !o.is_none() => from_py(o),
        _ => Ok(T::default()),
    }
}

// ---------------------------------------------------------------- scan cell

/// Simulates one robot cell. Returns `(trace_csv, report)`.
#[pyfunction]
#[pyo3(signature = (seed, hours, config=None))]
fn simulate<'py>(
    py: Python<'py>,
    seed: u64,
    hours: f64,
    config: Option<&Bound<'py, PyAny>>,
) -> PyResult<(String, Bound<'py, PyAny>)> {
    let config: CellConfig = from_py_or_default(config)?;
    let (trace, report) = scan_cell::simulate(&config, seed, hours).map_err(value_error)?;
    trace.check_all(&config).map_err(value_error)?;
    Ok((trace.to_csv_string(), to_py(py, &report)?))
}

/// Default cell configuration as a dict.
#[pyfunction]
fn default_cell_config(py: Python<'_>) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &CellConfig::default())
}

fn mode_from(mode: &str, params: Option<&Bound<'_, PyAny>>) -> PyResult<ThroughputMode> {
    Ok(match mode {
        "human" | "human_operated" => ThroughputMode::HumanOperated(from_py_or_default::<HumanParams>(params)?),
        "robotic" => ThroughputMode::Robotic(from_py_or_default::<RoboticParams>(params)?),
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    })
}

/// Closed-form rates for `"human"` or `"robotic"` operation.
#[pyfunction]
#[pyo3(signature = (mode, params=None))]
fn theoretical_throughput<'py>(
    py: Python<'py>,
    mode: &str,
    params: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let report = scan_cell::theoretical_throughput(&mode_from(mode, params)?).map_err(value_error)?;
    to_py(py, &report)
}

/// Robotic over manual productivity; defaults to the theoretical reports.
#[pyfunction]
#[pyo3(signature = (robotic=None, manual=None))]
fn productivity_ratio<'py>(
    py: Python<'py>,
    robotic: Option<&Bound<'py, PyAny>>,
    manual: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let load = |obj: Option<&Bound<'py, PyAny>>, mode: ThroughputMode| -> PyResult<ThroughputReport> {
        match obj {
            Some(o) if !o.is_none() => from_py(o),
            _ => scan_cell::theoretical_throughput(&mode).map_err(value_error),
        }
    };
    let r = load(robotic, ThroughputMode::Robotic(RoboticParams::default()))?;
    let m = load(manual, ThroughputMode::HumanOperated(HumanParams::default()))?;
    to_py(py, &scan_cell::productivity_ratio(&r, &m).map_err(value_error)?)
}

#[pyfunction]
#[pyo3(signature = (daily, weekly, scanners=14))]
fn observed_vs_theoretical(py: Python<'_>, daily: f64, weekly: f64, scanners: u32) -> PyResult<Bound<'_, PyAny>> {
    let fleet = RoboticParams {
        scanners,
        ..Default::default()
    };
    to_py(py, &scan_cell::observed_vs_theoretical(daily, weekly, &fleet).map_err(value_error)?)
}

// ---------------------------------------------------------------- economics

/// Fixed and per-scan cost of one pipeline, in pounds.
#[pyclass(name = "CostParams", frozen, from_py_object)]
#[derive(Clone)]
struct PyCostParams {
    inner: CostParams,
}

#[pymethods]
impl PyCostParams {
    #[new]
    fn new(name: &str, fixed: f64, per_scan: f64) -> PyResult<Self> {
        let inner = CostParams::simple(name, Gbp::from_f64(fixed), Gbp::from_f64(per_scan));
        inner.validate().map_err(value_error)?;
        Ok(Self { inner })
    }

    /// `"robotic"` or `"manual"` benchmark.
    #[staticmethod]
    fn benchmark(name: &str) -> PyResult<Self> {
        let scenario = match name {
            "robotic" => Scenario::RoboticBenchmark,
            "manual" => Scenario::ManualBenchmark,
            other => return Err(PyValueError::new_err(format!("unknown benchmark {other:?}"))),
        };
        Ok(Self {
            inner: economics::benchmark(scenario),
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn fixed(&self) -> f64 {
        self.inner.fixed().to_f64()
    }

    #[getter]
    fn per_scan(&self) -> f64 {
        self.inner.per_scan_variable.to_f64()
    }

    fn total_cost(&self, n: u64) -> f64 {
        self.inner.total_cost(n)
    }

    fn cost_per_scan(&self, n: u64) -> PyResult<f64> {
        economics::cost_per_scan(&self.inner, n).map_err(value_error)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "CostParams(name={:?}, fixed={}, per_scan={})",
            self.inner.name,
            self.inner.fixed(),
            self.inner.per_scan_variable
        )
    }
}

#[pyfunction]
fn break_even(a: &PyCostParams, b: &PyCostParams) -> PyResult<u64> {
    economics::break_even(&a.inner, &b.inner).map_err(value_error)
}

#[pyfunction]
fn cost_halving_point(a: &PyCostParams, b: &PyCostParams) -> PyResult<u64> {
    economics::cost_halving_point(&a.inner, &b.inner).map_err(value_error)
}

#[pyfunction]
fn weeks_to_volume(py: Python<'_>, scans: u64, weekly_capacity: u64) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &economics::weeks_to_volume(scans, weekly_capacity).map_err(value_error)?)
}

/// `[(n, cost_per_scan_a, cost_per_scan_b), ...]` over a geometric grid.
#[pyfunction]
#[pyo3(signature = (a, b, start=1_000, stop=10_000_000, points=61))]
fn cost_curve(a: &PyCostParams, b: &PyCostParams, start: u64, stop: u64, points: usize) -> PyResult<Vec<(u64, f64, f64)>> {
    let grid = economics::geometric_grid(start, stop, points);
    let curve = economics::cost_curve(&a.inner, &b.inner, &grid).map_err(value_error)?;
    Ok(curve.iter().map(|p| (p.n, p.cost_per_scan_a, p.cost_per_scan_b)).collect())
}

// ---------------------------------------------------------------- photogrammetry

fn resolution(lp_per_mm: f64) -> PyResult<LinePairResolution> {
    LinePairResolution::new(lp_per_mm).map_err(value_error)
}

/// Ground resolved distance in metres.
#[pyfunction]
fn ground_resolved_distance_m(lp_per_mm: f64, scale_denominator: f64) -> PyResult<f64> {
    let s = ScaleRatio::new(scale_denominator).map_err(value_error)?;
    Ok(pg::ground_resolved_distance(resolution(lp_per_mm)?, s).m())
}

/// `(min_um, max_um)` optimal scanning pixel band.
#[pyfunction]
fn optimal_pixel_range_um(lp_per_mm: f64) -> PyResult<(f64, f64)> {
    let r = pg::optimal_pixel_range(resolution(lp_per_mm)?);
    Ok((r.min.um(), r.max.um()))
}

#[pyfunction]
fn pixel_pitch_um(ppi: f64) -> PyResult<f64> {
    Ok(pg::pixel_pitch_from_ppi(ppi).map_err(value_error)?.um())
}

#[pyfunction]
fn sampling_adequacy(py: Python<'_>, ppi: f64, lp_per_mm: f64) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &pg::sampling_adequacy(ppi, resolution(lp_per_mm)?).map_err(value_error)?)
}

/// `(bytes, terabytes)`.
#[pyfunction]
#[pyo3(signature = (images, bytes_per_image, binary=false))]
fn storage_estimate(images: u64, bytes_per_image: u64, binary: bool) -> (u128, f64) {
    let convention = if binary {
        ByteConvention::Binary
    } else {
        ByteConvention::Decimal
    };
    let e = pg::storage_estimate(images, bytes_per_image, convention);
    (e.bytes, e.terabytes())
}

// ---------------------------------------------------------------- sortie ids

#[pyfunction]
#[pyo3(signature = (text, usaaf=false))]
fn parse_sortie_id<'py>(py: Python<'py>, text: &str, usaaf: bool) -> PyResult<Bound<'py, PyAny>> {
    let options = sortie_id::ParseOptions {
        us_army_air_force: usaaf,
    };
    to_py(py, &sortie_id::parse_with(text, options).map_err(value_error)?)
}

/// Canonical label text for a parsed record.
#[pyfunction]
fn format_sortie_id(record: &Bound<'_, PyAny>) -> PyResult<String> {
    let id: sortie_id::SortieId = from_py(record)?;
    id.validate().map_err(value_error)?;
    Ok(sortie_id::canonical_format(&id))
}

// ---------------------------------------------------------------- preservation

/// Remediation plan for a condition dict (missing fields mean "no issue").
#[pyfunction]
fn plan_remediation<'py>(py: Python<'py>, condition: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    let c: PrintCondition = from_py(condition)?;
    to_py(py, &preservation::plan_remediation(&c))
}

/// Samples `n` boxes and returns the aggregated rates.
#[pyfunction]
#[pyo3(signature = (n, seed, rates=None, rho=None))]
fn sample_rates<'py>(
    py: Python<'py>,
    n: usize,
    seed: u64,
    rates: Option<&Bound<'py, PyAny>>,
    rho: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let rates: IssueRates = from_py_or_default(rates)?;
    let options = SamplerOptions {
        correlation: rho.map(IssueCorrelation::exchangeable),
        ..Default::default()
    };
    let boxes = preservation::sample_boxes(n, seed, &rates, options).map_err(value_error)?;
    to_py(py, &preservation::aggregate_rates(&boxes).map_err(value_error)?)
}

#[pyfunction]
#[pyo3(signature = (rates=None))]
fn independent_any_intervention(rates: Option<&Bound<'_, PyAny>>) -> PyResult<f64> {
    let rates: IssueRates = from_py_or_default(rates)?;
    Ok(rates.independent_any_intervention())
}

// ---------------------------------------------------------------- calibration QC

/// 8-bit grayscale raster with its scan resolution.
#[pyclass(name = "GrayRaster", frozen, from_py_object)]
#[derive(Clone)]
struct PyGrayRaster {
    inner: qc::GrayRaster,
}

#[pymethods]
impl PyGrayRaster {
    #[new]
    fn new(width: usize, height: usize, ppi: u32, pixels: &[u8]) -> PyResult<Self> {
        let inner = qc::GrayRaster::new(width, height, ppi, pixels.to_vec()).map_err(value_error)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn read_pgm(path: std::path::PathBuf) -> PyResult<Self> {
        let inner = qc::GrayRaster::read_pgm(&path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        Ok(Self { inner })
    }

    fn write_pgm(&self, path: std::path::PathBuf) -> PyResult<()> {
        self.inner.write_pgm(&path).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height
    }

    #[getter]
    fn ppi(&self) -> u32 {
        self.inner.ppi
    }

    /// Row-major pixel bytes.
    fn pixels<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.pixels)
    }

    fn get(&self, x: usize, y: usize) -> PyResult<u8> {
        if x >= self.inner.width || y >= self.inner.height {
            return Err(PyValueError::new_err(format!("({x}, {y}) is outside the raster")));
        }
        Ok(self.inner.get(x, y))
    }

    fn __repr__(&self) -> String {
        format!("GrayRaster({}x{} @ {} ppi)", self.inner.width, self.inner.height, self.inner.ppi)
    }
}

fn distortions(scale_error: f64, noise: f64, blur: f64, seed: u64) -> Distortions {
    Distortions {
        scale_error_fraction: scale_error,
        noise_sigma: noise,
        blur_radius_px: blur,
        seed,
    }
}

#[pyfunction]
#[pyo3(signature = (ppi, scale_error=0.0, noise=0.0, blur=0.0, seed=0, geometry=None))]
fn render_target(
    ppi: u32,
    scale_error: f64,
    noise: f64,
    blur: f64,
    seed: u64,
    geometry: Option<&Bound<'_, PyAny>>,
) -> PyResult<PyGrayRaster> {
    let geom: CalibrationGeometry = from_py_or_default(geometry)?;
    let inner = qc::render_target(&geom, ppi, &distortions(scale_error, noise, blur, seed)).map_err(value_error)?;
    Ok(PyGrayRaster { inner })
}

#[pyfunction]
#[pyo3(signature = (ppi, layout=None))]
fn render_scan(ppi: u32, layout: Option<&Bound<'_, PyAny>>) -> PyResult<PyGrayRaster> {
    let layout: ScanLayout = from_py_or_default(layout)?;
    let inner = qc::render_scan(&layout, &CalibrationGeometry::default(), ppi, &Distortions::default())
        .map_err(value_error)?;
    Ok(PyGrayRaster { inner })
}

/// Full calibration report for a strip raster.
#[pyfunction]
#[pyo3(signature = (raster, border_mm=5.0, geometry=None))]
fn analyze<'py>(
    py: Python<'py>,
    raster: &PyGrayRaster,
    border_mm: f64,
    geometry: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let geom: CalibrationGeometry = from_py_or_default(geometry)?;
    to_py(py, &qc::analyze(&raster.inner, &geom, border_mm).map_err(value_error)?)
}

/// `(box, cropped)`: the print plus border, and the raster cut to it.
#[pyfunction]
#[pyo3(signature = (raster, border_mm=5.0))]
fn crop<'py>(py: Python<'py>, raster: &PyGrayRaster, border_mm: f64) -> PyResult<(Bound<'py, PyAny>, PyGrayRaster)> {
    let b = qc::crop_box(&raster.inner, border_mm).map_err(value_error)?;
    let inner = raster.inner.crop(b).map_err(value_error)?;
    Ok((to_py(py, &b)?, PyGrayRaster { inner }))
}

// ---------------------------------------------------------------- self-check

/// Runs the built-in reproduction checks; one dict per check.
#[pyfunction]
#[pyo3(signature = (seed=0))]
fn run_checks(py: Python<'_>, seed: u64) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &reproduce::run_all(seed))
}

#[pymodule]
fn pyaerialscan(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCostParams>()?;
    m.add_class::<PyGrayRaster>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(default_cell_config, m)?)?;
    m.add_function(wrap_pyfunction!(theoretical_throughput, m)?)?;
    m.add_function(wrap_pyfunction!(productivity_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(observed_vs_theoretical, m)?)?;
    m.add_function(wrap_pyfunction!(break_even, m)?)?;
    m.add_function(wrap_pyfunction!(cost_halving_point, m)?)?;
    m.add_function(wrap_pyfunction!(weeks_to_volume, m)?)?;
    m.add_function(wrap_pyfunction!(cost_curve, m)?)?;
    m.add_function(wrap_pyfunction!(ground_resolved_distance_m, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_pixel_range_um, m)?)?;
    m.add_function(wrap_pyfunction!(pixel_pitch_um, m)?)?;
    m.add_function(wrap_pyfunction!(sampling_adequacy, m)?)?;
    m.add_function(wrap_pyfunction!(storage_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(parse_sortie_id, m)?)?;
    m.add_function(wrap_pyfunction!(format_sortie_id, m)?)?;
    m.add_function(wrap_pyfunction!(plan_remediation, m)?)?;
    m.add_function(wrap_pyfunction!(sample_rates, m)?)?;
    m.add_function(wrap_pyfunction!(independent_any_intervention, m)?)?;
    m.add_function(wrap_pyfunction!(render_target, m)?)?;
    m.add_function(wrap_pyfunction!(render_scan, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(crop, m)?)?;
    m.add_function(wrap_pyfunction!(run_checks, m)?)?;
    Ok(())
}
