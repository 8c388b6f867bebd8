//! Python bindings: rasters, landmark and latent morphing, vulnerability
//! metrics, detection pipelines and pair planning.

use std::path::PathBuf;

use morphbench::geometry::Point;
use morphbench::landmark::{self, LandmarkSet};
use morphbench::latent::{self, CombineMode, LatentCode};
use morphbench::mad::{self, DetectorModel, FeatureSet, Pipeline, SvmParams};
use morphbench::protocol::{self, PlanOptions, SubjectManifest};
use morphbench::raster;
use morphbench::vuln::{self, AttemptMode, ScoreTable, Threshold};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

fn err(e: impl Into<morphbench::Error>) -> PyErr {
    let e: morphbench::Error = e.into();
    let msg = e.to_string();
    match e.exit_code() {
        morphbench::EXIT_NUMERICAL => PyArithmeticError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

/// Serialises through JSON so reports arrive as plain dicts.
fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn attempt_mode(mode: &str) -> PyResult<AttemptMode> {
    mode.parse().map_err(PyValueError::new_err)
}

/// Interleaved `f64` image with values in [0, 1].
#[pyclass(name = "Raster", module = "morphbench", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyRaster(raster::Raster);

#[pymethods]
impl PyRaster {
    #[new]
    fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> PyResult<Self> {
        raster::Raster::from_vec(width, height, channels, data).map(Self).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        raster::load_png(path).map(Self).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        raster::save_png(&self.0, path).map_err(err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    #[getter]
    fn channels(&self) -> usize {
        self.0.channels()
    }

    /// Row-major interleaved samples.
    fn data(&self) -> Vec<f64> {
        self.0.data().to_vec()
    }

    fn get(&self, x: usize, y: usize, c: usize) -> PyResult<f64> {
        let (w, h, ch) = self.0.shape();
        if x >= w || y >= h || c >= ch {
            return Err(PyValueError::new_err(format!("({x}, {y}, {c}) outside {w}x{h}x{ch}")));
        }
        Ok(self.0.get(x, y, c))
    }

    fn resize(&self, width: usize, height: usize) -> Self {
        Self(raster::resize_bilinear(&self.0, width, height))
    }

    fn grayscale(&self) -> Self {
        Self(raster::to_grayscale(&self.0))
    }

    fn __repr__(&self) -> String {
        let (w, h, c) = self.0.shape();
        format!("Raster({w}x{h}x{c})")
    }
}

fn landmark_set(points: Vec<(f64, f64)>) -> PyResult<LandmarkSet> {
    LandmarkSet::new(points.into_iter().map(|(x, y)| Point::new(x, y)).collect()).map_err(err)
}

/// Reads a landmark text file as `(x, y)` tuples.
#[pyfunction]
fn load_landmarks(path: PathBuf) -> PyResult<Vec<(f64, f64)>> {
    let set = LandmarkSet::load(path).map_err(err)?;
    Ok(set.points().iter().map(|p| (p.x, p.y)).collect())
}

/// Delaunay triangles as vertex-index triples into the deduplicated points.
#[pyfunction]
fn delaunay(points: Vec<(f64, f64)>) -> PyResult<Vec<[usize; 3]>> {
    let pts: Vec<Point> = points.into_iter().map(|(x, y)| Point::new(x, y)).collect();
    let tri = landmark::delaunay(&pts).map_err(err)?;
    // Report indices in terms of the caller's points.
    Ok(tri.triangles.iter().map(|t| t.map(|v| tri.source_index[v])).collect())
}

#[pyfunction]
#[pyo3(signature = (img1, lm1, img2, lm2, alpha = 0.5))]
fn landmark_morph(
    img1: &PyRaster,
    lm1: Vec<(f64, f64)>,
    img2: &PyRaster,
    lm2: Vec<(f64, f64)>,
    alpha: f64,
) -> PyResult<PyRaster> {
    let m = landmark::generate_landmark_morph(&img1.0, &landmark_set(lm1)?, &img2.0, &landmark_set(lm2)?, alpha)
        .map_err(err)?;
    Ok(PyRaster(m.image))
}

/// Combines two flat `layers x dims` latents.
#[pyfunction]
#[pyo3(signature = (a, b, layers, dims, w1 = 0.5, w2 = 0.5, literal = false))]
fn combine_latents(a: Vec<f64>, b: Vec<f64>, layers: usize, dims: usize, w1: f64, w2: f64, literal: bool) -> PyResult<Vec<f64>> {
    let a = LatentCode::new(layers, dims, a).map_err(err)?;
    let b = LatentCode::new(layers, dims, b).map_err(err)?;
    let mode = if literal { CombineMode::Literal } else { CombineMode::Normalized };
    Ok(latent::combine_latents(&a, &b, w1, w2, mode).map_err(err)?.values().to_vec())
}

/// Comparison scores for vulnerability evaluation.
#[pyclass(name = "ScoreTable", module = "morphbench")]
struct PyScoreTable(ScoreTable);

#[pymethods]
impl PyScoreTable {
    #[new]
    fn new() -> Self {
        Self(ScoreTable::new())
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        ScoreTable::load(&path).map(Self).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save(&path).map_err(err)
    }

    /// `subject` is 1-based.
    #[pyo3(signature = (morph_id, subject, score, attempt = 1))]
    fn add_morph_score(&mut self, morph_id: &str, subject: usize, score: f64, attempt: u32) -> PyResult<()> {
        self.0.add_morph_score(morph_id, subject, attempt, score).map_err(err)
    }

    fn add_nonmated(&mut self, score: f64) -> PyResult<()> {
        self.0.add_nonmated(score).map_err(err)
    }

    fn add_mated(&mut self, score: f64) -> PyResult<()> {
        self.0.add_mated(score).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.morphs().len()
    }
}

#[pyfunction]
fn calibrate_threshold(nonmated: Vec<f64>, far: f64) -> PyResult<f64> {
    vuln::calibrate_threshold(&nonmated, far).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (table, tau, mode = "aligned"))]
fn fmmpmr(table: &PyScoreTable, tau: f64, mode: &str) -> PyResult<f64> {
    vuln::fmmpmr(&table.0, tau, attempt_mode(mode)?).map_err(err)
}

#[pyfunction]
fn mmpmr(table: &PyScoreTable, tau: f64) -> PyResult<f64> {
    vuln::mmpmr(&table.0, tau).map_err(err)
}

#[pyfunction]
fn rmmr(mmpmr: f64, tar: f64) -> f64 {
    vuln::rmmr(mmpmr, tar)
}

/// Full vulnerability report; exactly one of `tau` and `far` must be given.
#[pyfunction]
#[pyo3(signature = (table, *, tau = None, far = None, mode = "aligned"))]
fn evaluate<'py>(
    py: Python<'py>,
    table: &PyScoreTable,
    tau: Option<f64>,
    far: Option<f64>,
    mode: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let threshold = match (tau, far) {
        (Some(t), None) => Threshold::Fixed(t),
        (None, Some(f)) => Threshold::Far(f),
        _ => return Err(PyValueError::new_err("pass exactly one of tau or far")),
    };
    let report = vuln::evaluate(&table.0, threshold, attempt_mode(mode)?).map_err(err)?;
    to_py(py, &report)
}

/// Higher scores mean "more likely an attack".
#[pyfunction]
fn compute_det<'py>(py: Python<'py>, attack: Vec<f64>, bonafide: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    let report = mad::compute_det(&attack, &bonafide).map_err(err)?;
    to_py(py, &report)
}

fn pipeline(name: &str, size: Option<usize>) -> PyResult<Pipeline> {
    let p = Pipeline::by_name(name).ok_or_else(|| PyValueError::new_err(format!("unknown pipeline {name:?}")))?;
    Ok(match size {
        Some(s) => p.with_size(s),
        None => p,
    })
}

#[pyfunction]
#[pyo3(signature = (pipeline_name, image, size = None))]
fn extract_features(pipeline_name: &str, image: &PyRaster, size: Option<usize>) -> PyResult<Vec<f64>> {
    pipeline(pipeline_name, size)?.extract(&image.0).map_err(err)
}

/// Linear SVM detector over a fixed feature pipeline.
#[pyclass(name = "Detector", module = "morphbench", frozen)]
struct PyDetector(DetectorModel);

#[pymethods]
impl PyDetector {
    /// Trains on images of both classes; attacks score higher.
    #[staticmethod]
    #[pyo3(signature = (pipeline_name, attacks, bonafide, *, size = None, c = 1.0, epochs = 50, seed = 0))]
    fn train(
        pipeline_name: &str,
        attacks: Vec<PyRef<'_, PyRaster>>,
        bonafide: Vec<PyRef<'_, PyRaster>>,
        size: Option<usize>,
        c: f64,
        epochs: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let p = pipeline(pipeline_name, size)?;
        let mut set = FeatureSet::new(p);
        for (label, imgs) in [(mad::Label::Attack, &attacks), (mad::Label::Bonafide, &bonafide)] {
            let rasters: Vec<raster::Raster> = imgs.iter().map(|r| r.0.clone()).collect();
            for (i, f) in p.extract_all(&rasters).map_err(err)?.into_iter().enumerate() {
                set.push(&format!("{label:?}{i}"), Some(label), f).map_err(err)?;
            }
        }
        DetectorModel::train(&set, SvmParams { c, epochs }, seed).map(Self).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        DetectorModel::load(&path).map(Self).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save(&path).map_err(err)
    }

    fn score(&self, image: &PyRaster) -> PyResult<f64> {
        let f = self.0.pipeline.extract(&image.0).map_err(err)?;
        self.0.score(&f).map_err(err)
    }

    #[getter]
    fn pipeline_id(&self) -> String {
        self.0.pipeline_id.clone()
    }
}

/// Plans same-gender morph pairs from a manifest file.
#[pyfunction]
#[pyo3(signature = (manifest, *, ratio = 0.5, seed = 0, pairs_per_subject = None, alpha = 0.5))]
fn plan_pairs<'py>(
    py: Python<'py>,
    manifest: PathBuf,
    ratio: f64,
    seed: u64,
    pairs_per_subject: Option<usize>,
    alpha: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let m = SubjectManifest::load(&manifest).map_err(err)?;
    let opts = PlanOptions {
        split_ratio: ratio,
        seed,
        pairs_per_subject,
        method: protocol::MorphMethod::Landmark { alpha },
    };
    to_py(py, &protocol::plan_pairs(&m, &opts).map_err(err)?)
}

#[pymodule]
#[pyo3(name = "morphbench")]
fn morphbench_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRaster>()?;
    m.add_class::<PyScoreTable>()?;
    m.add_class::<PyDetector>()?;
    m.add_function(wrap_pyfunction!(load_landmarks, m)?)?;
    m.add_function(wrap_pyfunction!(delaunay, m)?)?;
    m.add_function(wrap_pyfunction!(landmark_morph, m)?)?;
    m.add_function(wrap_pyfunction!(combine_latents, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(fmmpmr, m)?)?;
    m.add_function(wrap_pyfunction!(mmpmr, m)?)?;
    m.add_function(wrap_pyfunction!(rmmr, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(compute_det, m)?)?;
    m.add_function(wrap_pyfunction!(extract_features, m)?)?;
    m.add_function(wrap_pyfunction!(plan_pairs, m)?)?;
    Ok(())
}
