//! Python bindings: knowledge bases, transformations, injection, scoring,
//! scenarios and site generation.

use std::collections::BTreeSet;
use std::path::PathBuf;

use parthenos::evaluation::{self, ScenarioSpec};
use parthenos::extraction;
use parthenos::graph::{self, Fact};
use parthenos::injection::{self, InjectionModel};
use parthenos::transformation::{self, TransformationRequest};
use parthenos::{dialect, ui};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

create_exception!(parthenos_py, ParthenosError, PyException);

fn err(e: impl ToString) -> PyErr {
    ParthenosError::new_err(e.to_string())
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn lines(facts: &BTreeSet<Fact>) -> Vec<String> {
    facts.iter().map(ToString::to_string).collect()
}

/// An immutable knowledge base.
#[pyclass(frozen, module = "parthenos_py")]
struct KnowledgeBase {
    inner: graph::KnowledgeBase,
}

#[pymethods]
impl KnowledgeBase {
    /// Parses a fact file.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        graph::parse_kb(text).map(|inner| KnowledgeBase { inner }).map_err(err)
    }

    /// Extracts the model of a repository of `.pss` files.
    #[staticmethod]
    fn extract(repo: PathBuf) -> PyResult<Self> {
        extraction::extract_model(&repo).map(|inner| KnowledgeBase { inner }).map_err(err)
    }

    fn serialize(&self) -> String {
        graph::serialize_kb(&self.inner)
    }

    fn facts(&self) -> Vec<String> {
        graph::canonical_lines(&self.inner)
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.inner.vertex_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn __len__(&self) -> usize {
        self.inner.fact_count()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "KnowledgeBase(vertices={}, edges={}, facts={})",
            self.inner.vertex_count(),
            self.inner.edge_count(),
            self.inner.fact_count()
        )
    }
}

/// Applies one request (`{"op": ..., "params": {...}}` as JSON text) and
/// injects it into `repo`. Returns a dict with `applied`, `reason`, the added and
/// removed fact lines, and the resulting knowledge base.
#[pyfunction]
#[pyo3(signature = (kb, repo, request, kb_file=None))]
fn transform<'py>(
    py: Python<'py>,
    kb: &KnowledgeBase,
    repo: PathBuf,
    request: &str,
    kb_file: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let req = TransformationRequest::from_json(request).map_err(err)?;
    let outcome = transformation::apply_transformation(&kb.inner, &repo, &req, kb_file.as_deref()).map_err(err)?;
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("applied", outcome.is_applied())?;
    dict.set_item("reason", outcome.reason.as_ref().map(ToString::to_string))?;
    dict.set_item("added", lines(&outcome.delta.added))?;
    dict.set_item("removed", lines(&outcome.delta.removed))?;
    dict.set_item("kb", KnowledgeBase { inner: outcome.kb_after })?;
    Ok(dict.into_any())
}

/// Applies injection models (one JSON object or an array) to a repository.
#[pyfunction]
fn inject(repo: PathBuf, models: &str) -> PyResult<Vec<String>> {
    let models = InjectionModel::from_json(models).map_err(err)?;
    injection::inject_models(&repo, &models).map_err(err)
}

/// Parses one source file and returns its canonical text.
#[pyfunction]
fn format_source(text: &str, file_name: &str) -> PyResult<String> {
    dialect::parse_unit(text, file_name).map(|u| dialect::print_unit(&u)).map_err(err)
}

/// Set-based (precision, recall, f-measure).
#[pyfunction]
fn score(obtained: BTreeSet<String>, expected: BTreeSet<String>) -> (f64, f64, f64) {
    let s = evaluation::score(&obtained, &expected);
    (s.precision, s.recall, s.f_measure)
}

/// Scores from counts, floored to two decimals as in the reports.
#[pyfunction]
fn reported_score(intersection: usize, obtained: usize, expected: usize) -> (f64, f64, f64) {
    let s = evaluation::score_counts(intersection, obtained, expected).reported();
    (s.precision, s.recall, s.f_measure)
}

/// Runs a scenario file and returns its report as a dict.
#[pyfunction]
fn run_scenario<'py>(py: Python<'py>, path: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    let spec = ScenarioSpec::load(&path).map_err(err)?;
    let report = evaluation::run_scenario(&spec).map_err(err)?;
    json_to_py(py, &report.to_json())
}

/// Writes the form site for `kb` into `out_dir`; returns the written paths.
#[pyfunction]
fn generate_site(kb: &KnowledgeBase, out_dir: PathBuf) -> PyResult<Vec<PathBuf>> {
    ui::generate_site(&kb.inner, &out_dir).map_err(err)
}

#[pymodule]
fn parthenos_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ParthenosError", m.py().get_type::<ParthenosError>())?;
    m.add_class::<KnowledgeBase>()?;
    m.add_function(wrap_pyfunction!(transform, m)?)?;
    m.add_function(wrap_pyfunction!(inject, m)?)?;
    m.add_function(wrap_pyfunction!(format_source, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(reported_score, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(generate_site, m)?)?;
    Ok(())
}
