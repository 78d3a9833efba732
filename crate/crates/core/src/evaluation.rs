//! Metrics, precision/recall/f-measure, and scenario runs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};
use thiserror::Error;

use crate::dialect::{list_classes, parse_unit, ClassDecl, TypeRef};
use crate::extraction::{extract_model, getter_name, read_sources, setter_name, ExtractionError};
use crate::graph::{canonical_lines, labels, serialize_kb, Fact, KnowledgeBase};
use crate::transformation::{apply_transformation, Op, TransformError, TransformationRequest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    Classes,
    Attributes,
    Panels,
    Fields,
    Syntax,
    Semantics,
    #[serde(rename = "KB")]
    Kb,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Category::Classes,
        Category::Attributes,
        Category::Panels,
        Category::Fields,
        Category::Syntax,
        Category::Semantics,
        Category::Kb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Classes => "Classes",
            Category::Attributes => "Attributes",
            Category::Panels => "Panels",
            Category::Fields => "Fields",
            Category::Syntax => "Syntax",
            Category::Semantics => "Semantics",
            Category::Kb => "KB",
        }
    }
}

/// Element sets per category: class names, `Class.attr` names, or fact lines.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub classes: BTreeSet<String>,
    pub attributes: BTreeSet<String>,
    pub panels: BTreeSet<String>,
    pub fields: BTreeSet<String>,
    pub syntax: BTreeSet<String>,
    pub semantics: BTreeSet<String>,
    pub kb: BTreeSet<String>,
}

impl MetricsReport {
    pub fn get(&self, c: Category) -> &BTreeSet<String> {
        match c {
            Category::Classes => &self.classes,
            Category::Attributes => &self.attributes,
            Category::Panels => &self.panels,
            Category::Fields => &self.fields,
            Category::Syntax => &self.syntax,
            Category::Semantics => &self.semantics,
            Category::Kb => &self.kb,
        }
    }

    pub fn count(&self, c: Category) -> usize {
        self.get(c).len()
    }
}

/// Names of the classes in `decls` that are type-correct: the supertype
/// resolves without a cycle, field and signature types resolve, accessors
/// agree with their field's type, and no attribute repeats along the chain.
pub fn semantic_classes(decls: &[ClassDecl]) -> BTreeSet<String> {
    let by_name: BTreeMap<&str, &ClassDecl> = decls.iter().map(|d| (d.name.as_str(), d)).collect();
    let resolves = |t: &TypeRef, allow_void: bool| match t {
        TypeRef::Void => allow_void,
        TypeRef::Class(c) => by_name.contains_key(c.as_str()),
        _ => true,
    };
    let mut ok = BTreeSet::new();
    'classes: for d in decls {
        let mut chain = vec![d];
        let mut cur = d;
        while let Some(sup) = &cur.superclass {
            match by_name.get(sup.as_str()) {
                Some(s) if !chain.iter().any(|c| c.name == s.name) => {
                    chain.push(s);
                    cur = s;
                }
                _ => continue 'classes,
            }
        }
        for f in &d.fields {
            if !resolves(&f.type_ref, false) {
                continue 'classes;
            }
            if chain[1..].iter().any(|a| a.field(&f.name).is_some()) {
                continue 'classes;
            }
        }
        for m in &d.methods {
            if !resolves(&m.return_type, true) || m.params.iter().any(|p| !resolves(&p.type_ref, false)) {
                continue 'classes;
            }
            for f in &d.fields {
                let bad_getter = m.name == getter_name(&f.name) && (m.return_type != f.type_ref || !m.params.is_empty());
                let bad_setter = m.name == setter_name(&f.name)
                    && (m.return_type != TypeRef::Void || m.params.len() != 1 || m.params[0].type_ref != f.type_ref);
                if bad_getter || bad_setter {
                    continue 'classes;
                }
            }
        }
        ok.insert(d.name.clone());
    }
    ok
}

/// Metrics of a repository and its model. Classes and attributes come from
/// the sources; panels and fields from the model.
pub fn compute_metrics(repo: &Path, kb: &KnowledgeBase) -> io::Result<MetricsReport> {
    let mut report = MetricsReport::default();
    for entry in list_classes(repo)? {
        report.classes.insert(entry.class_name.clone());
        if entry.is_ok() {
            report.syntax.insert(entry.class_name);
        }
    }
    let mut decls = Vec::new();
    for (path, text) in read_sources(repo)? {
        if let Ok(unit) = parse_unit(&text, &path) {
            for f in &unit.class_decl.fields {
                report.attributes.insert(format!("{}.{}", unit.class_decl.name, f.name));
            }
            decls.push(unit.class_decl);
        }
    }
    report.semantics = semantic_classes(&decls);
    let strip = |prefix: &str, label: &str| -> BTreeSet<String> {
        kb.vertices_with_label(label)
            .map(|id| id.strip_prefix(prefix).unwrap_or(id).to_string())
            .collect()
    };
    report.panels = strip("panel:", labels::PANEL);
    report.fields = strip("field:", labels::FIELD);
    report.kb = canonical_lines(kb).into_iter().collect();
    Ok(report)
}

/// Floors to two decimals, the way the reported figures are rounded.
pub fn truncate2(x: f64) -> f64 {
    (x * 100.0 + 1e-9).floor() / 100.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

impl Score {
    /// All three values floored to two decimals.
    pub fn reported(&self) -> Score {
        Score {
            precision: truncate2(self.precision),
            recall: truncate2(self.recall),
            f_measure: truncate2(self.f_measure),
        }
    }
}

pub fn score_counts(intersection: usize, obtained: usize, expected: usize) -> Score {
    let precision = if obtained == 0 { 1.0 } else { intersection as f64 / obtained as f64 };
    let recall = if expected == 0 { 1.0 } else { intersection as f64 / expected as f64 };
    let f_measure = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Score {
        precision,
        recall,
        f_measure,
    }
}

/// Set-based precision/recall/f-measure of `obtained` against `expected`.
pub fn score(obtained: &BTreeSet<String>, expected: &BTreeSet<String>) -> Score {
    score_counts(obtained.intersection(expected).count(), obtained.len(), expected.len())
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot read scenario {path}: {message}")]
    Spec { path: String, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Extraction(#[from] ExtractionError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("scenario {scenario}: {}", .failures.join("; "))]
    Expectation { scenario: String, failures: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRequest {
    pub op: Op,
    #[serde(default)]
    pub params: Map<String, Json>,
    #[serde(default = "default_true")]
    pub expect_applied: bool,
}

fn default_true() -> bool {
    true
}

impl ScenarioRequest {
    pub fn request(&self) -> Result<TransformationRequest, TransformError> {
        TransformationRequest::new(self.op, Json::Object(self.params.clone()))
    }
}

/// A scenario file. Relative repository paths are resolved against the
/// directory holding the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub start_repo: PathBuf,
    pub expected_repo: PathBuf,
    pub requests: Vec<ScenarioRequest>,
}

impl ScenarioSpec {
    pub fn load(path: &Path) -> Result<ScenarioSpec, EvalError> {
        let err = |message: String| EvalError::Spec {
            path: path.display().to_string(),
            message,
        };
        let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let mut spec: ScenarioSpec = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        spec.start_repo = base.join(&spec.start_repo);
        spec.expected_repo = base.join(&spec.expected_repo);
        for r in &spec.requests {
            r.request().map_err(|e| err(e.to_string()))?;
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub metric: Category,
    pub m_a: usize,
    /// `|M_AB \ M_A|`.
    pub m_b: usize,
    /// Elements of this category added by the applied transformations.
    pub applied_added: usize,
    pub m_ab: usize,
    pub m_c: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestResult {
    pub op: Op,
    pub applied: bool,
    pub expect_applied: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// Re-extracting the repository after the request reproduced the model.
    pub in_sync: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: String,
    pub rows: Vec<MetricRow>,
    pub average_f: f64,
    pub requests: Vec<RequestResult>,
    #[serde(skip)]
    pub kb_after: KnowledgeBase,
}

impl ScenarioReport {
    pub fn expectation_failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, r) in self.requests.iter().enumerate() {
            if r.applied != r.expect_applied {
                out.push(format!(
                    "request {} ({}) was {} but expected {}",
                    i + 1,
                    r.op,
                    if r.applied { "applied" } else { "rejected" },
                    if r.expect_applied { "applied" } else { "rejected" },
                ));
            }
            if !r.in_sync {
                out.push(format!("request {} ({}) left sources and model out of sync", i + 1, r.op));
            }
        }
        out
    }

    /// `Err` when a request's status contradicts the scenario file.
    pub fn check(&self) -> Result<(), EvalError> {
        let failures = self.expectation_failures();
        if failures.is_empty() {
            Ok(())
        } else {
            Err(EvalError::Expectation {
                scenario: self.name.clone(),
                failures,
            })
        }
    }

    pub fn row(&self, c: Category) -> &MetricRow {
        self.rows.iter().find(|r| r.metric == c).expect("every category has a row")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Scenario {}", self.name);
        let _ = writeln!(
            out,
            "{:<11} {:>6} {:>6} {:>6} {:>6} {:>9} {:>6} {:>9}",
            "Metric", "M_A", "M_B", "M_AB", "M_C", "Precision", "Recall", "F-measure"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<11} {:>6} {:>6} {:>6} {:>6} {:>9.2} {:>6.2} {:>9.2}",
                r.metric.name(),
                r.m_a,
                r.m_b,
                r.m_ab,
                r.m_c,
                r.precision,
                r.recall,
                r.f_measure
            );
        }
        let _ = writeln!(out, "{:>55} {:>9.2}", "Average:", self.average_f);
        let applied = self.requests.iter().filter(|r| r.applied).count();
        let _ = writeln!(
            out,
            "Requests: {} applied, {} rejected",
            applied,
            self.requests.len() - applied
        );
        for (i, r) in self.requests.iter().enumerate() {
            if let Some(reason) = &r.reason {
                let _ = writeln!(out, "  {}. {} rejected: {reason}", i + 1, r.op);
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Recursive copy; hidden entries are skipped.
pub fn copy_tree(from: &Path, to: &Path) -> io::Result<()> {
    fs::create_dir_all(to)?;
    let walker = walkdir::WalkDir::new(from)
        .min_depth(1)
        .into_iter()
        .filter_entry(|e| !e.file_name().to_string_lossy().starts_with('.'));
    for entry in walker {
        let entry = entry.map_err(io::Error::from)?;
        let rel = entry.path().strip_prefix(from).expect("walkdir yields paths under its root");
        let dest = to.join(rel);
        if entry.file_type().is_dir() {
            fs::create_dir_all(&dest)?;
        } else if entry.file_type().is_file() {
            fs::copy(entry.path(), &dest)?;
        }
    }
    Ok(())
}

fn added_counts(before: &KnowledgeBase, after: &KnowledgeBase) -> BTreeMap<Category, usize> {
    let delta = crate::graph::kb_diff(before, after);
    let mut counts = BTreeMap::new();
    for f in &delta.added {
        if let Fact::Vertex { label, .. } = f {
            let c = match label.as_str() {
                labels::CLASS => Category::Classes,
                labels::ATTRIBUTE => Category::Attributes,
                labels::PANEL => Category::Panels,
                labels::FIELD => Category::Fields,
                _ => continue,
            };
            *counts.entry(c).or_insert(0) += 1;
        }
    }
    let classes = counts.get(&Category::Classes).copied().unwrap_or(0);
    counts.insert(Category::Syntax, classes);
    counts.insert(Category::Semantics, classes);
    counts.insert(Category::Kb, delta.added.len());
    counts
}

/// Runs a scenario in `work_dir`, which receives a copy of the start repository
/// (`work_dir/repo`) and the fact file (`work_dir/model.pl`); both are left
/// in place for inspection.
pub fn run_scenario_in(spec: &ScenarioSpec, work_dir: &Path) -> Result<ScenarioReport, EvalError> {
    let repo = work_dir.join("repo");
    if repo.exists() {
        fs::remove_dir_all(&repo)?;
    }
    copy_tree(&spec.start_repo, &repo)?;
    let kb_file = work_dir.join("model.pl");

    let kb_a = extract_model(&repo)?;
    fs::write(&kb_file, serialize_kb(&kb_a))?;
    let m_a = compute_metrics(&repo, &kb_a)?;

    let mut kb = kb_a.clone();
    let mut requests = Vec::new();
    for r in &spec.requests {
        let outcome = apply_transformation(&kb, &repo, &r.request()?, Some(&kb_file))?;
        let applied = outcome.is_applied();
        if applied {
            kb = outcome.kb_after;
        }
        let in_sync = extract_model(&repo)? == kb && fs::read_to_string(&kb_file)? == serialize_kb(&kb);
        requests.push(RequestResult {
            op: r.op,
            applied,
            expect_applied: r.expect_applied,
            reason: outcome.reason.map(|x| x.to_string()),
            in_sync,
        });
    }

    let m_c = compute_metrics(&repo, &kb)?;
    let kb_ab = extract_model(&spec.expected_repo)?;
    let m_ab = compute_metrics(&spec.expected_repo, &kb_ab)?;
    let added = added_counts(&kb_a, &kb);

    let rows: Vec<MetricRow> = Category::ALL
        .iter()
        .map(|&c| {
            let s = score(m_c.get(c), m_ab.get(c));
            MetricRow {
                metric: c,
                m_a: m_a.count(c),
                m_b: m_ab.get(c).difference(m_a.get(c)).count(),
                applied_added: added.get(&c).copied().unwrap_or(0),
                m_ab: m_ab.count(c),
                m_c: m_c.count(c),
                precision: s.precision,
                recall: s.recall,
                f_measure: s.f_measure,
            }
        })
        .collect();
    let average = rows.iter().map(|r| r.f_measure).sum::<f64>() / rows.len() as f64;
    let rows = rows
        .into_iter()
        .map(|r| MetricRow {
            precision: truncate2(r.precision),
            recall: truncate2(r.recall),
            f_measure: truncate2(r.f_measure),
            ..r
        })
        .collect();
    Ok(ScenarioReport {
        name: spec.name.clone(),
        rows,
        average_f: truncate2(average),
        requests,
        kb_after: kb,
    })
}

/// Runs a scenario on a throwaway copy of its start repository.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<ScenarioReport, EvalError> {
    let dir = tempfile::tempdir()?;
    run_scenario_in(spec, dir.path())
}
