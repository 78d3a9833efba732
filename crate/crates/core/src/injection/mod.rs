//! Delta → source edits.
//!
//! `typecheck_delta` guards, `plan_injection` turns a delta into
//! [`InjectionModel`]s (this is where parameters are converted from graph
//! facts to source terms), `inject_ast` applies one model to a parsed unit and
//! `write_sources` persists the result all-or-nothing.

mod ast;
mod plan;
mod typecheck;
mod writer;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};
use thiserror::Error;

use crate::dialect::{self, DialectError, SourceUnit};
use crate::extraction::{self, ExtractionError};
use crate::graph::{canonical_lines, serialize_kb, Delta, KnowledgeBase};

pub use ast::{inject_ast, locate_injection_point, Anchor, InjectionPoint};
pub use plan::plan_injection;
pub use typecheck::{typecheck_delta, TypeError};
pub use writer::{write_files, write_files_with, write_sources, WriteStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionKind {
    AddClass,
    AddField,
    AddMethods,
    SetAnnotation,
    RemoveAnnotation,
}

impl InjectionKind {
    pub fn name(self) -> &'static str {
        match self {
            InjectionKind::AddClass => "add_class",
            InjectionKind::AddField => "add_field",
            InjectionKind::AddMethods => "add_methods",
            InjectionKind::SetAnnotation => "set_annotation",
            InjectionKind::RemoveAnnotation => "remove_annotation",
        }
    }
}

impl fmt::Display for InjectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `{"injection": ..., "target_file": ..., "params": {...}}`. `target_file` is
/// null only for `add_class`, which creates its file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionModel {
    pub injection: InjectionKind,
    pub target_file: Option<String>,
    #[serde(default)]
    pub params: Map<String, Json>,
}

impl InjectionModel {
    pub fn new(injection: InjectionKind, target_file: Option<String>, params: Json) -> Self {
        let params = match params {
            Json::Object(m) => m,
            _ => Map::new(),
        };
        InjectionModel {
            injection,
            target_file,
            params,
        }
    }

    pub fn from_json(text: &str) -> Result<Vec<InjectionModel>, InjectionError> {
        let value: Json = serde_json::from_str(text).map_err(|e| InjectionError::Model(e.to_string()))?;
        let parsed = match value {
            Json::Array(_) => serde_json::from_value(value),
            other => serde_json::from_value(other).map(|m| vec![m]),
        };
        parsed.map_err(|e| InjectionError::Model(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("models serialize")
    }

    pub(crate) fn str_param(&self, key: &str) -> Result<&str, InjectionError> {
        self.opt_str(key)?
            .ok_or_else(|| InjectionError::Model(format!("{} requires string parameter '{key}'", self.injection)))
    }

    pub(crate) fn opt_str(&self, key: &str) -> Result<Option<&str>, InjectionError> {
        match self.params.get(key) {
            None | Some(Json::Null) => Ok(None),
            Some(Json::String(s)) => Ok(Some(s)),
            Some(other) => Err(InjectionError::Model(format!(
                "{}: parameter '{key}' must be a string, got {other}",
                self.injection
            ))),
        }
    }

    /// Sort key: file-creating models first, then by file, then by kind.
    fn order_key(&self) -> (Option<&str>, InjectionKind, String) {
        (self.target_file.as_deref(), self.injection, Json::Object(self.params.clone()).to_string())
    }
}

#[derive(Debug, Error)]
pub enum InjectionError {
    #[error("type errors: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    TypeErrors(Vec<TypeError>),
    #[error("unmappable delta: {0}")]
    UnmappableDelta(String),
    #[error("anchor not found: {0}")]
    AnchorNotFound(String),
    #[error("invalid injection model: {0}")]
    Model(String),
    #[error("injected {file} does not parse: {error}")]
    Syntax { file: String, error: DialectError },
    #[error("{0} already exists")]
    FileExists(String),
    #[error("source and model out of sync after injection: {0}")]
    OutOfSync(String),
    #[error(transparent)]
    Extraction(#[from] ExtractionError),
    #[error("write failed ({message}); rollback {}", if *.rolled_back { "restored all originals" } else { "incomplete" })]
    Io { message: String, rolled_back: bool },
}

/// Parsed sources of a repository keyed by relative path.
pub(crate) type Units = BTreeMap<String, SourceUnit>;

pub(crate) fn load_units(repo: &Path) -> Result<Units, InjectionError> {
    let files = extraction::read_sources(repo).map_err(|e| InjectionError::Io {
        message: e.to_string(),
        rolled_back: true,
    })?;
    let mut units = Units::new();
    let mut failures = Vec::new();
    for (path, text) in files {
        match dialect::parse_unit(&text, &path) {
            Ok(u) => {
                units.insert(path, u);
            }
            Err(e) => failures.push((path, e)),
        }
    }
    if !failures.is_empty() {
        return Err(ExtractionError::Parse(failures).into());
    }
    Ok(units)
}

/// Applies models in order to the in-memory units. Returns the touched paths.
pub(crate) fn apply_models(units: &mut Units, models: &[InjectionModel]) -> Result<Vec<String>, InjectionError> {
    let mut touched = Vec::new();
    for model in models {
        let path = match model.injection {
            InjectionKind::AddClass => {
                let unit = ast::new_class_unit(model)?;
                if units.contains_key(&unit.file_path) {
                    return Err(InjectionError::FileExists(unit.file_path));
                }
                let path = unit.file_path.clone();
                units.insert(path.clone(), unit);
                path
            }
            _ => {
                let path = model
                    .target_file
                    .clone()
                    .ok_or_else(|| InjectionError::Model(format!("{} requires a target_file", model.injection)))?;
                let unit = units
                    .get(&path)
                    .ok_or_else(|| InjectionError::AnchorNotFound(format!("no source file {path}")))?;
                let edited = inject_ast(unit, model)?;
                units.insert(path.clone(), edited);
                path
            }
        };
        if !touched.contains(&path) {
            touched.push(path);
        }
    }
    touched.sort();
    Ok(touched)
}

/// Prints the touched units and asserts each printed text parses back to the same unit.
pub(crate) fn render_touched(units: &Units, touched: &[String]) -> Result<Vec<(String, String)>, InjectionError> {
    touched
        .iter()
        .map(|path| {
            let unit = &units[path];
            let text = dialect::print_unit(unit);
            let reparsed = dialect::parse_unit(&text, path).map_err(|error| InjectionError::Syntax {
                file: path.clone(),
                error,
            })?;
            if &reparsed != unit {
                return Err(InjectionError::OutOfSync(format!("{path} does not round-trip through the printer")));
            }
            Ok((path.clone(), text))
        })
        .collect()
}

/// Injects `delta` into `repo` so that its re-extraction equals `kb_after`,
/// writing the sources (and `kb_file` when given) in one atomic batch.
/// Returns the repository-relative paths of the written sources.
pub fn synchronize(
    repo: &Path,
    kb_before: &KnowledgeBase,
    kb_after: &KnowledgeBase,
    delta: &Delta,
    kb_file: Option<&Path>,
) -> Result<Vec<String>, InjectionError> {
    typecheck_delta(kb_before, delta).map_err(InjectionError::TypeErrors)?;
    let models = plan_injection(delta, kb_after)?;
    let mut units = load_units(repo)?;
    let touched = apply_models(&mut units, &models)?;
    let edits = render_touched(&units, &touched)?;

    let all: Vec<SourceUnit> = units.into_values().collect();
    let extracted = extraction::extract_units(&all)?;
    if &extracted != kb_after {
        let want = canonical_lines(kb_after);
        let got = canonical_lines(&extracted);
        let missing: Vec<&String> = want.iter().filter(|l| !got.contains(l)).take(3).collect();
        let extra: Vec<&String> = got.iter().filter(|l| !want.contains(l)).take(3).collect();
        return Err(InjectionError::OutOfSync(format!("missing {missing:?}, unexpected {extra:?}")));
    }

    let mut files: Vec<(PathBuf, String)> = edits.iter().map(|(p, t)| (repo.join(p), t.clone())).collect();
    if let Some(kb_file) = kb_file {
        files.push((kb_file.to_path_buf(), serialize_kb(kb_after)));
    }
    write_files(&files)?;
    Ok(edits.into_iter().map(|(p, _)| p).collect())
}

/// Applies standalone models to a repository (no model check beyond parsing).
pub fn inject_models(repo: &Path, models: &[InjectionModel]) -> Result<Vec<String>, InjectionError> {
    let mut units = load_units(repo)?;
    let touched = apply_models(&mut units, models)?;
    let edits = render_touched(&units, &touched)?;
    write_sources(repo, &edits)?;
    Ok(touched)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn model_json_shape() {
        let m = InjectionModel::new(
            InjectionKind::SetAnnotation,
            Some("Book.pss".into()),
            json!({"class": "Book", "annotation": "Panel", "key": "label", "value": "Unrated Book"}),
        );
        let text = m.to_json();
        assert!(text.starts_with(r#"{"injection":"set_annotation","target_file":"Book.pss","params":"#));
        assert_eq!(InjectionModel::from_json(&text).unwrap(), vec![m]);
        let created = InjectionModel::new(InjectionKind::AddClass, None, json!({"name": "Magazine"}));
        assert!(created.to_json().contains(r#""target_file":null"#));
    }

    #[test]
    fn model_json_array() {
        let text = r#"[{"injection": "add_class", "target_file": null, "params": {"name": "A"}},
                       {"injection": "add_field", "target_file": "A.pss", "params": {"class": "A", "name": "x", "type": "int"}}]"#;
        assert_eq!(InjectionModel::from_json(text).unwrap().len(), 2);
        assert!(InjectionModel::from_json(r#"{"injection": "explode"}"#).is_err());
    }
}
