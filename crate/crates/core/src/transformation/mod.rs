//! The transformation catalog and its synchronization with the sources.
//!
//! Each catalog operation checks its preconditions, builds an explicit
//! single-pushout [`Production`](crate::graph::Production), matches it exactly
//! once, and applies it. `apply_transformation` then drives injection so that
//! the repository and the stored model change together or not at all.

mod apply;
mod catalog;
mod rules;

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};
use thiserror::Error;

use crate::graph::{Delta, GraphError, KnowledgeBase};
use crate::injection::InjectionError;

pub use apply::{apply_transformation, RepoLock, LOCK_FILE};
pub use catalog::{
    add_attribute, create_class, dispatch, production_for, ui_create_element, ui_remove_element, ui_set_property,
    UiKind, UiProps, UiTarget,
};

/// Why a catalog operation refused to run. The model is left untouched.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rejection {
    DuplicateClass(String),
    SuperclassNotFound(String),
    ClassNotFound(String),
    TypeNotFound(String),
    DuplicateAttribute(String),
    DuplicateMethod(String),
    TargetNotFound(String),
    DuplicateElement(String),
    PanelMissing(String),
    BadValueType(String),
    InvalidName(String),
}

impl Rejection {
    pub fn kind(&self) -> &'static str {
        match self {
            Rejection::DuplicateClass(_) => "DuplicateClass",
            Rejection::SuperclassNotFound(_) => "SuperclassNotFound",
            Rejection::ClassNotFound(_) => "ClassNotFound",
            Rejection::TypeNotFound(_) => "TypeNotFound",
            Rejection::DuplicateAttribute(_) => "DuplicateAttribute",
            Rejection::DuplicateMethod(_) => "DuplicateMethod",
            Rejection::TargetNotFound(_) => "TargetNotFound",
            Rejection::DuplicateElement(_) => "DuplicateElement",
            Rejection::PanelMissing(_) => "PanelMissing",
            Rejection::BadValueType(_) => "BadValueType",
            Rejection::InvalidName(_) => "InvalidName",
        }
    }

    pub fn subject(&self) -> &str {
        match self {
            Rejection::DuplicateClass(s)
            | Rejection::SuperclassNotFound(s)
            | Rejection::ClassNotFound(s)
            | Rejection::TypeNotFound(s)
            | Rejection::DuplicateAttribute(s)
            | Rejection::DuplicateMethod(s)
            | Rejection::TargetNotFound(s)
            | Rejection::DuplicateElement(s)
            | Rejection::PanelMissing(s)
            | Rejection::BadValueType(s)
            | Rejection::InvalidName(s) => s,
        }
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind(), self.subject())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Applied,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformationOutcome {
    pub status: Status,
    pub kb_after: KnowledgeBase,
    pub delta: Delta,
    pub reason: Option<Rejection>,
}

impl TransformationOutcome {
    pub fn applied(kb_after: KnowledgeBase, delta: Delta) -> Self {
        TransformationOutcome {
            status: Status::Applied,
            kb_after,
            delta,
            reason: None,
        }
    }

    pub fn rejected(kb: &KnowledgeBase, reason: Rejection) -> Self {
        TransformationOutcome {
            status: Status::Rejected,
            kb_after: kb.clone(),
            delta: Delta::default(),
            reason: Some(reason),
        }
    }

    pub fn is_applied(&self) -> bool {
        self.status == Status::Applied
    }
}

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("invalid request: {0}")]
    Request(String),
    #[error("rule {rule} matched {count} times; expected exactly one")]
    MatchCount { rule: String, count: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Injection(#[from] InjectionError),
    #[error("repository is locked by another transformation ({0})")]
    Locked(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// A catalog operation name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    CreateClass,
    AddAttribute,
    CreatePanel,
    RemovePanel,
    CreateField,
    RemoveField,
    SetLabel,
    SetPosition,
    SetVisibility,
}

impl Op {
    pub fn name(self) -> &'static str {
        match self {
            Op::CreateClass => "create_class",
            Op::AddAttribute => "add_attribute",
            Op::CreatePanel => "create_panel",
            Op::RemovePanel => "remove_panel",
            Op::CreateField => "create_field",
            Op::RemoveField => "remove_field",
            Op::SetLabel => "set_label",
            Op::SetPosition => "set_position",
            Op::SetVisibility => "set_visibility",
        }
    }

    /// (required, optional) parameter keys.
    fn schema(self) -> (&'static [&'static str], &'static [&'static str]) {
        match self {
            Op::CreateClass => (&["name"], &["superclass"]),
            Op::AddAttribute => (&["class", "name", "type"], &[]),
            Op::CreatePanel => (&["class"], &["label", "position", "visible"]),
            Op::CreateField => (&["class", "attribute"], &["label", "position", "visible"]),
            Op::RemovePanel => (&["class"], &[]),
            Op::RemoveField => (&["class", "attribute"], &[]),
            Op::SetLabel | Op::SetPosition | Op::SetVisibility => (&["kind", "class", "value"], &["attribute"]),
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `{"op": "<name>", "params": {...}}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformationRequest {
    pub op: Op,
    #[serde(default)]
    pub params: Map<String, Json>,
}

impl TransformationRequest {
    pub fn new(op: Op, params: Json) -> Result<Self, TransformError> {
        let Json::Object(params) = params else {
            return Err(TransformError::Request("params must be an object".into()));
        };
        let req = TransformationRequest { op, params };
        req.check_schema()?;
        Ok(req)
    }

    pub fn from_json(text: &str) -> Result<Self, TransformError> {
        let req: TransformationRequest =
            serde_json::from_str(text).map_err(|e| TransformError::Request(e.to_string()))?;
        req.check_schema()?;
        Ok(req)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("requests serialize")
    }

    /// Rejects missing required keys and unknown keys.
    pub fn check_schema(&self) -> Result<(), TransformError> {
        let (required, optional) = self.op.schema();
        for key in required {
            if !self.params.contains_key(*key) {
                return Err(TransformError::Request(format!("{} requires parameter '{key}'", self.op)));
            }
        }
        for key in self.params.keys() {
            if !required.contains(&key.as_str()) && !optional.contains(&key.as_str()) {
                return Err(TransformError::Request(format!("{} does not accept parameter '{key}'", self.op)));
            }
        }
        Ok(())
    }

    /// String parameter; `Ok(None)` when absent or null.
    pub(crate) fn str_param(&self, key: &str) -> Result<Option<&str>, TransformError> {
        match self.params.get(key) {
            None | Some(Json::Null) => Ok(None),
            Some(Json::String(s)) => Ok(Some(s)),
            Some(other) => Err(TransformError::Request(format!(
                "{}: parameter '{key}' must be a string, got {other}",
                self.op
            ))),
        }
    }

    pub(crate) fn required_str(&self, key: &str) -> Result<&str, TransformError> {
        self.str_param(key)?
            .ok_or_else(|| TransformError::Request(format!("{} requires parameter '{key}'", self.op)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_request_json() {
        let req = TransformationRequest::from_json(r#"{"op": "add_attribute", "params": {"class": "Book", "name": "ISBN", "type": "String"}}"#).unwrap();
        assert_eq!(req.op, Op::AddAttribute);
        assert_eq!(req.required_str("class").unwrap(), "Book");
    }

    #[test]
    fn missing_or_unknown_keys_rejected() {
        assert!(TransformationRequest::from_json(r#"{"op": "add_attribute", "params": {"class": "Book"}}"#).is_err());
        assert!(TransformationRequest::from_json(r#"{"op": "remove_panel", "params": {"class": "Book", "x": 1}}"#).is_err());
        assert!(TransformationRequest::from_json(r#"{"op": "frobnicate", "params": {}}"#).is_err());
    }

    #[test]
    fn rejection_display() {
        assert_eq!(
            Rejection::SuperclassNotFound("UnratedBook".into()).to_string(),
            "SuperclassNotFound: UnratedBook"
        );
    }
}
