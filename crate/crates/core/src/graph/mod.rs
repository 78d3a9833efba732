//! Labeled directed graph model, its fact-file form, and single-pushout rewriting.

mod facts;
mod pattern;
mod spo;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use facts::{parse_kb, serialize_kb, FACT_HEADER};
pub use pattern::{find_matches, Match, PatternEdge, PatternGraph, PatternProperty, PatternVertex, Term};
pub use spo::{apply_spo, ElementRef, Production};

pub mod labels {
    pub const CLASS: &str = "class";
    pub const ATTRIBUTE: &str = "attribute";
    pub const METHOD: &str = "method";
    pub const TYPE: &str = "type";
    pub const PANEL: &str = "panel";
    pub const FIELD: &str = "field";

    pub const HAS_ATTRIBUTE: &str = "has_attribute";
    pub const HAS_METHOD: &str = "has_method";
    pub const HAS_TYPE: &str = "has_type";
    pub const RETURNS: &str = "returns";
    pub const EXTENDS: &str = "extends";
    pub const REPRESENTS: &str = "represents";
    pub const REFLECTS: &str = "reflects";
    pub const HAS_FIELD: &str = "has_field";

    pub const NAME: &str = "name";
    pub const SOURCE_FILE: &str = "source_file";
    pub const LABEL: &str = "label";
    pub const POSITION: &str = "position";
    pub const VISIBLE: &str = "visible";
    pub const GENERATED: &str = "generated";
}

/// Deterministic element ids (`kind:QualifiedName`, `e:<label>:<QualifiedName>`).
pub mod ids {
    pub fn class(name: &str) -> String {
        format!("class:{name}")
    }
    pub fn attribute(class: &str, attr: &str) -> String {
        format!("attr:{class}.{attr}")
    }
    pub fn method(class: &str, method: &str) -> String {
        format!("method:{class}.{method}")
    }
    pub fn builtin_type(name: &str) -> String {
        format!("type:{name}")
    }
    pub fn panel(class: &str) -> String {
        format!("panel:{class}")
    }
    pub fn field(class: &str, attr: &str) -> String {
        format!("field:{class}.{attr}")
    }
    pub fn edge(label: &str, qualified: &str) -> String {
        format!("e:{label}:{qualified}")
    }

    /// Splits `kind:rest` into its two halves.
    pub fn split(id: &str) -> Option<(&str, &str)> {
        id.split_once(':')
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Atom(String),
}

impl Value {
    pub fn atom(s: impl Into<String>) -> Self {
        Value::Atom(s.into())
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Value::Atom(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }
}

pub(crate) fn quote_atom(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\'' => out.push_str("\\'"),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Atom(s) => f.write_str(&quote_atom(s)),
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// One vertex, edge, or property tuple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Fact {
    Vertex {
        id: String,
        label: String,
    },
    Edge {
        id: String,
        from: String,
        to: String,
        label: String,
    },
    Property {
        owner: String,
        key: String,
        value: Value,
    },
}

impl Fact {
    pub fn vertex(id: impl Into<String>, label: impl Into<String>) -> Self {
        Fact::Vertex {
            id: id.into(),
            label: label.into(),
        }
    }

    pub fn edge(
        id: impl Into<String>,
        from: impl Into<String>,
        to: impl Into<String>,
        label: impl Into<String>,
    ) -> Self {
        Fact::Edge {
            id: id.into(),
            from: from.into(),
            to: to.into(),
            label: label.into(),
        }
    }

    pub fn property(owner: impl Into<String>, key: impl Into<String>, value: Value) -> Self {
        Fact::Property {
            owner: owner.into(),
            key: key.into(),
            value,
        }
    }

    fn block(&self) -> u8 {
        match self {
            Fact::Vertex { .. } => 0,
            Fact::Edge { .. } => 1,
            Fact::Property { .. } => 2,
        }
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fact::Vertex { id, label } => write!(f, "vertex({}, {label}).", quote_atom(id)),
            Fact::Edge { id, from, to, label } => write!(
                f,
                "edge({}, {}, {}, {label}).",
                quote_atom(id),
                quote_atom(from),
                quote_atom(to)
            ),
            Fact::Property { owner, key, value } => {
                write!(f, "property({}, {key}, {value}).", quote_atom(owner))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("fact syntax error on line {line}: {message}")]
    FactSyntax { line: usize, message: String },
    #[error("edge {0} references a missing vertex")]
    DanglingEdge(String),
    #[error("property {key} references missing owner {owner}")]
    OrphanProperty { owner: String, key: String },
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("duplicate property {key} on {owner}")]
    DuplicateProperty { owner: String, key: String },
    #[error("generated id {0} already exists")]
    IdCollision(String),
    #[error("variable {0} is not bound")]
    UnboundVariable(String),
    #[error("invalid match: {0}")]
    InvalidMatch(String),
    #[error("invalid production: {0}")]
    InvalidProduction(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeData {
    pub from: String,
    pub to: String,
    pub label: String,
}

/// The abstract graph model: vertices, edges, and at most one property per (owner, key).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnowledgeBase {
    vertices: BTreeMap<String, String>,
    edges: BTreeMap<String, EdgeData>,
    properties: BTreeMap<(String, String), Value>,
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a KB from facts, checking every invariant.
    pub fn from_facts<I: IntoIterator<Item = Fact>>(facts: I) -> Result<Self, GraphError> {
        let mut kb = KnowledgeBase::new();
        let mut deferred_edges = Vec::new();
        let mut deferred_props = Vec::new();
        for fact in facts {
            match fact {
                Fact::Vertex { id, label } => kb.insert_vertex(id, label)?,
                Fact::Edge { .. } => deferred_edges.push(fact),
                Fact::Property { .. } => deferred_props.push(fact),
            }
        }
        for fact in deferred_edges {
            if let Fact::Edge { id, from, to, label } = fact {
                kb.insert_edge(id, from, to, label)?;
            }
        }
        for fact in deferred_props {
            if let Fact::Property { owner, key, value } = fact {
                kb.insert_property(owner, key, value)?;
            }
        }
        Ok(kb)
    }

    pub fn insert_vertex(&mut self, id: String, label: String) -> Result<(), GraphError> {
        if self.vertices.contains_key(&id) || self.edges.contains_key(&id) {
            return Err(GraphError::DuplicateId(id));
        }
        self.vertices.insert(id, label);
        Ok(())
    }

    pub fn insert_edge(
        &mut self,
        id: String,
        from: String,
        to: String,
        label: String,
    ) -> Result<(), GraphError> {
        if self.vertices.contains_key(&id) || self.edges.contains_key(&id) {
            return Err(GraphError::DuplicateId(id));
        }
        if !self.vertices.contains_key(&from) || !self.vertices.contains_key(&to) {
            return Err(GraphError::DanglingEdge(id));
        }
        self.edges.insert(id, EdgeData { from, to, label });
        Ok(())
    }

    pub fn insert_property(&mut self, owner: String, key: String, value: Value) -> Result<(), GraphError> {
        if !self.has_element(&owner) {
            return Err(GraphError::OrphanProperty { owner, key });
        }
        let slot = (owner, key);
        if self.properties.contains_key(&slot) {
            return Err(GraphError::DuplicateProperty {
                owner: slot.0,
                key: slot.1,
            });
        }
        self.properties.insert(slot, value);
        Ok(())
    }

    /// Removes a vertex together with its incident edges and every property they own.
    pub fn remove_vertex(&mut self, id: &str) -> bool {
        if self.vertices.remove(id).is_none() {
            return false;
        }
        let incident: Vec<String> = self
            .edges
            .iter()
            .filter(|(_, e)| e.from == id || e.to == id)
            .map(|(eid, _)| eid.clone())
            .collect();
        for eid in incident {
            self.remove_edge(&eid);
        }
        self.remove_properties_of(id);
        true
    }

    pub fn remove_edge(&mut self, id: &str) -> bool {
        if self.edges.remove(id).is_none() {
            return false;
        }
        self.remove_properties_of(id);
        true
    }

    pub fn remove_property(&mut self, owner: &str, key: &str) -> Option<Value> {
        self.properties.remove(&(owner.to_string(), key.to_string()))
    }

    fn remove_properties_of(&mut self, owner: &str) {
        let keys: Vec<(String, String)> = self
            .properties
            .range((owner.to_string(), String::new())..)
            .take_while(|((o, _), _)| o == owner)
            .map(|(k, _)| k.clone())
            .collect();
        for k in keys {
            self.properties.remove(&k);
        }
    }

    pub fn has_element(&self, id: &str) -> bool {
        self.vertices.contains_key(id) || self.edges.contains_key(id)
    }

    pub fn vertex_label(&self, id: &str) -> Option<&str> {
        self.vertices.get(id).map(String::as_str)
    }

    pub fn edge(&self, id: &str) -> Option<&EdgeData> {
        self.edges.get(id)
    }

    pub fn property(&self, owner: &str, key: &str) -> Option<&Value> {
        self.properties.get(&(owner.to_string(), key.to_string()))
    }

    pub fn vertices(&self) -> impl Iterator<Item = (&str, &str)> {
        self.vertices.iter().map(|(id, l)| (id.as_str(), l.as_str()))
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &EdgeData)> {
        self.edges.iter().map(|(id, e)| (id.as_str(), e))
    }

    pub fn properties(&self) -> impl Iterator<Item = (&str, &str, &Value)> {
        self.properties
            .iter()
            .map(|((o, k), v)| (o.as_str(), k.as_str(), v))
    }

    pub fn vertices_with_label<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.vertices
            .iter()
            .filter(move |(_, l)| l.as_str() == label)
            .map(|(id, _)| id.as_str())
    }

    pub fn out_edges<'a>(&'a self, from: &'a str) -> impl Iterator<Item = (&'a str, &'a EdgeData)> + 'a {
        self.edges
            .iter()
            .filter(move |(_, e)| e.from == from)
            .map(|(id, e)| (id.as_str(), e))
    }

    pub fn in_edges<'a>(&'a self, to: &'a str) -> impl Iterator<Item = (&'a str, &'a EdgeData)> + 'a {
        self.edges
            .iter()
            .filter(move |(_, e)| e.to == to)
            .map(|(id, e)| (id.as_str(), e))
    }

    /// Target of the first outgoing edge with `label`.
    pub fn target<'a>(&'a self, from: &str, label: &str) -> Option<&'a str> {
        self.edges
            .values()
            .find(|e| e.from == from && e.label == label)
            .map(|e| e.to.as_str())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn fact_count(&self) -> usize {
        self.vertices.len() + self.edges.len() + self.properties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fact_count() == 0
    }

    pub fn facts(&self) -> BTreeSet<Fact> {
        let mut out = BTreeSet::new();
        for (id, label) in &self.vertices {
            out.insert(Fact::vertex(id, label));
        }
        for (id, e) in &self.edges {
            out.insert(Fact::edge(id, &e.from, &e.to, &e.label));
        }
        for ((owner, key), value) in &self.properties {
            out.insert(Fact::property(owner, key, value.clone()));
        }
        out
    }

    pub fn contains_fact(&self, fact: &Fact) -> bool {
        match fact {
            Fact::Vertex { id, label } => self.vertex_label(id) == Some(label),
            Fact::Edge { id, from, to, label } => self
                .edge(id)
                .is_some_and(|e| &e.from == from && &e.to == to && &e.label == label),
            Fact::Property { owner, key, value } => self.property(owner, key) == Some(value),
        }
    }

    /// Re-checks every invariant.
    pub fn validate(&self) -> Result<(), GraphError> {
        for (id, e) in &self.edges {
            if self.vertices.contains_key(id) {
                return Err(GraphError::DuplicateId(id.clone()));
            }
            if !self.vertices.contains_key(&e.from) || !self.vertices.contains_key(&e.to) {
                return Err(GraphError::DanglingEdge(id.clone()));
            }
        }
        for (owner, key) in self.properties.keys() {
            if !self.has_element(owner) {
                return Err(GraphError::OrphanProperty {
                    owner: owner.clone(),
                    key: key.clone(),
                });
            }
        }
        Ok(())
    }

    /// Applies a delta: removals first, then additions.
    pub fn apply_delta(&self, delta: &Delta) -> Result<KnowledgeBase, GraphError> {
        let mut facts = self.facts();
        for f in &delta.removed {
            facts.remove(f);
        }
        facts.extend(delta.added.iter().cloned());
        KnowledgeBase::from_facts(facts)
    }
}

/// Facts added and removed by a transformation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delta {
    pub added: BTreeSet<Fact>,
    pub removed: BTreeSet<Fact>,
}

impl Delta {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty()
    }

    pub fn len(&self) -> usize {
        self.added.len() + self.removed.len()
    }
}

/// Fact-level set difference: `after = (before \ removed) ∪ added`.
pub fn kb_diff(before: &KnowledgeBase, after: &KnowledgeBase) -> Delta {
    let b = before.facts();
    let a = after.facts();
    Delta {
        added: a.difference(&b).cloned().collect(),
        removed: b.difference(&a).cloned().collect(),
    }
}

/// Facts in the canonical serialization order: vertices, edges, properties,
/// each block sorted by rendered line.
pub fn canonical_lines(kb: &KnowledgeBase) -> Vec<String> {
    let mut keyed: Vec<(u8, String)> = kb.facts().iter().map(|f| (f.block(), f.to_string())).collect();
    keyed.sort();
    keyed.into_iter().map(|(_, line)| line).collect()
}
