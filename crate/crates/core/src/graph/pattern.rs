use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{GraphError, KnowledgeBase, Value};

/// A constant or a variable (written `?name`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Const(Value),
    Var(String),
}

impl Term {
    pub fn id(id: impl Into<String>) -> Self {
        Term::Const(Value::Atom(id.into()))
    }

    pub fn var(name: impl Into<String>) -> Self {
        let name = name.into();
        let name = name.strip_prefix('?').map(str::to_string).unwrap_or(name);
        Term::Var(name)
    }

    /// Parses `?x` as a variable and anything else as an atom constant.
    pub fn parse(text: &str) -> Self {
        match text.strip_prefix('?') {
            Some(v) => Term::Var(v.to_string()),
            None => Term::id(text),
        }
    }

    pub fn resolve(&self, bindings: &BTreeMap<String, Value>) -> Option<Value> {
        match self {
            Term::Const(v) => Some(v.clone()),
            Term::Var(name) => bindings.get(name).cloned(),
        }
    }

    fn unify(&self, value: &Value, bindings: &mut BTreeMap<String, Value>) -> bool {
        match self {
            Term::Const(c) => c == value,
            Term::Var(name) => match bindings.get(name) {
                Some(bound) => bound == value,
                None => {
                    bindings.insert(name.clone(), value.clone());
                    true
                }
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternVertex {
    pub id: Term,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternEdge {
    pub id: Term,
    /// Id terms of pattern vertices.
    pub from: Term,
    pub to: Term,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternProperty {
    /// Id term of a pattern vertex or edge.
    pub owner: Term,
    pub key: String,
    pub value: Term,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternGraph {
    pub vertices: Vec<PatternVertex>,
    pub edges: Vec<PatternEdge>,
    pub properties: Vec<PatternProperty>,
}

impl PatternGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex(mut self, id: Term, label: &str) -> Self {
        self.vertices.push(PatternVertex {
            id,
            label: label.to_string(),
        });
        self
    }

    pub fn edge(mut self, id: Term, from: Term, to: Term, label: &str) -> Self {
        self.edges.push(PatternEdge {
            id,
            from,
            to,
            label: label.to_string(),
        });
        self
    }

    pub fn property(mut self, owner: Term, key: &str, value: Term) -> Self {
        self.properties.push(PatternProperty {
            owner,
            key: key.to_string(),
            value,
        });
        self
    }

    pub fn vertex_index(&self, id: &Term) -> Option<usize> {
        self.vertices.iter().position(|v| &v.id == id)
    }

    pub fn edge_index(&self, id: &Term) -> Option<usize> {
        self.edges.iter().position(|e| &e.id == id)
    }

    /// Every variable mentioned anywhere in the pattern.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut add = |t: &Term| {
            if let Term::Var(v) = t {
                out.insert(v.clone());
            }
        };
        for v in &self.vertices {
            add(&v.id);
        }
        for e in &self.edges {
            add(&e.id);
        }
        for p in &self.properties {
            add(&p.owner);
            add(&p.value);
        }
        out
    }

    /// Checks that edge endpoints and property owners name pattern elements
    /// and that element id terms are distinct.
    pub fn validate(&self) -> Result<(), GraphError> {
        let mut seen = BTreeSet::new();
        for t in self.vertices.iter().map(|v| &v.id).chain(self.edges.iter().map(|e| &e.id)) {
            if !seen.insert(t) {
                return Err(GraphError::InvalidProduction(format!("duplicate element term {t:?}")));
            }
            if matches!(t, Term::Const(v) if v.as_atom().is_none()) {
                return Err(GraphError::InvalidProduction(format!("element id {t:?} is not an atom")));
            }
        }
        for e in &self.edges {
            if self.vertex_index(&e.from).is_none() || self.vertex_index(&e.to).is_none() {
                return Err(GraphError::InvalidProduction(format!(
                    "edge {:?} endpoint is not a pattern vertex",
                    e.id
                )));
            }
        }
        let mut slots = BTreeSet::new();
        for p in &self.properties {
            if self.vertex_index(&p.owner).is_none() && self.edge_index(&p.owner).is_none() {
                return Err(GraphError::InvalidProduction(format!(
                    "property {} owner {:?} is not a pattern element",
                    p.key, p.owner
                )));
            }
            if !slots.insert((&p.owner, &p.key)) {
                return Err(GraphError::InvalidProduction(format!(
                    "duplicate property {} on {:?}",
                    p.key, p.owner
                )));
            }
        }
        Ok(())
    }
}

/// A total morphism from a pattern into a KB: one host id per pattern vertex and
/// edge (by index), plus the resulting variable assignment.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Match {
    pub vertices: Vec<String>,
    pub edges: Vec<String>,
    pub bindings: BTreeMap<String, Value>,
}

impl Match {
    /// Host id of a pattern element given by its id term.
    pub fn image_of(&self, pattern: &PatternGraph, term: &Term) -> Option<&str> {
        if let Some(i) = pattern.vertex_index(term) {
            return self.vertices.get(i).map(String::as_str);
        }
        pattern
            .edge_index(term)
            .and_then(|i| self.edges.get(i))
            .map(String::as_str)
    }

    /// Checks the match is a label- and structure-preserving, injective, total
    /// morphism of `pattern` into `kb`.
    pub fn verify(&self, pattern: &PatternGraph, kb: &KnowledgeBase) -> Result<(), GraphError> {
        let fail = |msg: String| Err(GraphError::InvalidMatch(msg));
        if self.vertices.len() != pattern.vertices.len() || self.edges.len() != pattern.edges.len() {
            return fail("match is not total".into());
        }
        let mut bindings = self.bindings.clone();
        for (pv, img) in pattern.vertices.iter().zip(&self.vertices) {
            if kb.vertex_label(img) != Some(pv.label.as_str()) {
                return fail(format!("{img} does not carry label {}", pv.label));
            }
            if !pv.id.unify(&Value::atom(img.clone()), &mut bindings) {
                return fail(format!("{img} does not fit {:?}", pv.id));
            }
        }
        let distinct: BTreeSet<_> = self.vertices.iter().collect();
        if distinct.len() != self.vertices.len() {
            return fail("match is not injective on vertices".into());
        }
        let distinct: BTreeSet<_> = self.edges.iter().collect();
        if distinct.len() != self.edges.len() {
            return fail("match is not injective on edges".into());
        }
        for (pe, img) in pattern.edges.iter().zip(&self.edges) {
            let Some(e) = kb.edge(img) else {
                return fail(format!("edge {img} is absent"));
            };
            let from = self.image_of(pattern, &pe.from);
            let to = self.image_of(pattern, &pe.to);
            if e.label != pe.label || from != Some(e.from.as_str()) || to != Some(e.to.as_str()) {
                return fail(format!("edge {img} does not preserve structure"));
            }
            if !pe.id.unify(&Value::atom(img.clone()), &mut bindings) {
                return fail(format!("{img} does not fit {:?}", pe.id));
            }
        }
        for pp in &pattern.properties {
            let owner = self.image_of(pattern, &pp.owner).unwrap_or_default();
            match kb.property(owner, &pp.key) {
                Some(v) if pp.value.unify(v, &mut bindings) => {}
                _ => return fail(format!("property {} of {owner} does not match", pp.key)),
            }
        }
        if bindings != self.bindings {
            return fail("bindings are inconsistent".into());
        }
        Ok(())
    }
}

struct Search<'a> {
    pattern: &'a PatternGraph,
    kb: &'a KnowledgeBase,
    vertex_images: Vec<String>,
    edge_images: Vec<String>,
    used_vertices: BTreeSet<String>,
    used_edges: BTreeSet<String>,
    out: Vec<Match>,
}

impl Search<'_> {
    fn vertices(&mut self, i: usize, bindings: &BTreeMap<String, Value>) {
        if i == self.pattern.vertices.len() {
            self.edges(0, bindings);
            return;
        }
        let pv = &self.pattern.vertices[i];
        let candidates: Vec<String> = match pv.id.resolve(bindings) {
            Some(Value::Atom(id)) => match self.kb.vertex_label(&id) {
                Some(l) if l == pv.label => vec![id],
                _ => Vec::new(),
            },
            Some(_) => Vec::new(),
            None => self.kb.vertices_with_label(&pv.label).map(str::to_string).collect(),
        };
        for cand in candidates {
            if self.used_vertices.contains(&cand) {
                continue;
            }
            let mut next = bindings.clone();
            if !pv.id.unify(&Value::atom(cand.clone()), &mut next) {
                continue;
            }
            self.used_vertices.insert(cand.clone());
            self.vertex_images.push(cand.clone());
            self.vertices(i + 1, &next);
            self.vertex_images.pop();
            self.used_vertices.remove(&cand);
        }
    }

    fn edges(&mut self, i: usize, bindings: &BTreeMap<String, Value>) {
        if i == self.pattern.edges.len() {
            self.properties(bindings);
            return;
        }
        let pe = &self.pattern.edges[i];
        let (Some(fi), Some(ti)) = (
            self.pattern.vertex_index(&pe.from),
            self.pattern.vertex_index(&pe.to),
        ) else {
            return;
        };
        let from = self.vertex_images[fi].clone();
        let to = self.vertex_images[ti].clone();
        let candidates: Vec<String> = self
            .kb
            .out_edges(&from)
            .filter(|(_, e)| e.to == to && e.label == pe.label)
            .map(|(id, _)| id.to_string())
            .collect();
        for cand in candidates {
            if self.used_edges.contains(&cand) {
                continue;
            }
            let mut next = bindings.clone();
            if !pe.id.unify(&Value::atom(cand.clone()), &mut next) {
                continue;
            }
            self.used_edges.insert(cand.clone());
            self.edge_images.push(cand.clone());
            self.edges(i + 1, &next);
            self.edge_images.pop();
            self.used_edges.remove(&cand);
        }
    }

    fn properties(&mut self, bindings: &BTreeMap<String, Value>) {
        let mut bindings = bindings.clone();
        for pp in &self.pattern.properties {
            let owner = if let Some(i) = self.pattern.vertex_index(&pp.owner) {
                &self.vertex_images[i]
            } else if let Some(i) = self.pattern.edge_index(&pp.owner) {
                &self.edge_images[i]
            } else {
                return;
            };
            match self.kb.property(owner, &pp.key) {
                Some(v) if pp.value.unify(v, &mut bindings) => {}
                _ => return,
            }
        }
        self.out.push(Match {
            vertices: self.vertex_images.clone(),
            edges: self.edge_images.clone(),
            bindings,
        });
    }
}

/// Enumerates every match of `pattern` in `kb` consistent with `bindings`,
/// ordered by the host ids assigned to pattern vertices, then edges.
/// Supplied bindings are carried into every match. Invalid patterns have no matches.
pub fn find_matches(
    pattern: &PatternGraph,
    bindings: &BTreeMap<String, Value>,
    kb: &KnowledgeBase,
) -> Vec<Match> {
    if pattern.validate().is_err() {
        return Vec::new();
    }
    let initial = bindings.clone();
    let mut search = Search {
        pattern,
        kb,
        vertex_images: Vec::new(),
        edge_images: Vec::new(),
        used_vertices: BTreeSet::new(),
        used_edges: BTreeSet::new(),
        out: Vec::new(),
    };
    search.vertices(0, &initial);
    let mut out = search.out;
    out.sort();
    out
}
