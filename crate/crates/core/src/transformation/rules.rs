use std::collections::BTreeMap;

use crate::graph::{
    apply_spo, find_matches, Delta, ElementRef, GraphError, KnowledgeBase, PatternGraph, Production, Term, Value,
};

use super::TransformError;

/// Assembles a production together with the bindings that anchor it.
///
/// Every element is addressed by a variable. Variables of lhs elements are
/// pre-bound so the match is anchored; variables that only occur on the rhs
/// become production parameters.
pub(crate) struct RuleBuilder {
    name: String,
    lhs: PatternGraph,
    rhs: PatternGraph,
    mapping: Vec<(ElementRef, ElementRef)>,
    params: Vec<String>,
    bindings: BTreeMap<String, Value>,
}

impl RuleBuilder {
    pub fn new(name: &str) -> Self {
        RuleBuilder {
            name: name.to_string(),
            lhs: PatternGraph::new(),
            rhs: PatternGraph::new(),
            mapping: Vec::new(),
            params: Vec::new(),
            bindings: BTreeMap::new(),
        }
    }

    fn bind(&mut self, var: &str, value: Value) -> Term {
        debug_assert!(
            self.bindings.get(var).is_none_or(|v| *v == value),
            "variable {var} bound twice"
        );
        self.bindings.insert(var.to_string(), value);
        Term::var(var)
    }

    fn param(&mut self, var: &str, value: Value) -> Term {
        self.params.push(var.to_string());
        self.bind(var, value)
    }

    pub fn keep_vertex(&mut self, var: &str, id: &str, label: &str) -> Term {
        let t = self.bind(var, Value::atom(id));
        self.mapping.push((
            ElementRef::Vertex(self.lhs.vertices.len()),
            ElementRef::Vertex(self.rhs.vertices.len()),
        ));
        self.lhs = std::mem::take(&mut self.lhs).vertex(t.clone(), label);
        self.rhs = std::mem::take(&mut self.rhs).vertex(t.clone(), label);
        t
    }

    pub fn delete_vertex(&mut self, var: &str, id: &str, label: &str) -> Term {
        let t = self.bind(var, Value::atom(id));
        self.lhs = std::mem::take(&mut self.lhs).vertex(t.clone(), label);
        t
    }

    pub fn add_vertex(&mut self, var: &str, id: &str, label: &str) -> Term {
        let t = self.param(var, Value::atom(id));
        self.rhs = std::mem::take(&mut self.rhs).vertex(t.clone(), label);
        t
    }

    pub fn keep_edge(&mut self, var: &str, id: &str, from: &Term, to: &Term, label: &str) -> Term {
        let t = self.bind(var, Value::atom(id));
        self.mapping.push((
            ElementRef::Edge(self.lhs.edges.len()),
            ElementRef::Edge(self.rhs.edges.len()),
        ));
        self.lhs = std::mem::take(&mut self.lhs).edge(t.clone(), from.clone(), to.clone(), label);
        self.rhs = std::mem::take(&mut self.rhs).edge(t.clone(), from.clone(), to.clone(), label);
        t
    }

    pub fn add_edge(&mut self, var: &str, id: &str, from: &Term, to: &Term, label: &str) -> Term {
        let t = self.param(var, Value::atom(id));
        self.rhs = std::mem::take(&mut self.rhs).edge(t.clone(), from.clone(), to.clone(), label);
        t
    }

    /// Property on a kept element, changed from `old` to `new`.
    pub fn rewrite_prop(&mut self, owner: &Term, key: &str, var: &str, old: Value, new: Value) {
        let old_t = self.bind(&format!("{var}_old"), old);
        let new_t = self.param(&format!("{var}_new"), new);
        self.mapping.push((
            ElementRef::Property(self.lhs.properties.len()),
            ElementRef::Property(self.rhs.properties.len()),
        ));
        self.lhs = std::mem::take(&mut self.lhs).property(owner.clone(), key, old_t);
        self.rhs = std::mem::take(&mut self.rhs).property(owner.clone(), key, new_t);
    }

    pub fn add_prop(&mut self, owner: &Term, key: &str, var: &str, value: Value) {
        let t = self.param(var, value);
        self.rhs = std::mem::take(&mut self.rhs).property(owner.clone(), key, t);
    }

    pub fn build(self) -> Result<(Production, BTreeMap<String, Value>), GraphError> {
        let prod = Production::new(self.name, self.lhs, self.rhs, self.mapping, self.params)?;
        Ok((prod, self.bindings))
    }
}

/// Matches `prod` (which must match exactly once under `bindings`) and rewrites.
pub(crate) fn rewrite_once(
    prod: &Production,
    bindings: &BTreeMap<String, Value>,
    kb: &KnowledgeBase,
) -> Result<(KnowledgeBase, Delta), TransformError> {
    let matches = find_matches(&prod.lhs, bindings, kb);
    if matches.len() != 1 {
        return Err(TransformError::MatchCount {
            rule: prod.name.clone(),
            count: matches.len(),
        });
    }
    Ok(apply_spo(prod, &matches[0], kb)?)
}
