use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::pattern::{find_matches, Match, PatternGraph, Term};
use super::{kb_diff, Delta, GraphError, KnowledgeBase, Value};

/// Index of an element within a pattern graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ElementRef {
    Vertex(usize),
    Edge(usize),
    Property(usize),
}

/// A single-pushout rule: `lhs` is matched, elements outside the domain of
/// `mapping` are deleted, and `rhs` elements outside its image are created.
/// `params` are variables bound by the caller rather than by matching.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Production {
    pub name: String,
    pub lhs: PatternGraph,
    pub rhs: PatternGraph,
    pub mapping: Vec<(ElementRef, ElementRef)>,
    pub params: Vec<String>,
}

impl Production {
    pub fn new(
        name: impl Into<String>,
        lhs: PatternGraph,
        rhs: PatternGraph,
        mapping: Vec<(ElementRef, ElementRef)>,
        params: Vec<String>,
    ) -> Result<Self, GraphError> {
        let prod = Production {
            name: name.into(),
            lhs,
            rhs,
            mapping,
            params,
        };
        prod.validate()?;
        Ok(prod)
    }

    /// A production whose rhs is a copy of `lhs` plus `additions`, with every
    /// lhs element preserved.
    pub fn preserving(
        name: impl Into<String>,
        lhs: PatternGraph,
        additions: PatternGraph,
        params: Vec<String>,
    ) -> Result<Self, GraphError> {
        let mut rhs = lhs.clone();
        rhs.vertices.extend(additions.vertices);
        rhs.edges.extend(additions.edges);
        rhs.properties.extend(additions.properties);
        let mapping = identity_mapping(&lhs);
        Production::new(name, lhs, rhs, mapping, params)
    }

    fn mapped(&self, r: ElementRef) -> Option<ElementRef> {
        self.mapping.iter().find(|(l, _)| *l == r).map(|(_, rr)| *rr)
    }

    fn preimage(&self, r: ElementRef) -> Option<ElementRef> {
        self.mapping.iter().find(|(_, rr)| *rr == r).map(|(l, _)| *l)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let bad = |msg: String| Err(GraphError::InvalidProduction(msg));
        self.lhs.validate()?;
        self.rhs.validate()?;
        let mut dom = BTreeSet::new();
        let mut img = BTreeSet::new();
        for &(l, r) in &self.mapping {
            if !dom.insert(l) || !img.insert(r) {
                return bad(format!("mapping is not an injective function at {l:?} -> {r:?}"));
            }
            match (l, r) {
                (ElementRef::Vertex(a), ElementRef::Vertex(b)) => {
                    let (Some(lv), Some(rv)) = (self.lhs.vertices.get(a), self.rhs.vertices.get(b)) else {
                        return bad(format!("vertex index out of range in {l:?} -> {r:?}"));
                    };
                    if lv.label != rv.label {
                        return bad(format!("vertex {a} maps across labels"));
                    }
                }
                (ElementRef::Edge(a), ElementRef::Edge(b)) => {
                    let (Some(le), Some(re)) = (self.lhs.edges.get(a), self.rhs.edges.get(b)) else {
                        return bad(format!("edge index out of range in {l:?} -> {r:?}"));
                    };
                    if le.label != re.label {
                        return bad(format!("edge {a} maps across labels"));
                    }
                    for (lt, rt) in [(&le.from, &re.from), (&le.to, &re.to)] {
                        let lv = self.lhs.vertex_index(lt).map(ElementRef::Vertex);
                        let rv = self.rhs.vertex_index(rt).map(ElementRef::Vertex);
                        if lv.and_then(|v| self.mapped(v)) != rv {
                            return bad(format!("edge {a} endpoints are not preserved"));
                        }
                    }
                }
                (ElementRef::Property(a), ElementRef::Property(b)) => {
                    let (Some(lp), Some(rp)) = (self.lhs.properties.get(a), self.rhs.properties.get(b)) else {
                        return bad(format!("property index out of range in {l:?} -> {r:?}"));
                    };
                    if lp.key != rp.key {
                        return bad(format!("property {a} maps across keys"));
                    }
                    let lo = self.lhs_owner(&lp.owner);
                    let ro = self.rhs_owner(&rp.owner);
                    if lo.and_then(|o| self.mapped(o)) != ro {
                        return bad(format!("property {a} owner is not preserved"));
                    }
                }
                _ => return bad(format!("mapping {l:?} -> {r:?} crosses element kinds")),
            }
        }
        let mut known: BTreeSet<String> = self.lhs.variables();
        known.extend(self.params.iter().cloned());
        for v in self.rhs.variables() {
            if !known.contains(&v) {
                return bad(format!("rhs variable ?{v} is neither matched nor a parameter"));
            }
        }
        Ok(())
    }

    fn lhs_owner(&self, t: &Term) -> Option<ElementRef> {
        self.lhs
            .vertex_index(t)
            .map(ElementRef::Vertex)
            .or_else(|| self.lhs.edge_index(t).map(ElementRef::Edge))
    }

    fn rhs_owner(&self, t: &Term) -> Option<ElementRef> {
        self.rhs
            .vertex_index(t)
            .map(ElementRef::Vertex)
            .or_else(|| self.rhs.edge_index(t).map(ElementRef::Edge))
    }

    /// Matches of the lhs with the given parameter bindings.
    pub fn matches(&self, params: &BTreeMap<String, Value>, kb: &KnowledgeBase) -> Vec<Match> {
        find_matches(&self.lhs, params, kb)
    }
}

fn identity_mapping(p: &PatternGraph) -> Vec<(ElementRef, ElementRef)> {
    let mut m = Vec::new();
    m.extend((0..p.vertices.len()).map(|i| (ElementRef::Vertex(i), ElementRef::Vertex(i))));
    m.extend((0..p.edges.len()).map(|i| (ElementRef::Edge(i), ElementRef::Edge(i))));
    m.extend((0..p.properties.len()).map(|i| (ElementRef::Property(i), ElementRef::Property(i))));
    m
}

fn resolve_atom(term: &Term, bindings: &BTreeMap<String, Value>) -> Result<String, GraphError> {
    match term.resolve(bindings) {
        Some(Value::Atom(s)) => Ok(s),
        Some(other) => Err(GraphError::InvalidProduction(format!("element id {other:?} is not an atom"))),
        None => Err(GraphError::UnboundVariable(match term {
            Term::Var(v) => v.clone(),
            Term::Const(_) => unreachable!("constants always resolve"),
        })),
    }
}

/// Applies `prod` at `m`. Deletion removes unmapped lhs images together with
/// dangling edges and orphaned properties; insertion adds unmapped rhs
/// elements under ids taken from the bindings.
pub fn apply_spo(
    prod: &Production,
    m: &Match,
    kb: &KnowledgeBase,
) -> Result<(KnowledgeBase, Delta), GraphError> {
    m.verify(&prod.lhs, kb)?;
    let bindings = &m.bindings;
    let mut out = kb.clone();

    // Deletion.
    for (i, host) in m.vertices.iter().enumerate() {
        if prod.mapped(ElementRef::Vertex(i)).is_none() {
            out.remove_vertex(host);
        }
    }
    for (i, host) in m.edges.iter().enumerate() {
        if prod.mapped(ElementRef::Edge(i)).is_none() {
            out.remove_edge(host);
        }
    }
    let lhs_owner_host = |t: &Term| m.image_of(&prod.lhs, t).map(str::to_string);
    let mut rewritten = Vec::new();
    for (i, pp) in prod.lhs.properties.iter().enumerate() {
        let owner = lhs_owner_host(&pp.owner).expect("verified match covers owners");
        match prod.mapped(ElementRef::Property(i)) {
            None => {
                out.remove_property(&owner, &pp.key);
            }
            Some(ElementRef::Property(j)) => {
                let old = pp.value.resolve(bindings);
                let new = prod.rhs.properties[j].value.resolve(bindings);
                let Some(new) = new else {
                    return Err(GraphError::UnboundVariable(format!("{:?}", prod.rhs.properties[j].value)));
                };
                if old.as_ref() != Some(&new) && out.remove_property(&owner, &pp.key).is_some() {
                    rewritten.push((owner, pp.key.clone(), new));
                }
            }
            Some(_) => unreachable!("validated mapping preserves kinds"),
        }
    }

    // Host ids for every rhs vertex and edge.
    let mut rhs_vertex_ids = Vec::with_capacity(prod.rhs.vertices.len());
    for (j, rv) in prod.rhs.vertices.iter().enumerate() {
        let id = match prod.preimage(ElementRef::Vertex(j)) {
            Some(ElementRef::Vertex(i)) => m.vertices[i].clone(),
            _ => resolve_atom(&rv.id, bindings)?,
        };
        rhs_vertex_ids.push(id);
    }
    let mut rhs_edge_ids = Vec::with_capacity(prod.rhs.edges.len());
    for (j, re) in prod.rhs.edges.iter().enumerate() {
        let id = match prod.preimage(ElementRef::Edge(j)) {
            Some(ElementRef::Edge(i)) => m.edges[i].clone(),
            _ => resolve_atom(&re.id, bindings)?,
        };
        rhs_edge_ids.push(id);
    }

    // Insertion.
    for (j, rv) in prod.rhs.vertices.iter().enumerate() {
        if prod.preimage(ElementRef::Vertex(j)).is_some() {
            continue;
        }
        let id = rhs_vertex_ids[j].clone();
        if out.has_element(&id) {
            return Err(GraphError::IdCollision(id));
        }
        out.insert_vertex(id, rv.label.clone())?;
    }
    for (j, re) in prod.rhs.edges.iter().enumerate() {
        if prod.preimage(ElementRef::Edge(j)).is_some() {
            continue;
        }
        let id = rhs_edge_ids[j].clone();
        if out.has_element(&id) {
            return Err(GraphError::IdCollision(id));
        }
        let endpoint = |t: &Term| {
            prod.rhs
                .vertex_index(t)
                .map(|k| rhs_vertex_ids[k].clone())
                .expect("validated rhs edge endpoints")
        };
        out.insert_edge(id, endpoint(&re.from), endpoint(&re.to), re.label.clone())?;
    }
    for (owner, key, value) in rewritten {
        if out.has_element(&owner) {
            out.insert_property(owner, key, value)?;
        }
    }
    for (j, rp) in prod.rhs.properties.iter().enumerate() {
        if prod.preimage(ElementRef::Property(j)).is_some() {
            continue;
        }
        let owner = if let Some(k) = prod.rhs.vertex_index(&rp.owner) {
            rhs_vertex_ids[k].clone()
        } else {
            let k = prod.rhs.edge_index(&rp.owner).expect("validated rhs property owner");
            rhs_edge_ids[k].clone()
        };
        let Some(value) = rp.value.resolve(bindings) else {
            return Err(GraphError::UnboundVariable(format!("{:?}", rp.value)));
        };
        if !out.has_element(&owner) {
            // Owner deleted by the dangling rule; nothing to attach to.
            continue;
        }
        if out.property(&owner, &rp.key).is_some() {
            return Err(GraphError::IdCollision(format!("{owner}/{}", rp.key)));
        }
        out.insert_property(owner, rp.key.clone(), value)?;
    }

    out.validate()?;
    let delta = kb_diff(kb, &out);
    Ok((out, delta))
}
