use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::graph::{labels, Delta, Fact, KnowledgeBase};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeError {
    /// A `has_type` or `returns` edge targets something that is not a type.
    UnknownType { owner: String, target: String },
    SuperclassNotFound(String),
    InheritanceCycle(String),
    /// A member name declared twice in a class, or an attribute re-declared along the chain.
    DuplicateMember { class: String, member: String },
    /// A UI element referring to a missing class, attribute or panel.
    DanglingReference { element: String, target: String },
    /// The delta does not apply to the model.
    Inconsistent(String),
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeError::UnknownType { owner, target } => write!(f, "{owner} refers to unknown type {target}"),
            TypeError::SuperclassNotFound(s) => write!(f, "SuperclassNotFound: {s}"),
            TypeError::InheritanceCycle(c) => write!(f, "inheritance cycle through {c}"),
            TypeError::DuplicateMember { class, member } => write!(f, "duplicate member {member} in {class}"),
            TypeError::DanglingReference { element, target } => write!(f, "{element} refers to missing {target}"),
            TypeError::Inconsistent(m) => write!(f, "delta does not apply: {m}"),
        }
    }
}

fn class_name(id: &str) -> &str {
    id.strip_prefix("class:").unwrap_or(id)
}

/// Checks the model `kb` would become under `delta`. Reports every problem found.
pub fn typecheck_delta(kb: &KnowledgeBase, delta: &Delta) -> Result<(), Vec<TypeError>> {
    if delta.is_empty() {
        return Ok(());
    }
    let mut errors = Vec::new();

    let mut vertices: BTreeMap<String, String> =
        kb.vertices().map(|(id, l)| (id.to_string(), l.to_string())).collect();
    for f in &delta.removed {
        if let Fact::Vertex { id, .. } = f {
            vertices.remove(id);
        }
    }
    for f in &delta.added {
        if let Fact::Vertex { id, label } = f {
            vertices.insert(id.clone(), label.clone());
        }
    }
    let label_of = |id: &str| vertices.get(id).map(String::as_str);

    for f in &delta.added {
        let Fact::Edge { from, to, label, .. } = f else { continue };
        match label.as_str() {
            labels::HAS_TYPE | labels::RETURNS => {
                let ok = match label_of(to) {
                    Some(labels::CLASS) => true,
                    Some(labels::TYPE) => !(label == labels::HAS_TYPE && to == "type:void"),
                    _ => false,
                };
                if !ok {
                    errors.push(TypeError::UnknownType {
                        owner: from.clone(),
                        target: to.clone(),
                    });
                }
            }
            labels::EXTENDS if label_of(to) != Some(labels::CLASS) => {
                errors.push(TypeError::SuperclassNotFound(class_name(to).to_string()));
            }
            labels::REPRESENTS | labels::REFLECTS | labels::HAS_FIELD => {
                for end in [from, to] {
                    if label_of(end).is_none() {
                        errors.push(TypeError::DanglingReference {
                            element: f.to_string(),
                            target: end.clone(),
                        });
                    }
                }
            }
            _ => {}
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }

    let after = match kb.apply_delta(delta) {
        Ok(after) => after,
        Err(e) => return Err(vec![TypeError::Inconsistent(e.to_string())]),
    };

    // Classes whose member sets or ancestry the delta touches.
    let mut touched: BTreeSet<String> = BTreeSet::new();
    for f in delta.added.iter().chain(&delta.removed) {
        match f {
            Fact::Vertex { id, .. } if id.starts_with("class:") => {
                touched.insert(class_name(id).to_string());
            }
            Fact::Edge { from, label, .. }
                if label == labels::HAS_ATTRIBUTE || label == labels::HAS_METHOD || label == labels::EXTENDS =>
            {
                touched.insert(class_name(from).to_string());
            }
            _ => {}
        }
    }
    let superclass = |c: &str| after.target(&format!("class:{c}"), labels::EXTENDS).map(|t| class_name(t).to_string());
    let members = |c: &str, label: &str| -> Vec<String> {
        after
            .out_edges(&format!("class:{c}"))
            .filter(|(_, e)| e.label == label)
            .filter_map(|(_, e)| after.property(&e.to, labels::NAME).and_then(|v| v.as_atom()).map(str::to_string))
            .collect()
    };
    // Subclasses of a touched class can gain duplicates too.
    let all_classes: Vec<String> = after.vertices_with_label(labels::CLASS).map(|id| class_name(id).to_string()).collect();
    let mut to_check = touched.clone();
    for c in &all_classes {
        let mut cur = superclass(c);
        let mut steps = 0;
        while let Some(s) = cur {
            if touched.contains(&s) {
                to_check.insert(c.clone());
                break;
            }
            steps += 1;
            if steps > all_classes.len() {
                break;
            }
            cur = superclass(&s);
        }
    }

    for c in &to_check {
        let mut seen_members = BTreeSet::new();
        let attrs = members(c, labels::HAS_ATTRIBUTE);
        for m in attrs.iter().chain(&members(c, labels::HAS_METHOD)) {
            if !seen_members.insert(m.clone()) {
                errors.push(TypeError::DuplicateMember {
                    class: c.clone(),
                    member: m.clone(),
                });
            }
        }
        let mut chain = vec![c.clone()];
        let mut cur = superclass(c);
        let mut cyclic = false;
        while let Some(s) = cur {
            if chain.contains(&s) {
                cyclic = true;
                break;
            }
            chain.push(s.clone());
            cur = superclass(&s);
        }
        if cyclic {
            errors.push(TypeError::InheritanceCycle(c.clone()));
            continue;
        }
        for ancestor in &chain[1..] {
            for a in members(ancestor, labels::HAS_ATTRIBUTE) {
                if attrs.contains(&a) {
                    errors.push(TypeError::DuplicateMember {
                        class: c.clone(),
                        member: a,
                    });
                }
            }
        }
    }

    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}
