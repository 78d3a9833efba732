//! Repository scan → facts → knowledge base.
//!
//! The pipeline is: parse every `.pss` file, run the class and UI analyzers
//! per unit, merge, then `process_metadata`. Output depends only on file
//! contents and repository-relative paths, never on traversal order.

use std::collections::{BTreeMap, BTreeSet};
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::dialect::{self, DialectError, Literal, SourceUnit, TypeRef};
use crate::graph::{ids, labels, Fact, GraphError, KnowledgeBase, Value};

pub const PANEL_ANNOTATION: &str = "Panel";
pub const FIELD_ANNOTATION: &str = "UiField";
const UI_KEYS: [&str; 3] = [labels::LABEL, labels::POSITION, labels::VISIBLE];

#[derive(Debug, Error)]
pub enum ExtractionError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("{} file(s) failed to parse: {}", .0.len(), .0.iter().map(|(p, e)| format!("{p}: {e}")).collect::<Vec<_>>().join("; "))]
    Parse(Vec<(String, DialectError)>),
    #[error("class {name} is declared in both {first} and {second}")]
    DuplicateClass {
        name: String,
        first: String,
        second: String,
    },
    #[error("UI annotation error in {file}: {message}")]
    UiAnnotation { file: String, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Id of the vertex a type name resolves to: `type:<T>` for built-ins, `class:<T>` otherwise.
pub fn type_vertex_id(t: &TypeRef) -> String {
    if t.is_builtin() {
        ids::builtin_type(t.name())
    } else {
        ids::class(t.name())
    }
}

/// Upper-cases the first letter: `title` → `Title`.
pub fn capitalize(name: &str) -> String {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

pub fn getter_name(attr: &str) -> String {
    format!("get{}", capitalize(attr))
}

pub fn setter_name(attr: &str) -> String {
    format!("set{}", capitalize(attr))
}

pub fn getter_body(attr: &str) -> String {
    format!("return this.{attr};")
}

pub fn setter_body(attr: &str) -> String {
    format!("this.{attr} = value;")
}

pub const SETTER_PARAM: &str = "value";

/// Structural facts for one class: the class, its attributes, its methods,
/// and the inheritance edge.
pub fn analyze_class_facts(unit: &SourceUnit) -> BTreeSet<Fact> {
    let decl = &unit.class_decl;
    let class_id = ids::class(&decl.name);
    let mut out = BTreeSet::new();
    out.insert(Fact::vertex(&class_id, labels::CLASS));
    out.insert(Fact::property(&class_id, labels::NAME, Value::atom(&decl.name)));
    out.insert(Fact::property(&class_id, labels::SOURCE_FILE, Value::atom(&unit.file_path)));
    if let Some(sup) = &decl.superclass {
        out.insert(Fact::edge(
            ids::edge(labels::EXTENDS, &decl.name),
            &class_id,
            ids::class(sup),
            labels::EXTENDS,
        ));
    }
    for field in &decl.fields {
        let q = format!("{}.{}", decl.name, field.name);
        let attr_id = ids::attribute(&decl.name, &field.name);
        out.insert(Fact::vertex(&attr_id, labels::ATTRIBUTE));
        out.insert(Fact::property(&attr_id, labels::NAME, Value::atom(&field.name)));
        out.insert(Fact::edge(ids::edge(labels::HAS_ATTRIBUTE, &q), &class_id, &attr_id, labels::HAS_ATTRIBUTE));
        out.insert(Fact::edge(
            ids::edge(labels::HAS_TYPE, &q),
            &attr_id,
            type_vertex_id(&field.type_ref),
            labels::HAS_TYPE,
        ));
    }
    for method in &decl.methods {
        let q = format!("{}.{}", decl.name, method.name);
        let method_id = ids::method(&decl.name, &method.name);
        out.insert(Fact::vertex(&method_id, labels::METHOD));
        out.insert(Fact::property(&method_id, labels::NAME, Value::atom(&method.name)));
        out.insert(Fact::edge(ids::edge(labels::HAS_METHOD, &q), &class_id, &method_id, labels::HAS_METHOD));
        out.insert(Fact::edge(
            ids::edge(labels::RETURNS, &q),
            &method_id,
            type_vertex_id(&method.return_type),
            labels::RETURNS,
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
struct UiSettings {
    label: Option<String>,
    position: Option<i64>,
    visible: Option<bool>,
}

fn ui_settings(file: &str, owner: &str, a: &dialect::Annotation) -> Result<UiSettings, ExtractionError> {
    let err = |message: String| ExtractionError::UiAnnotation {
        file: file.to_string(),
        message,
    };
    let mut s = UiSettings {
        label: None,
        position: None,
        visible: None,
    };
    for (key, value) in &a.args {
        match (key.as_str(), value) {
            ("label", Literal::Str(v)) => s.label = Some(v.clone()),
            ("position", Literal::Int(v)) if *v >= 1 => s.position = Some(*v),
            ("visible", Literal::Bool(v)) => s.visible = Some(*v),
            (k, v) if UI_KEYS.contains(&k) => {
                return Err(err(format!("@{} on {owner}: invalid value {v} for {k}", a.name)))
            }
            (k, _) => return Err(err(format!("@{} on {owner}: unknown argument {k}", a.name))),
        }
    }
    Ok(s)
}

/// Assigns defaults to positions: explicit ones are kept, the rest take the
/// smallest unused index in declaration order. The result must be a
/// permutation of 1..=n.
fn assign_positions(
    file: &str,
    what: &str,
    requested: &[Option<i64>],
) -> Result<Vec<i64>, ExtractionError> {
    let err = |message: String| ExtractionError::UiAnnotation {
        file: file.to_string(),
        message,
    };
    let mut taken = BTreeSet::new();
    for p in requested.iter().flatten() {
        if !taken.insert(*p) {
            return Err(err(format!("{what} position {p} is used twice")));
        }
    }
    let mut next = 1i64;
    let mut out = Vec::with_capacity(requested.len());
    for p in requested {
        match p {
            Some(p) => out.push(*p),
            None => {
                while taken.contains(&next) {
                    next += 1;
                }
                taken.insert(next);
                out.push(next);
            }
        }
    }
    let n = requested.len() as i64;
    if let Some(max) = taken.iter().next_back().filter(|m| **m > n) {
        return Err(err(format!("{what} positions must be 1..{n}; found {max}")));
    }
    Ok(out)
}

fn ui_trio(out: &mut BTreeSet<Fact>, owner: &str, label: String, position: i64, visible: bool) {
    out.insert(Fact::property(owner, labels::LABEL, Value::Atom(label)));
    out.insert(Fact::property(owner, labels::POSITION, Value::Int(position)));
    out.insert(Fact::property(owner, labels::VISIBLE, Value::Bool(visible)));
}

fn panel_settings(unit: &SourceUnit) -> Result<Option<UiSettings>, ExtractionError> {
    let decl = &unit.class_decl;
    let file = &unit.file_path;
    let mut found = None;
    for a in &decl.annotations {
        match a.name.as_str() {
            PANEL_ANNOTATION if found.is_some() => {
                return Err(ExtractionError::UiAnnotation {
                    file: file.clone(),
                    message: format!("class {} has more than one @Panel", decl.name),
                })
            }
            PANEL_ANNOTATION => found = Some(ui_settings(file, &decl.name, a)?),
            FIELD_ANNOTATION => {
                return Err(ExtractionError::UiAnnotation {
                    file: file.clone(),
                    message: format!("@UiField is not valid on class {}", decl.name),
                })
            }
            _ => {}
        }
    }
    Ok(found)
}

/// UI facts for one unit. A panel without an explicit position is given `panel_position`.
fn ui_facts_at(unit: &SourceUnit, panel_position: Option<i64>) -> Result<BTreeSet<Fact>, ExtractionError> {
    let decl = &unit.class_decl;
    let file = &unit.file_path;
    let err = |message: String| ExtractionError::UiAnnotation {
        file: file.clone(),
        message,
    };
    let mut out = BTreeSet::new();
    let panel = panel_settings(unit)?;
    for m in &decl.methods {
        if m.annotations.iter().any(|a| a.name == PANEL_ANNOTATION || a.name == FIELD_ANNOTATION) {
            return Err(err(format!("UI annotation on method {}.{}", decl.name, m.name)));
        }
    }
    let mut ui_fields = Vec::new();
    for f in &decl.fields {
        let mut setting = None;
        for a in &f.annotations {
            match a.name.as_str() {
                FIELD_ANNOTATION if setting.is_some() => {
                    return Err(err(format!("field {}.{} has more than one @UiField", decl.name, f.name)))
                }
                FIELD_ANNOTATION => setting = Some(ui_settings(file, &f.name, a)?),
                PANEL_ANNOTATION => return Err(err(format!("@Panel is not valid on field {}.{}", decl.name, f.name))),
                _ => {}
            }
        }
        if let Some(s) = setting {
            ui_fields.push((f, s));
        }
    }
    let Some(panel) = panel else {
        if let Some((f, _)) = ui_fields.first() {
            return Err(err(format!("@UiField on {}.{} but class has no @Panel", decl.name, f.name)));
        }
        return Ok(out);
    };
    let panel_id = ids::panel(&decl.name);
    let class_id = ids::class(&decl.name);
    out.insert(Fact::vertex(&panel_id, labels::PANEL));
    out.insert(Fact::edge(
        ids::edge(labels::REPRESENTS, &decl.name),
        &panel_id,
        &class_id,
        labels::REPRESENTS,
    ));
    ui_trio(
        &mut out,
        &panel_id,
        panel.label.unwrap_or_else(|| decl.name.clone()),
        panel.position.or(panel_position).unwrap_or(1),
        panel.visible.unwrap_or(true),
    );
    let requested: Vec<Option<i64>> = ui_fields.iter().map(|(_, s)| s.position).collect();
    let positions = assign_positions(file, &format!("field in {}", decl.name), &requested)?;
    for ((f, s), position) in ui_fields.into_iter().zip(positions) {
        let q = format!("{}.{}", decl.name, f.name);
        let field_id = ids::field(&decl.name, &f.name);
        out.insert(Fact::vertex(&field_id, labels::FIELD));
        out.insert(Fact::edge(
            ids::edge(labels::REFLECTS, &q),
            &field_id,
            ids::attribute(&decl.name, &f.name),
            labels::REFLECTS,
        ));
        out.insert(Fact::edge(ids::edge(labels::HAS_FIELD, &q), &panel_id, &field_id, labels::HAS_FIELD));
        ui_trio(
            &mut out,
            &field_id,
            s.label.clone().unwrap_or_else(|| f.name.clone()),
            position,
            s.visible.unwrap_or(true),
        );
    }
    Ok(out)
}

/// Panel and field facts for one unit, analyzed in isolation (an implicit
/// panel position defaults to 1).
pub fn analyze_ui_facts(unit: &SourceUnit) -> Result<BTreeSet<Fact>, ExtractionError> {
    ui_facts_at(unit, None)
}

/// Whether `method` is the canonical getter or setter of one of the class's fields.
pub fn is_canonical_accessor(decl: &dialect::ClassDecl, method: &dialect::MethodDecl) -> bool {
    decl.fields.iter().any(|f| {
        let getter = method.name == getter_name(&f.name)
            && method.params.is_empty()
            && method.return_type == f.type_ref
            && method.body_text == getter_body(&f.name);
        let setter = method.name == setter_name(&f.name)
            && method.return_type == TypeRef::Void
            && method.params.len() == 1
            && method.params[0].name == SETTER_PARAM
            && method.params[0].type_ref == f.type_ref
            && method.body_text == setter_body(&f.name);
        getter || setter
    })
}

/// Adds built-in type vertices and marks canonical accessors as generated.
/// Idempotent.
pub fn process_metadata(mut kb: KnowledgeBase, units: &[SourceUnit]) -> Result<KnowledgeBase, GraphError> {
    for t in TypeRef::BUILTINS {
        let id = ids::builtin_type(t);
        if kb.vertex_label(&id).is_none() {
            kb.insert_vertex(id, labels::TYPE.to_string())?;
        }
    }
    for unit in units {
        let decl = &unit.class_decl;
        for m in &decl.methods {
            let id = ids::method(&decl.name, &m.name);
            if kb.vertex_label(&id).is_some()
                && kb.property(&id, labels::GENERATED).is_none()
                && is_canonical_accessor(decl, m)
            {
                kb.insert_property(id, labels::GENERATED.to_string(), Value::Bool(true))?;
            }
        }
    }
    Ok(kb)
}

/// Builds the KB from already-parsed units.
pub fn extract_units(units: &[SourceUnit]) -> Result<KnowledgeBase, ExtractionError> {
    let mut units: Vec<&SourceUnit> = units.iter().collect();
    units.sort_by(|a, b| a.file_path.cmp(&b.file_path));

    let mut seen: BTreeMap<&str, &str> = BTreeMap::new();
    for u in &units {
        if let Some(first) = seen.insert(&u.class_decl.name, &u.file_path) {
            return Err(ExtractionError::DuplicateClass {
                name: u.class_decl.name.clone(),
                first: first.to_string(),
                second: u.file_path.clone(),
            });
        }
    }

    // Panels without explicit positions take the smallest unused index in file order.
    let mut requested = Vec::new();
    let mut panel_units = Vec::new();
    for u in &units {
        if let Some(s) = panel_settings(u)? {
            requested.push(s.position);
            panel_units.push(u.file_path.as_str());
        }
    }
    let positions = assign_positions(panel_units.first().copied().unwrap_or(""), "panel", &requested)?;
    let panel_positions: BTreeMap<&str, i64> = panel_units.into_iter().zip(positions).collect();

    let mut facts = BTreeSet::new();
    for u in &units {
        facts.extend(analyze_class_facts(u));
        facts.extend(ui_facts_at(u, panel_positions.get(u.file_path.as_str()).copied())?);
    }

    // References to classes outside the repository carry no edge.
    let vertices: BTreeSet<String> = facts
        .iter()
        .filter_map(|f| match f {
            Fact::Vertex { id, .. } => Some(id.clone()),
            _ => None,
        })
        .chain(TypeRef::BUILTINS.iter().map(|t| ids::builtin_type(t)))
        .collect();
    facts.retain(|f| match f {
        Fact::Edge { from, to, .. } => vertices.contains(from) && vertices.contains(to),
        _ => true,
    });

    let mut base = KnowledgeBase::new();
    for t in TypeRef::BUILTINS {
        base.insert_vertex(ids::builtin_type(t), labels::TYPE.to_string())?;
    }
    let mut all = base.facts();
    all.extend(facts);
    let kb = KnowledgeBase::from_facts(all)?;
    let owned: Vec<SourceUnit> = units.into_iter().cloned().collect();
    Ok(process_metadata(kb, &owned)?)
}

/// Builds the KB from in-memory `(relative path, text)` pairs.
pub fn extract_sources(files: &[(String, String)]) -> Result<KnowledgeBase, ExtractionError> {
    let mut units = Vec::new();
    let mut failures = Vec::new();
    for (path, text) in files {
        match dialect::parse_unit(text, path) {
            Ok(u) => units.push(u),
            Err(e) => failures.push((path.clone(), e)),
        }
    }
    if !failures.is_empty() {
        failures.sort_by(|a, b| a.0.cmp(&b.0));
        return Err(ExtractionError::Parse(failures));
    }
    extract_units(&units)
}

pub fn read_sources(repo: &Path) -> io::Result<Vec<(String, String)>> {
    dialect::scan_sources(repo)?
        .into_iter()
        .map(|(rel, abs)| Ok((rel, std::fs::read_to_string(abs)?)))
        .collect()
}

/// Step 1: extract the abstract graph model of a repository.
pub fn extract_model(repo: &Path) -> Result<KnowledgeBase, ExtractionError> {
    extract_sources(&read_sources(repo)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialect::parse_unit;
    use crate::graph::serialize_kb;

    fn unit(text: &str, path: &str) -> SourceUnit {
        parse_unit(text, path).unwrap()
    }

    #[test]
    fn book_class_facts() {
        let u = unit("class Book { String title; String subject; String author; }", "Book.pss");
        let facts = analyze_class_facts(&u);
        let count = |label: &str| {
            facts
                .iter()
                .filter(|f| matches!(f, Fact::Vertex { label: l, .. } if l == label))
                .count()
        };
        assert_eq!(count("class"), 1);
        assert_eq!(count("attribute"), 3);
        let typed = facts
            .iter()
            .filter(|f| matches!(f, Fact::Edge { to, label, .. } if label == "has_type" && to == "type:String"))
            .count();
        assert_eq!(typed, 3);
    }

    #[test]
    fn empty_class_facts() {
        let facts = analyze_class_facts(&unit("class Shelf { }", "Shelf.pss"));
        let vertices = facts.iter().filter(|f| matches!(f, Fact::Vertex { .. })).count();
        let props = facts.iter().filter(|f| matches!(f, Fact::Property { .. })).count();
        let edges = facts.iter().filter(|f| matches!(f, Fact::Edge { .. })).count();
        assert_eq!((vertices, props, edges), (1, 2, 0));
    }

    #[test]
    fn extends_edge_golden() {
        let facts = analyze_class_facts(&unit("class RatedBook extends Book { int rating; }", "RatedBook.pss"));
        assert!(facts.contains(&Fact::edge(
            "e:extends:RatedBook",
            "class:RatedBook",
            "class:Book",
            "extends"
        )));
    }

    #[test]
    fn ui_facts_for_annotated_class() {
        let u = unit(
            "@Panel class Book { @UiField String title; @UiField String subject; @UiField String author; }",
            "Book.pss",
        );
        let facts = analyze_ui_facts(&u).unwrap();
        let reflects = facts
            .iter()
            .filter(|f| matches!(f, Fact::Edge { label, .. } if label == "reflects"))
            .count();
        let fields = facts
            .iter()
            .filter(|f| matches!(f, Fact::Vertex { label, .. } if label == "field"))
            .count();
        assert_eq!((fields, reflects), (3, 3));
        assert!(facts.contains(&Fact::property("panel:Book", "label", Value::atom("Book"))));
        assert!(facts.contains(&Fact::property("field:Book.author", "position", Value::Int(3))));
        assert!(facts.contains(&Fact::property("field:Book.title", "visible", Value::Bool(true))));
    }

    #[test]
    fn ui_facts_without_annotations_are_empty() {
        assert!(analyze_ui_facts(&unit("class Book { String title; }", "Book.pss")).unwrap().is_empty());
    }

    #[test]
    fn panel_label_from_annotation() {
        let u = unit("@Panel(label=\"Unrated Book\") class Book { }", "Book.pss");
        let facts = analyze_ui_facts(&u).unwrap();
        assert!(facts.contains(&Fact::property("panel:Book", "label", Value::atom("Unrated Book"))));
    }

    #[test]
    fn field_without_panel_is_error() {
        let u = unit("class Book { @UiField String title; }", "Book.pss");
        assert!(matches!(analyze_ui_facts(&u), Err(ExtractionError::UiAnnotation { .. })));
    }

    #[test]
    fn colliding_positions_are_error() {
        let u = unit(
            "@Panel class Book { @UiField(position=1) String a; @UiField(position=1) String b; }",
            "Book.pss",
        );
        assert!(matches!(analyze_ui_facts(&u), Err(ExtractionError::UiAnnotation { .. })));
    }

    #[test]
    fn implicit_positions_fill_gaps() {
        let u = unit(
            "@Panel class Book { @UiField String a; @UiField(position=1) String b; @UiField String c; }",
            "Book.pss",
        );
        let facts = analyze_ui_facts(&u).unwrap();
        assert!(facts.contains(&Fact::property("field:Book.a", "position", Value::Int(2))));
        assert!(facts.contains(&Fact::property("field:Book.b", "position", Value::Int(1))));
        assert!(facts.contains(&Fact::property("field:Book.c", "position", Value::Int(3))));
    }

    #[test]
    fn bad_ui_argument_types() {
        for text in [
            "@Panel(position=\"1\") class A { }",
            "@Panel(position=0) class A { }",
            "@Panel(visible=1) class A { }",
            "@Panel(color=\"red\") class A { }",
        ] {
            assert!(analyze_ui_facts(&unit(text, "A.pss")).is_err(), "{text}");
        }
    }

    #[test]
    fn metadata_adds_types_and_is_idempotent() {
        let once = process_metadata(KnowledgeBase::new(), &[]).unwrap();
        assert_eq!(once.vertex_label("type:int"), Some("type"));
        assert_eq!(once.vertex_count(), 5);
        let twice = process_metadata(once.clone(), &[]).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn canonical_accessors_marked_generated() {
        let u = unit(
            "class Book { String title; String getTitle() { return this.title; } void setTitle(String value) { this.title = value; } String describe() { return this.title; } }",
            "Book.pss",
        );
        let kb = extract_units(std::slice::from_ref(&u)).unwrap();
        assert_eq!(kb.property("method:Book.getTitle", "generated"), Some(&Value::Bool(true)));
        assert_eq!(kb.property("method:Book.setTitle", "generated"), Some(&Value::Bool(true)));
        assert_eq!(kb.property("method:Book.describe", "generated"), None);
        let again = process_metadata(kb.clone(), &[u]).unwrap();
        assert_eq!(again, kb);
    }

    #[test]
    fn empty_repo_has_only_builtin_types() {
        let dir = tempfile::tempdir().unwrap();
        let kb = extract_model(dir.path()).unwrap();
        let mut labels: Vec<_> = kb.vertices().map(|(id, _)| id.to_string()).collect();
        labels.sort();
        assert_eq!(labels, ["type:String", "type:boolean", "type:double", "type:int", "type:void"]);
        assert_eq!(kb.fact_count(), 5);
    }

    #[test]
    fn parse_failures_are_all_reported() {
        let files = vec![
            ("A.pss".to_string(), "class A {".to_string()),
            ("B.pss".to_string(), "class B { }".to_string()),
            ("C.pss".to_string(), "klass C".to_string()),
        ];
        match extract_sources(&files).unwrap_err() {
            ExtractionError::Parse(failures) => {
                let paths: Vec<_> = failures.iter().map(|(p, _)| p.as_str()).collect();
                assert_eq!(paths, ["A.pss", "C.pss"]);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn extraction_is_order_independent() {
        let a = ("A.pss".to_string(), "@Panel class A { @UiField int x; }".to_string());
        let b = ("B.pss".to_string(), "@Panel class B extends A { }".to_string());
        let forward = serialize_kb(&extract_sources(&[a.clone(), b.clone()]).unwrap());
        let backward = serialize_kb(&extract_sources(&[b, a]).unwrap());
        assert_eq!(forward, backward);
        assert!(forward.contains("property('panel:B', position, 2)."));
    }

    #[test]
    fn unresolved_class_references_have_no_edge() {
        let files = vec![("A.pss".to_string(), "class A extends Missing { Ghost g; }".to_string())];
        let kb = extract_sources(&files).unwrap();
        assert!(kb.edge("e:extends:A").is_none());
        assert!(kb.edge("e:has_type:A.g").is_none());
        assert!(kb.edge("e:has_attribute:A.g").is_some());
        kb.validate().unwrap();
    }

    #[test]
    fn duplicate_class_names_across_dirs() {
        let files = vec![
            ("A.pss".to_string(), "class A { }".to_string()),
            ("sub/A.pss".to_string(), "class A { }".to_string()),
        ];
        assert!(matches!(extract_sources(&files), Err(ExtractionError::DuplicateClass { .. })));
    }
}
