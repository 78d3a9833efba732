use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Map, Value as Json};

use crate::dialect::source_file_name;
use crate::extraction::{getter_body, getter_name, setter_body, setter_name, FIELD_ANNOTATION, PANEL_ANNOTATION, SETTER_PARAM};
use crate::graph::{ids, labels, Delta, Fact, KnowledgeBase, Value};

use super::{InjectionError, InjectionKind, InjectionModel};

const UI_KEYS: [&str; 3] = [labels::LABEL, labels::POSITION, labels::VISIBLE];

fn unmappable(what: impl std::fmt::Display) -> InjectionError {
    InjectionError::UnmappableDelta(what.to_string())
}

/// `class:C` → `C`; `attr:C.a` → `(C, a)` style splitting.
fn qualified(id: &str) -> Result<(&str, Option<&str>), InjectionError> {
    let (_, rest) = ids::split(id).ok_or_else(|| unmappable(id))?;
    Ok(match rest.split_once('.') {
        Some((c, m)) => (c, Some(m)),
        None => (rest, None),
    })
}

fn type_name(id: &str) -> &str {
    ids::split(id).map(|(_, n)| n).unwrap_or(id)
}

fn class_file(kb: &KnowledgeBase, class: &str) -> Result<String, InjectionError> {
    match kb.property(&ids::class(class), labels::SOURCE_FILE).and_then(Value::as_atom) {
        Some(f) => Ok(f.to_string()),
        None => Err(unmappable(format!("class {class} has no source file in the model"))),
    }
}

fn json_value(v: &Value) -> Json {
    match v {
        Value::Bool(b) => Json::Bool(*b),
        Value::Int(n) => json!(n),
        Value::Atom(s) => Json::String(s.clone()),
    }
}

fn ui_args(kb: &KnowledgeBase, id: &str) -> Json {
    let mut args = Map::new();
    for key in UI_KEYS {
        if let Some(v) = kb.property(id, key) {
            args.insert(key.to_string(), json_value(v));
        }
    }
    Json::Object(args)
}

fn accessor_spec(kb: &KnowledgeBase, class: &str, method: &str) -> Result<Json, InjectionError> {
    let method_id = ids::method(class, method);
    if kb.property(&method_id, labels::GENERATED) != Some(&Value::Bool(true)) {
        return Err(unmappable(format!("{method_id} is not a generated accessor")));
    }
    for (_, e) in kb.out_edges(&ids::class(class)) {
        if e.label != labels::HAS_ATTRIBUTE {
            continue;
        }
        let Some(attr) = kb.property(&e.to, labels::NAME).and_then(Value::as_atom) else { continue };
        let Some(ty) = kb.target(&e.to, labels::HAS_TYPE).map(type_name) else { continue };
        if method == getter_name(attr) {
            return Ok(json!({"name": method, "return_type": ty, "params": [], "body": getter_body(attr)}));
        }
        if method == setter_name(attr) {
            return Ok(json!({
                "name": method,
                "return_type": "void",
                "params": [{"name": SETTER_PARAM, "type": ty}],
                "body": setter_body(attr),
            }));
        }
    }
    Err(unmappable(format!("{method_id} matches no attribute accessor")))
}

/// Maps every fact of `delta` to injection models against `kb_after`, the
/// model the delta produced. Models are ordered by target file (file-creating
/// first), then by kind.
pub fn plan_injection(delta: &Delta, kb_after: &KnowledgeBase) -> Result<Vec<InjectionModel>, InjectionError> {
    let vertex_ids = |facts: &BTreeSet<Fact>| -> BTreeMap<String, String> {
        facts
            .iter()
            .filter_map(|f| match f {
                Fact::Vertex { id, label } => Some((id.clone(), label.clone())),
                _ => None,
            })
            .collect()
    };
    let added_v = vertex_ids(&delta.added);
    let removed_v = vertex_ids(&delta.removed);

    let mut models = Vec::new();
    let mut methods: BTreeMap<String, Vec<Json>> = BTreeMap::new();

    for (id, label) in &added_v {
        let (class, member) = qualified(id)?;
        match (label.as_str(), member) {
            (labels::CLASS, None) => {
                let superclass = kb_after.target(id, labels::EXTENDS).map(type_name);
                models.push(InjectionModel::new(
                    InjectionKind::AddClass,
                    None,
                    json!({"name": class, "superclass": superclass}),
                ));
            }
            (labels::ATTRIBUTE, Some(attr)) => {
                let ty = kb_after
                    .target(id, labels::HAS_TYPE)
                    .map(type_name)
                    .ok_or_else(|| unmappable(format!("{id} has no type")))?;
                models.push(InjectionModel::new(
                    InjectionKind::AddField,
                    Some(class_file(kb_after, class)?),
                    json!({"class": class, "name": attr, "type": ty}),
                ));
            }
            (labels::METHOD, Some(m)) => {
                methods.entry(class.to_string()).or_default().push(accessor_spec(kb_after, class, m)?);
            }
            (labels::PANEL, None) => models.push(InjectionModel::new(
                InjectionKind::SetAnnotation,
                Some(class_file(kb_after, class)?),
                json!({"class": class, "annotation": PANEL_ANNOTATION, "args": ui_args(kb_after, id)}),
            )),
            (labels::FIELD, Some(attr)) => models.push(InjectionModel::new(
                InjectionKind::SetAnnotation,
                Some(class_file(kb_after, class)?),
                json!({"class": class, "member": attr, "annotation": FIELD_ANNOTATION, "args": ui_args(kb_after, id)}),
            )),
            _ => return Err(unmappable(format!("added vertex {id} ({label})"))),
        }
    }
    for (class, specs) in methods {
        models.push(InjectionModel::new(
            InjectionKind::AddMethods,
            Some(class_file(kb_after, &class)?),
            json!({"class": class, "methods": specs}),
        ));
    }

    for (id, label) in &removed_v {
        let (class, member) = qualified(id)?;
        let file = class_file(kb_after, class).unwrap_or_else(|_| source_file_name(class));
        match (label.as_str(), member) {
            (labels::PANEL, None) => models.push(InjectionModel::new(
                InjectionKind::RemoveAnnotation,
                Some(file),
                json!({"class": class, "annotation": PANEL_ANNOTATION}),
            )),
            (labels::FIELD, Some(attr)) => models.push(InjectionModel::new(
                InjectionKind::RemoveAnnotation,
                Some(file),
                json!({"class": class, "member": attr, "annotation": FIELD_ANNOTATION}),
            )),
            _ => return Err(unmappable(format!("removed vertex {id} ({label})"))),
        }
    }

    // Everything else must be explained by a vertex above or be a UI property edit.
    for f in &delta.added {
        match f {
            Fact::Vertex { .. } => {}
            Fact::Edge { from, to, .. } => {
                if !added_v.contains_key(from) && !added_v.contains_key(to) {
                    return Err(unmappable(format!("added {f}")));
                }
            }
            Fact::Property { owner, key, value } => {
                if added_v.contains_key(owner) {
                    continue;
                }
                let label = kb_after.vertex_label(owner);
                let ui = matches!(label, Some(labels::PANEL) | Some(labels::FIELD));
                if !ui || !UI_KEYS.contains(&key.as_str()) {
                    return Err(unmappable(format!("added {f}")));
                }
                let (class, member) = qualified(owner)?;
                let annotation = if member.is_some() { FIELD_ANNOTATION } else { PANEL_ANNOTATION };
                let mut params = json!({"class": class, "annotation": annotation, "key": key, "value": json_value(value)});
                if let Some(m) = member {
                    params["member"] = json!(m);
                }
                models.push(InjectionModel::new(
                    InjectionKind::SetAnnotation,
                    Some(class_file(kb_after, class)?),
                    params,
                ));
            }
        }
    }
    for f in &delta.removed {
        let explained = match f {
            Fact::Vertex { .. } => true,
            Fact::Edge { from, to, .. } => removed_v.contains_key(from) || removed_v.contains_key(to),
            Fact::Property { owner, key, .. } => {
                removed_v.contains_key(owner)
                    || delta.added.iter().any(
                        |a| matches!(a, Fact::Property { owner: o, key: k, .. } if o == owner && k == key),
                    )
            }
        };
        if !explained {
            return Err(unmappable(format!("removed {f}")));
        }
    }

    models.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
    Ok(models)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::extract_sources;
    use crate::transformation::{add_attribute, create_class, ui_create_element, ui_set_property, UiProps, UiTarget};

    fn kb() -> KnowledgeBase {
        extract_sources(&[
            ("Book.pss".into(), "@Panel(label=\"Book\", position=1, visible=true)\nclass Book { String title; }".into()),
            ("lib/Loan.pss".into(), "class Loan { int days; }".into()),
        ])
        .unwrap()
    }

    #[test]
    fn empty_delta_empty_plan() {
        assert!(plan_injection(&Delta::default(), &kb()).unwrap().is_empty());
    }

    #[test]
    fn create_class_plans_new_file() {
        let o = create_class(&kb(), "Magazine", None).unwrap();
        let plan = plan_injection(&o.delta, &o.kb_after).unwrap();
        assert_eq!(plan.len(), 1);
        assert_eq!(plan[0].injection, InjectionKind::AddClass);
        assert_eq!(plan[0].target_file, None);
    }

    #[test]
    fn add_attribute_plans_field_then_methods() {
        let o = add_attribute(&kb(), "Loan", "ISBN", "String").unwrap();
        let plan = plan_injection(&o.delta, &o.kb_after).unwrap();
        let kinds: Vec<_> = plan.iter().map(|m| m.injection).collect();
        assert_eq!(kinds, [InjectionKind::AddField, InjectionKind::AddMethods]);
        assert!(plan.iter().all(|m| m.target_file.as_deref() == Some("lib/Loan.pss")));
        assert_eq!(plan[1].params["methods"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn set_label_is_one_annotation_edit() {
        let o = ui_set_property(&kb(), &UiTarget::panel("Book"), "label", &json!("Unrated Book")).unwrap();
        let plan = plan_injection(&o.delta, &o.kb_after).unwrap();
        assert_eq!(plan.len(), 1);
        assert_eq!(plan[0].injection, InjectionKind::SetAnnotation);
        assert_eq!(plan[0].params["key"], json!("label"));
        assert_eq!(plan[0].params["value"], json!("Unrated Book"));
    }

    #[test]
    fn panel_insert_edits_shifted_panels() {
        let props = UiProps {
            position: Some(json!(1)),
            ..UiProps::default()
        };
        let o = ui_create_element(&kb(), &UiTarget::panel("Loan"), &props).unwrap();
        let plan = plan_injection(&o.delta, &o.kb_after).unwrap();
        let files: Vec<_> = plan.iter().map(|m| m.target_file.clone().unwrap()).collect();
        assert_eq!(files, ["Book.pss", "lib/Loan.pss"]);
        assert_eq!(plan[0].params["key"], json!("position"));
        assert_eq!(plan[1].params["args"], json!({"label": "Loan", "position": 1, "visible": true}));
    }

    #[test]
    fn structural_removal_is_unmappable() {
        let kb = kb();
        let mut delta = Delta::default();
        delta.removed.insert(Fact::property("attr:Book.title", "name", Value::atom("title")));
        assert!(matches!(plan_injection(&delta, &kb), Err(InjectionError::UnmappableDelta(_))));
    }
}
