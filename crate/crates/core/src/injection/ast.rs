use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::dialect::{Annotation, FieldDecl, Literal, MethodDecl, Param, SourceUnit, TypeRef};
use crate::graph::labels;

use super::{InjectionError, InjectionKind, InjectionModel};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Anchor {
    AfterLastField,
    EndOfClassBody,
    /// The annotation block of the class (`member: None`) or of a field.
    AnnotationSlotOf { member: Option<String> },
    NewFile,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectionPoint {
    pub file: String,
    pub anchor: Anchor,
    /// Index within the anchor's list (fields, methods, or annotations).
    pub index: usize,
}

fn check_class(unit: &SourceUnit, model: &InjectionModel) -> Result<(), InjectionError> {
    let class = model.str_param("class")?;
    if class != unit.class_decl.name {
        return Err(InjectionError::AnchorNotFound(format!(
            "{} declares {}, not {class}",
            unit.file_path, unit.class_decl.name
        )));
    }
    Ok(())
}

fn annotations<'a>(unit: &'a SourceUnit, member: Option<&str>) -> Result<&'a [Annotation], InjectionError> {
    match member {
        None => Ok(&unit.class_decl.annotations),
        Some(m) => unit
            .class_decl
            .field(m)
            .map(|f| f.annotations.as_slice())
            .ok_or_else(|| InjectionError::AnchorNotFound(format!("no field {}.{m}", unit.class_decl.name))),
    }
}

fn annotations_mut<'a>(unit: &'a mut SourceUnit, member: Option<&str>) -> &'a mut Vec<Annotation> {
    match member {
        None => &mut unit.class_decl.annotations,
        Some(m) => {
            &mut unit
                .class_decl
                .fields
                .iter_mut()
                .find(|f| f.name == m)
                .expect("located before editing")
                .annotations
        }
    }
}

/// Where `model` applies in `unit`, per the fixed anchor table.
pub fn locate_injection_point(unit: &SourceUnit, model: &InjectionModel) -> Result<InjectionPoint, InjectionError> {
    let file = unit.file_path.clone();
    let point = |anchor, index| InjectionPoint { file: file.clone(), anchor, index };
    if model.injection == InjectionKind::AddClass {
        return Ok(point(Anchor::NewFile, 0));
    }
    check_class(unit, model)?;
    let decl = &unit.class_decl;
    match model.injection {
        InjectionKind::AddField => Ok(point(Anchor::AfterLastField, decl.fields.len())),
        InjectionKind::AddMethods => Ok(point(Anchor::EndOfClassBody, decl.methods.len())),
        InjectionKind::SetAnnotation | InjectionKind::RemoveAnnotation => {
            let member = model.opt_str("member")?;
            let name = model.str_param("annotation")?;
            let existing = annotations(unit, member)?;
            let found = existing.iter().position(|a| a.name == name);
            let creating = model.injection == InjectionKind::SetAnnotation && model.params.contains_key("args");
            let index = match found {
                Some(i) => i,
                None if creating => existing.len(),
                None => {
                    let owner = match member {
                        Some(m) => format!("{}.{m}", decl.name),
                        None => decl.name.clone(),
                    };
                    return Err(InjectionError::AnchorNotFound(format!("@{name} on {owner}")));
                }
            };
            Ok(point(
                Anchor::AnnotationSlotOf {
                    member: member.map(str::to_string),
                },
                index,
            ))
        }
        InjectionKind::AddClass => unreachable!(),
    }
}

fn literal(value: &Json) -> Result<Literal, InjectionError> {
    match value {
        Json::String(s) => Ok(Literal::Str(s.clone())),
        Json::Bool(b) => Ok(Literal::Bool(*b)),
        Json::Number(n) => n
            .as_i64()
            .map(Literal::Int)
            .ok_or_else(|| InjectionError::Model(format!("annotation value {n} is not an integer"))),
        other => Err(InjectionError::Model(format!("unsupported annotation value {other}"))),
    }
}

fn type_param(model: &InjectionModel, value: Option<&Json>, what: &str) -> Result<TypeRef, InjectionError> {
    match value {
        Some(Json::String(s)) => Ok(TypeRef::from_name(s)),
        _ => Err(InjectionError::Model(format!("{}: {what} must be a type name", model.injection))),
    }
}

fn method_decl(model: &InjectionModel, spec: &Json) -> Result<MethodDecl, InjectionError> {
    let bad = |what: &str| InjectionError::Model(format!("add_methods: {what}"));
    let obj = spec.as_object().ok_or_else(|| bad("each method must be an object"))?;
    let name = obj.get("name").and_then(Json::as_str).ok_or_else(|| bad("method name missing"))?;
    let return_type = type_param(model, obj.get("return_type"), "return_type")?;
    let body = obj.get("body").and_then(Json::as_str).unwrap_or_default();
    let mut params = Vec::new();
    for p in obj.get("params").and_then(Json::as_array).into_iter().flatten() {
        let pname = p.get("name").and_then(Json::as_str).ok_or_else(|| bad("parameter name missing"))?;
        params.push(Param {
            name: pname.to_string(),
            type_ref: type_param(model, p.get("type"), "parameter type")?,
        });
    }
    Ok(MethodDecl {
        name: name.to_string(),
        return_type,
        params,
        body_text: body.to_string(),
        annotations: Vec::new(),
    })
}

/// The new unit an `add_class` model creates.
pub(crate) fn new_class_unit(model: &InjectionModel) -> Result<SourceUnit, InjectionError> {
    let name = model.str_param("name")?;
    let superclass = model.opt_str("superclass")?.map(str::to_string);
    Ok(SourceUnit::for_new_class(name, superclass))
}

/// Applies one model to a unit. `add_class` models have no anchor in an
/// existing unit and are rejected here.
pub fn inject_ast(unit: &SourceUnit, model: &InjectionModel) -> Result<SourceUnit, InjectionError> {
    if model.injection == InjectionKind::AddClass {
        return Err(InjectionError::AnchorNotFound("add_class creates a new file".into()));
    }
    let point = locate_injection_point(unit, model)?;
    let mut out = unit.clone();
    match model.injection {
        InjectionKind::AddField => {
            let name = model.str_param("name")?;
            if out.class_decl.has_member(name) {
                return Err(InjectionError::Model(format!("{}.{name} already declared", out.class_decl.name)));
            }
            out.class_decl.fields.insert(
                point.index,
                FieldDecl {
                    name: name.to_string(),
                    type_ref: type_param(model, model.params.get("type"), "type")?,
                    annotations: Vec::new(),
                },
            );
        }
        InjectionKind::AddMethods => {
            let specs = model
                .params
                .get("methods")
                .and_then(Json::as_array)
                .ok_or_else(|| InjectionError::Model("add_methods requires a 'methods' array".into()))?;
            let mut at = point.index;
            for spec in specs {
                let m = method_decl(model, spec)?;
                if out.class_decl.has_member(&m.name) {
                    return Err(InjectionError::Model(format!("{}.{} already declared", out.class_decl.name, m.name)));
                }
                out.class_decl.methods.insert(at, m);
                at += 1;
            }
        }
        InjectionKind::SetAnnotation => {
            let Anchor::AnnotationSlotOf { member } = &point.anchor else { unreachable!() };
            let name = model.str_param("annotation")?;
            let list = annotations_mut(&mut out, member.as_deref());
            if let Some(args) = model.params.get("args") {
                let args = args
                    .as_object()
                    .ok_or_else(|| InjectionError::Model("set_annotation: 'args' must be an object".into()))?;
                let mut a = Annotation::new(name);
                for key in [labels::LABEL, labels::POSITION, labels::VISIBLE] {
                    if let Some(v) = args.get(key).filter(|v| !v.is_null()) {
                        a.set_arg(key, literal(v)?);
                    }
                }
                if point.index < list.len() {
                    list[point.index] = a;
                } else {
                    list.push(a);
                }
            } else {
                let key = model.str_param("key")?;
                let value = model
                    .params
                    .get("value")
                    .ok_or_else(|| InjectionError::Model("set_annotation requires 'value' or 'args'".into()))?;
                list[point.index].set_arg(key, literal(value)?);
            }
        }
        InjectionKind::RemoveAnnotation => {
            let Anchor::AnnotationSlotOf { member } = &point.anchor else { unreachable!() };
            annotations_mut(&mut out, member.as_deref()).remove(point.index);
        }
        InjectionKind::AddClass => unreachable!(),
    }
    Ok(out)
}
