use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value as Json;

use crate::dialect::{is_identifier, source_file_name, TypeRef};
use crate::extraction::{getter_name, setter_name};
use crate::graph::{ids, labels, KnowledgeBase, Production, Value};

use super::rules::{rewrite_once, RuleBuilder};
use super::{Op, Rejection, TransformError, TransformationOutcome, TransformationRequest};

type Bindings = BTreeMap<String, Value>;
/// A production ready to match, or the reason the operation may not run.
type Plan = Result<(Production, Bindings), Rejection>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UiKind {
    Panel,
    Field,
}

impl UiKind {
    pub fn parse(s: &str) -> Option<UiKind> {
        match s {
            "panel" => Some(UiKind::Panel),
            "field" => Some(UiKind::Field),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UiTarget {
    Panel { class: String },
    Field { class: String, attribute: String },
}

impl UiTarget {
    pub fn panel(class: &str) -> Self {
        UiTarget::Panel { class: class.to_string() }
    }

    pub fn field(class: &str, attribute: &str) -> Self {
        UiTarget::Field {
            class: class.to_string(),
            attribute: attribute.to_string(),
        }
    }

    pub fn kind(&self) -> UiKind {
        match self {
            UiTarget::Panel { .. } => UiKind::Panel,
            UiTarget::Field { .. } => UiKind::Field,
        }
    }

    pub fn class(&self) -> &str {
        match self {
            UiTarget::Panel { class } | UiTarget::Field { class, .. } => class,
        }
    }

    fn vertex_id(&self) -> String {
        match self {
            UiTarget::Panel { class } => ids::panel(class),
            UiTarget::Field { class, attribute } => ids::field(class, attribute),
        }
    }

    fn label(&self) -> &'static str {
        match self {
            UiTarget::Panel { .. } => labels::PANEL,
            UiTarget::Field { .. } => labels::FIELD,
        }
    }

    fn describe(&self) -> String {
        match self {
            UiTarget::Panel { class } => class.clone(),
            UiTarget::Field { class, attribute } => format!("{class}.{attribute}"),
        }
    }
}

/// Optional label/position/visible values as supplied by the caller; types
/// are checked by the operation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UiProps {
    pub label: Option<Json>,
    pub position: Option<Json>,
    pub visible: Option<Json>,
}

fn class_exists(kb: &KnowledgeBase, name: &str) -> bool {
    kb.vertex_label(&ids::class(name)) == Some(labels::CLASS)
}

fn superclass_of(kb: &KnowledgeBase, name: &str) -> Option<String> {
    kb.target(&ids::class(name), labels::EXTENDS)
        .and_then(|t| t.strip_prefix("class:"))
        .map(str::to_string)
}

/// `name` and its transitive superclasses, stopping at cycles.
fn ancestry(kb: &KnowledgeBase, name: &str) -> Vec<String> {
    let mut out = vec![name.to_string()];
    let mut seen: BTreeSet<String> = out.iter().cloned().collect();
    let mut cur = name.to_string();
    while let Some(sup) = superclass_of(kb, &cur) {
        if !seen.insert(sup.clone()) {
            break;
        }
        out.push(sup.clone());
        cur = sup;
    }
    out
}

/// Classes that inherit (transitively) from `name`.
fn descendants(kb: &KnowledgeBase, name: &str) -> Vec<String> {
    kb.vertices_with_label(labels::CLASS)
        .filter_map(|id| id.strip_prefix("class:"))
        .filter(|c| *c != name && ancestry(kb, c).iter().any(|a| a == name))
        .map(str::to_string)
        .collect()
}

fn position_of(kb: &KnowledgeBase, id: &str) -> i64 {
    kb.property(id, labels::POSITION).and_then(Value::as_int).unwrap_or(0)
}

/// Panels or fields competing with `target` for positions, with their positions.
fn siblings(kb: &KnowledgeBase, target: &UiTarget) -> Vec<(String, i64)> {
    let ids: Vec<String> = match target {
        UiTarget::Panel { .. } => kb.vertices_with_label(labels::PANEL).map(str::to_string).collect(),
        UiTarget::Field { class, .. } => kb
            .out_edges(&ids::panel(class))
            .filter(|(_, e)| e.label == labels::HAS_FIELD)
            .map(|(_, e)| e.to.clone())
            .collect(),
    };
    let mut out: Vec<(String, i64)> = ids.into_iter().map(|id| (id.clone(), position_of(kb, &id))).collect();
    out.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    out
}

fn valid_name(name: &str) -> bool {
    is_identifier(name) && !matches!(name, "class" | "extends" | "true" | "false")
}

fn shift_positions(b: &mut RuleBuilder, label: &str, moves: &[(String, i64, i64)]) {
    for (i, (id, old, new)) in moves.iter().enumerate() {
        if old == new {
            continue;
        }
        let var = format!("moved{i}");
        let t = b.keep_vertex(&var, id, label);
        b.rewrite_prop(&t, labels::POSITION, &format!("{var}_position"), Value::Int(*old), Value::Int(*new));
    }
}

fn plan_create_class(kb: &KnowledgeBase, name: &str, superclass: Option<&str>) -> Result<Plan, TransformError> {
    if !valid_name(name) || TypeRef::from_name(name).is_builtin() {
        return Ok(Err(Rejection::InvalidName(name.to_string())));
    }
    if kb.has_element(&ids::class(name)) {
        return Ok(Err(Rejection::DuplicateClass(name.to_string())));
    }
    if let Some(sup) = superclass {
        if !class_exists(kb, sup) {
            return Ok(Err(Rejection::SuperclassNotFound(sup.to_string())));
        }
    }
    let mut b = RuleBuilder::new("create_class");
    let sup = superclass.map(|s| b.keep_vertex("super", &ids::class(s), labels::CLASS));
    let cls = b.add_vertex("cls", &ids::class(name), labels::CLASS);
    b.add_prop(&cls, labels::NAME, "cls_name", Value::atom(name));
    b.add_prop(&cls, labels::SOURCE_FILE, "cls_file", Value::atom(source_file_name(name)));
    if let Some(sup) = sup {
        b.add_edge("extends", &ids::edge(labels::EXTENDS, name), &cls, &sup, labels::EXTENDS);
    }
    Ok(Ok(b.build()?))
}

fn plan_add_attribute(kb: &KnowledgeBase, class: &str, attr: &str, type_name: &str) -> Result<Plan, TransformError> {
    if !class_exists(kb, class) {
        return Ok(Err(Rejection::ClassNotFound(class.to_string())));
    }
    if !valid_name(attr) {
        return Ok(Err(Rejection::InvalidName(attr.to_string())));
    }
    let type_ref = TypeRef::from_name(type_name);
    let type_id = match &type_ref {
        TypeRef::Void => return Ok(Err(Rejection::TypeNotFound(type_name.to_string()))),
        t if t.is_builtin() => ids::builtin_type(type_name),
        _ if valid_name(type_name) && class_exists(kb, type_name) => ids::class(type_name),
        _ => return Ok(Err(Rejection::TypeNotFound(type_name.to_string()))),
    };
    let qualified = format!("{class}.{attr}");
    let related = ancestry(kb, class).into_iter().chain(descendants(kb, class));
    for c in related {
        if kb.has_element(&ids::attribute(&c, attr)) {
            return Ok(Err(Rejection::DuplicateAttribute(qualified)));
        }
    }
    if kb.has_element(&ids::method(class, attr)) {
        return Ok(Err(Rejection::DuplicateAttribute(qualified)));
    }
    let getter = getter_name(attr);
    let setter = setter_name(attr);
    for m in [&getter, &setter] {
        if kb.has_element(&ids::method(class, m)) || kb.has_element(&ids::attribute(class, m)) {
            return Ok(Err(Rejection::DuplicateMethod(format!("{class}.{m}"))));
        }
    }

    let mut b = RuleBuilder::new("add_attribute");
    let class_id = ids::class(class);
    let cls = b.keep_vertex("cls", &class_id, labels::CLASS);
    let ty = if type_id == class_id {
        cls.clone()
    } else {
        let label = if type_ref.is_builtin() { labels::TYPE } else { labels::CLASS };
        b.keep_vertex("type", &type_id, label)
    };
    let void = b.keep_vertex("void", &ids::builtin_type("void"), labels::TYPE);

    let a = b.add_vertex("attr", &ids::attribute(class, attr), labels::ATTRIBUTE);
    b.add_prop(&a, labels::NAME, "attr_name", Value::atom(attr));
    b.add_edge("has_attribute", &ids::edge(labels::HAS_ATTRIBUTE, &qualified), &cls, &a, labels::HAS_ATTRIBUTE);
    b.add_edge("has_type", &ids::edge(labels::HAS_TYPE, &qualified), &a, &ty, labels::HAS_TYPE);

    for (role, name, returns) in [("getter", &getter, &ty), ("setter", &setter, &void)] {
        let q = format!("{class}.{name}");
        let m = b.add_vertex(role, &ids::method(class, name), labels::METHOD);
        b.add_prop(&m, labels::NAME, &format!("{role}_name"), Value::atom(name.as_str()));
        b.add_prop(&m, labels::GENERATED, &format!("{role}_generated"), Value::Bool(true));
        b.add_edge(
            &format!("{role}_has_method"),
            &ids::edge(labels::HAS_METHOD, &q),
            &cls,
            &m,
            labels::HAS_METHOD,
        );
        b.add_edge(&format!("{role}_returns"), &ids::edge(labels::RETURNS, &q), &m, returns, labels::RETURNS);
    }
    Ok(Ok(b.build()?))
}

fn check_label(v: &Option<Json>) -> Result<Option<String>, Rejection> {
    match v {
        None | Some(Json::Null) => Ok(None),
        Some(Json::String(s)) => Ok(Some(s.clone())),
        Some(other) => Err(Rejection::BadValueType(format!("label must be a string, got {other}"))),
    }
}

fn check_visible(v: &Option<Json>) -> Result<Option<bool>, Rejection> {
    match v {
        None | Some(Json::Null) => Ok(None),
        Some(Json::Bool(b)) => Ok(Some(*b)),
        Some(other) => Err(Rejection::BadValueType(format!("visible must be a boolean, got {other}"))),
    }
}

/// Position in `1..=max`.
fn check_position(v: &Option<Json>, max: i64) -> Result<Option<i64>, Rejection> {
    match v {
        None | Some(Json::Null) => Ok(None),
        Some(Json::Number(n)) => match n.as_i64() {
            Some(p) if (1..=max).contains(&p) => Ok(Some(p)),
            _ => Err(Rejection::BadValueType(format!("position must be an integer in 1..={max}, got {n}"))),
        },
        Some(other) => Err(Rejection::BadValueType(format!("position must be an integer, got {other}"))),
    }
}

fn plan_ui_create(kb: &KnowledgeBase, target: &UiTarget, props: &UiProps) -> Result<Plan, TransformError> {
    let class = target.class();
    if !class_exists(kb, class) {
        return Ok(Err(Rejection::TargetNotFound(class.to_string())));
    }
    if let UiTarget::Field { attribute, .. } = target {
        if !kb.has_element(&ids::attribute(class, attribute)) {
            return Ok(Err(Rejection::TargetNotFound(target.describe())));
        }
        if !kb.has_element(&ids::panel(class)) {
            return Ok(Err(Rejection::PanelMissing(class.to_string())));
        }
    }
    if kb.has_element(&target.vertex_id()) {
        return Ok(Err(Rejection::DuplicateElement(target.describe())));
    }
    let siblings = siblings(kb, target);
    let n = siblings.len() as i64;
    let (label, position, visible) = match (
        check_label(&props.label),
        check_position(&props.position, n + 1),
        check_visible(&props.visible),
    ) {
        (Ok(l), Ok(p), Ok(v)) => (l, p.unwrap_or(n + 1), v.unwrap_or(true)),
        (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => return Ok(Err(e)),
    };
    let label = label.unwrap_or_else(|| match target {
        UiTarget::Panel { class } => class.clone(),
        UiTarget::Field { attribute, .. } => attribute.clone(),
    });

    let mut b = RuleBuilder::new(match target.kind() {
        UiKind::Panel => "create_panel",
        UiKind::Field => "create_field",
    });
    let class_id = ids::class(class);
    let cls = b.keep_vertex("cls", &class_id, labels::CLASS);
    let moves: Vec<(String, i64, i64)> = siblings
        .iter()
        .map(|(id, pos)| (id.clone(), *pos, if *pos >= position { pos + 1 } else { *pos }))
        .collect();
    shift_positions(&mut b, target.label(), &moves);
    let element = b.add_vertex("element", &target.vertex_id(), target.label());
    match target {
        UiTarget::Panel { class } => {
            b.add_edge("represents", &ids::edge(labels::REPRESENTS, class), &element, &cls, labels::REPRESENTS);
        }
        UiTarget::Field { class, attribute } => {
            let q = format!("{class}.{attribute}");
            let attr = b.keep_vertex("attr", &ids::attribute(class, attribute), labels::ATTRIBUTE);
            let panel = b.keep_vertex("panel", &ids::panel(class), labels::PANEL);
            b.keep_edge("has_attribute", &ids::edge(labels::HAS_ATTRIBUTE, &q), &cls, &attr, labels::HAS_ATTRIBUTE);
            b.keep_edge("represents", &ids::edge(labels::REPRESENTS, class), &panel, &cls, labels::REPRESENTS);
            b.add_edge("reflects", &ids::edge(labels::REFLECTS, &q), &element, &attr, labels::REFLECTS);
            b.add_edge("has_field", &ids::edge(labels::HAS_FIELD, &q), &panel, &element, labels::HAS_FIELD);
        }
    }
    b.add_prop(&element, labels::LABEL, "label", Value::Atom(label));
    b.add_prop(&element, labels::POSITION, "position", Value::Int(position));
    b.add_prop(&element, labels::VISIBLE, "visible", Value::Bool(visible));
    Ok(Ok(b.build()?))
}

fn plan_ui_remove(kb: &KnowledgeBase, target: &UiTarget) -> Result<Plan, TransformError> {
    let id = target.vertex_id();
    if kb.vertex_label(&id) != Some(target.label()) {
        return Ok(Err(Rejection::TargetNotFound(target.describe())));
    }
    let removed_at = position_of(kb, &id);
    let mut b = RuleBuilder::new(match target.kind() {
        UiKind::Panel => "remove_panel",
        UiKind::Field => "remove_field",
    });
    b.delete_vertex("element", &id, target.label());
    if let UiTarget::Panel { class } = target {
        let fields: Vec<String> = siblings(kb, &UiTarget::field(class, "")).into_iter().map(|(f, _)| f).collect();
        for (i, f) in fields.iter().enumerate() {
            b.delete_vertex(&format!("field{i}"), f, labels::FIELD);
        }
    }
    let moves: Vec<(String, i64, i64)> = siblings(kb, target)
        .into_iter()
        .filter(|(sid, _)| *sid != id)
        .map(|(sid, pos)| (sid, pos, if pos > removed_at { pos - 1 } else { pos }))
        .collect();
    shift_positions(&mut b, target.label(), &moves);
    Ok(Ok(b.build()?))
}

fn plan_ui_set(kb: &KnowledgeBase, target: &UiTarget, key: &str, value: &Json) -> Result<Plan, TransformError> {
    let id = target.vertex_id();
    if kb.vertex_label(&id) != Some(target.label()) {
        return Ok(Err(Rejection::TargetNotFound(target.describe())));
    }
    let current = kb.property(&id, key).cloned();
    let siblings = siblings(kb, target);
    let new = match key {
        labels::LABEL => check_label(&Some(value.clone())).map(|v| v.map(Value::Atom)),
        labels::VISIBLE => check_visible(&Some(value.clone())).map(|v| v.map(Value::Bool)),
        labels::POSITION => check_position(&Some(value.clone()), siblings.len() as i64).map(|v| v.map(Value::Int)),
        other => return Err(TransformError::Request(format!("unknown UI property '{other}'"))),
    };
    let new = match new {
        Ok(Some(v)) => v,
        Ok(None) => return Ok(Err(Rejection::BadValueType(format!("{key} must not be null")))),
        Err(e) => return Ok(Err(e)),
    };
    let Some(old) = current else {
        return Err(TransformError::Request(format!("{} has no {key} property", target.describe())));
    };

    let mut b = RuleBuilder::new(match key {
        labels::LABEL => "set_label",
        labels::VISIBLE => "set_visibility",
        _ => "set_position",
    });
    if key == labels::POSITION {
        let from = old.as_int().unwrap_or(0);
        let to = new.as_int().unwrap_or(0);
        let moves: Vec<(String, i64, i64)> = siblings
            .iter()
            .map(|(sid, pos)| {
                let pos = *pos;
                let next = if *sid == id {
                    to
                } else if to < from && (to..from).contains(&pos) {
                    pos + 1
                } else if to > from && (from + 1..=to).contains(&pos) {
                    pos - 1
                } else {
                    pos
                };
                (sid.clone(), pos, next)
            })
            .collect();
        if from == to {
            let t = b.keep_vertex("element", &id, target.label());
            b.rewrite_prop(&t, key, "value", old, new);
        } else {
            shift_positions(&mut b, target.label(), &moves);
        }
    } else {
        let t = b.keep_vertex("element", &id, target.label());
        b.rewrite_prop(&t, key, "value", old, new);
    }
    Ok(Ok(b.build()?))
}

fn run(kb: &KnowledgeBase, plan: Plan) -> Result<TransformationOutcome, TransformError> {
    match plan {
        Err(reason) => Ok(TransformationOutcome::rejected(kb, reason)),
        Ok((prod, bindings)) => {
            let (after, delta) = rewrite_once(&prod, &bindings, kb)?;
            Ok(TransformationOutcome::applied(after, delta))
        }
    }
}

pub fn create_class(
    kb: &KnowledgeBase,
    name: &str,
    superclass: Option<&str>,
) -> Result<TransformationOutcome, TransformError> {
    run(kb, plan_create_class(kb, name, superclass)?)
}

/// Adds an attribute plus its `get`/`set` accessors.
pub fn add_attribute(
    kb: &KnowledgeBase,
    class: &str,
    attr: &str,
    type_name: &str,
) -> Result<TransformationOutcome, TransformError> {
    run(kb, plan_add_attribute(kb, class, attr, type_name)?)
}

pub fn ui_create_element(
    kb: &KnowledgeBase,
    target: &UiTarget,
    props: &UiProps,
) -> Result<TransformationOutcome, TransformError> {
    run(kb, plan_ui_create(kb, target, props)?)
}

/// Removing a panel also removes its fields.
pub fn ui_remove_element(kb: &KnowledgeBase, target: &UiTarget) -> Result<TransformationOutcome, TransformError> {
    run(kb, plan_ui_remove(kb, target)?)
}

/// `key` is one of `label`, `position`, `visible`. Changing a position shifts
/// the siblings in between so positions stay a permutation of 1..=n.
pub fn ui_set_property(
    kb: &KnowledgeBase,
    target: &UiTarget,
    key: &str,
    value: &Json,
) -> Result<TransformationOutcome, TransformError> {
    run(kb, plan_ui_set(kb, target, key, value)?)
}

fn ui_target(req: &TransformationRequest) -> Result<UiTarget, TransformError> {
    let class = req.required_str("class")?;
    let attribute = req.str_param("attribute")?;
    let kind = match req.op {
        Op::CreatePanel | Op::RemovePanel => UiKind::Panel,
        Op::CreateField | Op::RemoveField => UiKind::Field,
        _ => {
            let kind = req.required_str("kind")?;
            UiKind::parse(kind)
                .ok_or_else(|| TransformError::Request(format!("kind must be 'panel' or 'field', got '{kind}'")))?
        }
    };
    match (kind, attribute) {
        (UiKind::Panel, None) => Ok(UiTarget::panel(class)),
        (UiKind::Panel, Some(_)) => Err(TransformError::Request("panel targets take no attribute".into())),
        (UiKind::Field, Some(a)) => Ok(UiTarget::field(class, a)),
        (UiKind::Field, None) => Err(TransformError::Request("field targets require 'attribute'".into())),
    }
}

fn plan_request(kb: &KnowledgeBase, req: &TransformationRequest) -> Result<Plan, TransformError> {
    req.check_schema()?;
    match req.op {
        Op::CreateClass => plan_create_class(kb, req.required_str("name")?, req.str_param("superclass")?),
        Op::AddAttribute => plan_add_attribute(
            kb,
            req.required_str("class")?,
            req.required_str("name")?,
            req.required_str("type")?,
        ),
        Op::CreatePanel | Op::CreateField => {
            let props = UiProps {
                label: req.params.get("label").cloned(),
                position: req.params.get("position").cloned(),
                visible: req.params.get("visible").cloned(),
            };
            plan_ui_create(kb, &ui_target(req)?, &props)
        }
        Op::RemovePanel | Op::RemoveField => plan_ui_remove(kb, &ui_target(req)?),
        Op::SetLabel | Op::SetPosition | Op::SetVisibility => {
            let key = match req.op {
                Op::SetLabel => labels::LABEL,
                Op::SetPosition => labels::POSITION,
                _ => labels::VISIBLE,
            };
            let value = req.params.get("value").cloned().unwrap_or(Json::Null);
            plan_ui_set(kb, &ui_target(req)?, key, &value)
        }
    }
}

/// The production (and anchoring bindings) a request would run, or the
/// rejection it would produce.
pub fn production_for(
    kb: &KnowledgeBase,
    req: &TransformationRequest,
) -> Result<Result<(Production, BTreeMap<String, Value>), Rejection>, TransformError> {
    plan_request(kb, req)
}

/// Runs one request against the model only.
pub fn dispatch(kb: &KnowledgeBase, req: &TransformationRequest) -> Result<TransformationOutcome, TransformError> {
    run(kb, plan_request(kb, req)?)
}
