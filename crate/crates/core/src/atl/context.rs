//! Exposes the bound model to templates as [`Value`] nodes.
//!
//! Attribute names follow the document vocabulary (`tableName`, `isPK`,
//! `fkEntityName` …). Absent optional attributes are present as `Null` so
//! templates can test them without erroring. A few derived attributes are
//! added for convenience: `entity.columns`, `entity.pk`,
//! `entity.nonKeyFields`, `entity.insertFields`, `constraint.left/right`.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::value::{Localization, Node, Value};
use crate::model::{
    effective_columns, ApplicationModel, ColumnSpec, Constraint, Entity, Field, LocalizedText,
};

fn localization(
    texts: &[(&str, &LocalizedText)],
    default_language: Option<&str>,
    attr_name: Option<&str>,
    structural_name: String,
) -> Localization {
    Localization {
        texts: texts
            .iter()
            .map(|(k, t)| (k.to_string(), (*t).clone()))
            .collect(),
        default_language: default_language.map(str::to_string),
        attr_name: attr_name.map(str::to_string),
        structural_name,
    }
}

pub fn field_node(f: &Field, default_language: Option<&str>) -> Node {
    let mut n = Node::new("Field")
        .with("name", f.name.as_str())
        .with("type", f.field_type.to_string())
        .with("length", Value::opt_int(f.length))
        .with("nullable", f.nullable)
        .with("isPK", f.is_pk)
        .with("isIdentity", f.is_identity)
        .with("isFK", f.is_fk)
        .with("fkEntityName", Value::opt_text(f.fk_entity_name.as_deref()))
        .with("fkName", Value::opt_text(f.fk_name.as_deref()))
        .with("isLookup", f.is_lookup)
        .with("createLookup", f.create_lookup)
        .with("isOVN", f.is_ovn)
        .with("isAudited", f.is_audited)
        .with("isShownInList", f.is_shown_in_list)
        .with("isShownInEdit", f.is_shown_in_edit)
        .with("isShownInHistory", f.is_shown_in_history)
        .with("description", Value::opt_text(f.description.as_deref()))
        .with("defaultValue", Value::opt_text(f.default_value.as_deref()))
        .with("displayFormat", Value::opt_text(f.display_format.as_deref()))
        .with("numberOfRows", Value::opt_int(f.number_of_rows))
        .with("numberOfCols", Value::opt_int(f.number_of_cols))
        .with("displayNameAttr", Value::opt_text(f.display_name_attr.as_deref()));
    n.localization = Some(localization(
        &[("DisplayName", &f.display_names)],
        default_language,
        f.display_name_attr.as_deref(),
        f.name.clone(),
    ));
    n
}

pub fn column_node(c: &ColumnSpec) -> Node {
    Node::new("Column")
        .with("name", c.name.as_str())
        .with("type", c.column_type.to_string())
        .with("length", Value::opt_int(c.length))
        .with("nullable", c.nullable)
        .with("identity", c.identity)
}

fn constraint_node(
    c: &Constraint,
    fields: &BTreeMap<&str, Value>,
    entity: &Entity,
    default_language: Option<&str>,
) -> Node {
    let resolved: Vec<Value> = c
        .cfields
        .iter()
        .filter_map(|name| fields.get(name.as_str()).cloned())
        .collect();
    let any_nullable = c
        .cfields
        .iter()
        .filter_map(|name| entity.field(name))
        .any(|f| f.nullable);
    let pick = |i: usize| {
        c.cfields
            .get(i)
            .and_then(|name| fields.get(name.as_str()).cloned())
            .unwrap_or(Value::Null)
    };
    let mut n = Node::new("Constraint")
        .with("type", c.kind.to_string())
        .with(
            "relationship",
            c.relationship
                .as_ref()
                .map_or(Value::Null, |r| Value::text(r.to_string())),
        )
        .with(
            "cfields",
            Value::seq(c.cfields.iter().map(|s| Value::text(s.as_str())).collect()),
        )
        .with("fields", Value::seq(resolved))
        .with("left", pick(0))
        .with("right", pick(1))
        .with("anyNullable", any_nullable);
    n.localization = Some(localization(
        &[("ErrorMessage", &c.error_messages)],
        default_language,
        None,
        c.label(),
    ));
    n
}

pub fn entity_node(e: &Entity, default_language: Option<&str>) -> Node {
    let field_values: Vec<(&str, Value)> = e
        .fields
        .iter()
        .map(|f| (f.name.as_str(), Value::from(field_node(f, default_language))))
        .collect();
    let by_name: BTreeMap<&str, Value> = field_values.iter().cloned().collect();
    let select = |pred: &dyn Fn(&Field) -> bool| {
        Value::seq(
            e.fields
                .iter()
                .zip(&field_values)
                .filter(|(f, _)| pred(f))
                .map(|(_, (_, v))| v.clone())
                .collect(),
        )
    };

    let mut n = Node::new("Entity")
        .with("name", e.name.as_str())
        .with("tableName", e.table_name.as_str())
        .with("caching", e.caching.as_str())
        .with("isAudited", e.is_audited)
        .with("isLogged", e.is_logged)
        .with("isActive", e.is_active)
        .with(
            "fields",
            Value::seq(field_values.iter().map(|(_, v)| v.clone()).collect()),
        )
        .with(
            "constraints",
            Value::seq(
                e.constraints
                    .iter()
                    .map(|c| constraint_node(c, &by_name, e, default_language).into())
                    .collect(),
            ),
        )
        .with(
            "columns",
            Value::seq(effective_columns(e).iter().map(|c| column_node(c).into()).collect()),
        )
        .with(
            "pk",
            e.fields
                .iter()
                .zip(&field_values)
                .find(|(f, _)| f.is_pk)
                .map_or(Value::Null, |(_, (_, v))| v.clone()),
        )
        .with("nonKeyFields", select(&|f| !f.is_pk))
        .with("insertFields", select(&|f| !f.is_identity))
        .with("hasIdentity", e.fields.iter().any(|f| f.is_identity));
    n.localization = Some(localization(
        &[("DisplayName", &e.display_names), ("PluralName", &e.plural_names)],
        default_language,
        None,
        e.name.clone(),
    ));
    n
}

/// The whole model as a `Model` node.
pub fn model_value(model: &ApplicationModel) -> Value {
    let default_language = model.default_language();
    let entities: Vec<Value> = model
        .entities
        .iter()
        .map(|e| entity_node(e, default_language).into())
        .collect();
    let active: Vec<Value> = model
        .entities
        .iter()
        .zip(&entities)
        .filter(|(e, _)| e.is_active)
        .map(|(_, v)| v.clone())
        .collect();
    Value::Node(Arc::new(
        Node::new("Model")
            .with("appName", model.settings.app_name.as_str())
            .with("defaultLanguage", Value::opt_text(default_language))
            .with(
                "connectionStringName",
                Value::opt_text(model.settings.connection_string_name.as_deref()),
            )
            .with(
                "languages",
                Value::seq(model.languages().iter().map(|l| Value::text(l.as_str())).collect()),
            )
            .with("entities", Value::seq(entities))
            .with("activeEntities", Value::seq(active)),
    ))
}

/// The `index`th entity node of a `Model` value, sharing structure with it.
pub fn entity_of(model: &Value, index: usize) -> Option<Value> {
    match model.as_node()?.get("entities")? {
        Value::Seq(items) => items.get(index).cloned(),
        _ => None,
    }
}
