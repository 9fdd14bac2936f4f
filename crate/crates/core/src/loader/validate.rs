//! Schema and cross-reference rules over a bound model.

use std::collections::HashSet;

use super::bind::{constraint_subject, entity_subject, field_subject};
use super::diagnostic::{Anchor, DiagCode, Diagnostic};
use crate::model::{
    ApplicationModel, ConstraintKind, Entity, FieldType, Lexeme, AUDIT_CHANGED_AT, AUDIT_CHANGED_BY,
};

/// Letters, digits and `_`, not starting with a digit.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

struct Checker {
    diags: Vec<Diagnostic>,
}

impl Checker {
    fn push(
        &mut self,
        code: DiagCode,
        subject: String,
        anchor: Anchor,
        attr: Option<&'static str>,
        message: String,
    ) {
        self.diags
            .push(Diagnostic::new(code, subject, message).anchored(anchor, attr));
    }

    fn identifier(
        &mut self,
        value: &str,
        attr: &'static str,
        element: &str,
        subject: &str,
        anchor: Anchor,
    ) {
        if value.is_empty() {
            self.push(
                DiagCode::MissingAttr,
                subject.to_string(),
                anchor,
                None,
                format!("<{element}> requires attribute '{attr}'"),
            );
        } else if !is_identifier(value) {
            self.push(
                DiagCode::BadIdent,
                subject.to_string(),
                anchor,
                Some(attr),
                format!("'{value}' is not a valid identifier for '{attr}'"),
            );
        }
    }

    fn entity(&mut self, model: &ApplicationModel, ei: usize, e: &Entity) {
        let subject = entity_subject(ei, e);
        let anchor = Anchor::Entity(ei);
        self.identifier(&e.name, "name", "Entity", &subject, anchor);
        self.identifier(&e.table_name, "tableName", "Entity", &subject, anchor);

        if e.fields.is_empty() {
            self.push(
                DiagCode::NoFields,
                subject.clone(),
                anchor,
                None,
                "entity must declare at least one <Field>".into(),
            );
        } else {
            let pks = e.fields.iter().filter(|f| f.is_pk).count();
            if pks != 1 {
                self.push(
                    DiagCode::PkCount,
                    subject.clone(),
                    anchor,
                    None,
                    format!("entity must have exactly one primary-key field, found {pks}"),
                );
            }
        }
        let identities = e.fields.iter().filter(|f| f.is_identity).count();
        if identities > 1 {
            self.push(
                DiagCode::Identity,
                subject.clone(),
                anchor,
                None,
                format!("entity has {identities} identity fields; at most one is allowed"),
            );
        }

        let mut seen = HashSet::new();
        for (fi, f) in e.fields.iter().enumerate() {
            let subject = field_subject(ei, e, fi);
            let anchor = Anchor::Field(ei, fi);
            self.identifier(&f.name, "name", "Field", &subject, anchor);
            if !f.name.is_empty() && !seen.insert(f.name.as_str()) {
                self.push(
                    DiagCode::DupField,
                    subject.clone(),
                    anchor,
                    Some("name"),
                    format!("duplicate field name '{}'", f.name),
                );
            } else if e.is_logged && [AUDIT_CHANGED_AT, AUDIT_CHANGED_BY].contains(&f.name.as_str()) {
                self.push(
                    DiagCode::DupField,
                    subject.clone(),
                    anchor,
                    Some("name"),
                    format!("field '{}' collides with an audit column of a logged entity", f.name),
                );
            }

            match &f.field_type {
                Lexeme::Unknown(raw) if raw.is_empty() => self.push(
                    DiagCode::MissingAttr,
                    subject.clone(),
                    anchor,
                    None,
                    "<Field> requires attribute 'type'".into(),
                ),
                Lexeme::Unknown(raw) => self.push(
                    DiagCode::BadType,
                    subject.clone(),
                    anchor,
                    Some("type"),
                    format!(
                        "unknown field type '{raw}'; expected one of {}",
                        FieldType::ALL
                            .iter()
                            .map(|t| t.as_str())
                            .collect::<Vec<_>>()
                            .join(", ")
                    ),
                ),
                Lexeme::Known(_) => {}
            }
            let ty = f.ty();

            if f.is_identity {
                if !f.is_pk {
                    self.push(
                        DiagCode::Identity,
                        subject.clone(),
                        anchor,
                        Some("isIdentity"),
                        "identity field must also be the primary key".into(),
                    );
                }
                if ty.is_some_and(|t| t != FieldType::Int) {
                    self.push(
                        DiagCode::Identity,
                        subject.clone(),
                        anchor,
                        Some("isIdentity"),
                        "identity field must have type 'int'".into(),
                    );
                }
            }

            if let Some(t) = ty {
                match (t.is_sized(), f.length) {
                    (true, None) => self.push(
                        DiagCode::Length,
                        subject.clone(),
                        anchor,
                        None,
                        format!("type '{t}' requires attribute 'length'"),
                    ),
                    (false, Some(_)) => self.push(
                        DiagCode::Length,
                        subject.clone(),
                        anchor,
                        Some("length"),
                        format!("'length' is only allowed on nvarchar and varchar, not '{t}'"),
                    ),
                    _ => {}
                }
                if !t.is_textual() {
                    for (attr, v) in [
                        ("numberOfRows", f.number_of_rows),
                        ("numberOfCols", f.number_of_cols),
                    ] {
                        if v.is_some() {
                            self.push(
                                DiagCode::RowsCols,
                                subject.clone(),
                                anchor,
                                Some(attr),
                                format!("'{attr}' is only allowed on textual fields, not '{t}'"),
                            );
                        }
                    }
                }
            }

            if f.is_fk {
                match &f.fk_entity_name {
                    None => self.push(
                        DiagCode::FkTarget,
                        subject.clone(),
                        anchor,
                        Some("isFK"),
                        "foreign-key field requires attribute 'fkEntityName'".into(),
                    ),
                    Some(target) if model.find_entity(target).is_none() => self.push(
                        DiagCode::FkTarget,
                        subject.clone(),
                        anchor,
                        Some("fkEntityName"),
                        format!("fkEntityName '{target}' does not name an entity"),
                    ),
                    Some(_) => {}
                }
            }
        }

        let mut seen_constraints: Vec<(ConstraintKind, &[String])> = Vec::new();
        for (ci, c) in e.constraints.iter().enumerate() {
            let subject = constraint_subject(ei, e, ci);
            let anchor = Anchor::Constraint(ei, ci);
            let kind = match &c.kind {
                Lexeme::Known(k) => Some(*k),
                Lexeme::Unknown(raw) if raw.is_empty() => {
                    self.push(
                        DiagCode::MissingAttr,
                        subject.clone(),
                        anchor,
                        None,
                        "<Constraint> requires attribute 'type'".into(),
                    );
                    None
                }
                Lexeme::Unknown(raw) => {
                    self.push(
                        DiagCode::BadConstraintType,
                        subject.clone(),
                        anchor,
                        Some("type"),
                        format!("unknown constraint type '{raw}'; expected Unique or TwoFields"),
                    );
                    None
                }
            };

            match (kind, &c.relationship) {
                (Some(ConstraintKind::TwoFields), None) => self.push(
                    DiagCode::BadRelationship,
                    subject.clone(),
                    anchor,
                    None,
                    "TwoFields constraint requires attribute 'relationship'".into(),
                ),
                (Some(ConstraintKind::TwoFields), Some(Lexeme::Unknown(raw))) => self.push(
                    DiagCode::BadRelationship,
                    subject.clone(),
                    anchor,
                    Some("relationship"),
                    format!("unknown relationship '{raw}'; expected lt, le, gt, ge, eq or neq"),
                ),
                (Some(ConstraintKind::Unique), Some(_)) => self.push(
                    DiagCode::BadRelationship,
                    subject.clone(),
                    anchor,
                    Some("relationship"),
                    "'relationship' only applies to TwoFields constraints".into(),
                ),
                _ => {}
            }

            match kind {
                Some(ConstraintKind::TwoFields) if c.cfields.len() != 2 => self.push(
                    DiagCode::ConstraintArity,
                    subject.clone(),
                    anchor,
                    None,
                    format!(
                        "TwoFields constraint needs exactly 2 <CField> entries, found {}",
                        c.cfields.len()
                    ),
                ),
                Some(ConstraintKind::Unique) if c.cfields.is_empty() => self.push(
                    DiagCode::ConstraintArity,
                    subject.clone(),
                    anchor,
                    None,
                    "Unique constraint needs at least one <CField>".into(),
                ),
                _ => {}
            }

            let mut all_resolved = true;
            for (k, name) in c.cfields.iter().enumerate() {
                let cf_anchor = Anchor::CField(ei, ci, k);
                if name.is_empty() {
                    all_resolved = false;
                    self.push(
                        DiagCode::MissingAttr,
                        subject.clone(),
                        cf_anchor,
                        None,
                        "<CField> requires attribute 'name'".into(),
                    );
                } else if e.field(name).is_none() {
                    all_resolved = false;
                    self.push(
                        DiagCode::CFieldUnknown,
                        subject.clone(),
                        cf_anchor,
                        Some("name"),
                        format!("CField '{name}' does not name a field of this entity"),
                    );
                }
            }

            if kind == Some(ConstraintKind::TwoFields) && c.cfields.len() == 2 && all_resolved {
                let left = e.field(&c.cfields[0]).and_then(|f| f.ty());
                let right = e.field(&c.cfields[1]).and_then(|f| f.ty());
                if let (Some(l), Some(r)) = (left, right) {
                    if l.compare_family() != r.compare_family() {
                        self.push(
                            DiagCode::CompareFamily,
                            subject.clone(),
                            anchor,
                            None,
                            format!(
                                "fields '{}' ({l}) and '{}' ({r}) cannot be compared: \
                                 both must be dates or both must be non-dates",
                                c.cfields[0], c.cfields[1]
                            ),
                        );
                    }
                }
            }

            if let Some(k) = kind {
                if seen_constraints
                    .iter()
                    .any(|(sk, sf)| *sk == k && *sf == c.cfields.as_slice())
                {
                    self.push(
                        DiagCode::DupConstraint,
                        subject.clone(),
                        anchor,
                        None,
                        format!("duplicate {k} constraint over ({})", c.cfields.join(", ")),
                    );
                } else {
                    seen_constraints.push((k, &c.cfields));
                }
            }
        }
    }
}

/// Checks every schema, invariant and cross-reference rule. An empty result
/// means the model is valid.
pub fn validate_model(model: &ApplicationModel) -> Vec<Diagnostic> {
    let mut ck = Checker { diags: Vec::new() };

    if let Some(lang) = model.default_language() {
        if !model.languages().iter().any(|l| l == lang) {
            ck.push(
                DiagCode::DefaultLanguage,
                "Settings".into(),
                Anchor::Settings,
                Some("defaultLanguage"),
                format!("defaultLanguage '{lang}' is not used by any <Language> element"),
            );
        }
    }

    let mut names = HashSet::new();
    let mut tables = HashSet::new();
    for (ei, e) in model.entities.iter().enumerate() {
        if !e.name.is_empty() && !names.insert(e.name.as_str()) {
            ck.push(
                DiagCode::DupEntity,
                entity_subject(ei, e),
                Anchor::Entity(ei),
                Some("name"),
                format!("duplicate entity name '{}'", e.name),
            );
        }
        if !e.table_name.is_empty() && !tables.insert(e.table_name.as_str()) {
            ck.push(
                DiagCode::DupTable,
                entity_subject(ei, e),
                Anchor::Entity(ei),
                Some("tableName"),
                format!("duplicate tableName '{}'", e.table_name),
            );
        }
        ck.entity(model, ei, e);
    }
    ck.diags
}
