//! Maps the parsed element tree onto [`ApplicationModel`].
//!
//! Binding never fails: lexical problems become diagnostics and the
//! attribute falls back to its default so that validation can still report
//! everything else in the same pass.

use std::collections::HashMap;

use super::diagnostic::{Anchor, DiagCode, Diagnostic, Location};
use super::xml::{XmlAttribute, XmlNode};
use crate::model::{
    ApplicationModel, Caching, Constraint, Entity, Field, Lexeme, LocalizedText, Settings,
};

/// Source locations of bound elements and attributes.
#[derive(Debug, Clone, Default)]
pub struct SourceMap {
    elements: HashMap<Anchor, Location>,
    attributes: HashMap<(Anchor, String), Location>,
}

impl SourceMap {
    pub fn element(&self, anchor: Anchor) -> Option<Location> {
        self.elements.get(&anchor).copied()
    }

    pub fn attribute(&self, anchor: Anchor, name: &str) -> Option<Location> {
        self.attributes.get(&(anchor, name.to_string())).copied()
    }

    /// Attribute location if known, else the owning element's.
    pub fn locate(&self, anchor: Anchor, attribute: Option<&str>) -> Option<Location> {
        attribute
            .and_then(|a| self.attribute(anchor, a))
            .or_else(|| self.element(anchor))
    }

    fn record(&mut self, anchor: Anchor, node: &XmlNode) {
        self.elements.insert(anchor, node.location);
        for a in &node.attributes {
            self.attributes.insert((anchor, a.name.clone()), a.location);
        }
    }
}

const SETTINGS_ATTRS: &[&str] = &["appName", "defaultLanguage", "connectionStringName"];
const ENTITY_ATTRS: &[&str] = &[
    "name",
    "tableName",
    "caching",
    "isAudited",
    "isLogged",
    "isActive",
];
const FIELD_ATTRS: &[&str] = &[
    "name",
    "type",
    "length",
    "nullable",
    "isPK",
    "isIdentity",
    "isFK",
    "fkEntityName",
    "fkName",
    "nameName",
    "isLookup",
    "createLookup",
    "isOVN",
    "isAudited",
    "isShownInList",
    "isShownInEdit",
    "isShownInHistory",
    "description",
    "defaultValue",
    "displayFormat",
    "numberOfRows",
    "numberOfCols",
    "displayName",
];
const CONSTRAINT_ATTRS: &[&str] = &["type", "relationship"];

/// Display path of an entity: `Entity[Name]`, or `Entity[#3]` when unnamed.
pub(crate) fn entity_subject(index: usize, entity: &Entity) -> String {
    if entity.name.is_empty() {
        format!("Entity[#{}]", index + 1)
    } else {
        format!("Entity[{}]", entity.name)
    }
}

pub(crate) fn field_subject(ei: usize, entity: &Entity, fi: usize) -> String {
    let f = &entity.fields[fi];
    if f.name.is_empty() {
        format!("{}/Field[#{}]", entity_subject(ei, entity), fi + 1)
    } else {
        format!("{}/Field[{}]", entity_subject(ei, entity), f.name)
    }
}

pub(crate) fn constraint_subject(ei: usize, entity: &Entity, ci: usize) -> String {
    format!("{}/Constraint[#{}]", entity_subject(ei, entity), ci + 1)
}

struct Binder {
    diags: Vec<Diagnostic>,
    map: SourceMap,
}

impl Binder {
    fn report(&mut self, code: DiagCode, subject: &str, at: Location, message: String) {
        self.diags.push(Diagnostic::new(code, subject, message).at(at));
    }

    fn check_attrs(&mut self, node: &XmlNode, known: &[&str], subject: &str) {
        for a in &node.attributes {
            if !known.contains(&a.name.as_str()) {
                self.report(
                    DiagCode::UnknownAttr,
                    subject,
                    a.location,
                    format!("unknown attribute '{}' on <{}> ignored", a.name, node.tag),
                );
            }
        }
    }

    fn unknown_child(&mut self, child: &XmlNode, parent: &str, subject: &str) {
        self.report(
            DiagCode::UnknownElement,
            subject,
            child.location,
            format!("unknown element <{}> inside <{}> ignored", child.tag, parent),
        );
    }

    fn boolean(&mut self, node: &XmlNode, name: &str, default: bool, subject: &str) -> bool {
        match node.attribute(name) {
            None => default,
            Some(XmlAttribute { value, .. }) if value == "true" => true,
            Some(XmlAttribute { value, .. }) if value == "false" => false,
            Some(a) => {
                self.report(
                    DiagCode::BadBool,
                    subject,
                    a.location,
                    format!("attribute '{name}' must be \"true\" or \"false\", found \"{}\"", a.value),
                );
                default
            }
        }
    }

    fn integer<T: std::str::FromStr>(
        &mut self,
        node: &XmlNode,
        name: &str,
        subject: &str,
        what: &str,
        positive: bool,
    ) -> Option<T> {
        let a = node.attribute(name)?;
        let ok = a.value.bytes().all(|b| b.is_ascii_digit()) && !a.value.is_empty();
        match a.value.parse::<T>() {
            Ok(v) if ok && !(positive && a.value.trim_start_matches('0').is_empty()) => Some(v),
            _ => {
                self.report(
                    DiagCode::BadInt,
                    subject,
                    a.location,
                    format!("attribute '{name}' must be {what}, found \"{}\"", a.value),
                );
                None
            }
        }
    }

    fn text(node: &XmlNode, name: &str) -> Option<String> {
        node.attr(name).map(str::to_string)
    }

    /// Reads `<Language name="…">` children into the given localized texts,
    /// keyed by child element name.
    fn languages(
        &mut self,
        node: &XmlNode,
        slots: &mut [(&str, &mut LocalizedText)],
        subject: &str,
    ) {
        for lang in node.children_named("Language") {
            self.check_attrs(lang, &["name"], subject);
            let name = match lang.attr("name") {
                Some(n) if !n.trim().is_empty() => n.to_string(),
                _ => {
                    self.report(
                        DiagCode::LanguageName,
                        subject,
                        lang.location,
                        "<Language> requires a non-empty 'name' attribute".into(),
                    );
                    continue;
                }
            };
            for child in &lang.children {
                match slots.iter_mut().find(|(tag, _)| *tag == child.tag) {
                    Some((tag, text)) => {
                        if !text.insert(name.clone(), child.text.trim()) {
                            self.report(
                                DiagCode::DupLanguage,
                                subject,
                                child.location,
                                format!("duplicate <{tag}> for language '{name}'"),
                            );
                        }
                    }
                    None => self.unknown_child(child, "Language", subject),
                }
            }
        }
    }

    fn settings(&mut self, node: &XmlNode) -> Settings {
        self.map.record(Anchor::Settings, node);
        self.check_attrs(node, SETTINGS_ATTRS, "Settings");
        for c in &node.children {
            self.unknown_child(c, "Settings", "Settings");
        }
        Settings {
            app_name: Self::text(node, "appName").unwrap_or_default(),
            default_language: Self::text(node, "defaultLanguage"),
            connection_string_name: Self::text(node, "connectionStringName"),
        }
    }

    fn entity(&mut self, ei: usize, node: &XmlNode) -> Entity {
        self.map.record(Anchor::Entity(ei), node);
        let mut entity = Entity::new(node.attr("name").unwrap_or_default());
        entity.table_name = node.attr("tableName").unwrap_or_default().to_string();
        let subject = entity_subject(ei, &entity);
        self.check_attrs(node, ENTITY_ATTRS, &subject);

        if let Some(a) = node.attribute("caching") {
            match a.value.parse::<Caching>() {
                Ok(c) => entity.caching = c,
                Err(_) => self.report(
                    DiagCode::BadEnum,
                    &subject,
                    a.location,
                    format!(
                        "attribute 'caching' must be \"enabled\" or \"disabled\", found \"{}\"",
                        a.value
                    ),
                ),
            }
        }
        entity.is_audited = self.boolean(node, "isAudited", false, &subject);
        entity.is_logged = self.boolean(node, "isLogged", false, &subject);
        entity.is_active = self.boolean(node, "isActive", true, &subject);

        let mut display = LocalizedText::new();
        let mut plural = LocalizedText::new();
        self.languages(
            node,
            &mut [("DisplayName", &mut display), ("PluralName", &mut plural)],
            &subject,
        );
        entity.display_names = display;
        entity.plural_names = plural;

        for child in &node.children {
            match child.tag.as_str() {
                "Language" => {}
                "Field" => {
                    let fi = entity.fields.len();
                    let field = self.field(ei, fi, child, &subject);
                    entity.fields.push(field);
                }
                "Constraint" => {
                    let ci = entity.constraints.len();
                    let c = self.constraint(ei, ci, child, &subject);
                    entity.constraints.push(c);
                }
                _ => self.unknown_child(child, "Entity", &subject),
            }
        }
        entity
    }

    fn field(&mut self, ei: usize, fi: usize, node: &XmlNode, parent: &str) -> Field {
        self.map.record(Anchor::Field(ei, fi), node);
        let name = node.attr("name").unwrap_or_default();
        let subject = if name.is_empty() {
            format!("{parent}/Field[#{}]", fi + 1)
        } else {
            format!("{parent}/Field[{name}]")
        };
        self.check_attrs(node, FIELD_ATTRS, &subject);

        let mut f = Field::new(name, Lexeme::parse(node.attr("type").unwrap_or_default()));
        f.length = self.integer(node, "length", &subject, "a positive integer", true);
        f.nullable = self.boolean(node, "nullable", false, &subject);
        f.is_pk = self.boolean(node, "isPK", false, &subject);
        f.is_identity = self.boolean(node, "isIdentity", false, &subject);
        f.is_fk = self.boolean(node, "isFK", false, &subject);
        f.fk_entity_name = Self::text(node, "fkEntityName");
        f.fk_name = Self::text(node, "fkName").or_else(|| Self::text(node, "nameName"));
        f.is_lookup = self.boolean(node, "isLookup", false, &subject);
        f.create_lookup = self.boolean(node, "createLookup", false, &subject);
        f.is_ovn = self.boolean(node, "isOVN", false, &subject);
        f.is_audited = self.boolean(node, "isAudited", false, &subject);
        f.is_shown_in_list = self.boolean(node, "isShownInList", true, &subject);
        f.is_shown_in_edit = self.boolean(node, "isShownInEdit", true, &subject);
        f.is_shown_in_history = self.boolean(node, "isShownInHistory", true, &subject);
        f.description = Self::text(node, "description");
        f.default_value = Self::text(node, "defaultValue");
        f.display_format = Self::text(node, "displayFormat");
        f.number_of_rows = self.integer(node, "numberOfRows", &subject, "an integer 0-255", false);
        f.number_of_cols = self.integer(node, "numberOfCols", &subject, "an integer 0-255", false);
        f.display_name_attr = Self::text(node, "displayName");

        let mut display = LocalizedText::new();
        self.languages(node, &mut [("DisplayName", &mut display)], &subject);
        f.display_names = display;
        for child in &node.children {
            if child.tag != "Language" {
                self.unknown_child(child, "Field", &subject);
            }
        }
        f
    }

    fn constraint(&mut self, ei: usize, ci: usize, node: &XmlNode, parent: &str) -> Constraint {
        self.map.record(Anchor::Constraint(ei, ci), node);
        let subject = format!("{parent}/Constraint[#{}]", ci + 1);
        self.check_attrs(node, CONSTRAINT_ATTRS, &subject);

        let mut messages = LocalizedText::new();
        self.languages(node, &mut [("ErrorMessage", &mut messages)], &subject);
        let mut cfields = Vec::new();
        for child in &node.children {
            match child.tag.as_str() {
                "Language" => {}
                "CField" => {
                    self.map.record(Anchor::CField(ei, ci, cfields.len()), child);
                    self.check_attrs(child, &["name"], &subject);
                    cfields.push(child.attr("name").unwrap_or_default().to_string());
                }
                _ => self.unknown_child(child, "Constraint", &subject),
            }
        }
        Constraint {
            kind: Lexeme::parse(node.attr("type").unwrap_or_default()),
            relationship: node.attr("relationship").map(Lexeme::parse),
            cfields,
            error_messages: messages,
        }
    }
}

/// Binds a parsed document. Always returns a model; problems are reported
/// as diagnostics alongside it.
pub fn bind_model(root: &XmlNode) -> (ApplicationModel, Vec<Diagnostic>) {
    let (model, diags, _) = bind_with_map(root);
    (model, diags)
}

pub(crate) fn bind_with_map(root: &XmlNode) -> (ApplicationModel, Vec<Diagnostic>, SourceMap) {
    let mut b = Binder {
        diags: Vec::new(),
        map: SourceMap::default(),
    };
    b.map.record(Anchor::Document, root);
    let mut settings = Settings::default();
    let mut entities = Vec::new();

    if root.tag != "xsource" {
        b.report(
            DiagCode::BadRoot,
            "",
            root.location,
            format!("root element must be <xsource>, found <{}>", root.tag),
        );
    } else {
        b.check_attrs(root, &[], "xsource");
        for child in &root.children {
            match child.tag.as_str() {
                "Settings" => settings = b.settings(child),
                "EntityConfig" => {
                    b.check_attrs(child, &[], "EntityConfig");
                    for node in &child.children {
                        if node.tag == "Entity" {
                            let ei = entities.len();
                            let e = b.entity(ei, node);
                            entities.push(e);
                        } else {
                            b.unknown_child(node, "EntityConfig", "EntityConfig");
                        }
                    }
                }
                _ => b.unknown_child(child, "xsource", "xsource"),
            }
        }
    }
    (ApplicationModel::new(settings, entities), b.diags, b.map)
}
