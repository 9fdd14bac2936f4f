//! Domain types for the bound application model.
//!
//! Everything here is plain owned data. A model is built once by the loader
//! (or by hand in tests) and only read afterwards; all queries are pure.
//!
//! Enumerated attributes that come straight from the document (field type,
//! constraint type, relationship) are stored as [`Lexeme`]s so that a model
//! bound from a bad document still carries the offending token for the
//! validator to report.

use std::fmt;
use std::str::FromStr;

/// A token that is either a member of a closed enumeration or the raw text
/// that failed to parse as one.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Lexeme<T> {
    Known(T),
    Unknown(String),
}

impl<T: FromStr> Lexeme<T> {
    pub fn parse(raw: &str) -> Self {
        raw.parse()
            .map(Lexeme::Known)
            .unwrap_or_else(|_| Lexeme::Unknown(raw.to_string()))
    }
}

impl<T> Lexeme<T> {
    pub fn known(&self) -> Option<&T> {
        match self {
            Lexeme::Known(t) => Some(t),
            Lexeme::Unknown(_) => None,
        }
    }
}

impl<T: Copy> Lexeme<T> {
    pub fn get(&self) -> Option<T> {
        self.known().copied()
    }
}

impl<T> From<T> for Lexeme<T> {
    fn from(t: T) -> Self {
        Lexeme::Known(t)
    }
}

impl<T: fmt::Display> fmt::Display for Lexeme<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lexeme::Known(t) => t.fmt(f),
            Lexeme::Unknown(raw) => f.write_str(raw),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnknownToken;

macro_rules! token_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $tok:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $tok),+
                }
            }
        }

        impl FromStr for $name {
            type Err = UnknownToken;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($tok => Ok($name::$variant),)+
                    _ => Err(UnknownToken),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

token_enum! {
    /// Column data types understood by the generator.
    FieldType {
        Int => "int",
        BigInt => "bigint",
        Decimal => "decimal",
        Bit => "bit",
        Float => "float",
        DateTime => "datetime",
        Date => "date",
        NVarChar => "nvarchar",
        VarChar => "varchar",
        Text => "text",
    }
}

impl FieldType {
    /// Sized string types carry a mandatory `length`.
    pub fn is_sized(self) -> bool {
        matches!(self, FieldType::NVarChar | FieldType::VarChar)
    }

    pub fn is_textual(self) -> bool {
        matches!(self, FieldType::NVarChar | FieldType::VarChar | FieldType::Text)
    }

    pub fn is_temporal(self) -> bool {
        matches!(self, FieldType::DateTime | FieldType::Date)
    }

    pub fn compare_family(self) -> CompareFamily {
        if self.is_temporal() {
            CompareFamily::Dates
        } else {
            CompareFamily::Strings
        }
    }
}

/// Which client-side comparator a field pair is lowered to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompareFamily {
    Dates,
    Strings,
}

impl CompareFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            CompareFamily::Dates => "dates",
            CompareFamily::Strings => "strings",
        }
    }
}

token_enum! {
    ConstraintKind {
        Unique => "Unique",
        TwoFields => "TwoFields",
    }
}

token_enum! {
    /// Relationship between the two fields of a `TwoFields` constraint.
    RelationshipOp {
        Lt => "lt",
        Le => "le",
        Gt => "gt",
        Ge => "ge",
        Eq => "eq",
        Neq => "neq",
    }
}

impl RelationshipOp {
    /// The SQL comparison operator for this relationship.
    pub fn sql_operator(self) -> &'static str {
        match self {
            RelationshipOp::Lt => "<",
            RelationshipOp::Le => "<=",
            RelationshipOp::Gt => ">",
            RelationshipOp::Ge => ">=",
            RelationshipOp::Neq => "<>",
            RelationshipOp::Eq => "=",
        }
    }
}

token_enum! {
    Caching {
        Enabled => "enabled",
        Disabled => "disabled",
    }
}

/// Per-language text, kept in document order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct LocalizedText {
    entries: Vec<(String, String)>,
}

impl LocalizedText {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts `text` for `lang`. Returns `false` (and keeps the existing
    /// entry) if the language already has one or the name is empty.
    pub fn insert(&mut self, lang: impl Into<String>, text: impl Into<String>) -> bool {
        let lang = lang.into();
        if lang.is_empty() || self.get(&lang).is_some() {
            return false;
        }
        self.entries.push((lang, text.into()));
        true
    }

    pub fn with(mut self, lang: &str, text: &str) -> Self {
        self.insert(lang, text);
        self
    }

    pub fn get(&self, lang: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(l, _)| l == lang)
            .map(|(_, t)| t.as_str())
    }

    pub fn first(&self) -> Option<&str> {
        self.entries.first().map(|(_, t)| t.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(l, t)| (l.as_str(), t.as_str()))
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(l, _)| l.as_str())
    }

    /// Resolves `lang` with the fallback chain: requested language, then
    /// `default_lang`, then the first entry. `None` only when empty.
    pub fn resolve(&self, lang: Option<&str>, default_lang: Option<&str>) -> Option<&str> {
        lang.and_then(|l| self.get(l))
            .or_else(|| default_lang.and_then(|l| self.get(l)))
            .or_else(|| self.first())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings {
    pub app_name: String,
    pub default_language: Option<String>,
    /// Name of a connection string defined elsewhere; never a credential.
    pub connection_string_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    pub name: String,
    pub field_type: Lexeme<FieldType>,
    pub length: Option<u32>,
    pub nullable: bool,
    pub is_pk: bool,
    pub is_identity: bool,
    pub is_fk: bool,
    pub fk_entity_name: Option<String>,
    pub fk_name: Option<String>,
    pub is_lookup: bool,
    pub create_lookup: bool,
    pub is_ovn: bool,
    pub is_audited: bool,
    pub is_shown_in_list: bool,
    pub is_shown_in_edit: bool,
    pub is_shown_in_history: bool,
    pub description: Option<String>,
    pub default_value: Option<String>,
    pub display_format: Option<String>,
    pub number_of_rows: Option<u8>,
    pub number_of_cols: Option<u8>,
    /// The `displayName` attribute. Localized `DisplayName` children win.
    pub display_name_attr: Option<String>,
    pub display_names: LocalizedText,
}

impl Field {
    /// A field with every optional attribute at its default.
    pub fn new(name: impl Into<String>, field_type: impl Into<Lexeme<FieldType>>) -> Self {
        Field {
            name: name.into(),
            field_type: field_type.into(),
            length: None,
            nullable: false,
            is_pk: false,
            is_identity: false,
            is_fk: false,
            fk_entity_name: None,
            fk_name: None,
            is_lookup: false,
            create_lookup: false,
            is_ovn: false,
            is_audited: false,
            is_shown_in_list: true,
            is_shown_in_edit: true,
            is_shown_in_history: true,
            description: None,
            default_value: None,
            display_format: None,
            number_of_rows: None,
            number_of_cols: None,
            display_name_attr: None,
            display_names: LocalizedText::new(),
        }
    }

    /// An `int` identity primary key.
    pub fn identity_pk(name: impl Into<String>) -> Self {
        Field {
            is_pk: true,
            is_identity: true,
            ..Field::new(name, FieldType::Int)
        }
    }

    pub fn sized(name: impl Into<String>, field_type: FieldType, length: u32) -> Self {
        Field {
            length: Some(length),
            ..Field::new(name, field_type)
        }
    }

    pub fn ty(&self) -> Option<FieldType> {
        self.field_type.get()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub kind: Lexeme<ConstraintKind>,
    pub relationship: Option<Lexeme<RelationshipOp>>,
    pub cfields: Vec<String>,
    pub error_messages: LocalizedText,
}

impl Constraint {
    pub fn unique<S: Into<String>>(fields: impl IntoIterator<Item = S>) -> Self {
        Constraint {
            kind: ConstraintKind::Unique.into(),
            relationship: None,
            cfields: fields.into_iter().map(Into::into).collect(),
            error_messages: LocalizedText::new(),
        }
    }

    pub fn two_fields(left: &str, rel: RelationshipOp, right: &str) -> Self {
        Constraint {
            kind: ConstraintKind::TwoFields.into(),
            relationship: Some(rel.into()),
            cfields: vec![left.to_string(), right.to_string()],
            error_messages: LocalizedText::new(),
        }
    }

    pub fn constraint_kind(&self) -> Option<ConstraintKind> {
        self.kind.get()
    }

    pub fn relationship_op(&self) -> Option<RelationshipOp> {
        self.relationship.as_ref().and_then(Lexeme::get)
    }

    /// Structural label used when no localized message exists,
    /// e.g. `TwoFields(DisplayFrom, DisplayTo)`.
    pub fn label(&self) -> String {
        format!("{}({})", self.kind, self.cfields.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub name: String,
    pub table_name: String,
    pub caching: Caching,
    pub is_audited: bool,
    pub is_logged: bool,
    pub is_active: bool,
    pub display_names: LocalizedText,
    pub plural_names: LocalizedText,
    pub fields: Vec<Field>,
    pub constraints: Vec<Constraint>,
}

impl Entity {
    /// An active, unlogged entity whose table name equals its name.
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        Entity {
            table_name: name.clone(),
            name,
            caching: Caching::Disabled,
            is_audited: false,
            is_logged: false,
            is_active: true,
            display_names: LocalizedText::new(),
            plural_names: LocalizedText::new(),
            fields: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn field(&self, name: &str) -> Option<&Field> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn primary_key(&self) -> Option<&Field> {
        self.fields.iter().find(|f| f.is_pk)
    }
}

/// One column of the generated table, after audit columns are appended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    pub name: String,
    pub column_type: Lexeme<FieldType>,
    pub length: Option<u32>,
    pub nullable: bool,
    pub identity: bool,
}

impl ColumnSpec {
    /// DDL type text: `nvarchar(30)` for sized strings, the bare token otherwise.
    pub fn sql_type(&self) -> String {
        sql_type_of(&self.column_type, self.length)
    }
}

pub(crate) fn sql_type_of(ty: &Lexeme<FieldType>, length: Option<u32>) -> String {
    match (ty, length) {
        (Lexeme::Known(t), Some(n)) if t.is_sized() => format!("{t}({n})"),
        _ => ty.to_string(),
    }
}

pub const AUDIT_CHANGED_AT: &str = "changedAt";
pub const AUDIT_CHANGED_BY: &str = "changedBy";
pub const AUDIT_CHANGED_BY_LENGTH: u32 = 50;

/// Columns of the entity's table: declared fields in order, then the
/// `changedAt`/`changedBy` audit pair when the entity is logged.
pub fn effective_columns(entity: &Entity) -> Vec<ColumnSpec> {
    let mut cols: Vec<ColumnSpec> = entity
        .fields
        .iter()
        .map(|f| ColumnSpec {
            name: f.name.clone(),
            column_type: f.field_type.clone(),
            length: f.length,
            nullable: f.nullable,
            identity: f.is_identity,
        })
        .collect();
    if entity.is_logged {
        cols.push(ColumnSpec {
            name: AUDIT_CHANGED_AT.to_string(),
            column_type: FieldType::DateTime.into(),
            length: None,
            nullable: false,
            identity: false,
        });
        cols.push(ColumnSpec {
            name: AUDIT_CHANGED_BY.to_string(),
            column_type: FieldType::VarChar.into(),
            length: Some(AUDIT_CHANGED_BY_LENGTH),
            nullable: false,
            identity: false,
        });
    }
    cols
}

/// Anything that carries a localized display text and a structural name.
pub trait Localized {
    fn localized_text(&self) -> &LocalizedText;
    fn structural_name(&self) -> String;
    /// Non-localized override consulted before the structural name.
    fn attr_name(&self) -> Option<&str> {
        None
    }
}

impl Localized for Entity {
    fn localized_text(&self) -> &LocalizedText {
        &self.display_names
    }
    fn structural_name(&self) -> String {
        self.name.clone()
    }
}

impl Localized for Field {
    fn localized_text(&self) -> &LocalizedText {
        &self.display_names
    }
    fn structural_name(&self) -> String {
        self.name.clone()
    }
    fn attr_name(&self) -> Option<&str> {
        self.display_name_attr.as_deref()
    }
}

impl Localized for Constraint {
    fn localized_text(&self) -> &LocalizedText {
        &self.error_messages
    }
    fn structural_name(&self) -> String {
        self.label()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ApplicationModel {
    pub settings: Settings,
    pub entities: Vec<Entity>,
    languages: Vec<String>,
}

impl ApplicationModel {
    /// Builds a model and derives its language list.
    pub fn new(settings: Settings, entities: Vec<Entity>) -> Self {
        let languages = collect_languages(&entities);
        ApplicationModel {
            settings,
            entities,
            languages,
        }
    }

    /// Every language name used in any localized text, in first-appearance
    /// order (entity display, plural, fields, then constraints).
    pub fn languages(&self) -> &[String] {
        &self.languages
    }

    pub fn default_language(&self) -> Option<&str> {
        self.settings.default_language.as_deref()
    }

    pub fn find_entity(&self, name: &str) -> Option<&Entity> {
        find_entity(self, name)
    }

    pub fn display_name(&self, owner: &dyn Localized, lang: &str) -> String {
        display_name(owner, lang, self.default_language())
    }

    pub fn active_entities(&self) -> impl Iterator<Item = &Entity> {
        self.entities.iter().filter(|e| e.is_active)
    }
}

fn collect_languages(entities: &[Entity]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut add = |t: &LocalizedText| {
        for l in t.languages() {
            if !out.iter().any(|x| x == l) {
                out.push(l.to_string());
            }
        }
    };
    for e in entities {
        add(&e.display_names);
        add(&e.plural_names);
        for f in &e.fields {
            add(&f.display_names);
        }
        for c in &e.constraints {
            add(&c.error_messages);
        }
    }
    out
}

pub fn find_entity<'m>(model: &'m ApplicationModel, name: &str) -> Option<&'m Entity> {
    model.entities.iter().find(|e| e.name == name)
}

/// Localized name of `owner` in `lang`.
///
/// Falls back to the default language, then the first entry in document
/// order, then a `displayName` attribute if the owner has one, and finally
/// the structural name.
pub fn display_name(owner: &dyn Localized, lang: &str, default_lang: Option<&str>) -> String {
    owner
        .localized_text()
        .resolve(Some(lang), default_lang)
        .or_else(|| owner.attr_name())
        .map(str::to_string)
        .unwrap_or_else(|| owner.structural_name())
}
