//! Template packs and generation planning.
//!
//! A pack is a `pack.json` manifest plus template files. Each output rule
//! names a template, a relative output path pattern, whether it renders once
//! for the model or once per entity, and who owns the resulting file.

mod webstack;

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::atl::{self, context, Template, TemplateRuntimeError, TemplateSyntaxError, Value};
use crate::model::ApplicationModel;
use crate::ownership::MANIFEST_FILE;

pub use webstack::{webstack, webstack_listing};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Per {
    Model,
    Entity,
}

/// Who owns a generated file. `Always` files are rewritten on every run;
/// `Once` files are created if missing and then belong to the developer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ownership {
    Always,
    Once,
}

impl Ownership {
    pub fn as_str(self) -> &'static str {
        match self {
            Ownership::Always => "always",
            Ownership::Once => "once",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct RuleManifest {
    template: String,
    path: String,
    per: Per,
    ownership: Ownership,
    #[serde(default)]
    active_only: Option<bool>,
    #[serde(default)]
    flags: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PackManifest {
    name: String,
    version: String,
    outputs: Vec<RuleManifest>,
}

#[derive(Debug, Clone, PartialEq)]
enum PathPart {
    Literal(String),
    EntityAttr(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputRule {
    pub template: String,
    pub path_pattern: String,
    pub per: Per,
    pub ownership: Ownership,
    pub active_only: bool,
    pub flags: BTreeMap<String, serde_json::Value>,
    parts: Vec<PathPart>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplatePack {
    pub name: String,
    pub version: String,
    pub outputs: Vec<OutputRule>,
    pub templates: BTreeMap<String, Template>,
}

/// One rendered file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub path: String,
    pub content: Vec<u8>,
    pub ownership: Ownership,
}

impl Artifact {
    pub fn text(&self) -> &str {
        std::str::from_utf8(&self.content).unwrap_or_default()
    }
}

/// Generation settings.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GenConfig {
    /// UI and message language. `None` picks the model's default language,
    /// else its first declared language.
    pub lang: Option<String>,
}

impl GenConfig {
    pub fn with_lang(lang: impl Into<String>) -> Self {
        GenConfig {
            lang: Some(lang.into()),
        }
    }

    pub fn resolve_lang(&self, model: &ApplicationModel) -> Option<String> {
        self.lang
            .clone()
            .or_else(|| model.default_language().map(str::to_string))
            .or_else(|| model.languages().first().cloned())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PackError {
    #[error("pack has no pack.json manifest")]
    MissingManifest,
    #[error("pack.json: {0}")]
    Manifest(String),
    #[error("output rule {rule} ('{path}'): template '{template}' is not in the pack")]
    MissingTemplate {
        rule: usize,
        path: String,
        template: String,
    },
    #[error(transparent)]
    Template(#[from] TemplateSyntaxError),
    #[error("output rule {rule}: bad path pattern '{path}': {reason}")]
    BadPath {
        rule: usize,
        path: String,
        reason: String,
    },
    #[error("reading pack: {0}")]
    Io(String),
}

#[derive(Debug, thiserror::Error)]
pub enum GenerateError {
    #[error("two outputs map to the same path '{path}'")]
    PathCollision { path: String },
    #[error("{path}: {source}")]
    Render {
        path: String,
        #[source]
        source: TemplateRuntimeError,
    },
    #[error("expanded output path '{path}' is not a safe relative path")]
    UnsafePath { path: String },
}

/// Checks that `path` is relative, uses `/` separators and stays inside the
/// output root.
pub fn check_relative_path(path: &str) -> Result<(), String> {
    if path.is_empty() {
        return Err("path is empty".into());
    }
    if path.starts_with('/') {
        return Err("path must be relative".into());
    }
    if path.contains('\\') || path.contains(':') {
        return Err("path may not contain '\\' or ':'".into());
    }
    for seg in path.split('/') {
        match seg {
            "" => return Err("path has an empty segment".into()),
            "." | ".." => return Err("path may not contain '.' or '..' segments".into()),
            _ => {}
        }
    }
    if path == MANIFEST_FILE {
        return Err(format!("'{MANIFEST_FILE}' is reserved"));
    }
    Ok(())
}

const ENTITY_PLACEHOLDERS: &[&str] = &["name", "tableName"];

fn parse_pattern(pattern: &str) -> Result<Vec<PathPart>, String> {
    let mut parts = Vec::new();
    let mut rest = pattern;
    while let Some(open) = rest.find('{') {
        if open > 0 {
            parts.push(PathPart::Literal(rest[..open].to_string()));
        }
        let close = rest[open..]
            .find('}')
            .ok_or_else(|| "unterminated '{' placeholder".to_string())?;
        let inner = &rest[open + 1..open + close];
        let attr = inner
            .strip_prefix("entity.")
            .ok_or_else(|| format!("unknown placeholder '{{{inner}}}'"))?;
        if !ENTITY_PLACEHOLDERS.contains(&attr) {
            return Err(format!(
                "placeholder '{{{inner}}}' must be one of {{entity.name}}, {{entity.tableName}}"
            ));
        }
        parts.push(PathPart::EntityAttr(attr.to_string()));
        rest = &rest[open + close + 1..];
    }
    if rest.contains('}') {
        return Err("unmatched '}'".into());
    }
    if !rest.is_empty() {
        parts.push(PathPart::Literal(rest.to_string()));
    }
    // With placeholders replaced by a plain identifier the path must be safe.
    let probe: String = parts
        .iter()
        .map(|p| match p {
            PathPart::Literal(s) => s.as_str(),
            PathPart::EntityAttr(_) => "x",
        })
        .collect();
    check_relative_path(&probe)?;
    Ok(parts)
}

fn normalize_newlines(s: &str) -> String {
    s.replace("\r\n", "\n")
}

fn json_to_value(v: &serde_json::Value) -> Value {
    match v {
        serde_json::Value::Null => Value::Null,
        serde_json::Value::Bool(b) => Value::Bool(*b),
        serde_json::Value::Number(n) => n.as_i64().map_or_else(|| Value::text(n.to_string()), Value::Int),
        serde_json::Value::String(s) => Value::text(s.as_str()),
        serde_json::Value::Array(items) => Value::seq(items.iter().map(json_to_value).collect()),
        serde_json::Value::Object(map) => {
            let mut node = atl::Node::new("Flags");
            for (k, v) in map {
                node.set(k, json_to_value(v));
            }
            node.into()
        }
    }
}

/// Builds a pack from a listing of its files (relative path → contents).
pub fn load_pack(listing: &BTreeMap<String, String>) -> Result<TemplatePack, PackError> {
    let manifest_src = listing.get("pack.json").ok_or(PackError::MissingManifest)?;
    let manifest: PackManifest =
        serde_json::from_str(manifest_src).map_err(|e| PackError::Manifest(e.to_string()))?;

    let mut templates = BTreeMap::new();
    let mut outputs = Vec::with_capacity(manifest.outputs.len());
    for (i, rule) in manifest.outputs.into_iter().enumerate() {
        let rule_no = i + 1;
        let parts = parse_pattern(&rule.path).map_err(|reason| PackError::BadPath {
            rule: rule_no,
            path: rule.path.clone(),
            reason,
        })?;
        let has_placeholder = parts.iter().any(|p| matches!(p, PathPart::EntityAttr(_)));
        match (rule.per, has_placeholder) {
            (Per::Model, true) => {
                return Err(PackError::BadPath {
                    rule: rule_no,
                    path: rule.path,
                    reason: "per-model outputs may not use entity placeholders".into(),
                })
            }
            (Per::Entity, false) => {
                return Err(PackError::BadPath {
                    rule: rule_no,
                    path: rule.path,
                    reason: "per-entity outputs need an {entity.name} or {entity.tableName} placeholder"
                        .into(),
                })
            }
            _ => {}
        }
        if !templates.contains_key(&rule.template) {
            let src = listing
                .get(&rule.template)
                .ok_or_else(|| PackError::MissingTemplate {
                    rule: rule_no,
                    path: rule.path.clone(),
                    template: rule.template.clone(),
                })?;
            let ast = atl::parse_template(&normalize_newlines(src), &rule.template)?;
            templates.insert(rule.template.clone(), ast);
        }
        outputs.push(OutputRule {
            template: rule.template,
            path_pattern: rule.path,
            per: rule.per,
            ownership: rule.ownership,
            active_only: rule.active_only.unwrap_or(true),
            flags: rule.flags,
            parts,
        });
    }
    Ok(TemplatePack {
        name: manifest.name,
        version: manifest.version,
        outputs,
        templates,
    })
}

/// Reads every file under `dir` and loads it as a pack.
pub fn load_pack_dir(dir: &Path) -> Result<TemplatePack, PackError> {
    let mut listing = BTreeMap::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| PackError::Io(e.to_string()))?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry
            .path()
            .strip_prefix(dir)
            .map_err(|e| PackError::Io(e.to_string()))?;
        let key = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        let text = std::fs::read_to_string(entry.path())
            .map_err(|e| PackError::Io(format!("{}: {e}", entry.path().display())))?;
        listing.insert(key, text);
    }
    if listing.is_empty() && !dir.is_dir() {
        return Err(PackError::Io(format!("{}: not a directory", dir.display())));
    }
    load_pack(&listing)
}

fn base_context(model: &Value, rule: &OutputRule, lang: &Option<String>) -> atl::Context {
    let mut ctx = atl::Context::new();
    ctx.insert("model".into(), model.clone());
    ctx.insert(
        "lang".into(),
        lang.as_deref().map_or(Value::Null, Value::text),
    );
    let mut flags = atl::Node::new("Flags");
    for (k, v) in &rule.flags {
        flags.set(k, json_to_value(v));
    }
    ctx.insert("flags".into(), flags.into());
    ctx
}

fn expand(
    rule: &OutputRule,
    model: &ApplicationModel,
    model_value: &Value,
    lang: &Option<String>,
) -> Result<Vec<(String, atl::Context)>, GenerateError> {
    let base = base_context(model_value, rule, lang);
    let mut out = Vec::new();
    match rule.per {
        Per::Model => out.push((rule.path_pattern.clone(), base)),
        Per::Entity => {
            for (i, e) in model.entities.iter().enumerate() {
                if rule.active_only && !e.is_active {
                    continue;
                }
                let path: String = rule
                    .parts
                    .iter()
                    .map(|p| match p {
                        PathPart::Literal(s) => s.as_str(),
                        PathPart::EntityAttr(a) if a == "tableName" => e.table_name.as_str(),
                        PathPart::EntityAttr(_) => e.name.as_str(),
                    })
                    .collect();
                let mut ctx = base.clone();
                let entity = context::entity_of(model_value, i).unwrap_or(Value::Null);
                ctx.insert("entity".into(), entity);
                out.push((path, ctx));
            }
        }
    }
    let mut seen = HashSet::new();
    for (path, _) in &out {
        if check_relative_path(path).is_err() {
            return Err(GenerateError::UnsafePath { path: path.clone() });
        }
        if !seen.insert(path.as_str()) {
            return Err(GenerateError::PathCollision { path: path.clone() });
        }
    }
    Ok(out)
}

/// Expands one rule into `(path, context)` pairs: a single pair for
/// per-model rules, one per (active) entity otherwise.
pub fn expand_output_rule(
    rule: &OutputRule,
    model: &ApplicationModel,
    config: &GenConfig,
) -> Result<Vec<(String, atl::Context)>, GenerateError> {
    let mv = context::model_value(model);
    expand(rule, model, &mv, &config.resolve_lang(model))
}

/// Renders every output of `pack` for `model`. Artifacts come out in
/// manifest rule order, then entity document order.
pub fn generate_all(
    model: &ApplicationModel,
    pack: &TemplatePack,
    config: &GenConfig,
) -> Result<Vec<Artifact>, GenerateError> {
    let mv = context::model_value(model);
    let lang = config.resolve_lang(model);
    let mut artifacts = Vec::new();
    let mut seen = HashSet::new();
    for rule in &pack.outputs {
        let template = &pack.templates[&rule.template];
        for (path, ctx) in expand(rule, model, &mv, &lang)? {
            if !seen.insert(path.clone()) {
                return Err(GenerateError::PathCollision { path });
            }
            let text = atl::render(template, &ctx).map_err(|source| GenerateError::Render {
                path: path.clone(),
                source,
            })?;
            artifacts.push(Artifact {
                path,
                content: text.into_bytes(),
                ownership: rule.ownership,
            });
        }
    }
    Ok(artifacts)
}
