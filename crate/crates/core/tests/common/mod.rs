#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use sfgen::model::{
    ApplicationModel, Caching, Constraint, ConstraintKind, Entity, Field, FieldType, LocalizedText,
    RelationshipOp, Settings,
};

pub fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap()
}

pub fn load_fixture(name: &str) -> ApplicationModel {
    let report = sfgen::loader::load_model(fixture_text(name).as_bytes());
    assert!(!report.has_errors(), "{name}: {:?}", report.diagnostics);
    report.model.unwrap()
}

pub fn webstack_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("packs/webstack")
}

/// Runs the command line in-process.
pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = sfgen::cli::run(std::iter::once("sfgen").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Digest over every file under `root` (manifest included), keyed by path.
pub fn tree_hash(root: &Path) -> String {
    let mut acc = String::new();
    if root.exists() {
        for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
            let entry = entry.unwrap();
            let rel = entry.path().strip_prefix(root).unwrap().to_string_lossy().into_owned();
            if entry.file_type().is_file() {
                let bytes = std::fs::read(entry.path()).unwrap();
                writeln!(acc, "F {rel} {}", sfgen::ownership::digest(&bytes)).unwrap();
            } else {
                writeln!(acc, "D {rel}").unwrap();
            }
        }
    }
    sfgen::ownership::digest(acc.as_bytes())
}

const LANGS: &[&str] = &["English", "Macedonian", "Deutsch"];
const TEXTS: &[&str] = &[
    "Name",
    "Факултет",
    "Größe & Gewicht",
    "a < b",
    "it's \"quoted\"",
    "</script><b>",
    "x | y",
];
const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";

fn word<R: Rng>(rng: &mut R, max: usize) -> String {
    let n = rng.gen_range(0..=max);
    (0..n).map(|_| *LETTERS.choose(rng).unwrap() as char).collect()
}

fn texts<R: Rng>(rng: &mut R, langs: &[&str], all: bool) -> LocalizedText {
    let mut t = LocalizedText::new();
    for l in langs {
        if all || rng.gen_bool(0.7) {
            t.insert(*l, *TEXTS.choose(rng).unwrap());
        }
    }
    t
}

const TYPES: &[FieldType] = &[
    FieldType::Int,
    FieldType::BigInt,
    FieldType::Decimal,
    FieldType::Bit,
    FieldType::Float,
    FieldType::DateTime,
    FieldType::Date,
    FieldType::NVarChar,
    FieldType::VarChar,
    FieldType::Text,
];

fn random_field<R: Rng>(rng: &mut R, name: String, langs: &[&str], entity_names: &[String]) -> Field {
    let ty = *TYPES.choose(rng).unwrap();
    let mut f = Field::new(name, ty);
    if ty.is_sized() {
        f.length = Some(rng.gen_range(1..=4000));
    }
    if ty.is_textual() && rng.gen_bool(0.2) {
        f.number_of_rows = Some(rng.gen_range(1..=20));
        f.number_of_cols = Some(rng.gen_range(10..=80));
    }
    f.nullable = rng.gen_bool(0.4);
    f.is_shown_in_list = rng.gen_bool(0.8);
    f.is_shown_in_edit = rng.gen_bool(0.9);
    if ty == FieldType::Int && rng.gen_bool(0.3) {
        f.is_fk = true;
        f.fk_entity_name = Some(entity_names.choose(rng).unwrap().clone());
    }
    if rng.gen_bool(0.2) {
        f.description = Some(TEXTS.choose(rng).unwrap().to_string());
    }
    if rng.gen_bool(0.1) {
        f.default_value = Some("0".into());
    }
    f.display_names = texts(rng, langs, false);
    f
}

/// A random model that passes validation. Names are unique by construction
/// and never end in `_Base`, so webstack paths cannot collide.
pub fn random_model<R: Rng>(rng: &mut R, max_entities: usize, max_fields: usize) -> ApplicationModel {
    let mut langs: Vec<&str> = LANGS.to_vec();
    langs.shuffle(rng);
    langs.truncate(rng.gen_range(0..=LANGS.len()));

    let n = rng.gen_range(1..=max_entities.max(1));
    let names: Vec<String> = (0..n).map(|i| format!("E{i}{}", word(rng, 6))).collect();
    let mut entities = Vec::with_capacity(n);
    for (i, name) in names.iter().enumerate() {
        let mut e = Entity::new(name.clone());
        if rng.gen_bool(0.5) {
            e.table_name = format!("T{i}{}", word(rng, 4));
        }
        e.is_active = rng.gen_bool(0.85);
        e.is_logged = rng.gen_bool(0.5);
        e.is_audited = rng.gen_bool(0.5);
        e.caching = if rng.gen_bool(0.5) { Caching::Enabled } else { Caching::Disabled };
        e.display_names = texts(rng, &langs, true);
        e.plural_names = texts(rng, &langs, false);

        let mut pk = if rng.gen_bool(0.8) {
            Field::identity_pk("ID")
        } else {
            Field {
                is_pk: true,
                ..Field::sized("Code", FieldType::NVarChar, 20)
            }
        };
        pk.is_shown_in_list = rng.gen_bool(0.5);
        pk.display_names = texts(rng, &langs, false);
        e.fields.push(pk);
        let extra = rng.gen_range(0..max_fields.max(1));
        for j in 0..extra {
            let fname = format!("f{j}{}", word(rng, 5));
            e.fields.push(random_field(rng, fname, &langs, &names));
        }

        let mut seen: BTreeSet<(ConstraintKind, Vec<String>)> = BTreeSet::new();
        for _ in 0..rng.gen_range(0..=3) {
            let mut c = if rng.gen_bool(0.6) && e.fields.len() >= 2 {
                let a = rng.gen_range(0..e.fields.len());
                let family = e.fields[a].ty().unwrap().compare_family();
                let partners: Vec<usize> = (0..e.fields.len())
                    .filter(|&b| b != a && e.fields[b].ty().unwrap().compare_family() == family)
                    .collect();
                let Some(&b) = partners.choose(rng) else { continue };
                let rel = *RelationshipOp::ALL.choose(rng).unwrap();
                Constraint::two_fields(&e.fields[a].name, rel, &e.fields[b].name)
            } else {
                let k = rng.gen_range(1..=e.fields.len().min(2));
                let picked: Vec<String> = e
                    .fields
                    .choose_multiple(rng, k)
                    .map(|f| f.name.clone())
                    .collect();
                Constraint::unique(picked)
            };
            if !seen.insert((c.constraint_kind().unwrap(), c.cfields.clone())) {
                continue;
            }
            c.error_messages = texts(rng, &langs, false);
            e.constraints.push(c);
        }
        entities.push(e);
    }

    let settings = Settings {
        app_name: format!("App{}", word(rng, 4)),
        default_language: None,
        connection_string_name: rng.gen_bool(0.5).then(|| "Main".to_string()),
    };
    let mut model = ApplicationModel::new(settings, entities);
    if let Some(first) = model.languages().first().cloned() {
        model.settings.default_language = Some(first);
    }
    model
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

fn attr(out: &mut String, name: &str, value: impl std::fmt::Display) {
    write!(out, " {name}=\"{}\"", esc(&value.to_string())).unwrap();
}

fn languages(out: &mut String, indent: &str, groups: &[(&str, &LocalizedText)]) {
    let mut by_lang: BTreeMap<&str, Vec<(&str, &str)>> = BTreeMap::new();
    let mut order: Vec<&str> = Vec::new();
    for (tag, t) in groups {
        for (lang, text) in t.iter() {
            if !order.contains(&lang) {
                order.push(lang);
            }
            by_lang.entry(lang).or_default().push((tag, text));
        }
    }
    for lang in order {
        writeln!(out, "{indent}<Language name=\"{}\">", esc(lang)).unwrap();
        for (tag, text) in &by_lang[lang] {
            writeln!(out, "{indent}  <{tag}>{}</{tag}>", esc(text)).unwrap();
        }
        writeln!(out, "{indent}</Language>").unwrap();
    }
}

/// Serializes a model in the document vocabulary the loader reads.
pub fn model_to_xml(model: &ApplicationModel) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<xsource>\n  <Settings");
    attr(&mut out, "appName", &model.settings.app_name);
    if let Some(l) = &model.settings.default_language {
        attr(&mut out, "defaultLanguage", l);
    }
    if let Some(c) = &model.settings.connection_string_name {
        attr(&mut out, "connectionStringName", c);
    }
    out.push_str("/>\n  <EntityConfig>\n");
    for e in &model.entities {
        out.push_str("    <Entity");
        attr(&mut out, "name", &e.name);
        attr(&mut out, "tableName", &e.table_name);
        attr(&mut out, "caching", e.caching);
        attr(&mut out, "isAudited", e.is_audited);
        attr(&mut out, "isLogged", e.is_logged);
        attr(&mut out, "isActive", e.is_active);
        out.push_str(">\n");
        languages(&mut out, "      ", &[("DisplayName", &e.display_names), ("PluralName", &e.plural_names)]);
        for f in &e.fields {
            out.push_str("      <Field");
            attr(&mut out, "name", &f.name);
            attr(&mut out, "type", &f.field_type);
            if let Some(l) = f.length {
                attr(&mut out, "length", l);
            }
            attr(&mut out, "nullable", f.nullable);
            attr(&mut out, "isPK", f.is_pk);
            attr(&mut out, "isIdentity", f.is_identity);
            attr(&mut out, "isFK", f.is_fk);
            if let Some(v) = &f.fk_entity_name {
                attr(&mut out, "fkEntityName", v);
            }
            if let Some(v) = &f.fk_name {
                attr(&mut out, "fkName", v);
            }
            attr(&mut out, "isLookup", f.is_lookup);
            attr(&mut out, "createLookup", f.create_lookup);
            attr(&mut out, "isOVN", f.is_ovn);
            attr(&mut out, "isAudited", f.is_audited);
            attr(&mut out, "isShownInList", f.is_shown_in_list);
            attr(&mut out, "isShownInEdit", f.is_shown_in_edit);
            attr(&mut out, "isShownInHistory", f.is_shown_in_history);
            for (name, v) in [
                ("description", &f.description),
                ("defaultValue", &f.default_value),
                ("displayFormat", &f.display_format),
                ("displayName", &f.display_name_attr),
            ] {
                if let Some(v) = v {
                    attr(&mut out, name, v);
                }
            }
            if let Some(v) = f.number_of_rows {
                attr(&mut out, "numberOfRows", v);
            }
            if let Some(v) = f.number_of_cols {
                attr(&mut out, "numberOfCols", v);
            }
            out.push_str(">\n");
            languages(&mut out, "        ", &[("DisplayName", &f.display_names)]);
            out.push_str("      </Field>\n");
        }
        for c in &e.constraints {
            out.push_str("      <Constraint");
            attr(&mut out, "type", &c.kind);
            if let Some(r) = &c.relationship {
                attr(&mut out, "relationship", r);
            }
            out.push_str(">\n");
            languages(&mut out, "        ", &[("ErrorMessage", &c.error_messages)]);
            for name in &c.cfields {
                writeln!(out, "        <CField name=\"{}\"/>", esc(name)).unwrap();
            }
            out.push_str("      </Constraint>\n");
        }
        out.push_str("    </Entity>\n");
    }
    out.push_str("  </EntityConfig>\n</xsource>\n");
    out
}

/// Seeded generator for reproducible property runs.
pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// Minimal invalid documents: file, expected code, and the text the
/// reported location must point at (nth occurrence, 1-based).
pub const INVALID_FIXTURES: &[(&str, &str, &str, usize)] = &[
    ("fk_target.xml", "E_FK_TARGET", "fkEntityName=\"Fakultet\"", 1),
    ("constraint_arity.xml", "E_CONSTRAINT_ARITY", "<Constraint", 1),
    ("bad_bool.xml", "E_BAD_BOOL", "isActive=\"yes\"", 1),
    ("dup_entity.xml", "E_DUP_ENTITY", "name=\"Vest\"", 2),
    ("dup_table.xml", "E_DUP_TABLE", "tableName=\"News\"", 2),
    ("dup_field.xml", "E_DUP_FIELD", "name=\"Title\"", 2),
    ("missing_type.xml", "E_MISSING_ATTR", "<Field name=\"Title\"/>", 1),
    ("missing_name.xml", "E_MISSING_ATTR", "<Entity tableName", 1),
    ("bad_type.xml", "E_BAD_TYPE", "type=\"string\"", 1),
];

/// 1-based line and column (in characters) of the nth occurrence of
/// `needle` in `text`.
pub fn position_of(text: &str, needle: &str, nth: usize) -> (u32, u32) {
    let offset = text
        .match_indices(needle)
        .nth(nth - 1)
        .unwrap_or_else(|| panic!("{needle:?} occurs fewer than {nth} times"))
        .0;
    let before = &text[..offset];
    let line = before.matches('\n').count() as u32 + 1;
    let col = before.rsplit('\n').next().unwrap().chars().count() as u32 + 1;
    (line, col)
}

/// Loads an invalid fixture and checks it reports exactly the expected
/// error at the expected place. Returns a description of the mismatch.
pub fn check_invalid_fixture(file: &str, code: &str, needle: &str, nth: usize) -> Result<(), String> {
    let text = fixture_text(&format!("invalid/{file}"));
    let report = sfgen::loader::load_model(text.as_bytes());
    let errors: Vec<_> = report.diagnostics.iter().filter(|d| d.is_error()).collect();
    if errors.len() != 1 {
        return Err(format!("{file}: expected one error, got {errors:?}"));
    }
    let d = errors[0];
    if d.code.as_str() != code {
        return Err(format!("{file}: expected {code}, got {}", d.code.as_str()));
    }
    let (line, column) = position_of(&text, needle, nth);
    match d.location {
        Some(loc) if (loc.line, loc.column) == (line, column) => Ok(()),
        other => Err(format!("{file}: expected {line}:{column}, got {other:?}")),
    }
}
