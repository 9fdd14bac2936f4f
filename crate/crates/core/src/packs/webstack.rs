//! The bundled reference pack.

use std::collections::BTreeMap;

use super::{load_pack, TemplatePack};

macro_rules! pack_files {
    ($($path:literal),+ $(,)?) => {
        &[$(($path, include_str!(concat!("../../packs/webstack/", $path)))),+]
    };
}

const FILES: &[(&str, &str)] = pack_files![
    "pack.json",
    "templates/sql/tables.atl",
    "templates/sql/constraints.atl",
    "templates/sql/procs.atl",
    "templates/dal/base.atl",
    "templates/dal/derived.atl",
    "templates/web/edit.atl",
    "templates/web/list.atl",
    "templates/web/validation.atl",
    "templates/docs/entity.atl",
    "templates/api/api.atl",
];

/// The webstack pack's files, keyed by path relative to the pack root.
pub fn webstack_listing() -> BTreeMap<String, String> {
    FILES
        .iter()
        .map(|(p, s)| (p.to_string(), s.to_string()))
        .collect()
}

/// The webstack pack, compiled into the binary.
///
/// SQL DDL, constraints and CRUD procedures, a data-access class pair per
/// entity (generated base, developer-owned derived class), edit and list
/// pages, client-side validation, per-entity documentation and an API
/// description.
pub fn webstack() -> TemplatePack {
    load_pack(&webstack_listing()).expect("bundled webstack pack is valid")
}
