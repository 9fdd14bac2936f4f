//! Regeneration safety.
//!
//! Every generated file is recorded in `.sfgen-manifest.json` at the output
//! root together with its ownership and the SHA-256 of the content sfgen
//! last wrote. On the next run [`plan_writes`] compares what is on disk with
//! that record and decides, per file, whether to create, overwrite, skip or
//! stop with a conflict. [`apply_plan`] carries the plan out.
//!
//! ```
//! use std::collections::BTreeMap;
//! use sfgen::ownership::{plan_writes, WriteAction};
//! use sfgen::packs::{Artifact, Ownership};
//!
//! let derived = Artifact {
//!     path: "dal/Customer.js".into(),
//!     content: b"class Customer extends Customer_Base {}\n".to_vec(),
//!     ownership: Ownership::Once,
//! };
//! let mut disk = BTreeMap::new();
//! disk.insert("dal/Customer.js".to_string(), b"// my code\n".to_vec());
//!
//! let plan = plan_writes(&[derived], &disk, None, true);
//! assert_eq!(plan.actions[0].action, WriteAction::SkipOnce);
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::packs::{Artifact, Ownership};

/// Name of the manifest file at the output root.
pub const MANIFEST_FILE: &str = ".sfgen-manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

const TEMP_SUFFIX: &str = ".sfgen-tmp";

/// Lowercase hex SHA-256 of `content`.
pub fn digest(content: &[u8]) -> String {
    hex::encode(Sha256::digest(content))
}

fn is_digest(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub path: String,
    pub ownership: Ownership,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub entries: Vec<ManifestEntry>,
}

impl Default for Manifest {
    fn default() -> Self {
        Manifest {
            version: MANIFEST_VERSION,
            entries: Vec::new(),
        }
    }
}

impl Manifest {
    /// Builds a manifest, sorting entries by path. Later entries win on
    /// duplicate paths.
    pub fn new(entries: impl IntoIterator<Item = ManifestEntry>) -> Self {
        let by_path: BTreeMap<String, ManifestEntry> =
            entries.into_iter().map(|e| (e.path.clone(), e)).collect();
        Manifest {
            version: MANIFEST_VERSION,
            entries: by_path.into_values().collect(),
        }
    }

    pub fn get(&self, path: &str) -> Option<&ManifestEntry> {
        self.entries
            .binary_search_by(|e| e.path.as_str().cmp(path))
            .ok()
            .map(|i| &self.entries[i])
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, OwnershipError> {
        let m: Manifest =
            serde_json::from_str(text).map_err(|e| OwnershipError::Manifest(e.to_string()))?;
        if m.version != MANIFEST_VERSION {
            return Err(OwnershipError::Manifest(format!(
                "unsupported version {}",
                m.version
            )));
        }
        for pair in m.entries.windows(2) {
            if pair[0].path >= pair[1].path {
                return Err(OwnershipError::Manifest(format!(
                    "entries not sorted or duplicated at '{}'",
                    pair[1].path
                )));
            }
        }
        if let Some(bad) = m.entries.iter().find(|e| !is_digest(&e.sha256)) {
            return Err(OwnershipError::Manifest(format!(
                "'{}' has a malformed sha256",
                bad.path
            )));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WriteAction {
    Create,
    Overwrite,
    SkipOnce,
    SkipUnchanged,
    Conflict,
}

impl WriteAction {
    pub fn as_str(self) -> &'static str {
        match self {
            WriteAction::Create => "CREATE",
            WriteAction::Overwrite => "OVERWRITE",
            WriteAction::SkipOnce => "SKIP_ONCE",
            WriteAction::SkipUnchanged => "SKIP_UNCHANGED",
            WriteAction::Conflict => "CONFLICT",
        }
    }

    pub fn writes(self) -> bool {
        matches!(self, WriteAction::Create | WriteAction::Overwrite)
    }
}

impl fmt::Display for WriteAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedWrite {
    pub path: String,
    pub action: WriteAction,
    pub reason: String,
}

/// One action per artifact, in artifact order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WritePlan {
    pub actions: Vec<PlannedWrite>,
}

impl WritePlan {
    pub fn conflicts(&self) -> impl Iterator<Item = &PlannedWrite> {
        self.actions
            .iter()
            .filter(|a| a.action == WriteAction::Conflict)
    }

    pub fn has_conflicts(&self) -> bool {
        self.conflicts().next().is_some()
    }

    pub fn count(&self, action: WriteAction) -> usize {
        self.actions.iter().filter(|a| a.action == action).count()
    }
}

impl fmt::Display for WritePlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.actions {
            writeln!(f, "{:<14} {} ({})", a.action.as_str(), a.path, a.reason)?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OwnershipError {
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
    #[error("{MANIFEST_FILE}: {0}")]
    Manifest(String),
    #[error("refusing to write: {} conflicting file(s): {}", .0.len(), .0.join(", "))]
    Conflicts(Vec<String>),
    #[error("plan entry '{0}' has no matching artifact")]
    UnknownPath(String),
}

fn io_err(path: &Path, e: std::io::Error) -> OwnershipError {
    OwnershipError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

/// Decides what to do with each artifact given the current disk contents
/// and the manifest from the previous run.
///
/// `Once` files that exist are never touched, even with `force`. An
/// `Always` file is only overwritten when it still has the digest sfgen
/// recorded; otherwise someone edited it and the plan reports a conflict,
/// unless `force` is set. A file whose bytes already equal the new content
/// is left alone whatever its history.
pub fn plan_writes(
    artifacts: &[Artifact],
    existing: &BTreeMap<String, Vec<u8>>,
    manifest: Option<&Manifest>,
    force: bool,
) -> WritePlan {
    let actions = artifacts
        .iter()
        .map(|a| {
            let (action, reason) = match (a.ownership, existing.get(&a.path)) {
                (_, None) => (WriteAction::Create, "new file"),
                (Ownership::Once, Some(_)) => (WriteAction::SkipOnce, "developer-owned file exists"),
                (Ownership::Always, Some(disk)) if *disk == a.content => {
                    (WriteAction::SkipUnchanged, "up to date")
                }
                (Ownership::Always, Some(disk)) => {
                    let recorded = manifest.and_then(|m| m.get(&a.path)).map(|e| e.sha256.as_str());
                    match recorded {
                        Some(d) if d == digest(disk) => (WriteAction::Overwrite, "content changed"),
                        _ if force => (WriteAction::Overwrite, "forced"),
                        Some(_) => (WriteAction::Conflict, "edited since last generation"),
                        None => (WriteAction::Conflict, "exists but was not generated by sfgen"),
                    }
                }
            };
            PlannedWrite {
                path: a.path.clone(),
                action,
                reason: reason.to_string(),
            }
        })
        .collect();
    WritePlan { actions }
}

fn temp_path(target: &Path) -> PathBuf {
    let mut name = target.file_name().unwrap_or_default().to_os_string();
    name.push(format!("{TEMP_SUFFIX}-{}", std::process::id()));
    target.with_file_name(name)
}

/// Writes `content` to `target` through a temporary sibling and a rename,
/// so readers see either the old or the new file.
pub fn write_atomic(target: &Path, content: &[u8]) -> Result<(), OwnershipError> {
    if let Some(dir) = target.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let tmp = temp_path(target);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(content)?;
        f.sync_all()?;
        fs::rename(&tmp, target)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(io_err(target, e));
    }
    Ok(())
}

/// Performs the plan's writes under `root` and records the new manifest.
///
/// `Always` entries get the digest of what was written. `Once` entries keep
/// the digest from `previous` when there is one, else the digest of the
/// generated scaffold, so a file the developer has filled in keeps reading
/// as handwritten. Entries of `previous` for paths no longer generated are
/// kept while their files remain on disk.
pub fn apply_plan(
    plan: &WritePlan,
    artifacts: &[Artifact],
    root: &Path,
    previous: Option<&Manifest>,
) -> Result<Manifest, OwnershipError> {
    let conflicts: Vec<String> = plan.conflicts().map(|a| a.path.clone()).collect();
    if !conflicts.is_empty() {
        return Err(OwnershipError::Conflicts(conflicts));
    }
    let by_path: BTreeMap<&str, &Artifact> =
        artifacts.iter().map(|a| (a.path.as_str(), a)).collect();
    for step in &plan.actions {
        if !by_path.contains_key(step.path.as_str()) {
            return Err(OwnershipError::UnknownPath(step.path.clone()));
        }
    }
    for step in plan.actions.iter().filter(|s| s.action.writes()) {
        write_atomic(&root.join(&step.path), &by_path[step.path.as_str()].content)?;
    }

    let mut entries: Vec<ManifestEntry> = artifacts
        .iter()
        .map(|a| {
            let sha256 = match (a.ownership, previous.and_then(|m| m.get(&a.path))) {
                (Ownership::Once, Some(prev)) if prev.ownership == Ownership::Once => prev.sha256.clone(),
                _ => digest(&a.content),
            };
            ManifestEntry {
                path: a.path.clone(),
                ownership: a.ownership,
                sha256,
            }
        })
        .collect();
    if let Some(prev) = previous {
        let current: BTreeSet<&str> = by_path.keys().copied().collect();
        entries.extend(
            prev.entries
                .iter()
                .filter(|e| !current.contains(e.path.as_str()) && root.join(&e.path).is_file())
                .cloned(),
        );
    }
    let manifest = Manifest::new(entries);
    write_atomic(&root.join(MANIFEST_FILE), manifest.to_json().as_bytes())?;
    Ok(manifest)
}

/// Loads the manifest under `root`, or `None` if there is none.
pub fn read_manifest(root: &Path) -> Result<Option<Manifest>, OwnershipError> {
    let path = root.join(MANIFEST_FILE);
    match fs::read_to_string(&path) {
        Ok(text) => Manifest::from_json(&text).map(Some),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(io_err(&path, e)),
    }
}

/// Reads those of `paths` that exist under `root`.
pub fn read_existing<'p>(
    root: &Path,
    paths: impl IntoIterator<Item = &'p str>,
) -> Result<BTreeMap<String, Vec<u8>>, OwnershipError> {
    let mut out = BTreeMap::new();
    for p in paths {
        let full = root.join(p);
        match fs::read(&full) {
            Ok(bytes) => {
                out.insert(p.to_string(), bytes);
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(io_err(&full, e)),
        }
    }
    Ok(out)
}

/// Every regular file under `root` except the manifest, keyed by
/// `/`-separated relative path.
pub fn read_tree(root: &Path) -> Result<BTreeMap<String, Vec<u8>>, OwnershipError> {
    let mut out = BTreeMap::new();
    if !root.exists() {
        return Ok(out);
    }
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| OwnershipError::Io {
            path: root.display().to_string(),
            reason: e.to_string(),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry
            .path()
            .strip_prefix(root)
            .expect("walkdir yields paths under root");
        let key = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        if key == MANIFEST_FILE {
            continue;
        }
        let bytes = fs::read(entry.path()).map_err(|e| io_err(entry.path(), e))?;
        out.insert(key, bytes);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn art(path: &str, content: &str, ownership: Ownership) -> Artifact {
        Artifact {
            path: path.into(),
            content: content.as_bytes().to_vec(),
            ownership,
        }
    }

    fn disk(files: &[(&str, &str)]) -> BTreeMap<String, Vec<u8>> {
        files
            .iter()
            .map(|(p, c)| (p.to_string(), c.as_bytes().to_vec()))
            .collect()
    }

    fn manifest(files: &[(&str, &str, Ownership)]) -> Manifest {
        Manifest::new(files.iter().map(|(p, c, o)| ManifestEntry {
            path: p.to_string(),
            ownership: *o,
            sha256: digest(c.as_bytes()),
        }))
    }

    fn action(plan: &WritePlan) -> WriteAction {
        plan.actions[0].action
    }

    #[test]
    fn digest_vectors() {
        assert_eq!(
            digest(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(
            digest(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn rule_table() {
        use Ownership::*;
        use WriteAction::*;
        let old = manifest(&[("a", "v1", Always), ("o", "v1", Once)]);
        let cases: &[(Ownership, Option<&str>, &str, bool, WriteAction)] = &[
            (Once, None, "v2", false, Create),
            (Once, Some("mine"), "v2", false, SkipOnce),
            (Once, Some("mine"), "v2", true, SkipOnce),
            (Always, None, "v2", false, Create),
            (Always, Some("v1"), "v2", false, Overwrite),
            (Always, Some("v1"), "v1", false, SkipUnchanged),
            (Always, Some("edited"), "v2", false, Conflict),
            (Always, Some("edited"), "v2", true, Overwrite),
        ];
        for (own, on_disk, new, force, expected) in cases {
            let path = if *own == Once { "o" } else { "a" };
            let files = on_disk.map(|c| disk(&[(path, c)])).unwrap_or_default();
            let plan = plan_writes(&[art(path, new, *own)], &files, Some(&old), *force);
            assert_eq!(action(&plan), *expected, "{own:?} {on_disk:?} {new} force={force}");
        }
    }

    #[test]
    fn unrecorded_always_file_conflicts() {
        let plan = plan_writes(&[art("a", "gen", Ownership::Always)], &disk(&[("a", "hand")]), None, false);
        assert_eq!(action(&plan), WriteAction::Conflict);
        assert!(plan.actions[0].reason.contains("not generated"));
        let forced = plan_writes(&[art("a", "gen", Ownership::Always)], &disk(&[("a", "hand")]), None, true);
        assert_eq!(forced.actions[0].reason, "forced");
    }

    #[test]
    fn manifest_json_shape() {
        let m = manifest(&[("b.sql", "x", Ownership::Always), ("a.js", "y", Ownership::Once)]);
        let json = m.to_json();
        assert!(json.ends_with("}\n"));
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["version"], 1);
        assert_eq!(v["entries"][0]["path"], "a.js");
        assert_eq!(v["entries"][0]["ownership"], "once");
        assert_eq!(v["entries"][1]["ownership"], "always");
        assert_eq!(Manifest::from_json(&json).unwrap(), m);
    }

    #[test]
    fn manifest_rejects_bad_input() {
        assert!(Manifest::from_json("{").is_err());
        assert!(Manifest::from_json(r#"{"version":2,"entries":[]}"#).is_err());
        let bad_digest = r#"{"version":1,"entries":[{"path":"a","ownership":"always","sha256":"ABC"}]}"#;
        assert!(Manifest::from_json(bad_digest).is_err());
        let d = digest(b"");
        let unsorted = format!(
            r#"{{"version":1,"entries":[{{"path":"b","ownership":"always","sha256":"{d}"}},{{"path":"a","ownership":"always","sha256":"{d}"}}]}}"#
        );
        assert!(Manifest::from_json(&unsorted).is_err());
    }

    #[test]
    fn apply_fresh_then_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let arts = [
            art("sql/t.sql", "create", Ownership::Always),
            art("dal/X.js", "class X {}", Ownership::Once),
        ];
        let plan = plan_writes(&arts, &BTreeMap::new(), None, false);
        assert_eq!(plan.count(WriteAction::Create), 2);
        let m1 = apply_plan(&plan, &arts, dir.path(), None).unwrap();
        assert_eq!(m1.entries.len(), 2);
        assert_eq!(fs::read_to_string(dir.path().join("sql/t.sql")).unwrap(), "create");

        let existing = read_existing(dir.path(), arts.iter().map(|a| a.path.as_str())).unwrap();
        let prev = read_manifest(dir.path()).unwrap().unwrap();
        assert_eq!(prev, m1);
        let plan2 = plan_writes(&arts, &existing, Some(&prev), false);
        assert!(plan2
            .actions
            .iter()
            .all(|a| matches!(a.action, WriteAction::SkipUnchanged | WriteAction::SkipOnce)));
        let before = fs::read(dir.path().join(MANIFEST_FILE)).unwrap();
        let m2 = apply_plan(&plan2, &arts, dir.path(), Some(&prev)).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(before, fs::read(dir.path().join(MANIFEST_FILE)).unwrap());
        assert!(read_tree(dir.path()).unwrap().keys().all(|k| !k.contains(TEMP_SUFFIX)));
    }

    #[test]
    fn conflicting_plan_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let arts = [
            art("new.txt", "n", Ownership::Always),
            art("a.txt", "gen", Ownership::Always),
        ];
        fs::write(dir.path().join("a.txt"), "hand").unwrap();
        let plan = plan_writes(&arts, &disk(&[("a.txt", "hand")]), None, false);
        let err = apply_plan(&plan, &arts, dir.path(), None).unwrap_err();
        assert!(matches!(err, OwnershipError::Conflicts(ref p) if p == &["a.txt"]));
        assert!(!dir.path().join("new.txt").exists());
        assert!(!dir.path().join(MANIFEST_FILE).exists());
    }

    #[test]
    fn once_digest_survives_user_edits() {
        let dir = tempfile::tempdir().unwrap();
        let arts = [art("dal/X.js", "scaffold", Ownership::Once)];
        let m1 = apply_plan(&plan_writes(&arts, &BTreeMap::new(), None, false), &arts, dir.path(), None).unwrap();
        fs::write(dir.path().join("dal/X.js"), "handwritten").unwrap();
        let existing = read_existing(dir.path(), ["dal/X.js"]).unwrap();
        let plan = plan_writes(&arts, &existing, Some(&m1), true);
        assert_eq!(action(&plan), WriteAction::SkipOnce);
        let m2 = apply_plan(&plan, &arts, dir.path(), Some(&m1)).unwrap();
        assert_eq!(m2.get("dal/X.js").unwrap().sha256, digest(b"scaffold"));
        assert_eq!(fs::read_to_string(dir.path().join("dal/X.js")).unwrap(), "handwritten");
    }

    #[test]
    fn stale_entries_kept_while_file_exists() {
        let dir = tempfile::tempdir().unwrap();
        let first = [art("old.txt", "o", Ownership::Always), art("keep.txt", "k", Ownership::Always)];
        let m1 = apply_plan(&plan_writes(&first, &BTreeMap::new(), None, false), &first, dir.path(), None).unwrap();
        let second = [art("keep.txt", "k", Ownership::Always)];
        let existing = read_existing(dir.path(), ["keep.txt"]).unwrap();
        let m2 = apply_plan(&plan_writes(&second, &existing, Some(&m1), false), &second, dir.path(), Some(&m1)).unwrap();
        assert!(m2.get("old.txt").is_some());
        fs::remove_file(dir.path().join("old.txt")).unwrap();
        let m3 = apply_plan(&plan_writes(&second, &existing, Some(&m2), false), &second, dir.path(), Some(&m2)).unwrap();
        assert!(m3.get("old.txt").is_none());
    }

    #[test]
    fn plan_display_lists_every_action() {
        let plan = plan_writes(&[art("a", "x", Ownership::Always)], &BTreeMap::new(), None, false);
        assert_eq!(plan.to_string(), "CREATE         a (new file)\n");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn digest_is_64_lower_hex(bytes in prop::collection::vec(any::<u8>(), 0..256)) {
                prop_assert!(is_digest(&digest(&bytes)));
            }

            #[test]
            fn conflict_only_for_edited_always(
                gen in "[a-c]{0,3}", on_disk in prop::option::of("[a-c]{0,3}"),
                recorded in prop::option::of("[a-c]{0,3}"), once in any::<bool>(), force in any::<bool>(),
            ) {
                let own = if once { Ownership::Once } else { Ownership::Always };
                let files = on_disk.as_deref().map(|c| disk(&[("p", c)])).unwrap_or_default();
                let m = recorded.as_deref().map(|r| manifest(&[("p", r, own)]));
                let plan = plan_writes(&[art("p", &gen, own)], &files, m.as_ref(), force);
                prop_assert_eq!(plan.actions.len(), 1);
                if action(&plan) == WriteAction::Conflict {
                    prop_assert!(!once && !force);
                    let d = digest(on_disk.unwrap().as_bytes());
                    prop_assert!(recorded.map(|r| digest(r.as_bytes())) != Some(d));
                }
                if once && files.contains_key("p") {
                    prop_assert_eq!(action(&plan), WriteAction::SkipOnce);
                }
            }
        }
    }
}
