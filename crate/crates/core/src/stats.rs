//! Generated-versus-handwritten measurement and model advisories.
//!
//! A file under the output root counts as generated when the manifest
//! records it as `always`, or as `once` with its scaffold digest unchanged.
//! Filled-in `once` files and files sfgen never wrote count as manual.
//!
//! ```
//! assert_eq!(sfgen::stats::percentages(9440, 686), (93, 7));
//! assert_eq!(sfgen::stats::percentages(915, 148), (86, 14));
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::model::{ApplicationModel, ConstraintKind};
use crate::ownership::{digest, Manifest, MANIFEST_FILE};
use crate::packs::Ownership;

/// `round(100 * x / total)`, halves rounded away from zero; 0 when
/// `total` is 0.
pub fn percent(x: u64, total: u64) -> u32 {
    percent_wide(u128::from(x), u128::from(total))
}

fn percent_wide(x: u128, total: u128) -> u32 {
    if total == 0 {
        return 0;
    }
    ((200 * x + total) / (2 * total)) as u32
}

/// Percent shares of `generated` and `manual` in their sum.
pub fn percentages(generated: u64, manual: u64) -> (u32, u32) {
    let (g, m) = (u128::from(generated), u128::from(manual));
    (percent_wide(g, g + m), percent_wide(m, g + m))
}

/// Splits an output listing into generated and manual paths. The manifest
/// file itself is ignored.
pub fn classify_files(
    listing: &BTreeMap<String, Vec<u8>>,
    manifest: &Manifest,
) -> (BTreeSet<String>, BTreeSet<String>) {
    let mut generated = BTreeSet::new();
    let mut manual = BTreeSet::new();
    for (path, bytes) in listing {
        if path == MANIFEST_FILE {
            continue;
        }
        let is_generated = match manifest.get(path) {
            Some(e) if e.ownership == Ownership::Always => true,
            Some(e) => e.sha256 == digest(bytes),
            None => false,
        };
        if is_generated {
            generated.insert(path.clone());
        } else {
            manual.insert(path.clone());
        }
    }
    (generated, manual)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StatsReport {
    pub generated_bytes: u64,
    pub manual_bytes: u64,
    pub generated_files: u64,
    pub manual_files: u64,
    pub pct_generated_bytes: u32,
    pub pct_manual_bytes: u32,
    pub pct_generated_files: u32,
    pub pct_manual_files: u32,
}

impl StatsReport {
    pub fn new(generated_bytes: u64, manual_bytes: u64, generated_files: u64, manual_files: u64) -> Self {
        let (pct_generated_bytes, pct_manual_bytes) = percentages(generated_bytes, manual_bytes);
        let (pct_generated_files, pct_manual_files) = percentages(generated_files, manual_files);
        StatsReport {
            generated_bytes,
            manual_bytes,
            generated_files,
            manual_files,
            pct_generated_bytes,
            pct_manual_bytes,
            pct_generated_files,
            pct_manual_files,
        }
    }

    /// Measures an output listing against its manifest.
    pub fn measure(listing: &BTreeMap<String, Vec<u8>>, manifest: &Manifest) -> Self {
        let (generated, manual) = classify_files(listing, manifest);
        let bytes = |set: &BTreeSet<String>| set.iter().map(|p| listing[p].len() as u64).sum::<u64>();
        StatsReport::new(
            bytes(&generated),
            bytes(&manual),
            generated.len() as u64,
            manual.len() as u64,
        )
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

impl fmt::Display for StatsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:>12} {:>5} {:>8} {:>5}", "", "bytes", "%", "files", "%")?;
        writeln!(
            f,
            "{:<10} {:>12} {:>4}% {:>8} {:>4}%",
            "generated", self.generated_bytes, self.pct_generated_bytes, self.generated_files, self.pct_generated_files
        )?;
        writeln!(
            f,
            "{:<10} {:>12} {:>4}% {:>8} {:>4}%",
            "manual", self.manual_bytes, self.pct_manual_bytes, self.manual_files, self.pct_manual_files
        )?;
        writeln!(
            f,
            "{:<10} {:>12} {:>5} {:>8}",
            "total",
            self.generated_bytes + self.manual_bytes,
            "",
            self.generated_files + self.manual_files
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Advisory {
    pub code: &'static str,
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Advisory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "advice[{}] {}: {}", self.code, self.subject, self.message)
    }
}

pub const ADV_RULE_OF_THREE: &str = "ADV_RULE_OF_THREE";
pub const ADV_UNUSED_LANGUAGE: &str = "ADV_UNUSED_LANGUAGE";

/// Model advisories, sorted by code then subject.
///
/// `ADV_RULE_OF_THREE` flags constraint kinds (and TwoFields relationships)
/// used by only one or two entities: such rules are usually cheaper to write
/// by hand than to model and template. `ADV_UNUSED_LANGUAGE` flags languages
/// that only occur in inactive entities and so reach no artifact.
pub fn lint_model(model: &ApplicationModel) -> Vec<Advisory> {
    let mut users: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
    for e in &model.entities {
        for c in &e.constraints {
            let Some(kind) = c.constraint_kind() else { continue };
            users.entry(kind.to_string()).or_default().insert(&e.name);
            if kind == ConstraintKind::TwoFields {
                if let Some(rel) = c.relationship_op() {
                    users
                        .entry(format!("{kind}/{rel}"))
                        .or_default()
                        .insert(&e.name);
                }
            }
        }
    }
    let mut out: Vec<Advisory> = users
        .into_iter()
        .filter(|(_, entities)| (1..=2).contains(&entities.len()))
        .map(|(subject, entities)| {
            let names: Vec<&str> = entities.iter().copied().collect();
            Advisory {
                code: ADV_RULE_OF_THREE,
                message: format!(
                    "used by {} entit{} ({}); a rule used in fewer than three entities is usually cheaper to handcraft",
                    names.len(),
                    if names.len() == 1 { "y" } else { "ies" },
                    names.join(", ")
                ),
                subject,
            }
        })
        .collect();

    let mut visible: BTreeSet<&str> = BTreeSet::new();
    for e in model.active_entities() {
        visible.extend(e.display_names.languages());
        visible.extend(e.plural_names.languages());
        for f in &e.fields {
            visible.extend(f.display_names.languages());
        }
        for c in &e.constraints {
            visible.extend(c.error_messages.languages());
        }
    }
    for lang in model.languages() {
        if !visible.contains(lang.as_str()) {
            out.push(Advisory {
                code: ADV_UNUSED_LANGUAGE,
                subject: format!("Language[{lang}]"),
                message: "declared only in inactive entities; no artifact uses it".into(),
            });
        }
    }
    out.sort();
    out
}
