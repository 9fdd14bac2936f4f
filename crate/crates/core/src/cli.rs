//! The `sfgen` command line.
//!
//! Exit codes: 0 success, 1 model validation errors, 2 ownership conflicts,
//! 3 I/O failure, 4 template or pack errors, 5 usage errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::loader::{self, LoadReport};
use crate::model::ApplicationModel;
use crate::ownership::{self, WriteAction};
use crate::packs::{self, GenConfig, TemplatePack};
use crate::stats::{self, StatsReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_CONFLICT: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_TEMPLATE: i32 = 4;
pub const EXIT_USAGE: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "sfgen", version, about = "Generate multi-tier application scaffolds from a domain model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a model document and print its diagnostics.
    Validate {
        /// Model document.
        model: PathBuf,
    },
    /// Render a template pack for a model into an output directory.
    Generate {
        #[arg(long)]
        model: PathBuf,
        /// Pack directory. Defaults to the built-in webstack pack.
        #[arg(long)]
        pack: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// UI and message language. Defaults to the model's default language.
        #[arg(long)]
        lang: Option<String>,
        /// Print the write plan without touching the filesystem.
        #[arg(long)]
        dry_run: bool,
        /// Overwrite generated files that were edited by hand.
        #[arg(long)]
        force: bool,
    },
    /// Report generated versus handwritten files in an output directory.
    Stats {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print advisories about a model.
    Lint {
        #[arg(long)]
        model: PathBuf,
    },
}

struct Failure {
    code: i32,
    tag: &'static str,
    message: String,
}

impl Failure {
    fn new(code: i32, tag: &'static str, message: impl Into<String>) -> Self {
        Failure {
            code,
            tag,
            message: message.into(),
        }
    }
}

type Outcome = Result<i32, Failure>;

/// Runs the command line `args` (program name first) and returns the exit
/// code. Normal output goes to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    let outcome = match cli.command {
        Command::Validate { model } => validate(&model, out, err),
        Command::Generate {
            model,
            pack,
            out: root,
            lang,
            dry_run,
            force,
        } => generate(&model, pack.as_deref(), &root, lang, dry_run, force, out, err),
        Command::Stats { out: root, json } => stats_cmd(&root, json, out),
        Command::Lint { model } => lint(&model, out, err),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error[{}] {}", f.tag, f.message);
            f.code
        }
    }
}

fn load(path: &Path, err: &mut dyn Write) -> Result<LoadReport, Failure> {
    let bytes = std::fs::read(path)
        .map_err(|e| Failure::new(EXIT_IO, "E_IO", format!("{}: {e}", path.display())))?;
    let report = loader::load_model(&bytes);
    for d in &report.diagnostics {
        let _ = writeln!(err, "{}: {d}", path.display());
    }
    Ok(report)
}

fn summary(report: &LoadReport) -> String {
    let (e, w) = (report.error_count(), report.warning_count());
    format!(
        "{e} error{}, {w} warning{}",
        if e == 1 { "" } else { "s" },
        if w == 1 { "" } else { "s" }
    )
}

fn require_valid<'r>(path: &Path, report: &'r LoadReport) -> Result<&'r ApplicationModel, Failure> {
    report.valid_model().ok_or_else(|| {
        Failure::new(
            EXIT_INVALID,
            "E_INVALID_MODEL",
            format!("{}: {}", path.display(), summary(report)),
        )
    })
}

fn validate(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let report = load(path, err)?;
    let _ = writeln!(out, "{}: {}", path.display(), summary(&report));
    Ok(if report.has_errors() { EXIT_INVALID } else { EXIT_OK })
}

fn lint(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let report = load(path, err)?;
    let model = require_valid(path, &report)?;
    let advisories = stats::lint_model(model);
    for a in &advisories {
        let _ = writeln!(out, "{a}");
    }
    let _ = writeln!(out, "{} advisor{}", advisories.len(), if advisories.len() == 1 { "y" } else { "ies" });
    Ok(EXIT_OK)
}

fn load_pack(dir: Option<&Path>) -> Result<TemplatePack, Failure> {
    match dir {
        None => Ok(packs::webstack()),
        Some(dir) => packs::load_pack_dir(dir).map_err(|e| match e {
            packs::PackError::Io(m) => Failure::new(EXIT_IO, "E_IO", m),
            other => Failure::new(EXIT_TEMPLATE, "E_PACK", format!("{}: {other}", dir.display())),
        }),
    }
}

fn io_failure(e: ownership::OwnershipError) -> Failure {
    let tag = match e {
        ownership::OwnershipError::Manifest(_) => "E_MANIFEST",
        _ => "E_IO",
    };
    Failure::new(EXIT_IO, tag, e.to_string())
}

#[allow(clippy::too_many_arguments)]
fn generate(
    model_path: &Path,
    pack_dir: Option<&Path>,
    root: &Path,
    lang: Option<String>,
    dry_run: bool,
    force: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    let report = load(model_path, err)?;
    let model = require_valid(model_path, &report)?;
    if let Some(l) = &lang {
        if !model.languages().is_empty() && !model.languages().contains(l) {
            return Err(Failure::new(
                EXIT_USAGE,
                "E_USAGE",
                format!("--lang {l}: the model declares {}", model.languages().join(", ")),
            ));
        }
    }
    let pack = load_pack(pack_dir)?;
    let artifacts = packs::generate_all(model, &pack, &GenConfig { lang })
        .map_err(|e| Failure::new(EXIT_TEMPLATE, "E_TEMPLATE", e.to_string()))?;

    if root.exists() && !root.is_dir() {
        return Err(Failure::new(EXIT_IO, "E_IO", format!("{}: not a directory", root.display())));
    }
    let manifest = ownership::read_manifest(root).map_err(io_failure)?;
    let existing =
        ownership::read_existing(root, artifacts.iter().map(|a| a.path.as_str())).map_err(io_failure)?;
    let plan = ownership::plan_writes(&artifacts, &existing, manifest.as_ref(), force);

    let counts: Vec<String> = [
        WriteAction::Create,
        WriteAction::Overwrite,
        WriteAction::SkipUnchanged,
        WriteAction::SkipOnce,
        WriteAction::Conflict,
    ]
    .iter()
    .map(|a| format!("{} {}", plan.count(*a), a.as_str()))
    .collect();

    if dry_run {
        let _ = write!(out, "{plan}");
    }
    if plan.has_conflicts() {
        for c in plan.conflicts() {
            let _ = writeln!(
                err,
                "error[E_CONFLICT] {}: {}; edit the developer-owned file instead or rerun with --force",
                c.path, c.reason
            );
        }
        let _ = writeln!(out, "{}", counts.join(", "));
        return Ok(EXIT_CONFLICT);
    }
    if dry_run {
        let _ = writeln!(out, "dry run: {}", counts.join(", "));
        return Ok(EXIT_OK);
    }
    ownership::apply_plan(&plan, &artifacts, root, manifest.as_ref()).map_err(io_failure)?;
    for step in plan.actions.iter().filter(|s| s.action.writes()) {
        let _ = writeln!(out, "{:<14} {}", step.action.as_str(), step.path);
    }
    let _ = writeln!(out, "{}", counts.join(", "));
    Ok(EXIT_OK)
}

fn stats_cmd(root: &Path, json: bool, out: &mut dyn Write) -> Outcome {
    let manifest = ownership::read_manifest(root).map_err(io_failure)?.ok_or_else(|| {
        Failure::new(
            EXIT_IO,
            "E_NO_MANIFEST",
            format!("{}: no {} found; run generate first", root.display(), ownership::MANIFEST_FILE),
        )
    })?;
    let listing = ownership::read_tree(root).map_err(io_failure)?;
    let report = StatsReport::measure(&listing, &manifest);
    let _ = if json {
        write!(out, "{}", report.to_json())
    } else {
        write!(out, "{report}")
    };
    Ok(EXIT_OK)
}
