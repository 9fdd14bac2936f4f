//! Reading model documents: XML subset parsing, binding and validation.

mod bind;
mod diagnostic;
mod validate;
pub mod xml;

pub use bind::{bind_model, SourceMap};
pub use diagnostic::{sort_diagnostics, Anchor, DiagCode, Diagnostic, Location, Severity};
pub use validate::{is_identifier, validate_model};
pub use xml::{parse_document, ParseError, XmlAttribute, XmlNode};

use crate::model::ApplicationModel;

/// Result of loading a model document end to end.
#[derive(Debug, Clone)]
pub struct LoadReport {
    /// `None` only when the document could not be parsed.
    pub model: Option<ApplicationModel>,
    /// Binding and validation findings with source locations, sorted.
    pub diagnostics: Vec<Diagnostic>,
}

impl LoadReport {
    pub fn error_count(&self) -> usize {
        self.diagnostics.iter().filter(|d| d.is_error()).count()
    }

    pub fn warning_count(&self) -> usize {
        self.diagnostics
            .iter()
            .filter(|d| d.severity == Severity::Warning)
            .count()
    }

    pub fn has_errors(&self) -> bool {
        self.error_count() > 0
    }

    /// The model, if it loaded without errors.
    pub fn valid_model(&self) -> Option<&ApplicationModel> {
        if self.has_errors() {
            None
        } else {
            self.model.as_ref()
        }
    }
}

/// Parses, binds and validates a document.
pub fn load_model(bytes: &[u8]) -> LoadReport {
    let root = match parse_document(bytes) {
        Ok(root) => root,
        Err(e) => {
            return LoadReport {
                model: None,
                diagnostics: vec![Diagnostic::new(DiagCode::Parse, "", e.reason.clone()).at(e.location())],
            }
        }
    };
    let (model, mut diagnostics, map) = bind::bind_with_map(&root);
    for mut d in validate_model(&model) {
        if let Some(anchor) = d.anchor {
            d.location = map.locate(anchor, d.attribute);
        }
        diagnostics.push(d);
    }
    sort_diagnostics(&mut diagnostics);
    LoadReport {
        model: Some(model),
        diagnostics,
    }
}
