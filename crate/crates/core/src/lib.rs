//! Model-driven generator for multi-tier application scaffolds.
//!
//! A domain model written in a small XML vocabulary is loaded and validated
//! ([`loader`]), then a template pack ([`packs`]) written in the artifact
//! template language ([`atl`]) renders SQL scripts, data-access classes,
//! web forms, client validation, documentation and an API description.
//! [`ownership`] decides which files may be rewritten so handwritten code
//! survives regeneration, and [`stats`] measures how much of an output tree
//! is generated.
//!
//! ```
//! use sfgen::{loader, packs};
//!
//! let doc = r#"<xsource><EntityConfig>
//!   <Entity name="Vest" tableName="Vest" isActive="true">
//!     <Field name="ID" type="int" isPK="true" isIdentity="true"/>
//!     <Field name="DisplayFrom" type="datetime"/>
//!     <Field name="DisplayTo" type="datetime"/>
//!     <Constraint type="TwoFields" relationship="le">
//!       <CField name="DisplayFrom"/><CField name="DisplayTo"/>
//!     </Constraint>
//!   </Entity>
//! </EntityConfig></xsource>"#;
//!
//! let report = loader::load_model(doc.as_bytes());
//! let model = report.valid_model().expect("model is valid");
//! let pack = packs::webstack();
//! let artifacts = packs::generate_all(model, &pack, &packs::GenConfig::default()).unwrap();
//! let sql = artifacts.iter().find(|a| a.path == "sql/002_constraints.sql").unwrap();
//! assert!(sql.text().contains("CHECK ([DisplayFrom] <= [DisplayTo])"));
//! ```

pub mod atl;
pub mod cli;
pub mod loader;
pub mod model;
pub mod ownership;
pub mod packs;
pub mod stats;

#[cfg(doctest)]
pub mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    pub mod model {}
    #[doc = include_str!("../../../book/src/templates.md")]
    pub mod templates {}
    #[doc = include_str!("../../../book/src/packs.md")]
    pub mod packs {}
    #[doc = include_str!("../../../book/src/ownership.md")]
    pub mod ownership {}
    #[doc = include_str!("../../../book/src/stats.md")]
    pub mod stats {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
