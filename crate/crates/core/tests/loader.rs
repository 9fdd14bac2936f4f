mod common;

use proptest::prelude::*;
use sfgen::loader::{load_model, DiagCode};
use sfgen::model::{Caching, ConstraintKind, FieldType, RelationshipOp};

#[test]
fn bundled_fixtures_are_valid() {
    for name in ["newsboard.xml", "fakultet.xml", "vest.xml"] {
        let report = load_model(common::fixture_text(name).as_bytes());
        assert!(report.diagnostics.is_empty(), "{name}: {:?}", report.diagnostics);
    }
}

#[test]
fn fakultet_binds_as_written() {
    let m = common::load_fixture("fakultet.xml");
    assert_eq!(m.languages(), ["Macedonian", "English"]);
    assert_eq!(m.default_language(), Some("Macedonian"));
    let e = &m.entities[0];
    assert_eq!((e.name.as_str(), e.table_name.as_str()), ("Fakultet", "Fakultet"));
    assert_eq!(e.caching, Caching::Enabled);
    assert!(e.is_audited && e.is_logged && e.is_active);
    assert_eq!(e.plural_names.get("English"), Some("Faculties"));

    let id = &e.fields[0];
    assert!(id.is_pk && id.is_identity && !id.nullable && !id.is_shown_in_list);
    assert_eq!(id.ty(), Some(FieldType::Int));
    assert_eq!(id.description.as_deref(), Some("Record ID"));
    let name = &e.fields[1];
    assert_eq!((name.ty(), name.length), (Some(FieldType::NVarChar), Some(30)));
    assert_eq!(name.display_names.get("Macedonian"), Some("Име"));

    let c = &e.constraints[0];
    assert_eq!(c.constraint_kind(), Some(ConstraintKind::Unique));
    assert_eq!(c.cfields, ["strName"]);
    assert_eq!(c.error_messages.get("English"), Some("Faculty name must be unique"));
}

#[test]
fn vest_constraint_binds() {
    let m = common::load_fixture("vest.xml");
    let c = &m.entities[0].constraints[0];
    assert_eq!(c.constraint_kind(), Some(ConstraintKind::TwoFields));
    assert_eq!(c.relationship_op(), Some(RelationshipOp::Le));
    assert_eq!(c.cfields, ["DisplayFrom", "DisplayTo"]);
}

#[test]
fn invalid_fixtures_report_code_and_location() {
    for (file, code, needle, nth) in common::INVALID_FIXTURES {
        common::check_invalid_fixture(file, code, needle, *nth).unwrap();
    }
}

#[test]
fn every_error_code_has_a_stable_name() {
    for code in DiagCode::ALL {
        let s = code.as_str();
        assert!(s.starts_with("E_") || s.starts_with("W_"), "{s}");
    }
}

#[test]
fn parse_errors_stop_before_binding() {
    let report = load_model(b"<xsource><EntityConfig></xsource>");
    assert!(report.model.is_none());
    assert_eq!(report.diagnostics.len(), 1);
    assert_eq!(report.diagnostics[0].code, DiagCode::Parse);
    assert!(report.diagnostics[0].location.is_some());
}

#[test]
fn diagnostics_are_sorted_by_location() {
    let doc = "<xsource><EntityConfig>\n\
               <Entity name='B' tableName='B' isActive='no'><Field name='ID' type='int' isPK='maybe'/></Entity>\n\
               <Entity name='1A' tableName='A'><Field name='ID' type='int' isPK='true'/><Field name='x' type='blob'/></Entity>\n\
               </EntityConfig></xsource>";
    let report = load_model(doc.as_bytes());
    let locs: Vec<_> = report
        .diagnostics
        .iter()
        .map(|d| d.location.map(|l| (l.line, l.column)))
        .collect();
    let mut sorted = locs.clone();
    sorted.sort_by_key(|l| l.unwrap_or((u32::MAX, u32::MAX)));
    assert_eq!(locs, sorted);
    assert!(report.error_count() >= 4, "{:?}", report.diagnostics);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_models_round_trip_through_xml(seed in any::<u64>()) {
        let model = common::random_model(&mut common::rng(seed), 6, 8);
        let xml = common::model_to_xml(&model);
        let report = load_model(xml.as_bytes());
        prop_assert!(report.diagnostics.is_empty(), "{:?}\n{}", report.diagnostics, xml);
        prop_assert_eq!(report.model.unwrap(), model);
    }

    #[test]
    fn loader_is_total(bytes in prop::collection::vec(any::<u8>(), 0..400)) {
        let _ = load_model(&bytes);
    }

    #[test]
    fn loader_is_total_on_near_miss_documents(
        seed in any::<u64>(), cut in 0usize..4000, junk in "[<>&'\"=/ a-z]{0,4}",
    ) {
        let xml = common::model_to_xml(&common::random_model(&mut common::rng(seed), 2, 4));
        let mut cut = cut.min(xml.len());
        while !xml.is_char_boundary(cut) {
            cut -= 1;
        }
        let mangled = format!("{}{junk}{}", &xml[..cut], &xml[cut..]);
        let report = load_model(mangled.as_bytes());
        if report.model.is_none() {
            prop_assert!(report.has_errors());
        }
    }
}
