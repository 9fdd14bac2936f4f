//! The artifact template language.
//!
//! Templates are literal text interleaved with `{{ expr }}` outputs,
//! `{% for x in seq %}…{% endfor %}` loops, `{% if %}…{% elif %}…{% else %}…{% endif %}`
//! conditionals and `{# comments #}`. A `-` just inside a delimiter
//! (`{%-`, `-%}`, `{{-`, `-}}`) strips the adjacent spaces and tabs plus at
//! most one newline on that side.
//!
//! Expressions are dotted paths, string and integer literals, `true`/`false`,
//! the comparisons `== != < <= > >=`, `and`/`or`/`not`, and calls to the
//! built-ins listed in [`builtins::NAMES`]. Inside a loop, `loop.index`
//! (1-based), `loop.first`, `loop.last` and `loop.length` are bound.
//!
//! Falsy values are `null`, `false`, `0`, empty text and empty sequences.
//! Attribute access on `null` yields `null`; ordering comparisons involving
//! `null` are false.

pub mod ast;
pub mod builtins;
pub mod context;
mod eval;
mod parse;
mod value;

use std::collections::BTreeMap;

pub use ast::{CmpOp, Expr, ExprKind, Node as AstNode, Pos, Template};
pub use builtins::sql_operator;
pub use eval::{eval_expr, render};
pub use parse::{parse_expr, parse_template};
pub use value::{Localization, Node, Value};

/// Alias for the parsed form of a template.
pub type TemplateAst = Template;

/// Variables visible to a template.
pub type Context = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{template}:{line}:{column}: syntax error: {reason}")]
pub struct TemplateSyntaxError {
    pub template: String,
    pub line: u32,
    pub column: u32,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{template}:{line}:{column}: {reason}")]
pub struct TemplateRuntimeError {
    pub template: String,
    pub line: u32,
    pub column: u32,
    pub reason: String,
}

/// `"dates"` for date and datetime fields, `"strings"` for everything else.
pub fn compare_kind(field: &crate::model::Field) -> &'static str {
    field
        .ty()
        .map_or("strings", |t| t.compare_family().as_str())
}

/// DDL type text of a column.
pub fn sql_type(column: &crate::model::ColumnSpec) -> String {
    column.sql_type()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        effective_columns, ApplicationModel, Entity, Field, FieldType, RelationshipOp, Settings,
    };

    fn fakultet() -> Entity {
        let mut e = Entity::new("Fakultet");
        e.is_logged = true;
        let mut id = Field::identity_pk("ID");
        id.is_shown_in_list = false;
        id.description = Some("Record ID".into());
        e.fields.push(id);
        e.fields.push(Field::sized("strName", FieldType::NVarChar, 30));
        e.display_names = crate::model::LocalizedText::new()
            .with("Macedonian", "Факултет")
            .with("English", "Faculty");
        e
    }

    fn ctx_for(e: Entity) -> Context {
        let model = ApplicationModel::new(Settings::default(), vec![e]);
        let mv = context::model_value(&model);
        let mut ctx = Context::new();
        ctx.insert("entity".into(), context::entity_of(&mv, 0).unwrap());
        ctx.insert("model".into(), mv);
        ctx
    }

    fn run(src: &str, ctx: &Context) -> Result<String, TemplateRuntimeError> {
        render(&parse_template(src, "t").unwrap(), ctx)
    }

    #[test]
    fn render_examples() {
        let ctx = ctx_for(fakultet());
        assert_eq!(run("Hello {{ entity.name }}", &ctx).unwrap(), "Hello Fakultet");
        assert_eq!(
            run(
                "{% for f in entity.fields %}{{ f.name }}{% if not loop.last %}, {% endif %}{% endfor %}",
                &ctx
            )
            .unwrap(),
            "ID, strName"
        );
        assert_eq!(run("", &ctx).unwrap(), "");
    }

    #[test]
    fn eval_examples() {
        let ctx = ctx_for(fakultet());
        let ev = |s: &str| eval_expr(&parse_expr(s).unwrap(), &ctx).unwrap();
        assert_eq!(ev("entity.isLogged"), Value::Bool(true));
        assert_eq!(ev("1 == 1"), Value::Bool(true));
        assert_eq!(ev("entity.fields"), ctx["entity"].as_node().unwrap().get("fields").unwrap().clone());
        assert_eq!(ev("entity.pk.length"), Value::Null);
        assert_eq!(ev("entity.pk.length.whatever"), Value::Null);
        assert_eq!(ev("entity.pk.description"), Value::text("Record ID"));
        assert_eq!(ev("'b' > 'a' and 2 >= 2"), Value::Bool(true));
        assert_eq!(ev("entity.pk.length < 3"), Value::Bool(false));
        assert_eq!(ev("entity.pk.length == entity.pk.fkName"), Value::Bool(true));
        assert_eq!(ev("1 == 'a'"), Value::Bool(false));
        assert_eq!(ev("count(entity.columns)"), Value::Int(4));
        assert_eq!(ev("localized(entity, 'English', 'DisplayName')"), Value::text("Faculty"));
        assert_eq!(ev("localized(entity, 'German', 'PluralName')"), Value::text("Fakultet"));
        assert_eq!(ev("sql_operator('le')"), Value::text("<="));
        assert_eq!(ev("upper(coalesce(entity.pk.fkName, 'x'))"), Value::text("X"));
    }

    #[test]
    fn short_circuit_skips_errors() {
        let ctx = ctx_for(fakultet());
        let ev = |s: &str| eval_expr(&parse_expr(s).unwrap(), &ctx);
        assert_eq!(ev("false and nope()"), Ok(Value::Bool(false)));
        assert_eq!(ev("true or nope()"), Ok(Value::Bool(true)));
        assert!(ev("true and nope()").is_err());
    }

    #[test]
    fn runtime_errors_are_located() {
        let ctx = ctx_for(fakultet());
        let cases = [
            ("x\n  {{ entity.name.first }}", (2, 18), "cannot access"),
            ("{{ nope(1) }}", (1, 4), "unknown function"),
            ("{{ 1 < 'a' }}", (1, 4), "cannot compare"),
            ("{{ missing }}", (1, 4), "undefined variable"),
            ("{{ entity.bogus }}", (1, 11), "no attribute"),
            ("{{ entity.fields }}", (1, 11), "cannot output"),
            ("{% for x in entity.name %}{% endfor %}", (1, 20), "cannot iterate"),
        ];
        for (src, (line, col), needle) in cases {
            let e = run(src, &ctx).unwrap_err();
            assert!(e.reason.contains(needle), "{src}: {}", e.reason);
            assert_eq!((e.line, e.column), (line, col), "{src}");
            assert_eq!(e.template, "t");
        }
    }

    #[test]
    fn truthiness_and_branches() {
        let ctx = ctx_for(fakultet());
        let src = "{% if entity.pk.length %}len{% elif 0 %}zero{% elif '' %}empty{% elif entity.constraints %}c{% else %}none{% endif %}";
        assert_eq!(run(src, &ctx).unwrap(), "none");
        assert_eq!(run("{% if entity.fields %}y{% endif %}", &ctx).unwrap(), "y");
        assert_eq!(run("{% for x in entity.pk.fkName %}x{% endfor %}", &ctx).unwrap(), "");
    }

    #[test]
    fn nested_loops_shadow_loop_meta() {
        let ctx = ctx_for(fakultet());
        let src = "{% for a in entity.fields %}{% for b in entity.fields %}{{ loop.index }}{% endfor %}/{{ loop.index }}{{ a.name }} {% endfor %}";
        assert_eq!(run(src, &ctx).unwrap(), "12/1ID 12/2strName ");
    }

    #[test]
    fn column_rendering_matches_helpers() {
        let e = fakultet();
        let ctx = ctx_for(e.clone());
        let out = run("{% for c in entity.columns %}{{ sql_type(c) }};{% endfor %}", &ctx).unwrap();
        let expected: String = effective_columns(&e)
            .iter()
            .map(|c| format!("{};", sql_type(c)))
            .collect();
        assert_eq!(out, expected);
        assert_eq!(compare_kind(&Field::new("d", FieldType::Date)), "dates");
        assert_eq!(sql_operator(RelationshipOp::Ge), ">=");
    }

    #[test]
    fn rendering_does_not_touch_context() {
        let ctx = ctx_for(fakultet());
        let before = ctx.clone();
        run("{% for f in entity.fields %}{{ f.name }}{% endfor %}", &ctx).unwrap();
        assert_eq!(ctx, before);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn separator_idiom_emits_n_minus_one(items in prop::collection::vec("[a-z]{1,5}", 0..20)) {
                let mut ctx = Context::new();
                ctx.insert("xs".into(), Value::seq(items.iter().map(|s| Value::text(s.as_str())).collect()));
                let out = run("{% for x in xs %}{{ x }}{% if not loop.last %},{% endif %}{% endfor %}", &ctx).unwrap();
                prop_assert_eq!(out.matches(',').count(), items.len().saturating_sub(1));
                prop_assert_eq!(out, items.join(","));
            }

            #[test]
            fn literal_text_is_preserved(s in "[^{}]{0,80}") {
                let t = parse_template(&s, "t").unwrap();
                prop_assert_eq!(render(&t, &Context::new()).unwrap(), s);
            }

            #[test]
            fn render_is_deterministic(n in 0usize..30) {
                let mut ctx = Context::new();
                ctx.insert("xs".into(), Value::seq((0..n as i64).map(Value::Int).collect()));
                let t = parse_template("{% for x in xs %}{{ loop.index }}:{{ x }}{% if loop.first %}F{% endif %}{% endfor %}", "t").unwrap();
                prop_assert_eq!(render(&t, &ctx).unwrap(), render(&t, &ctx).unwrap());
            }

            #[test]
            fn parser_never_panics(s in "[{}%#a-z '\"=<>!().,-]{0,60}") {
                let _ = parse_template(&s, "t");
            }
        }
    }
}
