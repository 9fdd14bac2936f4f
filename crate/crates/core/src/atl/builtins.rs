//! Built-in functions callable from templates.

use crate::model::{sql_type_of, FieldType, Lexeme, RelationshipOp};

use super::value::Value;

pub const NAMES: &[&str] = &[
    "sql_operator",
    "compare_kind",
    "sql_type",
    "count",
    "lower",
    "upper",
    "coalesce",
    "localized",
    "html",
    "js",
    "json",
];

fn arity(name: &str, args: &[Value], n: usize) -> Result<(), String> {
    if args.len() == n {
        Ok(())
    } else {
        Err(format!(
            "{name}() takes {n} argument{}, got {}",
            if n == 1 { "" } else { "s" },
            args.len()
        ))
    }
}

fn type_token(name: &str, v: &Value) -> Result<Lexeme<FieldType>, String> {
    let token = match v {
        Value::Text(t) => t.as_str(),
        Value::Node(n) => match n.get("type") {
            Some(Value::Text(t)) => t.as_str(),
            _ => return Err(format!("{name}() expects a node with a 'type' attribute")),
        },
        other => {
            return Err(format!(
                "{name}() expects a field, column or type name, got {}",
                other.type_name()
            ))
        }
    };
    Ok(Lexeme::parse(token))
}

fn scalar_text(name: &str, v: &Value) -> Result<String, String> {
    match v {
        Value::Null | Value::Bool(_) | Value::Int(_) | Value::Text(_) => Ok(v.to_string()),
        other => Err(format!("{name}() expects text, got {}", other.type_name())),
    }
}

pub fn sql_operator(rel: RelationshipOp) -> &'static str {
    rel.sql_operator()
}

pub fn call(name: &str, args: &[Value]) -> Result<Value, String> {
    match name {
        "sql_operator" => {
            arity(name, args, 1)?;
            let token = args[0]
                .as_text()
                .ok_or_else(|| format!("sql_operator() expects a relationship token, got {}", args[0].type_name()))?;
            let rel: RelationshipOp = token
                .parse()
                .map_err(|_| format!("sql_operator(): unknown relationship '{token}'"))?;
            Ok(Value::text(sql_operator(rel)))
        }
        "compare_kind" => {
            arity(name, args, 1)?;
            let kind = match type_token(name, &args[0])?.get() {
                Some(t) => t.compare_family().as_str(),
                None => "strings",
            };
            Ok(Value::text(kind))
        }
        "sql_type" => {
            arity(name, args, 1)?;
            let ty = type_token(name, &args[0])?;
            let length = match &args[0] {
                Value::Node(n) => match n.get("length") {
                    Some(Value::Int(l)) if *l > 0 => u32::try_from(*l).ok(),
                    _ => None,
                },
                _ => None,
            };
            Ok(Value::Text(sql_type_of(&ty, length)))
        }
        "count" => {
            arity(name, args, 1)?;
            match &args[0] {
                Value::Seq(items) => Ok(Value::Int(items.len() as i64)),
                Value::Null => Ok(Value::Int(0)),
                Value::Text(t) => Ok(Value::Int(t.chars().count() as i64)),
                other => Err(format!("count() expects a sequence, got {}", other.type_name())),
            }
        }
        "lower" | "upper" => {
            arity(name, args, 1)?;
            match &args[0] {
                Value::Null => Ok(Value::Null),
                Value::Text(t) if name == "lower" => Ok(Value::text(t.to_lowercase())),
                Value::Text(t) => Ok(Value::text(t.to_uppercase())),
                other => Err(format!("{name}() expects text, got {}", other.type_name())),
            }
        }
        "coalesce" => {
            arity(name, args, 2)?;
            Ok(match &args[0] {
                Value::Null => args[1].clone(),
                v => v.clone(),
            })
        }
        "localized" => {
            arity(name, args, 3)?;
            let node = args[0]
                .as_node()
                .ok_or_else(|| format!("localized() expects a node, got {}", args[0].type_name()))?;
            let lang = match &args[1] {
                Value::Text(t) => Some(t.as_str()),
                Value::Null => None,
                other => return Err(format!("localized() expects a language name, got {}", other.type_name())),
            };
            let key = args[2]
                .as_text()
                .ok_or_else(|| "localized() expects a text key".to_string())?;
            let loc = node
                .localization
                .as_ref()
                .ok_or_else(|| format!("{} has no localized text", node.kind))?;
            let text = loc
                .texts
                .get(key)
                .ok_or_else(|| format!("{} has no localized '{key}'", node.kind))?;
            let resolved = text
                .resolve(lang, loc.default_language.as_deref())
                .or(if key == "DisplayName" { loc.attr_name.as_deref() } else { None })
                .map(str::to_string)
                .unwrap_or_else(|| loc.structural_name.clone());
            Ok(Value::Text(resolved))
        }
        "html" => {
            arity(name, args, 1)?;
            let s = scalar_text(name, &args[0])?;
            let mut out = String::with_capacity(s.len());
            for c in s.chars() {
                match c {
                    '&' => out.push_str("&amp;"),
                    '<' => out.push_str("&lt;"),
                    '>' => out.push_str("&gt;"),
                    '"' => out.push_str("&quot;"),
                    '\'' => out.push_str("&#39;"),
                    c => out.push(c),
                }
            }
            Ok(Value::Text(out))
        }
        "js" => {
            arity(name, args, 1)?;
            let s = scalar_text(name, &args[0])?;
            let mut out = String::with_capacity(s.len());
            let mut prev = '\0';
            for c in s.chars() {
                match c {
                    '\\' => out.push_str("\\\\"),
                    '\'' => out.push_str("\\'"),
                    '"' => out.push_str("\\\""),
                    '\n' => out.push_str("\\n"),
                    '\r' => out.push_str("\\r"),
                    '\u{2028}' => out.push_str("\\u2028"),
                    '\u{2029}' => out.push_str("\\u2029"),
                    '/' if prev == '<' => out.push_str("\\/"),
                    c => out.push(c),
                }
                prev = c;
            }
            Ok(Value::Text(out))
        }
        "json" => {
            arity(name, args, 1)?;
            let v = match &args[0] {
                Value::Null => serde_json::Value::Null,
                Value::Bool(b) => (*b).into(),
                Value::Int(n) => (*n).into(),
                Value::Text(t) => t.as_str().into(),
                other => return Err(format!("json() expects a scalar, got {}", other.type_name())),
            };
            Ok(Value::Text(v.to_string()))
        }
        _ => Err(format!("unknown function '{name}'")),
    }
}
