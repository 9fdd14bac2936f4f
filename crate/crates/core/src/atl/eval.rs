use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::ast::{CmpOp, Expr, ExprKind, Node, Pos, Template};
use super::builtins;
use super::value::{Node as ValueNode, Value};
use super::TemplateRuntimeError;

struct Scope<'a> {
    template: &'a str,
    globals: &'a BTreeMap<String, Value>,
    locals: Vec<(String, Value)>,
}

impl Scope<'_> {
    fn error(&self, pos: Pos, reason: impl Into<String>) -> TemplateRuntimeError {
        TemplateRuntimeError {
            template: self.template.to_string(),
            line: pos.line,
            column: pos.column,
            reason: reason.into(),
        }
    }

    fn lookup(&self, name: &str) -> Option<&Value> {
        self.locals
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v)
            .or_else(|| self.globals.get(name))
    }

    fn eval(&self, expr: &Expr) -> Result<Value, TemplateRuntimeError> {
        match &expr.kind {
            ExprKind::Literal(v) => Ok(v.clone()),
            ExprKind::Var(name) => self
                .lookup(name)
                .cloned()
                .ok_or_else(|| self.error(expr.pos, format!("undefined variable '{name}'"))),
            ExprKind::Attr(base, attr) => match self.eval(base)? {
                Value::Null => Ok(Value::Null),
                Value::Node(n) => n.get(attr).cloned().ok_or_else(|| {
                    self.error(expr.pos, format!("{} has no attribute '{attr}'", n.kind))
                }),
                other => Err(self.error(
                    expr.pos,
                    format!("cannot access '{attr}' on a {} value", other.type_name()),
                )),
            },
            ExprKind::Call(name, args) => {
                let values = args
                    .iter()
                    .map(|a| self.eval(a))
                    .collect::<Result<Vec<_>, _>>()?;
                builtins::call(name, &values).map_err(|reason| self.error(expr.pos, reason))
            }
            ExprKind::Not(inner) => Ok(Value::Bool(!self.eval(inner)?.is_truthy())),
            ExprKind::And(l, r) => {
                let left = self.eval(l)?;
                if !left.is_truthy() {
                    return Ok(Value::Bool(false));
                }
                Ok(Value::Bool(self.eval(r)?.is_truthy()))
            }
            ExprKind::Or(l, r) => {
                let left = self.eval(l)?;
                if left.is_truthy() {
                    return Ok(Value::Bool(true));
                }
                Ok(Value::Bool(self.eval(r)?.is_truthy()))
            }
            ExprKind::Compare(op, l, r) => {
                let left = self.eval(l)?;
                let right = self.eval(r)?;
                compare(*op, &left, &right)
                    .map(Value::Bool)
                    .map_err(|reason| self.error(expr.pos, reason))
            }
        }
    }

    fn render(&mut self, nodes: &[Node], out: &mut String) -> Result<(), TemplateRuntimeError> {
        for node in nodes {
            match node {
                Node::Text(t) => out.push_str(t),
                Node::Output(e) => match self.eval(e)? {
                    v @ (Value::Null | Value::Bool(_) | Value::Int(_) | Value::Text(_)) => {
                        out.push_str(&v.to_string())
                    }
                    other => {
                        return Err(self.error(
                            e.pos,
                            format!("cannot output a {} value", other.type_name()),
                        ))
                    }
                },
                Node::If {
                    branches,
                    else_body,
                    ..
                } => {
                    let mut taken = false;
                    for (cond, body) in branches {
                        if self.eval(cond)?.is_truthy() {
                            self.render(body, out)?;
                            taken = true;
                            break;
                        }
                    }
                    if !taken {
                        if let Some(body) = else_body {
                            self.render(body, out)?;
                        }
                    }
                }
                Node::For {
                    var, iter, body, ..
                } => {
                    let items = match self.eval(iter)? {
                        Value::Seq(items) => items,
                        Value::Null => continue,
                        other => {
                            return Err(self.error(
                                iter.pos,
                                format!("cannot iterate over a {} value", other.type_name()),
                            ))
                        }
                    };
                    let length = items.len() as i64;
                    for (i, item) in items.iter().enumerate() {
                        let index = i as i64 + 1;
                        let meta = ValueNode::new("loop")
                            .with("index", index)
                            .with("first", index == 1)
                            .with("last", index == length)
                            .with("length", length);
                        self.locals.push((var.clone(), item.clone()));
                        self.locals.push(("loop".to_string(), meta.into()));
                        let result = self.render(body, out);
                        self.locals.truncate(self.locals.len() - 2);
                        result?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Applies a comparison operator. `Err` carries the reason for a type
/// mismatch in an ordering comparison.
pub(crate) fn compare(op: CmpOp, left: &Value, right: &Value) -> Result<bool, String> {
    match op {
        CmpOp::Eq => return Ok(left == right),
        CmpOp::Ne => return Ok(left != right),
        _ => {}
    }
    let ord: Ordering = match (left, right) {
        (Value::Null, _) | (_, Value::Null) => return Ok(false),
        (Value::Int(a), Value::Int(b)) => a.cmp(b),
        (Value::Text(a), Value::Text(b)) => a.cmp(b),
        (a, b) => {
            return Err(format!(
                "cannot compare {} with {} using '{}'",
                a.type_name(),
                b.type_name(),
                op.as_str()
            ))
        }
    };
    Ok(match op {
        CmpOp::Lt => ord.is_lt(),
        CmpOp::Le => ord.is_le(),
        CmpOp::Gt => ord.is_gt(),
        CmpOp::Ge => ord.is_ge(),
        CmpOp::Eq | CmpOp::Ne => unreachable!(),
    })
}

/// Renders a template against a context of named values.
pub fn render(
    template: &Template,
    context: &BTreeMap<String, Value>,
) -> Result<String, TemplateRuntimeError> {
    let mut scope = Scope {
        template: &template.name,
        globals: context,
        locals: Vec::new(),
    };
    let mut out = String::new();
    scope.render(&template.nodes, &mut out)?;
    Ok(out)
}

/// Evaluates a single expression against an environment.
pub fn eval_expr(expr: &Expr, env: &BTreeMap<String, Value>) -> Result<Value, TemplateRuntimeError> {
    let scope = Scope {
        template: "<expr>",
        globals: env,
        locals: Vec::new(),
    };
    scope.eval(expr)
}
