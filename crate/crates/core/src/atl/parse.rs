//! Template and expression parser.

use super::ast::{CmpOp, Expr, ExprKind, Node, Pos, Template};
use super::value::Value;
use super::TemplateSyntaxError;

struct LineIndex<'a> {
    src: &'a str,
    starts: Vec<usize>,
}

impl<'a> LineIndex<'a> {
    fn new(src: &'a str) -> Self {
        let mut starts = vec![0];
        starts.extend(src.match_indices('\n').map(|(i, _)| i + 1));
        LineIndex { src, starts }
    }

    fn pos(&self, offset: usize) -> Pos {
        let line = self.starts.partition_point(|&s| s <= offset);
        let start = self.starts[line - 1];
        let column = self.src[start..offset.min(self.src.len())].chars().count() + 1;
        Pos {
            line: line as u32,
            column: column as u32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TagKind {
    Output,
    Block,
}

enum Seg {
    Text(String),
    Tag {
        kind: TagKind,
        start: usize,
        end: usize,
        at: usize,
    },
}

struct Ctx<'a> {
    name: &'a str,
    index: LineIndex<'a>,
}

impl Ctx<'_> {
    fn error<T>(&self, offset: usize, reason: impl Into<String>) -> Result<T, TemplateSyntaxError> {
        let p = self.index.pos(offset);
        Err(self.error_at(p, reason))
    }

    fn error_at(&self, p: Pos, reason: impl Into<String>) -> TemplateSyntaxError {
        TemplateSyntaxError {
            template: self.name.to_string(),
            line: p.line,
            column: p.column,
            reason: reason.into(),
        }
    }
}

fn trim_trailing(text: &mut String) {
    let kept = text.trim_end_matches([' ', '\t']).len();
    text.truncate(kept);
    if text.ends_with("\r\n") {
        text.truncate(text.len() - 2);
    } else if text.ends_with('\n') {
        text.truncate(text.len() - 1);
    }
}

fn trim_leading(text: &str) -> &str {
    let text = text.trim_start_matches([' ', '\t']);
    text.strip_prefix("\r\n")
        .or_else(|| text.strip_prefix('\n'))
        .unwrap_or(text)
}

fn segments(ctx: &Ctx, src: &str) -> Result<Vec<Seg>, TemplateSyntaxError> {
    let bytes = src.as_bytes();
    let len = bytes.len();
    let mut segs = Vec::new();
    let mut i = 0;
    let mut text_start = 0;
    let mut trim_next = false;

    let push_text = |segs: &mut Vec<Seg>, text: &str, trim: bool| {
        let text = if trim { trim_leading(text) } else { text };
        if !text.is_empty() {
            segs.push(Seg::Text(text.to_string()));
        }
    };

    while i < len {
        if bytes[i] != b'{' || i + 1 >= len || !matches!(bytes[i + 1], b'{' | b'%' | b'#') {
            i += 1;
            continue;
        }
        push_text(&mut segs, &src[text_start..i], trim_next);
        trim_next = false;
        let at = i;
        let open = bytes[i + 1];

        if open == b'#' {
            match src[i + 2..].find("#}") {
                Some(k) => {
                    i = i + 2 + k + 2;
                    text_start = i;
                    continue;
                }
                None => return ctx.error(at, "unterminated comment"),
            }
        }

        let mut j = i + 2;
        if bytes.get(j) == Some(&b'-') {
            j += 1;
            if let Some(Seg::Text(t)) = segs.last_mut() {
                trim_trailing(t);
                if t.is_empty() {
                    segs.pop();
                }
            }
        }
        let closer: &[u8] = if open == b'{' { b"}}" } else { b"%}" };
        let start = j;
        let mut quote: Option<u8> = None;
        loop {
            if j >= len {
                let what = if open == b'{' { "'}}'" } else { "'%}'" };
                return ctx.error(at, format!("unterminated tag: expected {what}"));
            }
            let c = bytes[j];
            match quote {
                Some(q) => {
                    if c == b'\\' {
                        j += 2;
                        continue;
                    }
                    if c == q {
                        quote = None;
                    }
                    j += 1;
                }
                None => {
                    if c == b'"' || c == b'\'' {
                        quote = Some(c);
                        j += 1;
                    } else if bytes[j..].starts_with(closer) {
                        break;
                    } else {
                        j += 1;
                    }
                }
            }
        }
        let mut end = j;
        if end > start && bytes[end - 1] == b'-' {
            end -= 1;
            trim_next = true;
        }
        let kind = if open == b'{' {
            TagKind::Output
        } else {
            TagKind::Block
        };
        segs.push(Seg::Tag {
            kind,
            start,
            end,
            at,
        });
        i = j + 2;
        text_start = i;
    }
    push_text(&mut segs, &src[text_start..], trim_next);
    Ok(segs)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Int(i64),
    Op(CmpOp),
    LParen,
    RParen,
    Comma,
    Dot,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Str(_) => "string literal".into(),
            Tok::Int(n) => format!("'{n}'"),
            Tok::Op(op) => format!("'{}'", op.as_str()),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Dot => "'.'".into(),
            Tok::End => "end of tag".into(),
        }
    }
}

fn lex(ctx: &Ctx, src: &str, base: usize, end: usize) -> Result<Vec<(Tok, usize)>, TemplateSyntaxError> {
    let s = &src[base..end];
    let mut out = Vec::new();
    let mut chars = s.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        let at = base + i;
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut ident = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if c.is_alphanumeric() || c == '_' {
                    ident.push(c);
                    chars.next();
                } else {
                    break;
                }
            }
            out.push((Tok::Ident(ident), at));
            continue;
        }
        if c.is_ascii_digit() {
            let mut digits = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if c.is_ascii_digit() {
                    digits.push(c);
                    chars.next();
                } else {
                    break;
                }
            }
            match digits.parse::<i64>() {
                Ok(n) => out.push((Tok::Int(n), at)),
                Err(_) => return ctx.error(at, format!("integer literal '{digits}' is too large")),
            }
            continue;
        }
        chars.next();
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            '"' | '\'' => {
                let mut text = String::new();
                loop {
                    match chars.next() {
                        None => return ctx.error(at, "unterminated string literal"),
                        Some((_, ch)) if ch == c => break,
                        Some((k, '\\')) => match chars.next() {
                            Some((_, 'n')) => text.push('\n'),
                            Some((_, 't')) => text.push('\t'),
                            Some((_, e @ ('\\' | '\'' | '"'))) => text.push(e),
                            _ => return ctx.error(base + k, "invalid escape sequence"),
                        },
                        Some((_, ch)) => text.push(ch),
                    }
                }
                Tok::Str(text)
            }
            '=' | '!' | '<' | '>' => {
                let eq = chars.next_if(|&(_, n)| n == '=').is_some();
                match (c, eq) {
                    ('=', true) => Tok::Op(CmpOp::Eq),
                    ('!', true) => Tok::Op(CmpOp::Ne),
                    ('<', false) => Tok::Op(CmpOp::Lt),
                    ('<', true) => Tok::Op(CmpOp::Le),
                    ('>', false) => Tok::Op(CmpOp::Gt),
                    ('>', true) => Tok::Op(CmpOp::Ge),
                    _ => return ctx.error(at, format!("unexpected character '{c}'")),
                }
            }
            other => return ctx.error(at, format!("unexpected character '{other}'")),
        };
        out.push((tok, at));
    }
    out.push((Tok::End, end));
    Ok(out)
}

struct ExprParser<'c, 'a> {
    ctx: &'c Ctx<'a>,
    toks: Vec<(Tok, usize)>,
    idx: usize,
}

const KEYWORDS: &[&str] = &["and", "or", "not", "true", "false", "in"];

impl ExprParser<'_, '_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.idx].0
    }

    fn offset(&self) -> usize {
        self.toks[self.idx].1
    }

    fn next(&mut self) -> (Tok, usize) {
        let t = self.toks[self.idx].clone();
        if self.idx + 1 < self.toks.len() {
            self.idx += 1;
        }
        t
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T, TemplateSyntaxError> {
        self.ctx.error(
            self.offset(),
            format!("expected {wanted}, found {}", self.peek().describe()),
        )
    }

    fn ident(&mut self, what: &str) -> Result<String, TemplateSyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.next();
                Ok(s)
            }
            _ => self.unexpected(what),
        }
    }

    fn expect_end(&self) -> Result<(), TemplateSyntaxError> {
        if *self.peek() == Tok::End {
            Ok(())
        } else {
            self.unexpected("end of tag")
        }
    }

    fn pos(&self, offset: usize) -> Pos {
        self.ctx.index.pos(offset)
    }

    fn expr(&mut self) -> Result<Expr, TemplateSyntaxError> {
        let mut left = self.and_expr()?;
        while self.is_keyword("or") {
            self.next();
            let right = self.and_expr()?;
            let pos = left.pos;
            left = Expr {
                kind: ExprKind::Or(Box::new(left), Box::new(right)),
                pos,
            };
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<Expr, TemplateSyntaxError> {
        let mut left = self.not_expr()?;
        while self.is_keyword("and") {
            self.next();
            let right = self.not_expr()?;
            let pos = left.pos;
            left = Expr {
                kind: ExprKind::And(Box::new(left), Box::new(right)),
                pos,
            };
        }
        Ok(left)
    }

    fn not_expr(&mut self) -> Result<Expr, TemplateSyntaxError> {
        if self.is_keyword("not") {
            let (_, at) = self.next();
            let inner = self.not_expr()?;
            return Ok(Expr {
                kind: ExprKind::Not(Box::new(inner)),
                pos: self.pos(at),
            });
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, TemplateSyntaxError> {
        let left = self.postfix()?;
        if let Tok::Op(op) = *self.peek() {
            self.next();
            let right = self.postfix()?;
            if let Tok::Op(_) = self.peek() {
                return self
                    .ctx
                    .error(self.offset(), "comparisons cannot be chained; use 'and'");
            }
            let pos = left.pos;
            return Ok(Expr {
                kind: ExprKind::Compare(op, Box::new(left), Box::new(right)),
                pos,
            });
        }
        Ok(left)
    }

    fn postfix(&mut self) -> Result<Expr, TemplateSyntaxError> {
        let mut e = self.primary()?;
        while *self.peek() == Tok::Dot {
            self.next();
            let at = self.offset();
            let name = self.ident("attribute name after '.'")?;
            e = Expr {
                kind: ExprKind::Attr(Box::new(e), name),
                pos: self.pos(at),
            };
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, TemplateSyntaxError> {
        let at = self.offset();
        let pos = self.pos(at);
        let kind = match self.peek().clone() {
            Tok::Str(s) => {
                self.next();
                ExprKind::Literal(Value::Text(s))
            }
            Tok::Int(n) => {
                self.next();
                ExprKind::Literal(Value::Int(n))
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.next();
                ExprKind::Literal(Value::Bool(s == "true"))
            }
            Tok::LParen => {
                self.next();
                let inner = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return self.unexpected("')'");
                }
                self.next();
                return Ok(inner);
            }
            Tok::Ident(_) => {
                let name = self.ident("expression")?;
                if *self.peek() == Tok::LParen {
                    self.next();
                    let mut args = Vec::new();
                    if *self.peek() != Tok::RParen {
                        loop {
                            args.push(self.expr()?);
                            match self.peek() {
                                Tok::Comma => {
                                    self.next();
                                }
                                Tok::RParen => break,
                                _ => return self.unexpected("',' or ')'"),
                            }
                        }
                    }
                    self.next();
                    ExprKind::Call(name, args)
                } else {
                    ExprKind::Var(name)
                }
            }
            _ => return self.unexpected("expression"),
        };
        Ok(Expr { kind, pos })
    }
}

enum Frame {
    For {
        var: String,
        iter: Expr,
        body: Vec<Node>,
        pos: Pos,
    },
    If {
        branches: Vec<(Expr, Vec<Node>)>,
        else_body: Option<Vec<Node>>,
        pos: Pos,
    },
}

impl Frame {
    fn body(&mut self) -> &mut Vec<Node> {
        match self {
            Frame::For { body, .. } => body,
            Frame::If {
                else_body: Some(b), ..
            } => b,
            Frame::If { branches, .. } => {
                &mut branches
                    .last_mut()
                    .expect("if frame always has a branch")
                    .1
            }
        }
    }

    fn opener(&self) -> &'static str {
        match self {
            Frame::For { .. } => "for",
            Frame::If { .. } => "if",
        }
    }
}

/// Parses template source. `name` is used in error messages.
pub fn parse_template(source: &str, name: &str) -> Result<Template, TemplateSyntaxError> {
    let ctx = Ctx {
        name,
        index: LineIndex::new(source),
    };
    let mut root: Vec<Node> = Vec::new();
    let mut stack: Vec<Frame> = Vec::new();

    fn target<'v>(root: &'v mut Vec<Node>, stack: &'v mut [Frame]) -> &'v mut Vec<Node> {
        match stack.last_mut() {
            Some(f) => f.body(),
            None => root,
        }
    }

    for seg in segments(&ctx, source)? {
        match seg {
            Seg::Text(t) => target(&mut root, &mut stack).push(Node::Text(t)),
            Seg::Tag {
                kind: TagKind::Output,
                start,
                end,
                at,
            } => {
                let mut p = ExprParser {
                    ctx: &ctx,
                    toks: lex(&ctx, source, start, end)?,
                    idx: 0,
                };
                if *p.peek() == Tok::End {
                    return ctx.error(at, "empty output tag");
                }
                let e = p.expr()?;
                p.expect_end()?;
                target(&mut root, &mut stack).push(Node::Output(e));
            }
            Seg::Tag {
                kind: TagKind::Block,
                start,
                end,
                at,
            } => {
                let pos = ctx.index.pos(at);
                let mut p = ExprParser {
                    ctx: &ctx,
                    toks: lex(&ctx, source, start, end)?,
                    idx: 0,
                };
                let keyword = match p.peek().clone() {
                    Tok::Ident(k) => {
                        p.next();
                        k
                    }
                    Tok::End => return ctx.error(at, "empty block tag"),
                    other => {
                        return ctx.error(at, format!("expected directive, found {}", other.describe()))
                    }
                };
                match keyword.as_str() {
                    "for" => {
                        let var = p.ident("loop variable name")?;
                        if var == "loop" {
                            return ctx.error(at, "'loop' is reserved and cannot be a loop variable");
                        }
                        if !p.is_keyword("in") {
                            return p.unexpected("'in'");
                        }
                        p.next();
                        let iter = p.expr()?;
                        p.expect_end()?;
                        stack.push(Frame::For {
                            var,
                            iter,
                            body: Vec::new(),
                            pos,
                        });
                    }
                    "if" => {
                        let cond = p.expr()?;
                        p.expect_end()?;
                        stack.push(Frame::If {
                            branches: vec![(cond, Vec::new())],
                            else_body: None,
                            pos,
                        });
                    }
                    "elif" => {
                        let cond = p.expr()?;
                        p.expect_end()?;
                        match stack.last_mut() {
                            Some(Frame::If {
                                branches,
                                else_body: None,
                                ..
                            }) => branches.push((cond, Vec::new())),
                            Some(Frame::If { .. }) => {
                                return ctx.error(at, "{% elif %} after {% else %}")
                            }
                            _ => return ctx.error(at, "{% elif %} outside of {% if %}"),
                        }
                    }
                    "else" => {
                        p.expect_end()?;
                        match stack.last_mut() {
                            Some(Frame::If { else_body, .. }) if else_body.is_none() => {
                                *else_body = Some(Vec::new())
                            }
                            Some(Frame::If { .. }) => return ctx.error(at, "duplicate {% else %}"),
                            _ => return ctx.error(at, "{% else %} outside of {% if %}"),
                        }
                    }
                    "endfor" | "endif" => {
                        p.expect_end()?;
                        let wanted = &keyword[3..];
                        let frame = match stack.pop() {
                            Some(f) if f.opener() == wanted => f,
                            Some(f) => {
                                return ctx.error(
                                    at,
                                    format!(
                                        "mismatched {{% {keyword} %}}: expected {{% end{} %}}",
                                        f.opener()
                                    ),
                                )
                            }
                            None => {
                                return ctx.error(at, format!("{{% {keyword} %}} without opening block"))
                            }
                        };
                        let node = match frame {
                            Frame::For {
                                var,
                                iter,
                                body,
                                pos,
                            } => Node::For {
                                var,
                                iter,
                                body,
                                pos,
                            },
                            Frame::If {
                                branches,
                                else_body,
                                pos,
                            } => Node::If {
                                branches,
                                else_body,
                                pos,
                            },
                        };
                        target(&mut root, &mut stack).push(node);
                    }
                    other => return ctx.error(at, format!("unknown directive '{other}'")),
                }
            }
        }
    }

    if let Some(frame) = stack.last() {
        let pos = match frame {
            Frame::For { pos, .. } | Frame::If { pos, .. } => *pos,
        };
        return Err(ctx.error_at(
            pos,
            format!("unclosed {{% {} %}} block", frame.opener()),
        ));
    }
    Ok(Template {
        name: name.to_string(),
        nodes: merge_text(root),
    })
}

/// Joins adjacent text nodes left behind by comments.
fn merge_text(nodes: Vec<Node>) -> Vec<Node> {
    let mut out: Vec<Node> = Vec::with_capacity(nodes.len());
    for n in nodes {
        let n = match n {
            Node::For {
                var,
                iter,
                body,
                pos,
            } => Node::For {
                var,
                iter,
                body: merge_text(body),
                pos,
            },
            Node::If {
                branches,
                else_body,
                pos,
            } => Node::If {
                branches: branches
                    .into_iter()
                    .map(|(c, b)| (c, merge_text(b)))
                    .collect(),
                else_body: else_body.map(merge_text),
                pos,
            },
            other => other,
        };
        match (out.last_mut(), n) {
            (Some(Node::Text(prev)), Node::Text(t)) => prev.push_str(&t),
            (_, n) => out.push(n),
        }
    }
    out
}

/// Parses a standalone expression.
pub fn parse_expr(source: &str) -> Result<Expr, TemplateSyntaxError> {
    let ctx = Ctx {
        name: "<expr>",
        index: LineIndex::new(source),
    };
    let mut p = ExprParser {
        ctx: &ctx,
        toks: lex(&ctx, source, 0, source.len())?,
        idx: 0,
    };
    let e = p.expr()?;
    p.expect_end()?;
    Ok(e)
}
