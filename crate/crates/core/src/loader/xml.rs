//! Parser for the XML subset the model documents are written in.
//!
//! Accepted: an optional XML declaration, elements with single- or
//! double-quoted attributes, character data, comments, and the five
//! predefined entities. Rejected: DOCTYPE, CDATA sections, processing
//! instructions, character references and namespace prefixes.

use super::diagnostic::Location;

const MAX_DEPTH: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XmlAttribute {
    pub name: String,
    pub value: String,
    pub location: Location,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XmlNode {
    pub tag: String,
    /// Attributes in document order; names are unique.
    pub attributes: Vec<XmlAttribute>,
    pub children: Vec<XmlNode>,
    /// Concatenated character data of this element (not of descendants).
    pub text: String,
    pub location: Location,
}

impl XmlNode {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attribute(name).map(|a| a.value.as_str())
    }

    pub fn attribute(&self, name: &str) -> Option<&XmlAttribute> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn children_named<'a>(&'a self, tag: &'a str) -> impl Iterator<Item = &'a XmlNode> + 'a {
        self.children.iter().filter(move |c| c.tag == tag)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {reason}")]
pub struct ParseError {
    pub line: u32,
    pub column: u32,
    pub reason: String,
}

impl ParseError {
    pub fn location(&self) -> Location {
        Location::new(self.line, self.column)
    }
}

/// Parses a UTF-8 document and returns its root element.
pub fn parse_document(bytes: &[u8]) -> Result<XmlNode, ParseError> {
    let src = match std::str::from_utf8(bytes) {
        Ok(s) => s,
        Err(e) => {
            let valid = std::str::from_utf8(&bytes[..e.valid_up_to()]).unwrap_or_default();
            let loc = location_after(valid);
            return Err(ParseError {
                line: loc.line,
                column: loc.column,
                reason: "input is not valid UTF-8".into(),
            });
        }
    };
    let src = src.strip_prefix('\u{feff}').unwrap_or(src);
    Parser::new(src).document()
}

fn location_after(text: &str) -> Location {
    let mut loc = Location::new(1, 1);
    for c in text.chars() {
        if c == '\n' {
            loc.line += 1;
            loc.column = 1;
        } else {
            loc.column += 1;
        }
    }
    loc
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    column: u32,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src,
            pos: 0,
            line: 1,
            column: 1,
        }
    }

    fn here(&self) -> Location {
        Location::new(self.line, self.column)
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        self.rest().starts_with(s)
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.starts_with(s) {
            for _ in s.chars() {
                self.bump();
            }
            true
        } else {
            false
        }
    }

    fn err<T>(&self, at: Location, reason: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            line: at.line,
            column: at.column,
            reason: reason.into(),
        })
    }

    fn skip_ws(&mut self) -> bool {
        let start = self.pos;
        while matches!(self.peek(), Some(' ' | '\t' | '\r' | '\n')) {
            self.bump();
        }
        self.pos > start
    }

    fn document(mut self) -> Result<XmlNode, ParseError> {
        if self.starts_with("<?xml") {
            let rest = &self.rest()[5..];
            if rest.starts_with(|c: char| c.is_whitespace() || c == '?') {
                self.xml_declaration()?;
            }
        }
        self.misc()?;
        if self.peek().is_none() {
            return self.err(self.here(), "document has no root element");
        }
        if self.peek() != Some('<') {
            return self.err(self.here(), "character data outside the root element");
        }
        let root = self.element(0)?;
        self.misc()?;
        if self.peek().is_some() {
            return self.err(self.here(), "content after the root element");
        }
        Ok(root)
    }

    fn xml_declaration(&mut self) -> Result<(), ParseError> {
        let start = self.here();
        self.eat("<?xml");
        while !self.starts_with("?>") {
            if self.bump().is_none() {
                return self.err(start, "unterminated XML declaration");
            }
        }
        self.eat("?>");
        Ok(())
    }

    /// Whitespace and comments around the root element.
    fn misc(&mut self) -> Result<(), ParseError> {
        loop {
            self.skip_ws();
            if self.starts_with("<!--") {
                self.comment()?;
            } else if self.starts_with("<?") {
                return self.err(self.here(), "processing instructions are not supported");
            } else if self.starts_with("<!") {
                return self.err(self.here(), self.bang_reason());
            } else {
                return Ok(());
            }
        }
    }

    fn bang_reason(&self) -> &'static str {
        if self.starts_with("<!DOCTYPE") {
            "DOCTYPE declarations are not supported"
        } else if self.starts_with("<![CDATA[") {
            "CDATA sections are not supported"
        } else {
            "unsupported markup declaration"
        }
    }

    fn comment(&mut self) -> Result<(), ParseError> {
        let start = self.here();
        self.eat("<!--");
        while !self.starts_with("-->") {
            if self.bump().is_none() {
                return self.err(start, "unterminated comment");
            }
        }
        self.eat("-->");
        Ok(())
    }

    fn name(&mut self, what: &str) -> Result<String, ParseError> {
        let start = self.here();
        let begin = self.pos;
        match self.peek() {
            Some(c) if c.is_alphabetic() || c == '_' => {
                self.bump();
            }
            _ => return self.err(start, format!("expected {what} name")),
        }
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | ':') {
                self.bump();
            } else {
                break;
            }
        }
        let name = &self.src[begin..self.pos];
        if name.contains(':') {
            return self.err(start, format!("namespace prefixes are not supported: '{name}'"));
        }
        Ok(name.to_string())
    }

    fn element(&mut self, depth: usize) -> Result<XmlNode, ParseError> {
        let location = self.here();
        if depth >= MAX_DEPTH {
            return self.err(location, "elements nested too deeply");
        }
        self.eat("<");
        let tag = self.name("element")?;
        let mut node = XmlNode {
            tag,
            attributes: Vec::new(),
            children: Vec::new(),
            text: String::new(),
            location,
        };

        loop {
            let had_ws = self.skip_ws();
            if self.eat("/>") {
                return Ok(node);
            }
            if self.eat(">") {
                break;
            }
            if self.peek().is_none() {
                return self.err(location, format!("unclosed element '{}'", node.tag));
            }
            if !had_ws {
                return self.err(self.here(), "expected whitespace before attribute");
            }
            let attr = self.attribute()?;
            if attr.name == "xmlns" || attr.name.starts_with("xmlns") {
                return self.err(attr.location, "namespace declarations are not supported");
            }
            if node.attribute(&attr.name).is_some() {
                return self.err(attr.location, format!("duplicate attribute '{}'", attr.name));
            }
            node.attributes.push(attr);
        }

        loop {
            match self.peek() {
                None => return self.err(location, format!("unclosed element '{}'", node.tag)),
                Some('<') => {
                    if self.starts_with("</") {
                        let close_at = self.here();
                        self.eat("</");
                        let name = self.name("element")?;
                        self.skip_ws();
                        if !self.eat(">") {
                            return self.err(self.here(), "expected '>' in end tag");
                        }
                        if name != node.tag {
                            return self.err(
                                close_at,
                                format!(
                                    "mismatched end tag: expected '</{}>', found '</{}>'",
                                    node.tag, name
                                ),
                            );
                        }
                        return Ok(node);
                    } else if self.starts_with("<!--") {
                        self.comment()?;
                    } else if self.starts_with("<?") {
                        return self.err(self.here(), "processing instructions are not supported");
                    } else if self.starts_with("<!") {
                        return self.err(self.here(), self.bang_reason());
                    } else {
                        let child = self.element(depth + 1)?;
                        node.children.push(child);
                    }
                }
                Some('&') => {
                    let c = self.entity()?;
                    node.text.push(c);
                }
                Some(_) => {
                    let c = self.bump().unwrap_or_default();
                    node.text.push(c);
                }
            }
        }
    }

    fn attribute(&mut self) -> Result<XmlAttribute, ParseError> {
        let location = self.here();
        let name = self.name("attribute")?;
        self.skip_ws();
        if !self.eat("=") {
            return self.err(self.here(), format!("expected '=' after attribute '{name}'"));
        }
        self.skip_ws();
        let quote = match self.peek() {
            Some(q @ ('"' | '\'')) => q,
            _ => return self.err(self.here(), "expected quoted attribute value"),
        };
        self.bump();
        let mut value = String::new();
        loop {
            match self.peek() {
                None => return self.err(location, format!("unterminated value for '{name}'")),
                Some(c) if c == quote => {
                    self.bump();
                    break;
                }
                Some('<') => return self.err(self.here(), "'<' is not allowed in attribute values"),
                Some('&') => value.push(self.entity()?),
                Some(_) => value.push(self.bump().unwrap_or_default()),
            }
        }
        Ok(XmlAttribute {
            name,
            value,
            location,
        })
    }

    fn entity(&mut self) -> Result<char, ParseError> {
        let start = self.here();
        let body: String = self.rest()[1..]
            .chars()
            .take_while(|&c| c != ';' && c != '<' && c != '&' && !c.is_whitespace())
            .take(16)
            .collect();
        if !self.rest()[1 + body.len()..].starts_with(';') {
            return self.err(start, "unterminated entity reference");
        }
        let c = match body.as_str() {
            "lt" => '<',
            "gt" => '>',
            "amp" => '&',
            "quot" => '"',
            "apos" => '\'',
            b if b.starts_with('#') => {
                return self.err(start, "character references are not supported")
            }
            other => return self.err(start, format!("undefined entity '&{other};'")),
        };
        self.eat("&");
        self.eat(&body);
        self.eat(";");
        Ok(c)
    }
}
