//! Minimal XML element tree on top of `quick-xml`, shared by the ontology,
//! snapshot and annotation formats.

use quick_xml::events::Event;
use quick_xml::{Reader, XmlVersion};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}, column {column}: {message}")]
pub struct XmlError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Element {
    pub name: String,
    pub attributes: Vec<(String, String)>,
    pub children: Vec<Element>,
    pub text: String,
    pub line: usize,
    pub column: usize,
}

impl Element {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attributes
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    pub fn children_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Element> + 'a {
        self.children.iter().filter(move |c| c.name == name)
    }

    pub fn child(&self, name: &str) -> Option<&Element> {
        self.children.iter().find(|c| c.name == name)
    }

    pub fn error(&self, message: impl Into<String>) -> XmlError {
        XmlError {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }

    pub fn required_attr(&self, name: &str) -> Result<&str, XmlError> {
        self.attr(name).ok_or_else(|| {
            self.error(format!("<{}> is missing attribute `{}`", self.name, name))
        })
    }

    pub fn f64_attr(&self, name: &str) -> Result<f64, XmlError> {
        let raw = self.required_attr(name)?;
        raw.trim()
            .parse::<f64>()
            .map_err(|_| self.error(format!("attribute `{name}` is not a number: {raw:?}")))
    }

    pub fn i64_attr(&self, name: &str) -> Result<i64, XmlError> {
        let raw = self.required_attr(name)?;
        raw.trim()
            .parse::<i64>()
            .map_err(|_| self.error(format!("attribute `{name}` is not an integer: {raw:?}")))
    }

    pub fn u64_attr(&self, name: &str) -> Result<u64, XmlError> {
        let raw = self.required_attr(name)?;
        raw.trim().parse::<u64>().map_err(|_| {
            self.error(format!("attribute `{name}` is not an unsigned integer: {raw:?}"))
        })
    }

    /// Trimmed text of a named child, e.g. `<xmin>10</xmin>`.
    pub fn child_text(&self, name: &str) -> Result<&str, XmlError> {
        self.child(name)
            .map(|c| c.text.trim())
            .ok_or_else(|| self.error(format!("<{}> is missing child <{}>", self.name, name)))
    }
}

fn position(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text.as_bytes()[..offset];
    let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
    let column = offset - before.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1) + 1;
    (line, column)
}

/// Parses a document and returns its root element.
pub fn parse(text: &str) -> Result<Element, XmlError> {
    let mut reader = Reader::from_str(text);
    let config = reader.config_mut();
    config.trim_text(false);
    config.check_end_names = true;

    let mut stack: Vec<Element> = Vec::new();
    let mut root: Option<Element> = None;

    let fail = |offset: u64, message: String| {
        let (line, column) = position(text, offset as usize);
        XmlError {
            line,
            column,
            message,
        }
    };

    loop {
        let start = reader.buffer_position();
        let event = reader
            .read_event()
            .map_err(|e| fail(reader.error_position(), e.to_string()))?;
        match event {
            Event::Start(e) | Event::Empty(e) if root.is_some() => {
                let _ = e;
                return Err(fail(start, "content after the root element".into()));
            }
            Event::Start(ref e) | Event::Empty(ref e) => {
                let (line, column) = position(text, start as usize);
                let name = e.name().as_ref().to_string();
                let mut attributes = Vec::new();
                for attr in e.attributes() {
                    let attr = attr.map_err(|err| fail(start, err.to_string()))?;
                    let key = attr.key.as_ref().to_string();
                    let value = attr
                        .normalized_value(XmlVersion::Implicit1_0)
                        .map_err(|err| fail(start, err.to_string()))?
                        .into_owned();
                    attributes.push((key, value));
                }
                let element = Element {
                    name,
                    attributes,
                    line,
                    column,
                    ..Element::default()
                };
                if matches!(event, Event::Start(_)) {
                    stack.push(element);
                } else {
                    attach(&mut stack, &mut root, element);
                }
            }
            Event::End(_) => {
                let element = stack
                    .pop()
                    .ok_or_else(|| fail(start, "unexpected closing tag".into()))?;
                attach(&mut stack, &mut root, element);
            }
            Event::Text(t) => {
                let content = t.xml10_content();
                match stack.last_mut() {
                    Some(top) => top.text.push_str(&content),
                    None if content.trim().is_empty() => {}
                    None => return Err(fail(start, "text outside the root element".into())),
                }
            }
            Event::GeneralRef(r) => {
                let name: &str = &r;
                let resolved = match name {
                    "amp" => '&',
                    "lt" => '<',
                    "gt" => '>',
                    "quot" => '"',
                    "apos" => '\'',
                    _ => name
                        .strip_prefix("#x")
                        .and_then(|h| u32::from_str_radix(h, 16).ok())
                        .or_else(|| name.strip_prefix('#').and_then(|d| d.parse().ok()))
                        .and_then(char::from_u32)
                        .ok_or_else(|| fail(start, format!("unknown entity &{name};")))?,
                };
                if let Some(top) = stack.last_mut() {
                    top.text.push(resolved);
                }
            }
            Event::CData(c) => {
                if let Some(top) = stack.last_mut() {
                    top.text.push_str(&c);
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }

    if let Some(open) = stack.last() {
        return Err(XmlError {
            line: open.line,
            column: open.column,
            message: format!("element <{}> is never closed", open.name),
        });
    }
    root.ok_or_else(|| fail(0, "document has no root element".into()))
}

fn attach(stack: &mut [Element], root: &mut Option<Element>, element: Element) {
    match stack.last_mut() {
        Some(parent) => parent.children.push(element),
        None => *root = Some(element),
    }
}

/// Indented XML writer producing canonical output (fixed attribute order as
/// given, two-space indentation, `\n` line endings).
#[derive(Debug, Default)]
pub struct XmlWriter {
    out: String,
    depth: usize,
}

impl XmlWriter {
    pub fn new() -> Self {
        let mut w = Self::default();
        w.out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        w
    }

    fn indent(&mut self) {
        for _ in 0..self.depth {
            self.out.push_str("  ");
        }
    }

    fn tag(&mut self, name: &str, attrs: &[(&str, String)]) {
        self.indent();
        self.out.push('<');
        self.out.push_str(name);
        for (k, v) in attrs {
            let _ = write!(self.out, " {}=\"{}\"", k, quick_xml::escape::escape(v.as_str()));
        }
    }

    pub fn open(&mut self, name: &str, attrs: &[(&str, String)]) {
        self.tag(name, attrs);
        self.out.push_str(">\n");
        self.depth += 1;
    }

    pub fn close(&mut self, name: &str) {
        self.depth -= 1;
        self.indent();
        let _ = writeln!(self.out, "</{name}>");
    }

    pub fn empty(&mut self, name: &str, attrs: &[(&str, String)]) {
        self.tag(name, attrs);
        self.out.push_str("/>\n");
    }

    pub fn text_element(&mut self, name: &str, text: &str) {
        self.indent();
        let _ = writeln!(
            self.out,
            "<{name}>{}</{name}>",
            quick_xml::escape::escape(text)
        );
    }

    pub fn finish(self) -> String {
        self.out
    }
}
