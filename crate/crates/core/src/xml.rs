//! Small helpers shared by the XML readers and writers.

use std::fmt::Write as _;

use roxmltree::{Document, Node};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum XmlError {
    /// The document is not well-formed XML.
    #[error("line {line}: {message}")]
    Syntax { line: u32, message: String },
    /// Well-formed XML that does not follow the expected element layout.
    #[error("line {line}: {message}")]
    Malformed { line: u32, message: String },
}

impl XmlError {
    pub fn line(&self) -> u32 {
        match self {
            XmlError::Syntax { line, .. } | XmlError::Malformed { line, .. } => *line,
        }
    }
}

pub(crate) fn parse(source: &str) -> Result<Document<'_>, XmlError> {
    Document::parse(source).map_err(|e| XmlError::Syntax {
        line: e.pos().row,
        message: e.to_string(),
    })
}

pub(crate) fn line(node: Node<'_, '_>) -> u32 {
    node.document().text_pos_at(node.range().start).row
}

pub(crate) fn malformed(node: Node<'_, '_>, message: impl Into<String>) -> XmlError {
    XmlError::Malformed {
        line: line(node),
        message: message.into(),
    }
}

pub(crate) fn expect_tag(node: Node<'_, '_>, tag: &str) -> Result<(), XmlError> {
    if node.tag_name().name() == tag {
        Ok(())
    } else {
        Err(malformed(
            node,
            format!("expected <{tag}>, found <{}>", node.tag_name().name()),
        ))
    }
}

pub(crate) fn attr<'a>(node: Node<'a, '_>, name: &str) -> Result<&'a str, XmlError> {
    node.attribute(name).ok_or_else(|| {
        malformed(
            node,
            format!("<{}> is missing attribute `{name}`", node.tag_name().name()),
        )
    })
}

/// Child elements of `node`. Comments and whitespace are skipped; any other
/// text content is an error.
pub(crate) fn elements<'a, 'i>(node: Node<'a, 'i>) -> Result<Vec<Node<'a, 'i>>, XmlError> {
    let mut out = Vec::new();
    for child in node.children() {
        if child.is_element() {
            out.push(child);
        } else if child.is_text() && !child.text().unwrap_or("").trim().is_empty() {
            return Err(malformed(
                child,
                format!("unexpected text inside <{}>", node.tag_name().name()),
            ));
        }
    }
    Ok(out)
}

pub(crate) fn unexpected(node: Node<'_, '_>, parent: &str) -> XmlError {
    malformed(
        node,
        format!(
            "unexpected element <{}> in <{parent}>",
            node.tag_name().name()
        ),
    )
}

pub(crate) fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            c => out.push(c),
        }
    }
    out
}

/// Indenting writer producing LF-terminated lines with two-space indents.
#[derive(Debug, Default)]
pub(crate) struct XmlWriter {
    out: String,
    depth: usize,
}

impl XmlWriter {
    pub fn new() -> Self {
        Self::default()
    }

    fn start(&mut self, tag: &str, attrs: &[(&str, &str)]) {
        for _ in 0..self.depth {
            self.out.push_str("  ");
        }
        self.out.push('<');
        self.out.push_str(tag);
        for (k, v) in attrs {
            let _ = write!(self.out, " {k}=\"{}\"", escape(v));
        }
    }

    pub fn open(&mut self, tag: &str, attrs: &[(&str, &str)]) {
        self.start(tag, attrs);
        self.out.push_str(">\n");
        self.depth += 1;
    }

    pub fn empty(&mut self, tag: &str, attrs: &[(&str, &str)]) {
        self.start(tag, attrs);
        self.out.push_str("/>\n");
    }

    pub fn close(&mut self, tag: &str) {
        self.depth -= 1;
        for _ in 0..self.depth {
            self.out.push_str("  ");
        }
        let _ = writeln!(self.out, "</{tag}>");
    }

    pub fn finish(self) -> String {
        self.out
    }
}
