//! Attribute-tracking readers over roxmltree nodes and a small writer.

use std::cell::RefCell;
use std::fmt::Write as _;
use std::str::FromStr;

use roxmltree::{Document, Node};

use super::IoError;

pub const NAMESPACE: &str = "http://www.fokus.fraunhofer.de/WaveSave";
const XSI: &str = "http://www.w3.org/2001/XMLSchema-instance";

pub fn parse_document(text: &str) -> Result<Document<'_>, IoError> {
    Document::parse(text).map_err(|e| {
        let pos = e.pos();
        IoError::Xml { line: pos.row, col: pos.col, msg: e.to_string() }
    })
}

/// An element being read. Every attribute must be consumed before
/// [`Element::finish`], which rejects the leftovers.
pub struct Element<'a, 'input> {
    pub node: Node<'a, 'input>,
    pub path: String,
    used: RefCell<Vec<&'a str>>,
}

impl<'a, 'input> Element<'a, 'input> {
    pub fn new(node: Node<'a, 'input>, parent_path: &str) -> Self {
        let name = node.tag_name().name();
        let path = match node.attribute("id") {
            Some(id) => format!("{parent_path}/{name}[@id='{id}']"),
            None => format!("{parent_path}/{name}"),
        };
        Element { node, path, used: RefCell::new(Vec::new()) }
    }

    pub fn name(&self) -> &'a str {
        self.node.tag_name().name()
    }

    pub fn error(&self, msg: impl Into<String>) -> IoError {
        let pos = self.node.document().text_pos_at(self.node.range().start);
        IoError::Schema { path: self.path.clone(), line: pos.row, col: pos.col, msg: msg.into() }
    }

    pub fn check_namespace(&self) -> Result<(), IoError> {
        match self.node.tag_name().namespace() {
            None | Some(NAMESPACE) => Ok(()),
            Some(ns) => Err(self.error(format!("element in unexpected namespace `{ns}`"))),
        }
    }

    pub fn opt(&self, name: &'a str) -> Option<&'a str> {
        self.used.borrow_mut().push(name);
        self.node.attribute(name)
    }

    pub fn req(&self, name: &'a str) -> Result<&'a str, IoError> {
        self.opt(name).ok_or_else(|| self.error(format!("missing required attribute `{name}`")))
    }

    fn parsed<T: FromStr>(&self, name: &str, raw: &str) -> Result<T, IoError> {
        raw.trim().parse().map_err(|_| self.error(format!("attribute `{name}` has malformed value `{raw}`")))
    }

    pub fn req_f64(&self, name: &'a str) -> Result<f64, IoError> {
        let v: f64 = self.parsed(name, self.req(name)?)?;
        if !v.is_finite() {
            return Err(self.error(format!("attribute `{name}` must be finite")));
        }
        Ok(v)
    }

    pub fn opt_f64(&self, name: &'a str) -> Result<Option<f64>, IoError> {
        match self.opt(name) {
            Some(_) => self.req_f64(name).map(Some),
            None => Ok(None),
        }
    }

    pub fn req_parse<T: FromStr>(&self, name: &'a str) -> Result<T, IoError> {
        self.parsed(name, self.req(name)?)
    }

    pub fn opt_bool(&self, name: &'a str) -> Result<Option<bool>, IoError> {
        match self.opt(name).map(str::trim) {
            None => Ok(None),
            Some("true") | Some("1") => Ok(Some(true)),
            Some("false") | Some("0") => Ok(Some(false)),
            Some(raw) => Err(self.error(format!("attribute `{name}` must be true or false, got `{raw}`"))),
        }
    }

    pub fn req_bool(&self, name: &'a str) -> Result<bool, IoError> {
        self.opt_bool(name)?.ok_or_else(|| self.error(format!("missing required attribute `{name}`")))
    }

    /// A closed set of literal values.
    pub fn opt_choice<T: Copy>(&self, name: &'a str, choices: &[(&str, T)]) -> Result<Option<T>, IoError> {
        let Some(raw) = self.opt(name) else { return Ok(None) };
        choices.iter().find(|(k, _)| *k == raw).map(|&(_, v)| Some(v)).ok_or_else(|| {
            let allowed: Vec<&str> = choices.iter().map(|(k, _)| *k).collect();
            self.error(format!("attribute `{name}` must be one of {allowed:?}, got `{raw}`"))
        })
    }

    pub fn children(&self) -> impl Iterator<Item = Element<'a, 'input>> + '_ {
        let path = self.path.clone();
        self.node.children().filter(|n| n.is_element()).map(move |n| Element::new(n, &path))
    }

    /// Rejects attributes nobody asked for. Namespace declarations and
    /// `xsi:` attributes are always accepted.
    pub fn finish(&self) -> Result<(), IoError> {
        let used = self.used.borrow();
        for a in self.node.attributes() {
            if a.namespace() == Some(XSI) {
                continue;
            }
            if a.namespace().is_some() || !used.contains(&a.name()) {
                return Err(self.error(format!("unknown attribute `{}`", a.name())));
            }
        }
        Ok(())
    }
}

/// Indented element writer; attribute values are escaped.
#[derive(Default)]
pub struct Writer {
    out: String,
    depth: usize,
}

pub type Attrs = Vec<(&'static str, String)>;

fn escape(s: &str) -> String {
    let mut r = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => r.push_str("&amp;"),
            '<' => r.push_str("&lt;"),
            '>' => r.push_str("&gt;"),
            '"' => r.push_str("&quot;"),
            '\'' => r.push_str("&apos;"),
            c => r.push(c),
        }
    }
    r
}

impl Writer {
    pub fn new() -> Self {
        Writer { out: String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"), depth: 0 }
    }

    fn head(&mut self, name: &str, attrs: &Attrs) {
        let _ = write!(self.out, "{:1$}<{name}", "", self.depth * 2);
        for (k, v) in attrs {
            let _ = write!(self.out, " {k}=\"{}\"", escape(v));
        }
    }

    pub fn empty(&mut self, name: &str, attrs: &Attrs) {
        self.head(name, attrs);
        self.out.push_str("/>\n");
    }

    pub fn open(&mut self, name: &str, attrs: &Attrs) {
        self.head(name, attrs);
        self.out.push_str(">\n");
        self.depth += 1;
    }

    pub fn close(&mut self, name: &str) {
        self.depth -= 1;
        let _ = writeln!(self.out, "{:1$}</{name}>", "", self.depth * 2);
    }

    pub fn finish(self) -> String {
        self.out
    }
}

/// Shortest representation that parses back to the same value.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}
