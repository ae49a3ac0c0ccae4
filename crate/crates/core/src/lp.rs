//! LP file format writer.
//!
//! Names that the format cannot carry are mangled reversibly: every
//! character outside the legal set (and `#` itself) is written as `#XX#`
//! with the hex value of each UTF-8 byte. A leading digit, `.`, `e` or `E`
//! is escaped the same way so the token cannot be read as a number.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::milp::{Domain, LinExpr, Model, Sense};

/// Maps mangled LP names back to the model's variable names.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NameMap {
    pub lp_to_model: BTreeMap<String, String>,
}

impl NameMap {
    pub fn model_name<'a>(&'a self, lp_name: &'a str) -> Option<&'a str> {
        self.lp_to_model.get(lp_name).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpText {
    pub text: String,
    pub names: NameMap,
    /// Objective constant, which the format has no place for.
    pub objective_offset: f64,
}

fn is_legal(c: char) -> bool {
    c.is_ascii_alphanumeric() || "!\"$%&()/,.;?@_`'{}|~".contains(c)
}

fn escape_into(out: &mut String, c: char) {
    let mut buf = [0u8; 4];
    for b in c.encode_utf8(&mut buf).bytes() {
        let _ = write!(out, "#{b:02X}#");
    }
}

pub fn mangle(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for (i, c) in name.chars().enumerate() {
        let leading = i == 0 && (c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E'));
        if leading || !is_legal(c) {
            escape_into(&mut out, c);
        } else {
            out.push(c);
        }
    }
    out
}

pub fn demangle(name: &str) -> Option<String> {
    let mut bytes = Vec::with_capacity(name.len());
    let mut rest = name.as_bytes();
    while let Some((&b, tail)) = rest.split_first() {
        if b == b'#' {
            if tail.len() < 3 || tail[2] != b'#' {
                return None;
            }
            let hex = std::str::from_utf8(&tail[..2]).ok()?;
            bytes.push(u8::from_str_radix(hex, 16).ok()?);
            rest = &tail[3..];
        } else {
            bytes.push(b);
            rest = tail;
        }
    }
    String::from_utf8(bytes).ok()
}

fn fmt_num(x: f64) -> String {
    // Display is the shortest representation that round-trips.
    format!("{x}")
}

fn write_expr(out: &mut String, expr: &LinExpr, names: &[String]) {
    let mut line_len = 0usize;
    let mut first = true;
    for &(v, c) in &expr.terms {
        let piece = if first {
            format!("{} {}", fmt_num(c), names[v.index()])
        } else if c < 0.0 {
            format!(" - {} {}", fmt_num(-c), names[v.index()])
        } else {
            format!(" + {} {}", fmt_num(c), names[v.index()])
        };
        first = false;
        line_len += piece.len();
        out.push_str(&piece);
        if line_len > 200 {
            out.push_str("\n   ");
            line_len = 0;
        }
    }
}

/// Serializes the model. Identical models give byte-identical text.
pub fn export_lp(model: &Model) -> LpText {
    let names: Vec<String> = model.vars().iter().map(|v| mangle(&v.name)).collect();
    let mut map = NameMap::default();
    for (lp, decl) in names.iter().zip(model.vars()) {
        map.lp_to_model.insert(lp.clone(), decl.name.clone());
    }

    let mut out = String::new();
    out.push_str("\\ generated by mipopt\nMinimize\n obj: ");
    let objective = model.objective().normalized();
    if objective.terms.is_empty() {
        if let Some(first) = names.first() {
            let _ = write!(out, "0 {first}");
        }
    } else {
        write_expr(&mut out, &objective, &names);
    }
    out.push_str("\nSubject To\n");
    for (i, c) in model.constraints().iter().enumerate() {
        let _ = write!(out, " {}#{}#: ", mangle(&c.tag), i);
        if c.lhs.terms.is_empty() {
            // An empty left-hand side is not expressible; pin it on a
            // constant-zero term of the first variable instead.
            let _ = write!(out, "0 {}", names.first().map(String::as_str).unwrap_or("_"));
        } else {
            write_expr(&mut out, &c.lhs, &names);
        }
        let op = match c.sense {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        };
        let _ = writeln!(out, " {op} {}", fmt_num(c.rhs));
    }
    out.push_str("Bounds\n");
    for (name, decl) in names.iter().zip(model.vars()) {
        match decl.domain {
            Domain::Binary => {}
            Domain::Continuous { lo, hi } | Domain::Integer { lo, hi } => {
                let line = match (lo.is_finite(), hi.is_finite()) {
                    (false, false) => format!(" {name} free"),
                    (true, true) if lo == hi => format!(" {name} = {}", fmt_num(lo)),
                    (true, true) => format!(" {} <= {name} <= {}", fmt_num(lo), fmt_num(hi)),
                    (true, false) => format!(" {} <= {name} <= +inf", fmt_num(lo)),
                    (false, true) => format!(" -inf <= {name} <= {}", fmt_num(hi)),
                };
                out.push_str(&line);
                out.push('\n');
            }
        }
    }
    let general: Vec<&String> = names
        .iter()
        .zip(model.vars())
        .filter(|(_, d)| matches!(d.domain, Domain::Integer { .. }))
        .map(|(n, _)| n)
        .collect();
    if !general.is_empty() {
        out.push_str("General\n");
        for n in general {
            let _ = writeln!(out, " {n}");
        }
    }
    let binary: Vec<&String> = names
        .iter()
        .zip(model.vars())
        .filter(|(_, d)| matches!(d.domain, Domain::Binary))
        .map(|(n, _)| n)
        .collect();
    if !binary.is_empty() {
        out.push_str("Binary\n");
        for n in binary {
            let _ = writeln!(out, " {n}");
        }
    }
    out.push_str("End\n");
    LpText { text: out, names: map, objective_offset: objective.constant }
}
