//! DOT and JSON renderings of processes and attackers.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::process::Process;
use crate::synthesis::{render_guarded, Attacker, ThreatModel};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("unknown format {0:?}; expected dot, json or guarded-text")]
    UnknownFormat(String),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    Json,
    GuardedText,
}

impl ExportFormat {
    /// File extension used for written artifacts.
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Dot => "dot",
            ExportFormat::Json => "json",
            ExportFormat::GuardedText => "txt",
        }
    }
}

impl FromStr for ExportFormat {
    type Err = ExportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dot" => Ok(ExportFormat::Dot),
            "json" => Ok(ExportFormat::Json),
            "guarded-text" | "text" => Ok(ExportFormat::GuardedText),
            other => Err(ExportError::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExportFormat::Dot => "dot",
            ExportFormat::Json => "json",
            ExportFormat::GuardedText => "guarded-text",
        })
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' | '\\' => {
                out.push('\\');
                out.push(c);
            }
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Node and edge statements for `p`, with node ids prefixed by `prefix`.
fn body(out: &mut String, p: &Process, prefix: &str, indent: &str) {
    let id = |s: &str| quote(&format!("{prefix}{s}"));
    let _ = writeln!(out, "{indent}{} [shape=point];", id("__start"));
    for s in p.states() {
        let props = p.label_of(s);
        let label = if props.is_empty() {
            s.to_string()
        } else {
            let ps: Vec<&str> = props.iter().map(|x| x.as_str()).collect();
            format!("{s}\n{{{}}}", ps.join(", "))
        };
        let _ = writeln!(out, "{indent}{} [label={}];", id(s.as_str()), quote(&label));
    }
    let _ = writeln!(out, "{indent}{} -> {};", id("__start"), id(p.initial().as_str()));
    for t in p.transitions() {
        let style = if p.timeouts().contains(&t.label) { ", style=dashed" } else { "" };
        let _ = writeln!(
            out,
            "{indent}{} -> {} [label={}{style}];",
            id(t.source.as_str()),
            id(t.target.as_str()),
            quote(&format!("{}{}", t.label, p.direction(&t.label)))
        );
    }
}

/// A `digraph` with one node per state (labelled with its propositions)
/// and one edge per transition (labelled `x?` or `x!`; timeouts dashed).
pub fn process_dot(name: &str, p: &Process) -> String {
    let mut out = format!("digraph {} {{\n  rankdir=LR;\n  node [shape=circle];\n", quote(name));
    body(&mut out, p, "", "  ");
    out.push_str("}\n");
    out
}

/// One cluster per attacker component.
pub fn attacker_dot(a: &Attacker) -> String {
    let mut out = String::from("digraph \"attacker\" {\n  rankdir=LR;\n  node [shape=circle];\n");
    for (i, p) in a.components.iter().enumerate() {
        let title = match a.names.get(i) {
            Some(n) => format!("A{i} replaces {n}"),
            None => format!("A{i}"),
        };
        let _ = writeln!(out, "  subgraph {} {{", quote(&format!("cluster_{i}")));
        let _ = writeln!(out, "    label={};", quote(&title));
        body(&mut out, p, &format!("A{i}."), "    ");
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

/// One cluster per target and vulnerable component.
pub fn threat_model_dot(tm: &ThreatModel) -> String {
    let mut out = String::from("digraph \"threat_model\" {\n  rankdir=LR;\n  node [shape=circle];\n");
    let parts = tm.target().iter().map(|c| (c, "target")).chain(tm.vulnerable().iter().map(|c| (c, "vulnerable")));
    for (i, (c, role)) in parts.enumerate() {
        let _ = writeln!(out, "  subgraph {} {{", quote(&format!("cluster_{i}")));
        let _ = writeln!(out, "    label={};", quote(&format!("{} ({role})", c.name)));
        body(&mut out, &c.process, &format!("{}.", c.name), "    ");
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

pub fn process_json(p: &Process) -> String {
    serde_json::to_string_pretty(p).expect("processes serialize")
}

pub fn process_from_json(text: &str) -> Result<Process, ExportError> {
    Ok(serde_json::from_str(text)?)
}

pub fn attacker_json(a: &Attacker) -> String {
    serde_json::to_string_pretty(a).expect("attackers serialize")
}

pub fn attacker_from_json(text: &str) -> Result<Attacker, ExportError> {
    Ok(serde_json::from_str(text)?)
}

pub fn render_attacker(a: &Attacker, fmt: ExportFormat) -> String {
    match fmt {
        ExportFormat::Dot => attacker_dot(a),
        ExportFormat::Json => attacker_json(a) + "\n",
        ExportFormat::GuardedText => render_guarded(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;

    #[test]
    fn dot_marks_directions_and_props() {
        let dot = process_dot("P", &samples::relay_target());
        assert!(dot.starts_with("digraph \"P\" {"));
        assert!(dot.contains("\"p0\" -> \"p1\" [label=\"k?\"];"));
        assert!(dot.contains("\"p3\" -> \"p2\" [label=\"n!\"];"));
        assert!(dot.contains("\"p3\" [label=\"p3\\n{l}\"];"));
        assert!(dot.contains("\"__start\" -> \"p0\";"));
    }

    #[test]
    fn threat_model_clusters() {
        let dot = threat_model_dot(&samples::relay_threat_model());
        assert_eq!(dot.matches("subgraph").count(), 3);
        assert!(dot.contains("label=\"Q1 (vulnerable)\";"));
        assert!(dot.contains("\"Q1.q0\" -> \"Q1.q1\" [label=\"n?\"];"));
    }

    #[test]
    fn quoting_escapes() {
        assert_eq!(quote("a\"b\\c"), "\"a\\\"b\\\\c\"");
    }

    #[test]
    fn json_round_trip() {
        let p = samples::relay_q1();
        assert_eq!(process_from_json(&process_json(&p)).unwrap(), p);
        assert!(process_from_json("{\"initial\": 3}").is_err());
    }

    #[test]
    fn formats_parse() {
        assert_eq!("dot".parse::<ExportFormat>().unwrap(), ExportFormat::Dot);
        assert_eq!("guarded-text".parse::<ExportFormat>().unwrap(), ExportFormat::GuardedText);
        assert!("svg".parse::<ExportFormat>().is_err());
    }
}
