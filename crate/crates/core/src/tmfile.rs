//! The `.tm` threat-model format and size-one channel processes.
//!
//! ```text
//! # comment
//! process P {
//!   inputs k, m            # optional; labels are also declared by use
//!   outputs n
//!   props l
//!   init p0
//!   state p3 : l           # state labels
//!   p0 --k?--> p1          # `?` input, `!` output
//!   p3 --n!--> p2
//!   p1 --snd!SYN--> p2     # channel shorthand for snd_in_SYN
//!   p2 --rcv?ACK--> p1     # channel shorthand for rcv_out_ACK
//!   p2 --tick!--> p0 timeout
//! }
//! channel snd { SYN ACK } blocking    # default: overwrite
//! target P snd
//! vulnerable Q
//! property <>[]l
//! ```
//!
//! One statement per line; a trailing `;` is ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ltl::parse;
use crate::modelcheck::CheckOptions;
use crate::process::{Label, Process, ProcessBuilder, ProcessError, Transition};
use crate::synthesis::{check_threat_model, Component, SynthesisError, ThreatModel};

#[derive(Debug, Error)]
pub enum TmError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("threat model violates: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChannelError {
    #[error("channel {0} has an empty message set")]
    EmptyMessageSet(String),
    #[error(transparent)]
    Process(#[from] ProcessError),
}

/// What a full channel does with another message.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelMode {
    /// The new message replaces the held one.
    #[default]
    Overwrite,
    /// The sender waits until the channel is emptied.
    Blocking,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub name: String,
    pub messages: BTreeSet<String>,
    pub mode: ChannelMode,
}

impl ChannelSpec {
    pub fn new<I, S>(name: impl Into<String>, messages: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self { name: name.into(), messages: messages.into_iter().map(Into::into).collect(), mode: ChannelMode::default() }
    }

    pub fn with_mode(mut self, mode: ChannelMode) -> Self {
        self.mode = mode;
        self
    }
}

/// Label a sender uses to put `msg` into `chan`.
pub fn chan_in(chan: &str, msg: &str) -> Label {
    Label::new(format!("{chan}_in_{msg}"))
}

/// Label a receiver uses to take `msg` out of `chan`.
pub fn chan_out(chan: &str, msg: &str) -> Label {
    Label::new(format!("{chan}_out_{msg}"))
}

/// A FIFO channel of capacity one with states `empty` and `holding_<m>`.
/// Its inputs are the `_in_` labels and its outputs the `_out_` labels.
pub fn make_channel(spec: &ChannelSpec) -> Result<Process, ChannelError> {
    if spec.messages.is_empty() {
        return Err(ChannelError::EmptyMessageSet(spec.name.clone()));
    }
    let holding = |m: &str| format!("holding_{m}");
    let mut b = Process::builder("empty")
        .inputs(spec.messages.iter().map(|m| chan_in(&spec.name, m)))
        .outputs(spec.messages.iter().map(|m| chan_out(&spec.name, m)));
    for m in &spec.messages {
        b = b.transition("empty", chan_in(&spec.name, m), holding(m));
        b = b.transition(holding(m), chan_out(&spec.name, m), "empty");
        if spec.mode == ChannelMode::Overwrite {
            for m2 in &spec.messages {
                b = b.transition(holding(m), chan_in(&spec.name, m2), holding(m2));
            }
        }
    }
    Ok(b.build()?)
}

/// Parses a threat model, checking only its structure.
pub fn parse_str(text: &str) -> Result<ThreatModel, TmError> {
    Parser::default().run(text)
}

/// Loads and fully validates a threat model, including that the nominal
/// composite satisfies its property on some infinite run.
pub fn load(path: impl AsRef<Path>) -> Result<ThreatModel, TmError> {
    load_with(path, &CheckOptions::default())
}

pub fn load_with(path: impl AsRef<Path>, opts: &CheckOptions) -> Result<ThreatModel, TmError> {
    let tm = parse_str(&std::fs::read_to_string(path)?)?;
    let check = check_threat_model(&tm, opts)?;
    if !check.ok() {
        return Err(TmError::Validation(check.failures));
    }
    Ok(tm)
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, TmError> {
    Err(TmError::Parse { line, message: message.into() })
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

fn ident(line: usize, s: &str, what: &str) -> Result<String, TmError> {
    if is_ident(s) {
        Ok(s.to_string())
    } else {
        err(line, format!("invalid {what} name `{s}`"))
    }
}

/// Splits a list like `a, b c;` into identifiers.
fn names(line: usize, rest: &str, what: &str) -> Result<Vec<String>, TmError> {
    rest.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).map(|s| ident(line, s, what)).collect()
}

#[derive(Default)]
struct ProcDecl {
    line: usize,
    inputs: BTreeSet<String>,
    outputs: BTreeSet<String>,
    props: BTreeSet<String>,
    init: Option<String>,
    states: Vec<String>,
    labels: BTreeMap<String, BTreeSet<String>>,
    timeouts: BTreeSet<String>,
    transitions: Vec<(String, String, String)>,
}

impl ProcDecl {
    fn declare(&mut self, line: usize, label: &str, output: bool) -> Result<(), TmError> {
        let (mine, other) = if output { (&mut self.outputs, &self.inputs) } else { (&mut self.inputs, &self.outputs) };
        if other.contains(label) {
            return err(line, format!("label {label} is used both as input and output"));
        }
        mine.insert(label.to_string());
        Ok(())
    }

    fn statement(&mut self, line: usize, stmt: &str) -> Result<(), TmError> {
        let (head, rest) = stmt.split_once(char::is_whitespace).unwrap_or((stmt, ""));
        let rest = rest.trim();
        match head {
            "inputs" => {
                for l in names(line, rest, "label")? {
                    self.declare(line, &l, false)?;
                }
            }
            "outputs" => {
                for l in names(line, rest, "label")? {
                    self.declare(line, &l, true)?;
                }
            }
            "props" => self.props.extend(names(line, rest, "proposition")?),
            "init" => {
                if self.init.is_some() {
                    return err(line, "initial state declared twice");
                }
                self.init = Some(ident(line, rest, "state")?);
            }
            "state" => {
                let (s, props) = rest.split_once(':').unwrap_or((rest, ""));
                let s = ident(line, s.trim(), "state")?;
                let props = names(line, props, "proposition")?;
                self.props.extend(props.iter().cloned());
                self.states.push(s.clone());
                self.labels.entry(s).or_default().extend(props);
            }
            "timeout" => {
                for l in names(line, rest, "label")? {
                    self.timeouts.insert(l);
                }
            }
            _ => self.transition(line, stmt)?,
        }
        Ok(())
    }

    fn transition(&mut self, line: usize, stmt: &str) -> Result<(), TmError> {
        let parts: Vec<&str> = stmt.split_whitespace().collect();
        let (src, arrow, dst, timeout) = match parts.as_slice() {
            [s, a, d] => (*s, *a, *d, false),
            [s, a, d, "timeout"] => (*s, *a, *d, true),
            _ => return err(line, format!("unrecognized statement `{stmt}`")),
        };
        let Some(inner) = arrow.strip_prefix("--").and_then(|a| a.strip_suffix("-->")) else {
            return err(line, format!("expected `--label!-->` or `--label?-->`, found `{arrow}`"));
        };
        let Some(pos) = inner.find(['!', '?']) else {
            return err(line, format!("transition label `{inner}` needs a `!` or `?` mark"));
        };
        let (name, mark, msg) = (&inner[..pos], &inner[pos..=pos], &inner[pos + 1..]);
        let name = ident(line, name, "label")?;
        let output = mark == "!";
        let label = if msg.is_empty() {
            name
        } else {
            let msg = ident(line, msg, "message")?;
            if output { chan_in(&name, &msg) } else { chan_out(&name, &msg) }.to_string()
        };
        self.declare(line, &label, output)?;
        if timeout {
            self.timeouts.insert(label.clone());
        }
        self.transitions.push((ident(line, src, "state")?, label, ident(line, dst, "state")?));
        Ok(())
    }

    fn build(self) -> Result<Process, TmError> {
        let Some(init) = self.init.clone().or_else(|| self.transitions.first().map(|t| t.0.clone())) else {
            return err(self.line, "process has no initial state");
        };
        let mut b: ProcessBuilder = Process::builder(init).inputs(self.inputs).outputs(self.outputs).props(self.props);
        for s in self.states {
            b = b.state(s);
        }
        for (s, ps) in self.labels {
            b = b.label(s, ps);
        }
        for l in self.timeouts {
            b = b.timeout(l);
        }
        for (s, l, d) in self.transitions {
            b.add_transition(Transition::new(s, l, d));
        }
        b.build().or_else(|e| err(self.line, e.to_string()))
    }
}

#[derive(Default)]
struct Parser {
    processes: BTreeMap<String, (usize, Process)>,
    target: Option<(usize, Vec<String>)>,
    vulnerable: Option<(usize, Vec<String>)>,
    property: Option<(usize, String)>,
}

impl Parser {
    fn add(&mut self, line: usize, name: String, p: Process) -> Result<(), TmError> {
        if self.processes.contains_key(&name) {
            return err(line, format!("process {name} is defined twice"));
        }
        self.processes.insert(name, (line, p));
        Ok(())
    }

    fn run(mut self, text: &str) -> Result<ThreatModel, TmError> {
        let mut open: Option<(String, ProcDecl)> = None;
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let stmt = raw.split('#').next().unwrap_or("").trim().trim_end_matches(';').trim();
            if stmt.is_empty() {
                continue;
            }
            if let Some((_, decl)) = &mut open {
                if stmt == "}" {
                    let (name, decl) = open.take().expect("inside a block");
                    let p = decl.build()?;
                    self.add(line, name, p)?;
                } else {
                    decl.statement(line, stmt)?;
                }
                continue;
            }
            let (head, rest) = stmt.split_once(char::is_whitespace).unwrap_or((stmt, ""));
            let rest = rest.trim();
            match head {
                "process" => {
                    let Some(name) = rest.strip_suffix('{') else {
                        return err(line, "expected `process NAME {`");
                    };
                    let name = ident(line, name.trim(), "process")?;
                    open = Some((name, ProcDecl { line, ..Default::default() }));
                }
                "channel" => {
                    let (name, rest) = rest.split_once('{').unwrap_or((rest, ""));
                    let Some((msgs, mode)) = rest.split_once('}') else {
                        return err(line, "expected `channel NAME { MSG ... } [overwrite|blocking]`");
                    };
                    let mode = match mode.trim() {
                        "" | "overwrite" => ChannelMode::Overwrite,
                        "blocking" => ChannelMode::Blocking,
                        other => return err(line, format!("unknown channel mode `{other}`")),
                    };
                    let name = ident(line, name.trim(), "channel")?;
                    let spec = ChannelSpec::new(name.clone(), names(line, msgs, "message")?).with_mode(mode);
                    let p = make_channel(&spec).or_else(|e| err(line, e.to_string()))?;
                    self.add(line, name, p)?;
                }
                "target" | "vulnerable" => {
                    let list = names(line, rest, "process")?;
                    let slot = if head == "target" { &mut self.target } else { &mut self.vulnerable };
                    if slot.is_some() {
                        return err(line, format!("`{head}` given twice"));
                    }
                    *slot = Some((line, list));
                }
                "property" => {
                    if self.property.is_some() {
                        return err(line, "`property` given twice");
                    }
                    self.property = Some((line, rest.to_string()));
                }
                _ => return err(line, format!("unexpected `{head}`")),
            }
        }
        if let Some((_, decl)) = open {
            return err(decl.line, "process block is not closed");
        }
        let last = text.lines().count().max(1);
        let Some((tline, target)) = self.target.take() else {
            return err(last, "missing `target` declaration");
        };
        let Some((vline, vulnerable)) = self.vulnerable.take() else {
            return err(last, "missing `vulnerable` declaration");
        };
        let Some((pline, property)) = self.property.take() else {
            return err(last, "missing `property` declaration");
        };
        let formula = parse(&property).or_else(|e| err(pline, e.to_string()))?;
        let lookup = |line: usize, names: Vec<String>| -> Result<Vec<Component>, TmError> {
            names
                .into_iter()
                .map(|n| match self.processes.get(&n) {
                    Some((_, p)) => Ok(Component::new(n, p.clone())),
                    None => err(line, format!("unknown process {n}")),
                })
                .collect()
        };
        let target = lookup(tline, target)?;
        let vulnerable = lookup(vline, vulnerable)?;
        ThreatModel::new(target, vulnerable, formula).or_else(|e| err(pline.max(tline).max(vline), e.to_string()))
    }
}

fn write_process(out: &mut String, name: &str, p: &Process) {
    let join = |it: &mut dyn Iterator<Item = &str>| it.collect::<Vec<_>>().join(", ");
    let _ = writeln!(out, "process {name} {{");
    if !p.inputs().is_empty() {
        let _ = writeln!(out, "  inputs {}", join(&mut p.inputs().iter().map(Label::as_str)));
    }
    if !p.outputs().is_empty() {
        let _ = writeln!(out, "  outputs {}", join(&mut p.outputs().iter().map(Label::as_str)));
    }
    if !p.atomic_props().is_empty() {
        let _ = writeln!(out, "  props {}", join(&mut p.atomic_props().iter().map(|x| x.as_str())));
    }
    let _ = writeln!(out, "  init {}", p.initial());
    for s in p.states() {
        let props = p.label_of(s);
        if props.is_empty() {
            let _ = writeln!(out, "  state {s}");
        } else {
            let _ = writeln!(out, "  state {s} : {}", props.iter().map(|x| x.as_str()).collect::<Vec<_>>().join(" "));
        }
    }
    if !p.timeouts().is_empty() {
        let _ = writeln!(out, "  timeout {}", join(&mut p.timeouts().iter().map(Label::as_str)));
    }
    for t in p.transitions() {
        let _ = writeln!(out, "  {} --{}{}--> {}", t.source, t.label, p.direction(&t.label), t.target);
    }
    let _ = writeln!(out, "}}");
}

/// Writes a threat model in the `.tm` format. Channels are written as
/// ordinary processes, so `parse_str(&save(tm))` reproduces `tm`.
pub fn save(tm: &ThreatModel) -> String {
    let mut out = String::new();
    for c in tm.target().iter().chain(tm.vulnerable()) {
        write_process(&mut out, &c.name, &c.process);
        out.push('\n');
    }
    let names = |cs: &[Component]| cs.iter().map(|c| c.name.as_str()).collect::<Vec<_>>().join(" ");
    let _ = writeln!(out, "target {}", names(tm.target()));
    let _ = writeln!(out, "vulnerable {}", names(tm.vulnerable()));
    let _ = writeln!(out, "property {}", tm.property());
    out
}
