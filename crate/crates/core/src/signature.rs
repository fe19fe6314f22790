//! Interfaces, projected events, and attack signatures.
//!
//! Two counterexamples are considered the same attack when every attacker
//! component observes the same sequence of its own interface events.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modelcheck::{Counterexample, GlobalState};
use crate::process::{Label, Process, Step};

/// An input-output interface `(I, O)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Interface {
    pub inputs: BTreeSet<Label>,
    pub outputs: BTreeSet<Label>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignatureError {
    #[error("process has an empty interface")]
    EmptyInterface,
    #[error("component index {0} is out of range")]
    IndexOutOfRange(usize),
}

impl Interface {
    pub fn contains(&self, l: &Label) -> bool {
        self.inputs.contains(l) || self.outputs.contains(l)
    }

    pub fn direction(&self, l: &Label) -> Option<Direction> {
        if self.inputs.contains(l) {
            Some(Direction::Input)
        } else if self.outputs.contains(l) {
            Some(Direction::Output)
        } else {
            None
        }
    }
}

/// `C(P)`: the interface of a process.
pub fn interface_of(p: &Process) -> Result<Interface, SignatureError> {
    if p.inputs().is_empty() && p.outputs().is_empty() {
        return Err(SignatureError::EmptyInterface);
    }
    Ok(Interface { inputs: p.inputs().clone(), outputs: p.outputs().clone() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    Input,
    Output,
}

/// One interface event as seen by a single component.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Event {
    pub label: Label,
    pub direction: Direction,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = match self.direction {
            Direction::Input => '?',
            Direction::Output => '!',
        };
        write!(f, "{}{}", self.label, mark)
    }
}

/// The events of one component along a counterexample.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ComponentTrace {
    pub stem: Vec<Event>,
    pub cycle: Option<Vec<Event>>,
    /// The component entered its recovery region; later events are omitted.
    pub recovered: bool,
}

impl ComponentTrace {
    /// Replaces the cycle by its primitive period: `[m, n, m, n]` becomes
    /// `[m, n]`. Both describe the same infinite event sequence.
    pub fn canonical(mut self) -> Self {
        if let Some(c) = &mut self.cycle {
            let n = c.len();
            if let Some(p) = (1..n).find(|&p| n % p == 0 && (p..n).all(|k| c[k] == c[k - p])) {
                c.truncate(p);
            }
        }
        self
    }
}

impl fmt::Display for ComponentTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |es: &[Event]| es.iter().map(Event::to_string).collect::<Vec<_>>().join(" ");
        write!(f, "[{}]", join(&self.stem))?;
        if let Some(c) = &self.cycle {
            write!(f, " ([{}])^w", join(c))?;
        }
        if self.recovered {
            f.write_str(" recovered")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AttackSignature {
    pub components: Vec<ComponentTrace>,
}

impl fmt::Display for AttackSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "A{i}: {c}")?;
        }
        Ok(())
    }
}

/// Where a projected component sits in the composite and what it can see.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionTarget {
    pub component: usize,
    pub interface: Interface,
    /// For daisies with recovery: the daisy state. Steps taken from any
    /// other state of the component belong to the recovered region.
    pub daisy_state: Option<crate::process::StateId>,
}

/// Projects a counterexample onto one component's interface.
pub fn project(cex: &Counterexample, target: &ProjectionTarget) -> Result<ComponentTrace, SignatureError> {
    let i = target.component;
    if cex.start().len() <= i {
        return Err(SignatureError::IndexOutOfRange(i));
    }
    let in_daisy = |s: &GlobalState| target.daisy_state.as_ref().is_none_or(|d| &s[i] == d);
    let mut recovered = !in_daisy(cex.start());
    let take = |steps: &[Step<GlobalState>], recovered: &mut bool| {
        let mut out = Vec::new();
        for st in steps {
            if *recovered {
                break;
            }
            if let Some(direction) = target.interface.direction(&st.label) {
                out.push(Event { label: st.label.clone(), direction });
            }
            if !in_daisy(&st.target) {
                *recovered = true;
            }
        }
        out
    };
    let stem = take(cex.alpha(), &mut recovered);
    let cycle = match cex.beta() {
        Some(beta) if !recovered => Some(take(beta, &mut recovered)),
        _ => None,
    };
    // a recovered component has no cycle of its own
    let cycle = if recovered { None } else { cycle };
    Ok(ComponentTrace { stem, cycle, recovered })
}

/// Canonical per-component projections of a counterexample.
pub fn signature_of(cex: &Counterexample, targets: &[ProjectionTarget]) -> Result<AttackSignature, SignatureError> {
    Ok(AttackSignature {
        components: targets.iter().map(|t| project(cex, t).map(ComponentTrace::canonical)).collect::<Result<_, _>>()?,
    })
}
