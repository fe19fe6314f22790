//! Explicit-state LTL model checking of composite systems.
//!
//! The product of the system with the automaton for the negated property is
//! explored on the fly. Accepting cycles are found with a nested depth-first
//! search; syntactic safety properties are additionally checked by a
//! breadth-first search for bad prefixes against a subset monitor.

mod alternates;
mod search;
mod system;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ltl::{eval_lasso, Formula};
use crate::process::{Computation, Label, Prop, Run, StateId, Step};
use crate::signature::{signature_of, AttackSignature, ProjectionTarget, SignatureError};

pub use system::System;

/// One state per component, in component order.
pub type GlobalState = Vec<StateId>;

pub const DEFAULT_STATE_BUDGET: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum McError {
    #[error("formula mentions {0}, which no component declares")]
    UndeclaredAtom(Prop),
    #[error("state space budget of {0} product states exceeded")]
    StateSpaceBudgetExceeded(usize),
    #[error(transparent)]
    Signature(#[from] SignatureError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    /// Bad-prefix search for syntactic safety formulas, lassos otherwise.
    Auto,
    /// Always search for accepting cycles.
    LassoOnly,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckOptions {
    pub state_budget: usize,
    pub strategy: Strategy,
    /// Treat a global deadlock as stuttering forever in its final state.
    pub stutter_deadlocks: bool,
    /// Let labels that no component outputs fire freely. By default the
    /// system is closed: only outputs drive transitions.
    pub open_inputs: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            state_budget: DEFAULT_STATE_BUDGET,
            strategy: Strategy::Auto,
            stutter_deadlocks: true,
            open_inputs: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Satisfied,
    Violated,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub verdict: Verdict,
    pub counterexamples: Vec<Counterexample>,
}

/// A violating behavior of the system.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Counterexample {
    /// `alpha · beta^ω`
    Lasso { start: GlobalState, alpha: Vec<Step<GlobalState>>, beta: Vec<Step<GlobalState>> },
    /// Every continuation of `alpha` violates the property.
    BadPrefix { start: GlobalState, alpha: Vec<Step<GlobalState>> },
    /// `alpha` ends in a global deadlock whose state repeats forever.
    Deadlock { start: GlobalState, alpha: Vec<Step<GlobalState>> },
}

impl Counterexample {
    pub fn start(&self) -> &GlobalState {
        match self {
            Counterexample::Lasso { start, .. }
            | Counterexample::BadPrefix { start, .. }
            | Counterexample::Deadlock { start, .. } => start,
        }
    }

    pub fn alpha(&self) -> &[Step<GlobalState>] {
        match self {
            Counterexample::Lasso { alpha, .. }
            | Counterexample::BadPrefix { alpha, .. }
            | Counterexample::Deadlock { alpha, .. } => alpha,
        }
    }

    pub fn beta(&self) -> Option<&[Step<GlobalState>]> {
        match self {
            Counterexample::Lasso { beta, .. } => Some(beta),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Counterexample::Lasso { .. } => "lasso",
            Counterexample::BadPrefix { .. } => "bad-prefix",
            Counterexample::Deadlock { .. } => "deadlock",
        }
    }

    /// State reached at the end of `alpha`.
    pub fn alpha_end(&self) -> &GlobalState {
        self.alpha().last().map_or(self.start(), |s| &s.target)
    }

    pub fn run(&self) -> Run<GlobalState> {
        Run {
            start: self.start().clone(),
            stem: self.alpha().to_vec(),
            cycle: self.beta().map(<[_]>::to_vec),
        }
    }

    pub fn steps(&self) -> impl Iterator<Item = &Step<GlobalState>> {
        self.alpha().iter().chain(self.beta().into_iter().flatten())
    }

    /// Text rendering: one transition per line with `?`/`!` direction marks
    /// and a `--- cycle ---` separator.
    pub fn to_text(&self, direction: impl Fn(&Label) -> char) -> String {
        let st = |s: &GlobalState| StateId::tuple(s.iter()).display_flat();
        let mut out = String::new();
        let _ = writeln!(out, "# {}", self.kind_name());
        let _ = writeln!(out, "{}", st(self.start()));
        for step in self.alpha() {
            let _ = writeln!(out, "{} --{}{}--> {}", st(&step.source), step.label, direction(&step.label), st(&step.target));
        }
        if let Some(beta) = self.beta() {
            let _ = writeln!(out, "--- cycle ---");
            for step in beta {
                let _ =
                    writeln!(out, "{} --{}{}--> {}", st(&step.source), step.label, direction(&step.label), st(&step.target));
            }
        }
        if let Counterexample::Deadlock { .. } = self {
            let _ = writeln!(out, "--- deadlock ---");
        }
        out
    }
}

impl System {
    /// Proposition sets along a counterexample. Lassos and deadlocks give
    /// infinite words; bad prefixes give the finite prefix including the
    /// final state.
    pub fn computation(&self, cex: &Counterexample) -> Computation {
        let label = |s: &GlobalState| -> BTreeSet<Prop> {
            let mut set = BTreeSet::new();
            for (c, id) in s.iter().enumerate() {
                set.extend(self.components()[c].process().label_of(id).iter().cloned());
            }
            set
        };
        match cex {
            Counterexample::Lasso { alpha, beta, .. } => Computation {
                stem: alpha.iter().map(|s| label(&s.source)).collect(),
                cycle: Some(beta.iter().map(|s| label(&s.source)).collect()),
            },
            Counterexample::Deadlock { alpha, .. } => Computation {
                stem: alpha.iter().map(|s| label(&s.source)).collect(),
                cycle: Some(vec![label(cex.alpha_end())]),
            },
            Counterexample::BadPrefix { start, alpha } => Computation {
                stem: std::iter::once(start).chain(alpha.iter().map(|s| &s.target)).map(label).collect(),
                cycle: None,
            },
        }
    }

    /// Checks that the counterexample is a path of this system under the
    /// given options (closed-world firing and timeout priority included).
    pub fn replays(&self, cex: &Counterexample, opts: &CheckOptions) -> bool {
        let Some(start) = self.encode(cex.start()) else {
            return false;
        };
        if !self.roots().contains(&start) {
            return false;
        }
        let mut buf = Vec::new();
        let mut at = start;
        for step in cex.steps() {
            let (Some(src), Some(dst)) = (self.encode(&step.source), self.encode(&step.target)) else {
                return false;
            };
            if src != at {
                return false;
            }
            self.successors(&src, opts.open_inputs, &mut buf);
            if !buf.iter().any(|(l, t)| self.label(*l) == &step.label && *t == dst) {
                return false;
            }
            at = dst;
        }
        match cex {
            Counterexample::Lasso { beta, .. } => {
                !beta.is_empty() && self.encode(&beta[0].source).is_some_and(|b| b == at)
            }
            Counterexample::Deadlock { .. } => {
                self.successors(&at, opts.open_inputs, &mut buf);
                buf.is_empty()
            }
            Counterexample::BadPrefix { .. } => true,
        }
    }

    /// Direction mark of a label within the composite.
    pub fn direction(&self, l: &Label) -> char {
        if self.is_output(l) {
            '!'
        } else {
            '?'
        }
    }
}

/// `MC(system, f)`: the verdict plus one counterexample when violated.
pub fn model_check(system: &System, f: &Formula, opts: &CheckOptions) -> Result<CheckResult, McError> {
    enumerate(system, f, 1, &BTreeSet::new(), &[], opts)
}

/// Up to `limit` counterexamples with pairwise distinct signatures over
/// `targets`, skipping signatures in `exclude`. With no targets, the full
/// label sequences serve as signatures. The verdict is computed even when
/// `limit` is zero.
pub fn enumerate(
    system: &System,
    f: &Formula,
    limit: usize,
    exclude: &BTreeSet<AttackSignature>,
    targets: &[ProjectionTarget],
    opts: &CheckOptions,
) -> Result<CheckResult, McError> {
    for p in f.atoms() {
        if system.prop_index(&p).is_none() {
            return Err(McError::UndeclaredAtom(p));
        }
    }
    let mut col = Collector { system, f, targets, limit, seen: exclude.clone(), accepted: Vec::new(), bases: Vec::new() };
    // A conjunction is violated iff some conjunct is, and the automaton for
    // a negated conjunction is far larger than those of its conjuncts.
    let mut violated = false;
    let mut ex = search::Explorer::new(system, opts);
    for g in f.conjuncts() {
        let use_prefixes =
            opts.strategy == Strategy::Auto && g.classify() == crate::ltl::SyntacticClass::SyntacticSafety;
        violated |= if let Some(goals) = g.violation_recurrence_goals() {
            search::fair_cycles(&mut ex, &goals, &mut |c| col.offer(c, true))?
        } else if use_prefixes {
            search::bad_prefixes(&mut ex, &g, &mut |c| col.offer(c, true))?
        } else {
            search::accepting_cycles(&mut ex, &g, &mut |c| col.offer(c, true))?
        };
        if violated && col.accepted.len() >= limit {
            break;
        }
    }
    // Second round: the same cycles reached along other stems of the same length.
    if violated && !targets.is_empty() && col.accepted.len() < limit {
        let bases = std::mem::take(&mut col.bases);
        for base in &bases {
            if alternates::alternate_stems(system, f, base, targets, opts, &mut |c| col.offer(c, false))? {
                break;
            }
        }
    }
    Ok(CheckResult {
        verdict: if violated { Verdict::Violated } else { Verdict::Satisfied },
        counterexamples: col.accepted,
    })
}

/// Keeps counterexamples with new signatures until `limit` is reached.
struct Collector<'a> {
    system: &'a System,
    f: &'a Formula,
    targets: &'a [ProjectionTarget],
    limit: usize,
    seen: BTreeSet<AttackSignature>,
    accepted: Vec<Counterexample>,
    /// Every counterexample found by the first round, for the second.
    bases: Vec<Counterexample>,
}

impl Collector<'_> {
    /// Returns `true` once enough counterexamples have been collected.
    fn offer(&mut self, cex: Counterexample, base: bool) -> Result<bool, McError> {
        debug_assert!(
            !matches!(cex, Counterexample::Lasso { .. } | Counterexample::Deadlock { .. })
                || !eval_lasso(self.f, &self.system.computation(&cex)).unwrap_or(false),
            "counterexample does not violate {}",
            self.f
        );
        let sig = if self.targets.is_empty() {
            AttackSignature { components: vec![full_trace(&cex)] }
        } else {
            signature_of(&cex, self.targets)?
        };
        if self.seen.insert(sig) && self.accepted.len() < self.limit {
            self.accepted.push(cex.clone());
        }
        if base {
            self.bases.push(cex);
        }
        Ok(self.accepted.len() >= self.limit)
    }
}

fn full_trace(cex: &Counterexample) -> crate::signature::ComponentTrace {
    use crate::signature::{ComponentTrace, Direction, Event};
    let ev = |s: &Step<GlobalState>| Event { label: s.label.clone(), direction: Direction::Output };
    ComponentTrace {
        stem: cex.alpha().iter().map(ev).collect(),
        cycle: cex.beta().map(|b| b.iter().map(ev).collect()),
        recovered: matches!(cex, Counterexample::Deadlock { .. }),
    }
}
