//! Small hand-written models used by tests, benches, and documentation.

use crate::ltl::{parse, Formula};
use crate::process::Process;
use crate::synthesis::{Component, ThreatModel};

/// Target that keeps `OK` until it receives `b` (or, nondeterministically, `c`).
pub fn guard_target() -> Process {
    Process::builder("p0")
        .props(["OK"])
        .inputs(["a", "b", "c"])
        .label("p0", ["OK"])
        .state("p1")
        .transition("p0", "a", "p0")
        .transition("p0", "c", "p0")
        .transition("p0", "b", "p1")
        .transition("p0", "c", "p1")
        .transition("p1", "a", "p1")
        .transition("p1", "b", "p1")
        .transition("p1", "c", "p1")
        .build()
        .expect("valid sample")
}

/// Vulnerable process for [`guard_target`]: only ever outputs `a`.
pub fn guard_vulnerable() -> Process {
    single_loop("q0", &["a", "b", "c"], "a")
}

/// Always outputs `b`: every run loses `OK`.
pub fn guard_attacker_always() -> Process {
    single_loop("a0", &["a", "b", "c"], "b")
}

/// Always outputs `c`: some runs lose `OK`.
pub fn guard_attacker_sometimes() -> Process {
    single_loop("a0", &["a", "b", "c"], "c")
}

/// Sends one `b`, then behaves like [`guard_vulnerable`].
pub fn guard_attacker_recovering() -> Process {
    Process::builder("a0")
        .outputs(["a", "b", "c"])
        .transition("a0", "b", "q0")
        .transition("q0", "a", "q0")
        .build()
        .expect("valid sample")
}

pub fn guard_threat_model() -> ThreatModel {
    ThreatModel::new(
        vec![Component::new("P", guard_target())],
        vec![Component::new("Q", guard_vulnerable())],
        parse("[]OK").expect("valid formula"),
    )
    .expect("valid sample")
}

fn single_loop(state: &str, outputs: &[&str], label: &str) -> Process {
    Process::builder(state)
        .outputs(outputs.iter().copied())
        .transition(state, label, state)
        .build()
        .expect("valid sample")
}

/// Target that settles in `l` once it has seen `k` then two `m`s, unless
/// it is allowed to keep emitting `n`.
pub fn relay_target() -> Process {
    Process::builder("p0")
        .props(["l"])
        .inputs(["k", "m"])
        .outputs(["n"])
        .label("p3", ["l"])
        .transition("p0", "k", "p1")
        .transition("p1", "m", "p2")
        .transition("p2", "m", "p3")
        .transition("p3", "k", "p3")
        .transition("p3", "n", "p2")
        .build()
        .expect("valid sample")
}

/// Output-only vulnerable process emitting `m`.
pub fn relay_q0() -> Process {
    single_loop("q0", &["m"], "m")
}

/// Vulnerable process emitting `k` that accepts a single `n`.
pub fn relay_q1() -> Process {
    Process::builder("q0")
        .inputs(["n", "h"])
        .outputs(["k"])
        .transition("q0", "k", "q0")
        .transition("q0", "n", "q1")
        .transition("q1", "k", "q1")
        .build()
        .expect("valid sample")
}

pub fn relay_property() -> Formula {
    parse("<>[]l").expect("valid formula")
}

pub fn relay_threat_model() -> ThreatModel {
    ThreatModel::new(
        vec![Component::new("P", relay_target())],
        vec![Component::new("Q0", relay_q0()), Component::new("Q1", relay_q1())],
        relay_property(),
    )
    .expect("valid sample")
}
