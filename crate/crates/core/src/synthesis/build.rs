//! Turning projected event sequences into attacker processes.

use std::collections::{BTreeMap, BTreeSet};

use super::SynthesisError;
use crate::process::{Label, Process, StateClass, StateId, Transition};
use crate::signature::{Event, Interface};

fn state(k: usize) -> StateId {
    StateId::new(format!("a{k}"))
}

fn base(initial: StateId, iface: &Interface) -> crate::process::ProcessBuilder {
    Process::builder(initial).inputs(iface.inputs.iter().cloned()).outputs(iface.outputs.iter().cloned())
}

/// Chain `a0 --e1--> a1 ... --en--> an`; returns the transitions and `an`.
fn chain(events: &[Event], name: impl Fn(usize) -> StateId) -> (Vec<Transition>, StateId) {
    let ts: Vec<Transition> =
        events.iter().enumerate().map(|(k, e)| Transition::new(name(k), e.label.clone(), name(k + 1))).collect();
    (ts, name(events.len()))
}

/// The least input, or the least output when there are no inputs.
fn fallback_label(iface: &Interface) -> &Label {
    iface
        .inputs
        .iter()
        .next()
        .or_else(|| iface.outputs.iter().next())
        .expect("interfaces are nonempty")
}

fn assemble(initial: StateId, iface: &Interface, ts: Vec<Transition>, extra_states: &[StateId]) -> Process {
    let mut b = base(initial, iface);
    for s in extra_states {
        b = b.state(s.clone());
    }
    for t in ts {
        b.add_transition(t);
    }
    b.build().expect("constructed over the interface")
}

/// Adds self-loops so that every input state accepts every input.
pub(crate) fn input_enable_with_loops(p: &Process) -> Process {
    input_enable(p, |s| s.clone(), |_| true)
}

/// Adds, for each input state selected by `which`, transitions on its
/// missing inputs to `target(state)`.
fn input_enable(p: &Process, target: impl Fn(&StateId) -> StateId, which: impl Fn(&StateId) -> bool) -> Process {
    let mut b = p.to_builder();
    for s in p.states() {
        if !which(s) || p.classify_state(s).ok() != Some(StateClass::InputState) {
            continue;
        }
        let have: BTreeSet<&Label> = p.outgoing(s).map(|t| &t.label).collect();
        for x in p.inputs() {
            if !have.contains(x) {
                b.add_transition(Transition::new(s.clone(), x.clone(), target(s)));
            }
        }
    }
    b.build().expect("same alphabet and states")
}

/// Attacker component from a lasso projection: a chain for `alpha`, then a
/// cycle for `beta` glued at the chain's end. An empty `beta` becomes a
/// single self-loop on the least input (or least output). Input states are
/// finally made input-enabled with self-loops.
pub fn build_from_lasso(alpha: &[Event], beta: &[Event], iface: &Interface) -> Process {
    let (mut ts, end) = chain(alpha, state);
    if beta.is_empty() {
        ts.push(Transition::new(end.clone(), fallback_label(iface).clone(), end.clone()));
    } else {
        let n = alpha.len();
        for (k, e) in beta.iter().enumerate() {
            let to = if k + 1 == beta.len() { end.clone() } else { state(n + k + 1) };
            ts.push(Transition::new(state(n + k), e.label.clone(), to));
        }
    }
    input_enable_with_loops(&assemble(state(0), iface, ts, &[end]))
}

/// Attacker component from a bad-prefix projection: a chain for `alpha`
/// ending in a self-loop on the least input (or least output), then made
/// input-enabled.
pub fn build_from_prefix(alpha: &[Event], iface: &Interface) -> Process {
    let (mut ts, end) = chain(alpha, state);
    ts.push(Transition::new(end.clone(), fallback_label(iface).clone(), end.clone()));
    input_enable_with_loops(&assemble(state(0), iface, ts, &[end]))
}

/// Attacker component from a projection ending in a global deadlock: a
/// chain for `alpha` whose last state only accepts inputs (self-loops), so
/// the deadlock of the source run is preserved without the attacker
/// refusing any message.
pub fn build_from_deadlock(alpha: &[Event], iface: &Interface) -> Process {
    let (mut ts, end) = chain(alpha, state);
    for x in &iface.inputs {
        ts.push(Transition::new(end.clone(), x.clone(), end.clone()));
    }
    input_enable_with_loops(&assemble(state(0), iface, ts, &[end]))
}

/// Chain for a recovery prefix, with state names that avoid the states of
/// `q`. The last state has no outgoing transitions and is identified with
/// `q`'s initial state by [`glue_recovery`].
pub fn build_dag(events: &[Event], iface: &Interface, q: &Process) -> Process {
    let name = |k: usize| {
        let mut s = format!("a{k}");
        while q.states().contains(&StateId::from(s.as_str())) {
            s.push('\'');
        }
        StateId::from(s)
    };
    let (ts, end) = chain(events, name);
    assemble(name(0), iface, ts, &[end])
}

fn is_acyclic(p: &Process) -> bool {
    // Kahn's algorithm
    let mut indeg: BTreeMap<&StateId, usize> = p.states().iter().map(|s| (s, 0)).collect();
    for t in p.transitions() {
        *indeg.get_mut(&t.target).expect("known state") += 1;
    }
    let mut ready: Vec<&StateId> = indeg.iter().filter(|(_, d)| **d == 0).map(|(s, _)| *s).collect();
    let mut done = 0;
    while let Some(s) = ready.pop() {
        done += 1;
        for t in p.outgoing(s) {
            let d = indeg.get_mut(&t.target).expect("known state");
            *d -= 1;
            if *d == 0 {
                ready.push(&t.target);
            }
        }
    }
    done == p.states().len()
}

/// Identifies every sink of `dag` with `q`'s initial state and appends all
/// of `q`. Input states of the prefix are made input-enabled by transitions
/// into `q`'s initial state, which keeps the prefix acyclic.
pub fn glue_recovery(dag: &Process, q: &Process) -> Result<Process, SynthesisError> {
    if !q.is_deterministic() {
        return Err(SynthesisError::NonDeterministicVulnerable(format!("with initial state {}", q.initial())));
    }
    if !is_acyclic(dag) {
        return Err(SynthesisError::DagNotAcyclic);
    }
    let q0 = q.initial().clone();
    let sinks: BTreeSet<&StateId> = dag.states().iter().filter(|s| dag.outgoing(s).next().is_none()).collect();
    let rename = |s: &StateId| -> StateId {
        if sinks.contains(s) {
            return q0.clone();
        }
        let mut name = s.to_string();
        while q.states().contains(&StateId::from(name.as_str())) {
            name.push('\'');
        }
        StateId::from(name)
    };
    let initial = rename(dag.initial());
    let prefix: BTreeSet<StateId> =
        dag.states().iter().filter(|s| !sinks.contains(s)).map(&rename).collect();

    let mut b = Process::builder(initial)
        .inputs(q.inputs().iter().chain(dag.inputs()).cloned())
        .outputs(q.outputs().iter().chain(dag.outputs()).cloned());
    for s in q.states().iter().chain(&prefix) {
        b = b.state(s.clone());
    }
    for l in q.timeouts() {
        b = b.timeout(l.clone());
    }
    for t in q.transitions() {
        b.add_transition(t.clone());
    }
    for t in dag.transitions() {
        b.add_transition(Transition::new(rename(&t.source), t.label.clone(), rename(&t.target)));
    }
    let glued = b.build()?;
    Ok(input_enable(&glued, |_| q0.clone(), |s| prefix.contains(s)))
}
