//! Substitution gadgets that stand in for vulnerable processes.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::process::{recover_prop, AbstractProcess, Process, ProcessError, StateId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GadgetError {
    #[error("vulnerable process has atomic propositions {0:?}")]
    HasAtomicPropositions(Vec<String>),
    #[error(transparent)]
    Process(#[from] ProcessError),
}

fn require_no_props(q: &Process) -> Result<(), GadgetError> {
    if q.atomic_props().is_empty() {
        Ok(())
    } else {
        Err(GadgetError::HasAtomicPropositions(q.atomic_props().iter().map(|p| p.to_string()).collect()))
    }
}

/// Name of the fresh daisy state: `d0`, primed until it is unused by `q`.
pub fn daisy_state_name(q: &Process) -> StateId {
    let mut name = String::from("d0");
    while q.states().contains(&StateId::from(name.as_str())) {
        name.push('\'');
    }
    StateId::from(name)
}

/// One state `d0` with a self-loop on every input and output of `q`.
pub fn daisy(q: &Process) -> Result<Process, GadgetError> {
    require_no_props(q)?;
    let mut b = Process::builder("d0").inputs(q.inputs().iter().cloned()).outputs(q.outputs().iter().cloned());
    for w in q.alphabet() {
        b = b.transition("d0", w, "d0");
    }
    Ok(b.build()?)
}

/// The daisy wired into `q`: the daisy state may move on any label to
/// itself or to `q`'s initial state, both are initial, and `q`'s initial
/// state carries `recover_<index>`.
pub fn rdaisy(q: &Process, index: usize) -> Result<AbstractProcess, GadgetError> {
    require_no_props(q)?;
    let d0 = daisy_state_name(q);
    let s0 = q.initial().clone();
    let recover = recover_prop(index);
    let mut b = q.to_builder().props([recover.clone()]).label(s0.clone(), [recover]);
    for w in q.alphabet() {
        b = b.transition(d0.clone(), w.clone(), d0.clone()).transition(d0.clone(), w, s0.clone());
    }
    let p = b.state(d0.clone()).build()?;
    Ok(AbstractProcess::new(p, BTreeSet::from([s0, d0]))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{Label, StateClass, Transition};

    fn q1() -> Process {
        Process::builder("q0")
            .inputs(["n", "h"])
            .outputs(["k"])
            .transition("q0", "n", "q1")
            .transition("q0", "k", "q0")
            .transition("q1", "k", "q1")
            .build()
            .unwrap()
    }

    #[test]
    fn daisy_of_relay_helper() {
        let d = daisy(&q1()).unwrap();
        assert_eq!(d.states().len(), 1);
        let labels: BTreeSet<&str> = d.transitions().iter().map(|t| t.label.as_str()).collect();
        assert_eq!(labels, BTreeSet::from(["h", "k", "n"]));
        assert!(d.transitions().iter().all(|t| t.source.as_str() == "d0" && t.target.as_str() == "d0"));
        assert_eq!(d.classify_state(&"d0".into()).unwrap(), StateClass::Mixed);
        assert_eq!(d.inputs(), q1().inputs());
        assert_eq!(d.outputs(), q1().outputs());
    }

    #[test]
    fn rejects_propositions() {
        let q = Process::builder("s").props(["p"]).build().unwrap();
        assert!(matches!(daisy(&q), Err(GadgetError::HasAtomicPropositions(_))));
        assert!(matches!(rdaisy(&q, 0), Err(GadgetError::HasAtomicPropositions(_))));
    }

    #[test]
    fn rdaisy_of_single_loop() {
        let q = Process::builder("s0").outputs(["a"]).transition("s0", "a", "s0").build().unwrap();
        let r = rdaisy(&q, 0).unwrap();
        let p = r.process();
        assert_eq!(p.states().len(), 2);
        let want: BTreeSet<Transition> = [
            Transition::new("d0", "a", "d0"),
            Transition::new("d0", "a", "s0"),
            Transition::new("s0", "a", "s0"),
        ]
        .into_iter()
        .collect();
        assert_eq!(p.transitions(), &want);
        assert_eq!(r.initials().len(), 2);
        let labeled: Vec<&StateId> = p.states().iter().filter(|s| !p.label_of(s).is_empty()).collect();
        assert_eq!(labeled, vec![&StateId::from("s0")]);
        assert!(q.is_subprocess_of(p));
    }

    #[test]
    fn rdaisy_avoids_name_collision() {
        let q = Process::builder("d0").outputs(["a"]).transition("d0", "a", "d0").build().unwrap();
        let r = rdaisy(&q, 3).unwrap();
        assert!(r.initials().contains(&StateId::from("d0'")));
        assert!(r.process().atomic_props().contains(&recover_prop(3)));
        assert!(r.process().is_output(&Label::from("a")));
    }
}
