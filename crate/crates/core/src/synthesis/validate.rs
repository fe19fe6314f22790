//! Checking a candidate attacker against the attacker definitions.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{recovery_property, Attacker, AttackerKind, SynthesisError, ThreatModel};
use crate::ltl::{eval_lasso, Formula};
use crate::modelcheck::{model_check, CheckOptions, Counterexample, Strategy, Verdict};
use crate::process::{recover_prop, AbstractProcess, Process, StateId};
use crate::signature::interface_of;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Exists,
    Forall,
    Invalid,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Exists => "exists",
            Classification::Forall => "forall",
            Classification::Invalid => "invalid",
        })
    }
}

/// A failed check, by name, with a human-readable detail.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub check: String,
    pub detail: String,
}

impl Failure {
    fn new(check: &str, detail: impl Into<String>) -> Self {
        Self { check: check.to_string(), detail: detail.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub classification: Classification,
    /// A run of the target composed with the attacker that violates the
    /// property (and, for recovery attackers, recovers every component).
    pub witness: Option<Counterexample>,
    /// Whether the recovery shape and recovery semantics hold; `None` for
    /// attackers without recovery.
    pub recovery_ok: Option<bool>,
    pub failures: Vec<Failure>,
}

impl ValidationReport {
    pub fn kind(&self) -> Option<AttackerKind> {
        match self.classification {
            Classification::Exists => Some(AttackerKind::Exists),
            Classification::Forall => Some(AttackerKind::Forall),
            Classification::Invalid => None,
        }
    }

    pub fn failed(&self, check: &str) -> bool {
        self.failures.iter().any(|f| f.check == check)
    }

    fn invalid(failures: Vec<Failure>) -> Self {
        Self { valid: false, classification: Classification::Invalid, witness: None, recovery_ok: None, failures }
    }
}

/// Validates `a` against `tm`: interfaces, determinism, absence of
/// propositions, a violating run of `P || A`, the exists/forall
/// classification, and for recovery attackers the prefix-then-`Q_i` shape
/// plus a violating run on which every component reaches `Q_i`.
pub fn validate(tm: &ThreatModel, a: &Attacker, opts: &CheckOptions) -> Result<ValidationReport, SynthesisError> {
    let mut failures = Vec::new();
    if a.components.len() != tm.vulnerable().len() {
        failures.push(Failure::new(
            "component-count",
            format!("{} components for {} vulnerable processes", a.components.len(), tm.vulnerable().len()),
        ));
        return Ok(ValidationReport::invalid(failures));
    }
    for (i, (ai, q)) in a.components.iter().zip(tm.vulnerable()).enumerate() {
        if interface_of(ai).ok() != interface_of(&q.process).ok() {
            failures.push(Failure::new("interface", format!("A{i} does not have the interface of {}", q.name)));
        }
        let det = ai.check_determinism();
        if let Some(v) = det.violations.first() {
            failures.push(Failure::new(
                "deterministic",
                format!("A{i} state {} violates condition ({}): {}", v.state, v.condition.id(), v.explanation),
            ));
        }
        if !ai.atomic_props().is_empty() {
            failures.push(Failure::new("no-atomic-propositions", format!("A{i} has atomic propositions")));
        }
    }
    if !failures.is_empty() {
        return Ok(ValidationReport::invalid(failures));
    }

    let lasso_opts = CheckOptions { strategy: Strategy::LassoOnly, ..opts.clone() };
    let plain = match tm.system_with(a.components.iter().cloned().map(AbstractProcess::from).collect()) {
        Ok(s) => s,
        Err(e) => {
            failures.push(Failure::new("composable", e.to_string()));
            return Ok(ValidationReport::invalid(failures));
        }
    };

    let mut recovery_ok = None;
    let witness = if a.recovery {
        let mut shape_ok = true;
        for (i, (ai, q)) in a.components.iter().zip(tm.vulnerable()).enumerate() {
            if let Err(detail) = recovery_shape(ai, &q.process) {
                shape_ok = false;
                failures.push(Failure::new("recovery-shape", format!("A{i}: {detail}")));
            }
        }
        if !shape_ok {
            recovery_ok = Some(false);
            None
        } else {
            // Mark each Q_i's initial state inside A_i and look for a violation
            // on which every component gets there.
            let annotated: Vec<AbstractProcess> = a
                .components
                .iter()
                .zip(tm.vulnerable())
                .enumerate()
                .map(|(i, (ai, q))| annotate(ai, q.process.initial(), i).into())
                .collect();
            let system = tm.system_with(annotated)?;
            let psi = recovery_property(a.components.len(), tm.property());
            let r = model_check(&system, &psi, &lasso_opts)?;
            recovery_ok = Some(r.verdict == Verdict::Violated);
            if r.verdict == Verdict::Satisfied {
                failures.push(Failure::new("recovery-reached", "no violating run on which every component recovers"));
            }
            r.counterexamples.into_iter().next()
        }
    } else {
        let r = model_check(&plain, tm.property(), &lasso_opts)?;
        r.counterexamples.into_iter().next()
    };

    match &witness {
        Some(w) => {
            if !plain.replays(w, &lasso_opts) {
                failures.push(Failure::new("witness-replays", "witness is not a run of P || A"));
            }
            if eval_lasso(tm.property(), &plain.computation(w)).unwrap_or(true) {
                failures.push(Failure::new("violates-property", "witness does not violate the property"));
            }
        }
        None if failures.is_empty() => {
            failures.push(Failure::new("violates-property", "P || A satisfies the property"));
        }
        None => {}
    }
    if !failures.is_empty() {
        return Ok(ValidationReport { valid: false, classification: Classification::Invalid, witness, recovery_ok, failures });
    }

    let negated = Formula::not(tm.property().clone());
    let forall = model_check(&plain, &negated, &lasso_opts)?.verdict == Verdict::Satisfied;
    Ok(ValidationReport {
        valid: true,
        classification: if forall { Classification::Forall } else { Classification::Exists },
        witness,
        recovery_ok,
        failures,
    })
}

fn annotate(a: &Process, q0: &StateId, index: usize) -> Process {
    let p = recover_prop(index);
    a.to_builder().props([p.clone()]).label(q0.clone(), [p]).build().expect("fresh reserved proposition")
}

/// `A` must contain all of `Q` unchanged, with the remaining states forming
/// an acyclic prefix whose exits all lead into `Q`'s initial state.
fn recovery_shape(a: &Process, q: &Process) -> Result<(), String> {
    if !q.is_subprocess_of(a) {
        return Err(format!("{} is not contained in the attacker", q.initial()));
    }
    for s in q.states() {
        let extra: Vec<_> = a.outgoing(s).filter(|t| !q.transitions().contains(*t)).collect();
        if let Some(t) = extra.first() {
            return Err(format!("state {s} of the vulnerable process gained transition on {}", t.label));
        }
    }
    let prefix: BTreeSet<&StateId> = a.states().iter().filter(|s| !q.states().contains(*s)).collect();
    if !prefix.contains(a.initial()) && a.initial() != q.initial() {
        return Err(format!("initial state {} is inside the vulnerable process but not its initial state", a.initial()));
    }
    for s in &prefix {
        if a.outgoing(s).next().is_none() {
            return Err(format!("prefix state {s} has no way into the vulnerable process"));
        }
        for t in a.outgoing(s) {
            if !prefix.contains(&t.target) && &t.target != q.initial() {
                return Err(format!("prefix transition {s} --{}--> {} enters past the initial state", t.label, t.target));
            }
        }
    }
    // acyclicity of the prefix: repeatedly strip states without prefix predecessors
    let mut left: BTreeSet<&StateId> = prefix.clone();
    loop {
        let free: Vec<&StateId> = left
            .iter()
            .copied()
            .filter(|s| !a.transitions().iter().any(|t| &t.target == *s && left.contains(&t.source)))
            .collect();
        if free.is_empty() {
            break;
        }
        for s in free {
            left.remove(s);
        }
    }
    if left.is_empty() {
        Ok(())
    } else {
        Err("prefix contains a cycle".into())
    }
}
