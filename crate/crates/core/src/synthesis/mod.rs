//! Threat models, attacker synthesis by gadget substitution, and attacker
//! validation.
//!
//! [`solve_exists`] replaces every vulnerable process by a daisy and model
//! checks the result; each counterexample is projected onto the daisies and
//! turned into one attacker component per vulnerable process.
//! [`solve_exists_recovery`] does the same with recovery daisies and the
//! property `(F recover_0 && ... ) -> phi`, then glues the projected prefix
//! onto the original vulnerable process.

mod build;
mod render;
mod validate;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gadgets::{daisy, daisy_state_name, rdaisy, GadgetError};
use crate::ltl::Formula;
use crate::modelcheck::{enumerate, model_check, CheckOptions, Counterexample, McError, System, Verdict};
use crate::process::{is_reserved_name, recover_prop, AbstractProcess, Process, ProcessError, Prop};
use crate::signature::{interface_of, signature_of, AttackSignature, ComponentTrace, ProjectionTarget};

pub use build::{build_dag, build_from_deadlock, build_from_lasso, build_from_prefix, glue_recovery};
pub use render::{render_guarded, render_trace};
pub use validate::{validate, Classification, Failure, ValidationReport};

/// Clause of the threat-model definition: the composite satisfies the property.
pub const CLAUSE_SATISFIES: &str = "P || Q |= phi";
/// Clause of the threat-model definition: the composite is not trivially finite.
pub const CLAUSE_INFINITE_RUN: &str = "P || Q has an infinite run";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthesisError {
    #[error("threat model has no target process")]
    NoTarget,
    #[error("threat model has no vulnerable process")]
    NoVulnerable,
    #[error("component name {0} is used twice")]
    DuplicateName(String),
    #[error("vulnerable process {0} has atomic propositions")]
    VulnerableHasPropositions(String),
    #[error("vulnerable process {0} has an empty interface")]
    EmptyInterface(String),
    #[error("property uses reserved proposition {0}")]
    ReservedProposition(Prop),
    #[error("property mentions {0}, which no target process declares")]
    UndeclaredAtom(Prop),
    #[error("threat model is not valid: {}", .0.join("; "))]
    InvalidThreatModel(Vec<String>),
    #[error("vulnerable process {0} is not deterministic")]
    NonDeterministicVulnerable(String),
    #[error("attacker prefix is not acyclic")]
    DagNotAcyclic,
    #[error(transparent)]
    Process(#[from] ProcessError),
    #[error(transparent)]
    Gadget(#[from] GadgetError),
    #[error(transparent)]
    ModelCheck(#[from] McError),
}

/// A named process inside a threat model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub name: String,
    pub process: Process,
}

impl Component {
    pub fn new(name: impl Into<String>, process: Process) -> Self {
        Self { name: name.into(), process }
    }
}

/// `(P, (Q_0, ..., Q_m), phi)`. The target `P` is kept as the list of
/// processes whose composition it is.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThreatModel {
    target: Vec<Component>,
    vulnerable: Vec<Component>,
    property: Formula,
}

impl ThreatModel {
    /// Checks the structural conditions. Whether the composite satisfies
    /// the property is left to [`check_threat_model`].
    pub fn new(target: Vec<Component>, vulnerable: Vec<Component>, property: Formula) -> Result<Self, SynthesisError> {
        if target.is_empty() {
            return Err(SynthesisError::NoTarget);
        }
        if vulnerable.is_empty() {
            return Err(SynthesisError::NoVulnerable);
        }
        let mut names = BTreeSet::new();
        for c in target.iter().chain(&vulnerable) {
            if !names.insert(c.name.as_str()) {
                return Err(SynthesisError::DuplicateName(c.name.clone()));
            }
        }
        for q in &vulnerable {
            if !q.process.atomic_props().is_empty() {
                return Err(SynthesisError::VulnerableHasPropositions(q.name.clone()));
            }
            if interface_of(&q.process).is_err() {
                return Err(SynthesisError::EmptyInterface(q.name.clone()));
            }
        }
        for p in property.atoms() {
            if is_reserved_name(p.as_str()) {
                return Err(SynthesisError::ReservedProposition(p));
            }
            if !target.iter().any(|c| c.process.atomic_props().contains(&p)) {
                return Err(SynthesisError::UndeclaredAtom(p));
            }
        }
        let tm = Self { target, vulnerable, property };
        tm.system_with(tm.vulnerable.iter().map(|q| AbstractProcess::from(q.process.clone())).collect())?;
        Ok(tm)
    }

    pub fn target(&self) -> &[Component] {
        &self.target
    }

    pub fn vulnerable(&self) -> &[Component] {
        &self.vulnerable
    }

    pub fn property(&self) -> &Formula {
        &self.property
    }

    pub fn vulnerable_names(&self) -> Vec<String> {
        self.vulnerable.iter().map(|c| c.name.clone()).collect()
    }

    /// Target components followed by `others`, one per vulnerable process.
    pub fn system_with(&self, others: Vec<AbstractProcess>) -> Result<System, ProcessError> {
        let mut comps: Vec<AbstractProcess> = self.target.iter().map(|c| c.process.clone().into()).collect();
        comps.extend(others);
        System::new(comps)
    }

    /// `P || Q_0 || ... || Q_m`.
    pub fn nominal_system(&self) -> Result<System, ProcessError> {
        self.system_with(self.vulnerable.iter().map(|q| q.process.clone().into()).collect())
    }
}

/// Outcome of checking the semantic threat-model conditions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreatModelCheck {
    pub satisfied: bool,
    pub infinite_run: bool,
    /// A violation of the property by the nominal composite, if any.
    pub counterexample: Option<Counterexample>,
    /// Names of the failed clauses.
    pub failures: Vec<String>,
}

impl ThreatModelCheck {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn check_threat_model(tm: &ThreatModel, opts: &CheckOptions) -> Result<ThreatModelCheck, SynthesisError> {
    let system = tm.nominal_system()?;
    let result = model_check(&system, &tm.property, opts)?;
    let satisfied = result.verdict == Verdict::Satisfied;
    let infinite_run = system.has_infinite_run(opts.open_inputs, opts.state_budget)?;
    let mut failures = Vec::new();
    if !satisfied {
        failures.push(CLAUSE_SATISFIES.to_string());
    }
    if !infinite_run {
        failures.push(CLAUSE_INFINITE_RUN.to_string());
    }
    Ok(ThreatModelCheck { satisfied, infinite_run, counterexample: result.counterexamples.into_iter().next(), failures })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AttackerKind {
    Exists,
    Forall,
}

/// One attacker component per vulnerable process, in the same order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attacker {
    pub components: Vec<Process>,
    /// Filled in by validation.
    #[serde(default)]
    pub kind: Option<AttackerKind>,
    #[serde(default)]
    pub recovery: bool,
    /// Names of the vulnerable processes the components replace.
    #[serde(default)]
    pub names: Vec<String>,
    /// Components built from an empty projection.
    #[serde(default)]
    pub degenerate: Vec<bool>,
    /// Projected behavior each component was built from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature: Option<AttackSignature>,
    /// Counterexample of the gadget system the attacker was built from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Counterexample>,
}

/// Why synthesis returned no attacker.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoAttacker {
    /// The gadget system satisfies the property, so no attacker exists.
    PropertyHoldsUnderGadgets,
    /// Recovery needs deterministic vulnerable processes.
    NonDeterministicVulnerable(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthesisOptions {
    /// Maximum number of attackers, each with a distinct signature.
    pub limit: usize,
    pub check: CheckOptions,
    /// Signatures to skip.
    pub exclude: BTreeSet<AttackSignature>,
    /// Validate each attacker and record its kind.
    pub classify: bool,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self { limit: 10, check: CheckOptions::default(), exclude: BTreeSet::new(), classify: true }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthesisOutcome {
    pub attackers: Vec<Attacker>,
    pub reason: Option<NoAttacker>,
    /// Validation reports, parallel to `attackers`, when classification was requested.
    pub reports: Vec<ValidationReport>,
}

impl SynthesisOutcome {
    fn none(reason: NoAttacker) -> Self {
        Self { attackers: Vec::new(), reason: Some(reason), reports: Vec::new() }
    }
}

fn require_valid(tm: &ThreatModel, opts: &CheckOptions) -> Result<(), SynthesisError> {
    let check = check_threat_model(tm, opts)?;
    if check.ok() {
        Ok(())
    } else {
        Err(SynthesisError::InvalidThreatModel(check.failures))
    }
}

/// Attackers without recovery: model checks `P || Daisy(Q_0) || ...`.
pub fn solve_exists(tm: &ThreatModel, opts: &SynthesisOptions) -> Result<SynthesisOutcome, SynthesisError> {
    require_valid(tm, &opts.check)?;
    let daisies = tm.vulnerable.iter().map(|q| daisy(&q.process).map(AbstractProcess::from)).collect::<Result<_, _>>()?;
    let system = tm.system_with(daisies)?;
    let targets = projection_targets(tm, false)?;
    let result = enumerate(&system, &tm.property, opts.limit, &opts.exclude, &targets, &opts.check)?;
    if result.verdict == Verdict::Satisfied {
        return Ok(SynthesisOutcome::none(NoAttacker::PropertyHoldsUnderGadgets));
    }
    let mut attackers = Vec::new();
    for cex in result.counterexamples {
        let sig = signature_of(&cex, &targets).map_err(McError::from)?;
        let mut components = Vec::new();
        for (q, trace) in tm.vulnerable.iter().zip(&sig.components) {
            let iface = interface_of(&q.process).expect("checked by ThreatModel::new");
            components.push(match &cex {
                Counterexample::Lasso { .. } => {
                    build_from_lasso(&trace.stem, trace.cycle.as_deref().unwrap_or(&[]), &iface)
                }
                Counterexample::BadPrefix { .. } => build_from_prefix(&trace.stem, &iface),
                Counterexample::Deadlock { .. } => build_from_deadlock(&trace.stem, &iface),
            });
        }
        attackers.push(Attacker {
            components,
            kind: None,
            recovery: false,
            names: tm.vulnerable_names(),
            degenerate: sig.components.iter().map(is_empty_trace).collect(),
            signature: Some(sig),
            source: Some(cex),
        });
    }
    finish(tm, attackers, opts)
}

/// Attackers with recovery: model checks
/// `P || RDaisy(Q_0) || ...` against `(F recover_0 && ...) -> phi`.
pub fn solve_exists_recovery(tm: &ThreatModel, opts: &SynthesisOptions) -> Result<SynthesisOutcome, SynthesisError> {
    require_valid(tm, &opts.check)?;
    let nondet: Vec<String> =
        tm.vulnerable.iter().filter(|q| !q.process.is_deterministic()).map(|q| q.name.clone()).collect();
    if !nondet.is_empty() {
        return Ok(SynthesisOutcome::none(NoAttacker::NonDeterministicVulnerable(nondet)));
    }
    let rdaisies = tm
        .vulnerable
        .iter()
        .enumerate()
        .map(|(i, q)| rdaisy(&q.process, i))
        .collect::<Result<_, _>>()?;
    let system = tm.system_with(rdaisies)?;
    let targets = projection_targets(tm, true)?;
    let psi = recovery_property(tm.vulnerable.len(), &tm.property);
    let result = enumerate(&system, &psi, opts.limit, &opts.exclude, &targets, &opts.check)?;
    if result.verdict == Verdict::Satisfied {
        return Ok(SynthesisOutcome::none(NoAttacker::PropertyHoldsUnderGadgets));
    }
    let mut attackers = Vec::new();
    'cex: for cex in result.counterexamples {
        let sig = signature_of(&cex, &targets).map_err(McError::from)?;
        let mut components = Vec::new();
        for (q, trace) in tm.vulnerable.iter().zip(&sig.components) {
            if !trace.recovered {
                // a violation of psi visits every recover_i, so this only
                // happens for truncated witnesses
                continue 'cex;
            }
            let iface = interface_of(&q.process).expect("checked by ThreatModel::new");
            let dag = build_dag(&trace.stem, &iface, &q.process);
            components.push(glue_recovery(&dag, &q.process)?);
        }
        attackers.push(Attacker {
            components,
            kind: None,
            recovery: true,
            names: tm.vulnerable_names(),
            degenerate: sig.components.iter().map(is_empty_trace).collect(),
            signature: Some(sig),
            source: Some(cex),
        });
    }
    finish(tm, attackers, opts)
}

/// `(F recover_0 && ... && F recover_{n-1}) -> phi`.
pub fn recovery_property(n: usize, phi: &Formula) -> Formula {
    Formula::implies(Formula::conjunction((0..n).map(|i| Formula::eventually(Formula::atom(recover_prop(i))))), phi.clone())
}

/// Where each vulnerable slot sits in `system_with`, for projecting
/// counterexamples of the gadget system onto attacker plans.
pub fn projection_targets(tm: &ThreatModel, recovery: bool) -> Result<Vec<ProjectionTarget>, SynthesisError> {
    let offset = tm.target.len();
    tm.vulnerable
        .iter()
        .enumerate()
        .map(|(i, q)| {
            Ok(ProjectionTarget {
                component: offset + i,
                interface: interface_of(&q.process).map_err(|_| SynthesisError::EmptyInterface(q.name.clone()))?,
                daisy_state: recovery.then(|| daisy_state_name(&q.process)),
            })
        })
        .collect()
}

fn is_empty_trace(t: &ComponentTrace) -> bool {
    t.stem.is_empty() && t.cycle.as_ref().is_none_or(Vec::is_empty)
}

fn finish(tm: &ThreatModel, mut attackers: Vec<Attacker>, opts: &SynthesisOptions) -> Result<SynthesisOutcome, SynthesisError> {
    let mut reports = Vec::new();
    if opts.classify {
        for a in &mut attackers {
            let report = validate(tm, a, &opts.check)?;
            a.kind = report.kind();
            reports.push(report);
        }
    }
    Ok(SynthesisOutcome { attackers, reason: None, reports })
}
