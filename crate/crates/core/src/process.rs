//! Processes: finite labeled transition systems whose states carry atomic
//! propositions and whose alphabet is split into inputs and outputs.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

macro_rules! string_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                Self(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }

        impl AsRef<str> for $name {
            fn as_ref(&self) -> &str {
                &self.0
            }
        }
    };
}

string_newtype!(
    /// A transition label. Whether it is an input or an output depends on
    /// the process that declares it.
    Label
);
string_newtype!(
    /// A state identifier. Composite states are rendered as tuples `(s1,s2)`.
    StateId
);
string_newtype!(
    /// An atomic proposition.
    Prop
);

/// Prefix of the propositions reserved for daisies with recovery.
pub const RECOVER_PREFIX: &str = "recover_";

/// True for `recover_0`, `recover_1`, ...
pub fn is_reserved_name(name: &str) -> bool {
    name.strip_prefix(RECOVER_PREFIX)
        .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
}

pub fn recover_prop(index: usize) -> Prop {
    Prop(format!("{RECOVER_PREFIX}{index}"))
}

impl StateId {
    /// Builds the canonical tuple identifier `(a,b,...)`.
    pub fn tuple<'a>(parts: impl IntoIterator<Item = &'a StateId>) -> StateId {
        let mut s = String::from("(");
        for (i, p) in parts.into_iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&p.0);
        }
        s.push(')');
        StateId(s)
    }

    /// Splits a tuple identifier into its top-level components, respecting
    /// nested parentheses. Returns `None` for non-tuple identifiers.
    pub fn tuple_parts(&self) -> Option<Vec<StateId>> {
        let inner = self.0.strip_prefix('(')?.strip_suffix(')')?;
        let mut parts = Vec::new();
        let mut depth = 0usize;
        let mut start = 0;
        for (i, c) in inner.char_indices() {
            match c {
                '(' => depth += 1,
                ')' => depth = depth.checked_sub(1)?,
                ',' if depth == 0 => {
                    parts.push(StateId(inner[start..i].to_owned()));
                    start = i + 1;
                }
                _ => {}
            }
        }
        if depth != 0 {
            return None;
        }
        parts.push(StateId(inner[start..].to_owned()));
        Some(parts)
    }

    /// Flattens nested tuples for display: `((a,b),c)` renders as `(a,b,c)`.
    pub fn display_flat(&self) -> String {
        fn flatten(id: &StateId, out: &mut Vec<String>) {
            match id.tuple_parts() {
                Some(parts) if id.0.starts_with('(') => {
                    for p in &parts {
                        flatten(p, out);
                    }
                }
                _ => out.push(id.0.clone()),
            }
        }
        if self.tuple_parts().is_none() {
            return self.0.clone();
        }
        let mut out = Vec::new();
        flatten(self, &mut out);
        format!("({})", out.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Transition {
    pub source: StateId,
    pub label: Label,
    pub target: StateId,
}

impl Transition {
    pub fn new(source: impl Into<StateId>, label: impl Into<Label>, target: impl Into<StateId>) -> Self {
        Self { source: source.into(), label: label.into(), target: target.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProcessError {
    #[error("labels {0:?} are declared both as inputs and outputs")]
    InputOutputOverlap(Vec<Label>),
    #[error("transition {0} uses label {1} which is neither an input nor an output")]
    UndeclaredLabel(String, Label),
    #[error("state {state} is labeled with undeclared proposition {prop}")]
    UndeclaredProp { state: StateId, prop: Prop },
    #[error("label {0} is reserved for recovery propositions")]
    ReservedLabel(Label),
    #[error("timeout label {0} is not in the alphabet")]
    UndeclaredTimeout(Label),
    #[error("initial states must be a nonempty subset of the states")]
    BadInitials,
    #[error("cannot compose: shared outputs {outputs:?}, shared propositions {props:?}")]
    CompositionClash { outputs: Vec<Label>, props: Vec<Prop> },
    #[error("unknown state {0}")]
    UnknownState(StateId),
    #[error("not a run: {0}")]
    NotARun(String),
}

/// Serialized shape of a [`Process`]; validated on the way in.
#[derive(Serialize, Deserialize)]
struct RawProcess {
    atomic_props: BTreeSet<Prop>,
    inputs: BTreeSet<Label>,
    outputs: BTreeSet<Label>,
    states: BTreeSet<StateId>,
    initial: StateId,
    transitions: BTreeSet<Transition>,
    labeling: BTreeMap<StateId, BTreeSet<Prop>>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    timeouts: BTreeSet<Label>,
}

impl TryFrom<RawProcess> for Process {
    type Error = ProcessError;

    fn try_from(raw: RawProcess) -> Result<Self, Self::Error> {
        let mut b = ProcessBuilder::new(raw.initial);
        b.props = raw.atomic_props;
        b.inputs = raw.inputs;
        b.outputs = raw.outputs;
        b.states = raw.states;
        b.transitions = raw.transitions;
        b.labeling = raw.labeling;
        b.timeouts = raw.timeouts;
        b.build()
    }
}

impl From<Process> for RawProcess {
    fn from(p: Process) -> Self {
        RawProcess {
            atomic_props: p.atomic_props,
            inputs: p.inputs,
            outputs: p.outputs,
            states: p.states,
            initial: p.initial,
            transitions: p.transitions,
            labeling: p.labeling,
            timeouts: p.timeouts,
        }
    }
}

/// A process `<AP, I, O, S, s0, T, L>`.
///
/// Timeout labels are metadata: transitions carrying them are only taken by
/// the model checker when nothing else in the composite is enabled.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawProcess", into = "RawProcess")]
pub struct Process {
    atomic_props: BTreeSet<Prop>,
    inputs: BTreeSet<Label>,
    outputs: BTreeSet<Label>,
    states: BTreeSet<StateId>,
    initial: StateId,
    transitions: BTreeSet<Transition>,
    labeling: BTreeMap<StateId, BTreeSet<Prop>>,
    timeouts: BTreeSet<Label>,
}

#[derive(Clone, Debug)]
pub struct ProcessBuilder {
    props: BTreeSet<Prop>,
    inputs: BTreeSet<Label>,
    outputs: BTreeSet<Label>,
    states: BTreeSet<StateId>,
    initial: StateId,
    transitions: BTreeSet<Transition>,
    labeling: BTreeMap<StateId, BTreeSet<Prop>>,
    timeouts: BTreeSet<Label>,
}

impl ProcessBuilder {
    pub fn new(initial: impl Into<StateId>) -> Self {
        Self {
            props: BTreeSet::new(),
            inputs: BTreeSet::new(),
            outputs: BTreeSet::new(),
            states: BTreeSet::new(),
            initial: initial.into(),
            transitions: BTreeSet::new(),
            labeling: BTreeMap::new(),
            timeouts: BTreeSet::new(),
        }
    }

    pub fn props<I, S>(mut self, props: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<Prop>,
    {
        self.props.extend(props.into_iter().map(Into::into));
        self
    }

    pub fn inputs<I, S>(mut self, labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<Label>,
    {
        self.inputs.extend(labels.into_iter().map(Into::into));
        self
    }

    pub fn outputs<I, S>(mut self, labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<Label>,
    {
        self.outputs.extend(labels.into_iter().map(Into::into));
        self
    }

    pub fn state(mut self, s: impl Into<StateId>) -> Self {
        self.states.insert(s.into());
        self
    }

    /// Adds propositions to a state's label (declaring the state).
    pub fn label<I, S>(mut self, state: impl Into<StateId>, props: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<Prop>,
    {
        let state = state.into();
        self.states.insert(state.clone());
        self.labeling.entry(state).or_default().extend(props.into_iter().map(Into::into));
        self
    }

    pub fn transition(
        mut self,
        source: impl Into<StateId>,
        label: impl Into<Label>,
        target: impl Into<StateId>,
    ) -> Self {
        self.transitions.insert(Transition::new(source, label, target));
        self
    }

    pub fn timeout(mut self, label: impl Into<Label>) -> Self {
        self.timeouts.insert(label.into());
        self
    }

    pub fn add_transition(&mut self, t: Transition) {
        self.transitions.insert(t);
    }

    pub fn build(mut self) -> Result<Process, ProcessError> {
        let overlap: Vec<Label> = self.inputs.intersection(&self.outputs).cloned().collect();
        if !overlap.is_empty() {
            return Err(ProcessError::InputOutputOverlap(overlap));
        }
        if let Some(l) = self.inputs.iter().chain(&self.outputs).find(|l| is_reserved_name(l.as_str())) {
            return Err(ProcessError::ReservedLabel(l.clone()));
        }
        self.states.insert(self.initial.clone());
        for t in &self.transitions {
            if !self.inputs.contains(&t.label) && !self.outputs.contains(&t.label) {
                return Err(ProcessError::UndeclaredLabel(
                    format!("{} --{}--> {}", t.source, t.label, t.target),
                    t.label.clone(),
                ));
            }
            self.states.insert(t.source.clone());
            self.states.insert(t.target.clone());
        }
        for l in &self.timeouts {
            if !self.inputs.contains(l) && !self.outputs.contains(l) {
                return Err(ProcessError::UndeclaredTimeout(l.clone()));
            }
        }
        for (s, props) in &self.labeling {
            if let Some(p) = props.iter().find(|p| !self.props.contains(*p)) {
                return Err(ProcessError::UndeclaredProp { state: s.clone(), prop: p.clone() });
            }
            self.states.insert(s.clone());
        }
        for s in &self.states {
            self.labeling.entry(s.clone()).or_default();
        }
        Ok(Process {
            atomic_props: self.props,
            inputs: self.inputs,
            outputs: self.outputs,
            states: self.states,
            initial: self.initial,
            transitions: self.transitions,
            labeling: self.labeling,
            timeouts: self.timeouts,
        })
    }
}

/// How a state's outgoing transitions are split between inputs and outputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StateClass {
    Deadlock,
    InputState,
    OutputState,
    Mixed,
}

/// Which clause of the determinism definition a state violates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DeterminismCondition {
    /// (i) the transition relation is not a function of (state, label)
    Functional,
    /// (ii) a non-deadlock state has both input and output transitions
    InputOrOutput,
    /// (iii) an input state is not input-enabled
    InputEnabled,
    /// (iv) an output state has more than one outgoing transition
    SingleOutput,
}

impl DeterminismCondition {
    pub fn id(self) -> &'static str {
        match self {
            Self::Functional => "i",
            Self::InputOrOutput => "ii",
            Self::InputEnabled => "iii",
            Self::SingleOutput => "iv",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterminismViolation {
    pub state: StateId,
    pub condition: DeterminismCondition,
    pub explanation: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterminismReport {
    pub deterministic: bool,
    pub violations: Vec<DeterminismViolation>,
}

/// One transition of a run, generic over the state representation so that
/// composite runs can keep per-component states.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Step<S> {
    pub source: S,
    pub label: Label,
    pub target: S,
}

/// A finite stem, optionally followed by a cycle repeated forever
/// (`stem · cycle^ω`). Without a cycle this is only a finite prefix.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Run<S> {
    pub start: S,
    pub stem: Vec<Step<S>>,
    pub cycle: Option<Vec<Step<S>>>,
}

impl<S: Clone + PartialEq> Run<S> {
    /// The state where the stem ends (and the cycle, if any, begins).
    pub fn stem_end(&self) -> &S {
        self.stem.last().map_or(&self.start, |s| &s.target)
    }

    pub fn steps(&self) -> impl Iterator<Item = &Step<S>> {
        self.stem.iter().chain(self.cycle.iter().flatten())
    }

    /// Checks consecutiveness and the cycle closing on itself.
    pub fn check_shape(&self) -> Result<(), String> {
        let mut at = &self.start;
        for (k, st) in self.stem.iter().enumerate() {
            if &st.source != at {
                return Err(format!("stem step {k} does not start where the previous step ended"));
            }
            at = &st.target;
        }
        if let Some(cycle) = &self.cycle {
            if cycle.is_empty() {
                return Err("cycle is empty".into());
            }
            let first = &cycle[0].source;
            for (k, st) in cycle.iter().enumerate() {
                if &st.source != at {
                    return Err(format!("cycle step {k} does not start where the previous step ended"));
                }
                at = &st.target;
            }
            if at != first {
                return Err("cycle does not return to its first state".into());
            }
        }
        Ok(())
    }
}

/// The sequence of proposition sets induced by a run.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Computation {
    pub stem: Vec<BTreeSet<Prop>>,
    pub cycle: Option<Vec<BTreeSet<Prop>>>,
}

impl Computation {
    pub fn lasso(stem: Vec<BTreeSet<Prop>>, cycle: Vec<BTreeSet<Prop>>) -> Self {
        Self { stem, cycle: Some(cycle) }
    }

    /// Letter at position `i` of the infinite word; `None` past a finite prefix.
    pub fn letter(&self, i: usize) -> Option<&BTreeSet<Prop>> {
        if i < self.stem.len() {
            return self.stem.get(i);
        }
        let cycle = self.cycle.as_ref()?;
        if cycle.is_empty() {
            return None;
        }
        cycle.get((i - self.stem.len()) % cycle.len())
    }
}

impl Process {
    pub fn builder(initial: impl Into<StateId>) -> ProcessBuilder {
        ProcessBuilder::new(initial)
    }

    /// Reopens this process for modification.
    pub fn to_builder(&self) -> ProcessBuilder {
        ProcessBuilder {
            props: self.atomic_props.clone(),
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            states: self.states.clone(),
            initial: self.initial.clone(),
            transitions: self.transitions.clone(),
            labeling: self.labeling.clone(),
            timeouts: self.timeouts.clone(),
        }
    }

    pub fn atomic_props(&self) -> &BTreeSet<Prop> {
        &self.atomic_props
    }
    pub fn inputs(&self) -> &BTreeSet<Label> {
        &self.inputs
    }
    pub fn outputs(&self) -> &BTreeSet<Label> {
        &self.outputs
    }
    pub fn states(&self) -> &BTreeSet<StateId> {
        &self.states
    }
    pub fn initial(&self) -> &StateId {
        &self.initial
    }
    pub fn transitions(&self) -> &BTreeSet<Transition> {
        &self.transitions
    }
    pub fn timeouts(&self) -> &BTreeSet<Label> {
        &self.timeouts
    }

    pub fn alphabet(&self) -> BTreeSet<Label> {
        self.inputs.union(&self.outputs).cloned().collect()
    }

    pub fn has_label(&self, l: &Label) -> bool {
        self.inputs.contains(l) || self.outputs.contains(l)
    }

    pub fn is_input(&self, l: &Label) -> bool {
        self.inputs.contains(l)
    }

    pub fn is_output(&self, l: &Label) -> bool {
        self.outputs.contains(l)
    }

    pub fn label_of(&self, s: &StateId) -> &BTreeSet<Prop> {
        static EMPTY: BTreeSet<Prop> = BTreeSet::new();
        self.labeling.get(s).unwrap_or(&EMPTY)
    }

    pub fn labeling(&self) -> &BTreeMap<StateId, BTreeSet<Prop>> {
        &self.labeling
    }

    pub fn outgoing<'a>(&'a self, s: &'a StateId) -> impl Iterator<Item = &'a Transition> + 'a {
        let lo = Transition { source: s.clone(), label: Label(String::new()), target: StateId(String::new()) };
        self.transitions.range(lo..).take_while(move |t| &t.source == s)
    }

    /// Direction marker used in textual renderings: `?` for inputs, `!` otherwise.
    pub fn direction(&self, l: &Label) -> char {
        if self.inputs.contains(l) {
            '?'
        } else {
            '!'
        }
    }

    pub fn classify_state(&self, s: &StateId) -> Result<StateClass, ProcessError> {
        if !self.states.contains(s) {
            return Err(ProcessError::UnknownState(s.clone()));
        }
        let (mut ins, mut outs) = (false, false);
        for t in self.outgoing(s) {
            if self.inputs.contains(&t.label) {
                ins = true;
            } else {
                outs = true;
            }
        }
        Ok(match (ins, outs) {
            (false, false) => StateClass::Deadlock,
            (true, false) => StateClass::InputState,
            (false, true) => StateClass::OutputState,
            (true, true) => StateClass::Mixed,
        })
    }

    pub fn check_determinism(&self) -> DeterminismReport {
        let mut violations = Vec::new();
        for s in &self.states {
            let out: Vec<&Transition> = self.outgoing(s).collect();
            let mut per_label: BTreeMap<&Label, usize> = BTreeMap::new();
            for t in &out {
                *per_label.entry(&t.label).or_default() += 1;
            }
            for (l, n) in &per_label {
                if *n > 1 {
                    violations.push(DeterminismViolation {
                        state: s.clone(),
                        condition: DeterminismCondition::Functional,
                        explanation: format!("{n} transitions on label {l}"),
                    });
                }
            }
            match self.classify_state(s).expect("state is known") {
                StateClass::Deadlock => {}
                StateClass::Mixed => violations.push(DeterminismViolation {
                    state: s.clone(),
                    condition: DeterminismCondition::InputOrOutput,
                    explanation: "state has both input and output transitions".into(),
                }),
                StateClass::InputState => {
                    let missing: Vec<&str> = self
                        .inputs
                        .iter()
                        .filter(|x| !per_label.contains_key(x))
                        .map(Label::as_str)
                        .collect();
                    if !missing.is_empty() {
                        violations.push(DeterminismViolation {
                            state: s.clone(),
                            condition: DeterminismCondition::InputEnabled,
                            explanation: format!("input state lacks inputs {}", missing.join(", ")),
                        });
                    }
                }
                StateClass::OutputState => {
                    if out.len() > 1 {
                        violations.push(DeterminismViolation {
                            state: s.clone(),
                            condition: DeterminismCondition::SingleOutput,
                            explanation: format!("output state has {} outgoing transitions", out.len()),
                        });
                    }
                }
            }
        }
        DeterminismReport { deterministic: violations.is_empty(), violations }
    }

    pub fn is_deterministic(&self) -> bool {
        self.check_determinism().deterministic
    }

    /// States forward-reachable from the initial state.
    pub fn reachable(&self) -> BTreeSet<StateId> {
        reachable_from(self, std::iter::once(&self.initial))
    }

    /// Restricts the process to its reachable states.
    pub fn prune_unreachable(&self) -> Process {
        restrict(self, &self.reachable())
    }

    /// Componentwise containment: propositions, alphabet, states,
    /// transitions, and pointwise labels.
    pub fn is_subprocess_of(&self, other: &Process) -> bool {
        self.atomic_props.is_subset(&other.atomic_props)
            && self.inputs.is_subset(&other.inputs)
            && self.outputs.is_subset(&other.outputs)
            && self.states.is_subset(&other.states)
            && self.transitions.is_subset(&other.transitions)
            && self.states.iter().all(|s| self.label_of(s).is_subset(other.label_of(s)))
    }

    pub fn run_to_computation(&self, run: &Run<StateId>) -> Result<Computation, ProcessError> {
        run.check_shape().map_err(ProcessError::NotARun)?;
        if !self.states.contains(&run.start) {
            return Err(ProcessError::NotARun(format!("start state {} is unknown", run.start)));
        }
        for st in run.steps() {
            let t = Transition { source: st.source.clone(), label: st.label.clone(), target: st.target.clone() };
            if !self.transitions.contains(&t) {
                return Err(ProcessError::NotARun(format!(
                    "{} --{}--> {} is not a transition",
                    st.source, st.label, st.target
                )));
            }
        }
        let label = |s: &StateId| self.label_of(s).clone();
        Ok(match &run.cycle {
            Some(cycle) => Computation {
                stem: run.stem.iter().map(|st| label(&st.source)).collect(),
                cycle: Some(cycle.iter().map(|st| label(&st.source)).collect()),
            },
            None => {
                let mut stem: Vec<_> = std::iter::once(&run.start)
                    .chain(run.stem.iter().map(|st| &st.target))
                    .map(label)
                    .collect();
                stem.shrink_to_fit();
                Computation { stem, cycle: None }
            }
        })
    }

    /// Renames every state through `f`, which must be injective.
    pub fn rename_states(&self, f: impl Fn(&StateId) -> StateId) -> Process {
        Process {
            atomic_props: self.atomic_props.clone(),
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            states: self.states.iter().map(&f).collect(),
            initial: f(&self.initial),
            transitions: self
                .transitions
                .iter()
                .map(|t| Transition { source: f(&t.source), label: t.label.clone(), target: f(&t.target) })
                .collect(),
            labeling: self.labeling.iter().map(|(s, p)| (f(s), p.clone())).collect(),
            timeouts: self.timeouts.clone(),
        }
    }
}

fn reachable_from<'a>(p: &Process, roots: impl IntoIterator<Item = &'a StateId>) -> BTreeSet<StateId> {
    let mut seen: BTreeSet<StateId> = BTreeSet::new();
    let mut queue = VecDeque::new();
    for r in roots {
        if seen.insert(r.clone()) {
            queue.push_back(r.clone());
        }
    }
    while let Some(s) = queue.pop_front() {
        for t in p.outgoing(&s) {
            if seen.insert(t.target.clone()) {
                queue.push_back(t.target.clone());
            }
        }
    }
    seen
}

fn restrict(p: &Process, keep: &BTreeSet<StateId>) -> Process {
    Process {
        atomic_props: p.atomic_props.clone(),
        inputs: p.inputs.clone(),
        outputs: p.outputs.clone(),
        states: keep.clone(),
        initial: p.initial.clone(),
        transitions: p
            .transitions
            .iter()
            .filter(|t| keep.contains(&t.source) && keep.contains(&t.target))
            .cloned()
            .collect(),
        labeling: p.labeling.iter().filter(|(s, _)| keep.contains(*s)).map(|(s, l)| (s.clone(), l.clone())).collect(),
        timeouts: p.timeouts.clone(),
    }
}

fn check_composable(p1: &Process, p2: &Process) -> Result<(), ProcessError> {
    let outputs: Vec<Label> = p1.outputs.intersection(&p2.outputs).cloned().collect();
    let props: Vec<Prop> = p1.atomic_props.intersection(&p2.atomic_props).cloned().collect();
    if outputs.is_empty() && props.is_empty() {
        Ok(())
    } else {
        Err(ProcessError::CompositionClash { outputs, props })
    }
}

/// Parallel composition with rendezvous synchronization. Outputs are kept
/// on synchronized transitions, so one output may feed several inputs.
///
/// The result ranges over the full state product; use
/// [`Process::prune_unreachable`] to drop unreachable pairs.
pub fn compose(p1: &Process, p2: &Process) -> Result<Process, ProcessError> {
    check_composable(p1, p2)?;
    let outputs: BTreeSet<Label> = p1.outputs.union(&p2.outputs).cloned().collect();
    let inputs: BTreeSet<Label> =
        p1.inputs.union(&p2.inputs).filter(|l| !outputs.contains(*l)).cloned().collect();
    let alphabet: BTreeSet<Label> = inputs.union(&outputs).cloned().collect();

    let pair = |a: &StateId, b: &StateId| StateId::tuple([a, b]);
    let mut states = BTreeSet::new();
    let mut labeling = BTreeMap::new();
    for s1 in &p1.states {
        for s2 in &p2.states {
            let s = pair(s1, s2);
            labeling.insert(s.clone(), p1.label_of(s1).union(p2.label_of(s2)).cloned().collect());
            states.insert(s);
        }
    }

    // Local moves of one component on `x`, or "stay" when `x` is foreign to it.
    fn moves<'a>(p: &'a Process, s: &'a StateId, x: &'a Label) -> Vec<&'a StateId> {
        if p.has_label(x) {
            p.outgoing(s).filter(|t| &t.label == x).map(|t| &t.target).collect()
        } else {
            vec![s]
        }
    }

    let mut transitions = BTreeSet::new();
    for s1 in &p1.states {
        for s2 in &p2.states {
            for x in &alphabet {
                let m1 = moves(p1, s1, x);
                if m1.is_empty() {
                    continue;
                }
                let m2 = moves(p2, s2, x);
                for t1 in &m1 {
                    for t2 in &m2 {
                        transitions.insert(Transition {
                            source: pair(s1, s2),
                            label: x.clone(),
                            target: pair(t1, t2),
                        });
                    }
                }
            }
        }
    }

    Ok(Process {
        atomic_props: p1.atomic_props.union(&p2.atomic_props).cloned().collect(),
        inputs,
        outputs,
        states,
        initial: pair(&p1.initial, &p2.initial),
        transitions,
        labeling,
        timeouts: p1.timeouts.union(&p2.timeouts).cloned().collect(),
    })
}

/// A process with a nonempty set of initial states.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbstractProcess {
    process: Process,
    initials: BTreeSet<StateId>,
}

impl AbstractProcess {
    pub fn new(process: Process, initials: BTreeSet<StateId>) -> Result<Self, ProcessError> {
        if initials.is_empty() || !initials.is_subset(process.states()) {
            return Err(ProcessError::BadInitials);
        }
        Ok(Self { process, initials })
    }

    pub fn process(&self) -> &Process {
        &self.process
    }

    pub fn initials(&self) -> &BTreeSet<StateId> {
        &self.initials
    }

    pub fn reachable(&self) -> BTreeSet<StateId> {
        reachable_from(&self.process, &self.initials)
    }

    /// Composition lifted to abstract processes: initials are the product
    /// of the component initials.
    pub fn compose(&self, other: &AbstractProcess) -> Result<AbstractProcess, ProcessError> {
        let process = compose(&self.process, &other.process)?;
        let initials = self
            .initials
            .iter()
            .flat_map(|a| other.initials.iter().map(move |b| StateId::tuple([a, b])))
            .collect();
        Ok(AbstractProcess { process, initials })
    }
}

impl From<Process> for AbstractProcess {
    fn from(process: Process) -> Self {
        let initials = BTreeSet::from([process.initial.clone()]);
        Self { process, initials }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set<T: Ord + Clone>(xs: &[T]) -> BTreeSet<T> {
        xs.iter().cloned().collect()
    }

    /// Guard target: OK holds at p0 until b arrives.
    fn guard_p() -> Process {
        Process::builder("p0")
            .inputs(["a", "b", "c"])
            .props(["OK"])
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
            .unwrap()
    }

    fn guard_a1() -> Process {
        Process::builder("a0").outputs(["a", "b", "c"]).transition("a0", "b", "a0").build().unwrap()
    }

    fn sync_p() -> Process {
        Process::builder("s0")
            .props(["p", "q"])
            .inputs(["x", "z"])
            .outputs(["v", "w"])
            .label("s1", ["p", "q"])
            .label("s2", ["q"])
            .transition("s0", "w", "s0")
            .transition("s0", "x", "s1")
            .transition("s0", "z", "s1")
            .transition("s2", "x", "s1")
            .transition("s2", "v", "s2")
            .build()
            .unwrap()
    }

    fn sync_q() -> Process {
        Process::builder("q0")
            .props(["r"])
            .inputs(["w"])
            .outputs(["x", "m"])
            .label("q0", ["r"])
            .transition("q0", "x", "q1")
            .transition("q1", "m", "q1")
            .transition("q1", "w", "q0")
            .build()
            .unwrap()
    }

    #[test]
    fn builder_rejects_overlap_and_undeclared() {
        let e = Process::builder("s").inputs(["a"]).outputs(["a"]).build().unwrap_err();
        assert!(matches!(e, ProcessError::InputOutputOverlap(_)));
        let e = Process::builder("s").transition("s", "a", "s").build().unwrap_err();
        assert!(matches!(e, ProcessError::UndeclaredLabel(..)));
        let e = Process::builder("s").label("s", ["p"]).build().unwrap_err();
        assert!(matches!(e, ProcessError::UndeclaredProp { .. }));
        let e = Process::builder("s").outputs(["recover_0"]).build().unwrap_err();
        assert!(matches!(e, ProcessError::ReservedLabel(_)));
    }

    #[test]
    fn compose_guard_reaches_unlabeled_state() {
        let pa = compose(&guard_p(), &guard_a1()).unwrap();
        let t = Transition::new("(p0,a0)", "b", "(p1,a0)");
        assert!(pa.transitions().contains(&t));
        assert!(pa.outputs().contains(&Label::from("b")));
        assert!(pa.reachable().iter().any(|s| pa.label_of(s).is_empty()));
    }

    #[test]
    fn compose_with_inert_process_carries_its_state() {
        let p = guard_p();
        let z = Process::builder("z0").build().unwrap();
        let pz = compose(&p, &z).unwrap();
        let expected: BTreeSet<Transition> = p
            .transitions()
            .iter()
            .map(|t| {
                Transition::new(format!("({},z0)", t.source), t.label.as_str(), format!("({},z0)", t.target))
            })
            .collect();
        assert_eq!(pz.transitions(), &expected);
    }

    #[test]
    fn compose_rejects_shared_outputs_and_props() {
        let a = Process::builder("s").outputs(["x"]).props(["p"]).build().unwrap();
        let b = Process::builder("t").outputs(["x"]).props(["p"]).build().unwrap();
        match compose(&a, &b) {
            Err(ProcessError::CompositionClash { outputs, props }) => {
                assert_eq!(outputs, vec![Label::from("x")]);
                assert_eq!(props, vec![Prop::from("p")]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sync_reachable_pairs() {
        let pq = compose(&sync_p(), &sync_q()).unwrap();
        assert_eq!(pq.states().len(), 6);
        let r = pq.reachable();
        let expected: BTreeSet<StateId> =
            ["(s0,q0)", "(s1,q0)", "(s1,q1)"].into_iter().map(StateId::from).collect();
        assert_eq!(r, expected);
        assert_eq!(pq.inputs(), &set(&[Label::from("z")]));
        let pruned = pq.prune_unreachable();
        assert_eq!(pruned.states().len(), 3);
        assert_eq!(pruned.label_of(&"(s0,q0)".into()), &set(&[Prop::from("r")]));
        assert_eq!(pruned.label_of(&"(s1,q0)".into()), &set(&[Prop::from("p"), Prop::from("q"), Prop::from("r")]));
    }

    #[test]
    fn reachable_without_transitions_is_initial() {
        let p = Process::builder("s").state("t").build().unwrap();
        assert_eq!(p.reachable(), set(&[StateId::from("s")]));
    }

    #[test]
    fn classify_examples() {
        let a1 = guard_a1();
        assert_eq!(a1.classify_state(&"a0".into()).unwrap(), StateClass::OutputState);
        let p = Process::builder("s").state("t").inputs(["a"]).outputs(["b"]).transition("s", "a", "s").transition("s", "b", "t").build().unwrap();
        assert_eq!(p.classify_state(&"t".into()).unwrap(), StateClass::Deadlock);
        assert_eq!(p.classify_state(&"s".into()).unwrap(), StateClass::Mixed);
        assert!(matches!(p.classify_state(&"nope".into()), Err(ProcessError::UnknownState(_))));
    }

    #[test]
    fn determinism_examples() {
        assert!(guard_a1().is_deterministic());
        assert!(Process::builder("s").build().unwrap().is_deterministic());

        let p = Process::builder("s")
            .inputs(["a", "b"])
            .outputs(["o"])
            .transition("s", "a", "s")
            .transition("s", "a", "t")
            .transition("t", "o", "t")
            .transition("t", "o", "s")
            .transition("u", "a", "u")
            .transition("u", "o", "u")
            .build()
            .unwrap();
        let r = p.check_determinism();
        assert!(!r.deterministic);
        let got: BTreeSet<(String, &str)> =
            r.violations.iter().map(|v| (v.state.to_string(), v.condition.id())).collect();
        let want: BTreeSet<(String, &str)> = [
            ("s", "i"),
            ("s", "iii"),
            ("t", "i"),
            ("t", "iv"),
            ("u", "ii"),
        ]
        .into_iter()
        .map(|(s, c)| (s.to_owned(), c))
        .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn subprocess_relation() {
        let p = guard_p();
        assert!(p.is_subprocess_of(&p));
        let q = Process::builder("q0").outputs(["a", "b", "c"]).transition("q0", "a", "q0").build().unwrap();
        let a1 = guard_a1().rename_states(|_| "q0".into());
        assert!(!a1.is_subprocess_of(&q));
        assert!(!q.is_subprocess_of(&a1));
    }

    #[test]
    fn computation_from_sync_run() {
        let pq = compose(&sync_p(), &sync_q()).unwrap();
        let run = Run {
            start: StateId::from("(s0,q0)"),
            stem: vec![Step { source: "(s0,q0)".into(), label: "x".into(), target: "(s1,q1)".into() }],
            cycle: Some(vec![Step { source: "(s1,q1)".into(), label: "m".into(), target: "(s1,q1)".into() }]),
        };
        let c = pq.run_to_computation(&run).unwrap();
        assert_eq!(c.stem, vec![set(&[Prop::from("r")])]);
        assert_eq!(c.cycle, Some(vec![set(&[Prop::from("p"), Prop::from("q")])]));

        let bad = Run { cycle: Some(vec![]), ..run.clone() };
        assert!(matches!(pq.run_to_computation(&bad), Err(ProcessError::NotARun(_))));
        let bogus = Run {
            start: StateId::from("(s0,q0)"),
            stem: vec![Step { source: "(s0,q0)".into(), label: "m".into(), target: "(s0,q0)".into() }],
            cycle: None,
        };
        assert!(matches!(pq.run_to_computation(&bogus), Err(ProcessError::NotARun(_))));
    }

    #[test]
    fn unlabeled_run_gives_empty_sets() {
        let a1 = guard_a1();
        let run = Run {
            start: StateId::from("a0"),
            stem: vec![],
            cycle: Some(vec![Step { source: "a0".into(), label: "b".into(), target: "a0".into() }]),
        };
        let c = a1.run_to_computation(&run).unwrap();
        assert!(c.stem.is_empty());
        assert_eq!(c.cycle.unwrap(), vec![BTreeSet::new()]);
    }

    #[test]
    fn tuple_ids_round_trip() {
        let inner = StateId::tuple([&StateId::from("a"), &StateId::from("b")]);
        let outer = StateId::tuple([&inner, &StateId::from("c")]);
        assert_eq!(outer.as_str(), "((a,b),c)");
        assert_eq!(outer.display_flat(), "(a,b,c)");
        assert_eq!(outer.tuple_parts().unwrap(), vec![inner, StateId::from("c")]);
        assert!(StateId::from("plain").tuple_parts().is_none());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let p = sync_p();
        let json = serde_json::to_string(&p).unwrap();
        let back: Process = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        let broken = json.replace("\"outputs\":[\"v\",\"w\"]", "\"outputs\":[\"v\",\"x\"]");
        assert!(serde_json::from_str::<Process>(&broken).is_err());
    }

    #[test]
    fn abstract_process_initials() {
        let p = sync_p();
        assert!(AbstractProcess::new(p.clone(), BTreeSet::new()).is_err());
        let ap = AbstractProcess::new(p, set(&[StateId::from("s0"), StateId::from("s2")])).unwrap();
        assert!(ap.reachable().contains(&StateId::from("s2")));
    }
}
