//! On-the-fly composite of several abstract processes.
//!
//! Composite states are interned as vectors of per-component state indices.
//! Component states and global labels are numbered in sorted order, so
//! iterating successors by (label id, component target ids) visits them by
//! label name and then by target state names.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use smallvec::SmallVec;

use crate::process::{AbstractProcess, Label, Process, ProcessError, Prop, StateId};

pub(crate) type Packed = SmallVec<[u32; 8]>;

/// A system to be model checked: the composition of its components.
#[derive(Clone, Debug)]
pub struct System {
    components: Vec<AbstractProcess>,
    labels: Vec<Label>,
    props: Vec<Prop>,
    outputs: Vec<bool>,
    timeout: Vec<bool>,
    /// per label: components whose alphabet contains it
    participants: Vec<Vec<usize>>,
    comps: Vec<CompTable>,
}

#[derive(Clone, Debug)]
struct CompTable {
    states: Vec<StateId>,
    initials: Vec<u32>,
    /// per state: label id -> sorted targets
    moves: Vec<BTreeMap<u32, Vec<u32>>>,
    /// per state: global prop ids
    props: Vec<Vec<u32>>,
}

impl System {
    pub fn new(components: Vec<AbstractProcess>) -> Result<Self, ProcessError> {
        for (i, a) in components.iter().enumerate() {
            for b in &components[i + 1..] {
                let outputs: Vec<Label> =
                    a.process().outputs().intersection(b.process().outputs()).cloned().collect();
                let props: Vec<Prop> =
                    a.process().atomic_props().intersection(b.process().atomic_props()).cloned().collect();
                if !outputs.is_empty() || !props.is_empty() {
                    return Err(ProcessError::CompositionClash { outputs, props });
                }
            }
        }
        let labels: Vec<Label> = components
            .iter()
            .flat_map(|c| c.process().alphabet())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let props: Vec<Prop> = components
            .iter()
            .flat_map(|c| c.process().atomic_props().iter().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let label_id: HashMap<&Label, u32> = labels.iter().enumerate().map(|(i, l)| (l, i as u32)).collect();
        let prop_id: HashMap<&Prop, u32> = props.iter().enumerate().map(|(i, p)| (p, i as u32)).collect();

        let outputs = labels.iter().map(|l| components.iter().any(|c| c.process().is_output(l))).collect();
        let timeout = labels.iter().map(|l| components.iter().any(|c| c.process().timeouts().contains(l))).collect();
        let participants = labels
            .iter()
            .map(|l| (0..components.len()).filter(|&i| components[i].process().has_label(l)).collect())
            .collect();

        let comps = components
            .iter()
            .map(|c| {
                let p = c.process();
                let states: Vec<StateId> = p.states().iter().cloned().collect();
                let index: HashMap<&StateId, u32> = states.iter().enumerate().map(|(i, s)| (s, i as u32)).collect();
                let mut moves = vec![BTreeMap::<u32, Vec<u32>>::new(); states.len()];
                for t in p.transitions() {
                    moves[index[&t.source] as usize].entry(label_id[&t.label]).or_default().push(index[&t.target]);
                }
                for m in &mut moves {
                    for targets in m.values_mut() {
                        targets.sort_unstable();
                    }
                }
                CompTable {
                    initials: c.initials().iter().map(|s| index[s]).collect(),
                    props: states.iter().map(|s| p.label_of(s).iter().map(|q| prop_id[q]).collect()).collect(),
                    states,
                    moves,
                }
            })
            .collect();

        Ok(Self { components, labels, props, outputs, timeout, participants, comps })
    }

    pub fn from_processes(ps: impl IntoIterator<Item = Process>) -> Result<Self, ProcessError> {
        Self::new(ps.into_iter().map(AbstractProcess::from).collect())
    }

    pub fn components(&self) -> &[AbstractProcess] {
        &self.components
    }

    pub fn atomic_props(&self) -> &[Prop] {
        &self.props
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub(crate) fn label(&self, id: u32) -> &Label {
        &self.labels[id as usize]
    }

    pub(crate) fn prop_index(&self, p: &Prop) -> Option<u32> {
        self.props.binary_search(p).ok().map(|i| i as u32)
    }

    /// Whether some component outputs `l`.
    pub fn is_output(&self, l: &Label) -> bool {
        self.labels.binary_search(l).is_ok_and(|i| self.outputs[i])
    }

    pub(crate) fn roots(&self) -> Vec<Packed> {
        let mut roots: Vec<Packed> = vec![Packed::new()];
        for c in &self.comps {
            let mut inits = c.initials.clone();
            inits.sort_unstable();
            roots = roots
                .into_iter()
                .flat_map(|r| {
                    inits.iter().map(move |&i| {
                        let mut r = r.clone();
                        r.push(i);
                        r
                    })
                })
                .collect();
        }
        roots
    }

    pub(crate) fn for_each_prop(&self, s: &[u32], mut f: impl FnMut(u32)) {
        for (c, &i) in s.iter().enumerate() {
            for &p in &self.comps[c].props[i as usize] {
                f(p);
            }
        }
    }

    /// Index of `id` among component `c`'s states.
    pub(crate) fn state_index(&self, c: usize, id: &StateId) -> Option<u32> {
        self.comps.get(c)?.states.binary_search(id).ok().map(|i| i as u32)
    }

    pub(crate) fn decode(&self, s: &[u32]) -> Vec<StateId> {
        s.iter().enumerate().map(|(c, &i)| self.comps[c].states[i as usize].clone()).collect()
    }

    pub(crate) fn encode(&self, s: &[StateId]) -> Option<Packed> {
        if s.len() != self.comps.len() {
            return None;
        }
        s.iter()
            .zip(&self.comps)
            .map(|(id, c)| c.states.binary_search(id).ok().map(|i| i as u32))
            .collect()
    }

    /// Labeled successors, ordered by label name then by component targets.
    /// Labels nobody outputs only fire when `open` is set. Timeout labels
    /// fire only when no other label is enabled.
    pub(crate) fn successors(&self, s: &[u32], open: bool, out: &mut Vec<(u32, Packed)>) {
        out.clear();
        let mut any_regular = false;
        let mut any_timeout = false;
        for (l, parts) in self.participants.iter().enumerate() {
            if !open && !self.outputs[l] {
                continue;
            }
            let l = l as u32;
            let mut choices: SmallVec<[&[u32]; 8]> = SmallVec::new();
            let mut enabled = true;
            for &c in parts {
                match self.comps[c].moves[s[c] as usize].get(&l) {
                    Some(ts) => choices.push(ts),
                    None => {
                        enabled = false;
                        break;
                    }
                }
            }
            if !enabled {
                continue;
            }
            if self.timeout[l as usize] {
                any_timeout = true;
            } else {
                any_regular = true;
            }
            // cartesian product, first participant most significant
            let mut idx: SmallVec<[usize; 8]> = SmallVec::from_elem(0, parts.len());
            'odometer: loop {
                let mut t: Packed = s.into();
                for (k, &c) in parts.iter().enumerate() {
                    t[c] = choices[k][idx[k]];
                }
                out.push((l, t));
                let mut k = parts.len();
                while k > 0 {
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < choices[k].len() {
                        continue 'odometer;
                    }
                    idx[k] = 0;
                }
                break;
            }
        }
        if any_regular && any_timeout {
            out.retain(|(l, _)| !self.timeout[*l as usize]);
        }
    }

    /// Whether the reachable composite has a cycle, i.e. an infinite run that
    /// does not rely on stuttering at a deadlock.
    pub fn has_infinite_run(&self, open: bool, budget: usize) -> Result<bool, super::McError> {
        // iterative DFS with colors
        let mut color: HashMap<Packed, u8> = HashMap::new();
        let mut buf = Vec::new();
        for root in self.roots() {
            if color.contains_key(&root) {
                continue;
            }
            color.insert(root.clone(), 1);
            self.successors(&root, open, &mut buf);
            let mut stack: Vec<(Packed, Vec<Packed>)> = vec![(root, buf.drain(..).map(|(_, t)| t).collect())];
            while let Some((_, succ)) = stack.last_mut() {
                match succ.pop() {
                    Some(t) => match color.get(&t) {
                        Some(1) => return Ok(true),
                        Some(_) => {}
                        None => {
                            if color.len() >= budget {
                                return Err(super::McError::StateSpaceBudgetExceeded(budget));
                            }
                            color.insert(t.clone(), 1);
                            self.successors(&t, open, &mut buf);
                            let next = buf.drain(..).map(|(_, t)| t).collect();
                            stack.push((t, next));
                        }
                    },
                    None => {
                        let (s, _) = stack.pop().expect("nonempty");
                        color.insert(s, 2);
                    }
                }
            }
        }
        Ok(false)
    }

    /// Reachable composite states, decoded.
    pub fn reachable(&self, open: bool, budget: usize) -> Result<Vec<Vec<StateId>>, super::McError> {
        let mut seen: HashMap<Packed, ()> = HashMap::new();
        let mut order = Vec::new();
        let mut queue = std::collections::VecDeque::new();
        for r in self.roots() {
            if seen.insert(r.clone(), ()).is_none() {
                queue.push_back(r);
            }
        }
        let mut buf = Vec::new();
        while let Some(s) = queue.pop_front() {
            self.successors(&s, open, &mut buf);
            for (_, t) in buf.drain(..) {
                if !seen.contains_key(&t) {
                    if seen.len() >= budget {
                        return Err(super::McError::StateSpaceBudgetExceeded(budget));
                    }
                    seen.insert(t.clone(), ());
                    queue.push_back(t);
                }
            }
            order.push(self.decode(&s));
        }
        Ok(order)
    }
}
