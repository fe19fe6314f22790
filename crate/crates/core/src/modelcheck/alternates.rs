//! Further counterexamples that share a cycle with an earlier one but reach
//! it along a different stem of the same length.
//!
//! Independent events often commute, so one accepting cycle can be reached
//! by several shortest stems that differ only in the order in which a
//! projected component sees its events. Those are distinct attacks.

use std::collections::{HashMap, HashSet, VecDeque};

use super::system::{Packed, System};
use super::{CheckOptions, Counterexample, GlobalState, McError};
use crate::ltl::{eval_lasso, Formula};
use crate::process::Step;
use crate::signature::ProjectionTarget;

/// Per target: projected label ids so far and whether it has recovered.
type Key = Vec<(Vec<u32>, bool)>;

struct Tracker {
    /// per target: component index, label membership, daisy state index
    targets: Vec<(usize, Vec<bool>, Option<u32>)>,
}

impl Tracker {
    fn new(sys: &System, targets: &[ProjectionTarget]) -> Self {
        let targets = targets
            .iter()
            .map(|t| {
                let member = sys.labels().iter().map(|l| t.interface.contains(l)).collect();
                let daisy = t.daisy_state.as_ref().and_then(|d| sys.state_index(t.component, d));
                (t.component, member, daisy)
            })
            .collect();
        Self { targets }
    }

    fn start(&self, s: &[u32]) -> Key {
        self.targets.iter().map(|(c, _, d)| (Vec::new(), d.is_some_and(|d| s[*c] != d))).collect()
    }

    fn step(&self, key: &Key, label: u32, to: &[u32]) -> Key {
        let mut next = key.clone();
        for ((events, recovered), (c, member, daisy)) in next.iter_mut().zip(&self.targets) {
            if *recovered {
                continue;
            }
            if member[label as usize] {
                events.push(label);
            }
            if daisy.is_some_and(|d| to[*c] != d) {
                *recovered = true;
            }
        }
        next
    }
}

struct Node {
    state: Packed,
    key: Key,
    parent: usize,
    label: u32,
}

/// Emits counterexamples with the cycle (or final deadlock) of `base` and
/// every stem of the same length whose projection differs. Returns `true`
/// when `emit` asks to stop. This round is best effort: if it would exceed
/// the state budget it ends early without an error.
pub(super) fn alternate_stems(
    sys: &System,
    f: &Formula,
    base: &Counterexample,
    targets: &[ProjectionTarget],
    opts: &CheckOptions,
    emit: &mut dyn FnMut(Counterexample) -> Result<bool, McError>,
) -> Result<bool, McError> {
    let depth = base.alpha().len();
    let Some(goal) = sys.encode(base.alpha_end()) else {
        return Ok(false);
    };
    if depth == 0 || targets.is_empty() || matches!(base, Counterexample::BadPrefix { .. }) {
        return Ok(false);
    }
    let Some(on_path) = exact_paths(sys, &goal, depth, opts) else {
        return Ok(false);
    };
    let tracker = Tracker::new(sys, targets);
    let mut nodes: Vec<Node> = Vec::new();
    let mut seen: HashSet<(Packed, Key)> = HashSet::new();
    let mut layer: VecDeque<usize> = VecDeque::new();
    for r in sys.roots() {
        if !on_path[0].contains(&r) {
            continue;
        }
        let key = tracker.start(&r);
        if seen.insert((r.clone(), key.clone())) {
            nodes.push(Node { state: r, key, parent: usize::MAX, label: 0 });
            layer.push_back(nodes.len() - 1);
        }
    }
    let mut buf = Vec::new();
    for d in 0..depth {
        // a stem may revisit a state, so duplicates only count within a layer
        seen.clear();
        let mut next = VecDeque::new();
        for &n in &layer {
            sys.successors(&nodes[n].state, opts.open_inputs, &mut buf);
            for (l, t) in buf.drain(..) {
                if !on_path[d + 1].contains(&t) {
                    continue;
                }
                let key = tracker.step(&nodes[n].key, l, &t);
                if seen.insert((t.clone(), key.clone())) {
                    if nodes.len() >= opts.state_budget {
                        return Ok(false);
                    }
                    nodes.push(Node { state: t, key, parent: n, label: l });
                    next.push_back(nodes.len() - 1);
                }
            }
        }
        layer = next;
    }
    for &n in &layer {
        if nodes[n].state != goal {
            continue;
        }
        let mut chain = Vec::new();
        let mut at = n;
        while nodes[at].parent != usize::MAX {
            chain.push(at);
            at = nodes[at].parent;
        }
        chain.reverse();
        let start: GlobalState = sys.decode(&nodes[at].state);
        let alpha: Vec<Step<GlobalState>> = chain
            .iter()
            .map(|&k| Step {
                source: sys.decode(&nodes[nodes[k].parent].state),
                label: sys.label(nodes[k].label).clone(),
                target: sys.decode(&nodes[k].state),
            })
            .collect();
        let cex = match base {
            Counterexample::Lasso { beta, .. } => Counterexample::Lasso { start, alpha, beta: beta.clone() },
            _ => Counterexample::Deadlock { start, alpha },
        };
        if eval_lasso(f, &sys.computation(&cex)).unwrap_or(true) {
            continue;
        }
        if emit(cex)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// For each step `d` in `0..=depth`, the states lying on some path of
/// exactly `depth` steps from a root to `goal`.
fn exact_paths(sys: &System, goal: &Packed, depth: usize, opts: &CheckOptions) -> Option<Vec<HashSet<Packed>>> {
    let mut layers: Vec<HashSet<Packed>> = vec![sys.roots().into_iter().collect()];
    let mut edges: Vec<HashMap<Packed, Vec<Packed>>> = Vec::new();
    let mut total = 0usize;
    let mut buf = Vec::new();
    for d in 0..depth {
        let mut next = HashSet::new();
        let mut out: HashMap<Packed, Vec<Packed>> = HashMap::new();
        for s in &layers[d] {
            sys.successors(s, opts.open_inputs, &mut buf);
            let succ: Vec<Packed> = buf.drain(..).map(|(_, t)| t).collect();
            next.extend(succ.iter().cloned());
            out.insert(s.clone(), succ);
        }
        total += next.len();
        if total >= opts.state_budget {
            return None;
        }
        layers.push(next);
        edges.push(out);
    }
    let mut keep: Vec<HashSet<Packed>> = vec![HashSet::new(); depth + 1];
    if layers[depth].contains(goal) {
        keep[depth].insert(goal.clone());
    }
    for d in (0..depth).rev() {
        let k: HashSet<Packed> =
            edges[d].iter().filter(|(_, ts)| ts.iter().any(|t| keep[d + 1].contains(t))).map(|(s, _)| s.clone()).collect();
        keep[d] = k;
    }
    Some(keep)
}
