//! Tableau translation (Gerth–Peled–Vardi–Wolper) from NNF formulas to
//! state-based Büchi automata, degeneralized with a level counter.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::nnf::Nnf;
use super::{Formula, LtlError};
use crate::process::{Computation, Prop};

/// A conjunction of required-present and required-absent propositions.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Guard {
    pub pos: BTreeSet<Prop>,
    pub neg: BTreeSet<Prop>,
}

impl Guard {
    pub fn holds(&self, letter: &BTreeSet<Prop>) -> bool {
        self.pos.iter().all(|p| letter.contains(p)) && !self.neg.iter().any(|p| letter.contains(p))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuchiTransition {
    pub from: usize,
    pub guard: Guard,
    pub to: usize,
}

/// Edge-labeled Büchi automaton over letters `2^AP`: reading letter `σ(i)`
/// moves along an edge whose guard holds on it. Accepting states must be
/// visited infinitely often.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuchiAutomaton {
    num_states: usize,
    initials: Vec<usize>,
    transitions: Vec<BuchiTransition>,
    accepting: BTreeSet<usize>,
    #[serde(skip)]
    out: Vec<Vec<usize>>,
}

impl BuchiAutomaton {
    fn new(
        num_states: usize,
        initials: Vec<usize>,
        transitions: Vec<BuchiTransition>,
        accepting: BTreeSet<usize>,
    ) -> Self {
        let mut out = vec![Vec::new(); num_states];
        for (k, t) in transitions.iter().enumerate() {
            out[t.from].push(k);
        }
        Self { num_states, initials, transitions, accepting, out }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn initials(&self) -> &[usize] {
        &self.initials
    }

    pub fn transitions(&self) -> &[BuchiTransition] {
        &self.transitions
    }

    pub fn accepting(&self) -> &BTreeSet<usize> {
        &self.accepting
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.accepting.contains(&q)
    }

    /// Outgoing transitions of `q`, in construction order.
    pub fn outgoing(&self, q: usize) -> impl Iterator<Item = &BuchiTransition> {
        self.out[q].iter().map(move |&k| &self.transitions[k])
    }

    /// States from which some infinite word is accepted.
    pub fn live_states(&self) -> BTreeSet<usize> {
        let succ = |q: usize| self.outgoing(q).map(|t| t.to).collect::<Vec<_>>();
        let reaches = |from: usize| {
            let mut seen = vec![false; self.num_states];
            let mut queue: VecDeque<usize> = succ(from).into();
            while let Some(q) = queue.pop_front() {
                if !std::mem::replace(&mut seen[q], true) {
                    queue.extend(succ(q));
                }
            }
            seen
        };
        let good: Vec<usize> = self.accepting.iter().copied().filter(|&q| reaches(q)[q]).collect();
        (0..self.num_states).filter(|&q| good.contains(&q) || good.iter().any(|&g| reaches(q)[g])).collect()
    }

    /// Drops states with empty language. Afterwards a reachable state set
    /// is empty exactly when no extension of the input read so far can be
    /// accepted.
    pub fn pruned(&self) -> BuchiAutomaton {
        let live = self.live_states();
        let remap: BTreeMap<usize, usize> = live.iter().enumerate().map(|(i, &q)| (q, i)).collect();
        let transitions = self
            .transitions
            .iter()
            .filter_map(|t| {
                Some(BuchiTransition { from: *remap.get(&t.from)?, guard: t.guard.clone(), to: *remap.get(&t.to)? })
            })
            .collect();
        BuchiAutomaton::new(
            live.len(),
            self.initials.iter().filter_map(|q| remap.get(q).copied()).collect(),
            transitions,
            self.accepting.iter().filter_map(|q| remap.get(q).copied()).collect(),
        )
    }

    /// Whether the automaton accepts the infinite word `c`.
    pub fn accepts_lasso(&self, c: &Computation) -> Result<bool, LtlError> {
        let cycle = match &c.cycle {
            Some(cy) if !cy.is_empty() => cy,
            _ => return Err(LtlError::FiniteComputation),
        };
        let stem_len = c.stem.len();
        let n = stem_len + cycle.len();
        let letter = |i: usize| if i < stem_len { &c.stem[i] } else { &cycle[i - stem_len] };
        let next = |i: usize| if i + 1 < n { i + 1 } else { stem_len };
        let id = |i: usize, q: usize| i * self.num_states + q;
        let succ = |i: usize, q: usize| {
            self.outgoing(q).filter(|t| t.guard.holds(letter(i))).map(|t| (next(i), t.to)).collect::<Vec<_>>()
        };

        let total = n * self.num_states;
        let mut reach = vec![false; total];
        let mut queue = VecDeque::new();
        for &q in &self.initials {
            if !std::mem::replace(&mut reach[id(0, q)], true) {
                queue.push_back((0, q));
            }
        }
        while let Some((i, q)) = queue.pop_front() {
            for (j, r) in succ(i, q) {
                if !std::mem::replace(&mut reach[id(j, r)], true) {
                    queue.push_back((j, r));
                }
            }
        }
        for i in 0..n {
            for &q in &self.accepting {
                if !reach[id(i, q)] {
                    continue;
                }
                // does (i, q) lie on a cycle?
                let mut seen = vec![false; total];
                let mut queue: VecDeque<(usize, usize)> = succ(i, q).into();
                while let Some((j, r)) = queue.pop_front() {
                    if (j, r) == (i, q) {
                        return Ok(true);
                    }
                    if !std::mem::replace(&mut seen[id(j, r)], true) {
                        queue.extend(succ(j, r));
                    }
                }
            }
        }
        Ok(false)
    }
}

/// Automaton accepting exactly the words violating `f`.
pub fn negate_to_buchi(f: &Formula) -> BuchiAutomaton {
    translate(&super::nnf::to_nnf(f, true))
}

/// Automaton accepting exactly the words satisfying `f`.
pub fn to_buchi(f: &Formula) -> BuchiAutomaton {
    translate(&f.to_nnf())
}

#[derive(Clone, Debug)]
enum Sub {
    True,
    False,
    Lit(Prop, bool),
    And(usize, usize),
    Or(usize, usize),
    Next(usize),
    Until(usize, usize),
    Release(usize, usize),
}

#[derive(Default)]
struct Interner {
    subs: Vec<Sub>,
    ids: HashMap<Nnf, usize>,
    lits: HashMap<(Prop, bool), usize>,
}

impl Interner {
    fn intern(&mut self, f: &Nnf) -> usize {
        if let Some(&id) = self.ids.get(f) {
            return id;
        }
        let sub = match f {
            Nnf::True => Sub::True,
            Nnf::False => Sub::False,
            Nnf::Lit(p, b) => Sub::Lit(p.clone(), *b),
            Nnf::And(a, b) => Sub::And(self.intern(a), self.intern(b)),
            Nnf::Or(a, b) => Sub::Or(self.intern(a), self.intern(b)),
            Nnf::Next(a) => Sub::Next(self.intern(a)),
            Nnf::Until(a, b) => Sub::Until(self.intern(a), self.intern(b)),
            Nnf::Release(a, b) => Sub::Release(self.intern(a), self.intern(b)),
        };
        let id = self.subs.len();
        if let Sub::Lit(p, b) = &sub {
            self.lits.insert((p.clone(), *b), id);
        }
        self.subs.push(sub);
        self.ids.insert(f.clone(), id);
        id
    }
}

type Set = BTreeSet<usize>;

const INIT: usize = usize::MAX;

struct Pending {
    incoming: Set,
    new: Set,
    old: Set,
    next: Set,
}

struct TableauNode {
    incoming: Set,
    old: Set,
}

fn translate(f: &Nnf) -> BuchiAutomaton {
    let mut interner = Interner::default();
    let root = interner.intern(f);
    let subs = &interner.subs;

    let mut nodes: Vec<TableauNode> = Vec::new();
    let mut index: HashMap<(Set, Set), usize> = HashMap::new();
    let mut work = vec![Pending {
        incoming: Set::from([INIT]),
        new: Set::from([root]),
        old: Set::new(),
        next: Set::new(),
    }];

    while let Some(mut node) = work.pop() {
        let Some(eta) = node.new.pop_first() else {
            let key = (node.old, node.next);
            if let Some(&k) = index.get(&key) {
                nodes[k].incoming.extend(node.incoming);
            } else {
                let k = nodes.len();
                work.push(Pending { incoming: Set::from([k]), new: key.1.clone(), old: Set::new(), next: Set::new() });
                nodes.push(TableauNode { incoming: node.incoming, old: key.0.clone() });
                index.insert(key, k);
            }
            continue;
        };
        if node.old.contains(&eta) {
            work.push(node);
            continue;
        }
        match &subs[eta] {
            Sub::True => work.push(node),
            Sub::False => {}
            Sub::Lit(p, b) => {
                let clash = interner.lits.get(&(p.clone(), !b)).is_some_and(|n| node.old.contains(n));
                if !clash {
                    node.old.insert(eta);
                    work.push(node);
                }
            }
            Sub::And(a, b) => {
                node.old.insert(eta);
                for x in [a, b] {
                    if !node.old.contains(x) {
                        node.new.insert(*x);
                    }
                }
                work.push(node);
            }
            Sub::Next(a) => {
                node.old.insert(eta);
                node.next.insert(*a);
                work.push(node);
            }
            Sub::Or(a, b) | Sub::Until(a, b) | Sub::Release(a, b) => {
                let (first, carry, second): (Vec<usize>, bool, Vec<usize>) = match &subs[eta] {
                    Sub::Or(..) => (vec![*a], false, vec![*b]),
                    Sub::Until(..) => (vec![*a], true, vec![*b]),
                    _ => (vec![*b], true, vec![*a, *b]),
                };
                node.old.insert(eta);
                let mut n1 = Pending {
                    incoming: node.incoming.clone(),
                    new: node.new.clone(),
                    old: node.old.clone(),
                    next: node.next.clone(),
                };
                n1.new.extend(first.into_iter().filter(|x| !n1.old.contains(x)));
                if carry {
                    n1.next.insert(eta);
                }
                node.new.extend(second.into_iter().filter(|x| !node.old.contains(x)));
                // second branch is processed after the first
                work.push(node);
                work.push(n1);
            }
        }
    }

    // Generalized acceptance: one set per Until subformula.
    let untils: Vec<(usize, usize)> = subs
        .iter()
        .enumerate()
        .filter_map(|(id, s)| match s {
            Sub::Until(_, b) => Some((id, *b)),
            _ => None,
        })
        .collect();
    let in_set = |node: usize, k: usize| {
        let (u, b) = untils[k];
        !nodes[node].old.contains(&u) || nodes[node].old.contains(&b)
    };
    let guard_of = |node: usize| {
        let mut g = Guard::default();
        for &s in &nodes[node].old {
            if let Sub::Lit(p, b) = &subs[s] {
                if *b {
                    g.pos.insert(p.clone());
                } else {
                    g.neg.insert(p.clone());
                }
            }
        }
        g
    };
    // successors of tableau nodes, INIT mapped to index nodes.len()
    let init = nodes.len();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); nodes.len() + 1];
    for (k, n) in nodes.iter().enumerate() {
        for &i in &n.incoming {
            succ[if i == INIT { init } else { i }].push(k);
        }
    }
    let guards: Vec<Guard> = (0..nodes.len()).map(guard_of).collect();

    // Degeneralize: level c counts acceptance sets seen in order; a state
    // is accepting when c reaches the number of sets.
    let levels = untils.len();
    let advance = |node: usize, from: usize| {
        let mut c = if from == levels { 0 } else { from };
        while c < levels && in_set(node, c) {
            c += 1;
        }
        c
    };
    let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut order: Vec<(usize, usize)> = vec![(init, 0)];
    ids.insert((init, 0), 0);
    let mut transitions = Vec::new();
    let mut head = 0;
    while head < order.len() {
        let (node, c) = order[head];
        let from = head;
        head += 1;
        for &m in &succ[node] {
            let key = (m, if levels == 0 { 0 } else { advance(m, c) });
            let to = *ids.entry(key).or_insert_with(|| {
                order.push(key);
                order.len() - 1
            });
            transitions.push(BuchiTransition { from, guard: guards[m].clone(), to });
        }
    }
    let accepting = order
        .iter()
        .enumerate()
        .filter(|(_, &(node, c))| node != init && (levels == 0 || c == levels))
        .map(|(k, _)| k)
        .collect();
    BuchiAutomaton::new(order.len(), vec![0], transitions, accepting)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{eval_lasso, parse};

    fn letter(ps: &[&str]) -> BTreeSet<Prop> {
        ps.iter().map(|p| Prop::from(*p)).collect()
    }

    #[test]
    fn globally_p_negation() {
        let a = negate_to_buchi(&parse("[]p").unwrap());
        let c = Computation::lasso(vec![], vec![letter(&["p"]), letter(&[])]);
        assert!(a.accepts_lasso(&c).unwrap());
        let c = Computation::lasso(vec![], vec![letter(&["p"])]);
        assert!(!a.accepts_lasso(&c).unwrap());
    }

    #[test]
    fn true_negation_accepts_nothing() {
        let a = negate_to_buchi(&Formula::True);
        assert!(a.live_states().is_empty());
        let c = Computation::lasso(vec![], vec![letter(&[])]);
        assert!(!a.accepts_lasso(&c).unwrap());
    }

    #[test]
    fn relay_word_is_accepted_by_negated_fg() {
        let f = parse("<>[]l").unwrap();
        let c = Computation::lasso(vec![letter(&[]), letter(&[])], vec![letter(&[]), letter(&["l"])]);
        assert!(negate_to_buchi(&f).accepts_lasso(&c).unwrap());
        assert!(!eval_lasso(&f, &c).unwrap());
    }

    #[test]
    fn many_persistence_conjuncts_stay_small() {
        let mut conj = Vec::new();
        for i in 0..17 {
            for j in 0..17 {
                conj.push(Formula::not(Formula::eventually(Formula::globally(Formula::and(
                    Formula::atom(format!("a{i}").as_str()),
                    Formula::atom(format!("b{j}").as_str()),
                )))));
            }
        }
        let a = negate_to_buchi(&Formula::conjunction(conj));
        assert!(a.num_states() < 1000, "{}", a.num_states());
    }

    #[test]
    fn agrees_with_semantics_on_samples() {
        let words = [
            Computation::lasso(vec![letter(&["a"])], vec![letter(&["b"]), letter(&[])]),
            Computation::lasso(vec![], vec![letter(&["a", "b"])]),
            Computation::lasso(vec![letter(&[]), letter(&["b"])], vec![letter(&["a"])]),
        ];
        for text in ["a U b", "[]<>b", "<>[]a", "X (a -> X b)", "!(a U (b && X a))", "([]<>a) -> <>b"] {
            let f = parse(text).unwrap();
            let neg = negate_to_buchi(&f);
            let pos = to_buchi(&f);
            for w in &words {
                let sat = eval_lasso(&f, w).unwrap();
                assert_eq!(neg.accepts_lasso(w).unwrap(), !sat, "{text} on {w:?}");
                assert_eq!(pos.accepts_lasso(w).unwrap(), sat, "{text} on {w:?}");
            }
        }
    }
}
