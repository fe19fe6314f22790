use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet, VecDeque};
use std::rc::Rc;

use smallvec::SmallVec;

use super::system::{Packed, System};
use super::{CheckOptions, Counterexample, GlobalState, McError};
use crate::ltl::{negate_to_buchi, to_buchi, BuchiAutomaton, Formula, Nnf};
use crate::process::Step;

/// Label id used for stuttering at a global deadlock.
const STUTTER: u32 = u32::MAX;

/// `(label, system state)` successors of a system state.
type Moves = Rc<[(u32, u32)]>;
/// `(label, product node)` successors of a product node.
type Edges = Vec<(u32, u64)>;

type Sink<'a> = dyn FnMut(Counterexample) -> Result<bool, McError> + 'a;

struct CompiledGuard {
    pos: SmallVec<[u32; 4]>,
    neg: SmallVec<[u32; 4]>,
}

/// Interned system states with cached successors and propositions. One
/// explorer can serve several searches over the same system.
pub(super) struct Explorer<'a> {
    sys: &'a System,
    opts: &'a CheckOptions,
    states: Vec<Packed>,
    index: HashMap<Packed, u32>,
    props: Vec<SmallVec<[u32; 4]>>,
    succ: Vec<Option<Moves>>,
    buf: Vec<(u32, Packed)>,
}

impl<'a> Explorer<'a> {
    pub(super) fn new(sys: &'a System, opts: &'a CheckOptions) -> Self {
        Self { sys, opts, states: Vec::new(), index: HashMap::new(), props: Vec::new(), succ: Vec::new(), buf: Vec::new() }
    }

    fn intern(&mut self, s: Packed) -> u32 {
        match self.index.entry(s) {
            Entry::Occupied(e) => *e.get(),
            Entry::Vacant(e) => {
                let id = self.states.len() as u32;
                let mut props = SmallVec::new();
                self.sys.for_each_prop(e.key(), |p| props.push(p));
                props.sort_unstable();
                self.states.push(e.key().clone());
                self.props.push(props);
                self.succ.push(None);
                e.insert(id);
                id
            }
        }
    }

    fn roots(&mut self) -> Vec<u32> {
        self.sys.roots().into_iter().map(|r| self.intern(r)).collect()
    }

    fn successors(&mut self, s: u32) -> Moves {
        if let Some(v) = &self.succ[s as usize] {
            return v.clone();
        }
        let mut buf = std::mem::take(&mut self.buf);
        self.sys.successors(&self.states[s as usize], self.opts.open_inputs, &mut buf);
        let mut out: Vec<(u32, u32)> = buf.drain(..).map(|(l, t)| (l, self.intern(t))).collect();
        self.buf = buf;
        if out.is_empty() && self.opts.stutter_deadlocks {
            out.push((STUTTER, s));
        }
        let rc: Moves = out.into();
        self.succ[s as usize] = Some(rc.clone());
        rc
    }

    fn holds(&self, g: &CompiledGuard, s: u32) -> bool {
        let props = &self.props[s as usize];
        g.pos.iter().all(|p| props.binary_search(p).is_ok()) && !g.neg.iter().any(|p| props.binary_search(p).is_ok())
    }

    fn decode(&self, s: u32) -> GlobalState {
        self.sys.decode(&self.states[s as usize])
    }

    fn steps(&self, start: u32, path: &[(u32, u32)]) -> Vec<Step<GlobalState>> {
        let mut at = start;
        let mut out = Vec::new();
        for &(l, t) in path {
            if l != STUTTER {
                out.push(Step { source: self.decode(at), label: self.sys.label(l).clone(), target: self.decode(t) });
            }
            at = t;
        }
        out
    }

    fn label_name(&self, l: u32) -> &str {
        if l == STUTTER {
            ""
        } else {
            self.sys.label(l).as_str()
        }
    }
}

fn compile(sys: &System, a: &BuchiAutomaton) -> Vec<CompiledGuard> {
    let idx = |p| sys.prop_index(p).expect("atoms are checked before the search");
    a.transitions()
        .iter()
        .map(|t| CompiledGuard { pos: t.guard.pos.iter().map(idx).collect(), neg: t.guard.neg.iter().map(idx).collect() })
        .collect()
}

fn outgoing_ids(a: &BuchiAutomaton) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); a.num_states()];
    for (k, t) in a.transitions().iter().enumerate() {
        out[t.from].push(k);
    }
    out
}

fn pack(s: u32, q: u32) -> u64 {
    (u64::from(s) << 32) | u64::from(q)
}

fn unpack(n: u64) -> (u32, u32) {
    ((n >> 32) as u32, n as u32)
}

struct Product<'p, 'a> {
    ex: &'p mut Explorer<'a>,
    automaton: BuchiAutomaton,
    guards: Vec<CompiledGuard>,
    out: Vec<Vec<usize>>,
}

impl Product<'_, '_> {
    /// Successors ordered by system successor, then automaton edge.
    fn successors(&mut self, n: u64) -> Edges {
        let (s, q) = unpack(n);
        let sys_succ = self.ex.successors(s);
        let edges: SmallVec<[u32; 8]> = self.out[q as usize]
            .iter()
            .filter(|&&k| self.ex.holds(&self.guards[k], s))
            .map(|&k| self.automaton.transitions()[k].to as u32)
            .collect();
        let mut v = Vec::with_capacity(sys_succ.len() * edges.len());
        for &(l, t) in sys_succ.iter() {
            for &q2 in &edges {
                v.push((l, pack(t, q2)));
            }
        }
        v
    }

    fn accepting(&self, n: u64) -> bool {
        self.automaton.is_accepting(unpack(n).1 as usize)
    }

    /// Shortest path (by steps) from any of `starts` to `goal`, returning
    /// the origin and the steps; with `nonempty` at least one step is taken.
    fn shortest_path(
        &mut self,
        starts: &[u64],
        goal: u64,
        nonempty: bool,
        budget: usize,
    ) -> Result<Option<(u64, Edges)>, McError> {
        if !nonempty && starts.contains(&goal) {
            return Ok(Some((goal, Vec::new())));
        }
        let mut parent: HashMap<u64, Option<(u64, u32)>> = HashMap::new();
        let mut queue = VecDeque::new();
        for &s in starts {
            if parent.insert(s, None).is_none() {
                queue.push_back(s);
            }
        }
        while let Some(n) = queue.pop_front() {
            for (l, t) in self.successors(n) {
                if t == goal {
                    let mut path = vec![(l, t)];
                    let mut at = n;
                    while let Some(Some((p, l2))) = parent.get(&at) {
                        path.push((*l2, at));
                        at = *p;
                    }
                    path.reverse();
                    return Ok(Some((at, path)));
                }
                if let Entry::Vacant(e) = parent.entry(t) {
                    e.insert(Some((n, l)));
                    if parent.len() > budget {
                        return Err(McError::StateSpaceBudgetExceeded(budget));
                    }
                    queue.push_back(t);
                }
            }
        }
        Ok(None)
    }

    /// Builds a short lasso through the accepting `seed`: the shortest cycle
    /// back to it, rotated to its least label sequence, then the shortest
    /// stem to the rotated cycle start.
    fn lasso(&mut self, roots: &[u64], seed: u64, budget: usize) -> Result<Counterexample, McError> {
        let (_, cycle) = self.shortest_path(&[seed], seed, true, budget)?.expect("seed lies on a cycle");
        let len = cycle.len();
        let names = |r: usize| -> Vec<&str> { (0..len).map(|k| self.ex.label_name(cycle[(r + k) % len].0)).collect() };
        let best = (0..len).min_by(|&a, &b| names(a).cmp(&names(b)).then(a.cmp(&b))).unwrap_or(0);
        let rotated: Vec<(u32, u64)> = (0..len).map(|k| cycle[(best + k) % len]).collect();
        let entry = if best == 0 { seed } else { cycle[best - 1].1 };
        let (root, stem) = self.shortest_path(roots, entry, false, budget)?.expect("cycle start is reachable");

        let sys = |path: &[(u32, u64)]| path.iter().map(|&(l, n)| (l, unpack(n).0)).collect::<Vec<_>>();
        let start = unpack(root).0;
        let alpha = self.ex.steps(start, &sys(&stem));
        let start_state = self.ex.decode(start);
        if rotated.iter().all(|(l, _)| *l == STUTTER) {
            return Ok(Counterexample::Deadlock { start: start_state, alpha });
        }
        let beta = self.ex.steps(unpack(entry).0, &sys(&rotated));
        Ok(Counterexample::Lasso { start: start_state, alpha, beta })
    }
}

/// Nested depth-first search for accepting cycles of the product with the
/// automaton of the negated formula. Each accepting seed found is turned
/// into a short lasso and handed to `sink`, which decides whether to stop.
pub(super) fn accepting_cycles(ex: &mut Explorer<'_>, f: &Formula, sink: &mut Sink<'_>) -> Result<bool, McError> {
    let automaton = negate_to_buchi(f);
    let guards = compile(ex.sys, &automaton);
    let out = outgoing_ids(&automaton);
    let budget = ex.opts.state_budget;
    let mut prod = Product { ex, automaton, guards, out };

    const OUTER: u8 = 1;
    const ON_STACK: u8 = 4;
    let mut flags: HashMap<u64, u8> = HashMap::new();
    let q0: Vec<u32> = prod.automaton.initials().iter().map(|&q| q as u32).collect();
    let roots: Vec<u64> = prod.ex.roots().into_iter().flat_map(|s| q0.iter().map(move |&q| pack(s, q))).collect();
    let mut violated = false;

    for &root in &roots {
        if flags.contains_key(&root) {
            continue;
        }
        flags.insert(root, OUTER | ON_STACK);
        let succ = prod.successors(root);
        let mut stack: Vec<(u64, Edges, usize)> = vec![(root, succ, 0)];
        while let Some(top) = stack.last_mut() {
            if top.2 < top.1.len() {
                let t = top.1[top.2].1;
                top.2 += 1;
                let fl = flags.entry(t).or_insert(0);
                if *fl & OUTER == 0 {
                    *fl |= OUTER | ON_STACK;
                    if flags.len() > budget {
                        return Err(McError::StateSpaceBudgetExceeded(budget));
                    }
                    let succ = prod.successors(t);
                    stack.push((t, succ, 0));
                }
                continue;
            }
            let node = top.0;
            if prod.accepting(node) && inner_search(&mut prod, &mut flags, node, budget)? {
                violated = true;
                let cex = prod.lasso(&roots, node, budget)?;
                if sink(cex)? {
                    return Ok(true);
                }
            }
            stack.pop();
            *flags.get_mut(&node).expect("visited") &= !ON_STACK;
        }
    }
    Ok(violated)
}

/// Inner search of the nested DFS: looks for a path from `seed` back to
/// any state on the outer stack.
fn inner_search(prod: &mut Product<'_, '_>, flags: &mut HashMap<u64, u8>, seed: u64, budget: usize) -> Result<bool, McError> {
    const INNER: u8 = 2;
    const ON_STACK: u8 = 4;
    let succ = prod.successors(seed);
    let mut stack: Vec<(Edges, usize)> = vec![(succ, 0)];
    while let Some(top) = stack.last_mut() {
        if top.1 >= top.0.len() {
            stack.pop();
            continue;
        }
        let t = top.0[top.1].1;
        top.1 += 1;
        let fl = flags.entry(t).or_insert(0);
        if *fl & ON_STACK != 0 {
            return Ok(true);
        }
        if *fl & INNER == 0 {
            *fl |= INNER;
            if flags.len() > budget {
                return Err(McError::StateSpaceBudgetExceeded(budget));
            }
            let succ = prod.successors(t);
            stack.push((succ, 0));
        }
    }
    Ok(false)
}

/// Runs visiting every goal infinitely often, found as reachable strongly
/// connected components that contain a cycle and a state for each goal.
/// Components are reported in the order Tarjan's algorithm closes them.
pub(super) fn fair_cycles(ex: &mut Explorer<'_>, goals: &[Nnf], sink: &mut Sink<'_>) -> Result<bool, McError> {
    let budget = ex.opts.state_budget;
    let roots = ex.roots();
    let mut t = Tarjan::default();
    let mut violated = false;

    for &root in &roots {
        if t.seen(root) {
            continue;
        }
        let mut call: Vec<(u32, Moves, usize)> = Vec::new();
        t.open(root);
        call.push((root, ex.successors(root), 0));
        while let Some(top) = call.last_mut() {
            let v = top.0;
            if top.2 < top.1.len() {
                let w = top.1[top.2].1;
                top.2 += 1;
                if !t.seen(w) {
                    if ex.states.len() > budget {
                        return Err(McError::StateSpaceBudgetExceeded(budget));
                    }
                    t.open(w);
                    call.push((w, ex.successors(w), 0));
                } else if t.on_stack[w as usize] {
                    t.low[v as usize] = t.low[v as usize].min(t.index[w as usize]);
                }
                continue;
            }
            call.pop();
            if let Some(parent) = call.last() {
                let p = parent.0 as usize;
                t.low[p] = t.low[p].min(t.low[v as usize]);
            }
            if let Some(comp) = t.close(v) {
                if let Some(cex) = fair_lasso(ex, &roots, &comp, goals) {
                    violated = true;
                    if sink(cex)? {
                        return Ok(true);
                    }
                }
            }
        }
    }
    Ok(violated)
}

#[derive(Default)]
struct Tarjan {
    index: Vec<u32>,
    low: Vec<u32>,
    on_stack: Vec<bool>,
    stack: Vec<u32>,
    next: u32,
}

impl Tarjan {
    const UNSEEN: u32 = u32::MAX;

    fn seen(&self, v: u32) -> bool {
        self.index.get(v as usize).is_some_and(|&i| i != Self::UNSEEN)
    }

    fn open(&mut self, v: u32) {
        let n = v as usize + 1;
        if self.index.len() < n {
            self.index.resize(n, Self::UNSEEN);
            self.low.resize(n, 0);
            self.on_stack.resize(n, false);
        }
        self.index[v as usize] = self.next;
        self.low[v as usize] = self.next;
        self.next += 1;
        self.on_stack[v as usize] = true;
        self.stack.push(v);
    }

    /// Pops the component rooted at `v`, if `v` is a root.
    fn close(&mut self, v: u32) -> Option<Vec<u32>> {
        if self.low[v as usize] != self.index[v as usize] {
            return None;
        }
        let mut comp = Vec::new();
        loop {
            let w = self.stack.pop().expect("component member");
            self.on_stack[w as usize] = false;
            comp.push(w);
            if w == v {
                return Some(comp);
            }
        }
    }
}

/// A lasso through `comp` meeting every goal, or `None` when the component
/// has no cycle or misses a goal. The stem is a shortest path into the
/// component; the cycle then walks to each unmet goal in turn by shortest
/// paths inside the component and back to its entry.
fn fair_lasso(ex: &mut Explorer<'_>, roots: &[u32], comp: &[u32], goals: &[Nnf]) -> Option<Counterexample> {
    let members: HashSet<u32> = comp.iter().copied().collect();
    let has_cycle = comp.len() > 1 || ex.successors(comp[0]).iter().any(|&(_, t)| t == comp[0]);
    if !has_cycle {
        return None;
    }
    let sys = ex.sys;
    // per goal: the members meeting it
    let meeting: Vec<HashSet<u32>> = goals
        .iter()
        .map(|g| {
            comp.iter()
                .copied()
                .filter(|&s| {
                    let props = &ex.props[s as usize];
                    g.holds_in(&|p| sys.prop_index(p).is_some_and(|i| props.binary_search(&i).is_ok()))
                })
                .collect()
        })
        .collect();
    if meeting.iter().any(HashSet::is_empty) {
        return None;
    }
    let (root, stem) = bfs(ex, roots, |s| members.contains(&s), |_| true, false)?;
    let entry = stem.last().map_or(root, |&(_, t)| t);
    let mut cycle: Vec<(u32, u32)> = Vec::new();
    let mut at = entry;
    let mut met: Vec<bool> = meeting.iter().map(|m| m.contains(&entry)).collect();
    for k in 0..goals.len() {
        if met[k] {
            continue;
        }
        let (_, path) = bfs(ex, &[at], |s| meeting[k].contains(&s), |s| members.contains(&s), false)?;
        for &(_, t) in &path {
            for (j, m) in meeting.iter().enumerate() {
                met[j] |= m.contains(&t);
            }
        }
        at = path.last().map_or(at, |&(_, t)| t);
        cycle.extend(path);
    }
    let (_, back) = bfs(ex, &[at], |s| s == entry, |s| members.contains(&s), cycle.is_empty())?;
    cycle.extend(back);

    let start = ex.decode(root);
    let alpha = ex.steps(root, &stem);
    if cycle.iter().all(|&(l, _)| l == STUTTER) {
        return Some(Counterexample::Deadlock { start, alpha });
    }
    let beta = ex.steps(entry, &cycle);
    Some(Counterexample::Lasso { start, alpha, beta })
}

/// Shortest path from one of `starts` to a state satisfying `goal`, moving
/// only through states satisfying `within`. With `nonempty` the path takes
/// at least one step.
fn bfs(
    ex: &mut Explorer<'_>,
    starts: &[u32],
    goal: impl Fn(u32) -> bool,
    within: impl Fn(u32) -> bool,
    nonempty: bool,
) -> Option<(u32, Vec<(u32, u32)>)> {
    if !nonempty {
        if let Some(&s) = starts.iter().find(|&&s| goal(s)) {
            return Some((s, Vec::new()));
        }
    }
    let mut parent: HashMap<u32, Option<(u32, u32)>> = HashMap::new();
    let mut queue = VecDeque::new();
    for &s in starts {
        if parent.insert(s, None).is_none() {
            queue.push_back(s);
        }
    }
    while let Some(n) = queue.pop_front() {
        for &(l, t) in ex.successors(n).iter() {
            if !within(t) {
                continue;
            }
            if goal(t) {
                let mut path = vec![(l, t)];
                let mut at = n;
                while let Some(Some((p, l2))) = parent.get(&at) {
                    path.push((*l2, at));
                    at = *p;
                }
                path.reverse();
                return Some((at, path));
            }
            if let Entry::Vacant(e) = parent.entry(t) {
                e.insert(Some((n, l)));
                queue.push_back(t);
            }
        }
    }
    None
}

/// Breadth-first search over (system state, monitor subset) pairs, where
/// the monitor is the pruned automaton of the formula itself. An empty
/// subset means no continuation can satisfy the formula.
pub(super) fn bad_prefixes(ex: &mut Explorer<'_>, f: &Formula, sink: &mut Sink<'_>) -> Result<bool, McError> {
    let monitor = to_buchi(f).pruned();
    let guards = compile(ex.sys, &monitor);
    let out = outgoing_ids(&monitor);
    let budget = ex.opts.state_budget;

    let mut sets: Vec<Vec<u32>> = Vec::new();
    let mut set_ids: HashMap<Vec<u32>, u32> = HashMap::new();
    let mut intern_set = |v: Vec<u32>, sets: &mut Vec<Vec<u32>>| -> u32 {
        *set_ids.entry(v.clone()).or_insert_with(|| {
            sets.push(v);
            (sets.len() - 1) as u32
        })
    };
    let mut init: Vec<u32> = monitor.initials().iter().map(|&q| q as u32).collect();
    init.sort_unstable();
    init.dedup();
    let m0 = intern_set(init, &mut sets);

    let mut parent: HashMap<u64, Option<(u64, u32)>> = HashMap::new();
    let mut queue = VecDeque::new();
    for s in ex.roots() {
        let n = pack(s, m0);
        if parent.insert(n, None).is_none() {
            queue.push_back(n);
        }
    }
    let mut violated = false;
    while let Some(n) = queue.pop_front() {
        let (s, m) = unpack(n);
        let mut next: Vec<u32> = sets[m as usize]
            .iter()
            .flat_map(|&q| out[q as usize].iter())
            .filter(|&&k| ex.holds(&guards[k], s))
            .map(|&k| monitor.transitions()[k].to as u32)
            .collect();
        next.sort_unstable();
        next.dedup();
        if next.is_empty() {
            violated = true;
            let mut path = Vec::new();
            let mut at = n;
            while let Some(Some((p, l))) = parent.get(&at) {
                path.push((*l, unpack(at).0));
                at = *p;
            }
            path.reverse();
            let start = unpack(at).0;
            let alpha = ex.steps(start, &path);
            let start = ex.decode(start);
            let cex = if path.iter().any(|(l, _)| *l == STUTTER) {
                Counterexample::Deadlock { start, alpha }
            } else {
                Counterexample::BadPrefix { start, alpha }
            };
            if sink(cex)? {
                return Ok(true);
            }
            continue;
        }
        let m2 = intern_set(next, &mut sets);
        for &(l, t) in ex.successors(s).iter() {
            let n2 = pack(t, m2);
            if let Entry::Vacant(e) = parent.entry(n2) {
                e.insert(Some((n, l)));
                if parent.len() > budget {
                    return Err(McError::StateSpaceBudgetExceeded(budget));
                }
                queue.push_back(n2);
            }
        }
    }
    Ok(violated)
}
