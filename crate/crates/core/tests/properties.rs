use std::collections::BTreeSet;

use korgforge::export::{process_from_json, process_json};
use korgforge::ltl::{eval_lasso, negate_to_buchi, to_buchi};
use korgforge::signature::{ComponentTrace, Direction, Event};
use korgforge::synthesis::{Component, ThreatModel};
use korgforge::{compose, parse_formula, tmfile, Computation, Formula, Process, Prop};
use proptest::prelude::*;

fn formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        Just(Formula::True),
        Just(Formula::False),
        Just(Formula::atom("p")),
        Just(Formula::atom("q")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            inner.clone().prop_map(Formula::next),
            inner.clone().prop_map(Formula::eventually),
            inner.clone().prop_map(Formula::globally),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::until(a, b)),
        ]
    })
}

fn letter() -> impl Strategy<Value = BTreeSet<Prop>> {
    (any::<bool>(), any::<bool>()).prop_map(|(p, q)| {
        let mut s = BTreeSet::new();
        if p {
            s.insert(Prop::from("p"));
        }
        if q {
            s.insert(Prop::from("q"));
        }
        s
    })
}

fn lasso() -> impl Strategy<Value = Computation> {
    (prop::collection::vec(letter(), 0..4), prop::collection::vec(letter(), 1..4))
        .prop_map(|(stem, cycle)| Computation::lasso(stem, cycle))
}

/// A process with states `s0..s{n-1}`, prop `x`, input `i` and output `o`.
fn process(tag: &'static str) -> impl Strategy<Value = Process> {
    process_with(tag, true)
}

fn process_with(tag: &'static str, props: bool) -> impl Strategy<Value = Process> {
    (1usize..4).prop_flat_map(move |n| {
        (
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec((0..n, 0..2usize, 0..n), 0..6),
        )
            .prop_map(move |(labels, ts)| {
                let (x, i, o) = (format!("x{tag}"), format!("i{tag}"), format!("o{tag}"));
                let mut b = Process::builder("s0").inputs([i.clone()]).outputs([o.clone()]);
                if props {
                    b = b.props([x.clone()]);
                }
                for (s, l) in labels.iter().enumerate() {
                    b = b.state(format!("s{s}"));
                    if props && *l {
                        b = b.label(format!("s{s}"), [x.clone()]);
                    }
                }
                for (s, l, t) in ts {
                    b = b.transition(format!("s{s}"), if l == 0 { i.as_str() } else { o.as_str() }, format!("s{t}"));
                }
                b.build().unwrap()
            })
    })
}

proptest! {
    #[test]
    fn automata_agree_with_lasso_semantics(f in formula(), c in lasso()) {
        let truth = eval_lasso(&f, &c).unwrap();
        prop_assert_eq!(to_buchi(&f).accepts_lasso(&c).unwrap(), truth);
        prop_assert_eq!(negate_to_buchi(&f).accepts_lasso(&c).unwrap(), !truth);
    }

    #[test]
    fn conjuncts_are_equivalent(f in formula(), c in lasso()) {
        let split = Formula::conjunction(f.conjuncts());
        prop_assert_eq!(eval_lasso(&split, &c).unwrap(), eval_lasso(&f, &c).unwrap());
    }

    #[test]
    fn display_parses_back(f in formula()) {
        prop_assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn recurrence_goals_describe_violations(f in formula(), c in lasso()) {
        if let Some(goals) = f.violation_recurrence_goals() {
            // a violation is exactly a cycle meeting every goal
            let cycle = c.cycle.as_ref().unwrap();
            let met = goals.iter().all(|g| cycle.iter().any(|l| g.holds_in(&|p| l.contains(p))));
            prop_assert_eq!(met, !eval_lasso(&f, &c).unwrap());
        }
    }

    #[test]
    fn composition_keeps_every_label_visible(a in process("a"), b in process("b")) {
        let ab = compose(&a, &b).unwrap();
        prop_assert_eq!(ab.states().len(), a.states().len() * b.states().len());
        for t in ab.transitions() {
            prop_assert!(ab.has_label(&t.label));
        }
        let outputs: BTreeSet<_> = a.outputs().union(b.outputs()).cloned().collect();
        prop_assert_eq!(ab.outputs(), &outputs);
        prop_assert!(ab.inputs().is_disjoint(ab.outputs()));
    }

    #[test]
    fn process_json_round_trips(p in process("a")) {
        prop_assert_eq!(process_from_json(&process_json(&p)).unwrap(), p);
    }

    #[test]
    fn threat_model_text_round_trips(p in process("p"), q in process_with("q", false), f in formula()) {
        let f = rename_atoms(&f);
        let tm = ThreatModel::new(vec![Component::new("P", p)], vec![Component::new("Q", q)], f).unwrap();
        prop_assert_eq!(tmfile::parse_str(&tmfile::save(&tm)).unwrap(), tm);
    }

    #[test]
    fn canonical_cycles_are_primitive(stem in prop::collection::vec(0..2u8, 0..3), period in prop::collection::vec(0..2u8, 1..3), reps in 1usize..4) {
        let ev = |b: &u8| Event { label: format!("l{b}").into(), direction: Direction::Output };
        let cycle: Vec<Event> = std::iter::repeat_n(period.iter().map(ev), reps).flatten().collect();
        let t = ComponentTrace { stem: stem.iter().map(ev).collect(), cycle: Some(cycle), recovered: false };
        let c = t.clone().canonical();
        prop_assert_eq!(c.clone().canonical(), c.clone());
        let n = c.cycle.as_ref().unwrap().len();
        prop_assert!(period.len() % n == 0);
        prop_assert!(t.cycle.as_ref().unwrap().iter().enumerate().all(|(k, e)| *e == c.cycle.as_ref().unwrap()[k % n]));
    }
}

/// Maps `p`/`q` onto the target's proposition so the formula is well formed.
fn rename_atoms(f: &Formula) -> Formula {
    let r = |g: &Formula| Box::new(rename_atoms(g));
    match f {
        Formula::Atom(_) => Formula::atom("xp"),
        Formula::True | Formula::False => f.clone(),
        Formula::Not(a) => Formula::Not(r(a)),
        Formula::Next(a) => Formula::Next(r(a)),
        Formula::Eventually(a) => Formula::Eventually(r(a)),
        Formula::Globally(a) => Formula::Globally(r(a)),
        Formula::And(a, b) => Formula::And(r(a), r(b)),
        Formula::Or(a, b) => Formula::Or(r(a), r(b)),
        Formula::Implies(a, b) => Formula::Implies(r(a), r(b)),
        Formula::Until(a, b) => Formula::Until(r(a), r(b)),
    }
}
