use std::collections::BTreeSet;

use korgforge::modelcheck::{CheckOptions, Counterexample};
use korgforge::samples;
use korgforge::synthesis::{
    check_threat_model, render_guarded, solve_exists, solve_exists_recovery, validate, Attacker, Classification,
    Component, NoAttacker, SynthesisOptions, ThreatModel, CLAUSE_SATISFIES,
};
use korgforge::{parse_formula, Process};

fn ts(p: &Process) -> BTreeSet<(String, String, String)> {
    p.transitions().iter().map(|t| (t.source.to_string(), t.label.to_string(), t.target.to_string())).collect()
}

fn set(items: &[(&str, &str, &str)]) -> BTreeSet<(String, String, String)> {
    items.iter().map(|(a, b, c)| (a.to_string(), b.to_string(), c.to_string())).collect()
}

fn attacker(components: Vec<Process>, recovery: bool) -> Attacker {
    Attacker { components, kind: None, recovery, names: vec![], degenerate: vec![], signature: None, source: None }
}

#[test]
fn relay_threat_model_is_valid() {
    let check = check_threat_model(&samples::relay_threat_model(), &CheckOptions::default()).unwrap();
    assert!(check.ok(), "{check:?}");
}

#[test]
fn relay_first_attacker_matches_hand_construction() {
    let tm = samples::relay_threat_model();
    let out = solve_exists(&tm, &SynthesisOptions { limit: 1, ..Default::default() }).unwrap();
    assert_eq!(out.attackers.len(), 1);
    let a = &out.attackers[0];
    let sig = a.signature.as_ref().unwrap().to_string();
    assert_eq!(sig, "A0: [m!] ([m!])^w; A1: [k!] ([n?])^w");
    assert_eq!(ts(&a.components[0]), set(&[("a0", "m", "a1"), ("a1", "m", "a1")]));
    assert_eq!(ts(&a.components[1]), set(&[("a0", "k", "a1"), ("a1", "h", "a1"), ("a1", "n", "a1")]));
    assert!(out.reports[0].valid);
    match a.source.as_ref().unwrap() {
        Counterexample::Lasso { alpha, beta, .. } => {
            let labels = |s: &[korgforge::Step<Vec<korgforge::StateId>>]| {
                s.iter().map(|x| x.label.to_string()).collect::<Vec<_>>()
            };
            assert_eq!(labels(alpha), ["k", "m"]);
            assert_eq!(labels(beta), ["m", "n"]);
        }
        other => panic!("expected a lasso, got {other:?}"),
    }
}

#[test]
fn relay_enumeration_is_sound_and_unique() {
    let tm = samples::relay_threat_model();
    let out = solve_exists(&tm, &SynthesisOptions { limit: 8, ..Default::default() }).unwrap();
    assert!(!out.attackers.is_empty());
    let sigs: BTreeSet<_> = out.attackers.iter().map(|a| a.signature.clone().unwrap()).collect();
    assert_eq!(sigs.len(), out.attackers.len());
    for r in &out.reports {
        assert!(r.valid, "{r:?}");
    }
}

#[test]
fn guard_attackers_classify() {
    let tm = samples::guard_threat_model();
    let opts = CheckOptions::default();
    let r1 = validate(&tm, &attacker(vec![samples::guard_attacker_always()], false), &opts).unwrap();
    assert!(r1.valid);
    assert_eq!(r1.classification, Classification::Forall);
    let r2 = validate(&tm, &attacker(vec![samples::guard_attacker_sometimes()], false), &opts).unwrap();
    assert!(r2.valid);
    assert_eq!(r2.classification, Classification::Exists);
    let r3 = validate(&tm, &attacker(vec![samples::guard_attacker_recovering()], true), &opts).unwrap();
    assert!(r3.valid, "{r3:?}");
    assert_eq!(r3.classification, Classification::Forall);
    assert_eq!(r3.recovery_ok, Some(true));
    let r4 = validate(&tm, &attacker(vec![samples::guard_vulnerable()], false), &opts).unwrap();
    assert!(!r4.valid);
    assert!(r4.failed("violates-property"));
}

#[test]
fn validation_names_failed_clauses() {
    let tm = samples::guard_threat_model();
    let with_prop = Process::builder("a0")
        .props(["x"])
        .outputs(["a", "b", "c"])
        .transition("a0", "b", "a0")
        .build()
        .unwrap();
    let r = validate(&tm, &attacker(vec![with_prop], false), &CheckOptions::default()).unwrap();
    assert!(!r.valid);
    assert!(r.failed("no-atomic-propositions"));
    let r = validate(&tm, &attacker(vec![], false), &CheckOptions::default()).unwrap();
    assert!(r.failed("component-count"));
    let wrong_iface = Process::builder("a0").outputs(["b"]).transition("a0", "b", "a0").build().unwrap();
    let r = validate(&tm, &attacker(vec![wrong_iface], false), &CheckOptions::default()).unwrap();
    assert!(r.failed("interface"));
}

#[test]
fn guard_recovery_synthesis() {
    let tm = samples::guard_threat_model();
    let out = solve_exists_recovery(&tm, &SynthesisOptions::default()).unwrap();
    assert!(!out.attackers.is_empty());
    for (a, r) in out.attackers.iter().zip(&out.reports) {
        assert!(r.valid, "{r:?}");
        assert_eq!(r.recovery_ok, Some(true));
        assert!(samples::guard_vulnerable().is_subprocess_of(&a.components[0]));
    }
    let text = render_guarded(&out.attackers[0]);
    assert!(text.contains("/* recovery */"), "{text}");
}

#[test]
fn nondeterministic_vulnerable_blocks_recovery() {
    let q = Process::builder("q0")
        .outputs(["a", "b", "c"])
        .transition("q0", "a", "q0")
        .transition("q0", "a", "q1")
        .transition("q1", "a", "q0")
        .build()
        .unwrap();
    let tm = ThreatModel::new(
        vec![Component::new("P", samples::guard_target())],
        vec![Component::new("Q", q)],
        parse_formula("[]OK").unwrap(),
    )
    .unwrap();
    let out = solve_exists_recovery(&tm, &SynthesisOptions::default()).unwrap();
    assert!(out.attackers.is_empty());
    assert_eq!(out.reason, Some(NoAttacker::NonDeterministicVulnerable(vec!["Q".into()])));
}

#[test]
fn false_property_fails_threat_model_check() {
    let tm = ThreatModel::new(
        vec![Component::new("P", samples::guard_target())],
        vec![Component::new("Q", samples::guard_vulnerable())],
        parse_formula("false").unwrap(),
    )
    .unwrap();
    let check = check_threat_model(&tm, &CheckOptions::default()).unwrap();
    assert_eq!(check.failures, vec![CLAUSE_SATISFIES.to_string()]);
    assert!(solve_exists(&tm, &SynthesisOptions::default()).is_err());
}

#[test]
fn no_attacker_when_gadgets_cannot_hurt() {
    // the vulnerable process only touches a label the target ignores
    let target = Process::builder("p0")
        .props(["ok"])
        .inputs(["x"])
        .label("p0", ["ok"])
        .transition("p0", "x", "p0")
        .build()
        .unwrap();
    let q = Process::builder("q0").outputs(["x"]).transition("q0", "x", "q0").build().unwrap();
    let tm = ThreatModel::new(
        vec![Component::new("P", target)],
        vec![Component::new("Q", q)],
        parse_formula("[]ok").unwrap(),
    )
    .unwrap();
    let out = solve_exists(&tm, &SynthesisOptions::default()).unwrap();
    assert!(out.attackers.is_empty());
    assert_eq!(out.reason, Some(NoAttacker::PropertyHoldsUnderGadgets));
}

#[test]
fn reserved_atoms_are_rejected() {
    let err = ThreatModel::new(
        vec![Component::new("P", samples::guard_target())],
        vec![Component::new("Q", samples::guard_vulnerable())],
        parse_formula("[]recover_0").unwrap(),
    )
    .unwrap_err();
    assert!(err.to_string().contains("reserved"));
}
