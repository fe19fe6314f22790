//! Guarded-command style text for attackers.

use std::fmt::Write as _;

use super::Attacker;
use crate::signature::{ComponentTrace, Direction, Event};

/// One line per event: channel labels `<c>_in_<m>` sent by the attacker
/// print as `c ! m;`, labels `<c>_out_<m>` received print as `c ? m;`.
/// Other labels print as `label !;` or `label ?;`.
fn event_line(e: &Event) -> String {
    let l = e.label.as_str();
    match e.direction {
        Direction::Output => match l.split_once("_in_") {
            Some((c, m)) if !c.is_empty() && !m.is_empty() => format!("{c} ! {m};"),
            _ => format!("{l} !;"),
        },
        Direction::Input => match l.split_once("_out_") {
            Some((c, m)) if !c.is_empty() && !m.is_empty() => format!("{c} ? {m};"),
            _ => format!("{l} ?;"),
        },
    }
}

/// Renders one component's plan.
pub fn render_trace(t: &ComponentTrace, recovery: bool) -> String {
    let mut out = String::new();
    for e in &t.stem {
        let _ = writeln!(out, "{}", event_line(e));
    }
    if recovery {
        let _ = writeln!(out, "/* recovery */");
    } else if let Some(c) = &t.cycle {
        let _ = writeln!(out, "/* cycle */");
        for e in c {
            let _ = writeln!(out, "{}", event_line(e));
        }
    }
    out
}

/// Renders every component of an attacker, each under a comment header.
/// Attackers without a recorded signature are rendered transition by
/// transition instead.
pub fn render_guarded(a: &Attacker) -> String {
    let mut out = String::new();
    for (i, p) in a.components.iter().enumerate() {
        let name = a.names.get(i).map(String::as_str).unwrap_or("?");
        let _ = writeln!(out, "/* A{i} replaces {name} */");
        match a.signature.as_ref().and_then(|s| s.components.get(i)) {
            Some(t) => out.push_str(&render_trace(t, a.recovery)),
            None => {
                for t in p.transitions() {
                    let e = Event {
                        label: t.label.clone(),
                        direction: if p.is_input(&t.label) { Direction::Input } else { Direction::Output },
                    };
                    let _ = writeln!(out, "{}: {} -> {}", t.source, event_line(&e), t.target);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_shorthand() {
        let e = |l: &str, d| Event { label: l.into(), direction: d };
        assert_eq!(event_line(&e("Nto1_in_ACK", Direction::Output)), "Nto1 ! ACK;");
        assert_eq!(event_line(&e("2toN_out_SYN", Direction::Input)), "2toN ? SYN;");
        assert_eq!(event_line(&e("Nto2_in_SYN_ACK", Direction::Output)), "Nto2 ! SYN_ACK;");
        assert_eq!(event_line(&e("k", Direction::Output)), "k !;");
        assert_eq!(event_line(&e("n", Direction::Input)), "n ?;");
    }

    #[test]
    fn recovery_marker() {
        let t = ComponentTrace {
            stem: vec![Event { label: "Nto1_in_ACK".into(), direction: Direction::Output }],
            cycle: None,
            recovered: true,
        };
        assert_eq!(render_trace(&t, true), "Nto1 ! ACK;\n/* recovery */\n");
    }
}
