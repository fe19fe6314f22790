//! The TCP connection-establishment case study: two peers, four channels,
//! and a forwarding network that is the vulnerable process.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::ltl::{parse, Formula};
use crate::process::{Label, Process, Prop};
use crate::synthesis::{Component, ThreatModel};
use crate::tmfile::{chan_in, chan_out, make_channel, ChannelMode, ChannelSpec};

pub const MESSAGES: [&str; 4] = ["SYN", "SYN_ACK", "ACK", "FIN"];

/// Peer states. `i0` to `i5` are intermediate states between receiving a
/// message and answering it; `End` is the terminal state.
pub const PEER_STATES: [&str; 18] = [
    "Closed",
    "End",
    "Listen",
    "SYNSent",
    "SYNReceived",
    "Established",
    "FINWait1",
    "FINWait2",
    "CloseWait",
    "Closing",
    "TimeWait",
    "LastACK",
    "i0",
    "i1",
    "i2",
    "i3",
    "i4",
    "i5",
];

/// Which of the two peers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PeerId {
    One,
    Two,
}

impl PeerId {
    pub fn index(self) -> u8 {
        match self {
            PeerId::One => 1,
            PeerId::Two => 2,
        }
    }

    pub fn other(self) -> PeerId {
        match self {
            PeerId::One => PeerId::Two,
            PeerId::Two => PeerId::One,
        }
    }

    /// Channel the peer sends on: `<i>toN`.
    pub fn snd(self) -> String {
        format!("{}toN", self.index())
    }

    /// Channel the peer receives on: `Nto<i>`.
    pub fn rcv(self) -> String {
        format!("Nto{}", self.index())
    }
}

/// Proposition naming `state` of peer `i`, e.g. `Closed_1`.
pub fn state_prop(state: &str, i: PeerId) -> Prop {
    Prop::new(format!("{state}_{}", i.index()))
}

/// Label of an internal move with no message, e.g. `tau_Closed_End_1`.
pub fn tau(src: &str, dst: &str, i: PeerId) -> Label {
    Label::new(format!("tau_{src}_{dst}_{}", i.index()))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Edge {
    Snd(&'static str),
    Rcv(&'static str),
    Tau,
    Timeout,
}

/// `(source, edge, target)` for one peer.
const PEER_EDGES: [(&str, Edge, &str); 24] = [
    ("Closed", Edge::Tau, "End"),
    ("Closed", Edge::Tau, "Listen"),
    ("Closed", Edge::Snd("SYN"), "SYNSent"),
    ("Listen", Edge::Timeout, "Closed"),
    ("Listen", Edge::Rcv("SYN"), "i2"),
    ("i2", Edge::Snd("SYN_ACK"), "SYNReceived"),
    ("SYNSent", Edge::Timeout, "Closed"),
    ("SYNSent", Edge::Rcv("SYN_ACK"), "i0"),
    ("i0", Edge::Snd("ACK"), "Established"),
    ("SYNSent", Edge::Rcv("SYN"), "i1"),
    ("i1", Edge::Snd("ACK"), "SYNReceived"),
    ("SYNReceived", Edge::Rcv("ACK"), "Established"),
    ("Established", Edge::Rcv("FIN"), "i3"),
    ("i3", Edge::Snd("ACK"), "CloseWait"),
    ("CloseWait", Edge::Snd("FIN"), "LastACK"),
    ("LastACK", Edge::Rcv("ACK"), "Closed"),
    ("Established", Edge::Snd("FIN"), "FINWait1"),
    ("FINWait1", Edge::Rcv("ACK"), "FINWait2"),
    ("FINWait2", Edge::Rcv("FIN"), "i5"),
    ("i5", Edge::Snd("ACK"), "TimeWait"),
    ("TimeWait", Edge::Tau, "Closed"),
    ("FINWait1", Edge::Rcv("FIN"), "i4"),
    ("i4", Edge::Snd("ACK"), "Closing"),
    ("Closing", Edge::Rcv("ACK"), "Closed"),
];

/// One TCP peer. Sends are outputs `<i>toN_in_<m>`, receives are inputs
/// `Nto<i>_out_<m>`, moves without a message are fresh `tau_*` outputs, and
/// `Listen -> Closed`, `SYNSent -> Closed` are timeouts.
pub fn tcp_peer(i: PeerId) -> Process {
    let (snd, rcv) = (i.snd(), i.rcv());
    let mut b = Process::builder("Closed")
        .props(PEER_STATES.iter().map(|s| state_prop(s, i)))
        .inputs(MESSAGES.iter().map(|m| chan_out(&rcv, m)))
        .outputs(MESSAGES.iter().map(|m| chan_in(&snd, m)));
    for s in PEER_STATES {
        b = b.label(s, [state_prop(s, i)]);
    }
    for (src, edge, dst) in &PEER_EDGES {
        let label = match edge {
            Edge::Snd(m) => chan_in(&snd, m),
            Edge::Rcv(m) => chan_out(&rcv, m),
            Edge::Tau | Edge::Timeout => {
                let l = tau(src, dst, i);
                b = b.outputs([l.clone()]);
                if *edge == Edge::Timeout {
                    b = b.timeout(l.clone());
                }
                l
            }
        };
        b = b.transition(*src, label, *dst);
    }
    b.build().expect("peer model is well formed")
}

/// The nominal network: from `n0` it takes a message from either peer's
/// outbound channel and delivers it to the other peer's inbound channel.
/// States `f1_<m>` and `f2_<m>` hold a message in transit.
pub fn tcp_network() -> Process {
    let mut b = Process::builder("n0");
    for from in [PeerId::One, PeerId::Two] {
        let to = from.other();
        for m in MESSAGES {
            let hold = format!("f{}_{m}", from.index());
            let (take, give) = (chan_out(&from.snd(), m), chan_in(&to.rcv(), m));
            b = b.inputs([take.clone()]).outputs([give.clone()]);
            b = b.transition("n0", take, hold.clone()).transition(hold, give, "n0");
        }
    }
    b.build().expect("network model is well formed")
}

pub fn channel_names() -> [String; 4] {
    [PeerId::One.snd(), PeerId::Two.snd(), PeerId::One.rcv(), PeerId::Two.rcv()]
}

pub fn tcp_channel(name: &str, mode: ChannelMode) -> Process {
    make_channel(&ChannelSpec::new(name, MESSAGES).with_mode(mode)).expect("message set is nonempty")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TcpProperty {
    /// Peer 2 is never established while peer 1 is closed.
    Phi1,
    /// If both peers keep returning to Listen/SYNSent, peer 1 eventually
    /// gets established.
    Phi2,
    /// The peers never get stuck together in a pair of non-final states.
    Phi3,
}

impl TcpProperty {
    pub const ALL: [TcpProperty; 3] = [TcpProperty::Phi1, TcpProperty::Phi2, TcpProperty::Phi3];

    pub fn name(self) -> &'static str {
        match self {
            TcpProperty::Phi1 => "phi1",
            TcpProperty::Phi2 => "phi2",
            TcpProperty::Phi3 => "phi3",
        }
    }

    pub fn formula(self) -> Formula {
        match self {
            TcpProperty::Phi1 => phi1(),
            TcpProperty::Phi2 => phi2(),
            TcpProperty::Phi3 => phi3(),
        }
    }
}

pub fn phi1() -> Formula {
    parse("[](Closed_1 -> !Established_2)").expect("valid formula")
}

pub fn phi2() -> Formula {
    parse("([]<>(Listen_1 && SYNSent_2)) -> <>Established_1").expect("valid formula")
}

/// Conjunction of `!<>[](s1 && s2)` over all pairs of non-`End` states.
pub fn phi3() -> Formula {
    let live = || PEER_STATES.iter().copied().filter(|s| *s != "End");
    Formula::conjunction(live().flat_map(|s1| {
        live().map(move |s2| {
            Formula::not(Formula::eventually(Formula::globally(Formula::and(
                Formula::atom(state_prop(s1, PeerId::One)),
                Formula::atom(state_prop(s2, PeerId::Two)),
            ))))
        })
    }))
}

/// Channel mode used for the shipped TCP models.
pub const DEFAULT_CHANNEL_MODE: ChannelMode = ChannelMode::Blocking;

/// Both peers and all four channels as the target, the network as the
/// vulnerable process.
pub fn tcp_threat_model(prop: TcpProperty, mode: ChannelMode) -> ThreatModel {
    let mut target = vec![Component::new("Peer1", tcp_peer(PeerId::One)), Component::new("Peer2", tcp_peer(PeerId::Two))];
    for c in channel_names() {
        let p = tcp_channel(&c, mode);
        target.push(Component::new(c, p));
    }
    ThreatModel::new(target, vec![Component::new("Network", tcp_network())], prop.formula())
        .expect("TCP threat model is well formed")
}

/// The threat model in the `.tm` format, with channel declarations and the
/// shorthand `chan!MSG` / `chan?MSG` for channel labels.
pub fn tcp_tm_text(prop: TcpProperty, mode: ChannelMode) -> String {
    let mark = |l: &Label, p: &Process| -> String {
        let d = p.direction(l);
        let s = l.as_str();
        let split = if d == '!' { s.split_once("_in_") } else { s.split_once("_out_") };
        match split {
            Some((c, m)) if !s.starts_with("tau_") => format!("{c}{d}{m}"),
            _ => format!("{s}{d}"),
        }
    };
    let mut out = String::new();
    let _ = writeln!(out, "# TCP connection establishment, property {}", prop.name());
    for i in [PeerId::One, PeerId::Two] {
        let p = tcp_peer(i);
        let _ = writeln!(out, "\nprocess Peer{} {{", i.index());
        let _ = writeln!(out, "  init Closed");
        for s in PEER_STATES {
            let _ = writeln!(out, "  state {s} : {}", state_prop(s, i));
        }
        for (src, _, dst) in &PEER_EDGES {
            let t = p
                .transitions()
                .iter()
                .find(|t| t.source.as_str() == *src && t.target.as_str() == *dst)
                .expect("edge exists");
            let timeout = if p.timeouts().contains(&t.label) { " timeout" } else { "" };
            let _ = writeln!(out, "  {src} --{}--> {dst}{timeout}", mark(&t.label, &p));
        }
        let _ = writeln!(out, "}}");
    }
    let net = tcp_network();
    let _ = writeln!(out, "\nprocess Network {{");
    let _ = writeln!(out, "  init n0");
    for t in net.transitions() {
        let _ = writeln!(out, "  {} --{}--> {}", t.source, mark(&t.label, &net), t.target);
    }
    let _ = writeln!(out, "}}\n");
    let mode = match mode {
        ChannelMode::Overwrite => "overwrite",
        ChannelMode::Blocking => "blocking",
    };
    for c in channel_names() {
        let _ = writeln!(out, "channel {c} {{ {} }} {mode}", MESSAGES.join(" "));
    }
    let _ = writeln!(out, "\ntarget Peer1 Peer2 {}", channel_names().join(" "));
    let _ = writeln!(out, "vulnerable Network");
    let _ = writeln!(out, "property {}", prop.formula());
    out
}
