//! Attacker synthesis for distributed protocols.
//!
//! Given a threat model (a target process, vulnerable processes, and an LTL
//! property the nominal system satisfies), the solvers replace each
//! vulnerable process with a gadget, model check the result, and turn
//! violating runs into concrete attacker processes.

pub mod export;
pub mod gadgets;
pub mod ltl;
pub mod modelcheck;
pub mod signature;
pub mod process;
pub mod samples;
pub mod synthesis;
pub mod tcp;
pub mod tmfile;

pub use ltl::{parse as parse_formula, Formula};
pub use process::{
    compose, AbstractProcess, Computation, DeterminismReport, Label, Process, ProcessBuilder, ProcessError, Prop,
    Run, StateClass, StateId, Step, Transition,
};
