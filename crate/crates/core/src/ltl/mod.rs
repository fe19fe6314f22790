//! Linear temporal logic: syntax, parsing, lasso semantics, and translation
//! of negated formulas to Büchi automata.

mod buchi;
mod eval;
mod nnf;
mod parse;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::process::Prop;

pub use buchi::{negate_to_buchi, to_buchi, BuchiAutomaton, BuchiTransition, Guard};
pub use eval::eval_lasso;
pub use nnf::Nnf;
pub use parse::parse;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Formula {
    True,
    False,
    Atom(Prop),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Eventually(Box<Formula>),
    Globally(Box<Formula>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LtlError {
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("computation has no cycle; LTL semantics needs an infinite word")]
    FiniteComputation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SyntacticClass {
    SyntacticSafety,
    General,
}

impl Formula {
    pub fn atom(p: impl Into<Prop>) -> Self {
        Formula::Atom(p.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn next(f: Formula) -> Self {
        Formula::Next(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Self {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn eventually(f: Formula) -> Self {
        Formula::Eventually(Box::new(f))
    }

    pub fn globally(f: Formula) -> Self {
        Formula::Globally(Box::new(f))
    }

    /// Left-nested conjunction; `True` when empty.
    pub fn conjunction(fs: impl IntoIterator<Item = Formula>) -> Self {
        fs.into_iter().reduce(Formula::and).unwrap_or(Formula::True)
    }

    /// Left-nested disjunction; `False` when empty.
    pub fn disjunction(fs: impl IntoIterator<Item = Formula>) -> Self {
        fs.into_iter().reduce(Formula::or).unwrap_or(Formula::False)
    }

    /// Top-level conjuncts, distributing `a -> (b && c)` into
    /// `(a -> b) && (a -> c)` and pushing negation through `||`, `->` and
    /// `!`. Their conjunction is equivalent to `self`.
    /// Duplicates are dropped; order follows the formula.
    pub fn conjuncts(&self) -> Vec<Formula> {
        let mut out = Vec::new();
        self.collect_conjuncts(&mut out);
        let mut seen = BTreeSet::new();
        out.retain(|f| seen.insert(f.clone()));
        out
    }

    fn collect_conjuncts(&self, out: &mut Vec<Formula>) {
        match self {
            Formula::And(a, b) => {
                a.collect_conjuncts(out);
                b.collect_conjuncts(out);
            }
            Formula::Not(g) => match &**g {
                Formula::Not(a) => a.collect_conjuncts(out),
                Formula::Or(a, b) => {
                    Formula::not((**a).clone()).collect_conjuncts(out);
                    Formula::not((**b).clone()).collect_conjuncts(out);
                }
                Formula::Implies(a, b) => {
                    a.collect_conjuncts(out);
                    Formula::not((**b).clone()).collect_conjuncts(out);
                }
                _ => out.push(self.clone()),
            },
            Formula::Implies(a, b) if matches!(**b, Formula::And(..) | Formula::Implies(..)) => {
                let mut inner = Vec::new();
                b.collect_conjuncts(&mut inner);
                out.extend(inner.into_iter().map(|c| Formula::implies((**a).clone(), c)));
            }
            f => out.push(f.clone()),
        }
    }

    /// Goals `x_k` when `!self` is equivalent to a conjunction of `[]<>x_k`
    /// with propositional `x_k`. Such formulas are checked without an
    /// automaton, whose size would be exponential in the number of goals.
    pub fn violation_recurrence_goals(&self) -> Option<Vec<Nnf>> {
        nnf::to_nnf(self, true).recurrence_goals()
    }

    pub fn atoms(&self) -> BTreeSet<Prop> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<Prop>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(p) => {
                out.insert(p.clone());
            }
            Formula::Not(a) | Formula::Next(a) | Formula::Eventually(a) | Formula::Globally(a) => {
                a.collect_atoms(out)
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Until(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => 1,
            Formula::Not(a) | Formula::Next(a) | Formula::Eventually(a) | Formula::Globally(a) => 1 + a.size(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Until(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }

    pub fn to_nnf(&self) -> Nnf {
        nnf::to_nnf(self, false)
    }

    /// Conservative syntactic safety check on the negation normal form.
    pub fn classify(&self) -> SyntacticClass {
        if self.to_nnf().is_syntactic_safety() {
            SyntacticClass::SyntacticSafety
        } else {
            SyntacticClass::General
        }
    }

    fn is_binary(&self) -> bool {
        matches!(self, Formula::And(..) | Formula::Or(..) | Formula::Implies(..) | Formula::Until(..))
    }
}

pub fn classify(f: &Formula) -> SyntacticClass {
    f.classify()
}

/// Concrete syntax: `[]` = G, `<>` = F, `X`, `U`, `!`, `&&`, `||`, `->`.
/// Binary operands are always parenthesized, so the output re-parses to
/// the same tree.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn operand(x: &Formula, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            if x.is_binary() {
                write!(f, "({x})")
            } else {
                write!(f, "{x}")
            }
        }
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Atom(p) => f.write_str(p.as_str()),
            Formula::Not(a) => {
                f.write_str("!")?;
                operand(a, f)
            }
            Formula::Next(a) => {
                f.write_str("X ")?;
                operand(a, f)
            }
            Formula::Eventually(a) => {
                f.write_str("<>")?;
                operand(a, f)
            }
            Formula::Globally(a) => {
                f.write_str("[]")?;
                operand(a, f)
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Until(a, b) => {
                let op = match self {
                    Formula::And(..) => "&&",
                    Formula::Or(..) => "||",
                    Formula::Implies(..) => "->",
                    _ => "U",
                };
                operand(a, f)?;
                write!(f, " {op} ")?;
                operand(b, f)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_phi1() {
        let f = Formula::globally(Formula::implies(
            Formula::atom("Closed_1"),
            Formula::not(Formula::atom("Established_2")),
        ));
        assert_eq!(f.to_string(), "[](Closed_1 -> !Established_2)");
    }

    #[test]
    fn classify_examples() {
        let phi1 = parse("[](Closed_1 -> !Established_2)").unwrap();
        assert_eq!(phi1.classify(), SyntacticClass::SyntacticSafety);
        let phi2 = parse("([]<>(Listen_1 && SYNSent_2)) -> <>Established_1").unwrap();
        assert_eq!(phi2.classify(), SyntacticClass::General);
        let phi3 = parse("!<>[](a && b) && !<>[](c && d)").unwrap();
        assert_eq!(phi3.classify(), SyntacticClass::General);
        assert_eq!(parse("X a && [](a || X b)").unwrap().classify(), SyntacticClass::SyntacticSafety);
        assert_eq!(parse("a U b").unwrap().classify(), SyntacticClass::General);
        assert_eq!(parse("a U false").unwrap().classify(), SyntacticClass::SyntacticSafety);
    }
}
