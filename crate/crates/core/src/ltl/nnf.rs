use std::fmt;

use super::Formula;
use crate::process::Prop;

/// Negation normal form: negation only on atoms, with Release as the dual
/// of Until. Constructors fold constants and merge `F a || F b`,
/// `G a && G b` and `X a op X b`, which keeps large conjunctions of
/// temporal patterns from blowing up the tableau.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Nnf {
    True,
    False,
    Lit(Prop, bool),
    And(Box<Nnf>, Box<Nnf>),
    Or(Box<Nnf>, Box<Nnf>),
    Next(Box<Nnf>),
    Until(Box<Nnf>, Box<Nnf>),
    Release(Box<Nnf>, Box<Nnf>),
}

impl Nnf {
    pub fn and(a: Nnf, b: Nnf) -> Nnf {
        match (a, b) {
            (Nnf::False, _) | (_, Nnf::False) => Nnf::False,
            (Nnf::True, x) | (x, Nnf::True) => x,
            (a, b) if a == b => a,
            (Nnf::Lit(p, x), Nnf::Lit(q, y)) if p == q && x != y => Nnf::False,
            (Nnf::Release(f1, a), Nnf::Release(f2, b)) if *f1 == Nnf::False && *f2 == Nnf::False => {
                Nnf::release(Nnf::False, Nnf::and(*a, *b))
            }
            (Nnf::Next(a), Nnf::Next(b)) => Nnf::next(Nnf::and(*a, *b)),
            (a, b) => Nnf::And(Box::new(a), Box::new(b)),
        }
    }

    pub fn or(a: Nnf, b: Nnf) -> Nnf {
        match (a, b) {
            (Nnf::True, _) | (_, Nnf::True) => Nnf::True,
            (Nnf::False, x) | (x, Nnf::False) => x,
            (a, b) if a == b => a,
            (Nnf::Lit(p, x), Nnf::Lit(q, y)) if p == q && x != y => Nnf::True,
            (Nnf::Until(t1, a), Nnf::Until(t2, b)) if *t1 == Nnf::True && *t2 == Nnf::True => {
                Nnf::until(Nnf::True, Nnf::or(*a, *b))
            }
            (Nnf::Next(a), Nnf::Next(b)) => Nnf::next(Nnf::or(*a, *b)),
            (a, b) => Nnf::Or(Box::new(a), Box::new(b)),
        }
    }

    pub fn next(a: Nnf) -> Nnf {
        match a {
            Nnf::True | Nnf::False => a,
            a => Nnf::Next(Box::new(a)),
        }
    }

    pub fn until(a: Nnf, b: Nnf) -> Nnf {
        match (a, b) {
            (_, b @ (Nnf::True | Nnf::False)) => b,
            (Nnf::False, b) => b,
            (a, b) if a == b => a,
            (a, b) => Nnf::Until(Box::new(a), Box::new(b)),
        }
    }

    pub fn release(a: Nnf, b: Nnf) -> Nnf {
        match (a, b) {
            (_, b @ (Nnf::True | Nnf::False)) => b,
            (Nnf::True, b) => b,
            (a, b) if a == b => a,
            (a, b) => Nnf::Release(Box::new(a), Box::new(b)),
        }
    }

    /// Free of temporal operators.
    pub fn is_propositional(&self) -> bool {
        match self {
            Nnf::True | Nnf::False | Nnf::Lit(..) => true,
            Nnf::And(a, b) | Nnf::Or(a, b) => a.is_propositional() && b.is_propositional(),
            _ => false,
        }
    }

    /// Value of a propositional formula in a state; temporal operators
    /// evaluate to `false`.
    pub fn holds_in(&self, has: &impl Fn(&Prop) -> bool) -> bool {
        match self {
            Nnf::True => true,
            Nnf::Lit(p, b) => has(p) == *b,
            Nnf::And(a, b) => a.holds_in(has) && b.holds_in(has),
            Nnf::Or(a, b) => a.holds_in(has) || b.holds_in(has),
            _ => false,
        }
    }

    /// The propositional `x_k` when `self` is `[]<>x_1 && ... && []<>x_n`,
    /// possibly merged into `[](<>x_1 && ... && <>x_n)`.
    pub fn recurrence_goals(&self) -> Option<Vec<Nnf>> {
        fn eventually(f: &Nnf, out: &mut Vec<Nnf>) -> bool {
            match f {
                Nnf::And(a, b) => eventually(a, out) && eventually(b, out),
                Nnf::Until(t, x) if **t == Nnf::True && x.is_propositional() => {
                    out.push((**x).clone());
                    true
                }
                _ => false,
            }
        }
        fn globally(f: &Nnf, out: &mut Vec<Nnf>) -> bool {
            match f {
                Nnf::And(a, b) => globally(a, out) && globally(b, out),
                Nnf::Release(z, body) if **z == Nnf::False => eventually(body, out),
                _ => false,
            }
        }
        let mut out = Vec::new();
        globally(self, &mut out).then_some(out)
    }

    /// No Until and no Release other than `G` (`false R x`).
    pub fn is_syntactic_safety(&self) -> bool {
        match self {
            Nnf::True | Nnf::False | Nnf::Lit(..) => true,
            Nnf::And(a, b) | Nnf::Or(a, b) => a.is_syntactic_safety() && b.is_syntactic_safety(),
            Nnf::Next(a) => a.is_syntactic_safety(),
            Nnf::Until(..) => false,
            Nnf::Release(a, b) => **a == Nnf::False && b.is_syntactic_safety(),
        }
    }
}

pub(super) fn to_nnf(f: &Formula, neg: bool) -> Nnf {
    match (f, neg) {
        (Formula::True, false) | (Formula::False, true) => Nnf::True,
        (Formula::True, true) | (Formula::False, false) => Nnf::False,
        (Formula::Atom(p), _) => Nnf::Lit(p.clone(), !neg),
        (Formula::Not(a), _) => to_nnf(a, !neg),
        (Formula::And(a, b), false) | (Formula::Or(a, b), true) => Nnf::and(to_nnf(a, neg), to_nnf(b, neg)),
        (Formula::Or(a, b), false) | (Formula::And(a, b), true) => Nnf::or(to_nnf(a, neg), to_nnf(b, neg)),
        (Formula::Implies(a, b), false) => Nnf::or(to_nnf(a, true), to_nnf(b, false)),
        (Formula::Implies(a, b), true) => Nnf::and(to_nnf(a, false), to_nnf(b, true)),
        (Formula::Next(a), _) => Nnf::next(to_nnf(a, neg)),
        (Formula::Until(a, b), false) => Nnf::until(to_nnf(a, false), to_nnf(b, false)),
        (Formula::Until(a, b), true) => Nnf::release(to_nnf(a, true), to_nnf(b, true)),
        (Formula::Eventually(a), false) => Nnf::until(Nnf::True, to_nnf(a, false)),
        (Formula::Eventually(a), true) => Nnf::release(Nnf::False, to_nnf(a, true)),
        (Formula::Globally(a), false) => Nnf::release(Nnf::False, to_nnf(a, false)),
        (Formula::Globally(a), true) => Nnf::until(Nnf::True, to_nnf(a, true)),
    }
}

impl fmt::Display for Nnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nnf::True => f.write_str("true"),
            Nnf::False => f.write_str("false"),
            Nnf::Lit(p, true) => write!(f, "{p}"),
            Nnf::Lit(p, false) => write!(f, "!{p}"),
            Nnf::And(a, b) => write!(f, "({a} && {b})"),
            Nnf::Or(a, b) => write!(f, "({a} || {b})"),
            Nnf::Next(a) => write!(f, "X {a}"),
            Nnf::Until(a, b) => write!(f, "({a} U {b})"),
            Nnf::Release(a, b) => write!(f, "({a} R {b})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::ltl::parse;

    #[test]
    fn eventually_disjunctions_merge() {
        let f = parse("!<>[](a && b) && !<>[](c && d) && !<>[](e && g)").unwrap();
        let n = crate::ltl::nnf::to_nnf(&f, true);
        assert_eq!(n.to_string(), "(true U (((false R (a && b)) || (false R (c && d))) || (false R (e && g))))");
    }

    #[test]
    fn globally_conjunctions_merge() {
        let f = parse("[]a && []b").unwrap();
        assert_eq!(f.to_nnf().to_string(), "(false R (a && b))");
    }
}
