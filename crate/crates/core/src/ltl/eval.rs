use super::{Formula, LtlError};
use crate::process::Computation;

/// Exact LTL semantics on an ultimately periodic word.
///
/// Positions `0..stem+cycle` are evaluated bottom-up; temporal operators are
/// fixpoints over the successor function that wraps the last cycle position
/// back to the first one.
pub fn eval_lasso(f: &Formula, c: &Computation) -> Result<bool, LtlError> {
    let cycle = match &c.cycle {
        Some(cy) if !cy.is_empty() => cy,
        _ => return Err(LtlError::FiniteComputation),
    };
    let stem_len = c.stem.len();
    let n = stem_len + cycle.len();
    let letters: Vec<_> = c.stem.iter().chain(cycle.iter()).collect();
    let next = |i: usize| if i + 1 < n { i + 1 } else { stem_len };
    let ctx = Ctx { letters: &letters, next: &next, n };
    Ok(ctx.eval(f)[0])
}

struct Ctx<'a> {
    letters: &'a [&'a std::collections::BTreeSet<crate::process::Prop>],
    next: &'a dyn Fn(usize) -> usize,
    n: usize,
}

impl Ctx<'_> {
    fn eval(&self, f: &Formula) -> Vec<bool> {
        let n = self.n;
        match f {
            Formula::True => vec![true; n],
            Formula::False => vec![false; n],
            Formula::Atom(p) => self.letters.iter().map(|l| l.contains(p)).collect(),
            Formula::Not(a) => self.eval(a).into_iter().map(|b| !b).collect(),
            Formula::And(a, b) => zip(self.eval(a), self.eval(b), |x, y| x && y),
            Formula::Or(a, b) => zip(self.eval(a), self.eval(b), |x, y| x || y),
            Formula::Implies(a, b) => zip(self.eval(a), self.eval(b), |x, y| !x || y),
            Formula::Next(a) => {
                let v = self.eval(a);
                (0..n).map(|i| v[(self.next)(i)]).collect()
            }
            Formula::Until(a, b) => self.until(&self.eval(a), &self.eval(b)),
            Formula::Eventually(a) => self.until(&vec![true; n], &self.eval(a)),
            Formula::Globally(a) => {
                // G a = !(true U !a)
                let na: Vec<bool> = self.eval(a).into_iter().map(|b| !b).collect();
                self.until(&vec![true; n], &na).into_iter().map(|b| !b).collect()
            }
        }
    }

    /// Least fixpoint of `v[i] = r[i] || (l[i] && v[next(i)])`.
    fn until(&self, l: &[bool], r: &[bool]) -> Vec<bool> {
        let mut v = r.to_vec();
        loop {
            let mut changed = false;
            for i in (0..self.n).rev() {
                if !v[i] && l[i] && v[(self.next)(i)] {
                    v[i] = true;
                    changed = true;
                }
            }
            if !changed {
                return v;
            }
        }
    }
}

fn zip(a: Vec<bool>, b: Vec<bool>, op: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::parse;
    use crate::process::Prop;
    use std::collections::BTreeSet;

    fn letter(ps: &[&str]) -> BTreeSet<Prop> {
        ps.iter().map(|p| Prop::from(*p)).collect()
    }

    fn word(stem: &[&[&str]], cycle: &[&[&str]]) -> Computation {
        Computation::lasso(stem.iter().map(|l| letter(l)).collect(), cycle.iter().map(|l| letter(l)).collect())
    }

    fn holds(f: &str, c: &Computation) -> bool {
        eval_lasso(&parse(f).unwrap(), c).unwrap()
    }

    #[test]
    fn basic_cases() {
        assert!(holds("[]OK", &word(&[], &[&["OK"]])));
        assert!(holds("p U q", &word(&[&["p"], &["p"], &["q"]], &[&["q"]])));
        assert!(!holds("p U q", &word(&[&["p"], &[]], &[&["q"]])));
        assert!(holds("X X q", &word(&[&[], &[]], &[&["q"]])));
    }

    #[test]
    fn relay_violating_word() {
        // p0 p1 then (p2 p3)^ω where only p3 carries l
        let c = word(&[&[], &[]], &[&[], &["l"]]);
        assert!(!holds("<>[]l", &c));
        assert!(holds("[]<>l", &c));
    }

    #[test]
    fn finite_computation_is_rejected() {
        let c = Computation { stem: vec![letter(&["a"])], cycle: None };
        assert_eq!(eval_lasso(&Formula::True, &c), Err(LtlError::FiniteComputation));
    }
}
