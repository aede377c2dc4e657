//! Canonical form for [`TimeExpr`]: an expanded sum of rational multiples of
//! monomials in atoms.
//!
//! Rewrites applied: constant folding, distribution of products over sums,
//! merging of like terms and like factors, `sqrt(a)^2 → a`,
//! `exp(a)·exp(b) → exp(a+b)`, `sqrt(exp(a)) → exp(a/2)`, extraction of
//! rational square factors from `sqrt`, and `exp(0)`, `sin(0)`, `cos(0)`.
//! Non-monomial sums under a negative power become a single atom with
//! leading coefficient 1.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use super::time::{rational_sqrt, TimeExpr};
use crate::polyvf::Rational;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Atom {
    T,
    Sym(String, u32),
    Sqrt(Sum),
    Exp(Sum),
    Sin(Sum),
    Cos(Sum),
    /// A sum with at least two terms, leading coefficient 1, raised to a
    /// negative power.
    Group(Sum),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct Mono(BTreeMap<Atom, i32>);

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct Sum(BTreeMap<Mono, Rational>);

impl Sum {
    pub fn zero() -> Self {
        Sum(BTreeMap::new())
    }

    pub fn one() -> Self {
        Sum::constant(Rational::one())
    }

    pub fn constant(q: Rational) -> Self {
        let mut s = Sum::zero();
        s.add_term(Mono::default(), q);
        s
    }

    fn atom(a: Atom) -> Self {
        let mut m = BTreeMap::new();
        m.insert(a, 1);
        let mut s = Sum::zero();
        s.add_term(Mono(m), Rational::one());
        s
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|q| q.is_one())
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.0.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, q) = self.0.iter().next().unwrap();
                m.0.is_empty().then(|| q.clone())
            }
            _ => None,
        }
    }

    fn add_term(&mut self, m: Mono, q: Rational) {
        if q.is_zero() {
            return;
        }
        let entry = self.0.entry(m).or_insert_with(Rational::zero);
        *entry += q;
        if entry.is_zero() {
            self.0.retain(|_, c| !c.is_zero());
        }
    }

    fn add(&self, other: &Sum) -> Sum {
        let mut out = self.clone();
        for (m, q) in &other.0 {
            out.add_term(m.clone(), q.clone());
        }
        out
    }

    fn scale(&self, k: &Rational) -> Sum {
        let mut out = Sum::zero();
        for (m, q) in &self.0 {
            out.add_term(m.clone(), q * k);
        }
        out
    }

    fn mul(&self, other: &Sum) -> Sum {
        let mut out = Sum::zero();
        for (m1, q1) in &self.0 {
            for (m2, q2) in &other.0 {
                let prod = mul_mono(m1, m2);
                let k = q1 * q2;
                for (m, q) in prod.0 {
                    out.add_term(m, q * &k);
                }
            }
        }
        out
    }

    fn pow(&self, k: i32) -> Sum {
        if k == 0 {
            return Sum::one();
        }
        if self.0.len() == 1 {
            let (m, q) = self.0.iter().next().unwrap();
            let mut exps = m.0.clone();
            for e in exps.values_mut() {
                *e *= k;
            }
            return normalize_mono(exps).scale(&num_traits::pow::Pow::pow(q.clone(), k));
        }
        if k > 0 {
            let mut acc = Sum::one();
            for _ in 0..k {
                acc = acc.mul(self);
            }
            return acc;
        }
        // leading coefficient pulled out so the grouped sum is unique
        let lead = self.0.values().next().cloned().unwrap_or_else(Rational::one);
        let primitive = self.scale(&(Rational::one() / &lead));
        let mut m = BTreeMap::new();
        m.insert(Atom::Group(primitive), k);
        let mut s = Sum::zero();
        s.add_term(Mono(m), num_traits::pow::Pow::pow(lead, k));
        s
    }

    fn sqrt(&self) -> Sum {
        if self.is_zero() {
            return Sum::zero();
        }
        if self.0.len() != 1 {
            return Sum::atom(Atom::Sqrt(self.clone()));
        }
        let (m, q) = self.0.iter().next().unwrap();
        let (outside, inside_q) = match rational_sqrt(q) {
            Some(r) if q.is_positive() => (r, Rational::one()),
            _ => (Rational::one(), q.clone()),
        };
        let mut rest = BTreeMap::new();
        let mut result = Sum::constant(outside);
        for (a, e) in &m.0 {
            match a {
                Atom::Exp(arg) => {
                    let half = arg.scale(&Rational::new((*e).into(), 2.into()));
                    result = result.mul(&Sum::atom(Atom::Exp(half)));
                }
                _ => {
                    rest.insert(a.clone(), *e);
                }
            }
        }
        let mut inner = Sum::zero();
        inner.add_term(Mono(rest), inside_q);
        if inner.is_one() {
            result
        } else {
            result.mul(&Sum::atom(Atom::Sqrt(inner)))
        }
    }

    pub fn from_expr(e: &TimeExpr) -> Sum {
        match e {
            TimeExpr::Const(q) => Sum::constant(q.clone()),
            TimeExpr::T => Sum::atom(Atom::T),
            TimeExpr::Sym { name, order } => Sum::atom(Atom::Sym(name.clone(), *order)),
            TimeExpr::Add(xs) => xs.iter().fold(Sum::zero(), |acc, x| acc.add(&Sum::from_expr(x))),
            TimeExpr::Mul(xs) => xs.iter().fold(Sum::one(), |acc, x| {
                if acc.is_zero() {
                    acc
                } else {
                    acc.mul(&Sum::from_expr(x))
                }
            }),
            TimeExpr::Pow(b, k) => Sum::from_expr(b).pow(*k),
            TimeExpr::Sqrt(x) => Sum::from_expr(x).sqrt(),
            TimeExpr::Exp(x) => {
                let s = Sum::from_expr(x);
                if s.is_zero() {
                    Sum::one()
                } else {
                    Sum::atom(Atom::Exp(s))
                }
            }
            TimeExpr::Sin(x) => {
                let s = Sum::from_expr(x);
                if s.is_zero() {
                    Sum::zero()
                } else {
                    Sum::atom(Atom::Sin(s))
                }
            }
            TimeExpr::Cos(x) => {
                let s = Sum::from_expr(x);
                if s.is_zero() {
                    Sum::one()
                } else {
                    Sum::atom(Atom::Cos(s))
                }
            }
        }
    }

    pub fn to_expr(&self) -> TimeExpr {
        let mut terms: Vec<TimeExpr> = self.0.iter().map(|(m, q)| term_expr(m, q)).collect();
        match terms.len() {
            0 => TimeExpr::zero(),
            1 => terms.pop().unwrap(),
            _ => TimeExpr::Add(terms),
        }
    }

    pub fn split(&self) -> Vec<(Rational, TimeExpr)> {
        self.0.iter().map(|(m, q)| (q.clone(), term_expr(m, &Rational::one()))).collect()
    }
}

fn mul_mono(a: &Mono, b: &Mono) -> Sum {
    let mut exps = a.0.clone();
    for (atom, e) in &b.0 {
        *exps.entry(atom.clone()).or_insert(0) += e;
    }
    normalize_mono(exps)
}

/// The atom `a` when `s` is exactly `a` for a plain atom.
fn single_atom(s: &Sum) -> Option<&Atom> {
    let (m, q) = s.0.iter().next().filter(|_| s.0.len() == 1)?;
    let (a, e) = m.0.iter().next().filter(|_| m.0.len() == 1)?;
    (q.is_one() && *e == 1 && matches!(a, Atom::T | Atom::Sym(..) | Atom::Sin(_) | Atom::Cos(_))).then_some(a)
}

fn normalize_mono(mut exps: BTreeMap<Atom, i32>) -> Sum {
    let mut factor = Sum::one();
    let mut rewritten = false;
    let mut rest: BTreeMap<Atom, i32> = BTreeMap::new();
    // a^r · sqrt(a)^e with combined half-exponent f = 2r + e is written as
    // a^(f/2) for even f, else a^((f - sgn f)/2) · sqrt(a)^(sgn f)
    let roots: Vec<(Atom, Atom, i32)> = exps
        .iter()
        .filter_map(|(k, &e)| match k {
            Atom::Sqrt(s) => single_atom(s).map(|a| (k.clone(), a.clone(), e)),
            _ => None,
        })
        .collect();
    for (root, base, e) in roots {
        exps.remove(&root);
        let f = e + 2 * exps.remove(&base).unwrap_or(0);
        if f % 2 == 0 {
            if f != 0 {
                rest.insert(base, f / 2);
            }
        } else {
            let s = f.signum();
            rest.insert(root, s);
            if f != s {
                rest.insert(base, (f - s) / 2);
            }
        }
    }
    let mut exp_arg = Sum::zero();
    let mut exp_count = 0;
    for (atom, e) in exps {
        if e == 0 {
            continue;
        }
        match atom {
            Atom::Exp(arg) => {
                exp_arg = exp_arg.add(&arg.scale(&Rational::from_integer(e.into())));
                exp_count += 1;
                if e != 1 {
                    rewritten = true;
                }
            }
            Atom::Sqrt(s) if e.abs() >= 2 => {
                factor = factor.mul(&s.pow(e / 2));
                rewritten = true;
                if e % 2 != 0 {
                    rest.insert(Atom::Sqrt(s), e % 2);
                }
            }
            Atom::Group(s) if e > 0 => {
                factor = factor.mul(&s.pow(e));
                rewritten = true;
            }
            a => {
                rest.insert(a, e);
            }
        }
    }
    if exp_count > 1 {
        rewritten = true;
    }
    if !exp_arg.is_zero() {
        rest.insert(Atom::Exp(exp_arg), 1);
    }
    let mut mono = Sum::zero();
    mono.add_term(Mono(rest), Rational::one());
    if rewritten && !factor.is_one() {
        factor.mul(&mono)
    } else {
        mono
    }
}

fn atom_expr(a: &Atom) -> TimeExpr {
    match a {
        Atom::T => TimeExpr::T,
        Atom::Sym(n, o) => TimeExpr::Sym { name: n.clone(), order: *o },
        Atom::Sqrt(s) => TimeExpr::Sqrt(Box::new(s.to_expr())),
        Atom::Exp(s) => TimeExpr::Exp(Box::new(s.to_expr())),
        Atom::Sin(s) => TimeExpr::Sin(Box::new(s.to_expr())),
        Atom::Cos(s) => TimeExpr::Cos(Box::new(s.to_expr())),
        Atom::Group(s) => s.to_expr(),
    }
}

fn term_expr(m: &Mono, q: &Rational) -> TimeExpr {
    let mut factors = Vec::new();
    if !q.is_one() || m.0.is_empty() {
        factors.push(TimeExpr::Const(q.clone()));
    }
    for (a, e) in &m.0 {
        let base = atom_expr(a);
        factors.push(if *e == 1 { base } else { TimeExpr::Pow(Box::new(base), *e) });
    }
    if factors.len() == 1 {
        factors.pop().unwrap()
    } else {
        TimeExpr::Mul(factors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyvf::ratio;

    fn t() -> TimeExpr {
        TimeExpr::t()
    }

    fn n(k: i64) -> TimeExpr {
        TimeExpr::int(k)
    }

    #[test]
    fn canonical_is_idempotent_on_a_library() {
        let exprs = vec![
            (t() + n(1)).recip() * (n(2) * t() + n(2)),
            ((n(1) + t() * t()).sqrt()).pow(-3) * t().sin(),
            (n(2) * t()).exp().sqrt() * t().exp().pow(-2),
            (n(4) * t().exp()).sqrt(),
            (t() - t()).exp() + t().cos() * n(0),
            TimeExpr::symbol("f").pow(2) * TimeExpr::symbol("f").recip(),
            TimeExpr::symbol("a").sqrt().pow(-3) * TimeExpr::symbol("a").pow(3),
        ];
        for e in exprs {
            let c = e.canonical();
            assert_eq!(c.canonical(), c, "not idempotent: {e}");
            for x in [0.1, 0.7, 1.3] {
                if let (Ok(a), Ok(b)) = (e.eval(x), c.eval(x)) {
                    assert!((a - b).abs() <= 1e-13 * a.abs().max(1.0), "{e} vs {c} at {x}");
                }
            }
        }
    }

    #[test]
    fn rewrites() {
        assert!((n(4) * t().exp()).sqrt().structurally_eq(&(n(2) * (t() * TimeExpr::Const(ratio(1, 2))).exp())));
        assert!((n(1) + t()).sqrt().pow(2).structurally_eq(&(n(1) + t())));
        assert!((t().exp() * (-t()).exp()).structurally_eq(&n(1)));
        assert!(((n(2) * t() + n(2)).recip()).structurally_eq(&((t() + n(1)).recip() * TimeExpr::Const(ratio(1, 2)))));
        assert_eq!(TimeExpr::zero().sin().as_constant(), Some(ratio(0, 1)));
        assert_eq!(TimeExpr::zero().cos().canonical(), n(1));
        let a = TimeExpr::symbol("a");
        assert!((a.clone() * a.clone().sqrt().recip()).structurally_eq(&a.clone().sqrt()));
        assert!((a.clone().recip() * a.clone().sqrt()).structurally_eq(&a.clone().sqrt().recip()));
        assert!((a.clone() * a.clone().sqrt()).structurally_eq(&a.clone().sqrt().pow(3)));
    }

    #[test]
    fn split_reassembles() {
        let e = (t() + n(3)) * (t().exp() - TimeExpr::symbol("f"));
        let parts = e.split_terms();
        assert_eq!(parts.len(), 4);
        let back = TimeExpr::Add(parts.into_iter().map(|(q, a)| a.scale(q)).collect());
        assert!(back.structurally_eq(&e));
    }
}
