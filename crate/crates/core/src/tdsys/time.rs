//! Closed-form scalar functions of `t`.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};

use super::normal::Sum;
use crate::error::{Error, Result};
use crate::polyvf::{fmt_rational, rat, rational_to_f64, Rational};

/// Expression tree over rational constants, `t`, opaque functions of `t`,
/// sums, products, integer powers, `sqrt`, `exp`, `sin` and `cos`.
///
/// Division is represented as a power with exponent −1. Opaque symbols
/// (`Sym`) stand for user-named functions such as `f(t)`; `order` counts
/// derivatives taken symbolically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TimeExpr {
    Const(Rational),
    T,
    Sym { name: String, order: u32 },
    Add(Vec<TimeExpr>),
    Mul(Vec<TimeExpr>),
    Pow(Box<TimeExpr>, i32),
    Sqrt(Box<TimeExpr>),
    Exp(Box<TimeExpr>),
    Sin(Box<TimeExpr>),
    Cos(Box<TimeExpr>),
}

impl TimeExpr {
    pub fn constant(q: Rational) -> Self {
        TimeExpr::Const(q)
    }

    pub fn int(n: i64) -> Self {
        TimeExpr::Const(rat(n))
    }

    pub fn zero() -> Self {
        TimeExpr::int(0)
    }

    pub fn one() -> Self {
        TimeExpr::int(1)
    }

    pub fn t() -> Self {
        TimeExpr::T
    }

    pub fn symbol(name: &str) -> Self {
        TimeExpr::Sym { name: name.to_string(), order: 0 }
    }

    pub fn pow(self, k: i32) -> Self {
        TimeExpr::Pow(Box::new(self), k)
    }

    pub fn recip(self) -> Self {
        self.pow(-1)
    }

    pub fn sqrt(self) -> Self {
        TimeExpr::Sqrt(Box::new(self))
    }

    pub fn exp(self) -> Self {
        TimeExpr::Exp(Box::new(self))
    }

    pub fn sin(self) -> Self {
        TimeExpr::Sin(Box::new(self))
    }

    pub fn cos(self) -> Self {
        TimeExpr::Cos(Box::new(self))
    }

    pub fn scale(self, q: Rational) -> Self {
        TimeExpr::Mul(vec![TimeExpr::Const(q), self])
    }

    /// Numerical value at `t`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let v = match self {
            TimeExpr::Const(q) => rational_to_f64(q),
            TimeExpr::T => t,
            TimeExpr::Sym { name, order } => {
                let shown = if *order == 0 { name.clone() } else { format!("{name} (derivative {order})") };
                return Err(Error::UnboundSymbol(shown));
            }
            TimeExpr::Add(xs) => {
                let mut s = 0.0;
                for x in xs {
                    s += x.eval(t)?;
                }
                s
            }
            TimeExpr::Mul(xs) => {
                let mut p = 1.0;
                for x in xs {
                    p *= x.eval(t)?;
                }
                p
            }
            TimeExpr::Pow(b, k) => {
                let b = b.eval(t)?;
                if *k < 0 && b == 0.0 {
                    return Err(Error::Domain { t, what: "division by zero".into() });
                }
                b.powi(*k)
            }
            TimeExpr::Sqrt(x) => {
                let x = x.eval(t)?;
                if x < 0.0 {
                    return Err(Error::Domain { t, what: format!("sqrt of negative value {x}") });
                }
                x.sqrt()
            }
            TimeExpr::Exp(x) => x.eval(t)?.exp(),
            TimeExpr::Sin(x) => x.eval(t)?.sin(),
            TimeExpr::Cos(x) => x.eval(t)?.cos(),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain { t, what: format!("non-finite value in {self}") })
        }
    }

    /// Exact value at a rational `t`, when every node admits one.
    pub fn eval_exact(&self, t: &Rational) -> Option<Rational> {
        match self {
            TimeExpr::Const(q) => Some(q.clone()),
            TimeExpr::T => Some(t.clone()),
            TimeExpr::Sym { .. } => None,
            TimeExpr::Add(xs) => xs.iter().try_fold(Rational::zero(), |acc, x| Some(acc + x.eval_exact(t)?)),
            TimeExpr::Mul(xs) => xs.iter().try_fold(Rational::one(), |acc, x| Some(acc * x.eval_exact(t)?)),
            TimeExpr::Pow(b, k) => {
                let b = b.eval_exact(t)?;
                if b.is_zero() && *k < 0 {
                    return None;
                }
                Some(num_traits::pow::Pow::pow(b, *k))
            }
            TimeExpr::Sqrt(x) => exact_sqrt(&x.eval_exact(t)?),
            TimeExpr::Exp(x) => x.eval_exact(t)?.is_zero().then(Rational::one),
            TimeExpr::Sin(x) => x.eval_exact(t)?.is_zero().then(Rational::zero),
            TimeExpr::Cos(x) => x.eval_exact(t)?.is_zero().then(Rational::one),
        }
    }

    /// Symbolic d/dt, returned in canonical form.
    pub fn diff(&self) -> TimeExpr {
        self.diff_raw().canonical()
    }

    fn diff_raw(&self) -> TimeExpr {
        use TimeExpr::*;
        match self {
            Const(_) => TimeExpr::zero(),
            T => TimeExpr::one(),
            Sym { name, order } => Sym { name: name.clone(), order: order + 1 },
            Add(xs) => Add(xs.iter().map(TimeExpr::diff_raw).collect()),
            Mul(xs) => Add(
                (0..xs.len())
                    .map(|i| {
                        let mut f = xs.clone();
                        f[i] = xs[i].diff_raw();
                        Mul(f)
                    })
                    .collect(),
            ),
            Pow(b, k) => Mul(vec![TimeExpr::int(*k as i64), Pow(b.clone(), k - 1), b.diff_raw()]),
            Sqrt(x) => Mul(vec![
                TimeExpr::Const(Rational::new(1.into(), 2.into())),
                x.diff_raw(),
                Pow(Box::new(Sqrt(x.clone())), -1),
            ]),
            Exp(x) => Mul(vec![self.clone(), x.diff_raw()]),
            Sin(x) => Mul(vec![Cos(x.clone()), x.diff_raw()]),
            Cos(x) => Mul(vec![TimeExpr::int(-1), Sin(x.clone()), x.diff_raw()]),
        }
    }

    /// Replaces the opaque symbol `name` (and its derivatives) by `value`.
    pub fn substitute(&self, name: &str, value: &TimeExpr) -> TimeExpr {
        use TimeExpr::*;
        let map = |x: &TimeExpr| Box::new(x.substitute(name, value));
        match self {
            Sym { name: n, order } if n == name => {
                let mut v = value.clone();
                for _ in 0..*order {
                    v = v.diff();
                }
                v
            }
            Const(_) | T | Sym { .. } => self.clone(),
            Add(xs) => Add(xs.iter().map(|x| x.substitute(name, value)).collect()),
            Mul(xs) => Mul(xs.iter().map(|x| x.substitute(name, value)).collect()),
            Pow(b, k) => Pow(map(b), *k),
            Sqrt(x) => Sqrt(map(x)),
            Exp(x) => Exp(map(x)),
            Sin(x) => Sin(map(x)),
            Cos(x) => Cos(map(x)),
        }
    }

    pub fn symbols(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_symbols(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_symbols(&self, out: &mut Vec<String>) {
        use TimeExpr::*;
        match self {
            Sym { name, .. } => out.push(name.clone()),
            Const(_) | T => {}
            Add(xs) | Mul(xs) => xs.iter().for_each(|x| x.collect_symbols(out)),
            Pow(x, _) | Sqrt(x) | Exp(x) | Sin(x) | Cos(x) => x.collect_symbols(out),
        }
    }

    pub(crate) fn normal(&self) -> Sum {
        Sum::from_expr(self)
    }

    /// Canonical representative: expanded sum of rational multiples of
    /// products of atoms, with like terms and like factors merged.
    pub fn canonical(&self) -> TimeExpr {
        self.normal().to_expr()
    }

    /// Structural equality after canonicalization. A sufficient, not
    /// necessary, condition for equality as functions.
    pub fn structurally_eq(&self, other: &TimeExpr) -> bool {
        self.normal() == other.normal()
    }

    pub fn is_zero_structural(&self) -> bool {
        self.normal().is_zero()
    }

    /// `Some(q)` when the canonical form is the constant `q`.
    pub fn as_constant(&self) -> Option<Rational> {
        self.normal().as_constant()
    }

    /// Splits the canonical form into `(q, atom)` pairs with
    /// `self = Σ q·atom`, where each atom is a product with coefficient 1
    /// (the constant atom is `1`).
    pub fn split_terms(&self) -> Vec<(Rational, TimeExpr)> {
        self.normal().split()
    }
}

fn exact_sqrt(q: &Rational) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    (&n * &n == *q.numer() && &d * &d == *q.denom()).then(|| Rational::new(n, d))
}

pub(crate) fn rational_sqrt(q: &Rational) -> Option<Rational> {
    exact_sqrt(q)
}

fn needs_parens(e: &TimeExpr) -> bool {
    match e {
        TimeExpr::Add(_) => true,
        TimeExpr::Mul(_) => true,
        TimeExpr::Const(q) => !q.is_integer() || q.is_negative(),
        TimeExpr::Pow(..) => true,
        _ => false,
    }
}

impl fmt::Display for TimeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use TimeExpr::*;
        match self {
            Const(q) => f.write_str(&fmt_rational(q)),
            T => f.write_str("t"),
            Sym { name, order } => {
                f.write_str(name)?;
                for _ in 0..*order {
                    f.write_str("'")?;
                }
                Ok(())
            }
            Add(xs) => {
                if xs.is_empty() {
                    return f.write_str("0");
                }
                for (i, x) in xs.iter().enumerate() {
                    let s = x.to_string();
                    match (i, s.strip_prefix('-')) {
                        (0, _) => f.write_str(&s)?,
                        (_, Some(rest)) => write!(f, " - {rest}")?,
                        (_, None) => write!(f, " + {s}")?,
                    }
                }
                Ok(())
            }
            Mul(xs) => {
                if xs.is_empty() {
                    return f.write_str("1");
                }
                let mut first = true;
                for (i, x) in xs.iter().enumerate() {
                    if i == 0 {
                        if let Const(q) = x {
                            if *q == -Rational::one() && xs.len() > 1 {
                                f.write_str("-")?;
                                continue;
                            }
                            if q.is_negative() && q.is_integer() {
                                write!(f, "{}", fmt_rational(q))?;
                                first = false;
                                continue;
                            }
                        }
                    }
                    if !first {
                        f.write_str("*")?;
                    }
                    first = false;
                    if matches!(x, Add(_) | Mul(_)) || matches!(x, Const(q) if q.is_negative()) {
                        write!(f, "({x})")?;
                    } else {
                        write!(f, "{x}")?;
                    }
                }
                Ok(())
            }
            Pow(b, k) => {
                if needs_parens(b) {
                    write!(f, "({b})")?;
                } else {
                    write!(f, "{b}")?;
                }
                if *k < 0 {
                    write!(f, "^({k})")
                } else {
                    write!(f, "^{k}")
                }
            }
            Sqrt(x) => write!(f, "sqrt({x})"),
            Exp(x) => write!(f, "exp({x})"),
            Sin(x) => write!(f, "sin({x})"),
            Cos(x) => write!(f, "cos({x})"),
        }
    }
}

impl Add for TimeExpr {
    type Output = TimeExpr;
    fn add(self, rhs: TimeExpr) -> TimeExpr {
        TimeExpr::Add(vec![self, rhs])
    }
}

impl Sub for TimeExpr {
    type Output = TimeExpr;
    fn sub(self, rhs: TimeExpr) -> TimeExpr {
        TimeExpr::Add(vec![self, -rhs])
    }
}

impl Mul for TimeExpr {
    type Output = TimeExpr;
    fn mul(self, rhs: TimeExpr) -> TimeExpr {
        TimeExpr::Mul(vec![self, rhs])
    }
}

impl Div for TimeExpr {
    type Output = TimeExpr;
    fn div(self, rhs: TimeExpr) -> TimeExpr {
        TimeExpr::Mul(vec![self, rhs.recip()])
    }
}

impl Neg for TimeExpr {
    type Output = TimeExpr;
    fn neg(self) -> TimeExpr {
        TimeExpr::Mul(vec![TimeExpr::int(-1), self])
    }
}
