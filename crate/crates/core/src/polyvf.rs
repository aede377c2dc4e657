//! Exact polynomial vector fields on ℝⁿ.
//!
//! A [`PolyVectorField`] stores one [`Polynomial`] per coordinate, the
//! coefficient of `∂/∂x^i`. All coefficients are arbitrary-precision
//! rationals, so equality, span membership and bracket closure are decided
//! without tolerances.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Deref, Mul, Neg, Sub};
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Largest total degree accepted from user-facing constructors.
pub const MAX_INPUT_DEGREE: u32 = 16;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

pub fn rational_to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Formats a rational as `p` or `p/q`.
pub fn fmt_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// An ordered list of variable names shared by polynomials and fields.
#[derive(Clone, Eq, PartialOrd, Ord)]
pub struct Variables(Arc<[String]>);

impl Variables {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        for (i, name) in names.iter().enumerate() {
            let valid = name
                .chars()
                .next()
                .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid {
                return Err(Error::Invalid(format!("`{name}` is not a valid variable name")));
            }
            if names[..i].contains(name) {
                return Err(Error::Invalid(format!("variable `{name}` declared twice")));
            }
        }
        Ok(Variables(names.into()))
    }

    /// The plane (x, v) used by every second-order example.
    pub fn xv() -> Self {
        Variables::new(&["x", "v"]).expect("valid names")
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|n| n == name)
    }

    pub fn to_vec(&self) -> Vec<String> {
        self.0.to_vec()
    }

    pub fn ensure_same(&self, other: &Variables) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::VariableMismatch { left: self.to_vec(), right: other.to_vec() })
        }
    }
}

impl PartialEq for Variables {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl std::hash::Hash for Variables {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.hash(state);
    }
}

impl Deref for Variables {
    type Target = [String];
    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl fmt::Debug for Variables {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

/// Exponent vector, dense over the ambient variable list.
pub type Exponents = Vec<u32>;

/// Multivariate polynomial with rational coefficients in canonical form.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    vars: Variables,
    terms: BTreeMap<Exponents, Rational>,
}

impl Polynomial {
    pub fn zero(vars: &Variables) -> Self {
        Polynomial { vars: vars.clone(), terms: BTreeMap::new() }
    }

    pub fn constant(vars: &Variables, c: Rational) -> Self {
        let mut p = Self::zero(vars);
        if !c.is_zero() {
            p.terms.insert(vec![0; vars.len()], c);
        }
        p
    }

    pub fn one(vars: &Variables) -> Self {
        Self::constant(vars, Rational::one())
    }

    /// The coordinate function of variable `index`.
    pub fn var(vars: &Variables, index: usize) -> Self {
        let mut e = vec![0; vars.len()];
        e[index] = 1;
        Self::monomial(vars, e, Rational::one())
    }

    pub fn var_named(vars: &Variables, name: &str) -> Result<Self> {
        vars.index_of(name)
            .map(|i| Self::var(vars, i))
            .ok_or_else(|| Error::Invalid(format!("unknown variable `{name}`")))
    }

    pub fn monomial(vars: &Variables, exponents: Exponents, c: Rational) -> Self {
        assert_eq!(exponents.len(), vars.len(), "exponent vector length");
        let mut p = Self::zero(vars);
        if !c.is_zero() {
            p.terms.insert(exponents, c);
        }
        p
    }

    /// Builds a polynomial from (exponents, coefficient) pairs, validating
    /// lengths and the input degree limit. Repeated exponents are summed.
    pub fn from_terms<I>(vars: &Variables, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Exponents, Rational)>,
    {
        let mut p = Self::zero(vars);
        for (e, c) in terms {
            if e.len() != vars.len() {
                return Err(Error::LengthMismatch {
                    what: "exponent vector vs variables",
                    left: e.len(),
                    right: vars.len(),
                });
            }
            let degree: u32 = e.iter().sum();
            if degree > MAX_INPUT_DEGREE {
                return Err(Error::DegreeTooHigh { degree, limit: MAX_INPUT_DEGREE });
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, e: Exponents, c: Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn vars(&self) -> &Variables {
        &self.vars
    }

    pub fn terms(&self) -> &BTreeMap<Exponents, Rational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Some(c)` when the polynomial is a constant (including zero).
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (e, c) = self.terms.iter().next().unwrap();
                e.iter().all(|&k| k == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(&self.vars);
        }
        Polynomial {
            vars: self.vars.clone(),
            terms: self.terms.iter().map(|(e, k)| (e.clone(), k * c)).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one(&self.vars);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Partial derivative with respect to variable `index`.
    pub fn partial(&self, index: usize) -> Self {
        let mut out = Self::zero(&self.vars);
        for (e, c) in &self.terms {
            let k = e[index];
            if k == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[index] -= 1;
            out.add_term(e2, c * Rational::from_integer(k.into()));
        }
        out
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let m: f64 = e.iter().zip(point).map(|(&k, &x)| x.powi(k as i32)).product();
                rational_to_f64(c) * m
            })
            .sum()
    }

    pub fn eval_exact(&self, point: &[Rational]) -> Rational {
        let mut acc = Rational::zero();
        for (e, c) in &self.terms {
            let mut m = c.clone();
            for (&k, x) in e.iter().zip(point) {
                for _ in 0..k {
                    m *= x;
                }
            }
            acc += m;
        }
        acc
    }

    /// Coefficients converted to floating point, for fast evaluation.
    pub fn to_f64_terms(&self) -> Vec<(f64, Exponents)> {
        self.terms.iter().map(|(e, c)| (rational_to_f64(c), e.clone())).collect()
    }

    fn assert_same(&self, other: &Self) {
        assert!(
            self.vars == other.vars,
            "variable lists differ: {:?} vs {:?}",
            self.vars,
            other.vars
        );
    }

    /// Writes the polynomial in DSL syntax, highest terms first.
    fn write_dsl(&self, f: &mut impl fmt::Write) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (e, c)) in self.terms.iter().rev().enumerate() {
            let negative = c.is_negative();
            match (i, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let mag = c.abs();
            let factors: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(j, &k)| {
                    if k == 1 {
                        self.vars[j].clone()
                    } else {
                        format!("{}^{}", self.vars[j], k)
                    }
                })
                .collect();
            if factors.is_empty() {
                f.write_str(&fmt_rational(&mag))?;
            } else {
                if !mag.is_one() {
                    write!(f, "{}*", fmt_rational(&mag))?;
                }
                f.write_str(&factors.join("*"))?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_dsl(f)
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial({self})")
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.assert_same(rhs);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.assert_same(rhs);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c);
        }
        out
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.assert_same(rhs);
        let mut out = Polynomial::zero(&self.vars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let e: Exponents = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(&-Rational::one())
    }
}

/// A polynomial vector field `Σ_i A^i ∂/∂x^i`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PolyVectorField {
    vars: Variables,
    components: Vec<Polynomial>,
}

impl PolyVectorField {
    pub fn new(vars: &Variables, components: Vec<Polynomial>) -> Result<Self> {
        if components.len() != vars.len() {
            return Err(Error::LengthMismatch {
                what: "components vs variables",
                left: components.len(),
                right: vars.len(),
            });
        }
        for c in &components {
            vars.ensure_same(c.vars())?;
        }
        Ok(PolyVectorField { vars: vars.clone(), components })
    }

    pub fn zero(vars: &Variables) -> Self {
        PolyVectorField {
            vars: vars.clone(),
            components: (0..vars.len()).map(|_| Polynomial::zero(vars)).collect(),
        }
    }

    /// The coordinate field `∂/∂x^index`.
    pub fn partial(vars: &Variables, index: usize) -> Self {
        let mut f = Self::zero(vars);
        f.components[index] = Polynomial::one(vars);
        f
    }

    /// `p ∂/∂x^index`.
    pub fn along(p: Polynomial, index: usize) -> Self {
        let vars = p.vars().clone();
        let mut f = Self::zero(&vars);
        f.components[index] = p;
        f
    }

    pub fn vars(&self) -> &Variables {
        &self.vars
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Polynomial {
        &self.components[i]
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Polynomial::is_zero)
    }

    pub fn degree(&self) -> u32 {
        self.components.iter().map(Polynomial::degree).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        PolyVectorField {
            vars: self.vars.clone(),
            components: self.components.iter().map(|p| p.scale(c)).collect(),
        }
    }

    /// Multiplies every component by the scalar polynomial `p`.
    pub fn mul_poly(&self, p: &Polynomial) -> Self {
        PolyVectorField {
            vars: self.vars.clone(),
            components: self.components.iter().map(|c| c * p).collect(),
        }
    }

    /// Directional derivative `Σ_i A^i ∂p/∂x^i`. Panics on mismatched
    /// variables; see [`lie_derivative_scalar`] for the checked form.
    pub fn apply(&self, p: &Polynomial) -> Polynomial {
        let mut acc = Polynomial::zero(&self.vars);
        for (i, a) in self.components.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let d = p.partial(i);
            if !d.is_zero() {
                acc = &acc + &(a * &d);
            }
        }
        acc
    }

    pub fn eval_f64(&self, point: &[f64]) -> Vec<f64> {
        self.components.iter().map(|p| p.eval_f64(point)).collect()
    }

    /// Writes the field in DSL form, e.g. `v*d/dx - (3*x*v + x^3)*d/dv`.
    pub fn to_dsl(&self) -> String {
        let mut out = String::new();
        for (i, p) in self.components.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let var = &self.vars[i];
            let single = p.terms().len() == 1;
            let (negative, body) = if single {
                let (e, c) = p.terms().iter().next().unwrap();
                let mag = Polynomial::monomial(&self.vars, e.clone(), c.abs());
                let body = if mag.as_constant().is_some_and(|c| c.is_one()) {
                    String::new()
                } else {
                    format!("{mag}*")
                };
                (c.is_negative(), body)
            } else {
                (false, format!("({p})*"))
            };
            match (out.is_empty(), negative) {
                (true, true) => out.push('-'),
                (true, false) => {}
                (false, true) => out.push_str(" - "),
                (false, false) => out.push_str(" + "),
            }
            out.push_str(&body);
            out.push_str("d/d");
            out.push_str(var);
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }

    fn assert_same(&self, other: &Self) {
        assert!(
            self.vars == other.vars,
            "variable lists differ: {:?} vs {:?}",
            self.vars,
            other.vars
        );
    }
}

impl fmt::Display for PolyVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_dsl())
    }
}

impl fmt::Debug for PolyVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PolyVectorField({})", self.to_dsl())
    }
}

impl Add for &PolyVectorField {
    type Output = PolyVectorField;
    fn add(self, rhs: &PolyVectorField) -> PolyVectorField {
        self.assert_same(rhs);
        PolyVectorField {
            vars: self.vars.clone(),
            components: self.components.iter().zip(&rhs.components).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &PolyVectorField {
    type Output = PolyVectorField;
    fn sub(self, rhs: &PolyVectorField) -> PolyVectorField {
        self.assert_same(rhs);
        PolyVectorField {
            vars: self.vars.clone(),
            components: self.components.iter().zip(&rhs.components).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &PolyVectorField {
    type Output = PolyVectorField;
    fn neg(self) -> PolyVectorField {
        self.scale(&-Rational::one())
    }
}

/// Lie bracket `[A,B]^i = A(B^i) − B(A^i)`.
pub fn bracket(a: &PolyVectorField, b: &PolyVectorField) -> Result<PolyVectorField> {
    a.vars.ensure_same(&b.vars)?;
    let components = a
        .components
        .iter()
        .zip(&b.components)
        .map(|(ai, bi)| &a.apply(bi) - &b.apply(ai))
        .collect();
    Ok(PolyVectorField { vars: a.vars.clone(), components })
}

pub fn lie_derivative_scalar(a: &PolyVectorField, p: &Polynomial) -> Result<Polynomial> {
    a.vars.ensure_same(p.vars())?;
    Ok(a.apply(p))
}

/// Exact `Σ c_α X_α`. An empty combination is the zero field on `vars`.
pub fn linear_combination(
    vars: &Variables,
    coeffs: &[Rational],
    fields: &[PolyVectorField],
) -> Result<PolyVectorField> {
    if coeffs.len() != fields.len() {
        return Err(Error::LengthMismatch {
            what: "coefficients vs fields",
            left: coeffs.len(),
            right: fields.len(),
        });
    }
    let mut acc = PolyVectorField::zero(vars);
    for (c, f) in coeffs.iter().zip(fields) {
        vars.ensure_same(f.vars())?;
        if !c.is_zero() {
            acc = &acc + &f.scale(c);
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xv() -> Variables {
        Variables::xv()
    }

    fn x() -> Polynomial {
        Polynomial::var(&xv(), 0)
    }

    fn v() -> Polynomial {
        Polynomial::var(&xv(), 1)
    }

    fn c(n: i64) -> Polynomial {
        Polynomial::constant(&xv(), rat(n))
    }

    fn field(px: Polynomial, pv: Polynomial) -> PolyVectorField {
        PolyVectorField::new(&xv(), vec![px, pv]).unwrap()
    }

    /// X₁ = v∂x − (3xv + x³)∂v
    fn x1() -> PolyVectorField {
        let rhs = &(&c(3) * &(&x() * &v())) + &x().pow(3);
        field(v(), -&rhs)
    }

    #[test]
    fn bracket_with_itself_vanishes() {
        assert!(bracket(&x1(), &x1()).unwrap().is_zero());
    }

    #[test]
    fn bracket_dv_with_x1() {
        let dv = PolyVectorField::partial(&xv(), 1);
        let expected = field(c(1), &c(-3) * &x());
        assert_eq!(bracket(&dv, &x1()).unwrap(), expected);
    }

    #[test]
    fn scheme_w_is_abelian() {
        let vdv = field(c(0), v());
        let xdx = field(x(), c(0));
        assert!(bracket(&vdv, &xdx).unwrap().is_zero());
    }

    #[test]
    fn bracket_y1_y7() {
        let y1 = field(v(), c(0));
        let y7 = field(c(0), x().pow(3));
        let expected = field(-&x().pow(3), &(&c(3) * &x().pow(2)) * &v());
        assert_eq!(bracket(&y1, &y7).unwrap(), expected);
    }

    #[test]
    fn lie_derivative_examples() {
        let dv = PolyVectorField::partial(&xv(), 1);
        let p = &(&c(3) * &(&x() * &v())) + &x().pow(3);
        assert_eq!(lie_derivative_scalar(&dv, &p).unwrap(), &c(3) * &x());
        assert!(lie_derivative_scalar(&x1(), &c(7)).unwrap().is_zero());
        let vdx = field(v(), c(0));
        assert_eq!(lie_derivative_scalar(&vdx, &x().pow(3)).unwrap(), &(&c(3) * &x().pow(2)) * &v());
    }

    #[test]
    fn linear_combination_examples() {
        let x4 = field(x(), &c(-2) * &x().pow(2));
        let x8 = field(&c(2) * &x(), &c(4) * &v());
        let got = linear_combination(&xv(), &[rat(1), rat(-2)], &[x8, x4]).unwrap();
        assert_eq!(got, field(c(0), &c(4) * &(&v() + &x().pow(2))));

        let x3 = field(c(-1), &c(3) * &x());
        let x7 = field(c(1), -&x());
        let half = ratio(1, 2);
        let got = linear_combination(&xv(), &[half.clone(), half], &[x3, x7]).unwrap();
        assert_eq!(got, field(c(0), x()));

        assert!(linear_combination(&xv(), &[], &[]).unwrap().is_zero());
        assert!(matches!(
            linear_combination(&xv(), &[rat(1)], &[]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn mismatched_variables_are_rejected() {
        let other = Variables::new(&["x", "y"]).unwrap();
        let a = PolyVectorField::partial(&other, 0);
        let err = bracket(&a, &x1()).unwrap_err();
        match err {
            Error::VariableMismatch { left, right } => {
                assert_eq!(left, vec!["x", "y"]);
                assert_eq!(right, vec!["x", "v"]);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn input_degree_limit() {
        let e = Polynomial::from_terms(&xv(), [(vec![17, 0], rat(1))]).unwrap_err();
        assert_eq!(e, Error::DegreeTooHigh { degree: 17, limit: 16 });
        let p = Polynomial::from_terms(&xv(), [(vec![1, 0], rat(1)), (vec![1, 0], rat(-1))]).unwrap();
        assert!(p.is_zero());
    }

    #[test]
    fn dsl_printing() {
        assert_eq!(x1().to_dsl(), "v*d/dx + (-x^3 - 3*x*v)*d/dv");
        assert_eq!(PolyVectorField::zero(&xv()).to_dsl(), "0");
        let f = field(c(-1), &Polynomial::constant(&xv(), ratio(3, 2)) * &x());
        assert_eq!(f.to_dsl(), "-d/dx + 3/2*x*d/dv");
    }

    #[test]
    fn duplicate_variable_rejected() {
        assert!(Variables::new(&["x", "x"]).is_err());
        assert!(Variables::new(&["1x"]).is_err());
    }
}
