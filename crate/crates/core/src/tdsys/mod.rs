//! Time-dependent vector fields and second-order systems.
//!
//! A [`Tdvf`] is a finite sum `Σ b_k(t) X_k` of polynomial vector fields
//! with [`TimeExpr`] coefficients. A [`Sode`] is a system
//! `ẍ^i = F^i(t, x, ẋ)` whose right-hand side is polynomial in the state.

mod normal;
mod riccati;
mod time;

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::liealg::{FieldSpace, Membership};
use crate::polyvf::{Exponents, PolyVectorField, Polynomial, Variables};

pub use riccati::{chebyshev_points, family_ghj, riccati2, riccati2_unchecked, ChainFamily, Riccati2Spec, Window, CONSTRAINT_TOL};
pub use time::TimeExpr;

/// Groups `(coefficient, field)` pairs by the atoms of their canonical
/// coefficients, dropping terms that cancel.
fn group_terms(terms: &[(TimeExpr, PolyVectorField)]) -> Vec<(TimeExpr, PolyVectorField)> {
    let mut grouped: BTreeMap<TimeExpr, PolyVectorField> = BTreeMap::new();
    for (c, f) in terms {
        if f.is_zero() {
            continue;
        }
        for (q, atom) in c.split_terms() {
            let scaled = f.scale(&q);
            grouped
                .entry(atom)
                .and_modify(|acc| *acc = &*acc + &scaled)
                .or_insert(scaled);
        }
    }
    grouped.into_iter().filter(|(_, f)| !f.is_zero()).collect()
}

/// Time-dependent vector field `X(t, x) = Σ_k b_k(t) X_k(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tdvf {
    vars: Variables,
    terms: Vec<(TimeExpr, PolyVectorField)>,
}

impl Tdvf {
    /// Builds the field and brings it to normal form: coefficients are split
    /// into canonical atoms and fields sharing an atom are summed.
    pub fn new(vars: &Variables, terms: Vec<(TimeExpr, PolyVectorField)>) -> Result<Self> {
        for (_, f) in &terms {
            vars.ensure_same(f.vars())?;
        }
        Ok(Tdvf { vars: vars.clone(), terms: group_terms(&terms) })
    }

    pub fn zero(vars: &Variables) -> Self {
        Tdvf { vars: vars.clone(), terms: Vec::new() }
    }

    /// A time-independent field.
    pub fn autonomous(f: PolyVectorField) -> Self {
        let vars = f.vars().clone();
        Tdvf::new(&vars, vec![(TimeExpr::one(), f)]).expect("shared variables")
    }

    pub fn vars(&self) -> &Variables {
        &self.vars
    }

    pub fn terms(&self) -> &[(TimeExpr, PolyVectorField)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Opaque symbols appearing in the coefficients.
    pub fn symbols(&self) -> Vec<String> {
        let mut out: Vec<String> = self.terms.iter().flat_map(|(c, _)| c.symbols()).collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn substitute(&self, name: &str, value: &TimeExpr) -> Tdvf {
        let terms = self.terms.iter().map(|(c, f)| (c.substitute(name, value), f.clone())).collect();
        Tdvf::new(&self.vars, terms).expect("same variables")
    }

    /// `(X(t,·)^i)` evaluated at `state`.
    pub fn eval(&self, t: f64, state: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.vars.len()];
        for (c, f) in &self.terms {
            let k = c.eval(t)?;
            for (o, v) in out.iter_mut().zip(f.eval_f64(state)) {
                *o += k * v;
            }
        }
        Ok(out)
    }

    /// Fast evaluator with floating-point coefficients.
    pub fn compile(&self) -> CompiledTdvf {
        CompiledTdvf {
            dim: self.vars.len(),
            terms: self
                .terms
                .iter()
                .map(|(c, f)| {
                    let coeff = match c.as_constant() {
                        Some(q) => Coefficient::Const(crate::polyvf::rational_to_f64(&q)),
                        None => Coefficient::Expr(c.clone()),
                    };
                    (coeff, f.components().iter().map(Polynomial::to_f64_terms).collect())
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug)]
enum Coefficient {
    Const(f64),
    Expr(TimeExpr),
}

/// A [`Tdvf`] with coefficients converted to `f64`, for integration.
#[derive(Clone, Debug)]
pub struct CompiledTdvf {
    dim: usize,
    terms: Vec<(Coefficient, Vec<Vec<(f64, Exponents)>>)>,
}

impl CompiledTdvf {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval_into(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (c, comps) in &self.terms {
            let k = match c {
                Coefficient::Const(k) => *k,
                Coefficient::Expr(e) => e.eval(t)?,
            };
            for (o, terms) in out.iter_mut().zip(comps) {
                let mut s = 0.0;
                for (q, e) in terms {
                    let mut m = *q;
                    for (&p, &x) in e.iter().zip(y) {
                        if p > 0 {
                            m *= x.powi(p as i32);
                        }
                    }
                    s += m;
                }
                *o += k * s;
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64, y: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, y, &mut out)?;
        Ok(out)
    }
}

/// Second-order system `ẍ^i = F^i(t, x, v)` with `v = ẋ`, where each
/// `F^i = Σ_k τ_k(t) P_k(x, v)` is polynomial in the state.
#[derive(Clone, Debug, PartialEq)]
pub struct Sode {
    positions: Vec<String>,
    velocities: Vec<String>,
    vars: Variables,
    rhs: Vec<Vec<(TimeExpr, Polynomial)>>,
}

impl Sode {
    /// `rhs[i]` lists `(τ, P)` pairs over the state variables
    /// `positions ++ velocities`.
    pub fn new(positions: &[&str], velocities: &[&str], rhs: Vec<Vec<(TimeExpr, Polynomial)>>) -> Result<Self> {
        if positions.len() != velocities.len() {
            return Err(Error::LengthMismatch { what: "positions vs velocities", left: positions.len(), right: velocities.len() });
        }
        if rhs.len() != positions.len() {
            return Err(Error::LengthMismatch { what: "right-hand sides vs positions", left: rhs.len(), right: positions.len() });
        }
        let names: Vec<&str> = positions.iter().chain(velocities).copied().collect();
        let vars = Variables::new(&names)?;
        let n = positions.len();
        let mut canon = Vec::with_capacity(n);
        for terms in rhs {
            let as_fields: Vec<(TimeExpr, PolyVectorField)> = terms
                .into_iter()
                .map(|(c, p)| {
                    vars.ensure_same(p.vars())?;
                    Ok((c, PolyVectorField::along(p, 0)))
                })
                .collect::<Result<_>>()?;
            canon.push(
                group_terms(&as_fields)
                    .into_iter()
                    .map(|(c, f)| (c, f.component(0).clone()))
                    .collect(),
            );
        }
        Ok(Sode {
            positions: positions.iter().map(|s| s.to_string()).collect(),
            velocities: velocities.iter().map(|s| s.to_string()).collect(),
            vars,
            rhs: canon,
        })
    }

    /// Scalar equation `ẍ = F(t, x, v)` on the state (x, v).
    pub fn scalar(rhs: Vec<(TimeExpr, Polynomial)>) -> Result<Self> {
        Sode::new(&["x"], &["v"], vec![rhs])
    }

    pub fn dim(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[String] {
        &self.positions
    }

    pub fn velocities(&self) -> &[String] {
        &self.velocities
    }

    /// State variables `positions ++ velocities`.
    pub fn vars(&self) -> &Variables {
        &self.vars
    }

    pub fn rhs(&self) -> &[Vec<(TimeExpr, Polynomial)>] {
        &self.rhs
    }

    pub fn substitute(&self, name: &str, value: &TimeExpr) -> Result<Sode> {
        let rhs = self
            .rhs
            .iter()
            .map(|terms| terms.iter().map(|(c, p)| (c.substitute(name, value), p.clone())).collect())
            .collect();
        let pos: Vec<&str> = self.positions.iter().map(String::as_str).collect();
        let vel: Vec<&str> = self.velocities.iter().map(String::as_str).collect();
        Sode::new(&pos, &vel, rhs)
    }
}

/// First-order lift `ẋ^i = v^i, v̇^i = F^i(t, x, v)`.
pub fn lift_sode(s: &Sode) -> Tdvf {
    let n = s.dim();
    let vars = s.vars();
    let mut kinematic = PolyVectorField::zero(vars);
    for i in 0..n {
        kinematic = &kinematic + &PolyVectorField::along(Polynomial::var(vars, n + i), i);
    }
    let mut terms = vec![(TimeExpr::one(), kinematic)];
    for (i, rhs) in s.rhs.iter().enumerate() {
        for (c, p) in rhs {
            terms.push((c.clone(), PolyVectorField::along(p.clone(), n + i)));
        }
    }
    Tdvf::new(vars, terms).expect("fields built over the state variables")
}

/// Outcome of [`decompose_onto_basis`].
#[derive(Clone, Debug, PartialEq)]
pub enum Decomposition {
    /// One canonical coefficient per basis element.
    Coefficients(Vec<TimeExpr>),
    /// The field multiplying `atom` is not in the span.
    Fails { atom: TimeExpr, field: PolyVectorField, residual: PolyVectorField },
}

impl Decomposition {
    pub fn coefficients(&self) -> Option<&[TimeExpr]> {
        match self {
            Decomposition::Coefficients(c) => Some(c),
            Decomposition::Fails { .. } => None,
        }
    }
}

/// Writes `X = Σ_α b_α(t) X_α` over the basis of `basis`, when every
/// atom's field lies in the span.
pub fn decompose_onto_basis(x: &Tdvf, basis: &FieldSpace) -> Result<Decomposition> {
    x.vars().ensure_same(basis.vars())?;
    let mut coeffs: Vec<Vec<TimeExpr>> = vec![Vec::new(); basis.dim()];
    for (atom, field) in x.terms() {
        match basis.span_contains(field)? {
            Membership::Member(c) => {
                for (acc, q) in coeffs.iter_mut().zip(c) {
                    if !q.is_zero() {
                        acc.push(if q.is_one() { atom.clone() } else { atom.clone().scale(q) });
                    }
                }
            }
            Membership::NotMember(residual) => {
                return Ok(Decomposition::Fails { atom: atom.clone(), field: field.clone(), residual })
            }
        }
    }
    Ok(Decomposition::Coefficients(coeffs.into_iter().map(|parts| TimeExpr::Add(parts).canonical()).collect()))
}

/// `Σ_α b_α(t) X_α` as a [`Tdvf`].
pub fn recombine(coeffs: &[TimeExpr], basis: &FieldSpace) -> Result<Tdvf> {
    if coeffs.len() != basis.dim() {
        return Err(Error::LengthMismatch { what: "coefficients vs basis", left: coeffs.len(), right: basis.dim() });
    }
    Tdvf::new(basis.vars(), coeffs.iter().cloned().zip(basis.basis().iter().cloned()).collect())
}

/// Sum of two time-dependent fields.
pub fn add_tdvf(a: &Tdvf, b: &Tdvf) -> Result<Tdvf> {
    a.vars().ensure_same(b.vars())?;
    let terms = a.terms().iter().chain(b.terms()).cloned().collect();
    Tdvf::new(a.vars(), terms)
}

/// `c · X` for a scalar time expression `c`.
pub fn scale_tdvf(x: &Tdvf, c: &TimeExpr) -> Tdvf {
    let terms = x.terms().iter().map(|(k, f)| (c.clone() * k.clone(), f.clone())).collect();
    Tdvf::new(x.vars(), terms).expect("same variables")
}
