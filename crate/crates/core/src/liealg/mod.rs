//! Finite-dimensional spans of polynomial vector fields.
//!
//! [`FieldSpace`] keeps its basis together with a reduced row-echelon
//! coordinate matrix over the monomial slots `(component, exponents)`, so
//! membership tests return exact coordinates or an exact nonzero residual.

mod catalog;
mod structure;
mod univariate;

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::polyvf::{bracket, Exponents, PolyVectorField, Polynomial, Rational, Variables};

pub use catalog::{catalog, riccati2_scheme_v2, riccati2_scheme_w, sl3_realization, CATALOG_NAMES};
pub use structure::{killing_signature, KillingSignature, StructureConstants};
pub use univariate::UPoly;

/// Default cap on the dimension explored by [`close_under_bracket`].
pub const DEFAULT_MAX_DIM: usize = 64;

/// Position of one coefficient in a field: (component index, monomial).
pub type Slot = (usize, Exponents);

type SparseVec = BTreeMap<Slot, Rational>;

fn field_to_sparse(f: &PolyVectorField) -> SparseVec {
    let mut v = SparseVec::new();
    for (i, p) in f.components().iter().enumerate() {
        for (e, c) in p.terms() {
            v.insert((i, e.clone()), c.clone());
        }
    }
    v
}

fn sparse_to_field(vars: &Variables, v: &SparseVec) -> PolyVectorField {
    let mut comps: Vec<Vec<(Exponents, Rational)>> = vec![Vec::new(); vars.len()];
    for ((i, e), c) in v {
        comps[*i].push((e.clone(), c.clone()));
    }
    let comps = comps
        .into_iter()
        .map(|terms| {
            let mut p = Polynomial::zero(vars);
            for (e, c) in terms {
                p = &p + &Polynomial::monomial(vars, e, c);
            }
            p
        })
        .collect();
    PolyVectorField::new(vars, comps).expect("components built over vars")
}

/// `a -= f * b`, dropping entries that cancel.
fn axpy(a: &mut SparseVec, f: &Rational, b: &SparseVec) {
    for (k, c) in b {
        let delta = f * c;
        match a.get_mut(k) {
            Some(x) => {
                *x -= delta;
                if x.is_zero() {
                    a.remove(k);
                }
            }
            None => {
                a.insert(k.clone(), -delta);
            }
        }
    }
}

#[derive(Clone, Debug)]
struct EchelonRow {
    pivot: Slot,
    /// Normalized so that the pivot entry is 1; zero on every other pivot.
    vec: SparseVec,
    /// `vec` expressed in the basis.
    combo: Vec<Rational>,
}

/// Result of a span membership test.
#[derive(Clone, Debug, PartialEq)]
pub enum Membership {
    /// Exact coordinates in the basis order.
    Member(Vec<Rational>),
    /// The reduced residual, nonzero by construction.
    NotMember(PolyVectorField),
}

impl Membership {
    pub fn coordinates(&self) -> Option<&[Rational]> {
        match self {
            Membership::Member(c) => Some(c),
            Membership::NotMember(_) => None,
        }
    }

    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member(_))
    }
}

/// The span of a list of linearly independent polynomial vector fields.
#[derive(Clone, Debug)]
pub struct FieldSpace {
    vars: Variables,
    basis: Vec<PolyVectorField>,
    rows: Vec<EchelonRow>,
    monomials: BTreeSet<Slot>,
}

impl FieldSpace {
    pub fn empty(vars: &Variables) -> Self {
        FieldSpace { vars: vars.clone(), basis: Vec::new(), rows: Vec::new(), monomials: BTreeSet::new() }
    }

    /// Builds a space whose basis is exactly `basis`; fails if the fields
    /// are linearly dependent.
    pub fn new(vars: &Variables, basis: &[PolyVectorField]) -> Result<Self> {
        let mut s = Self::empty(vars);
        for (i, f) in basis.iter().enumerate() {
            if !s.push(f)? {
                return Err(Error::Invalid(format!(
                    "basis field #{} ({f}) is a combination of the previous ones",
                    i + 1
                )));
            }
        }
        Ok(s)
    }

    /// Builds the span of `fields`, skipping any that are dependent on the
    /// ones already kept.
    pub fn spanned_by(vars: &Variables, fields: &[PolyVectorField]) -> Result<Self> {
        let mut s = Self::empty(vars);
        for f in fields {
            s.push(f)?;
        }
        Ok(s)
    }

    pub fn vars(&self) -> &Variables {
        &self.vars
    }

    pub fn basis(&self) -> &[PolyVectorField] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn monomial_index(&self) -> &BTreeSet<Slot> {
        &self.monomials
    }

    fn reduce(&self, f: &PolyVectorField) -> (SparseVec, Vec<Rational>) {
        let mut v = field_to_sparse(f);
        let mut coords = vec![Rational::zero(); self.basis.len()];
        for row in &self.rows {
            let Some(factor) = v.get(&row.pivot).cloned() else { continue };
            axpy(&mut v, &factor, &row.vec);
            for (c, r) in coords.iter_mut().zip(&row.combo) {
                *c += &factor * r;
            }
        }
        (v, coords)
    }

    /// Adds `f` to the basis when it is independent; returns whether it was added.
    fn push(&mut self, f: &PolyVectorField) -> Result<bool> {
        self.vars.ensure_same(f.vars())?;
        let (mut residual, coords) = self.reduce(f);
        let Some((pivot, lead)) = residual.iter().next().map(|(k, c)| (k.clone(), c.clone())) else {
            return Ok(false);
        };
        let inv = Rational::one() / lead;
        for c in residual.values_mut() {
            *c *= &inv;
        }
        let mut combo: Vec<Rational> = coords.iter().map(|c| -c * &inv).collect();
        combo.push(inv);
        for row in &mut self.rows {
            row.combo.push(Rational::zero());
            if let Some(g) = row.vec.get(&pivot).cloned() {
                axpy(&mut row.vec, &g, &residual);
                for (a, b) in row.combo.iter_mut().zip(&combo) {
                    *a -= &g * b;
                }
            }
        }
        for (i, p) in f.components().iter().enumerate() {
            for e in p.terms().keys() {
                self.monomials.insert((i, e.clone()));
            }
        }
        self.rows.push(EchelonRow { pivot, vec: residual, combo });
        self.basis.push(f.clone());
        Ok(true)
    }

    /// Decides membership of `f` exactly.
    pub fn span_contains(&self, f: &PolyVectorField) -> Result<Membership> {
        self.vars.ensure_same(f.vars())?;
        let (residual, coords) = self.reduce(f);
        Ok(if residual.is_empty() {
            Membership::Member(coords)
        } else {
            Membership::NotMember(sparse_to_field(&self.vars, &residual))
        })
    }

    pub fn contains(&self, f: &PolyVectorField) -> Result<bool> {
        Ok(self.span_contains(f)?.is_member())
    }

    /// True when `self ⊆ other`.
    pub fn is_subspace_of(&self, other: &FieldSpace) -> Result<bool> {
        for f in &self.basis {
            if !other.contains(f)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn same_span(&self, other: &FieldSpace) -> Result<bool> {
        Ok(self.dim() == other.dim() && self.is_subspace_of(other)?)
    }

    /// Coordinates of every basis field of `other` in this basis (row per
    /// field of `other`), or `None` if `other` is not contained here.
    pub fn change_of_basis(&self, other: &FieldSpace) -> Result<Option<Vec<Vec<Rational>>>> {
        let mut out = Vec::with_capacity(other.dim());
        for f in other.basis() {
            match self.span_contains(f)? {
                Membership::Member(c) => out.push(c),
                Membership::NotMember(_) => return Ok(None),
            }
        }
        Ok(Some(out))
    }

    /// Checks that every pairwise bracket of the basis stays in the span.
    pub fn is_bracket_closed(&self) -> Result<bool> {
        Ok(self.bracket_failures()?.is_empty())
    }

    fn bracket_failures(&self) -> Result<Vec<BracketWitness>> {
        pairwise_failures(&self.basis, &self.basis, self, true)
    }
}

/// A bracket `[left, right]` of basis elements that is not in the target span.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketWitness {
    pub left: usize,
    pub right: usize,
    pub bracket: PolyVectorField,
    pub residual: PolyVectorField,
}

fn pairwise_failures(
    lhs: &[PolyVectorField],
    rhs: &[PolyVectorField],
    target: &FieldSpace,
    skip_symmetric: bool,
) -> Result<Vec<BracketWitness>> {
    let mut out = Vec::new();
    for (i, a) in lhs.iter().enumerate() {
        for (j, b) in rhs.iter().enumerate() {
            if skip_symmetric && j <= i {
                continue;
            }
            let br = bracket(a, b)?;
            if let Membership::NotMember(residual) = target.span_contains(&br)? {
                out.push(BracketWitness { left: i, right: j, bracket: br, residual });
            }
        }
    }
    Ok(out)
}

/// Outcome of [`close_under_bracket`].
#[derive(Clone, Debug)]
pub struct Closure {
    pub space: FieldSpace,
    /// Present exactly when `closed`.
    pub structure: Option<StructureConstants>,
    pub closed: bool,
    /// When not closed: the bracket that would have exceeded `max_dim`.
    pub overflow: Option<BracketWitness>,
    /// Brackets of independent generators that leave the generators' own span.
    pub generator_escapes: Vec<BracketWitness>,
}

/// Adjoins brackets of basis pairs until the span is closed or its
/// dimension would exceed `max_dim`. Pairs are visited as (α, β) with
/// α < β, β increasing, so the output basis is deterministic.
pub fn close_under_bracket(generators: &[PolyVectorField], max_dim: usize) -> Result<Closure> {
    let vars = match generators.first() {
        Some(g) => g.vars().clone(),
        None => return Err(Error::Invalid("no generators given".into())),
    };
    let initial = FieldSpace::spanned_by(&vars, generators)?;
    if initial.dim() > max_dim {
        return Err(Error::Invalid(format!(
            "{} independent generators exceed max_dim = {max_dim}",
            initial.dim()
        )));
    }
    let generator_escapes = initial.bracket_failures()?;
    let mut space = initial;
    let mut j = 1;
    while j < space.dim() {
        for i in 0..j {
            let br = bracket(&space.basis[i], &space.basis[j])?;
            if let Membership::NotMember(residual) = space.span_contains(&br)? {
                if space.dim() == max_dim {
                    return Ok(Closure {
                        space,
                        structure: None,
                        closed: false,
                        overflow: Some(BracketWitness { left: i, right: j, bracket: br, residual }),
                        generator_escapes,
                    });
                }
                space.push(&br)?;
            }
        }
        j += 1;
    }
    let structure = StructureConstants::from_space(&space)?;
    Ok(Closure { space, structure: Some(structure), closed: true, overflow: None, generator_escapes })
}

/// Verdict of [`check_scheme`]; witnesses list every failing bracket.
#[derive(Clone, Debug)]
pub struct SchemeReport {
    pub w_closed: bool,
    pub w_witnesses: Vec<BracketWitness>,
    pub action_ok: bool,
    pub action_witnesses: Vec<BracketWitness>,
    pub v2_closed: bool,
    pub v2_witnesses: Vec<BracketWitness>,
}

impl SchemeReport {
    /// `[W,W] ⊂ W` and `[W,V₂] ⊂ V₂`.
    pub fn is_scheme(&self) -> bool {
        self.w_closed && self.action_ok
    }
}

/// Checks the quasi-Lie scheme conditions for the pair (W, V₂).
pub fn check_scheme(w: &FieldSpace, v2: &FieldSpace) -> Result<SchemeReport> {
    w.vars().ensure_same(v2.vars())?;
    for (i, f) in w.basis().iter().enumerate() {
        if !v2.contains(f)? {
            return Err(Error::NotInSpan(format!("W basis field #{} ({f}) of V2", i + 1)));
        }
    }
    let w_witnesses = w.bracket_failures()?;
    let action_witnesses = pairwise_failures(w.basis(), v2.basis(), v2, false)?;
    let v2_witnesses = v2.bracket_failures()?;
    Ok(SchemeReport {
        w_closed: w_witnesses.is_empty(),
        w_witnesses,
        action_ok: action_witnesses.is_empty(),
        action_witnesses,
        v2_closed: v2_witnesses.is_empty(),
        v2_witnesses,
    })
}
