//! Built-in bases on the (x, v) plane.

use crate::error::{Error, Result};
use crate::polyvf::{rat, PolyVectorField, Polynomial, Variables};

pub const CATALOG_NAMES: [&str; 3] = ["sl3_realization", "riccati2_scheme_V2", "riccati2_scheme_W"];

/// Polynomial on (x, v) from `(coefficient, deg_x, deg_v)` triples.
fn p(terms: &[(i64, u32, u32)]) -> Polynomial {
    let vars = Variables::xv();
    Polynomial::from_terms(&vars, terms.iter().map(|&(c, a, b)| (vec![a, b], rat(c)))).expect("small degrees")
}

fn f(dx: &[(i64, u32, u32)], dv: &[(i64, u32, u32)]) -> PolyVectorField {
    PolyVectorField::new(&Variables::xv(), vec![p(dx), p(dv)]).expect("two components")
}

/// X₁,…,X₈: the eight-dimensional realization of sl(3,ℝ) attached to
/// ẍ + 3xẋ + x³ = f(t).
pub fn sl3_realization() -> Vec<PolyVectorField> {
    vec![
        f(&[(1, 0, 1)], &[(-3, 1, 1), (-1, 3, 0)]),
        f(&[], &[(1, 0, 0)]),
        f(&[(-1, 0, 0)], &[(3, 1, 0)]),
        f(&[(1, 1, 0)], &[(-2, 2, 0)]),
        f(&[(1, 0, 1), (2, 2, 0)], &[(-1, 1, 1), (-3, 3, 0)]),
        f(&[(2, 1, 1), (2, 3, 0)], &[(2, 0, 2), (-2, 4, 0)]),
        f(&[(1, 0, 0)], &[(-1, 1, 0)]),
        f(&[(2, 1, 0)], &[(4, 0, 1)]),
    ]
}

/// Y₁,…,Y₈ spanning V₂ for the second-order Riccati family.
pub fn riccati2_scheme_v2() -> Vec<PolyVectorField> {
    vec![
        f(&[(1, 0, 1)], &[]),
        f(&[], &[(1, 0, 1)]),
        f(&[], &[(1, 1, 1)]),
        f(&[], &[(1, 0, 0)]),
        f(&[], &[(1, 1, 0)]),
        f(&[], &[(1, 2, 0)]),
        f(&[], &[(1, 3, 0)]),
        f(&[(1, 1, 0)], &[]),
    ]
}

/// W = ⟨Y₂, Y₈⟩.
pub fn riccati2_scheme_w() -> Vec<PolyVectorField> {
    let y = riccati2_scheme_v2();
    vec![y[1].clone(), y[7].clone()]
}

pub fn catalog(name: &str) -> Result<Vec<PolyVectorField>> {
    match name {
        "sl3_realization" | "sl3" => Ok(sl3_realization()),
        "riccati2_scheme_V2" => Ok(riccati2_scheme_v2()),
        "riccati2_scheme_W" => Ok(riccati2_scheme_w()),
        other => Err(Error::UnknownCatalog(other.to_string())),
    }
}
