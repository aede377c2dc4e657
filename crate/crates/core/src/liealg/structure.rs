use num_traits::Zero;

use super::{FieldSpace, Membership, UPoly};
use crate::error::{Error, Result};
use crate::polyvf::{bracket, Rational};

/// `[X_α, X_β] = Σ_γ c[α][β][γ] X_γ` in a fixed basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureConstants {
    dim: usize,
    data: Vec<Rational>,
}

impl StructureConstants {
    pub fn zero(dim: usize) -> Self {
        StructureConstants { dim, data: vec![Rational::zero(); dim * dim * dim] }
    }

    /// Builds the tensor from explicit entries, validating shape only.
    pub fn from_tensor(dim: usize, data: Vec<Rational>) -> Result<Self> {
        if data.len() != dim * dim * dim {
            return Err(Error::LengthMismatch { what: "structure tensor", left: data.len(), right: dim * dim * dim });
        }
        Ok(StructureConstants { dim, data })
    }

    /// Structure constants of a bracket-closed space in its own basis.
    pub fn from_space(space: &FieldSpace) -> Result<Self> {
        let n = space.dim();
        let mut sc = Self::zero(n);
        for a in 0..n {
            for b in (a + 1)..n {
                let br = bracket(&space.basis()[a], &space.basis()[b])?;
                match space.span_contains(&br)? {
                    Membership::Member(coords) => {
                        for (g, c) in coords.into_iter().enumerate() {
                            let (ba, ab) = (sc.idx(b, a, g), sc.idx(a, b, g));
                            sc.data[ba] = -c.clone();
                            sc.data[ab] = c;
                        }
                    }
                    Membership::NotMember(_) => {
                        return Err(Error::NotInSpan(format!("[basis #{}, basis #{}]", a + 1, b + 1)))
                    }
                }
            }
        }
        Ok(sc)
    }

    fn idx(&self, a: usize, b: usize, g: usize) -> usize {
        (a * self.dim + b) * self.dim + g
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, a: usize, b: usize, g: usize) -> &Rational {
        &self.data[self.idx(a, b, g)]
    }

    /// Nonzero entries as (α, β, γ, c) with α < β.
    pub fn nonzero_entries(&self) -> Vec<(usize, usize, usize, Rational)> {
        let mut out = Vec::new();
        for a in 0..self.dim {
            for b in (a + 1)..self.dim {
                for g in 0..self.dim {
                    let c = self.get(a, b, g);
                    if !c.is_zero() {
                        out.push((a, b, g, c.clone()));
                    }
                }
            }
        }
        out
    }

    pub fn is_antisymmetric(&self) -> bool {
        (0..self.dim).all(|a| {
            (0..self.dim).all(|b| (0..self.dim).all(|g| *self.get(a, b, g) == -self.get(b, a, g)))
        })
    }

    /// Exact Jacobi identity on the abstract tensor.
    pub fn satisfies_jacobi(&self) -> bool {
        let n = self.dim;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for e in 0..n {
                        let mut s = Rational::zero();
                        for d in 0..n {
                            s += self.get(b, c, d) * self.get(a, d, e);
                            s += self.get(c, a, d) * self.get(b, d, e);
                            s += self.get(a, b, d) * self.get(c, d, e);
                        }
                        if !s.is_zero() {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// `K_{αβ} = Σ_{γδ} c_{αγ}^δ c_{βδ}^γ = tr(ad_α ad_β)`.
    pub fn killing_matrix(&self) -> Vec<Vec<Rational>> {
        let n = self.dim;
        let mut k = vec![vec![Rational::zero(); n]; n];
        for a in 0..n {
            for b in a..n {
                let mut s = Rational::zero();
                for g in 0..n {
                    for d in 0..n {
                        let x = self.get(a, g, d);
                        if x.is_zero() {
                            continue;
                        }
                        s += x * self.get(b, d, g);
                    }
                }
                k[b][a] = s.clone();
                k[a][b] = s;
            }
        }
        k
    }
}

/// Inertia of the Killing form: eigenvalue counts by sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KillingSignature {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl KillingSignature {
    pub fn is_nondegenerate(&self) -> bool {
        self.zero == 0
    }
}

/// Signature of the Killing form, counted exactly from the rational
/// characteristic polynomial (square-free factorization + Sturm chains).
pub fn killing_signature(c: &StructureConstants) -> KillingSignature {
    if c.dim() == 0 {
        return KillingSignature { positive: 0, negative: 0, zero: 0 };
    }
    let k = c.killing_matrix();
    let (positive, negative, zero) = UPoly::characteristic(&k).real_root_signs();
    debug_assert_eq!(positive + negative + zero, c.dim(), "symmetric matrix has only real eigenvalues");
    KillingSignature { positive, negative, zero }
}
