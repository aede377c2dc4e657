//! Dense univariate polynomials over ℚ with exact real-root sign counting.

use std::cmp::Ordering;

use num_traits::{One, Signed, Zero};

use crate::polyvf::Rational;

/// Coefficients stored lowest degree first, without trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UPoly(Vec<Rational>);

impl UPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        UPoly(coeffs)
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    fn lead(&self) -> Rational {
        self.0.last().cloned().unwrap_or_else(Rational::zero)
    }

    pub fn derivative(&self) -> Self {
        UPoly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * Rational::from_integer((k as i64).into()))
                .collect(),
        )
    }

    fn sub(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        let z = Rational::zero();
        UPoly::new(
            (0..n)
                .map(|k| self.0.get(k).unwrap_or(&z) - other.0.get(k).unwrap_or(&z))
                .collect(),
        )
    }

    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        assert!(!d.is_zero(), "division by the zero polynomial");
        let mut rem = self.0.clone();
        let dd = d.degree();
        let lead = d.lead();
        if self.is_zero() || self.degree() < dd {
            return (UPoly::new(Vec::new()), self.clone());
        }
        let mut quot = vec![Rational::zero(); self.degree() - dd + 1];
        for k in (0..quot.len()).rev() {
            let f = &rem[k + dd] / &lead;
            if !f.is_zero() {
                for (i, c) in d.0.iter().enumerate() {
                    rem[k + i] -= &f * c;
                }
            }
            quot[k] = f;
        }
        (UPoly::new(quot), UPoly::new(rem))
    }

    fn monic(&self) -> Self {
        let l = self.lead();
        UPoly::new(self.0.iter().map(|c| c / &l).collect())
    }

    pub fn gcd(a: &Self, b: &Self) -> Self {
        let (mut a, mut b) = (a.clone(), b.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.monic()
        }
    }

    fn is_constant(&self) -> bool {
        self.0.len() <= 1
    }

    /// Yun's square-free factorization of a nonzero polynomial:
    /// `self = c · Π fᵢ^i`, returned as `(fᵢ, i)` with each `fᵢ` monic,
    /// square-free and non-constant.
    pub fn square_free(&self) -> Vec<(UPoly, usize)> {
        let mut out = Vec::new();
        if self.is_constant() {
            return out;
        }
        let d = self.derivative();
        let a0 = UPoly::gcd(self, &d);
        let mut b = self.div_rem(&a0).0;
        let c = d.div_rem(&a0).0;
        let mut dd = c.sub(&b.derivative());
        let mut i = 1;
        while !b.is_constant() {
            let a = UPoly::gcd(&b, &dd);
            let b_next = b.div_rem(&a).0;
            let c_next = dd.div_rem(&a).0;
            dd = c_next.sub(&b_next.derivative());
            if !a.is_constant() {
                out.push((a, i));
            }
            b = b_next;
            i += 1;
        }
        out
    }

    /// Sturm sequence of a square-free polynomial.
    fn sturm_sequence(&self) -> Vec<UPoly> {
        let mut seq = vec![self.clone(), self.derivative()];
        loop {
            let n = seq.len();
            if seq[n - 1].is_zero() {
                seq.pop();
                break;
            }
            let r = seq[n - 2].div_rem(&seq[n - 1]).1;
            if r.is_zero() {
                break;
            }
            seq.push(UPoly::new(r.0.iter().map(|c| -c).collect()));
        }
        seq
    }

    fn sign_at(&self, at: Point) -> Ordering {
        let s = match at {
            Point::Zero => self.0.first().cloned().unwrap_or_else(Rational::zero),
            Point::PosInf => self.lead(),
            Point::NegInf => {
                if self.degree().is_multiple_of(2) {
                    self.lead()
                } else {
                    -self.lead()
                }
            }
        };
        if s.is_positive() {
            Ordering::Greater
        } else if s.is_negative() {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }

    /// Distinct real roots in (0, ∞) and (−∞, 0) of a square-free
    /// polynomial with `p(0) ≠ 0`.
    fn sturm_count(&self) -> (usize, usize) {
        let seq = self.sturm_sequence();
        let changes = |at: Point| {
            let signs: Vec<Ordering> =
                seq.iter().map(|p| p.sign_at(at)).filter(|s| *s != Ordering::Equal).collect();
            signs.windows(2).filter(|w| w[0] != w[1]).count()
        };
        let at_zero = changes(Point::Zero);
        (at_zero - changes(Point::PosInf), changes(Point::NegInf) - at_zero)
    }

    /// Counts real roots with multiplicity as (positive, negative, zero).
    pub fn real_root_signs(&self) -> (usize, usize, usize) {
        assert!(!self.is_zero(), "zero polynomial has no finite root count");
        let zeros = self.0.iter().take_while(|c| c.is_zero()).count();
        let rest = UPoly::new(self.0[zeros..].to_vec());
        let (mut pos, mut neg) = (0, 0);
        for (factor, mult) in rest.square_free() {
            let (p, n) = factor.sturm_count();
            pos += p * mult;
            neg += n * mult;
        }
        (pos, neg, zeros)
    }

    /// det(λI − A) by the Faddeev–LeVerrier recursion.
    pub fn characteristic(a: &[Vec<Rational>]) -> Self {
        let n = a.len();
        let mut coeffs = vec![Rational::zero(); n + 1];
        coeffs[n] = Rational::one();
        let mut m = vec![vec![Rational::zero(); n]; n];
        for k in 1..=n {
            // M_k = A M_{k-1} + c_{n-k+1} I
            let mut next = vec![vec![Rational::zero(); n]; n];
            for i in 0..n {
                for j in 0..n {
                    let mut s = Rational::zero();
                    for l in 0..n {
                        if !a[i][l].is_zero() && !m[l][j].is_zero() {
                            s += &a[i][l] * &m[l][j];
                        }
                    }
                    if i == j {
                        s += &coeffs[n - k + 1];
                    }
                    next[i][j] = s;
                }
            }
            m = next;
            let mut tr = Rational::zero();
            for i in 0..n {
                for l in 0..n {
                    tr += &a[i][l] * &m[l][i];
                }
            }
            coeffs[n - k] = -tr / Rational::from_integer((k as i64).into());
        }
        UPoly::new(coeffs)
    }
}

#[derive(Clone, Copy)]
enum Point {
    Zero,
    PosInf,
    NegInf,
}
