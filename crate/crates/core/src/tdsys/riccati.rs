//! The Riccati-chain families on the (x, v) plane.

use super::{Sode, TimeExpr};
use crate::error::{Error, Result};
use crate::polyvf::{rat, Polynomial, Rational, Variables};

/// Tolerance for sampled constraint checks.
pub const CONSTRAINT_TOL: f64 = 1e-12;

const CONSTRAINT_SAMPLES: usize = 257;

/// Closed time interval used for sampled checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if start.is_finite() && end.is_finite() && start < end {
            Ok(Window { start, end })
        } else {
            Err(Error::Invalid(format!("invalid window [{start}, {end}]")))
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        (self.start..=self.end).contains(&t)
    }

    /// `n` equispaced points including both ends.
    pub fn linspace(&self, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![self.start];
        }
        (0..n).map(|k| self.start + (self.end - self.start) * k as f64 / (n - 1) as f64).collect()
    }
}

impl Default for Window {
    fn default() -> Self {
        Window { start: 0.0, end: 2.0 }
    }
}

/// Chebyshev–Lobatto points `(a+b)/2 + (b−a)/2·cos(kπ/(n−1))`.
pub fn chebyshev_points(w: &Window, n: usize) -> Vec<f64> {
    let mid = 0.5 * (w.start + w.end);
    let half = 0.5 * (w.end - w.start);
    if n < 2 {
        return vec![mid];
    }
    (0..n)
        .map(|k| mid + half * (std::f64::consts::PI * k as f64 / (n - 1) as f64).cos())
        .collect()
}

fn poly(terms: &[(i64, u32, u32)]) -> Polynomial {
    Polynomial::from_terms(&Variables::xv(), terms.iter().map(|&(c, a, b)| (vec![a, b], rat(c))))
        .expect("small degrees")
}

/// `ẍ + 3xẋ + x³ + g(ẋ + x²) + h x + j = 0` in solved form.
pub fn family_ghj(g: TimeExpr, h: TimeExpr, j: TimeExpr) -> Sode {
    Sode::scalar(vec![
        (TimeExpr::one(), poly(&[(-3, 1, 1), (-1, 3, 0)])),
        (g, poly(&[(-1, 0, 1), (-1, 2, 0)])),
        (h, poly(&[(-1, 1, 0)])),
        (j, poly(&[(-1, 0, 0)])),
    ])
    .expect("scalar system")
}

/// Coefficients (g, h, j) of the family solved by [`family_ghj`].
#[derive(Clone, Debug, PartialEq)]
pub struct ChainFamily {
    pub g: TimeExpr,
    pub h: TimeExpr,
    pub j: TimeExpr,
}

impl ChainFamily {
    pub fn new(g: TimeExpr, h: TimeExpr, j: TimeExpr) -> Self {
        ChainFamily { g: g.canonical(), h: h.canonical(), j: j.canonical() }
    }

    /// `ẍ + 3xẋ + x³ = f(t)`, i.e. g = h = 0 and j = −f.
    pub fn forced(f: TimeExpr) -> Self {
        ChainFamily::new(TimeExpr::zero(), TimeExpr::zero(), -f)
    }

    pub fn sode(&self) -> Sode {
        family_ghj(self.g.clone(), self.h.clone(), self.j.clone())
    }

    /// Reads `(g, h, j)` off a scalar equation of the family, if it is one.
    pub fn recognize(sode: &Sode) -> Option<ChainFamily> {
        if sode.dim() != 1 {
            return None;
        }
        let mut by_monomial: std::collections::BTreeMap<Vec<u32>, TimeExpr> = std::collections::BTreeMap::new();
        for (c, p) in &sode.rhs()[0] {
            for (e, q) in p.terms() {
                let term = c.clone().scale(q.clone());
                let slot = by_monomial.entry(e.to_vec()).or_insert_with(TimeExpr::zero);
                *slot = (slot.clone() + term).canonical();
            }
        }
        let mut take = |e: [u32; 2]| by_monomial.remove(&e[..]).unwrap_or_else(TimeExpr::zero);
        let xv = take([1, 1]);
        let x3 = take([3, 0]);
        let v = take([0, 1]);
        let x2 = take([2, 0]);
        let x1 = take([1, 0]);
        let one = take([0, 0]);
        let fixed = xv.as_constant() == Some(rat(-3)) && x3.as_constant() == Some(rat(-1));
        let rest_zero = by_monomial.values().all(TimeExpr::is_zero_structural);
        if !(fixed && rest_zero && (v.clone() - x2).canonical().is_zero_structural()) {
            return None;
        }
        Some(ChainFamily::new(-v, -x1, -one))
    }

    /// `ẍ + 3xẋ + x³ + g(ẋ + x²) + h x + j` at a state with acceleration `a`.
    pub fn lhs(&self, t: f64, x: f64, v: f64, a: f64) -> Result<f64> {
        let (g, h, j) = (self.g.eval(t)?, self.h.eval(t)?, self.j.eval(t)?);
        Ok(a + 3.0 * x * v + x * x * x + g * (v + x * x) + h * x + j)
    }

    /// Residual of the linear companion `w‴ + g w″ + h w′ + j w`.
    pub fn companion_lhs(&self, t: f64, w: [f64; 4]) -> Result<f64> {
        let (g, h, j) = (self.g.eval(t)?, self.h.eval(t)?, self.j.eval(t)?);
        Ok(w[3] + g * w[2] + h * w[1] + j * w[0])
    }
}

/// Coefficients of `ẍ + (b₀ + b₁x)ẋ + a₀ + a₁x + a₂x² + a₃x³ = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Riccati2Spec {
    pub a0: TimeExpr,
    pub a1: TimeExpr,
    pub a2: TimeExpr,
    pub a3: TimeExpr,
    pub b0: TimeExpr,
    pub b1: TimeExpr,
}

impl Riccati2Spec {
    /// Completes `a₀..a₃` with `b₁ = 3√a₃` and `b₀ = a₂/√a₃ − a₃′/(2a₃)`.
    pub fn from_a(a0: TimeExpr, a1: TimeExpr, a2: TimeExpr, a3: TimeExpr) -> Self {
        let (b0, b1) = Self::required_b(&a2, &a3);
        Riccati2Spec {
            a0: a0.canonical(),
            a1: a1.canonical(),
            a2: a2.canonical(),
            a3: a3.canonical(),
            b0,
            b1,
        }
    }

    /// Spec with explicit `b₀, b₁`; call [`Riccati2Spec::validate`] before use.
    pub fn with_b(a0: TimeExpr, a1: TimeExpr, a2: TimeExpr, a3: TimeExpr, b0: TimeExpr, b1: TimeExpr) -> Self {
        Riccati2Spec {
            a0: a0.canonical(),
            a1: a1.canonical(),
            a2: a2.canonical(),
            a3: a3.canonical(),
            b0: b0.canonical(),
            b1: b1.canonical(),
        }
    }

    fn required_b(a2: &TimeExpr, a3: &TimeExpr) -> (TimeExpr, TimeExpr) {
        let s = a3.clone().sqrt();
        let b1 = (TimeExpr::int(3) * s.clone()).canonical();
        let half = TimeExpr::Const(Rational::new(1.into(), 2.into()));
        let b0 = (a2.clone() / s - half * a3.diff() / a3.clone()).canonical();
        (b0, b1)
    }

    /// Checks `a₃ > 0` on the window, `a₃(0) = 1`, and the two relations
    /// fixing `b₀, b₁`, structurally when possible and otherwise on 257
    /// Chebyshev points.
    pub fn validate(&self, window: &Window) -> Result<()> {
        let points = chebyshev_points(window, CONSTRAINT_SAMPLES);
        for &t in &points {
            match self.a3.eval(t) {
                Ok(v) if v > 0.0 => {}
                _ => return Err(Error::Constraint { relation: "a3(t) > 0".into(), t }),
            }
        }
        let at_zero_ok = match self.a3.eval_exact(&rat(0)) {
            Some(q) => q == rat(1),
            None => self.a3.eval(0.0).is_ok_and(|v| (v - 1.0).abs() <= CONSTRAINT_TOL),
        };
        if !at_zero_ok {
            return Err(Error::Constraint { relation: "a3(0) = 1".into(), t: 0.0 });
        }
        let (b0, b1) = Self::required_b(&self.a2, &self.a3);
        for (have, want, relation) in [
            (&self.b1, &b1, "b1 = 3*sqrt(a3)"),
            (&self.b0, &b0, "b0 = a2/sqrt(a3) - a3'/(2*a3)"),
        ] {
            if have.structurally_eq(want) {
                continue;
            }
            for &t in &points {
                let ok = match (have.eval(t), want.eval(t)) {
                    (Ok(a), Ok(b)) => (a - b).abs() <= CONSTRAINT_TOL * b.abs().max(1.0),
                    _ => false,
                };
                if !ok {
                    return Err(Error::Constraint { relation: relation.into(), t });
                }
            }
        }
        Ok(())
    }
}

/// The solved form `ẍ = −(b₀ + b₁x)ẋ − a₀ − a₁x − a₂x² − a₃x³`, after
/// validating the coefficient constraints on `window`.
pub fn riccati2(spec: &Riccati2Spec, window: &Window) -> Result<Sode> {
    spec.validate(window)?;
    Ok(riccati2_unchecked(spec))
}

/// The solved form without constraint checks, for symbolic coefficients.
pub fn riccati2_unchecked(spec: &Riccati2Spec) -> Sode {
    Sode::scalar(vec![
        (spec.b0.clone(), poly(&[(-1, 0, 1)])),
        (spec.b1.clone(), poly(&[(-1, 1, 1)])),
        (spec.a0.clone(), poly(&[(-1, 0, 0)])),
        (spec.a1.clone(), poly(&[(-1, 1, 0)])),
        (spec.a2.clone(), poly(&[(-1, 2, 0)])),
        (spec.a3.clone(), poly(&[(-1, 3, 0)])),
    ])
    .expect("scalar system")
}
