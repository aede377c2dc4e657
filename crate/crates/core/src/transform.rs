//! Diagonal time-dependent scalings `z̄_i = g_i(t) z_i`, their action on
//! time-dependent fields and trajectories, and quasi-Lie certification.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::integrate::Trajectory;
use crate::liealg::{check_scheme, FieldSpace, SchemeReport};
use crate::polyvf::{PolyVectorField, Polynomial, Variables};
use crate::tdsys::{chebyshev_points, decompose_onto_basis, Decomposition, Tdvf, TimeExpr, Window};

/// Number of sample points used to check that factors do not vanish.
pub const FACTOR_SAMPLES: usize = 257;

/// The map `z̄_i = g_i(t)·z_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingTransform {
    vars: Variables,
    factors: Vec<TimeExpr>,
}

/// Which way [`transform_solution`] maps states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

impl ScalingTransform {
    pub fn new(vars: &Variables, factors: Vec<TimeExpr>) -> Result<Self> {
        if factors.len() != vars.len() {
            return Err(Error::LengthMismatch { what: "scaling factors", left: factors.len(), right: vars.len() });
        }
        for g in &factors {
            if g.is_zero_structural() {
                return Err(Error::Domain { t: f64::NAN, what: format!("scaling factor `{g}` is identically zero") });
            }
        }
        Ok(ScalingTransform { vars: vars.clone(), factors: factors.iter().map(TimeExpr::canonical).collect() })
    }

    pub fn identity(vars: &Variables) -> Self {
        ScalingTransform { vars: vars.clone(), factors: vec![TimeExpr::one(); vars.len()] }
    }

    /// Scales the single variable `name` by `g`, leaving the others fixed.
    pub fn single(vars: &Variables, name: &str, g: TimeExpr) -> Result<Self> {
        let i = vars.index_of(name).ok_or_else(|| Error::Invalid(format!("unknown variable `{name}`")))?;
        let mut factors = vec![TimeExpr::one(); vars.len()];
        factors[i] = g;
        ScalingTransform::new(vars, factors)
    }

    pub fn vars(&self) -> &Variables {
        &self.vars
    }

    pub fn factors(&self) -> &[TimeExpr] {
        &self.factors
    }

    pub fn is_identity(&self) -> bool {
        self.factors.iter().all(|g| g.as_constant().is_some_and(|q| q == crate::polyvf::rat(1)))
    }

    pub fn inverse(&self) -> Self {
        ScalingTransform { vars: self.vars.clone(), factors: self.factors.iter().map(|g| g.clone().recip().canonical()).collect() }
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn compose(&self, first: &ScalingTransform) -> Result<Self> {
        self.vars.ensure_same(&first.vars)?;
        let factors = self.factors.iter().zip(&first.factors).map(|(a, b)| (a.clone() * b.clone()).canonical()).collect();
        Ok(ScalingTransform { vars: self.vars.clone(), factors })
    }

    /// Checks every symbol-free factor for zeros or sign changes on
    /// Chebyshev points of `window`.
    pub fn validate(&self, window: &Window) -> Result<()> {
        let points = chebyshev_points(window, FACTOR_SAMPLES);
        for g in self.factors.iter().filter(|g| g.symbols().is_empty()) {
            let mut sign = 0.0;
            for &t in &points {
                let v = g.eval(t)?;
                if v == 0.0 || (sign != 0.0 && v.signum() != sign) {
                    return Err(Error::Domain { t, what: format!("scaling factor `{g}` vanishes") });
                }
                sign = v.signum();
            }
        }
        Ok(())
    }

    fn values(&self, t: f64) -> Result<Vec<f64>> {
        self.factors
            .iter()
            .map(|g| {
                let v = g.eval(t)?;
                if v == 0.0 {
                    Err(Error::Domain { t, what: format!("scaling factor `{g}` vanishes") })
                } else {
                    Ok(v)
                }
            })
            .collect()
    }
}

/// Expresses `X` in the coordinates `z̄ = g(t)·z`: component `i` becomes
/// `g_i·X^i(t, z̄/g) + (g_i′/g_i)·z̄_i`.
pub fn push_forward(x: &Tdvf, tr: &ScalingTransform) -> Result<Tdvf> {
    x.vars().ensure_same(tr.vars())?;
    let vars = x.vars();
    let n = vars.len();
    // (component, exponents of g) -> collected fields with their time coefficient
    let mut buckets: BTreeMap<(usize, Vec<i32>), Vec<(TimeExpr, Polynomial)>> = BTreeMap::new();
    for (c, field) in x.terms() {
        for (i, comp) in field.components().iter().enumerate() {
            for (e, q) in comp.terms() {
                let mut key: Vec<i32> = e.iter().map(|&k| -(k as i32)).collect();
                key[i] += 1;
                let mono = Polynomial::monomial(vars, e.clone(), q.clone());
                buckets.entry((i, key)).or_default().push((c.clone(), mono));
            }
        }
    }
    let mut terms = Vec::new();
    for ((i, key), parts) in buckets {
        let scale: Vec<TimeExpr> = key
            .iter()
            .zip(&tr.factors)
            .filter(|(k, g)| **k != 0 && !g.as_constant().is_some_and(|q| q == crate::polyvf::rat(1)))
            .map(|(k, g)| g.clone().pow(*k))
            .collect();
        for (c, p) in parts {
            let mut factors = vec![c];
            factors.extend(scale.iter().cloned());
            terms.push((TimeExpr::Mul(factors), PolyVectorField::along(p, i)));
        }
    }
    for (i, g) in tr.factors.iter().enumerate() {
        let dg = g.diff();
        if dg.is_zero_structural() {
            continue;
        }
        let log_rate = (dg * g.clone().recip()).canonical();
        terms.push((log_rate, PolyVectorField::along(Polynomial::var(vars, i), i)));
    }
    debug_assert!(terms.iter().all(|(_, f)| f.vars().len() == n));
    Tdvf::new(vars, terms)
}

/// Maps every node state through `tr` (or its inverse). Node derivatives
/// become `g′·z + g·ż`.
pub fn transform_solution(traj: &Trajectory, tr: &ScalingTransform, direction: Direction) -> Result<Trajectory> {
    let names: Vec<String> = tr.vars().to_vec();
    if traj.vars() != names.as_slice() {
        return Err(Error::VariableMismatch { left: traj.vars().to_vec(), right: names });
    }
    let map = match direction {
        Direction::Forward => tr.clone(),
        Direction::Inverse => tr.inverse(),
    };
    let dfactors: Vec<TimeExpr> = map.factors.iter().map(TimeExpr::diff).collect();
    traj.map_states(names, |t, y, dy| {
        let g = map.values(t)?;
        let dg: Vec<f64> = dfactors.iter().map(|d| d.eval(t)).collect::<Result<_>>()?;
        let z = y.iter().zip(&g).map(|(z, g)| g * z).collect();
        let dz = (0..y.len()).map(|i| dg[i] * y[i] + g[i] * dy[i]).collect();
        Ok((z, dz))
    })
}

/// Stage of [`certify_quasi_lie`] that rejected the system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertificateStage {
    /// Some field of `X` lies outside `V₂`.
    ValuesInV2,
    /// `(W, V₂)` is not a scheme.
    Scheme,
    /// The transformed field does not decompose onto the target.
    TargetDecomposition,
}

impl CertificateStage {
    pub fn name(self) -> &'static str {
        match self {
            CertificateStage::ValuesInV2 => "values_in_v2",
            CertificateStage::Scheme => "scheme",
            CertificateStage::TargetDecomposition => "target_decomposition",
        }
    }
}

/// Evidence for a failed stage.
#[derive(Clone, Debug)]
pub struct CertificateFailure {
    pub stage: CertificateStage,
    pub detail: String,
    /// Coefficient atom whose field is outside the span, when applicable.
    pub atom: Option<TimeExpr>,
    pub field: Option<PolyVectorField>,
    pub residual: Option<PolyVectorField>,
}

/// Outcome of [`certify_quasi_lie`].
#[derive(Clone, Debug)]
pub struct QuasiLieCertificate {
    pub scheme: Option<SchemeReport>,
    pub v2_coefficients: Option<Vec<TimeExpr>>,
    pub transformed: Tdvf,
    pub target_coefficients: Option<Vec<TimeExpr>>,
    pub failures: Vec<CertificateFailure>,
    pub verdict: bool,
}

fn decomposition_failure(stage: CertificateStage, d: Decomposition) -> std::result::Result<Vec<TimeExpr>, CertificateFailure> {
    match d {
        Decomposition::Coefficients(c) => Ok(c),
        Decomposition::Fails { atom, field, residual } => Err(CertificateFailure {
            stage,
            detail: format!("field {field} (coefficient {atom}) is not in the span"),
            atom: Some(atom),
            field: Some(field),
            residual: Some(residual),
        }),
    }
}

/// Runs every stage and collects the evidence; the verdict holds when no
/// stage fails. Errors only when `target` is not bracket-closed or the
/// variable lists disagree.
pub fn certify_quasi_lie(
    x: &Tdvf,
    w: &FieldSpace,
    v2: &FieldSpace,
    tr: &ScalingTransform,
    target: &FieldSpace,
) -> Result<QuasiLieCertificate> {
    for vars in [w.vars(), v2.vars(), tr.vars(), target.vars()] {
        x.vars().ensure_same(vars)?;
    }
    if !target.is_bracket_closed()? {
        return Err(Error::Invalid("target space is not closed under the bracket".into()));
    }
    let mut failures = Vec::new();

    let v2_coefficients = match decomposition_failure(CertificateStage::ValuesInV2, decompose_onto_basis(x, v2)?) {
        Ok(c) => Some(c),
        Err(f) => {
            failures.push(f);
            None
        }
    };

    let scheme = match check_scheme(w, v2) {
        Ok(report) => {
            if !report.is_scheme() {
                let witness = report.w_witnesses.first().or(report.action_witnesses.first());
                failures.push(CertificateFailure {
                    stage: CertificateStage::Scheme,
                    detail: "scheme conditions fail".into(),
                    atom: None,
                    field: witness.map(|b| b.bracket.clone()),
                    residual: witness.map(|b| b.residual.clone()),
                });
            }
            Some(report)
        }
        Err(Error::NotInSpan(what)) => {
            failures.push(CertificateFailure {
                stage: CertificateStage::Scheme,
                detail: format!("{what} is not in the span"),
                atom: None,
                field: None,
                residual: None,
            });
            None
        }
        Err(e) => return Err(e),
    };

    let transformed = push_forward(x, tr)?;
    let target_coefficients =
        match decomposition_failure(CertificateStage::TargetDecomposition, decompose_onto_basis(&transformed, target)?) {
            Ok(c) => Some(c),
            Err(f) => {
                failures.push(f);
                None
            }
        };

    Ok(QuasiLieCertificate {
        scheme,
        v2_coefficients,
        transformed,
        target_coefficients,
        verdict: failures.is_empty(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::{residual, solve_ivp, IvpConfig, Lcg};
    use crate::liealg::{riccati2_scheme_v2, riccati2_scheme_w, sl3_realization};
    use crate::polyvf::ratio;
    use crate::tdsys::{family_ghj, lift_sode, riccati2, riccati2_unchecked, Riccati2Spec};

    fn xv() -> Variables {
        Variables::xv()
    }

    fn sym(s: &str) -> TimeExpr {
        TimeExpr::symbol(s)
    }

    fn sl3() -> FieldSpace {
        FieldSpace::new(&xv(), &sl3_realization()).unwrap()
    }

    fn v_scaling(a3: TimeExpr) -> ScalingTransform {
        ScalingTransform::single(&xv(), "v", a3.sqrt().recip()).unwrap()
    }

    fn symbolic_riccati2() -> Tdvf {
        let spec = Riccati2Spec::from_a(sym("a0"), sym("a1"), sym("a2"), sym("a3"));
        lift_sode(&riccati2_unchecked(&spec))
    }

    fn bind(e: &TimeExpr, values: &[(&str, TimeExpr)]) -> TimeExpr {
        values.iter().fold(e.clone(), |acc, (n, v)| acc.substitute(n, v))
    }

    fn sample_values() -> Vec<(&'static str, TimeExpr)> {
        let t = TimeExpr::t;
        vec![
            ("a0", t().cos()),
            ("a1", TimeExpr::one() + t() * t()),
            ("a2", t().sin() - TimeExpr::int(2)),
            ("a3", (TimeExpr::constant(ratio(1, 3)) * t()).exp() + t() * t()),
        ]
    }

    fn assert_same_function(a: &TimeExpr, b: &TimeExpr) {
        if a.canonical().structurally_eq(&b.canonical()) {
            return;
        }
        let values = sample_values();
        let (a, b) = (bind(a, &values), bind(b, &values));
        for k in 0..50 {
            let t = 0.05 + k as f64 * 0.04;
            let (p, q) = (a.eval(t).unwrap(), b.eval(t).unwrap());
            assert!((p - q).abs() <= 1e-12 * q.abs().max(1.0), "{a} vs {b} at {t}: {p} vs {q}");
        }
    }

    #[test]
    fn symbolic_riccati2_becomes_sl3_valued() {
        let out = push_forward(&symbolic_riccati2(), &v_scaling(sym("a3"))).unwrap();
        let d = decompose_onto_basis(&out, &sl3()).unwrap();
        let c = d.coefficients().expect("decomposes onto sl3");
        let s = sym("a3").sqrt();
        let half = TimeExpr::constant(ratio(1, 2));
        let quarter = TimeExpr::constant(ratio(1, 4));
        let expected = [
            s.clone(),
            -(sym("a0") / s.clone()),
            -(half.clone() * sym("a1") / s.clone()),
            half * sym("a2") / s.clone(),
            TimeExpr::zero(),
            TimeExpr::zero(),
            -(TimeExpr::constant(ratio(1, 2)) * sym("a1") / s.clone()),
            -(quarter * sym("a2") / s),
        ];
        for (got, want) in c.iter().zip(&expected) {
            assert_same_function(got, want);
        }
    }

    #[test]
    fn identity_transform_is_a_no_op() {
        let x = symbolic_riccati2();
        assert_eq!(push_forward(&x, &ScalingTransform::identity(&xv())).unwrap(), x);
    }

    #[test]
    fn exponential_a3_gives_a_multiple_of_x1() {
        let a3 = (TimeExpr::int(2) * TimeExpr::t()).exp();
        let spec = Riccati2Spec::from_a(TimeExpr::zero(), TimeExpr::zero(), TimeExpr::zero(), a3.clone());
        let x = lift_sode(&riccati2(&spec, &Window::default()).unwrap());
        let out = push_forward(&x, &v_scaling(a3)).unwrap();
        let x1 = Tdvf::new(&xv(), vec![(TimeExpr::t().exp(), sl3_realization()[0].clone())]).unwrap();
        assert_eq!(out, x1);
    }

    #[test]
    fn certificates() {
        let v2 = FieldSpace::new(&xv(), &riccati2_scheme_v2()).unwrap();
        let w = FieldSpace::new(&xv(), &riccati2_scheme_w()).unwrap();
        let x = symbolic_riccati2();
        let ok = certify_quasi_lie(&x, &w, &v2, &v_scaling(sym("a3")), &sl3()).unwrap();
        assert!(ok.verdict, "{:?}", ok.failures);

        let bad = certify_quasi_lie(&x, &w, &v2, &ScalingTransform::identity(&xv()), &sl3()).unwrap();
        assert!(!bad.verdict);
        assert_eq!(bad.failures.len(), 1);
        assert_eq!(bad.failures[0].stage, CertificateStage::TargetDecomposition);
        assert!(bad.failures[0].residual.as_ref().is_some_and(|r| !r.is_zero()));

        let lie = lift_sode(&family_ghj(TimeExpr::zero(), TimeExpr::zero(), -TimeExpr::t().sin()));
        let cert = certify_quasi_lie(&lie, &sl3(), &sl3(), &ScalingTransform::identity(&xv()), &sl3()).unwrap();
        assert!(cert.verdict);
    }

    #[test]
    fn non_closed_target_is_rejected() {
        let v2 = FieldSpace::new(&xv(), &riccati2_scheme_v2()).unwrap();
        let x = symbolic_riccati2();
        assert!(certify_quasi_lie(&x, &v2, &v2, &ScalingTransform::identity(&xv()), &v2).is_err());
    }

    fn concrete_system() -> Tdvf {
        let t = TimeExpr::t;
        let spec = Riccati2Spec::from_a(TimeExpr::one(), t().cos(), t(), t().exp());
        lift_sode(&riccati2(&spec, &Window::default()).unwrap())
    }

    #[test]
    fn push_forward_is_functorial_and_invertible() {
        let t = TimeExpr::t;
        let vars = xv();
        let t1 = ScalingTransform::new(&vars, vec![TimeExpr::one() + t() * t(), t().exp()]).unwrap();
        let t2 = ScalingTransform::new(&vars, vec![(TimeExpr::int(2) + t().sin()).recip(), t().exp().sqrt()]).unwrap();
        let x = concrete_system();
        let twice = push_forward(&push_forward(&x, &t1).unwrap(), &t2).unwrap().compile();
        let once = push_forward(&x, &t2.compose(&t1).unwrap()).unwrap().compile();
        let back = push_forward(&push_forward(&x, &t1).unwrap(), &t1.inverse()).unwrap().compile();
        let orig = x.compile();
        let mut rng = Lcg::new(7);
        for _ in 0..100 {
            let (tt, y) = (rng.uniform(0.0, 2.0), [rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)]);
            let (a, b) = (twice.eval(tt, &y).unwrap(), once.eval(tt, &y).unwrap());
            let (c, d) = (back.eval(tt, &y).unwrap(), orig.eval(tt, &y).unwrap());
            for i in 0..2 {
                assert!((a[i] - b[i]).abs() < 1e-10);
                assert!((c[i] - d[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn solutions_map_to_solutions() {
        let x = concrete_system();
        let tr = v_scaling(TimeExpr::t().exp());
        let cfg = IvpConfig { max_step: 1e-3, ..IvpConfig::default() };
        let sol = solve_ivp(&x, &[0.3, -0.2], 0.0, 1.0, &cfg).unwrap();
        assert!(sol.is_complete());
        let mapped = transform_solution(&sol, &tr, Direction::Forward).unwrap();
        let r = residual(&mapped, &push_forward(&x, &tr).unwrap(), 1000).unwrap();
        assert!(r < 1e-8, "residual {r}");

        let round = transform_solution(&mapped, &tr, Direction::Inverse).unwrap();
        for (a, b) in round.states().iter().zip(sol.states()) {
            for (p, q) in a.iter().zip(b) {
                assert!((p - q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_trajectory_stays_zero() {
        let x = concrete_system();
        let zero = lift_sode(&family_ghj(TimeExpr::zero(), TimeExpr::zero(), TimeExpr::zero()));
        let sol = solve_ivp(&zero, &[0.0, 0.0], 0.0, 1.0, &IvpConfig::default()).unwrap();
        let tr = ScalingTransform::new(x.vars(), vec![TimeExpr::t().exp(), TimeExpr::t().cos()]).unwrap();
        let mapped = transform_solution(&sol, &tr, Direction::Forward).unwrap();
        assert!(mapped.states().iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn vanishing_factor_is_reported() {
        let tr = ScalingTransform::single(&xv(), "v", TimeExpr::t() - TimeExpr::one()).unwrap();
        assert!(matches!(tr.validate(&Window::default()), Err(Error::Domain { .. })));
        assert!(ScalingTransform::single(&xv(), "v", TimeExpr::zero()).is_err());
    }
}
