//! Time-dependent superposition for the solved Riccati second-order
//! equation through the scaling `z = √a₃·x`.

use super::{verify_in_chart, Chart, CompanionBasis, SuperpositionReport, VerifyOptions};
use crate::error::{Error, Result};
use crate::integrate::Trajectory;
use crate::polyvf::ratio;
use crate::tdsys::{lift_sode, riccati2, ChainFamily, Riccati2Spec, TimeExpr, Window};

/// Chain-family coefficients of the equation satisfied by `z = √a₃·x`.
///
/// With `s = √a₃` and `σ = a₃′/(2a₃)`:
/// `g = a₂/s − 3σ`, `h = a₁ + 2σ² − σ′ − a₂σ/s`, `j = a₀·s`.
pub fn riccati2_to_chain(spec: &Riccati2Spec) -> ChainFamily {
    let s = spec.a3.clone().sqrt();
    let sigma = sigma(spec);
    let g = spec.a2.clone() / s.clone() - TimeExpr::int(3) * sigma.clone();
    let h = spec.a1.clone() + TimeExpr::int(2) * sigma.clone() * sigma.clone()
        - sigma.diff()
        - spec.a2.clone() * sigma / s.clone();
    let j = spec.a0.clone() * s;
    ChainFamily::new(g, h, j)
}

fn sigma(spec: &Riccati2Spec) -> TimeExpr {
    (TimeExpr::constant(ratio(1, 2)) * spec.a3.diff() / spec.a3.clone()).canonical()
}

/// The map `(x, v) ↦ (z, z′) = (s·x, s·(σx + v))` and its inverse.
pub struct Riccati2Chart {
    s: TimeExpr,
    sigma: TimeExpr,
    dsigma: TimeExpr,
}

impl Riccati2Chart {
    pub fn new(spec: &Riccati2Spec) -> Self {
        let sigma = sigma(spec);
        Riccati2Chart { s: spec.a3.clone().sqrt().canonical(), dsigma: sigma.diff(), sigma }
    }

    fn values(&self, t: f64) -> Result<(f64, f64)> {
        let s = self.s.eval(t)?;
        if !(s > 0.0) {
            return Err(Error::Domain { t, what: "sqrt(a3) is not positive".into() });
        }
        Ok((s, self.sigma.eval(t)?))
    }
}

impl Chart for Riccati2Chart {
    fn to_family(&self, traj: &Trajectory) -> Result<Trajectory> {
        traj.map_states(vec!["z".into(), "dz".into()], |t, y, d| {
            let (s, sg) = self.values(t)?;
            let dsg = self.dsigma.eval(t)?;
            let (x, v, a) = (y[0], y[1], d[1]);
            let z1 = s * (sg * x + v);
            let z2 = s * (sg * (sg * x + v) + dsg * x + sg * v + a);
            Ok((vec![s * x, z1], vec![z1, z2]))
        })
    }

    fn state_to_family(&self, t: f64, [x, v]: [f64; 2]) -> Result<[f64; 2]> {
        let (s, sg) = self.values(t)?;
        Ok([s * x, s * (sg * x + v)])
    }

    fn state_from_family(&self, t: f64, [z, dz]: [f64; 2]) -> Result<[f64; 2]> {
        let (s, sg) = self.values(t)?;
        Ok([z / s, (dz - sg * z) / s])
    }
}

/// Superposes three particular solutions of the Riccati second-order
/// equation: the solutions are scaled to the chain family, fitted to
/// `target_ic` at `t0` there, and the superposed curve is scaled back.
/// Returns `(x, v)` at every time in `t_eval`.
pub fn superpose_riccati2_general(
    spec: &Riccati2Spec,
    window: &Window,
    solutions: &[Trajectory],
    target_ic: [f64; 2],
    t0: f64,
    t_eval: &[f64],
    opts: &VerifyOptions,
) -> Result<Vec<[f64; 2]>> {
    spec.validate(window)?;
    let chart = Riccati2Chart::new(spec);
    let mapped: Vec<Trajectory> = solutions.iter().map(|s| chart.to_family(s)).collect::<Result<_>>()?;
    let basis = CompanionBasis::new(&mapped, t0, &opts.ivp, opts.genericity_threshold)?;
    let [z0, dz0] = chart.state_to_family(t0, target_ic)?;
    let c = basis.fit_constants(z0, dz0)?;
    t_eval
        .iter()
        .map(|&t| {
            let (z, dz) = basis.superpose_eval(&c, t)?;
            chart.state_from_family(t, [z, dz])
        })
        .collect()
}

/// [`super::verify_superposition`] for the Riccati second-order equation
/// through the scaling chart. Deviation and residual are measured in the
/// original coordinates, constants live in the scaled ones.
pub fn verify_riccati2(
    spec: &Riccati2Spec,
    solutions: &[Trajectory],
    target: &Trajectory,
    t0: f64,
    window: &Window,
    opts: &VerifyOptions,
) -> Result<SuperpositionReport> {
    let system = lift_sode(&riccati2(spec, window)?);
    let family = riccati2_to_chain(spec);
    verify_in_chart(&system, Some(&family), &Riccati2Chart::new(spec), solutions, target, t0, window, opts)
}
