//! Adaptive Dormand–Prince 5(4) integration with dense output and blow-up
//! detection.

mod lcg;
mod trajectory;

pub use lcg::Lcg;
pub use trajectory::{Status, Trajectory};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tdsys::{CompiledTdvf, Tdvf};

/// Integrator settings.
#[derive(Clone, Debug, PartialEq)]
pub struct IvpConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    /// Blow-up threshold on the root-mean-square state norm.
    pub blowup_threshold: f64,
    pub max_steps: usize,
}

impl Default for IvpConfig {
    fn default() -> Self {
        IvpConfig { rtol: 1e-10, atol: 1e-12, max_step: 0.01, blowup_threshold: 1e6, max_steps: 1_000_000 }
    }
}

impl IvpConfig {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        IvpConfig { rtol, atol, ..IvpConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::Invalid("tolerances must be positive".into()));
        }
        if !(self.blowup_threshold > 1.0) {
            return Err(Error::Invalid("blow-up threshold must exceed 1".into()));
        }
        if !(self.max_step > 0.0) || self.max_steps == 0 {
            return Err(Error::Invalid("max step and max steps must be positive".into()));
        }
        Ok(())
    }
}

/// Bisection width for locating the blow-up crossing.
pub const BLOWUP_RESOLUTION: f64 = 1e-6;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Right-hand side `ẏ = F(t, y)`.
pub trait Rhs: Sync {
    fn dim(&self) -> usize;
    fn eval_into(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<()>;
}

impl Rhs for CompiledTdvf {
    fn dim(&self) -> usize {
        CompiledTdvf::dim(self)
    }

    fn eval_into(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        CompiledTdvf::eval_into(self, t, y, out)
    }
}

/// Root-mean-square norm used for blow-up detection.
pub fn rms_norm(y: &[f64]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    (y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64).sqrt()
}

struct Stepper<'a, R: Rhs + ?Sized> {
    rhs: &'a R,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
}

impl<'a, R: Rhs + ?Sized> Stepper<'a, R> {
    fn new(rhs: &'a R) -> Self {
        let n = rhs.dim();
        Stepper { rhs, k: std::array::from_fn(|_| vec![0.0; n]), tmp: vec![0.0; n] }
    }

    /// One step from `(t, y)` with `k[0] = F(t, y)` already set. Writes the
    /// fifth-order solution to `out`, leaves `F(t+h, out)` in `k[6]` and
    /// returns the error estimate vector in `tmp`.
    fn step(&mut self, t: f64, y: &[f64], h: f64, out: &mut [f64]) -> Result<()> {
        let n = y.len();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let tmp = &mut self.tmp;
        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        self.rhs.eval_into(t + C2 * h, tmp, k2)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        self.rhs.eval_into(t + C3 * h, tmp, k3)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        self.rhs.eval_into(t + C4 * h, tmp, k4)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        self.rhs.eval_into(t + C5 * h, tmp, k5)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        self.rhs.eval_into(t + h, tmp, k6)?;
        for i in 0..n {
            out[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        self.rhs.eval_into(t + h, out, k7)?;
        for i in 0..n {
            tmp[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        Ok(())
    }

    /// Quartic dense-output coefficient of the last step.
    fn quartic(&self, h: f64) -> Vec<f64> {
        let [k1, _, k3, k4, k5, k6, k7] = &self.k;
        (0..k1.len())
            .map(|i| h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]))
            .collect()
    }
}

fn scaled_error(err: &[f64], y0: &[f64], y1: &[f64], cfg: &IvpConfig) -> f64 {
    let n = err.len().max(1) as f64;
    let s: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sk = cfg.atol + cfg.rtol * a.abs().max(b.abs());
            (e / sk).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

fn initial_step<R: Rhs + ?Sized>(rhs: &R, t0: f64, y0: &[f64], f0: &[f64], span: f64, cfg: &IvpConfig) -> f64 {
    let sk: Vec<f64> = y0.iter().map(|y| cfg.atol + cfg.rtol * y.abs()).collect();
    let norm = |v: &[f64]| rms_norm(&v.iter().zip(&sk).map(|(a, s)| a / s).collect::<Vec<_>>());
    let d0 = norm(y0);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span).min(cfg.max_step);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let mut f1 = vec![0.0; y0.len()];
    if rhs.eval_into(t0 + h0, &y1, &mut f1).is_err() {
        return h0;
    }
    let d2 = norm(&f1.iter().zip(f0).map(|(a, b)| a - b).collect::<Vec<_>>()) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1).min(span).min(cfg.max_step)
}

/// Integrates `system` from `ic` at `t0` to `t1`.
pub fn solve_ivp(system: &Tdvf, ic: &[f64], t0: f64, t1: f64, cfg: &IvpConfig) -> Result<Trajectory> {
    let vars = system.vars().iter().cloned().collect();
    solve_rhs(&system.compile(), vars, ic, t0, t1, cfg)
}

/// [`solve_ivp`] for an arbitrary right-hand side.
pub fn solve_rhs<R: Rhs + ?Sized>(
    rhs: &R,
    vars: Vec<String>,
    ic: &[f64],
    t0: f64,
    t1: f64,
    cfg: &IvpConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let n = rhs.dim();
    if ic.len() != n || vars.len() != n {
        return Err(Error::LengthMismatch { what: "initial condition", left: ic.len(), right: n });
    }
    if !(t0 < t1) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::Invalid(format!("integration span [{t0}, {t1}] is empty")));
    }
    if ic.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("initial condition is not finite".into()));
    }
    let mut y = ic.to_vec();
    let mut f = vec![0.0; n];
    rhs.eval_into(t0, &y, &mut f)?;

    let mut times = vec![t0];
    let mut states = vec![y.clone()];
    let mut derivs = vec![f.clone()];
    let mut quartic: Vec<Vec<f64>> = Vec::new();
    let finish = |times, states, derivs, quartic, status| {
        Trajectory::from_parts(vars.clone(), times, states, derivs, status)?.with_quartic(quartic)
    };

    if rms_norm(&y) > cfg.blowup_threshold {
        return finish(times, states, derivs, quartic, Status::BlewUp { t_event: t0 });
    }

    let mut stepper = Stepper::new(rhs);
    let mut ynew = vec![0.0; n];
    let mut t = t0;
    let mut h = initial_step(rhs, t0, &y, &f, t1 - t0, cfg);
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;
    const BETA: f64 = 0.04;
    const EXPO1: f64 = 0.2 - BETA * 0.75;
    const SAFE: f64 = 0.9;
    const FAC_MIN: f64 = 0.2;
    const FAC_MAX: f64 = 10.0;

    for _ in 0..cfg.max_steps {
        let remaining = t1 - t;
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        if h <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return finish(times, states, derivs, quartic, Status::StepFailure { t, reason: "step size underflow".into() });
        }
        stepper.k[0].copy_from_slice(&f);
        let err = match stepper.step(t, &y, h, &mut ynew) {
            Ok(()) => {
                let e = scaled_error(&stepper.tmp, &y, &ynew, cfg);
                if e.is_finite() && ynew.iter().all(|v| v.is_finite()) { e } else { f64::INFINITY }
            }
            Err(Error::UnboundSymbol(s)) => return Err(Error::UnboundSymbol(s)),
            Err(_) => f64::INFINITY,
        };
        if err <= 1.0 {
            let t_new = if last { t1 } else { t + h };
            if rms_norm(&ynew) > cfg.blowup_threshold {
                let (te, ye, fe) = locate_blowup(rhs, t, &y, &f, h, cfg.blowup_threshold);
                times.push(te);
                states.push(ye);
                derivs.push(fe);
                quartic.push(vec![0.0; n]);
                return finish(times, states, derivs, quartic, Status::BlewUp { t_event: te });
            }
            let fac11 = err.powf(EXPO1);
            let fac = (fac11 / facold.powf(BETA) / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut hnew = h / fac;
            if last_rejected {
                hnew = hnew.min(h);
            }
            facold = err.max(1e-4);
            last_rejected = false;
            t = t_new;
            y.copy_from_slice(&ynew);
            f.copy_from_slice(&stepper.k[6]);
            times.push(t);
            states.push(y.clone());
            derivs.push(f.clone());
            quartic.push(stepper.quartic(h));
            if last {
                return finish(times, states, derivs, quartic, Status::Completed);
            }
            h = hnew.min(cfg.max_step);
        } else {
            let shrink = if err.is_finite() { (err.powf(EXPO1) / SAFE).min(1.0 / FAC_MIN) } else { 1.0 / FAC_MIN };
            h /= shrink;
            last_rejected = true;
        }
    }
    finish(times, states, derivs, quartic, Status::StepFailure { t, reason: format!("exceeded {} steps", cfg.max_steps) })
}

/// Quartic dense-output coefficients of one step per node interval, each
/// taken from the node state with `F` evaluated by `rhs`.
pub(crate) fn step_quartics<R: Rhs + ?Sized>(rhs: &R, times: &[f64], states: &[Vec<f64>], derivs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let mut stepper = Stepper::new(rhs);
    let mut out = vec![0.0; rhs.dim()];
    let mut quartic = Vec::with_capacity(times.len().saturating_sub(1));
    for i in 0..times.len().saturating_sub(1) {
        let h = times[i + 1] - times[i];
        stepper.k[0].copy_from_slice(&derivs[i]);
        stepper.step(times[i], &states[i], h, &mut out)?;
        quartic.push(stepper.quartic(h));
    }
    Ok(quartic)
}

/// Bisects the accepted step `h` from `(t, y)` for the first time the state
/// norm exceeds `threshold`. Returns the crossing time and state.
fn locate_blowup<R: Rhs + ?Sized>(
    rhs: &R,
    t: f64,
    y: &[f64],
    f: &[f64],
    h: f64,
    threshold: f64,
) -> (f64, Vec<f64>, Vec<f64>) {
    let n = y.len();
    let mut stepper = Stepper::new(rhs);
    let mut out = vec![0.0; n];
    let mut advance = |theta: f64, out: &mut Vec<f64>| -> Option<Vec<f64>> {
        stepper.k[0].copy_from_slice(f);
        stepper.step(t, y, theta * h, out).ok()?;
        if out.iter().all(|v| v.is_finite()) { Some(stepper.k[6].clone()) } else { None }
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut hi_state = None;
    while (hi - lo) * h > BLOWUP_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        match advance(mid, &mut out) {
            Some(_) if rms_norm(&out) <= threshold => lo = mid,
            Some(fm) => {
                hi = mid;
                hi_state = Some((out.clone(), fm));
            }
            None => hi = mid,
        }
    }
    let (ye, fe) = match hi_state {
        Some(s) => s,
        None => match advance(hi, &mut out) {
            Some(fe) => (out.clone(), fe),
            None => (vec![f64::INFINITY; n], vec![f64::INFINITY; n]),
        },
    };
    (t + hi * h, ye, fe)
}

/// Integrates every initial condition in `ics` concurrently.
pub fn solve_batch(system: &Tdvf, ics: &[Vec<f64>], t0: f64, t1: f64, cfg: &IvpConfig) -> Vec<Result<Trajectory>> {
    let compiled = system.compile();
    let vars: Vec<String> = system.vars().iter().cloned().collect();
    ics.par_iter().map(|ic| solve_rhs(&compiled, vars.clone(), ic, t0, t1, cfg)).collect()
}

/// Draws initial conditions uniformly from `[lo, hi]^n` and keeps the
/// first `count` whose trajectories complete on `[t0, t1]`. Errors when
/// `max_attempts` draws do not suffice.
#[allow(clippy::too_many_arguments)]
pub fn sample_solutions(
    system: &Tdvf,
    count: usize,
    t0: f64,
    t1: f64,
    cfg: &IvpConfig,
    rng: &mut Lcg,
    range: (f64, f64),
    max_attempts: usize,
) -> Result<Vec<Trajectory>> {
    sample_bounded_solutions(system, count, t0, t1, cfg, rng, range, f64::INFINITY, max_attempts)
}

/// [`sample_solutions`] keeping only trajectories whose states stay within
/// `bound` in every component.
#[allow(clippy::too_many_arguments)]
pub fn sample_bounded_solutions(
    system: &Tdvf,
    count: usize,
    t0: f64,
    t1: f64,
    cfg: &IvpConfig,
    rng: &mut Lcg,
    (lo, hi): (f64, f64),
    bound: f64,
    max_attempts: usize,
) -> Result<Vec<Trajectory>> {
    let compiled = system.compile();
    let vars: Vec<String> = system.vars().iter().cloned().collect();
    let mut out = Vec::with_capacity(count);
    let mut last_event = None;
    for _ in 0..max_attempts {
        if out.len() == count {
            break;
        }
        let ic: Vec<f64> = (0..vars.len()).map(|_| rng.uniform(lo, hi)).collect();
        let tr = solve_rhs(&compiled, vars.clone(), &ic, t0, t1, cfg)?;
        match tr.status() {
            Status::Completed => {
                let peak = tr.states().iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
                if peak <= bound {
                    out.push(tr);
                } else {
                    last_event = Some(t1);
                }
            }
            Status::BlewUp { t_event } => last_event = Some(*t_event),
            Status::StepFailure { t, .. } => last_event = Some(*t),
        }
    }
    if out.len() < count {
        return Err(Error::BlowUp { t: last_event.unwrap_or(t0) });
    }
    Ok(out)
}

/// Finite-difference step used by [`residual`].
pub const RESIDUAL_FD_STEP: f64 = 1e-6;

/// Max-norm mismatch between the derivative of the dense output and the
/// right-hand side of `system`, over `samples` equispaced times.
pub fn residual(traj: &Trajectory, system: &Tdvf, samples: usize) -> Result<f64> {
    if traj.dim() != system.vars().len() {
        return Err(Error::LengthMismatch { what: "trajectory vs system", left: traj.dim(), right: system.vars().len() });
    }
    residual_rhs(traj, &system.compile(), samples)
}

/// [`residual`] for an arbitrary right-hand side.
pub fn residual_rhs<R: Rhs + ?Sized>(traj: &Trajectory, rhs: &R, samples: usize) -> Result<f64> {
    curve_residual(|t| traj.state_at(t), rhs, traj.t_start(), traj.t_end(), samples)
}

/// Max-norm mismatch between finite-difference derivatives of `curve` and
/// `rhs` at `samples` equispaced times of `[a, b]`. Central differences are
/// used in the interior and second-order one-sided ones near the ends.
pub fn curve_residual<R, F>(curve: F, rhs: &R, a: f64, b: f64, samples: usize) -> Result<f64>
where
    R: Rhs + ?Sized,
    F: Fn(f64) -> Result<Vec<f64>>,
{
    let n = rhs.dim();
    let mut worst: f64 = 0.0;
    let mut f = vec![0.0; n];
    let samples = samples.max(2);
    let d = RESIDUAL_FD_STEP.min(0.25 * (b - a));
    for k in 0..samples {
        let t = (a + (b - a) * k as f64 / (samples - 1) as f64).min(b);
        let y = curve(t)?;
        if y.len() != n {
            return Err(Error::LengthMismatch { what: "curve vs system", left: y.len(), right: n });
        }
        let dy: Vec<f64> = if t - d < a {
            let (y1, y2) = (curve(t + d)?, curve(t + 2.0 * d)?);
            (0..n).map(|i| (-3.0 * y[i] + 4.0 * y1[i] - y2[i]) / (2.0 * d)).collect()
        } else if t + d > b {
            let (y1, y2) = (curve(t - d)?, curve(t - 2.0 * d)?);
            (0..n).map(|i| (3.0 * y[i] - 4.0 * y1[i] + y2[i]) / (2.0 * d)).collect()
        } else {
            let (yp, ym) = (curve(t + d)?, curve(t - d)?);
            (0..n).map(|i| (yp[i] - ym[i]) / (2.0 * d)).collect()
        };
        rhs.eval_into(t, &y, &mut f)?;
        for i in 0..n {
            worst = worst.max((dy[i] - f[i]).abs());
        }
    }
    Ok(worst)
}
