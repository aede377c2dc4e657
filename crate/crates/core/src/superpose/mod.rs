//! Superposition rules for the Riccati-chain family through its linear
//! third-order companion.
//!
//! A solution `x` of `ẍ + 3xẋ + x³ + g(ẋ + x²) + h x + j = 0` is `w′/w` for
//! a solution `w` of `w‴ + g w″ + h w′ + j w = 0`. Three particular
//! solutions give three independent `w_i`; every other solution is
//! `x = Σc_i w_i′ / Σc_i w_i` for constants `c` defined up to scale.

mod riccati;

pub use riccati::{riccati2_to_chain, superpose_riccati2_general, verify_riccati2, Riccati2Chart};

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::integrate::{curve_residual, solve_rhs, IvpConfig, Rhs, Status, Trajectory};
use crate::tdsys::{ChainFamily, Tdvf, Window};

/// Default lower bound on `|det|` of the companion matrix at `t₀`.
pub const GENERICITY_THRESHOLD: f64 = 1e-8;

/// Default number of interior refits in [`verify_superposition`].
pub const REFIT_COUNT: usize = 10;

/// Relative size below which a constant counts as zero when normalizing.
const NORMALIZE_EPS: f64 = 1e-12;

/// Relative size of `Σc_i w_i` treated as a pole of the superposed curve.
const POLE_EPS: f64 = 1e-12;

/// Relative consistency tolerance for rank-deficient fits.
const DEGENERATE_TOL: f64 = 1e-9;

/// `w′ = x(t)·w` along a fixed trajectory, restricted to one node interval.
struct AlongSolution<'a> {
    sol: &'a Trajectory,
}

impl Rhs for AlongSolution<'_> {
    fn dim(&self) -> usize {
        1
    }

    fn eval_into(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        let t = t.clamp(self.sol.t_start(), self.sol.t_end());
        out[0] = self.sol.state_at(t)?[0] * y[0];
        Ok(())
    }
}

/// A particular solution with its companion scalar `w = exp ∫_{t₀} x`.
#[derive(Clone, Debug)]
pub struct CompanionLift {
    t0: f64,
    sol: Trajectory,
    w: Trajectory,
}

/// Values of a [`CompanionLift`] at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompanionPoint {
    pub x: f64,
    pub v: f64,
    pub w: f64,
    /// `w′ = x·w`
    pub w1: f64,
    /// `w″ = (v + x²)·w`
    pub w2: f64,
}

impl CompanionPoint {
    pub fn triple(&self) -> [f64; 3] {
        [self.w, self.w1, self.w2]
    }
}

fn ensure_usable(sol: &Trajectory) -> Result<()> {
    match sol.status() {
        Status::Completed => {}
        Status::BlewUp { t_event } => return Err(Error::BlowUp { t: *t_event }),
        Status::StepFailure { t, reason } => return Err(Error::StepFailure { t: *t, why: reason.clone() }),
    }
    if sol.dim() != 2 {
        return Err(Error::LengthMismatch { what: "particular solution state (x, v)", left: sol.dim(), right: 2 });
    }
    Ok(())
}

/// Integrates `w′ = x(t)·w`, `w(t₀) = 1` along `sol` over its whole range,
/// one node interval at a time so the integrand stays smooth.
pub fn companion_lift(sol: &Trajectory, t0: f64, cfg: &IvpConfig) -> Result<CompanionLift> {
    ensure_usable(sol)?;
    if !sol.covers(t0) {
        return Err(Error::OutOfRange { t: t0, start: sol.t_start(), end: sol.t_end() });
    }
    let mut cuts: Vec<f64> = sol.times().to_vec();
    let span = sol.t_end() - sol.t_start();
    if cuts.iter().all(|&c| (c - t0).abs() > 1e-12 * span) {
        let k = cuts.partition_point(|&c| c < t0);
        cuts.insert(k, t0);
    }
    let cfg = IvpConfig { blowup_threshold: f64::MAX, ..cfg.clone() };
    let rhs = AlongSolution { sol };
    // each piece starts from 1; pieces are chained by their growth factors
    let mut pieces = Vec::with_capacity(cuts.len() - 1);
    for pair in cuts.windows(2) {
        let tr = solve_rhs(&rhs, vec!["w".into()], &[1.0], pair[0], pair[1], &cfg)?;
        if let Status::StepFailure { t, reason } = tr.status() {
            return Err(Error::StepFailure { t: *t, why: reason.clone() });
        }
        pieces.push(tr);
    }
    let mut starts = vec![1.0; pieces.len()];
    for k in 1..pieces.len() {
        starts[k] = starts[k - 1] * pieces[k - 1].last_state()[0];
    }
    let k0 = cuts.partition_point(|&c| c < t0 - 1e-12 * span).min(pieces.len());
    let anchor = if k0 == pieces.len() { starts[k0 - 1] * pieces[k0 - 1].last_state()[0] } else { starts[k0] };
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut derivs = Vec::new();
    let mut quartic = Vec::new();
    for (k, (p, s)) in pieces.iter().zip(&starts).enumerate() {
        let s = s / anchor;
        let skip = if k == 0 { 0 } else { 1 };
        for ((&t, y), d) in p.times().iter().zip(p.states()).zip(p.derivs()).skip(skip) {
            times.push(t);
            states.push(vec![y[0] * s]);
            derivs.push(vec![d[0] * s]);
        }
        quartic.extend(p.quartic().iter().map(|q| vec![q[0] * s]));
    }
    let w = Trajectory::from_parts(vec!["w".into()], times, states, derivs, Status::Completed)?.with_quartic(quartic)?;
    Ok(CompanionLift { t0, sol: sol.clone(), w })
}

impl CompanionLift {
    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn solution(&self) -> &Trajectory {
        &self.sol
    }

    pub fn w_trajectory(&self) -> &Trajectory {
        &self.w
    }

    pub fn t_start(&self) -> f64 {
        self.sol.t_start()
    }

    pub fn t_end(&self) -> f64 {
        self.sol.t_end()
    }

    pub fn eval(&self, t: f64) -> Result<CompanionPoint> {
        let s = self.sol.state_at(t)?;
        let w = self.w.state_at(t)?[0];
        let (x, v) = (s[0], s[1]);
        Ok(CompanionPoint { x, v, w, w1: x * w, w2: (v + x * x) * w })
    }

    /// Max of `|w‴ + g w″ + h w′ + j w|` at `samples` equispaced times
    /// across the lift, with `w‴ = (v̇ + 3xv + x³)·w` and `v̇` taken from
    /// the dense output of the particular solution.
    pub fn companion_residual(&self, family: &ChainFamily, samples: usize) -> Result<f64> {
        let (a, b) = (self.t_start(), self.t_end());
        let n = samples.max(2);
        let mut worst: f64 = 0.0;
        for k in 0..n {
            let t = (a + (b - a) * k as f64 / (n - 1) as f64).min(b);
            let p = self.eval(t)?;
            let (y, d) = self.sol.dense_eval(t)?;
            let (x, v) = (y[0], y[1]);
            let w3 = (d[1] + 3.0 * x * v + x * x * x) * p.w;
            worst = worst.max(family.companion_lhs(t, [p.w, p.w1, p.w2, w3])?.abs());
        }
        Ok(worst)
    }
}

/// Constants `c` of a superposition, defined up to a nonzero factor.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperpositionConstants {
    pub raw: [f64; 3],
    /// `raw / raw[pivot]`, so the first nonzero entry is 1.
    pub normalized: [f64; 3],
    pub pivot: usize,
    /// `(c₂/c₁, c₃/c₁)` when `c₁ ≠ 0`.
    pub chart: Option<(f64, f64)>,
    /// The fit came from a rank-deficient but consistent system.
    pub degenerate: bool,
}

impl SuperpositionConstants {
    pub fn new(raw: [f64; 3]) -> Result<Self> {
        Self::with_flag(raw, false)
    }

    fn with_flag(raw: [f64; 3], degenerate: bool) -> Result<Self> {
        let big = raw.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        if !(big > 0.0) || raw.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid(format!("superposition constants {raw:?} are zero or not finite")));
        }
        let pivot = raw.iter().position(|c| c.abs() > NORMALIZE_EPS * big).expect("some entry is the maximum");
        Ok(Self::normalized_at(raw, pivot, degenerate))
    }

    fn normalized_at(raw: [f64; 3], pivot: usize, degenerate: bool) -> Self {
        let p = raw[pivot];
        let normalized = raw.map(|c| c / p);
        let chart = (pivot == 0).then_some((normalized[1], normalized[2]));
        SuperpositionConstants { raw, normalized, pivot, chart, degenerate }
    }

    /// Same constants normalized on a given entry.
    pub fn renormalized(&self, pivot: usize) -> Self {
        Self::normalized_at(self.raw, pivot, self.degenerate)
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::with_flag(self.raw.map(|c| lambda * c), self.degenerate)
    }
}

/// Three companion lifts sharing a reference time, with the matrix of
/// `(w_i, w_i′, w_i″)(t₀)`.
#[derive(Clone, Debug)]
pub struct CompanionBasis {
    t0: f64,
    lifts: Vec<CompanionLift>,
    det: f64,
    threshold: f64,
}

impl CompanionBasis {
    /// Lifts three particular solutions at `t0` and checks genericity.
    pub fn new(solutions: &[Trajectory], t0: f64, cfg: &IvpConfig, threshold: f64) -> Result<Self> {
        if solutions.len() != 3 {
            return Err(Error::LengthMismatch { what: "particular solutions", left: solutions.len(), right: 3 });
        }
        let lifts: Vec<CompanionLift> = solutions.iter().map(|s| companion_lift(s, t0, cfg)).collect::<Result<_>>()?;
        Self::from_lifts(lifts, threshold)
    }

    pub fn from_lifts(lifts: Vec<CompanionLift>, threshold: f64) -> Result<Self> {
        if lifts.len() != 3 {
            return Err(Error::LengthMismatch { what: "companion lifts", left: lifts.len(), right: 3 });
        }
        let t0 = lifts[0].t0;
        if lifts.iter().any(|l| l.t0 != t0) {
            return Err(Error::Invalid("companion lifts use different reference times".into()));
        }
        let mut basis = CompanionBasis { t0, lifts, det: 0.0, threshold };
        basis.det = basis.matrix_at(t0)?.determinant();
        Ok(basis)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn lifts(&self) -> &[CompanionLift] {
        &self.lifts
    }

    /// Determinant of the matrix with rows `(w_i, w_i′, w_i″)(t₀)`.
    pub fn determinant(&self) -> f64 {
        self.det
    }

    pub fn is_generic(&self) -> bool {
        self.det.abs() > self.threshold
    }

    pub fn t_range(&self) -> (f64, f64) {
        let a = self.lifts.iter().map(CompanionLift::t_start).fold(f64::NEG_INFINITY, f64::max);
        let b = self.lifts.iter().map(CompanionLift::t_end).fold(f64::INFINITY, f64::min);
        (a, b)
    }

    /// Matrix whose column `i` is `(w_i, w_i′, w_i″)(t)`.
    fn matrix_at(&self, t: f64) -> Result<Matrix3<f64>> {
        let mut m = Matrix3::zeros();
        for (i, l) in self.lifts.iter().enumerate() {
            let p = l.eval(t)?;
            m.set_column(i, &Vector3::from(p.triple()));
        }
        Ok(m)
    }

    /// Constants with `W_c = 1`, `W_c′ = x`, `W_c″ = v + x²` at time `t`,
    /// where `W_c = Σc_i w_i`.
    ///
    /// Below the genericity threshold the system is solved in the
    /// minimum-norm sense; a consistent solution is returned flagged
    /// `degenerate`, an inconsistent one is a non-generic error.
    pub fn fit_at(&self, t: f64, x: f64, v: f64) -> Result<SuperpositionConstants> {
        let m = self.matrix_at(t)?;
        let rhs = Vector3::new(1.0, x, v + x * x);
        let det = m.determinant();
        if det.abs() > self.threshold {
            let c = m.lu().solve(&rhs).ok_or_else(|| Error::NonGeneric(format!("singular companion matrix at t = {t}")))?;
            return SuperpositionConstants::new([c[0], c[1], c[2]]);
        }
        let svd = m.svd(true, true);
        let smax = svd.singular_values.max();
        let c = svd
            .solve(&rhs, DEGENERATE_TOL * smax.max(f64::MIN_POSITIVE))
            .map_err(|e| Error::NonGeneric(e.to_string()))?;
        let miss = (m * c - rhs).norm();
        if miss > DEGENERATE_TOL * (1.0 + rhs.norm()) * (1.0 + c.norm()) {
            return Err(Error::NonGeneric(format!(
                "|det| = {:e} at t = {t} is below {:e} and the target is not in the span",
                det.abs(),
                self.threshold
            )));
        }
        SuperpositionConstants::with_flag([c[0], c[1], c[2]], true)
    }

    /// [`CompanionBasis::fit_at`] at the reference time.
    pub fn fit_constants(&self, x0: f64, v0: f64) -> Result<SuperpositionConstants> {
        self.fit_at(self.t0, x0, v0)
    }

    /// `x = Σc_i w_i′ / Σc_i w_i`, `v = Σc_i w_i″ / Σc_i w_i − x²`.
    pub fn superpose_eval(&self, c: &SuperpositionConstants, t: f64) -> Result<(f64, f64)> {
        let n = &c.normalized;
        let (mut den, mut num1, mut num2, mut scale) = (0.0, 0.0, 0.0, 0.0);
        for (l, &ci) in self.lifts.iter().zip(n) {
            let p = l.eval(t)?;
            den += ci * p.w;
            num1 += ci * p.w1;
            num2 += ci * p.w2;
            scale += (ci * p.w).abs();
        }
        if den.abs() <= POLE_EPS * scale {
            return Err(Error::SuperposedPole { t });
        }
        let x = num1 / den;
        Ok((x, num2 / den - x * x))
    }
}

/// Settings for [`verify_superposition`].
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub genericity_threshold: f64,
    /// Comparison points across the window.
    pub samples: usize,
    pub residual_samples: usize,
    pub refits: usize,
    pub ivp: IvpConfig,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            genericity_threshold: GENERICITY_THRESHOLD,
            samples: 401,
            residual_samples: 1000,
            refits: REFIT_COUNT,
            ivp: IvpConfig::default(),
        }
    }
}

/// Evidence gathered by [`verify_superposition`].
#[derive(Clone, Debug, PartialEq)]
pub struct SuperpositionReport {
    pub t0: f64,
    pub window: Window,
    pub determinant: f64,
    pub constants: SuperpositionConstants,
    /// Sup-norm distance between the superposed state and the target.
    pub deviation: f64,
    /// ODE residual of the superposed curve.
    pub residual: f64,
    /// Largest companion residual among the particular solutions.
    pub companion_residual: Option<f64>,
    /// Refit times with constants normalized on the reference pivot.
    pub refits: Vec<(f64, [f64; 3])>,
    /// Largest pairwise difference among the refitted constants.
    pub drift: f64,
}

impl SuperpositionReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.deviation < tol && self.residual < tol && self.drift < tol
    }
}

/// Pointwise change of coordinates between the original system and the
/// chain family in which superposition takes place.
pub trait Chart: Sync {
    /// Maps a whole trajectory (states and node derivatives).
    fn to_family(&self, traj: &Trajectory) -> Result<Trajectory>;
    fn state_to_family(&self, t: f64, state: [f64; 2]) -> Result<[f64; 2]>;
    fn state_from_family(&self, t: f64, state: [f64; 2]) -> Result<[f64; 2]>;
}

/// The chart of a system already in the chain family.
pub struct IdentityChart;

impl Chart for IdentityChart {
    fn to_family(&self, traj: &Trajectory) -> Result<Trajectory> {
        Ok(traj.clone())
    }

    fn state_to_family(&self, _: f64, state: [f64; 2]) -> Result<[f64; 2]> {
        Ok(state)
    }

    fn state_from_family(&self, _: f64, state: [f64; 2]) -> Result<[f64; 2]> {
        Ok(state)
    }
}

fn require_cover(traj: &Trajectory, window: &Window) -> Result<()> {
    ensure_usable(traj)?;
    if !(traj.covers(window.start) && traj.covers(window.end)) {
        return Err(Error::OutOfRange { t: window.end, start: traj.t_start(), end: traj.t_end() });
    }
    Ok(())
}

/// Fits constants at `t0` from the target's state, evaluates the superposed
/// curve across `window`, and reports its deviation from `target`, its ODE
/// residual against `system`, and the drift of constants refitted from the
/// target at interior times.
pub fn verify_superposition(
    system: &Tdvf,
    solutions: &[Trajectory],
    target: &Trajectory,
    t0: f64,
    window: &Window,
    opts: &VerifyOptions,
) -> Result<SuperpositionReport> {
    verify_in_chart(system, None, &IdentityChart, solutions, target, t0, window, opts)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn verify_in_chart(
    system: &Tdvf,
    family: Option<&ChainFamily>,
    chart: &dyn Chart,
    solutions: &[Trajectory],
    target: &Trajectory,
    t0: f64,
    window: &Window,
    opts: &VerifyOptions,
) -> Result<SuperpositionReport> {
    if !window.contains(t0) {
        return Err(Error::OutOfRange { t: t0, start: window.start, end: window.end });
    }
    for s in solutions.iter().chain(std::iter::once(target)) {
        require_cover(s, window)?;
    }
    let mapped: Vec<Trajectory> = solutions.iter().map(|s| chart.to_family(s)).collect::<Result<_>>()?;
    let basis = CompanionBasis::new(&mapped, t0, &opts.ivp, opts.genericity_threshold)?;
    let companion_residual = match family {
        Some(f) => Some(basis.lifts().iter().map(|l| l.companion_residual(f, opts.residual_samples)).try_fold(0.0_f64, |m, r| r.map(|r| m.max(r)))?),
        None => None,
    };

    let target_in_family = |t: f64| -> Result<[f64; 2]> {
        let s = target.state_at(t)?;
        chart.state_to_family(t, [s[0], s[1]])
    };
    let [x0, v0] = target_in_family(t0)?;
    let constants = basis.fit_constants(x0, v0)?;

    let curve = |t: f64| -> Result<Vec<f64>> {
        let (z, dz) = basis.superpose_eval(&constants, t)?;
        Ok(chart.state_from_family(t, [z, dz])?.to_vec())
    };
    let mut deviation: f64 = 0.0;
    for t in window.linspace(opts.samples.max(2)) {
        let s = curve(t)?;
        let y = target.state_at(t)?;
        deviation = deviation.max((s[0] - y[0]).abs()).max((s[1] - y[1]).abs());
    }
    let residual = curve_residual(curve, &system.compile(), window.start, window.end, opts.residual_samples)?;

    let mut refits = Vec::with_capacity(opts.refits);
    for k in 1..=opts.refits {
        let t = window.start + (window.end - window.start) * k as f64 / (opts.refits + 1) as f64;
        let [x, v] = target_in_family(t)?;
        let c = basis.fit_at(t, x, v)?.renormalized(constants.pivot);
        refits.push((t, c.normalized));
    }
    let mut drift: f64 = 0.0;
    for i in 0..3 {
        let vals = refits.iter().map(|(_, c)| c[i]);
        let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if refits.len() > 1 {
            drift = drift.max(hi - lo);
        }
    }
    if drift.is_nan() {
        drift = f64::INFINITY;
    }

    Ok(SuperpositionReport {
        t0,
        window: *window,
        determinant: basis.determinant(),
        constants,
        deviation,
        residual,
        companion_residual,
        refits,
        drift,
    })
}

/// [`verify_superposition`] for a member of the chain family, also
/// reporting the companion residual of the particular solutions.
pub fn verify_family(
    family: &ChainFamily,
    solutions: &[Trajectory],
    target: &Trajectory,
    t0: f64,
    window: &Window,
    opts: &VerifyOptions,
) -> Result<SuperpositionReport> {
    let system = crate::tdsys::lift_sode(&family.sode());
    verify_in_chart(&system, Some(family), &IdentityChart, solutions, target, t0, window, opts)
}

/// Smallest singular value, relative to the largest, of the matrix whose
/// column `i` stacks `(w_i, w_i′, w_i″)(t)` over all `times`. Rank 3 (a gap
/// near zero) means the fourth companion scalar is a fixed combination of
/// the other three across the whole sample set.
pub fn four_solution_rank_gap(lifts: &[CompanionLift], times: &[f64]) -> Result<f64> {
    if lifts.len() != 4 {
        return Err(Error::LengthMismatch { what: "companion lifts", left: lifts.len(), right: 4 });
    }
    let mut m = nalgebra::DMatrix::zeros(3 * times.len().max(2), 4);
    for (k, &t) in times.iter().enumerate() {
        for (i, l) in lifts.iter().enumerate() {
            for (j, v) in l.eval(t)?.triple().into_iter().enumerate() {
                m[(3 * k + j, i)] = v;
            }
        }
    }
    let sv = m.svd(false, false).singular_values;
    Ok(sv.min() / sv.max())
}

#[cfg(test)]
mod tests;
