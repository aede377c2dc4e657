use super::*;
use crate::integrate::{sample_solutions, solve_ivp, Lcg};
use crate::polyvf::ratio;
use crate::tdsys::{lift_sode, Riccati2Spec, TimeExpr};

fn t() -> TimeExpr {
    TimeExpr::t()
}

fn cfg() -> IvpConfig {
    IvpConfig::default()
}

fn solve(family: &ChainFamily, ic: [f64; 2], t1: f64) -> Trajectory {
    solve_ivp(&lift_sode(&family.sode()), &ic, 0.0, t1, &cfg()).unwrap()
}

fn seeded(family: &ChainFamily, seed: u64, count: usize, window: &Window) -> Vec<Trajectory> {
    let sys = lift_sode(&family.sode());
    sample_solutions(&sys, count, window.start, window.end, &cfg(), &mut Lcg::new(seed), (-1.0, 1.0), 100).unwrap()
}

fn d(e: &TimeExpr, k: usize) -> TimeExpr {
    (0..k).fold(e.clone(), |acc, _| acc.diff())
}

#[test]
fn companion_identity_holds_symbolically() {
    // x = w'/w turns the linear companion into the family, times w
    let fam = ChainFamily::new(t().sin(), TimeExpr::one() + t() * t(), t().exp() * TimeExpr::int(-2));
    let w = TimeExpr::int(2) + t().sin() + TimeExpr::constant(ratio(1, 3)) * t() * t();
    let x = (d(&w, 1) / w.clone()).canonical();
    for k in 0..20 {
        let tt = 0.1 * k as f64;
        let ws = [w.eval(tt).unwrap(), d(&w, 1).eval(tt).unwrap(), d(&w, 2).eval(tt).unwrap(), d(&w, 3).eval(tt).unwrap()];
        let lin = fam.companion_lhs(tt, ws).unwrap();
        let (xv, dx, ddx) = (x.eval(tt).unwrap(), d(&x, 1).eval(tt).unwrap(), d(&x, 2).eval(tt).unwrap());
        let nonlin = fam.lhs(tt, xv, dx, ddx).unwrap() * ws[0];
        assert!((lin - nonlin).abs() < 1e-10 * lin.abs().max(1.0), "t = {tt}: {lin} vs {nonlin}");
    }
}

#[test]
fn lift_of_a_closed_form_solution() {
    let fam = ChainFamily::forced(TimeExpr::zero());
    let sol = solve(&fam, [1.0, -1.0], 1.0);
    let lift = companion_lift(&sol, 0.0, &cfg()).unwrap();
    let p = lift.eval(1.0).unwrap();
    assert!((p.w - 2.0).abs() < 1e-9, "{}", p.w);
    assert!(lift.companion_residual(&fam, 500).unwrap() < 1e-8);
    assert!(crate::integrate::residual(&sol, &lift_sode(&fam.sode()), 1000).unwrap() < 1e-6);
}

#[test]
fn lift_of_the_zero_solution() {
    let fam = ChainFamily::new(TimeExpr::zero(), TimeExpr::zero(), TimeExpr::zero());
    let sol = solve(&fam, [0.0, 0.0], 1.0);
    let lift = companion_lift(&sol, 0.3, &cfg()).unwrap();
    for k in 0..=10 {
        let p = lift.eval(0.1 * k as f64).unwrap();
        assert!((p.w - 1.0).abs() < 1e-15 && p.w1 == 0.0);
    }
}

#[test]
fn lift_normalization_at_an_interior_time() {
    let fam = ChainFamily::forced(t().sin());
    let sol = solve(&fam, [0.4, -0.3], 2.0);
    let t0 = 0.7;
    let lift = companion_lift(&sol, t0, &cfg()).unwrap();
    let p = lift.eval(t0).unwrap();
    assert!((p.w - 1.0).abs() < 1e-15);
    assert!((p.w1 - sol.state_at(t0).unwrap()[0]).abs() < 1e-15);
    assert!(lift.companion_residual(&fam, 500).unwrap() < 1e-8);
    // w' = x w along the whole range
    let w = lift.w_trajectory();
    for (tt, d) in w.times().iter().zip(w.derivs()) {
        let x = sol.state_at(*tt).unwrap()[0];
        assert!((d[0] - x * w.state_at(*tt).unwrap()[0]).abs() < 1e-8);
    }
}

#[test]
fn lift_rejects_blown_up_solutions() {
    let fam = ChainFamily::forced(TimeExpr::zero());
    let sol = solve(&fam, [-1.0, -1.0], 2.0);
    assert!(matches!(companion_lift(&sol, 0.0, &cfg()), Err(Error::BlowUp { .. })));
}

fn basis_for(sols: &[Trajectory]) -> CompanionBasis {
    CompanionBasis::new(sols, 0.0, &cfg(), GENERICITY_THRESHOLD).unwrap()
}

#[test]
fn fitting_a_basis_member() {
    let fam = ChainFamily::forced(t().sin());
    let sols = seeded(&fam, 11, 3, &Window::default());
    let basis = basis_for(&sols);
    assert!(basis.is_generic());
    let y = sols[0].states()[0].clone();
    let c = basis.fit_constants(y[0], y[1]).unwrap();
    assert!((c.normalized[0] - 1.0).abs() < 1e-12);
    assert!(c.normalized[1].abs() < 1e-12 && c.normalized[2].abs() < 1e-12);
    for k in 0..=20 {
        let tt = 0.1 * k as f64;
        let (x, v) = basis.superpose_eval(&c, tt).unwrap();
        let s = sols[0].state_at(tt).unwrap();
        assert!((x - s[0]).abs() < 1e-7 && (v - s[1]).abs() < 1e-7);
    }
}

#[test]
fn fit_reproduces_the_position_constraint() {
    let fam = ChainFamily::forced(t().cos());
    let sols = seeded(&fam, 5, 3, &Window::default());
    let basis = basis_for(&sols);
    let x0 = sols[0].states()[0][0];
    let c = basis.fit_constants(x0, 0.25).unwrap();
    let lifted: f64 = basis.lifts().iter().zip(c.raw).map(|(l, ci)| ci * l.eval(0.0).unwrap().w1).sum();
    assert!((lifted - x0).abs() < 1e-14);
}

#[test]
fn closed_form_family_is_reproduced_despite_degeneracy() {
    // x = a/(at+1) has w = 1 + at, so the three lifts span only {1, t}
    let fam = ChainFamily::forced(TimeExpr::zero());
    let sols: Vec<Trajectory> = [1.0, 2.0, 3.0].iter().map(|&a| solve(&fam, [a, -a * a], 1.0)).collect();
    let basis = CompanionBasis::new(&sols, 0.0, &cfg(), GENERICITY_THRESHOLD).unwrap();
    assert!(!basis.is_generic());
    let c = basis.fit_constants(4.0, -16.0).unwrap();
    assert!(c.degenerate);
    for k in 0..=100 {
        let tt = 0.01 * k as f64;
        let (x, _) = basis.superpose_eval(&c, tt).unwrap();
        assert!((x - 4.0 / (4.0 * tt + 1.0)).abs() < 1e-6);
    }
    let (x1, _) = basis.superpose_eval(&c, 1.0).unwrap();
    assert!((x1 - 0.8).abs() < 1e-6);
    // a target outside the two-dimensional family cannot be fitted
    assert!(matches!(basis.fit_constants(0.5, 0.0), Err(Error::NonGeneric(_))));
}

#[test]
fn projective_invariance() {
    let fam = ChainFamily::forced(t().sin());
    let sols = seeded(&fam, 3, 3, &Window::default());
    let basis = basis_for(&sols);
    let c = basis.fit_constants(0.1, 0.2).unwrap();
    for lambda in [-2.0, 1e-3, 1e3] {
        let scaled = c.scaled(lambda).unwrap();
        for k in 0..=20 {
            let tt = 0.1 * k as f64;
            let (a, b) = (basis.superpose_eval(&c, tt).unwrap(), basis.superpose_eval(&scaled, tt).unwrap());
            if lambda == -2.0 {
                assert_eq!(a, b);
            }
            assert!((a.0 - b.0).abs() <= 4.0 * f64::EPSILON * a.0.abs().max(1.0));
            assert!((a.1 - b.1).abs() <= 4.0 * f64::EPSILON * a.1.abs().max(1.0));
        }
    }
}

#[test]
fn identical_solutions_are_not_generic() {
    let fam = ChainFamily::forced(t().sin());
    let sol = solve(&fam, [0.2, 0.1], 2.0);
    let basis = CompanionBasis::new(&[sol.clone(), sol.clone(), sol], 0.0, &cfg(), GENERICITY_THRESHOLD).unwrap();
    assert!(!basis.is_generic());
    assert!(matches!(basis.fit_constants(-0.3, 0.4), Err(Error::NonGeneric(_))));
}

fn check_family(fam: &ChainFamily, seed: u64) -> SuperpositionReport {
    let window = Window::default();
    let mut sols = seeded(fam, seed, 4, &window);
    let target = sols.pop().unwrap();
    let report = verify_family(fam, &sols, &target, 0.0, &window, &VerifyOptions::default()).unwrap();
    assert!(report.deviation < 1e-6, "deviation {}", report.deviation);
    assert!(report.drift < 1e-6, "drift {}", report.drift);
    assert!(report.residual < 1e-6, "residual {}", report.residual);
    report
}

#[test]
fn forced_equation_superposition() {
    let r = check_family(&ChainFamily::forced(t().sin()), 2024);
    assert_eq!(r.refits.len(), REFIT_COUNT);
    assert!(r.companion_residual.unwrap() < 1e-8);
}

#[test]
fn ghj_family_superposition() {
    let r = check_family(&ChainFamily::new(TimeExpr::one(), t(), t().cos()), 77);
    assert!(r.companion_residual.unwrap() < 1e-7);
}

#[test]
fn target_equal_to_a_particular_solution() {
    let fam = ChainFamily::forced(t().sin());
    let window = Window::default();
    let sols = seeded(&fam, 9, 3, &window);
    let r = verify_family(&fam, &sols, &sols[1], 0.0, &window, &VerifyOptions::default()).unwrap();
    assert!(r.deviation < 1e-7);
    assert!(r.drift < 1e-7);
}

#[test]
fn wrong_basis_is_detected_by_drift() {
    let window = Window::default();
    let free = ChainFamily::forced(TimeExpr::zero());
    let forced = ChainFamily::forced(t().sin());
    let sols = seeded(&free, 4, 3, &window);
    let target = seeded(&forced, 8, 1, &window).pop().unwrap();
    let r = verify_family(&forced, &sols, &target, 0.0, &window, &VerifyOptions::default()).unwrap();
    assert!(r.drift > 1e-2, "drift {}", r.drift);
    assert!(r.companion_residual.unwrap() > 1e-2);
}

#[test]
fn four_solutions_are_dependent() {
    let window = Window::default();
    let fam = ChainFamily::forced(t().sin());
    let sols = seeded(&fam, 21, 4, &window);
    let lifts: Vec<CompanionLift> = sols.iter().map(|s| companion_lift(s, 0.0, &cfg()).unwrap()).collect();
    let times = window.linspace(41);
    assert!(four_solution_rank_gap(&lifts, &times).unwrap() < 1e-6);

    // control: a fourth solution of another equation breaks the dependence
    let other = seeded(&ChainFamily::forced(TimeExpr::zero()), 22, 1, &window).pop().unwrap();
    let mut mixed = lifts[..3].to_vec();
    mixed.push(companion_lift(&other, 0.0, &cfg()).unwrap());
    assert!(four_solution_rank_gap(&mixed, &times).unwrap() > 1e-6);
}

fn riccati2_lhs(spec: &Riccati2Spec, x: &TimeExpr, tt: f64) -> f64 {
    let e = |f: &TimeExpr| f.eval(tt).unwrap();
    let (x0, x1, x2) = (e(x), e(&d(x, 1)), e(&d(x, 2)));
    x2 + (e(&spec.b0) + e(&spec.b1) * x0) * x1 + e(&spec.a0) + e(&spec.a1) * x0 + e(&spec.a2) * x0 * x0 + e(&spec.a3) * x0.powi(3)
}

#[test]
fn scaled_riccati2_is_in_the_chain_family() {
    // family(√a₃·x) = √a₃ · (Riccati second-order equation)(x) for any x(t)
    let specs = [
        Riccati2Spec::from_a(TimeExpr::one(), TimeExpr::zero(), t(), t().exp()),
        Riccati2Spec::from_a(t().cos(), t() * t(), TimeExpr::int(-2), TimeExpr::one() + t() * t()),
        Riccati2Spec::from_a(TimeExpr::zero(), TimeExpr::zero(), TimeExpr::zero(), (TimeExpr::int(2) * t()).exp()),
    ];
    let curves = [t().sin() + TimeExpr::constant(ratio(1, 2)), (TimeExpr::one() + t()).recip(), t() * t() * t()];
    for spec in &specs {
        let fam = riccati2_to_chain(spec);
        let s = spec.a3.clone().sqrt();
        for x in &curves {
            let z = (s.clone() * x.clone()).canonical();
            for k in 0..15 {
                let tt = 0.13 * k as f64;
                let e = |f: &TimeExpr| f.eval(tt).unwrap();
                let lhs = fam.lhs(tt, e(&z), e(&d(&z, 1)), e(&d(&z, 2))).unwrap();
                let rhs = e(&s) * riccati2_lhs(spec, x, tt);
                assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0), "t = {tt}: {lhs} vs {rhs}");
            }
        }
    }
}

fn riccati_solutions(spec: &Riccati2Spec, window: &Window, seed: u64, count: usize) -> Vec<Trajectory> {
    let sys = lift_sode(&crate::tdsys::riccati2(spec, window).unwrap());
    sample_solutions(&sys, count, window.start, window.end, &cfg(), &mut Lcg::new(seed), (-1.0, 1.0), 100).unwrap()
}

#[test]
fn trivial_scaling_matches_the_plain_pipeline() {
    let window = Window::default();
    let spec = Riccati2Spec::from_a(t().sin(), t(), TimeExpr::zero(), TimeExpr::one());
    let sols = riccati_solutions(&spec, &window, 3, 3);
    let times = window.linspace(21);
    let opts = VerifyOptions::default();
    let got = superpose_riccati2_general(&spec, &window, &sols, [0.3, -0.1], 0.0, &times, &opts).unwrap();
    let basis = CompanionBasis::new(&sols, 0.0, &opts.ivp, opts.genericity_threshold).unwrap();
    let c = basis.fit_constants(0.3, -0.1).unwrap();
    for (tt, g) in times.iter().zip(got) {
        let (x, v) = basis.superpose_eval(&c, *tt).unwrap();
        assert_eq!(g, [x, v]);
    }
}

#[test]
fn exponential_a3_reproduction() {
    let window = Window::new(0.0, 1.0).unwrap();
    let spec = Riccati2Spec::from_a(TimeExpr::zero(), TimeExpr::zero(), TimeExpr::zero(), (TimeExpr::int(2) * t()).exp());
    let sols = riccati_solutions(&spec, &window, 17, 3);
    let sys = lift_sode(&crate::tdsys::riccati2(&spec, &window).unwrap());
    let direct = solve_ivp(&sys, &[0.5, 0.0], 0.0, 1.0, &cfg()).unwrap();
    let times = window.linspace(101);
    let got = superpose_riccati2_general(&spec, &window, &sols, [0.5, 0.0], 0.0, &times, &VerifyOptions::default()).unwrap();
    for (tt, g) in times.iter().zip(got) {
        let y = direct.state_at(*tt).unwrap();
        assert!((g[0] - y[0]).abs() < 1e-6 && (g[1] - y[1]).abs() < 1e-6);
    }
}

#[test]
fn time_dependent_rule_and_its_ablation() {
    let window = Window::default();
    let spec = Riccati2Spec::from_a(TimeExpr::one(), TimeExpr::zero(), t(), t().exp());
    let mut sols = riccati_solutions(&spec, &window, 99, 4);
    let target = sols.pop().unwrap();
    let opts = VerifyOptions::default();
    let r = verify_riccati2(&spec, &sols, &target, 0.0, &window, &opts).unwrap();
    assert!(r.deviation < 1e-6, "deviation {}", r.deviation);
    assert!(r.drift < 1e-6, "drift {}", r.drift);
    assert!(r.residual < 1e-6, "residual {}", r.residual);

    let sys = lift_sode(&crate::tdsys::riccati2(&spec, &window).unwrap());
    let plain = verify_superposition(&sys, &sols, &target, 0.0, &window, &opts).unwrap();
    assert!(plain.drift > 1e-2, "ablation drift {}", plain.drift);
}
