//! Subcommands. Each returns the text for stdout and whether its verdict holds.

use std::fs;
use std::path::Path;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};
use sodelie::integrate::{sample_bounded_solutions, solve_ivp, Lcg, Trajectory};
use sodelie::liealg::{
    catalog, check_scheme, close_under_bracket, killing_signature, riccati2_scheme_v2, riccati2_scheme_w, sl3_realization,
    FieldSpace, DEFAULT_MAX_DIM,
};
use sodelie::polyvf::{bracket, PolyVectorField, Variables};
use sodelie::superpose::{
    verify_family, verify_riccati2, verify_superposition, Chart, CompanionBasis, IdentityChart, Riccati2Chart, VerifyOptions,
    GENERICITY_THRESHOLD,
};
use sodelie::tdsys::{decompose_onto_basis, ChainFamily, TimeExpr, Window};
use sodelie::transform::{certify_quasi_lie, ScalingTransform};

use crate::config::{Config, Content};
use crate::dsl::{parse_field, parse_time};
use crate::error::{CliError, CliResult};
use crate::report;

/// Exact Lie-bracket analysis and superposition rules for ODE systems.
#[derive(Debug, Parser)]
#[command(name = "sodelie", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the Lie bracket [A, B] of two fields.
    Bracket(BracketArgs),
    /// Close a set of fields under the bracket.
    Close(CloseArgs),
    /// Check the quasi-Lie scheme conditions for (W, V2).
    Scheme(SchemeArgs),
    /// Lift a second-order equation to a first-order system.
    Lift(LiftArgs),
    /// Decompose a system onto a basis of fields.
    Decompose(DecomposeArgs),
    /// Certify a quasi-Lie system under a scaling transformation.
    Certify(CertifyArgs),
    /// Integrate a system and print the trajectory as CSV.
    Integrate(IntegrateArgs),
    /// Superpose three particular solutions to a new initial condition.
    Superpose(SuperposeArgs),
    /// Verify a superposition rule against a target solution.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct BracketArgs {
    #[arg(allow_hyphen_values = true)]
    pub a: String,
    #[arg(allow_hyphen_values = true)]
    pub b: String,
    /// Comma-separated variable names.
    #[arg(long, default_value = "x,v")]
    pub vars: String,
    /// Print a JSON report instead of the bare field.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CloseArgs {
    /// Catalog name or config file.
    #[arg(long)]
    pub generators: String,
    #[arg(long, default_value_t = DEFAULT_MAX_DIM)]
    pub max_dim: usize,
}

#[derive(Debug, Args)]
pub struct SchemeArgs {
    #[arg(long)]
    pub w: String,
    #[arg(long)]
    pub v2: String,
}

#[derive(Debug, Args)]
pub struct LiftArgs {
    #[arg(long)]
    pub sode: String,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub system: String,
    /// `sl3`, another catalog name, or a config file.
    #[arg(long)]
    pub basis: String,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub system: String,
    /// `catalog`, or `W_FILE,V2_FILE`.
    #[arg(long)]
    pub scheme: String,
    /// `identity`, `riccati2`, or `var=expr,...` (unlisted factors are 1).
    #[arg(long, default_value = "identity")]
    pub transform: String,
    #[arg(long)]
    pub target: String,
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    #[arg(long)]
    pub system: String,
    /// Initial state, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pub ic: String,
    /// Time span `A:B`.
    #[arg(long, allow_hyphen_values = true)]
    pub span: String,
    /// Also write a JSON report to this file.
    #[arg(long)]
    pub report: Option<String>,
    #[arg(long)]
    pub max_step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SuperposeArgs {
    #[arg(long)]
    pub family: String,
    /// Three CSV trajectories; sampled from the seed when omitted.
    #[arg(long)]
    pub solutions: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub target_ic: String,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t0: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub eval_at: String,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub family: String,
    /// Three CSV trajectories; sampled from the seed when omitted.
    #[arg(long)]
    pub solutions: Option<String>,
    /// Target CSV trajectory; sampled from the seed when omitted.
    #[arg(long)]
    pub target: Option<String>,
    /// Verification window `A:B`; defaults to the config window.
    #[arg(long, allow_hyphen_values = true)]
    pub window: Option<String>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t0: f64,
    /// Pass threshold on deviation, residual and drift.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Result of a command.
#[derive(Debug)]
pub struct Outcome {
    pub stdout: String,
    pub verdict: bool,
    /// Set when the command finished but hit a numerical failure.
    pub numerical_failure: bool,
}

impl Outcome {
    fn report(m: Map<String, Value>, verdict: bool) -> Self {
        let text = serde_json::to_string_pretty(&Value::Object(m)).expect("json values serialize");
        Outcome { stdout: text + "\n", verdict, numerical_failure: false }
    }
}

pub fn execute(cli: &Cli) -> CliResult<Outcome> {
    match &cli.command {
        Command::Bracket(a) => run_bracket(a),
        Command::Close(a) => run_close(a),
        Command::Scheme(a) => run_scheme(a),
        Command::Lift(a) => run_lift(a),
        Command::Decompose(a) => run_decompose(a),
        Command::Certify(a) => run_certify(a),
        Command::Integrate(a) => run_integrate(a),
        Command::Superpose(a) => run_superpose(a),
        Command::Verify(a) => run_verify(a),
    }
}

fn read(path: &str) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_string(), message: e.to_string() })
}

fn load_config(path: &str) -> CliResult<Config> {
    Config::from_json(&read(path)?).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{path}: {m}")),
        other => other,
    })
}

/// Fields named by a catalog entry (`sl3` is short for the realization) or
/// listed in a config file.
pub fn load_fields(source: &str) -> CliResult<(Variables, Vec<PolyVectorField>)> {
    let name = if source == "sl3" { "sl3_realization" } else { source };
    if !Path::new(source).exists() {
        if let Ok(f) = catalog(name) {
            return Ok((Variables::xv(), f));
        }
    }
    let c = load_config(source)?;
    Ok((c.vars.clone(), c.field_list()?))
}

pub fn parse_list(what: &str, s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|p| {
            let p = p.trim();
            p.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("{what}: `{p}` is not a finite number")))
        })
        .collect()
}

pub fn parse_span(what: &str, s: &str) -> CliResult<(f64, f64)> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 2 {
        return Err(CliError::Usage(format!("{what}: expected `A:B`, found `{s}`")));
    }
    let a = parse_list(what, parts[0])?;
    let b = parse_list(what, parts[1])?;
    if !(a[0] < b[0]) {
        return Err(CliError::Usage(format!("{what}: `{s}` is empty")));
    }
    Ok((a[0], b[0]))
}

fn parse_vars(s: &str) -> CliResult<Variables> {
    let names: Vec<&str> = s.split(',').map(str::trim).collect();
    Ok(Variables::new(&names)?)
}

fn run_bracket(a: &BracketArgs) -> CliResult<Outcome> {
    let vars = parse_vars(&a.vars)?;
    let parse = |what: &str, src: &str| {
        parse_field(src, &vars).map_err(|e| CliError::Parse { what: what.into(), source_text: src.into(), error: e })
    };
    let br = bracket(&parse("A", &a.a)?, &parse("B", &a.b)?)?;
    if a.json {
        let mut m = report::envelope("bracket");
        m.insert("variables".into(), json!(vars.to_vec()));
        m.insert("bracket".into(), json!(br.to_dsl()));
        return Ok(Outcome::report(m, true));
    }
    Ok(Outcome { stdout: br.to_dsl() + "\n", verdict: true, numerical_failure: false })
}

fn run_close(a: &CloseArgs) -> CliResult<Outcome> {
    let (_, gens) = load_fields(&a.generators)?;
    let c = close_under_bracket(&gens, a.max_dim)?;
    let sig = c.structure.as_ref().map(killing_signature);
    let m = report::closure(&c, a.max_dim, sig.as_ref());
    Ok(Outcome::report(m, c.closed))
}

fn run_scheme(a: &SchemeArgs) -> CliResult<Outcome> {
    let (wv, w) = load_fields(&a.w)?;
    let (vv, v2) = load_fields(&a.v2)?;
    let w = FieldSpace::new(&wv, &w)?;
    let v2 = FieldSpace::new(&vv, &v2)?;
    let r = check_scheme(&w, &v2)?;
    let mut m = report::envelope("scheme");
    m.insert("w_dim".into(), json!(w.dim()));
    m.insert("v2_dim".into(), json!(v2.dim()));
    if let Value::Object(body) = report::scheme_body(&r) {
        m.extend(body);
    }
    Ok(Outcome::report(m, r.is_scheme()))
}

fn run_lift(a: &LiftArgs) -> CliResult<Outcome> {
    let c = load_config(&a.sode)?;
    let s = c.sode()?;
    let x = sodelie::tdsys::lift_sode(&s);
    let mut m = report::envelope("lift");
    m.insert("variables".into(), json!(x.vars().to_vec()));
    m.insert("positions".into(), json!(s.positions()));
    m.insert("velocities".into(), json!(s.velocities()));
    m.insert("terms".into(), report::tdvf(&x));
    Ok(Outcome::report(m, true))
}

fn run_decompose(a: &DecomposeArgs) -> CliResult<Outcome> {
    let c = load_config(&a.system)?;
    let x = c.system()?;
    let (vars, fields) = load_fields(&a.basis)?;
    let basis = FieldSpace::new(&vars, &fields)?;
    let d = decompose_onto_basis(&x, &basis)?;
    let mut m = report::envelope("decompose");
    m.insert("system".into(), report::tdvf(&x));
    m.insert("basis".into(), report::fields(basis.basis()));
    let ok = d.coefficients().is_some();
    if let Value::Object(body) = report::decomposition(&d) {
        m.extend(body);
    }
    Ok(Outcome::report(m, ok))
}

/// Scaling named by `spec` for the system in `c`.
pub fn parse_transform(spec: &str, c: &Config) -> CliResult<ScalingTransform> {
    let vars = &c.vars;
    match spec.trim() {
        "identity" => return Ok(ScalingTransform::identity(vars)),
        "riccati2" => {
            let Content::Riccati2(r) = &c.content else {
                return Err(CliError::Usage("`--transform riccati2` needs a `riccati2` system".into()));
            };
            return Ok(ScalingTransform::single(vars, "v", r.a3.clone().sqrt().recip())?);
        }
        _ => {}
    }
    let mut factors = vec![TimeExpr::one(); vars.len()];
    let mut symbols = c.opaque.clone();
    if let Content::Riccati2(_) = &c.content {
        symbols.extend(["a0", "a1", "a2", "a3"].map(String::from));
    }
    for part in spec.split(',') {
        let (name, expr) = part
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--transform: expected `var=expr`, found `{part}`")))?;
        let i = vars
            .index_of(name.trim())
            .ok_or_else(|| CliError::Usage(format!("--transform: `{}` is not a variable", name.trim())))?;
        let mut e = parse_time(expr, &symbols).map_err(|error| CliError::Parse {
            what: format!("--transform {}", name.trim()),
            source_text: expr.into(),
            error,
        })?;
        if let Content::Riccati2(r) = &c.content {
            for (n, v) in [("a0", &r.a0), ("a1", &r.a1), ("a2", &r.a2), ("a3", &r.a3)] {
                e = e.substitute(n, v);
            }
        }
        factors[i] = e.canonical();
    }
    Ok(ScalingTransform::new(vars, factors)?)
}

fn run_certify(a: &CertifyArgs) -> CliResult<Outcome> {
    let c = load_config(&a.system)?;
    let x = c.system()?;
    let (w, v2) = if a.scheme == "catalog" {
        (FieldSpace::new(&Variables::xv(), &riccati2_scheme_w())?, FieldSpace::new(&Variables::xv(), &riccati2_scheme_v2())?)
    } else {
        let (wf, vf) = a
            .scheme
            .split_once(',')
            .ok_or_else(|| CliError::Usage("--scheme: expected `catalog` or `W_FILE,V2_FILE`".into()))?;
        let (wv, w) = load_fields(wf)?;
        let (vv, v2) = load_fields(vf)?;
        (FieldSpace::new(&wv, &w)?, FieldSpace::new(&vv, &v2)?)
    };
    let tr = parse_transform(&a.transform, &c)?;
    let target = if a.target == "sl3" {
        FieldSpace::new(&Variables::xv(), &sl3_realization())?
    } else {
        let (tv, t) = load_fields(&a.target)?;
        FieldSpace::spanned_by(&tv, &t)?
    };
    let cert = certify_quasi_lie(&x, &w, &v2, &tr, &target)?;
    let mut m = report::certificate(&cert);
    m.insert("transform".into(), report::times(tr.factors()));
    Ok(Outcome::report(m, cert.verdict))
}

fn run_integrate(a: &IntegrateArgs) -> CliResult<Outcome> {
    let c = load_config(&a.system)?;
    let x = c.system()?;
    let ic = parse_list("--ic", &a.ic)?;
    let (t0, t1) = parse_span("--span", &a.span)?;
    let mut ivp = c.ivp.clone();
    if let Some(h) = a.max_step {
        ivp.max_step = h;
    }
    let traj = solve_ivp(&x, &ic, t0, t1, &ivp)?;
    if let Some(path) = &a.report {
        let mut m = report::envelope("integrate");
        m.insert("variables".into(), json!(traj.vars()));
        m.insert("t_start".into(), json!(traj.t_start()));
        m.insert("t_end".into(), json!(traj.t_end()));
        m.insert("nodes".into(), json!(traj.times().len()));
        if let Value::Object(s) = report::status(&traj) {
            m.extend(s);
        }
        let text = serde_json::to_string_pretty(&Value::Object(m)).expect("json values serialize") + "\n";
        fs::write(path, text).map_err(|e| CliError::Io { path: path.clone(), message: e.to_string() })?;
    }
    let complete = traj.is_complete();
    Ok(Outcome { stdout: traj.to_csv(), verdict: complete, numerical_failure: !complete })
}

fn load_solutions(list: &str, c: &Config) -> CliResult<Vec<Trajectory>> {
    let compiled = c.system()?.compile();
    list.split(',')
        .map(|p| Trajectory::from_csv(&read(p.trim())?, Some(&compiled)).map_err(CliError::from))
        .collect()
}

/// Range of sampled initial conditions in every component.
pub const SAMPLE_RANGE: (f64, f64) = (-1.0, 1.0);

/// Sampled trajectories must stay within this bound in every component.
pub const SAMPLE_BOUND: f64 = 10.0;

const SAMPLE_ATTEMPTS: usize = 1000;

fn sampled(c: &Config, count: usize, seed: u64, window: &Window) -> CliResult<Vec<Trajectory>> {
    let x = c.system()?;
    let mut rng = Lcg::new(seed);
    let (a, b) = (window.start, window.end);
    Ok(sample_bounded_solutions(&x, count, a, b, &c.ivp, &mut rng, SAMPLE_RANGE, SAMPLE_BOUND, SAMPLE_ATTEMPTS)?)
}

fn seed_for(flag: Option<u64>, c: &Config) -> CliResult<u64> {
    flag.map_or_else(|| c.seed(), Ok)
}

fn run_superpose(a: &SuperposeArgs) -> CliResult<Outcome> {
    let c = load_config(&a.family)?;
    let sols = match &a.solutions {
        Some(list) => load_solutions(list, &c)?,
        None => sampled(&c, 3, seed_for(a.seed, &c)?, &c.window)?,
    };
    if sols.len() != 3 {
        return Err(CliError::Usage(format!("--solutions: expected 3 trajectories, found {}", sols.len())));
    }
    let ic = parse_list("--target-ic", &a.target_ic)?;
    if ic.len() != 2 {
        return Err(CliError::Usage("--target-ic: expected `x0,v0`".into()));
    }
    let times = parse_list("--eval-at", &a.eval_at)?;
    let riccati = match &c.content {
        Content::Riccati2(r) => {
            r.validate(&c.window)?;
            Some(Riccati2Chart::new(r))
        }
        _ => None,
    };
    let chart: &dyn Chart = match &riccati {
        Some(ch) => ch,
        None => &IdentityChart,
    };
    let mapped = sols.iter().map(|s| chart.to_family(s)).collect::<sodelie::Result<Vec<_>>>()?;
    let basis = CompanionBasis::new(&mapped, a.t0, &c.ivp, GENERICITY_THRESHOLD)?;
    let [z0, dz0] = chart.state_to_family(a.t0, [ic[0], ic[1]])?;
    let consts = basis.fit_constants(z0, dz0)?;
    let values = times
        .iter()
        .map(|&t| {
            let (z, dz) = basis.superpose_eval(&consts, t)?;
            let [x, v] = chart.state_from_family(t, [z, dz])?;
            Ok(json!({ "t": t, "x": x, "v": v }))
        })
        .collect::<sodelie::Result<Vec<_>>>()?;
    let mut m = report::envelope("superpose");
    m.insert("chart".into(), json!(if riccati.is_some() { "riccati2" } else { "identity" }));
    m.insert("t0".into(), json!(a.t0));
    m.insert("target_ic".into(), json!(ic));
    m.insert("determinant".into(), json!(basis.determinant()));
    m.insert("constants".into(), report::constants(&consts));
    m.insert("values".into(), Value::Array(values));
    Ok(Outcome::report(m, true))
}

fn run_verify(a: &VerifyArgs) -> CliResult<Outcome> {
    let c = load_config(&a.family)?;
    let window = match &a.window {
        Some(w) => {
            let (s, e) = parse_span("--window", w)?;
            Window::new(s, e)?
        }
        None => c.window,
    };
    let seed = seed_for(a.seed, &c)?;
    let (sols, target) = match (&a.solutions, &a.target) {
        (Some(list), Some(t)) => {
            let mut target = load_solutions(t, &c)?;
            if target.len() != 1 {
                return Err(CliError::Usage("--target: expected one trajectory".into()));
            }
            (load_solutions(list, &c)?, target.remove(0))
        }
        (None, None) => {
            let mut all = sampled(&c, 4, seed, &window)?;
            let target = all.pop().expect("four samples");
            (all, target)
        }
        _ => return Err(CliError::Usage("give both --solutions and --target, or neither to sample them".into())),
    };
    if sols.len() != 3 {
        return Err(CliError::Usage(format!("--solutions: expected 3 trajectories, found {}", sols.len())));
    }
    let opts = VerifyOptions { ivp: c.ivp.clone(), ..VerifyOptions::default() };
    let r = match &c.content {
        Content::Family(f) => verify_family(f, &sols, &target, a.t0, &window, &opts)?,
        Content::Riccati2(spec) => verify_riccati2(spec, &sols, &target, a.t0, &window, &opts)?,
        Content::Sode(s) if ChainFamily::recognize(s).is_some() => {
            let f = ChainFamily::recognize(s).expect("recognized");
            verify_family(&f, &sols, &target, a.t0, &window, &opts)?
        }
        _ => verify_superposition(&c.system()?, &sols, &target, a.t0, &window, &opts)?,
    };
    let passed = r.passes(a.tol);
    let mut m = report::superposition(&r, a.tol);
    m.insert("seed".into(), if a.solutions.is_none() { json!(seed) } else { Value::Null });
    Ok(Outcome::report(m, passed))
}
