//! JSON configuration documents.

use std::collections::BTreeMap;

use serde::Deserialize;
use sodelie::integrate::IvpConfig;
use sodelie::polyvf::{PolyVectorField, Variables};
use sodelie::tdsys::{lift_sode, riccati2, riccati2_unchecked, ChainFamily, Riccati2Spec, Sode, Tdvf, TimeExpr, Window};

use crate::dsl::{parse_field, parse_mixed, parse_time};
use crate::error::{CliError, CliResult};

/// Version written to and accepted in every document.
pub const FORMAT_VERSION: u32 = 1;

/// Environment variable overriding the built-in default seed.
pub const SEED_ENV: &str = "SODELIE_SEED";

/// Seed used when neither the config nor the environment sets one.
pub const DEFAULT_SEED: u64 = 2024;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldTerm {
    pub coeff: String,
    pub field: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SodeDoc {
    pub positions: Vec<String>,
    pub velocities: Vec<String>,
    pub rhs: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDoc {
    pub g: String,
    pub h: String,
    pub j: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Riccati2Doc {
    pub a0: String,
    pub a1: String,
    pub a2: String,
    pub a3: String,
}

/// Raw document as read from disk.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub format_version: u32,
    #[serde(default)]
    pub variables: Option<Vec<String>>,
    #[serde(default)]
    pub fields: Option<Vec<FieldTerm>>,
    #[serde(default)]
    pub sode: Option<SodeDoc>,
    #[serde(default)]
    pub family: Option<FamilyDoc>,
    #[serde(default)]
    pub riccati2: Option<Riccati2Doc>,
    #[serde(default)]
    pub basis: Option<Vec<String>>,
    /// Named functions of `t`; `null` keeps the name opaque.
    #[serde(default)]
    pub symbols: BTreeMap<String, Option<String>>,
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    #[serde(default)]
    pub rtol: Option<f64>,
    #[serde(default)]
    pub atol: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// The system or field list a document describes.
#[derive(Clone, Debug)]
pub enum Content {
    Fields(Tdvf),
    Sode(Sode),
    Family(ChainFamily),
    Riccati2(Riccati2Spec),
    Basis(Vec<PolyVectorField>),
}

impl Content {
    pub fn kind(&self) -> &'static str {
        match self {
            Content::Fields(_) => "fields",
            Content::Sode(_) => "sode",
            Content::Family(_) => "family",
            Content::Riccati2(_) => "riccati2",
            Content::Basis(_) => "basis",
        }
    }
}

/// A validated document.
#[derive(Clone, Debug)]
pub struct Config {
    pub vars: Variables,
    pub content: Content,
    pub window: Window,
    pub ivp: IvpConfig,
    pub seed: Option<u64>,
    /// Names left opaque.
    pub opaque: Vec<String>,
}

fn parse_err(what: &str, src: &str, e: crate::dsl::ParseError) -> CliError {
    CliError::Parse { what: what.to_string(), source_text: src.to_string(), error: e }
}

impl Config {
    pub fn from_json(text: &str) -> CliResult<Config> {
        let doc: Document = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Config::from_document(doc)
    }

    pub fn from_document(doc: Document) -> CliResult<Config> {
        if doc.format_version != FORMAT_VERSION {
            return Err(CliError::Config(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                doc.format_version
            )));
        }
        let forms = [doc.fields.is_some(), doc.sode.is_some(), doc.family.is_some(), doc.riccati2.is_some(), doc.basis.is_some()];
        if forms.iter().filter(|&&b| b).count() != 1 {
            return Err(CliError::Config(
                "exactly one of `fields`, `sode`, `family`, `riccati2`, `basis` must be present".into(),
            ));
        }

        let opaque: Vec<String> = doc.symbols.iter().filter(|(_, v)| v.is_none()).map(|(k, _)| k.clone()).collect();
        let mut bound = Vec::new();
        for (name, value) in &doc.symbols {
            if name == "t" || Variables::new(&[name]).is_err() {
                return Err(CliError::Config(format!("`{name}` is not a valid symbol name")));
            }
            if let Some(src) = value {
                let e = parse_time(src, &opaque).map_err(|e| parse_err(&format!("symbols.{name}"), src, e))?;
                bound.push((name.clone(), e));
            }
        }
        let all_symbols: Vec<String> = doc.symbols.keys().cloned().collect();
        let bind = |e: TimeExpr| -> TimeExpr { bound.iter().fold(e, |acc, (n, v)| acc.substitute(n, v)).canonical() };
        let time = |what: &str, src: &str| -> CliResult<TimeExpr> {
            parse_time(src, &all_symbols).map(&bind).map_err(|e| parse_err(what, src, e))
        };

        let window = match doc.window {
            Some([a, b]) => Window::new(a, b).map_err(CliError::Core)?,
            None => Window::default(),
        };
        let defaults = IvpConfig::default();
        let ivp = IvpConfig { rtol: doc.rtol.unwrap_or(defaults.rtol), atol: doc.atol.unwrap_or(defaults.atol), ..defaults };
        ivp.validate().map_err(CliError::Core)?;

        let declared = |default: Vec<String>| -> CliResult<Variables> {
            let names = doc.variables.clone().unwrap_or(default);
            Variables::new(&names).map_err(CliError::Core)
        };
        let xv = || vec!["x".to_string(), "v".to_string()];
        let check_xv = |vars: &Variables, form: &str| -> CliResult<()> {
            if vars.to_vec() != xv() {
                return Err(CliError::Config(format!("`{form}` systems live on the variables [\"x\", \"v\"]")));
            }
            Ok(())
        };

        let (vars, content) = if let Some(terms) = &doc.fields {
            let vars = doc.variables.as_ref().ok_or_else(|| CliError::Config("`fields` requires `variables`".into()))?;
            let vars = Variables::new(vars).map_err(CliError::Core)?;
            let mut parsed = Vec::with_capacity(terms.len());
            for (i, term) in terms.iter().enumerate() {
                let c = time(&format!("fields[{i}].coeff"), &term.coeff)?;
                let f = parse_field(&term.field, &vars).map_err(|e| parse_err(&format!("fields[{i}].field"), &term.field, e))?;
                parsed.push((c, f));
            }
            let x = Tdvf::new(&vars, parsed).map_err(CliError::Core)?;
            (vars, Content::Fields(x))
        } else if let Some(s) = &doc.sode {
            let mut names = s.positions.clone();
            names.extend(s.velocities.iter().cloned());
            let vars = declared(names.clone())?;
            if vars.to_vec() != names {
                return Err(CliError::Config("`variables` must list the positions followed by the velocities".into()));
            }
            let mut rhs = Vec::with_capacity(s.rhs.len());
            for (i, src) in s.rhs.iter().enumerate() {
                let terms = parse_mixed(src, &vars, &all_symbols).map_err(|e| parse_err(&format!("sode.rhs[{i}]"), src, e))?;
                rhs.push(terms.into_iter().map(|(c, p)| (bind(c), p)).collect());
            }
            let pos: Vec<&str> = s.positions.iter().map(String::as_str).collect();
            let vel: Vec<&str> = s.velocities.iter().map(String::as_str).collect();
            (vars, Content::Sode(Sode::new(&pos, &vel, rhs).map_err(CliError::Core)?))
        } else if let Some(f) = &doc.family {
            let vars = declared(xv())?;
            check_xv(&vars, "family")?;
            let fam = ChainFamily::new(time("family.g", &f.g)?, time("family.h", &f.h)?, time("family.j", &f.j)?);
            (vars, Content::Family(fam))
        } else if let Some(r) = &doc.riccati2 {
            let vars = declared(xv())?;
            check_xv(&vars, "riccati2")?;
            let spec = Riccati2Spec::from_a(
                time("riccati2.a0", &r.a0)?,
                time("riccati2.a1", &r.a1)?,
                time("riccati2.a2", &r.a2)?,
                time("riccati2.a3", &r.a3)?,
            );
            (vars, Content::Riccati2(spec))
        } else {
            let list = doc.basis.as_ref().expect("one form is present");
            let vars = doc.variables.as_ref().ok_or_else(|| CliError::Config("`basis` requires `variables`".into()))?;
            let vars = Variables::new(vars).map_err(CliError::Core)?;
            let fields = list
                .iter()
                .enumerate()
                .map(|(i, src)| parse_field(src, &vars).map_err(|e| parse_err(&format!("basis[{i}]"), src, e)))
                .collect::<CliResult<Vec<_>>>()?;
            (vars, Content::Basis(fields))
        };

        Ok(Config { vars, content, window, ivp, seed: doc.seed, opaque })
    }

    /// Seed from the document, else from [`SEED_ENV`], else [`DEFAULT_SEED`].
    pub fn seed(&self) -> CliResult<u64> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        env_seed()
    }

    /// The first-order system: the fields as given, or the lift of a
    /// second-order equation. Riccati coefficients are validated on the
    /// window unless they contain opaque symbols.
    pub fn system(&self) -> CliResult<Tdvf> {
        match &self.content {
            Content::Fields(x) => Ok(x.clone()),
            Content::Basis(_) => Err(CliError::Config("a `basis` document does not define a system".into())),
            _ => Ok(lift_sode(&self.sode()?)),
        }
    }

    pub fn sode(&self) -> CliResult<Sode> {
        match &self.content {
            Content::Sode(s) => Ok(s.clone()),
            Content::Family(f) => Ok(f.sode()),
            Content::Riccati2(spec) => {
                if self.has_opaque(spec) {
                    Ok(riccati2_unchecked(spec))
                } else {
                    riccati2(spec, &self.window).map_err(CliError::Core)
                }
            }
            other => Err(CliError::Config(format!("a `{}` document does not define a second-order equation", other.kind()))),
        }
    }

    fn has_opaque(&self, spec: &Riccati2Spec) -> bool {
        [&spec.a0, &spec.a1, &spec.a2, &spec.a3].iter().any(|e| !e.symbols().is_empty())
    }

    /// Fields listed by the document: the basis, or the field of every
    /// term of the system.
    pub fn field_list(&self) -> CliResult<Vec<PolyVectorField>> {
        match &self.content {
            Content::Basis(b) => Ok(b.clone()),
            _ => Ok(self.system()?.terms().iter().map(|(_, f)| f.clone()).collect()),
        }
    }
}

/// Seed from [`SEED_ENV`] when set, else [`DEFAULT_SEED`].
pub fn env_seed() -> CliResult<u64> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s.trim().parse().map_err(|_| CliError::Config(format!("{SEED_ENV}=`{s}` is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}
