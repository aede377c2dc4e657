//! Text syntax for polynomial vector fields, scalar functions of `t` and
//! second-order right-hand sides.
//!
//! ```text
//! field    := ['+'|'-'] term (('+'|'-') term)*
//! term     := factor (('*'|'/') factor)*
//! factor   := '-' factor | atom ['^' int | '^' '(' ['-'] int ')']
//! atom     := int | ident | ident '(' expr ')' | '(' expr ')' | 'd/d' ident
//! ```
//!
//! Literals are exact: `p/q` is a rational, floating-point literals are
//! rejected. `d/dx` is the coordinate field of the variable `x`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::One;
use sodelie::polyvf::{Polynomial, PolyVectorField, Rational, Variables};
use sodelie::tdsys::TimeExpr;

/// Parse failure with a 1-based source position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

pub type ParseResult<T> = std::result::Result<T, ParseError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

impl Pos {
    fn error(self, message: impl Into<String>) -> ParseError {
        ParseError { line: self.line, column: self.column, message: message.into() }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String, u32),
    Deriv(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Int(n) => format!("number `{n}`"),
            Tok::Ident(s, k) => format!("identifier `{s}{}`", "'".repeat(*k as usize)),
            Tok::Deriv(s) => format!("`d/d{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> ParseResult<Vec<(Tok, Pos)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let ident_start = |c: char| c.is_ascii_alphabetic() || c == '_';
    let ident_char = |c: char| c.is_ascii_alphanumeric() || c == '_';
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column: col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && (chars[i] == '.' || chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '.') {
                    j += 1;
                }
                let text: String = chars[start..j].iter().collect();
                return Err(pos.error(format!("floating-point literal `{text}`; write exact rationals as p/q")));
            }
            let text: String = chars[start..i].iter().collect();
            Tok::Int(text.parse().expect("digits"))
        } else if ident_start(c) {
            while i < chars.len() && ident_char(chars[i]) {
                i += 1;
            }
            let name: String = chars[start..i].iter().collect();
            if name == "d" && chars.get(i) == Some(&'/') && chars.get(i + 1) == Some(&'d') {
                let mut j = i + 2;
                while j < chars.len() && ident_char(chars[j]) {
                    j += 1;
                }
                if j > i + 2 && ident_start(chars[i + 2]) {
                    let var: String = chars[i + 2..j].iter().collect();
                    i = j;
                    col += i - start;
                    out.push((Tok::Deriv(var), pos));
                    continue;
                }
            }
            let mut primes = 0;
            while i < chars.len() && chars[i] == '\'' {
                primes += 1;
                i += 1;
            }
            Tok::Ident(name, primes)
        } else {
            i += 1;
            match c {
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '^' => Tok::Caret,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => return Err(pos.error(format!("unexpected character `{c}`"))),
            }
        };
        col += i - start;
        out.push((tok, pos));
    }
    out.push((Tok::End, Pos { line, column: col }));
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Func {
    Sqrt,
    Exp,
    Sin,
    Cos,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        match s {
            "sqrt" => Some(Func::Sqrt),
            "exp" => Some(Func::Exp),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            _ => None,
        }
    }

    fn apply(self, e: TimeExpr) -> TimeExpr {
        match self {
            Func::Sqrt => e.sqrt(),
            Func::Exp => e.exp(),
            Func::Sin => e.sin(),
            Func::Cos => e.cos(),
        }
    }
}

/// Which identifiers an expression may use.
#[derive(Clone, Debug)]
struct Scope<'a> {
    vars: Option<&'a Variables>,
    time: bool,
    symbols: &'a [String],
    fields: bool,
}

/// Polynomial in the state variables with coefficients in `t`.
#[derive(Clone, Debug)]
struct Mixed {
    n: usize,
    terms: BTreeMap<Vec<u32>, TimeExpr>,
}

impl Mixed {
    fn zero(n: usize) -> Self {
        Mixed { n, terms: BTreeMap::new() }
    }

    fn time(n: usize, e: TimeExpr) -> Self {
        let mut m = Mixed::zero(n);
        m.add_term(vec![0; n], e);
        m
    }

    fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        let mut m = Mixed::zero(n);
        m.add_term(e, TimeExpr::one());
        m
    }

    fn add_term(&mut self, e: Vec<u32>, c: TimeExpr) {
        let sum = match self.terms.remove(&e) {
            Some(old) => (old + c).canonical(),
            None => c.canonical(),
        };
        if !sum.is_zero_structural() {
            self.terms.insert(e, sum);
        }
    }

    fn as_time(&self) -> Option<TimeExpr> {
        if self.terms.keys().all(|e| e.iter().all(|&k| k == 0)) {
            Some(self.terms.values().next().cloned().unwrap_or_else(TimeExpr::zero))
        } else {
            None
        }
    }

    fn add(mut self, other: Mixed) -> Mixed {
        for (e, c) in other.terms {
            self.add_term(e, c);
        }
        self
    }

    fn neg(self) -> Mixed {
        Mixed { n: self.n, terms: self.terms.into_iter().map(|(e, c)| (e, (-c).canonical())).collect() }
    }

    fn mul(&self, other: &Mixed) -> Mixed {
        let mut out = Mixed::zero(self.n);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1.clone() * c2.clone());
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
enum Value {
    Scalar(Mixed),
    Field(Vec<Mixed>),
}

struct Parser<'a> {
    toks: Vec<(Tok, Pos)>,
    i: usize,
    scope: Scope<'a>,
    n: usize,
}

const MAX_POWER: i64 = 64;

impl<'a> Parser<'a> {
    fn new(src: &str, scope: Scope<'a>) -> ParseResult<Self> {
        let n = scope.vars.map_or(0, |v| v.len());
        Ok(Parser { toks: lex(src)?, i: 0, scope, n })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> ParseResult<()> {
        let (tok, pos) = self.bump();
        if tok == want {
            Ok(())
        } else {
            Err(pos.error(format!("expected {}, found {}", want.describe(), tok.describe())))
        }
    }

    fn finish(&mut self) -> ParseResult<Value> {
        if *self.peek() == Tok::End {
            return Err(self.pos().error("empty expression"));
        }
        let v = self.expr()?;
        if *self.peek() != Tok::End {
            return Err(self.pos().error(format!("unexpected {}", self.peek().describe())));
        }
        Ok(v)
    }

    fn expr(&mut self) -> ParseResult<Value> {
        let mut acc = match self.peek() {
            Tok::Plus => {
                self.bump();
                self.term()?
            }
            _ => self.term()?,
        };
        loop {
            let pos = self.pos();
            let negate = match self.peek() {
                Tok::Plus => false,
                Tok::Minus => true,
                _ => return Ok(acc),
            };
            self.bump();
            let rhs = self.term()?;
            let rhs = if negate { negate_value(rhs) } else { rhs };
            acc = add_values(acc, rhs, pos)?;
        }
    }

    fn term(&mut self) -> ParseResult<Value> {
        let mut acc = self.factor()?;
        loop {
            let pos = self.pos();
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    let rhs = self.factor()?;
                    acc = mul_values(acc, rhs, pos)?;
                }
                Tok::Slash => {
                    self.bump();
                    let rhs = self.factor()?;
                    acc = div_values(acc, rhs, pos)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> ParseResult<Value> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(negate_value(self.factor()?));
        }
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        let pos = self.pos();
        self.bump();
        let k = self.exponent()?;
        self.power(base, k, pos)
    }

    fn exponent(&mut self) -> ParseResult<i64> {
        let (tok, pos) = self.bump();
        let (value, pos) = match tok {
            Tok::Int(n) => (n, pos),
            Tok::LParen => {
                let negative = if *self.peek() == Tok::Minus {
                    self.bump();
                    true
                } else {
                    false
                };
                let (tok, pos) = self.bump();
                let Tok::Int(n) = tok else {
                    return Err(pos.error(format!("exponent must be an integer, found {}", tok.describe())));
                };
                self.expect(Tok::RParen)?;
                (if negative { -n } else { n }, pos)
            }
            other => return Err(pos.error(format!("exponent must be an integer, found {}", other.describe()))),
        };
        match i64::try_from(value) {
            Ok(k) if k.abs() <= MAX_POWER => Ok(k),
            _ => Err(pos.error(format!("exponent exceeds {MAX_POWER} in magnitude"))),
        }
    }

    fn power(&self, base: Value, k: i64, pos: Pos) -> ParseResult<Value> {
        let Value::Scalar(m) = base else {
            return Err(pos.error("a vector field cannot be raised to a power"));
        };
        if let Some(e) = m.as_time() {
            if k < 0 && e.is_zero_structural() {
                return Err(pos.error("division by zero"));
            }
            return Ok(Value::Scalar(Mixed::time(self.n, e.pow(k as i32))));
        }
        if k < 0 {
            return Err(pos.error("negative powers of state variables are not polynomial"));
        }
        let mut acc = Mixed::time(self.n, TimeExpr::one());
        for _ in 0..k {
            acc = acc.mul(&m);
        }
        Ok(Value::Scalar(acc))
    }

    fn atom(&mut self) -> ParseResult<Value> {
        let (tok, pos) = self.bump();
        match tok {
            Tok::Int(n) => Ok(Value::Scalar(Mixed::time(self.n, TimeExpr::constant(Rational::from_integer(n))))),
            Tok::LParen => {
                let v = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(v)
            }
            Tok::Deriv(name) => {
                if !self.scope.fields {
                    return Err(pos.error(format!("`d/d{name}` is only allowed in vector fields")));
                }
                let idx = self.scope.vars.and_then(|v| v.index_of(&name)).ok_or_else(|| {
                    pos.error(format!("unknown identifier `{name}` in `d/d{name}`; declared variables are {}", self.declared()))
                })?;
                let mut comps = vec![Mixed::zero(self.n); self.n];
                comps[idx] = Mixed::time(self.n, TimeExpr::one());
                Ok(Value::Field(comps))
            }
            Tok::Ident(name, primes) => self.identifier(name, primes, pos),
            other => Err(pos.error(format!("expected an expression, found {}", other.describe()))),
        }
    }

    fn identifier(&mut self, name: String, primes: u32, pos: Pos) -> ParseResult<Value> {
        if let Some(f) = Func::from_name(&name) {
            if primes > 0 || *self.peek() != Tok::LParen {
                return Err(pos.error(format!("`{name}` is a function; write `{name}(...)`")));
            }
            if !self.scope.time {
                return Err(pos.error(format!("function `{name}` is not allowed here")));
            }
            self.bump();
            let arg_pos = self.pos();
            let arg = self.expr()?;
            self.expect(Tok::RParen)?;
            let e = match arg {
                Value::Scalar(m) => m.as_time(),
                Value::Field(_) => None,
            }
            .ok_or_else(|| arg_pos.error(format!("argument of `{name}` must depend on t only")))?;
            return Ok(Value::Scalar(Mixed::time(self.n, f.apply(e))));
        }
        if primes == 0 {
            if let Some(i) = self.scope.vars.and_then(|v| v.index_of(&name)) {
                return Ok(Value::Scalar(Mixed::var(self.n, i)));
            }
            if name == "t" && self.scope.time {
                return Ok(Value::Scalar(Mixed::time(self.n, TimeExpr::t())));
            }
        }
        if self.scope.time && self.scope.symbols.contains(&name) {
            let e = TimeExpr::Sym { name, order: primes };
            return Ok(Value::Scalar(Mixed::time(self.n, e)));
        }
        Err(pos.error(format!("unknown identifier `{name}`; declared names are {}", self.declared())))
    }

    fn declared(&self) -> String {
        let mut names: Vec<String> = self.scope.vars.map(|v| v.to_vec()).unwrap_or_default();
        if self.scope.time {
            names.push("t".into());
            names.extend(self.scope.symbols.iter().cloned());
        }
        if names.is_empty() {
            "none".into()
        } else {
            names.iter().map(|s| format!("`{s}`")).collect::<Vec<_>>().join(", ")
        }
    }
}

fn negate_value(v: Value) -> Value {
    match v {
        Value::Scalar(m) => Value::Scalar(m.neg()),
        Value::Field(c) => Value::Field(c.into_iter().map(Mixed::neg).collect()),
    }
}

fn is_zero_scalar(v: &Value) -> bool {
    matches!(v, Value::Scalar(m) if m.terms.is_empty())
}

fn add_values(a: Value, b: Value, pos: Pos) -> ParseResult<Value> {
    match (a, b) {
        (Value::Scalar(x), Value::Scalar(y)) => Ok(Value::Scalar(x.add(y))),
        (Value::Field(x), Value::Field(y)) => Ok(Value::Field(x.into_iter().zip(y).map(|(p, q)| p.add(q)).collect())),
        (f @ Value::Field(_), z) | (z, f @ Value::Field(_)) if is_zero_scalar(&z) => Ok(f),
        _ => Err(pos.error("cannot add a scalar to a vector field")),
    }
}

fn mul_values(a: Value, b: Value, pos: Pos) -> ParseResult<Value> {
    match (a, b) {
        (Value::Scalar(x), Value::Scalar(y)) => Ok(Value::Scalar(x.mul(&y))),
        (Value::Scalar(s), Value::Field(f)) | (Value::Field(f), Value::Scalar(s)) => {
            Ok(Value::Field(f.iter().map(|c| c.mul(&s)).collect()))
        }
        (Value::Field(_), Value::Field(_)) => Err(pos.error("cannot multiply two vector fields")),
    }
}

fn div_values(a: Value, b: Value, pos: Pos) -> ParseResult<Value> {
    let Value::Scalar(d) = b else {
        return Err(pos.error("cannot divide by a vector field"));
    };
    let Some(d) = d.as_time() else {
        return Err(pos.error("division by a state variable is not polynomial"));
    };
    if d.is_zero_structural() {
        return Err(pos.error("division by zero"));
    }
    let inv = Mixed::time(d_n(&a), d.recip());
    mul_values(a, Value::Scalar(inv), pos)
}

fn d_n(v: &Value) -> usize {
    match v {
        Value::Scalar(m) => m.n,
        Value::Field(c) => c.first().map_or(0, |m| m.n),
    }
}

fn exact_polynomial(vars: &Variables, m: &Mixed) -> std::result::Result<Polynomial, String> {
    let mut terms = Vec::with_capacity(m.terms.len());
    for (e, c) in &m.terms {
        match c.as_constant() {
            Some(q) => terms.push((e.clone(), q)),
            None => return Err(format!("coefficient `{c}` is not a constant")),
        }
    }
    Polynomial::from_terms(vars, terms).map_err(|e| e.to_string())
}

fn origin() -> Pos {
    Pos { line: 1, column: 1 }
}

/// Parses a polynomial vector field over `vars`.
pub fn parse_field(src: &str, vars: &Variables) -> ParseResult<PolyVectorField> {
    let scope = Scope { vars: Some(vars), time: false, symbols: &[], fields: true };
    let value = Parser::new(src, scope)?.finish()?;
    let comps = match value {
        Value::Field(c) => c,
        Value::Scalar(m) if m.terms.is_empty() => vec![Mixed::zero(vars.len()); vars.len()],
        Value::Scalar(_) => return Err(origin().error("expected a vector field such as `x*d/dx`, found a scalar")),
    };
    let polys = comps
        .iter()
        .map(|m| exact_polynomial(vars, m))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| origin().error(e))?;
    PolyVectorField::new(vars, polys).map_err(|e| origin().error(e.to_string()))
}

/// Parses a polynomial with exact rational coefficients over `vars`.
pub fn parse_polynomial(src: &str, vars: &Variables) -> ParseResult<Polynomial> {
    let scope = Scope { vars: Some(vars), time: false, symbols: &[], fields: false };
    match Parser::new(src, scope)?.finish()? {
        Value::Scalar(m) => exact_polynomial(vars, &m).map_err(|e| origin().error(e)),
        Value::Field(_) => Err(origin().error("expected a polynomial, found a vector field")),
    }
}

/// Parses a function of `t`; `symbols` are opaque named functions.
pub fn parse_time(src: &str, symbols: &[String]) -> ParseResult<TimeExpr> {
    let scope = Scope { vars: None, time: true, symbols, fields: false };
    match Parser::new(src, scope)?.finish()? {
        Value::Scalar(m) => Ok(m.as_time().expect("no state variables in scope")),
        Value::Field(_) => Err(origin().error("expected a function of t")),
    }
}

/// Parses an expression in `t`, `symbols` and the state variables, as a
/// list of `(coefficient, monomial)` pairs.
pub fn parse_mixed(src: &str, vars: &Variables, symbols: &[String]) -> ParseResult<Vec<(TimeExpr, Polynomial)>> {
    let scope = Scope { vars: Some(vars), time: true, symbols, fields: false };
    match Parser::new(src, scope)?.finish()? {
        Value::Scalar(m) => Ok(m
            .terms
            .into_iter()
            .map(|(e, c)| (c, Polynomial::monomial(vars, e, Rational::one())))
            .collect()),
        Value::Field(_) => Err(origin().error("expected a scalar expression, found a vector field")),
    }
}

/// Canonical text of a field; [`parse_field`] reads it back to an equal value.
pub fn print_field(f: &PolyVectorField) -> String {
    f.to_dsl()
}

#[cfg(test)]
mod tests {
    use super::*;
    use sodelie::liealg::{riccati2_scheme_v2, riccati2_scheme_w, sl3_realization};
    use sodelie::polyvf::{rat, ratio};

    fn xv() -> Variables {
        Variables::xv()
    }

    #[test]
    fn coordinate_field() {
        let f = parse_field("d/dv", &xv()).unwrap();
        assert_eq!(f, sl3_realization()[1]);
    }

    #[test]
    fn dilation_field() {
        let f = parse_field("2*x*d/dx + 4*v*d/dv", &xv()).unwrap();
        assert_eq!(f, sl3_realization()[7]);
    }

    #[test]
    fn unknown_variable_in_derivation() {
        let e = parse_field("d/dy", &xv()).unwrap_err();
        assert_eq!((e.line, e.column), (1, 1));
        assert!(e.message.contains("unknown identifier `y`"), "{e}");
    }

    #[test]
    fn unknown_identifier_has_position() {
        let e = parse_field("x*d/dx +\n  q*d/dv", &xv()).unwrap_err();
        assert_eq!((e.line, e.column), (2, 3));
    }

    #[test]
    fn floats_are_rejected() {
        let e = parse_field("1.5*x*d/dx", &xv()).unwrap_err();
        assert!(e.message.contains("floating-point"));
        assert!(parse_time("2.0*t", &[]).is_err());
    }

    #[test]
    fn non_integer_exponent() {
        let e = parse_field("x^y*d/dx", &xv()).unwrap_err();
        assert!(e.message.contains("exponent must be an integer"), "{e}");
        assert!(parse_field("x^(1/2)*d/dx", &xv()).is_err());
    }

    #[test]
    fn rationals_and_signs() {
        let f = parse_field("-(1/2)*x^2*d/dv + 3/4*v*d/dx - d/dx", &xv()).unwrap();
        let x = Polynomial::var(&xv(), 0);
        let v = Polynomial::var(&xv(), 1);
        assert_eq!(f.component(0), &(&v.scale(&ratio(3, 4)) - &Polynomial::one(&xv())));
        assert_eq!(f.component(1), &(&x * &x).scale(&ratio(-1, 2)));
    }

    #[test]
    fn distributes_over_parentheses() {
        let a = parse_field("(x + v)*(d/dx - d/dv)", &xv()).unwrap();
        let b = parse_field("x*d/dx + v*d/dx - x*d/dv - v*d/dv", &xv()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_field_prints_as_zero() {
        let z = parse_field("x*d/dx - x*d/dx", &xv()).unwrap();
        assert!(z.is_zero());
        assert_eq!(print_field(&z), "0");
        assert_eq!(parse_field("0", &xv()).unwrap(), z);
    }

    #[test]
    fn scalars_and_field_products_are_rejected() {
        assert!(parse_field("x + v", &xv()).is_err());
        assert!(parse_field("d/dx*d/dv", &xv()).is_err());
        assert!(parse_field("x*d/dx + 1", &xv()).is_err());
        assert!(parse_field("d/dx / x", &xv()).is_err());
        assert!(parse_field("t*d/dx", &xv()).is_err());
    }

    #[test]
    fn catalog_round_trip() {
        for f in sl3_realization().iter().chain(&riccati2_scheme_v2()).chain(&riccati2_scheme_w()) {
            let text = print_field(f);
            assert_eq!(&parse_field(&text, &xv()).unwrap(), f, "{text}");
        }
    }

    #[test]
    fn time_expressions() {
        let syms = vec!["f".to_string()];
        let e = parse_time("exp(2*t)/sqrt(1 + t^2) - f'' + cos(t)^(-1)", &syms).unwrap();
        let v = e.substitute("f", &TimeExpr::t().sin()).eval(0.5).unwrap();
        let want = (1.0f64).exp() / (1.25f64).sqrt() + 0.5f64.sin() + 1.0 / 0.5f64.cos();
        assert!((v - want).abs() < 1e-12);
        assert!(parse_time("g", &syms).is_err());
        assert!(parse_time("x", &syms).is_err());
        let printed = e.to_string();
        assert!(parse_time(&printed, &syms).unwrap().structurally_eq(&e), "{printed}");
    }

    #[test]
    fn mixed_right_hand_side() {
        let syms = vec!["f".to_string()];
        let terms = parse_mixed("-3*x*v - x^3 + f", &xv(), &syms).unwrap();
        assert_eq!(terms.len(), 3);
        let at = |t: f64, x: f64, v: f64| -> f64 {
            terms
                .iter()
                .map(|(c, p)| c.substitute("f", &TimeExpr::t()).eval(t).unwrap() * p.eval_f64(&[x, v]))
                .sum()
        };
        assert!((at(0.5, 2.0, 1.0) - (-6.0 - 8.0 + 0.5)).abs() < 1e-12);
        assert!(parse_mixed("1/x", &xv(), &syms).is_err());
        assert!(parse_mixed("sin(x)", &xv(), &syms).is_err());
    }

    #[test]
    fn polynomial_parse() {
        let p = parse_polynomial("(x - 1)^2", &xv()).unwrap();
        assert_eq!(p.eval_exact(&[rat(3), rat(0)]), rat(4));
    }

    #[test]
    fn trailing_garbage() {
        let e = parse_field("x*d/dx )", &xv()).unwrap_err();
        assert_eq!(e.column, 8);
        assert!(parse_field("", &xv()).is_err());
        assert!(parse_field("x*d/dx +", &xv()).is_err());
    }
}
