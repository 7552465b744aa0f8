//! Risk-measure description trees, their evaluation and their text grammar.
//!
//! Measures are increasing: larger outcomes are riskier. The entropic measure
//! is therefore `(1/theta) log E[exp(theta X)]` with a positive `theta`.
//!
//! Grammar accepted by [`MeasureSpec::parse`], whitespace-insensitive:
//!
//! ```text
//! spec := atom | "min(" spec { "," spec } ")" | "max(" spec { "," spec } ")"
//! atom := "var:" P | "es:" P | "mean" | "esssup" | "const:" R | "entropic:" Rpos
//!       | "mix:(" W "@es:" P { "," W "@es:" P } ")" | "robvar:" P ":" R ":" R
//! ```
//!
//! `P` is a level in `[0, 1]`, `W` a positive weight (weights are normalized)
//! and `const` also accepts `inf`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::scenario::{EmpiricalDistribution, RandomVariable, ScenarioError};
use crate::tol;

/// Largest scenario count accepted by [`robust_var_oracle`].
pub const ORACLE_MAX_SCENARIOS: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("level {0} is outside [0, 1]")]
    Level(f64),
    #[error("mixture level {0} is outside (0, 1]")]
    MixtureLevel(f64),
    #[error("mixture weights must be positive and sum to 1, got sum {sum}")]
    MixtureWeights { sum: f64 },
    #[error("entropic parameter {0} must be positive and finite")]
    Theta(f64),
    #[error("constant {0} must be finite or +inf")]
    Constant(f64),
    #[error("discount bounds need 0 <= d_b <= d_u finite, got d_b = {d_b}, d_u = {d_u}")]
    Discount { d_b: f64, d_u: f64 },
    #[error("empty {0} family")]
    EmptyFamily(&'static str),
    #[error("entropic evaluation overflows: theta * x = {0}")]
    Overflow(f64),
    #[error("oracle enumerates at most {ORACLE_MAX_SCENARIOS} scenarios, got {0}")]
    TooManyScenarios(usize),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

pub type Result<T> = std::result::Result<T, MeasureError>;

/// A value in `R u {+inf}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalResult {
    Finite(f64),
    PlusInfinity,
}

impl EvalResult {
    pub fn from_f64(v: f64) -> Self {
        if v == f64::INFINITY {
            EvalResult::PlusInfinity
        } else {
            EvalResult::Finite(v)
        }
    }

    /// The value as a float, `+inf` included.
    pub fn value(self) -> f64 {
        match self {
            EvalResult::Finite(v) => v,
            EvalResult::PlusInfinity => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, EvalResult::Finite(_))
    }
}

impl fmt::Display for EvalResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalResult::Finite(v) => write!(f, "{v}"),
            EvalResult::PlusInfinity => f.write_str("inf"),
        }
    }
}

impl Serialize for EvalResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            EvalResult::Finite(v) => s.serialize_f64(*v),
            EvalResult::PlusInfinity => s.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    Var(f64),
    Es(f64),
    Mean,
    EssSup,
    Const(f64),
    Entropic(f64),
    /// `(weight, level)` pairs of an expected-shortfall mixture.
    EsMixture(Vec<(f64, f64)>),
    MinFamily(Vec<MeasureSpec>),
    MaxFamily(Vec<MeasureSpec>),
    /// Value-at-Risk of `D X` maximized over discounts `d_b <= D <= d_u`.
    RobustVar { beta: f64, d_b: f64, d_u: f64 },
}

fn check_level(beta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&beta) {
        Ok(())
    } else {
        Err(MeasureError::Level(beta))
    }
}

fn check_discount(d_b: f64, d_u: f64) -> Result<()> {
    if d_b >= 0.0 && d_b <= d_u && d_u.is_finite() {
        Ok(())
    } else {
        Err(MeasureError::Discount { d_b, d_u })
    }
}

impl MeasureSpec {
    pub fn parse(text: &str) -> std::result::Result<Self, ParseError> {
        Parser::new(text)?.parse_top()
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MeasureSpec::Var(b) | MeasureSpec::Es(b) => check_level(*b),
            MeasureSpec::Mean | MeasureSpec::EssSup => Ok(()),
            MeasureSpec::Const(v) => {
                if v.is_finite() || *v == f64::INFINITY {
                    Ok(())
                } else {
                    Err(MeasureError::Constant(*v))
                }
            }
            MeasureSpec::Entropic(theta) => {
                if *theta > 0.0 && theta.is_finite() {
                    Ok(())
                } else {
                    Err(MeasureError::Theta(*theta))
                }
            }
            MeasureSpec::EsMixture(parts) => {
                let sum: f64 = parts.iter().map(|p| p.0).sum();
                if parts.is_empty()
                    || parts.iter().any(|p| !(p.0 > 0.0))
                    || (sum - 1.0).abs() > tol::WEIGHT_SUM
                {
                    return Err(MeasureError::MixtureWeights { sum });
                }
                match parts.iter().find(|p| !(p.1 > 0.0 && p.1 <= 1.0)) {
                    Some(&(_, s)) => Err(MeasureError::MixtureLevel(s)),
                    None => Ok(()),
                }
            }
            MeasureSpec::MinFamily(children) | MeasureSpec::MaxFamily(children) => {
                if children.is_empty() {
                    let kind = if matches!(self, MeasureSpec::MinFamily(_)) { "min" } else { "max" };
                    return Err(MeasureError::EmptyFamily(kind));
                }
                children.iter().try_for_each(MeasureSpec::validate)
            }
            MeasureSpec::RobustVar { beta, d_b, d_u } => {
                check_level(*beta)?;
                check_discount(*d_b, *d_u)
            }
        }
    }
}

/// Evaluates a measure on a random variable through its law.
pub fn evaluate(spec: &MeasureSpec, rv: &RandomVariable) -> Result<EvalResult> {
    evaluate_law(spec, &rv.to_distribution())
}

/// Evaluates a measure on a law.
pub fn evaluate_law(spec: &MeasureSpec, d: &EmpiricalDistribution) -> Result<EvalResult> {
    spec.validate()?;
    eval_valid(spec, d)
}

fn eval_valid(spec: &MeasureSpec, d: &EmpiricalDistribution) -> Result<EvalResult> {
    let finite = |v: f64| Ok(EvalResult::Finite(v));
    match spec {
        MeasureSpec::Var(b) => finite(d.quantile_curve().value_at(*b)),
        MeasureSpec::Es(b) => finite(d.es_unchecked(*b)),
        MeasureSpec::Mean => finite(d.mean()),
        MeasureSpec::EssSup => finite(d.max()),
        MeasureSpec::Const(v) => Ok(EvalResult::from_f64(*v)),
        MeasureSpec::Entropic(theta) => entropic(d, *theta).map(EvalResult::Finite),
        MeasureSpec::EsMixture(parts) => finite(parts.iter().map(|&(w, s)| w * d.es_unchecked(s)).sum()),
        MeasureSpec::MinFamily(children) => {
            let mut best = f64::INFINITY;
            for child in children {
                best = best.min(eval_valid(child, d)?.value());
            }
            Ok(EvalResult::from_f64(best))
        }
        MeasureSpec::MaxFamily(children) => {
            let mut best = f64::NEG_INFINITY;
            for child in children {
                best = best.max(eval_valid(child, d)?.value());
            }
            Ok(EvalResult::from_f64(best))
        }
        MeasureSpec::RobustVar { beta, d_b, d_u } => {
            let w = d.map_monotone(|x| worst_discount(x, *d_b, *d_u));
            finite(w.quantile_curve().value_at(*beta))
        }
    }
}

fn entropic(d: &EmpiricalDistribution, theta: f64) -> Result<f64> {
    let scaled: Vec<f64> = d.atoms().iter().map(|a| theta * a.value).collect();
    if let Some(&bad) = scaled.iter().find(|v| !v.is_finite()) {
        return Err(MeasureError::Overflow(bad));
    }
    let m = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tail: f64 = d
        .atoms()
        .iter()
        .zip(&scaled)
        .map(|(a, &s)| a.weight * (s - m).exp_m1())
        .sum();
    Ok((m + tail.ln_1p()) / theta)
}

fn worst_discount(x: f64, d_b: f64, d_u: f64) -> f64 {
    if x >= 0.0 {
        d_u * x
    } else {
        d_b * x
    }
}

/// Discount-ambiguous Value-at-Risk in closed form: `VaR_beta` of the
/// scenario-wise worst case `d_u x` on gains and `d_b x` on losses.
pub fn robust_var(rv: &RandomVariable, beta: f64, d_b: f64, d_u: f64) -> Result<f64> {
    check_level(beta)?;
    check_discount(d_b, d_u)?;
    let w = rv.values().iter().map(|&x| worst_discount(x, d_b, d_u)).collect();
    Ok(rv.with_values(w)?.to_distribution().var_at(beta)?)
}

/// Brute-force counterpart of [`robust_var`]: the maximum over all `2^n`
/// assignments of `d_b` or `d_u` to the scenarios.
///
/// Value-at-Risk is monotone and each `d_i * x_i` is monotone in `d_i`, so
/// the supremum over discounts in `[d_b, d_u]` is reached at a corner.
pub fn robust_var_oracle(rv: &RandomVariable, beta: f64, d_b: f64, d_u: f64) -> Result<f64> {
    check_level(beta)?;
    check_discount(d_b, d_u)?;
    let n = rv.len();
    if n > ORACLE_MAX_SCENARIOS {
        return Err(MeasureError::TooManyScenarios(n));
    }
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1u32 << n) {
        let values = rv
            .values()
            .iter()
            .enumerate()
            .map(|(i, &x)| if mask >> i & 1 == 1 { d_u * x } else { d_b * x })
            .collect();
        best = best.max(rv.with_values(values)?.to_distribution().var_at(beta)?);
    }
    Ok(best)
}

/// Properties a functional can be claimed or checked to have.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    LawInvariant,
    Monotone,
    StarShaped,
    PositivelyHomogeneous,
    Convex,
    Sublinear,
    CashAdditive,
    CashSubadditive,
    SsdConsistent,
    CsdConsistent,
    Normalized,
}

impl Axiom {
    pub const ALL: [Axiom; 11] = [
        Axiom::LawInvariant,
        Axiom::Monotone,
        Axiom::StarShaped,
        Axiom::PositivelyHomogeneous,
        Axiom::Convex,
        Axiom::Sublinear,
        Axiom::CashAdditive,
        Axiom::CashSubadditive,
        Axiom::SsdConsistent,
        Axiom::CsdConsistent,
        Axiom::Normalized,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axiom::LawInvariant => "law-invariant",
            Axiom::Monotone => "monotone",
            Axiom::StarShaped => "star-shaped",
            Axiom::PositivelyHomogeneous => "positively-homogeneous",
            Axiom::Convex => "convex",
            Axiom::Sublinear => "sublinear",
            Axiom::CashAdditive => "cash-additive",
            Axiom::CashSubadditive => "cash-subadditive",
            Axiom::SsdConsistent => "ssd-consistent",
            Axiom::CsdConsistent => "csd-consistent",
            Axiom::Normalized => "normalized",
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axiom {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Axiom::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown property `{s}`"))
    }
}

pub type AxiomSet = BTreeSet<Axiom>;

// Adds everything implied by the axioms already present.
fn close_axioms(mut set: AxiomSet) -> AxiomSet {
    use Axiom::*;
    loop {
        let before = set.len();
        if set.contains(&Sublinear) {
            set.extend([PositivelyHomogeneous, Convex]);
        }
        if set.contains(&PositivelyHomogeneous) {
            set.insert(Normalized);
            if set.contains(&Convex) {
                set.insert(Sublinear);
            }
        }
        if set.contains(&Convex) || set.contains(&PositivelyHomogeneous) {
            set.insert(StarShaped);
        }
        if set.contains(&CashAdditive) {
            set.insert(CashSubadditive);
        }
        if set.contains(&SsdConsistent) {
            set.extend([CsdConsistent, Monotone, LawInvariant]);
        }
        if set.len() == before {
            return set;
        }
    }
}

/// The axioms every measure of this shape satisfies, derived from its
/// structure alone.
pub fn measure_axiom_profile(spec: &MeasureSpec) -> AxiomSet {
    use Axiom::*;
    let base: AxiomSet = match spec {
        MeasureSpec::Var(_) => [LawInvariant, Monotone, PositivelyHomogeneous, CashAdditive].into(),
        MeasureSpec::Es(_) | MeasureSpec::Mean | MeasureSpec::EssSup | MeasureSpec::EsMixture(_) => {
            [Sublinear, CashAdditive, SsdConsistent].into()
        }
        MeasureSpec::Entropic(_) => [Convex, CashAdditive, SsdConsistent, Normalized].into(),
        MeasureSpec::Const(v) if *v == f64::INFINITY => [SsdConsistent].into(),
        MeasureSpec::Const(v) => {
            let mut s: AxiomSet = [Convex, CashSubadditive, SsdConsistent].into();
            if *v == 0.0 {
                s.insert(PositivelyHomogeneous);
            }
            s
        }
        MeasureSpec::RobustVar { .. } => [LawInvariant, Monotone, PositivelyHomogeneous].into(),
        MeasureSpec::MinFamily(children) => min_family_profile(children),
        MeasureSpec::MaxFamily(children) => {
            // Convexity and star-shapedness both survive a pointwise maximum,
            // the latter with the family's own value at zero.
            let mut s = common_axioms(children);
            s.remove(&Sublinear);
            s
        }
    };
    close_axioms(base)
}

fn common_axioms(children: &[MeasureSpec]) -> AxiomSet {
    let mut iter = children.iter().map(measure_axiom_profile);
    let first = iter.next().unwrap_or_default();
    iter.fold(first, |acc, s| acc.intersection(&s).copied().collect())
}

fn min_family_profile(children: &[MeasureSpec]) -> AxiomSet {
    use Axiom::*;
    let common = common_axioms(children);
    let mut s: AxiomSet = common
        .iter()
        .copied()
        .filter(|a| !matches!(a, Convex | Sublinear | StarShaped))
        .collect();
    if common.contains(&StarShaped) && equal_values_at_zero(children) {
        s.insert(StarShaped);
    }
    s
}

fn equal_values_at_zero(children: &[MeasureSpec]) -> bool {
    let zero = EmpiricalDistribution::point_mass(0.0).expect("zero is a valid point mass");
    let values: Option<Vec<f64>> = children
        .iter()
        .map(|c| evaluate_law(c, &zero).ok().map(EvalResult::value))
        .collect();
    match values {
        Some(v) => v.iter().all(|&x| x.is_finite() && tol::close(x, v[0], tol::CURVE)),
        None => false,
    }
}

impl fmt::Display for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureSpec::Var(b) => write!(f, "var:{b}"),
            MeasureSpec::Es(b) => write!(f, "es:{b}"),
            MeasureSpec::Mean => f.write_str("mean"),
            MeasureSpec::EssSup => f.write_str("esssup"),
            MeasureSpec::Const(v) if *v == f64::INFINITY => f.write_str("const:inf"),
            MeasureSpec::Const(v) => write!(f, "const:{v}"),
            MeasureSpec::Entropic(t) => write!(f, "entropic:{t}"),
            MeasureSpec::EsMixture(parts) => {
                f.write_str("mix:(")?;
                for (i, (w, s)) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{w}@es:{s}")?;
                }
                f.write_str(")")
            }
            MeasureSpec::MinFamily(c) => write_family(f, "min", c),
            MeasureSpec::MaxFamily(c) => write_family(f, "max", c),
            MeasureSpec::RobustVar { beta, d_b, d_u } => write!(f, "robvar:{beta}:{d_b}:{d_u}"),
        }
    }
}

fn write_family(f: &mut fmt::Formatter<'_>, name: &str, children: &[MeasureSpec]) -> fmt::Result {
    write!(f, "{name}(")?;
    for (i, c) in children.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{c}")?;
    }
    f.write_str(")")
}

impl FromStr for MeasureSpec {
    type Err = ParseError;

    fn from_str(s: &str) -> std::result::Result<Self, ParseError> {
        MeasureSpec::parse(s)
    }
}

/// A grammar violation at a byte offset of the input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("at byte {offset}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub offset: usize,
    pub expected: Vec<String>,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    LParen,
    RParen,
    Comma,
    Colon,
    At,
    End,
}

impl Tok {
    fn describe(&self, text: &str) -> String {
        match self {
            Tok::End => "end of input".to_string(),
            _ => format!("`{text}`"),
        }
    }
}

struct Token {
    tok: Tok,
    offset: usize,
    text: String,
}

fn tokenize(src: &str) -> std::result::Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let punct = match c {
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            b':' => Some(Tok::Colon),
            b'@' => Some(Tok::At),
            _ => None,
        };
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if let Some(tok) = punct {
            i += 1;
            out.push(Token { tok, offset: start, text: src[start..i].to_string() });
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let text = &src[start..i];
            out.push(Token { tok: Tok::Ident(text.to_string()), offset: start, text: text.to_string() });
        } else if c.is_ascii_digit() || matches!(c, b'.' | b'+' | b'-') {
            i += 1;
            while i < bytes.len() {
                let b = bytes[i];
                let after_exp = matches!(bytes[i - 1], b'e' | b'E');
                if b.is_ascii_digit() || matches!(b, b'.' | b'e' | b'E') || (after_exp && matches!(b, b'+' | b'-')) {
                    i += 1;
                } else {
                    break;
                }
            }
            let text = &src[start..i];
            // "-inf" and "+inf" reach here as a sign followed by an identifier.
            let value = text.parse::<f64>().map_err(|_| ParseError {
                offset: start,
                expected: vec!["number".to_string()],
                found: format!("`{text}`"),
            })?;
            if !value.is_finite() {
                return Err(ParseError {
                    offset: start,
                    expected: vec!["finite number".to_string()],
                    found: format!("`{text}`"),
                });
            }
            out.push(Token { tok: Tok::Number(value), offset: start, text: text.to_string() });
        } else {
            let ch = src[start..].chars().next().unwrap_or('?');
            return Err(ParseError {
                offset: start,
                expected: vec!["measure token".to_string()],
                found: format!("`{ch}`"),
            });
        }
    }
    out.push(Token { tok: Tok::End, offset: src.len(), text: String::new() });
    Ok(out)
}

const ATOMS: [&str; 10] = ["var", "es", "mean", "esssup", "const", "entropic", "mix", "robvar", "min", "max"];

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn new(src: &str) -> std::result::Result<Self, ParseError> {
        Ok(Self { tokens: tokenize(src)?, pos: 0 })
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn error<S: AsRef<str>>(&self, expected: &[S]) -> ParseError {
        let t = self.peek();
        ParseError {
            offset: t.offset,
            expected: expected.iter().map(|s| s.as_ref().to_string()).collect(),
            found: t.tok.describe(&t.text),
        }
    }

    fn expect(&mut self, tok: Tok, name: &str) -> std::result::Result<(), ParseError> {
        if self.peek().tok == tok {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&[name]))
        }
    }

    fn expect_ident(&mut self, name: &str) -> std::result::Result<(), ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) if s == name => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error(&[format!("`{name}`")])),
        }
    }

    // A number satisfying `ok`; `what` names the accepted range.
    fn number(&mut self, what: &str, ok: impl Fn(f64) -> bool) -> std::result::Result<f64, ParseError> {
        match self.peek().tok {
            Tok::Number(v) if ok(v) => {
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.error(&[what])),
        }
    }

    fn level(&mut self) -> std::result::Result<f64, ParseError> {
        self.number("level in [0, 1]", |v| (0.0..=1.0).contains(&v))
    }

    fn parse_top(mut self) -> std::result::Result<MeasureSpec, ParseError> {
        let spec = self.spec()?;
        self.expect(Tok::End, "end of input")?;
        Ok(spec)
    }

    fn spec(&mut self) -> std::result::Result<MeasureSpec, ParseError> {
        let name = match &self.peek().tok {
            Tok::Ident(s) if ATOMS.contains(&s.as_str()) => s.clone(),
            _ => return Err(self.error(&ATOMS.map(|a| format!("`{a}`")))),
        };
        self.pos += 1;
        match name.as_str() {
            "min" | "max" => {
                self.expect(Tok::LParen, "`(`")?;
                let mut children = vec![self.spec()?];
                while self.peek().tok == Tok::Comma {
                    self.pos += 1;
                    children.push(self.spec()?);
                }
                self.expect(Tok::RParen, "`,` or `)`")?;
                Ok(if name == "min" {
                    MeasureSpec::MinFamily(children)
                } else {
                    MeasureSpec::MaxFamily(children)
                })
            }
            "mean" => Ok(MeasureSpec::Mean),
            "esssup" => Ok(MeasureSpec::EssSup),
            "var" => {
                self.expect(Tok::Colon, "`:`")?;
                Ok(MeasureSpec::Var(self.level()?))
            }
            "es" => {
                self.expect(Tok::Colon, "`:`")?;
                Ok(MeasureSpec::Es(self.level()?))
            }
            "const" => {
                self.expect(Tok::Colon, "`:`")?;
                if matches!(&self.peek().tok, Tok::Ident(s) if s == "inf") {
                    self.pos += 1;
                    return Ok(MeasureSpec::Const(f64::INFINITY));
                }
                Ok(MeasureSpec::Const(self.number("number or `inf`", |_| true)?))
            }
            "entropic" => {
                self.expect(Tok::Colon, "`:`")?;
                Ok(MeasureSpec::Entropic(self.number("positive number", |v| v > 0.0)?))
            }
            "robvar" => {
                self.expect(Tok::Colon, "`:`")?;
                let beta = self.level()?;
                self.expect(Tok::Colon, "`:`")?;
                let d_b = self.number("nonnegative number", |v| v >= 0.0)?;
                self.expect(Tok::Colon, "`:`")?;
                let d_u = self.number(&format!("number >= {d_b}"), |v| v >= d_b)?;
                Ok(MeasureSpec::RobustVar { beta, d_b, d_u })
            }
            "mix" => self.mixture(),
            _ => unreachable!("atom list covers every name"),
        }
    }

    fn mixture(&mut self) -> std::result::Result<MeasureSpec, ParseError> {
        self.expect(Tok::Colon, "`:`")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut parts = Vec::new();
        loop {
            let w = self.number("positive weight", |v| v > 0.0)?;
            self.expect(Tok::At, "`@`")?;
            self.expect_ident("es")?;
            self.expect(Tok::Colon, "`:`")?;
            let s = self.number("level in (0, 1]", |v| v > 0.0 && v <= 1.0)?;
            parts.push((w, s));
            if self.peek().tok == Tok::Comma {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.expect(Tok::RParen, "`,` or `)`")?;
        let sum: f64 = parts.iter().map(|p| p.0).sum();
        // Weights already summing to one are kept verbatim so printing and
        // reparsing a spec is lossless.
        if (sum - 1.0).abs() > tol::WEIGHT_SUM {
            for p in &mut parts {
                p.0 /= sum;
            }
        }
        Ok(MeasureSpec::EsMixture(parts))
    }
}
