//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or measure-spec error, 2 data error,
//! 3 verification failure. JSON goes to stdout with numbers rounded to 12
//! significant digits; diagnostics go to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use log::{debug, info};
use serde::Serialize;
use serde_json::Value;

use crate::dominance::{DominanceVerdict, Order};
use crate::envelopes::{
    affine_envelope_lp, ca_var_representation, csd_scale_envelope, minfamily_representation_check, tilde_rho_z,
    var_robust_representation, Candidate, CandidateFamily, EnvelopeCertificate, EnvelopeMode, Regime,
    RepresentationReport,
};
use crate::harness::check;
use crate::measures::{evaluate, Axiom, EvalResult, MeasureSpec};
use crate::scenario::RandomVariable;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

/// Environment variable selecting the log level.
pub const LOG_ENV: &str = "STARSHAPE_LOG";

#[derive(Debug, Parser)]
#[command(name = "starshape", version, about = "Law-invariant star-shaped risk measures on finite distributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a measure on a CSV distribution.
    Compute {
        #[arg(long)]
        measure: String,
        #[arg(long)]
        input: PathBuf,
    },
    /// Test stochastic dominance of LHS over RHS.
    Dominance {
        #[arg(long, value_enum)]
        order: OrderArg,
        #[arg(long)]
        lhs: PathBuf,
        #[arg(long)]
        rhs: PathBuf,
    },
    /// Check a property by randomized trials, or a representation on data.
    #[command(group(ArgGroup::new("what").required(true).args(["property", "representation"])))]
    Verify {
        #[arg(long)]
        property: Option<String>,
        #[arg(long, value_enum)]
        representation: Option<RepresentationArg>,
        #[arg(long)]
        measure: String,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, requires = "representation")]
        input: Option<PathBuf>,
        #[arg(long, num_args = 0.., requires = "representation")]
        candidates: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = RegimeArg::Star)]
        regime: RegimeArg,
        #[arg(long, value_enum, default_value_t = ModeArg::Ssd)]
        mode: ModeArg,
    },
    /// Compute a dominance envelope of INPUT built from REFERENCE.
    Envelope {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        rho_z: f64,
        #[arg(long = "rho-0", allow_hyphen_values = true, default_value_t = 0.0)]
        rho_0: f64,
        #[arg(long, value_enum, default_value_t = RegimeArg::Star)]
        regime: RegimeArg,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OrderArg {
    First,
    Second,
    Convex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RepresentationArg {
    Minfamily,
    VarRobust,
    CaVar,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RegimeArg {
    Star,
    Homog,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Ssd,
    Csd,
    Affine,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    SsdScale,
    CsdScale,
    SsdAffine,
}

impl From<OrderArg> for Order {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::First => Order::First,
            OrderArg::Second => Order::Second,
            OrderArg::Convex => Order::Convex,
        }
    }
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Star => Regime::Star,
            RegimeArg::Homog => Regime::Homog,
        }
    }
}

impl From<ModeArg> for EnvelopeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Ssd => EnvelopeMode::Ssd,
            ModeArg::Csd => EnvelopeMode::Csd,
            ModeArg::Affine => EnvelopeMode::Affine,
        }
    }
}

/// A failure that ends the command with a nonzero exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) => m,
        }
    }
}

fn data(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

/// Rows of a CSV distribution file.
#[derive(Debug, Clone, PartialEq)]
pub struct InputTable {
    pub source: PathBuf,
    pub rows: Vec<(f64, Option<f64>)>,
}

impl InputTable {
    /// The table as a random variable; missing weights mean equal weights.
    pub fn to_random_variable(&self) -> Result<RandomVariable, CliError> {
        let values: Vec<f64> = self.rows.iter().map(|r| r.0).collect();
        let rv = if self.rows[0].1.is_some() {
            let weights: Vec<f64> = self.rows.iter().map(|r| r.1.unwrap_or(0.0)).collect();
            let total: f64 = weights.iter().sum();
            RandomVariable::weighted(values, weights.iter().map(|w| w / total).collect())
        } else {
            RandomVariable::uniform(values)
        };
        rv.map_err(|e| CliError::Data(format!("{}: {e}", self.source.display())))
    }
}

/// Reads `value[,weight]` rows with an optional header line.
pub fn ingest_csv(path: &Path) -> Result<InputTable, CliError> {
    let err = |line: u64, col: usize, msg: String| CliError::Data(format!("{}:{line}:{col}: {msg}", path.display()));
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let mut rows: Vec<(f64, Option<f64>)> = Vec::new();
    let mut weighted: Option<bool> = None;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            err(line, 1, format!("unreadable row: {e}"))
        })?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if i == 0 && record.get(0).is_some_and(|c| c.eq_ignore_ascii_case("value")) {
            match record.len() {
                1 => weighted = Some(false),
                2 if record[1].eq_ignore_ascii_case("weight") => weighted = Some(true),
                _ => return Err(err(line, 2, "header must be `value` or `value,weight`".into())),
            }
            continue;
        }
        if record.len() > 2 {
            return Err(err(line, 3, format!("expected at most 2 columns, found {}", record.len())));
        }
        let has_weight = record.len() == 2;
        match weighted {
            Some(w) if w != has_weight => {
                let expected = if w { "value,weight" } else { "value" };
                return Err(err(line, record.len(), format!("row must have the form `{expected}`")));
            }
            _ => weighted = Some(has_weight),
        }
        let value = parse_cell(&record[0]).ok_or_else(|| err(line, 1, format!("non-numeric value `{}`", &record[0])))?;
        let weight = if has_weight {
            let w = parse_cell(&record[1]).ok_or_else(|| err(line, 2, format!("non-numeric weight `{}`", &record[1])))?;
            if !(w > 0.0) {
                return Err(err(line, 2, format!("nonpositive weight {w}")));
            }
            Some(w)
        } else {
            None
        };
        rows.push((value, weight));
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!("{}: empty file", path.display())));
    }
    debug!("read {} rows from {}", rows.len(), path.display());
    Ok(InputTable { source: path.to_path_buf(), rows })
}

fn parse_cell(text: &str) -> Option<f64> {
    text.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn load(path: &Path) -> Result<RandomVariable, CliError> {
    ingest_csv(path)?.to_random_variable()
}

fn parse_spec(text: &str) -> Result<MeasureSpec, CliError> {
    MeasureSpec::parse(text).map_err(|e| {
        let caret = format!("{}^", " ".repeat(e.offset));
        CliError::Usage(format!("invalid measure spec {e}\n  {text}\n  {caret}"))
    })
}

fn eval(spec: &MeasureSpec, x: &RandomVariable) -> Result<EvalResult, CliError> {
    evaluate(spec, x).map_err(data)
}

fn finite_flag(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{name} must be finite, got {v}")))
    }
}

/// Rounds to 12 significant digits.
pub fn round12(v: f64) -> f64 {
    if v.is_finite() {
        format!("{v:.11e}").parse().unwrap_or(v)
    } else {
        v
    }
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let r = round12(n.as_f64().unwrap_or(f64::NAN));
            serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_value).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

/// Serializes with rounded numbers and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("report types serialize");
    let mut s = serde_json::to_string_pretty(&round_value(v)).expect("values serialize");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct ComputeOut {
    spec: String,
    value: EvalResult,
    n_atoms: usize,
}

#[derive(Serialize)]
struct DominanceOut {
    order: Order,
    #[serde(flatten)]
    verdict: DominanceVerdict,
}

#[derive(Serialize)]
struct RepresentationOut {
    representation: &'static str,
    spec: String,
    #[serde(flatten)]
    report: RepresentationReport,
}

#[derive(Serialize)]
struct EnvelopeOut {
    kind: &'static str,
    #[serde(flatten)]
    certificate: EnvelopeCertificate,
}

fn log_level() -> Result<log::LevelFilter, CliError> {
    match std::env::var(LOG_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(log::LevelFilter::Warn),
        Err(e) => Err(CliError::Usage(format!("{LOG_ENV}: {e}"))),
        Ok(v) => match v.as_str() {
            "error" => Ok(log::LevelFilter::Error),
            "warn" => Ok(log::LevelFilter::Warn),
            "info" => Ok(log::LevelFilter::Info),
            "debug" => Ok(log::LevelFilter::Debug),
            _ => Err(CliError::Usage(format!(
                "{LOG_ENV} must be one of error, warn, info, debug; got `{v}`"
            ))),
        },
    }
}

/// Runs one invocation and returns its exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let level = match log_level() {
        Ok(l) => l,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            return e.exit_code();
        }
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_USAGE;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    match execute(cli.command) {
        Ok((json, passed)) => {
            let _ = out.write_all(json.as_bytes());
            if passed {
                EXIT_OK
            } else {
                EXIT_VERIFY
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.exit_code()
        }
    }
}

// JSON output and whether the command's verification passed.
fn execute(command: Command) -> Result<(String, bool), CliError> {
    match command {
        Command::Compute { measure, input } => {
            let spec = parse_spec(&measure)?;
            let x = load(&input)?;
            let value = eval(&spec, &x)?;
            let n_atoms = x.to_distribution().len();
            info!("evaluated {spec} on {n_atoms} atoms");
            Ok((to_json(&ComputeOut { spec: spec.to_string(), value, n_atoms }), true))
        }
        Command::Dominance { order, lhs, rhs } => {
            let (x, y) = (load(&lhs)?.to_distribution(), load(&rhs)?.to_distribution());
            let order = Order::from(order);
            let verdict = order.compare(&x, &y);
            Ok((to_json(&DominanceOut { order, verdict }), true))
        }
        Command::Verify {
            property,
            representation,
            measure,
            trials,
            seed,
            input,
            candidates,
            regime,
            mode,
        } => {
            let spec = parse_spec(&measure)?;
            if let Some(name) = property {
                let axiom: Axiom = name.parse().map_err(CliError::Usage)?;
                if trials == 0 {
                    return Err(CliError::Usage("--trials must be at least 1".into()));
                }
                info!("checking {axiom} of {spec}: {trials} trials, seed {seed}");
                let report = check(axiom, &spec, trials, seed);
                return Ok((to_json(&report), report.pass));
            }
            let kind = representation.expect("clap requires property or representation");
            let input = input.ok_or_else(|| CliError::Usage("--representation needs --input".into()))?;
            let report = verify_representation(kind, &spec, &input, &candidates, regime.into(), mode.into())?;
            let pass = report.pass;
            let out = RepresentationOut {
                representation: match kind {
                    RepresentationArg::Minfamily => "minfamily",
                    RepresentationArg::VarRobust => "var-robust",
                    RepresentationArg::CaVar => "ca-var",
                },
                spec: spec.to_string(),
                report,
            };
            Ok((to_json(&out), pass))
        }
        Command::Envelope { kind, input, reference, rho_z, rho_0, regime } => {
            let rho_z = finite_flag("rho-z", rho_z)?;
            let rho_0 = finite_flag("rho-0", rho_0)?;
            let (x, z) = (load(&input)?.to_distribution(), load(&reference)?.to_distribution());
            let (name, certificate) = match kind {
                KindArg::SsdScale => ("ssd-scale", tilde_rho_z(&x, &z, rho_z, rho_0, regime.into()).map_err(data)?),
                KindArg::CsdScale => (
                    "csd-scale",
                    csd_scale_envelope(&x, &z, rho_z, rho_0, regime.into()).map_err(data)?,
                ),
                KindArg::SsdAffine => {
                    if rho_0 != 0.0 {
                        return Err(CliError::Usage("ssd-affine assumes --rho-0 0".into()));
                    }
                    ("ssd-affine", affine_envelope_lp(&x, &z, rho_z))
                }
            };
            Ok((to_json(&EnvelopeOut { kind: name, certificate }), true))
        }
    }
}

fn verify_representation(
    kind: RepresentationArg,
    spec: &MeasureSpec,
    input: &Path,
    candidate_paths: &[PathBuf],
    regime: Regime,
    mode: EnvelopeMode,
) -> Result<RepresentationReport, CliError> {
    let x = load(input)?;
    let rho_x = eval(spec, &x)?.value();
    let zero = RandomVariable::point_mass(0.0).map_err(data)?;
    let rho_zero = eval(spec, &zero)?.value();
    let mut members = Vec::with_capacity(candidate_paths.len() + 1);
    match kind {
        RepresentationArg::CaVar => {
            if rho_x.is_finite() {
                let shifted = x.transform(1.0, -rho_x).map_err(data)?;
                let rho_z = eval(spec, &shifted)?.value();
                members.push(Candidate { z: shifted, rho_z });
            }
        }
        _ => {
            if rho_x.is_finite() {
                members.push(Candidate { z: x.clone(), rho_z: rho_x });
            }
        }
    }
    for path in candidate_paths {
        let z = load(path)?;
        let rho_z = eval(spec, &z)?.value();
        if !rho_z.is_finite() {
            return Err(CliError::Data(format!("{}: measure value is {rho_z}", path.display())));
        }
        members.push(Candidate { z, rho_z });
    }
    if kind == RepresentationArg::Minfamily && !rho_x.is_finite() {
        return Err(CliError::Data(format!("{}: measure value is {rho_x}", input.display())));
    }
    let fam = CandidateFamily::new(members, rho_zero).map_err(data)?;
    match kind {
        RepresentationArg::Minfamily => minfamily_representation_check(&x, &fam, rho_x, regime, mode).map_err(data),
        RepresentationArg::VarRobust => Ok(var_robust_representation(&x, &fam, rho_x, regime)),
        RepresentationArg::CaVar => Ok(ca_var_representation(&x, &fam, rho_x)),
    }
}
