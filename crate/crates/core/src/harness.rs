//! Seeded randomized checks of axioms and dominance consistency.
//!
//! Trial `i` of a run with seed `s` draws everything from a ChaCha8 stream
//! seeded with `s ^ i`, so a single failing trial can be replayed alone.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dominance::{csd_compare, fsd_compare, mps_contract, pointwise_reduce, ssd_compare};
use crate::measures::{evaluate, Axiom, MeasureError, MeasureSpec};
use crate::scenario::{RandomVariable, ScenarioSpace};
use crate::tol;

/// Absolute and relative tolerance of every property assertion.
pub const PROPERTY_TOL: f64 = 1e-9;

const MAX_DENOMINATOR: u64 = 120;
const PARETO_BOUND: f64 = 1e3;

/// Anything the harness can evaluate; `+inf` is a legal value.
pub trait RiskFunctional {
    fn eval(&self, x: &RandomVariable) -> Result<f64, MeasureError>;
    fn describe(&self) -> String;
}

impl RiskFunctional for MeasureSpec {
    fn eval(&self, x: &RandomVariable) -> Result<f64, MeasureError> {
        evaluate(self, x).map(|r| r.value())
    }

    fn describe(&self) -> String {
        self.to_string()
    }
}

/// A named closure, for functionals outside the measure grammar.
pub struct FnFunctional<F> {
    name: String,
    f: F,
}

impl<F: Fn(&RandomVariable) -> f64> FnFunctional<F> {
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self { name: name.into(), f }
    }
}

impl<F: Fn(&RandomVariable) -> f64> RiskFunctional for FnFunctional<F> {
    fn eval(&self, x: &RandomVariable) -> Result<f64, MeasureError> {
        Ok((self.f)(x))
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub trial: usize,
    pub seed: u64,
    pub input: String,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// A trial whose generated pair failed its own dominance check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aborted {
    pub trial: usize,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub property: Axiom,
    pub spec: String,
    pub trials: usize,
    pub seed: u64,
    pub pass: bool,
    pub failures: Vec<Failure>,
    pub aborted: Vec<Aborted>,
}

/// A generated random variable together with the integer counts behind its
/// probabilities.
#[derive(Debug, Clone)]
pub struct Sample {
    pub rv: RandomVariable,
    pub counts: Vec<u64>,
}

fn draw_value(rng: &mut ChaCha8Rng) -> f64 {
    if rng.gen_bool(0.9) {
        rng.gen_range(-10.0..=10.0)
    } else {
        // two-sided Pareto with tail index 1.5, truncated
        let u: f64 = rng.gen_range(0.0..1.0);
        let magnitude = (1.0 - u).powf(-1.0 / 1.5).min(PARETO_BOUND);
        if rng.gen_bool(0.5) {
            magnitude
        } else {
            -magnitude
        }
    }
}

/// Random positive composition of a random denominator into `n` parts.
fn draw_counts(rng: &mut ChaCha8Rng, n: usize) -> Vec<u64> {
    let denominator = rng.gen_range(n as u64..=MAX_DENOMINATOR.max(n as u64));
    let mut cuts = rand::seq::index::sample(rng, denominator as usize - 1, n - 1)
        .into_iter()
        .map(|c| c as u64 + 1)
        .collect::<Vec<_>>();
    cuts.sort_unstable();
    let mut prev = 0;
    let mut counts = Vec::with_capacity(n);
    for c in cuts.into_iter().chain([denominator]) {
        counts.push(c - prev);
        prev = c;
    }
    counts
}

/// Draws a random variable with 2 to 12 scenarios.
pub fn random_sample(rng: &mut ChaCha8Rng) -> Sample {
    let n = rng.gen_range(2..=12);
    let counts = draw_counts(rng, n);
    let space = Arc::new(ScenarioSpace::from_counts(&counts).expect("counts are positive"));
    let values = (0..n).map(|_| draw_value(rng)).collect();
    let rv = RandomVariable::new(space, values).expect("values are finite");
    Sample { rv, counts }
}

/// Fresh outcomes on the sample's own space.
pub fn random_values_like(rng: &mut ChaCha8Rng, rv: &RandomVariable) -> RandomVariable {
    let values = (0..rv.len()).map(|_| draw_value(rng)).collect();
    rv.with_values(values).expect("values are finite")
}

pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ trial as u64)
}

fn summary(sample: &Sample, extra: &str) -> String {
    let total: u64 = sample.counts.iter().sum();
    let probs: Vec<String> = sample.counts.iter().map(|k| format!("{k}/{total}")).collect();
    format!("x={:?} p=[{}]{}", sample.rv.values(), probs.join(","), extra)
}

enum Outcome {
    Ok,
    Fail { input: String, lhs: f64, rhs: f64 },
    Abort(String),
}

fn le_outcome(lhs: f64, rhs: f64, input: impl FnOnce() -> String) -> Outcome {
    if tol::le(lhs, rhs, PROPERTY_TOL) {
        Outcome::Ok
    } else {
        Outcome::Fail { input: input(), lhs, rhs }
    }
}

fn eq_outcome(lhs: f64, rhs: f64, input: impl FnOnce() -> String) -> Outcome {
    if tol::close(lhs, rhs, PROPERTY_TOL) {
        Outcome::Ok
    } else {
        Outcome::Fail { input: input(), lhs, rhs }
    }
}

fn run<F>(property: Axiom, f: &dyn RiskFunctional, trials: usize, seed: u64, mut trial_fn: F) -> PropertyReport
where
    F: FnMut(&mut ChaCha8Rng, &dyn RiskFunctional) -> Result<Outcome, (String, MeasureError)>,
{
    let mut failures = Vec::new();
    let mut aborted = Vec::new();
    for trial in 0..trials {
        let trial_seed = seed ^ trial as u64;
        let mut rng = trial_rng(seed, trial);
        match trial_fn(&mut rng, f) {
            Ok(Outcome::Ok) => {}
            Ok(Outcome::Fail { input, lhs, rhs }) => failures.push(Failure {
                trial,
                seed: trial_seed,
                input,
                lhs,
                rhs,
                gap: lhs - rhs,
            }),
            Ok(Outcome::Abort(reason)) => aborted.push(Aborted { trial, seed: trial_seed, reason }),
            Err((input, err)) => failures.push(Failure {
                trial,
                seed: trial_seed,
                input: format!("{input} error={err}"),
                lhs: f64::NAN,
                rhs: f64::NAN,
                gap: f64::NAN,
            }),
        }
    }
    PropertyReport {
        property,
        spec: f.describe(),
        trials,
        seed,
        pass: failures.is_empty(),
        failures,
        aborted,
    }
}

// Evaluates and tags any error with the input it happened on.
fn ev(f: &dyn RiskFunctional, x: &RandomVariable, sample: &Sample) -> Result<f64, (String, MeasureError)> {
    f.eval(x).map_err(|e| (summary(sample, ""), e))
}

fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let l: f64 = rng.gen_range(0.0..1.0);
        if l > 0.0 {
            return l;
        }
    }
}

/// `f(l X) <= l f(X) + (1 - l) f(0)` for `l` in `(0, 1)`.
pub fn check_star_shaped(f: &dyn RiskFunctional, trials: usize, seed: u64) -> PropertyReport {
    run(Axiom::StarShaped, f, trials, seed, |rng, f| {
        let s = random_sample(rng);
        let lambda = open_unit(rng);
        let scaled = s.rv.transform(lambda, 0.0).expect("positive scale");
        let lhs = ev(f, &scaled, &s)?;
        let rhs = lambda * ev(f, &s.rv, &s)? + (1.0 - lambda) * ev(f, &s.rv.constant_like(0.0), &s)?;
        Ok(le_outcome(lhs, rhs, || summary(&s, &format!(" lambda={lambda}"))))
    })
}

/// `f(l X) = l f(X)` for `l` in `[0, 4]`.
///
/// A passing run is cross-checked against star-shapedness when `f(0) = 0`;
/// a violation of that implication is reported as a failure.
pub fn check_positive_homogeneity(f: &dyn RiskFunctional, trials: usize, seed: u64) -> PropertyReport {
    let mut report = run(Axiom::PositivelyHomogeneous, f, trials, seed, |rng, f| {
        let s = random_sample(rng);
        let lambda = rng.gen_range(0.0..=4.0);
        let scaled = s.rv.transform(lambda, 0.0).expect("nonnegative scale");
        let lhs = ev(f, &scaled, &s)?;
        let rhs = lambda * ev(f, &s.rv, &s)?;
        Ok(eq_outcome(lhs, rhs, || summary(&s, &format!(" lambda={lambda}"))))
    });
    let normalized = RandomVariable::point_mass(0.0)
        .ok()
        .and_then(|z| f.eval(&z).ok())
        .is_some_and(|v| v.abs() <= PROPERTY_TOL);
    if report.pass && normalized {
        let star = check_star_shaped(f, trials, seed);
        if let Some(first) = star.failures.into_iter().next() {
            report.failures.push(Failure {
                input: format!("positively homogeneous but not star-shaped: {}", first.input),
                ..first
            });
            report.pass = false;
        }
    }
    report
}

/// `f(X + m) = f(X) + m` for `m` in `[-5, 5]`.
pub fn check_cash_additive(f: &dyn RiskFunctional, trials: usize, seed: u64) -> PropertyReport {
    run(Axiom::CashAdditive, f, trials, seed, |rng, f| {
        let s = random_sample(rng);
        let m = rng.gen_range(-5.0..=5.0);
        let lhs = ev(f, &s.rv.transform(1.0, m).expect("unit scale"), &s)?;
        let rhs = ev(f, &s.rv, &s)? + m;
        Ok(eq_outcome(lhs, rhs, || summary(&s, &format!(" m={m}"))))
    })
}

/// `f(X + m) <= f(X) + m` for `m` in `[0, 5]`.
pub fn check_cash_subadditive(f: &dyn RiskFunctional, trials: usize, seed: u64) -> PropertyReport {
    run(Axiom::CashSubadditive, f, trials, seed, |rng, f| {
        let s = random_sample(rng);
        let m = rng.gen_range(0.0..=5.0);
        let lhs = ev(f, &s.rv.transform(1.0, m).expect("unit scale"), &s)?;
        let rhs = ev(f, &s.rv, &s)? + m;
        Ok(le_outcome(lhs, rhs, || summary(&s, &format!(" m={m}"))))
    })
}

fn random_deltas(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..=5.0) })
        .collect()
}

/// `f(Y) <= f(X)` whenever `Y <= X` scenario by scenario.
pub fn check_monotone(f: &dyn RiskFunctional, trials: usize, seed: u64) -> PropertyReport {
    run(Axiom::Monotone, f, trials, seed, |rng, f| {
        let s = random_sample(rng);
        let deltas = random_deltas(rng, s.rv.len());
        let y = pointwise_reduce(&s.rv, &deltas).expect("deltas are nonnegative");
        if !fsd_compare(&s.rv.to_distribution(), &y.to_distribution()).holds {
            return Ok(Outcome::Abort("reduced variable is not first-order dominated".into()));
        }
        let lhs = ev(f, &y, &s)?;
        let rhs = ev(f, &s.rv, &s)?;
        Ok(le_outcome(lhs, rhs, || summary(&s, &format!(" deltas={deltas:?}"))))
    })
}

fn contraction_chain(rng: &mut ChaCha8Rng, rv: &RandomVariable) -> (RandomVariable, Vec<(usize, usize)>) {
    let steps = rng.gen_range(1..=4);
    let mut y = rv.clone();
    let mut pairs = Vec::with_capacity(steps);
    for _ in 0..steps {
        let i = rng.gen_range(0..y.len());
        let mut j = rng.gen_range(0..y.len() - 1);
        if j >= i {
            j += 1;
        }
        y = mps_contract(&y, i, j).expect("distinct indices in range");
        pairs.push((i, j));
    }
    (y, pairs)
}

/// `f(X) >= f(Y)` whenever `X` dominates `Y` in second order; pairs come
/// from contractions followed by pointwise reductions.
pub fn check_ssd_consistent(f: &dyn RiskFunctional, trials: usize, seed: u64) -> PropertyReport {
    run(Axiom::SsdConsistent, f, trials, seed, |rng, f| {
        let s = random_sample(rng);
        let (contracted, pairs) = contraction_chain(rng, &s.rv);
        let deltas = random_deltas(rng, s.rv.len());
        let y = pointwise_reduce(&contracted, &deltas).expect("deltas are nonnegative");
        if !ssd_compare(&s.rv.to_distribution(), &y.to_distribution()).holds {
            return Ok(Outcome::Abort("generated pair is not second-order ordered".into()));
        }
        let lhs = ev(f, &y, &s)?;
        let rhs = ev(f, &s.rv, &s)?;
        Ok(le_outcome(lhs, rhs, || {
            summary(&s, &format!(" contractions={pairs:?} deltas={deltas:?}"))
        }))
    })
}

/// `f(X) >= f(Y)` whenever `X` dominates `Y` in convex order; pairs come from
/// chains of contractions.
pub fn check_csd_consistent(f: &dyn RiskFunctional, trials: usize, seed: u64) -> PropertyReport {
    run(Axiom::CsdConsistent, f, trials, seed, |rng, f| {
        let s = random_sample(rng);
        let (y, pairs) = contraction_chain(rng, &s.rv);
        if !csd_compare(&s.rv.to_distribution(), &y.to_distribution()).holds {
            return Ok(Outcome::Abort("generated pair is not convex ordered".into()));
        }
        let lhs = ev(f, &y, &s)?;
        let rhs = ev(f, &s.rv, &s)?;
        Ok(le_outcome(lhs, rhs, || summary(&s, &format!(" contractions={pairs:?}"))))
    })
}

/// Same law on a different space: every scenario is split in two and the
/// pieces are shuffled.
pub fn relabel_with_same_law(rng: &mut ChaCha8Rng, sample: &Sample) -> RandomVariable {
    let mut pieces: Vec<(f64, u64)> = Vec::with_capacity(2 * sample.counts.len());
    for (&x, &k) in sample.rv.values().iter().zip(&sample.counts) {
        let a = rng.gen_range(1..2 * k);
        pieces.push((x, a));
        pieces.push((x, 2 * k - a));
    }
    pieces.shuffle(rng);
    let counts: Vec<u64> = pieces.iter().map(|p| p.1).collect();
    let space = Arc::new(ScenarioSpace::from_counts(&counts).expect("counts are positive"));
    RandomVariable::new(space, pieces.iter().map(|p| p.0).collect()).expect("values are finite")
}

/// `f(X) = f(Y)` for `Y` with the law of `X` on another scenario space.
pub fn check_law_invariant(f: &dyn RiskFunctional, trials: usize, seed: u64) -> PropertyReport {
    run(Axiom::LawInvariant, f, trials, seed, |rng, f| {
        let s = random_sample(rng);
        let y = relabel_with_same_law(rng, &s);
        let lhs = ev(f, &y, &s)?;
        let rhs = ev(f, &s.rv, &s)?;
        Ok(eq_outcome(lhs, rhs, || summary(&s, &format!(" relabeled={:?}", y.values()))))
    })
}

fn convex_trial(rng: &mut ChaCha8Rng, f: &dyn RiskFunctional) -> Result<Outcome, (String, MeasureError)> {
    let s = random_sample(rng);
    let other = random_values_like(rng, &s.rv);
    let lambda = open_unit(rng);
    let mix: Vec<f64> = s
        .rv
        .values()
        .iter()
        .zip(other.values())
        .map(|(x, y)| lambda * x + (1.0 - lambda) * y)
        .collect();
    let mix = s.rv.with_values(mix).expect("values are finite");
    let lhs = ev(f, &mix, &s)?;
    let rhs = lambda * ev(f, &s.rv, &s)? + (1.0 - lambda) * ev(f, &other, &s)?;
    Ok(le_outcome(lhs, rhs, || {
        summary(&s, &format!(" y={:?} lambda={lambda}", other.values()))
    }))
}

/// `f(l X + (1 - l) Y) <= l f(X) + (1 - l) f(Y)` on a shared space.
pub fn check_convex(f: &dyn RiskFunctional, trials: usize, seed: u64) -> PropertyReport {
    run(Axiom::Convex, f, trials, seed, convex_trial)
}

/// Positive homogeneity and convexity in each trial.
pub fn check_sublinear(f: &dyn RiskFunctional, trials: usize, seed: u64) -> PropertyReport {
    run(Axiom::Sublinear, f, trials, seed, |rng, f| {
        let s = random_sample(rng);
        let lambda = rng.gen_range(0.0..=4.0);
        let lhs = ev(f, &s.rv.transform(lambda, 0.0).expect("nonnegative scale"), &s)?;
        let rhs = lambda * ev(f, &s.rv, &s)?;
        if !tol::close(lhs, rhs, PROPERTY_TOL) {
            return Ok(Outcome::Fail {
                input: summary(&s, &format!(" lambda={lambda}")),
                lhs,
                rhs,
            });
        }
        convex_trial(rng, f)
    })
}

/// `f(0) = 0` on the generated space.
pub fn check_normalized(f: &dyn RiskFunctional, trials: usize, seed: u64) -> PropertyReport {
    run(Axiom::Normalized, f, trials, seed, |rng, f| {
        let s = random_sample(rng);
        let lhs = ev(f, &s.rv.constant_like(0.0), &s)?;
        Ok(eq_outcome(lhs, 0.0, || summary(&s, "")))
    })
}

/// Runs the check for `property`.
pub fn check(property: Axiom, f: &dyn RiskFunctional, trials: usize, seed: u64) -> PropertyReport {
    let checker = match property {
        Axiom::LawInvariant => check_law_invariant,
        Axiom::Monotone => check_monotone,
        Axiom::StarShaped => check_star_shaped,
        Axiom::PositivelyHomogeneous => check_positive_homogeneity,
        Axiom::Convex => check_convex,
        Axiom::Sublinear => check_sublinear,
        Axiom::CashAdditive => check_cash_additive,
        Axiom::CashSubadditive => check_cash_subadditive,
        Axiom::SsdConsistent => check_ssd_consistent,
        Axiom::CsdConsistent => check_csd_consistent,
        Axiom::Normalized => check_normalized,
    };
    checker(f, trials, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(s: &str) -> MeasureSpec {
        MeasureSpec::parse(s).unwrap()
    }

    #[test]
    fn generator_stays_in_range() {
        for trial in 0..300 {
            let mut rng = trial_rng(11, trial);
            let s = random_sample(&mut rng);
            assert!((2..=12).contains(&s.rv.len()));
            assert!(s.counts.iter().sum::<u64>() <= MAX_DENOMINATOR);
            assert!(s.rv.values().iter().all(|v| v.abs() <= PARETO_BOUND));
            let y = relabel_with_same_law(&mut rng, &s);
            assert!(crate::dominance::equal_in_law(&y.to_distribution(), &s.rv.to_distribution()));
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let f = spec("var:0.9");
        let a = check_ssd_consistent(&f, 100, 5);
        let b = check_ssd_consistent(&f, 100, 5);
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn star_shaped_examples() {
        assert!(check_star_shaped(&spec("var:0.95"), 200, 1).pass);
        assert!(check_star_shaped(&spec("min(es:0.5,entropic:1)"), 200, 1).pass);
        let root = FnFunctional::new("sqrt|mean|", |x: &RandomVariable| x.to_distribution().mean().abs().sqrt());
        let r = check_star_shaped(&root, 200, 1);
        assert!(!r.pass);
        assert!(r.failures[0].gap > 0.0);
    }

    #[test]
    fn homogeneity_examples() {
        assert!(check_positive_homogeneity(&spec("var:0.5"), 200, 2).pass);
        assert!(check_positive_homogeneity(&spec("const:0"), 200, 2).pass);
        assert!(!check_positive_homogeneity(&spec("entropic:1"), 200, 2).pass);
    }

    #[test]
    fn cash_examples() {
        assert!(check_cash_additive(&spec("es:0.9"), 200, 3).pass);
        assert!(!check_cash_additive(&spec("robvar:0.9:0.5:2"), 200, 3).pass);
        assert!(!check_cash_additive(&spec("max(var:0.9,const:3)"), 200, 3).pass);
        assert!(check_cash_subadditive(&spec("max(var:0.9,const:3)"), 200, 3).pass);
    }

    #[test]
    fn monotone_examples() {
        for s in ["var:0.3", "es:0.7", "mean", "esssup", "entropic:0.5", "min(es:0.5,var:0.9)"] {
            assert!(check_monotone(&spec(s), 200, 4).pass, "{s}");
        }
        let variance = FnFunctional::new("variance", |x: &RandomVariable| {
            let d = x.to_distribution();
            let m = d.mean();
            d.atoms().iter().map(|a| a.weight * (a.value - m).powi(2)).sum()
        });
        assert!(!check_monotone(&variance, 200, 4).pass);
    }

    #[test]
    fn dominance_examples() {
        assert!(check_ssd_consistent(&spec("es:0.9"), 300, 7).pass);
        assert!(check_ssd_consistent(&spec("min(es:0.5,es:0.9)"), 300, 7).pass);
        assert!(!check_ssd_consistent(&spec("var:0.9"), 500, 7).pass);
        assert!(check_csd_consistent(&spec("entropic:1"), 300, 7).pass);
        assert!(!check_csd_consistent(&spec("var:0.9"), 500, 7).pass);
    }

    #[test]
    fn law_invariance_examples() {
        for s in ["var:0.9", "es:0.25", "robvar:0.8:0.5:1.5", "min(mean,entropic:2)", "mix:(1@es:0.3,1@es:1)"] {
            assert!(check_law_invariant(&spec(s), 200, 8).pass, "{s}");
        }
        let first = FnFunctional::new("first scenario", |x: &RandomVariable| x.values()[0]);
        assert!(!check_law_invariant(&first, 200, 8).pass);
    }

    #[test]
    fn convexity_examples() {
        assert!(check_convex(&spec("entropic:1"), 200, 9).pass);
        assert!(check_sublinear(&spec("es:0.8"), 200, 9).pass);
        assert!(!check_convex(&spec("var:0.8"), 300, 9).pass);
        assert!(!check_sublinear(&spec("entropic:1"), 200, 9).pass);
        assert!(check_normalized(&spec("robvar:0.9:0.5:2"), 20, 9).pass);
        assert!(!check_normalized(&spec("const:1"), 20, 9).pass);
    }

    #[test]
    fn profiles_hold_empirically() {
        for s in [
            "var:0.9",
            "es:0.5",
            "mean",
            "esssup",
            "entropic:1",
            "mix:(0.5@es:0.5,0.5@es:0.99)",
            "const:2",
            "robvar:0.9:0.5:2",
            "min(es:0.5,entropic:1)",
            "max(var:0.9,const:1)",
        ] {
            let f = spec(s);
            for a in crate::measures::measure_axiom_profile(&f) {
                let r = check(a, &f, 150, 21);
                assert!(r.pass, "{s} {a}: {:?}", r.failures.first());
                assert!(r.aborted.is_empty());
            }
        }
    }
}
