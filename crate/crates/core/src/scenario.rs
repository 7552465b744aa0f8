//! Finite scenario spaces, random variables and their laws.
//!
//! Every law-invariant computation in the crate goes through
//! [`EmpiricalDistribution`], the canonical sorted atom list of a random
//! variable. The distribution carries two derived curves:
//!
//! * the quantile curve `beta -> VaR_beta`, piecewise constant and
//!   left-continuous, with `VaR_beta = x_j` on `(c_{j-1}, c_j]` where `c_j`
//!   are cumulative weights; `VaR_0` is taken to be the smallest atom;
//! * the integrated quantile curve `G(beta) = int_beta^1 VaR_m dm`, piecewise
//!   linear with slope `-x_j` on segment `j`, so `G(0)` is the mean,
//!   `G(1) = 0`, and `ES_beta = G(beta) / (1 - beta)` for `beta < 1`.
//!
//! Both curves are exact on their breakpoints, which is what lets the
//! dominance and envelope code decide everything on finite grids.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::tol;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("scenario space has no scenarios")]
    Empty,
    #[error("probability {value} of scenario {index} is not strictly positive")]
    NonPositiveProbability { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, expected 1")]
    BadTotal { sum: f64 },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("value {value} at position {index} is not finite")]
    NonFinite { index: usize, value: f64 },
    #[error("weight {value} of atom {index} is not strictly positive")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("level {0} is outside [0, 1]")]
    LevelOutOfRange(f64),
    #[error("scale {0} must be nonnegative")]
    NegativeScale(f64),
    #[error("scenario count must be positive")]
    ZeroCount,
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

fn check_level(beta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&beta) {
        Ok(())
    } else {
        Err(ScenarioError::LevelOutOfRange(beta))
    }
}

/// Probabilities of a finite outcome space.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpace {
    probabilities: Vec<f64>,
}

impl ScenarioSpace {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(ScenarioError::Empty);
        }
        for (index, &value) in probabilities.iter().enumerate() {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ScenarioError::NonPositiveProbability { index, value });
            }
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > tol::WEIGHT_SUM {
            return Err(ScenarioError::BadTotal { sum });
        }
        Ok(Self { probabilities })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(ScenarioError::Empty);
        }
        Self::new(vec![1.0 / n as f64; n])
    }

    /// Probabilities `k_i / sum(k)` built from positive integer counts.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        if counts.is_empty() {
            return Err(ScenarioError::Empty);
        }
        if counts.iter().any(|&k| k == 0) {
            return Err(ScenarioError::ZeroCount);
        }
        let total: u64 = counts.iter().sum();
        Self::new(counts.iter().map(|&k| k as f64 / total as f64).collect())
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

/// Real outcomes indexed by the scenarios of a shared space.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomVariable {
    space: Arc<ScenarioSpace>,
    values: Vec<f64>,
}

impl RandomVariable {
    pub fn new(space: Arc<ScenarioSpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(ScenarioError::LengthMismatch {
                expected: space.len(),
                got: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(ScenarioError::NonFinite { index, value });
        }
        Ok(Self { space, values })
    }

    /// Equally likely scenarios.
    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let space = ScenarioSpace::uniform(values.len())?;
        Self::new(Arc::new(space), values)
    }

    pub fn weighted(values: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        Self::new(Arc::new(ScenarioSpace::new(probabilities)?), values)
    }

    /// A constant on a one-scenario space.
    pub fn point_mass(value: f64) -> Result<Self> {
        Self::uniform(vec![value])
    }

    /// Same space, new outcomes.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(Arc::clone(&self.space), values)
    }

    /// The constant `value` on this variable's space.
    pub fn constant_like(&self, value: f64) -> Self {
        Self {
            space: Arc::clone(&self.space),
            values: vec![value; self.values.len()],
        }
    }

    pub fn space(&self) -> &Arc<ScenarioSpace> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probabilities(&self) -> &[f64] {
        self.space.probabilities()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The law of this variable.
    pub fn to_distribution(&self) -> EmpiricalDistribution {
        let pairs = self
            .values
            .iter()
            .copied()
            .zip(self.space.probabilities().iter().copied())
            .collect();
        EmpiricalDistribution::canonical(pairs)
    }

    /// Pointwise `scale * x + shift` for `scale >= 0`.
    pub fn transform(&self, scale: f64, shift: f64) -> Result<Self> {
        if !(scale >= 0.0) {
            return Err(ScenarioError::NegativeScale(scale));
        }
        let values = self.values.iter().map(|&x| scale * x + shift).collect();
        Self::new(Arc::clone(&self.space), values)
    }
}

/// One point of a discrete law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub value: f64,
    pub weight: f64,
}

/// Piecewise-constant left-continuous quantile function.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileCurve {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
}

impl QuantileCurve {
    /// Cumulative weights `0 = c_0 < ... < c_k = 1`.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Atom values `x_1 < ... < x_k`; `levels[j - 1]` holds on `(c_{j-1}, c_j]`.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Quantile at `beta`, clamped to `[0, 1]`.
    ///
    /// A breakpoint within [`tol::BREAKPOINT`] below `beta` still counts as
    /// reaching `beta`, so levels such as `2/3` land on the intended atom even
    /// when the cumulative sum rounds a hair low.
    pub fn value_at(&self, beta: f64) -> f64 {
        if beta <= 0.0 {
            return self.levels[0];
        }
        let target = beta - tol::BREAKPOINT;
        let j = self.breakpoints[1..].partition_point(|&c| c < target);
        self.levels[j.min(self.levels.len() - 1)]
    }

    /// Quantile at an interior point of a segment; no breakpoint slack.
    pub(crate) fn value_inside(&self, beta: f64) -> f64 {
        let j = self.breakpoints[1..].partition_point(|&c| c < beta);
        self.levels[j.min(self.levels.len() - 1)]
    }
}

/// `G(beta) = int_beta^1 VaR_m dm` stored at the quantile breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratedQuantileCurve {
    breakpoints: Vec<f64>,
    nodes: Vec<f64>,
    levels: Vec<f64>,
}

impl IntegratedQuantileCurve {
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// `G(c_j)` for every breakpoint.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Slope of segment `j` (1-based), i.e. `-x_j`.
    pub fn slope(&self, j: usize) -> f64 {
        -self.levels[j - 1]
    }

    /// Linear interpolation between nodes; `beta` clamped to `[0, 1]`.
    pub fn value_at(&self, beta: f64) -> f64 {
        if beta <= 0.0 {
            return self.nodes[0];
        }
        if beta >= 1.0 {
            return 0.0;
        }
        let j = self.breakpoints.partition_point(|&c| c < beta);
        if j == 0 {
            return self.nodes[0];
        }
        let j = j.min(self.levels.len());
        self.nodes[j] + (self.breakpoints[j] - beta) * self.levels[j - 1]
    }
}

/// Canonical law: strictly increasing values with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    atoms: Vec<Atom>,
    quantiles: QuantileCurve,
    integrated: IntegratedQuantileCurve,
}

impl EmpiricalDistribution {
    /// Validates and canonicalizes `(value, weight)` pairs.
    pub fn from_atoms<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let pairs: Vec<(f64, f64)> = pairs.into_iter().collect();
        if pairs.is_empty() {
            return Err(ScenarioError::Empty);
        }
        for (index, &(value, weight)) in pairs.iter().enumerate() {
            if !value.is_finite() {
                return Err(ScenarioError::NonFinite { index, value });
            }
            if !(weight > 0.0) || !weight.is_finite() {
                return Err(ScenarioError::NonPositiveWeight { index, value: weight });
            }
        }
        let sum: f64 = pairs.iter().map(|p| p.1).sum();
        if (sum - 1.0).abs() > tol::WEIGHT_SUM {
            return Err(ScenarioError::BadTotal { sum });
        }
        Ok(Self::canonical(pairs))
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        Self::from_atoms([(value, 1.0)])
    }

    /// Uniform weights over `values` (duplicates merge).
    pub fn uniform(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(ScenarioError::Empty);
        }
        let w = 1.0 / values.len() as f64;
        Self::from_atoms(values.iter().map(|&v| (v, w)))
    }

    // Inputs are already validated.
    fn canonical(mut pairs: Vec<(f64, f64)>) -> Self {
        // Sorting by weight within ties makes the merged sums independent of
        // the scenario order.
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut atoms: Vec<Atom> = Vec::with_capacity(pairs.len());
        let mut group_start = f64::NAN;
        for (value, weight) in pairs {
            match atoms.last_mut() {
                Some(last) if same_atom(group_start, value) => last.weight += weight,
                _ => {
                    group_start = value;
                    atoms.push(Atom { value, weight });
                }
            }
        }
        let k = atoms.len();
        let mut breakpoints = Vec::with_capacity(k + 1);
        breakpoints.push(0.0);
        let mut acc = 0.0;
        for atom in &atoms {
            acc += atom.weight;
            breakpoints.push(acc);
        }
        breakpoints[k] = 1.0;
        let levels: Vec<f64> = atoms.iter().map(|a| a.value).collect();
        let mut nodes = vec![0.0; k + 1];
        for j in (1..=k).rev() {
            nodes[j - 1] = nodes[j] + (breakpoints[j] - breakpoints[j - 1]) * levels[j - 1];
        }
        Self {
            atoms,
            quantiles: QuantileCurve {
                breakpoints: breakpoints.clone(),
                levels: levels.clone(),
            },
            integrated: IntegratedQuantileCurve {
                breakpoints,
                nodes,
                levels,
            },
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn quantile_curve(&self) -> &QuantileCurve {
        &self.quantiles
    }

    pub fn integrated_quantile(&self) -> &IntegratedQuantileCurve {
        &self.integrated
    }

    /// `G(0)`, the expectation.
    pub fn mean(&self) -> f64 {
        self.integrated.nodes[0]
    }

    /// Essential infimum.
    pub fn min(&self) -> f64 {
        self.atoms[0].value
    }

    /// Essential supremum.
    pub fn max(&self) -> f64 {
        self.atoms[self.atoms.len() - 1].value
    }

    /// The value of a single-atom law.
    pub fn point_mass_value(&self) -> Option<f64> {
        (self.atoms.len() == 1).then(|| self.atoms[0].value)
    }

    /// Left quantile `inf{x : F(x) >= beta}`; `VaR_0` is the smallest atom.
    pub fn var_at(&self, beta: f64) -> Result<f64> {
        check_level(beta)?;
        Ok(self.quantiles.value_at(beta))
    }

    /// Expected shortfall; `ES_1` is the largest atom.
    pub fn es_at(&self, beta: f64) -> Result<f64> {
        check_level(beta)?;
        Ok(self.es_unchecked(beta))
    }

    pub(crate) fn es_unchecked(&self, beta: f64) -> f64 {
        if beta >= 1.0 {
            self.max()
        } else {
            self.integrated.value_at(beta) / (1.0 - beta)
        }
    }

    /// `int_0^1 VaR_b(self) VaR_b(other) db`, merged over both breakpoint sets.
    pub fn quantile_inner(&self, other: &EmpiricalDistribution) -> f64 {
        let (ca, xa) = (&self.quantiles.breakpoints, &self.quantiles.levels);
        let (cb, xb) = (&other.quantiles.breakpoints, &other.quantiles.levels);
        let (mut i, mut j) = (1, 1);
        let mut prev = 0.0;
        let mut acc = 0.0;
        while i < ca.len() && j < cb.len() {
            let next = ca[i].min(cb[j]);
            acc += (next - prev) * xa[i - 1] * xb[j - 1];
            prev = next;
            if ca[i] <= next {
                i += 1;
            }
            if cb[j] <= next {
                j += 1;
            }
        }
        acc
    }

    /// Law of `scale * X + shift` for `scale >= 0`.
    pub fn affine(&self, scale: f64, shift: f64) -> Result<Self> {
        if !(scale >= 0.0) {
            return Err(ScenarioError::NegativeScale(scale));
        }
        let pairs = self
            .atoms
            .iter()
            .map(|a| (scale * a.value + shift, a.weight))
            .collect();
        Ok(Self::canonical(pairs))
    }

    /// Law of `w(X)` for a nondecreasing map `w`.
    pub(crate) fn map_monotone(&self, w: impl Fn(f64) -> f64) -> Self {
        Self::canonical(self.atoms.iter().map(|a| (w(a.value), a.weight)).collect())
    }
}

fn same_atom(group_start: f64, value: f64) -> bool {
    let scale = 1f64.max(group_start.abs()).max(value.abs());
    (value - group_start).abs() <= tol::ATOM_MERGE * scale
}

impl fmt::Display for EmpiricalDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for atom in &self.atoms {
            writeln!(f, "{},{}", atom.value, atom.weight)?;
        }
        Ok(())
    }
}

/// Sorted union of the distributions' breakpoints, `0` and `1` included.
///
/// Breakpoints closer than [`tol::BREAKPOINT`] collapse into one. Every
/// quantile curve involved is constant on each open segment of the result
/// and every integrated curve is linear there.
pub fn union_breakpoints(dists: &[&EmpiricalDistribution]) -> Vec<f64> {
    let mut all: Vec<f64> = dists
        .iter()
        .flat_map(|d| d.quantiles.breakpoints.iter().copied())
        .collect();
    all.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for c in all {
        match out.last() {
            Some(&last) if c - last <= tol::BREAKPOINT => {}
            _ => out.push(c),
        }
    }
    let n = out.len();
    out[0] = 0.0;
    if n == 1 {
        out.push(1.0);
    } else {
        out[n - 1] = 1.0;
    }
    out
}

/// `(right endpoint, midpoint)` of each segment of a breakpoint grid.
pub(crate) fn segments(grid: &[f64]) -> impl Iterator<Item = (f64, f64)> + '_ {
    grid.windows(2).map(|w| (w[1], 0.5 * (w[0] + w[1])))
}
