//! First-order, second-order and convex-order dominance on finite laws.
//!
//! All tests compare curves on the union of both breakpoint sets. Quantile
//! curves are constant on every open union segment, so one interior probe per
//! segment decides first-order dominance for all levels. Integrated quantile
//! curves are linear on every segment, so their values at the union
//! breakpoints decide second-order dominance.

use serde::Serialize;
use thiserror::Error;

use crate::scenario::{segments, union_breakpoints, EmpiricalDistribution, RandomVariable};
use crate::tol;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DominanceError {
    #[error("scenario index {index} out of range for {len} scenarios")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("contraction needs two distinct scenarios, got {0} twice")]
    SameIndex(usize),
    #[error("expected {expected} deltas, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("delta {value} at scenario {index} is negative or not finite")]
    NegativeDelta { index: usize, value: f64 },
}

/// A level where the claimed dominance fails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub beta: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominanceVerdict {
    pub holds: bool,
    pub witness: Option<Witness>,
}

impl DominanceVerdict {
    fn holds() -> Self {
        Self {
            holds: true,
            witness: None,
        }
    }

    fn fails(beta: f64, lhs: f64, rhs: f64) -> Self {
        Self {
            holds: false,
            witness: Some(Witness { beta, lhs, rhs }),
        }
    }
}

/// Which dominance order a comparison uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    First,
    Second,
    Convex,
}

impl Order {
    pub fn compare(self, x: &EmpiricalDistribution, y: &EmpiricalDistribution) -> DominanceVerdict {
        match self {
            Order::First => fsd_compare(x, y),
            Order::Second => ssd_compare(x, y),
            Order::Convex => csd_compare(x, y),
        }
    }
}

// Three-way outcome of one curve comparison; marginal counts as holding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cmp {
    Holds,
    Marginal,
    Fails,
}

fn cmp_ge(lhs: f64, rhs: f64) -> Cmp {
    if lhs >= rhs {
        Cmp::Holds
    } else if lhs >= rhs - tol::CURVE {
        Cmp::Marginal
    } else {
        Cmp::Fails
    }
}

/// `x` first-order dominates `y`: `VaR_b(x) >= VaR_b(y)` for every level.
///
/// The witness `beta` is the right end of the first failing union segment,
/// where both quantiles take their segment values.
pub fn fsd_compare(x: &EmpiricalDistribution, y: &EmpiricalDistribution) -> DominanceVerdict {
    let grid = union_breakpoints(&[x, y]);
    for (beta, mid) in segments(&grid) {
        let lhs = x.quantile_curve().value_inside(mid);
        let rhs = y.quantile_curve().value_inside(mid);
        if cmp_ge(lhs, rhs) == Cmp::Fails {
            return DominanceVerdict::fails(beta, lhs, rhs);
        }
    }
    DominanceVerdict::holds()
}

/// `x` second-order dominates `y`: `ES_b(x) >= ES_b(y)` for every level.
///
/// Decided on `G(b) = (1 - b) ES_b` at the union breakpoints below one, plus
/// the essential suprema for `b = 1`. The witness reports expected
/// shortfalls.
pub fn ssd_compare(x: &EmpiricalDistribution, y: &EmpiricalDistribution) -> DominanceVerdict {
    let grid = union_breakpoints(&[x, y]);
    let (gx, gy) = (x.integrated_quantile(), y.integrated_quantile());
    for &beta in &grid[..grid.len() - 1] {
        let (lhs, rhs) = (gx.value_at(beta), gy.value_at(beta));
        if cmp_ge(lhs, rhs) == Cmp::Fails {
            let scale = 1.0 - beta;
            return DominanceVerdict::fails(beta, lhs / scale, rhs / scale);
        }
    }
    if cmp_ge(x.max(), y.max()) == Cmp::Fails {
        return DominanceVerdict::fails(1.0, x.max(), y.max());
    }
    DominanceVerdict::holds()
}

/// Convex order: second-order dominance with equal means.
///
/// A mean mismatch is reported as a witness at `beta = 0`.
pub fn csd_compare(x: &EmpiricalDistribution, y: &EmpiricalDistribution) -> DominanceVerdict {
    let ssd = ssd_compare(x, y);
    if !ssd.holds {
        return ssd;
    }
    if (x.mean() - y.mean()).abs() > tol::CURVE {
        return DominanceVerdict::fails(0.0, x.mean(), y.mean());
    }
    ssd
}

/// Same canonical atoms: values within [`tol::CURVE`], weights within
/// [`tol::WEIGHT_SUM`].
pub fn equal_in_law(x: &EmpiricalDistribution, y: &EmpiricalDistribution) -> bool {
    x.len() == y.len()
        && x.atoms().iter().zip(y.atoms()).all(|(a, b)| {
            tol::close(a.value, b.value, tol::CURVE) && (a.weight - b.weight).abs() <= tol::WEIGHT_SUM
        })
}

/// The `alpha` in `[0, alpha_max]` with `x` equal in law to `alpha * z`.
///
/// The candidate comes from the ratio of means, or when `z` has zero mean
/// from the ratio of integrated quantiles at the first breakpoint of `z`
/// where its curve is nonzero; it is then verified by [`equal_in_law`].
/// Two point masses at zero match with `alpha = 0`.
pub fn law_match_scale(x: &EmpiricalDistribution, z: &EmpiricalDistribution, alpha_max: f64) -> Option<f64> {
    let x_zero = x.point_mass_value().is_some_and(|v| v.abs() <= tol::CURVE);
    let z_zero = z.point_mass_value().is_some_and(|v| v.abs() <= tol::CURVE);
    if z_zero {
        return x_zero.then_some(0.0);
    }
    if x_zero {
        return Some(0.0);
    }
    let candidate = if z.mean().abs() > tol::CURVE {
        x.mean() / z.mean()
    } else {
        let (gx, gz) = (x.integrated_quantile(), z.integrated_quantile());
        let beta = gz
            .breakpoints()
            .iter()
            .zip(gz.nodes())
            .find(|(_, g)| g.abs() > tol::CURVE)
            .map(|(&b, _)| b)?;
        gx.value_at(beta) / gz.value_at(beta)
    };
    if !candidate.is_finite() || candidate < -tol::CURVE || candidate > alpha_max + tol::CURVE {
        return None;
    }
    let alpha = candidate.clamp(0.0, alpha_max);
    let scaled = z.affine(alpha, 0.0).ok()?;
    equal_in_law(x, &scaled).then_some(alpha)
}

/// The `(alpha, c)` with `alpha` in `[0, 1]` and `x` equal in law to
/// `alpha * z + c`.
///
/// A constant `x` always matches as `(0, x)`. Otherwise `z` must be
/// nonconstant, and the pair is solved from the two levels `0` and `1` where
/// the expected shortfall of `z` is its mean and its maximum.
pub fn law_match_affine(x: &EmpiricalDistribution, z: &EmpiricalDistribution) -> Option<(f64, f64)> {
    if let Some(v) = x.point_mass_value() {
        return Some((0.0, v));
    }
    let spread_z = z.max() - z.mean();
    if z.point_mass_value().is_some() || spread_z <= 0.0 {
        return None;
    }
    let alpha = (x.max() - x.mean()) / spread_z;
    if !alpha.is_finite() || alpha < -tol::CURVE || alpha > 1.0 + tol::CURVE {
        return None;
    }
    let alpha = alpha.clamp(0.0, 1.0);
    let c = x.mean() - alpha * z.mean();
    let image = z.affine(alpha, c).ok()?;
    equal_in_law(x, &image).then_some((alpha, c))
}

/// Replaces the outcomes of scenarios `i` and `j` by their
/// probability-weighted average; the result is dominated in convex order.
pub fn mps_contract(rv: &RandomVariable, i: usize, j: usize) -> Result<RandomVariable, DominanceError> {
    let len = rv.len();
    for index in [i, j] {
        if index >= len {
            return Err(DominanceError::IndexOutOfRange { index, len });
        }
    }
    if i == j {
        return Err(DominanceError::SameIndex(i));
    }
    let (p, x) = (rv.probabilities(), rv.values());
    let avg = (p[i] * x[i] + p[j] * x[j]) / (p[i] + p[j]);
    let mut values = x.to_vec();
    values[i] = avg;
    values[j] = avg;
    Ok(rv.with_values(values).expect("average of finite values is finite"))
}

/// Pointwise `x_i - delta_i` with `delta_i >= 0`; the result is dominated in
/// first order.
pub fn pointwise_reduce(rv: &RandomVariable, deltas: &[f64]) -> Result<RandomVariable, DominanceError> {
    if deltas.len() != rv.len() {
        return Err(DominanceError::LengthMismatch {
            expected: rv.len(),
            got: deltas.len(),
        });
    }
    if let Some((index, &value)) = deltas.iter().enumerate().find(|(_, &d)| !(d >= 0.0) || !d.is_finite()) {
        return Err(DominanceError::NegativeDelta { index, value });
    }
    let values = rv.values().iter().zip(deltas).map(|(x, d)| x - d).collect();
    Ok(rv.with_values(values).expect("difference of finite values is finite"))
}
