//! Dominance envelopes built from a reference variable and the
//! representation checks that assemble them into minimum formulas.
//!
//! For a reference `Z` with known value `rho(Z)`, the scale envelope of `X` is
//! the cheapest value `alpha rho(Z) + (1 - alpha) rho(0)` over the scalings
//! `alpha Z` that dominate `X` in second order. Each feasible scaling is a
//! set of linear constraints on `alpha`, one per union breakpoint of the two
//! integrated quantile curves, so the feasible set is an interval.

use serde::Serialize;
use thiserror::Error;

use crate::dominance::{fsd_compare, law_match_scale};
use crate::measures::EvalResult;
use crate::scenario::{segments, union_breakpoints, EmpiricalDistribution, RandomVariable, ScenarioError};
use crate::tol;

/// Absolute tolerance of the representation checks.
pub const REPRESENTATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvelopeError {
    #[error("family has no candidates")]
    EmptyFamily,
    #[error("candidate {index} has non-finite value {value}")]
    NonFiniteCandidate { index: usize, value: f64 },
    #[error("homogeneous envelope is unbounded below: negative reference value and no upper bound on alpha")]
    UnboundedBelow,
    #[error("affine envelope needs rho(0) = 0, got {0}")]
    NotNormalized(f64),
    #[error("level {0} must lie in [0, 1)")]
    Level(f64),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

pub type Result<T> = std::result::Result<T, EnvelopeError>;

/// Range of admissible scalings: `[0, 1]` for star-shaped functionals,
/// `[0, inf)` for positively homogeneous ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Star,
    Homog,
}

impl Regime {
    pub fn alpha_max(self) -> f64 {
        match self {
            Regime::Star => 1.0,
            Regime::Homog => f64::INFINITY,
        }
    }

    // Value of the scaled reference; the homogeneous regime has rho(0) = 0.
    fn value(self, alpha: f64, rho_z: f64, rho_zero: f64) -> f64 {
        match self {
            Regime::Star => alpha * rho_z + (1.0 - alpha) * rho_zero,
            Regime::Homog => alpha * rho_z,
        }
    }
}

/// Which envelope a min-family check assembles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvelopeMode {
    Ssd,
    Csd,
    Affine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub z: RandomVariable,
    pub rho_z: f64,
}

/// Finitely many elements of the domain with their values, plus `rho(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateFamily {
    members: Vec<Candidate>,
    rho_zero: f64,
}

impl CandidateFamily {
    pub fn new(members: Vec<Candidate>, rho_zero: f64) -> Result<Self> {
        if members.is_empty() {
            return Err(EnvelopeError::EmptyFamily);
        }
        if let Some((index, c)) = members.iter().enumerate().find(|(_, c)| !c.rho_z.is_finite()) {
            return Err(EnvelopeError::NonFiniteCandidate { index, value: c.rho_z });
        }
        Ok(Self { members, rho_zero })
    }

    pub fn members(&self) -> &[Candidate] {
        &self.members
    }

    pub fn rho_zero(&self) -> f64 {
        self.rho_zero
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaInterval {
    Feasible { lo: f64, hi: f64 },
    Infeasible,
}

impl AlphaInterval {
    pub fn is_feasible(&self) -> bool {
        matches!(self, AlphaInterval::Feasible { .. })
    }

    pub fn contains(&self, alpha: f64, slack: f64) -> bool {
        match *self {
            AlphaInterval::Feasible { lo, hi } => alpha >= lo - slack && alpha <= hi + slack,
            AlphaInterval::Infeasible => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeCertificate {
    pub value: EvalResult,
    pub alpha: Option<f64>,
    pub c: Option<f64>,
    pub chosen_index: Option<usize>,
    pub active_breakpoints: Vec<f64>,
}

impl EnvelopeCertificate {
    fn infeasible() -> Self {
        Self {
            value: EvalResult::PlusInfinity,
            alpha: None,
            c: None,
            chosen_index: None,
            active_breakpoints: Vec::new(),
        }
    }
}

/// `alpha rho(Z) + (1 - alpha) rho(0)` when `X` equals `alpha Z` in law for
/// an admissible `alpha`, `+inf` otherwise.
pub fn rho_z_eval(
    x: &EmpiricalDistribution,
    z: &EmpiricalDistribution,
    rho_z: f64,
    rho_zero: f64,
    regime: Regime,
) -> EvalResult {
    match law_match_scale(x, z, regime.alpha_max()) {
        Some(alpha) => EvalResult::Finite(regime.value(alpha, rho_z, rho_zero)),
        None => EvalResult::PlusInfinity,
    }
}

// One constraint `a * alpha >= b` per level; `beta = 1` compares maxima.
fn ssd_constraints(x: &EmpiricalDistribution, z: &EmpiricalDistribution) -> Vec<(f64, f64, f64)> {
    let grid = union_breakpoints(&[x, z]);
    let (gx, gz) = (x.integrated_quantile(), z.integrated_quantile());
    let mut out: Vec<(f64, f64, f64)> = grid[..grid.len() - 1]
        .iter()
        .map(|&b| (b, gz.value_at(b), gx.value_at(b)))
        .collect();
    out.push((1.0, z.max(), x.max()));
    out
}

/// The scalings `alpha` in `[0, alpha_max]` with `alpha Z` dominating `X` in
/// second order.
///
/// A coefficient `|G_Z(beta)| <= 1e-9` is treated as zero, which then
/// demands `G_X(beta) <= 1e-9`.
pub fn ssd_scale_interval(x: &EmpiricalDistribution, z: &EmpiricalDistribution, alpha_max: f64) -> AlphaInterval {
    let (mut lo, mut hi) = (0.0f64, alpha_max);
    for (_, a, b) in ssd_constraints(x, z) {
        if a > tol::CURVE {
            lo = lo.max(b / a);
        } else if a < -tol::CURVE {
            hi = hi.min(b / a);
        } else if b > tol::CURVE {
            return AlphaInterval::Infeasible;
        }
    }
    if lo <= hi {
        AlphaInterval::Feasible { lo, hi }
    } else if lo - hi <= tol::CURVE * (1.0 + hi.abs()) {
        // rounding of equal ratios, e.g. X an exact scaling of Z
        AlphaInterval::Feasible { lo: hi, hi }
    } else {
        AlphaInterval::Infeasible
    }
}

fn active_ssd(x: &EmpiricalDistribution, z: &EmpiricalDistribution, alpha: f64) -> Vec<f64> {
    ssd_constraints(x, z)
        .into_iter()
        .filter(|&(_, a, b)| (alpha * a - b).abs() <= tol::CURVE * (1.0 + b.abs()))
        .map(|(beta, _, _)| beta)
        .collect()
}

fn scale_certificate(
    x: &EmpiricalDistribution,
    z: &EmpiricalDistribution,
    alpha: f64,
    rho_z: f64,
    rho_zero: f64,
    regime: Regime,
) -> EnvelopeCertificate {
    EnvelopeCertificate {
        value: EvalResult::Finite(regime.value(alpha, rho_z, rho_zero)),
        alpha: Some(alpha),
        c: None,
        chosen_index: None,
        active_breakpoints: active_ssd(x, z, alpha),
    }
}

/// Second-order envelope: the cheapest admissible scaling of `Z` that
/// dominates `X`, or `+inf` when none does.
pub fn tilde_rho_z(
    x: &EmpiricalDistribution,
    z: &EmpiricalDistribution,
    rho_z: f64,
    rho_zero: f64,
    regime: Regime,
) -> Result<EnvelopeCertificate> {
    let AlphaInterval::Feasible { lo, hi } = ssd_scale_interval(x, z, regime.alpha_max()) else {
        return Ok(EnvelopeCertificate::infeasible());
    };
    let slope = match regime {
        Regime::Star => rho_z - rho_zero,
        Regime::Homog => rho_z,
    };
    let alpha = if slope >= 0.0 { lo } else { hi };
    if !alpha.is_finite() {
        return Err(EnvelopeError::UnboundedBelow);
    }
    Ok(scale_certificate(x, z, alpha, rho_z, rho_zero, regime))
}

/// Convex-order envelope: as [`tilde_rho_z`] with the extra constraint that
/// `alpha Z` and `X` have equal means, which pins `alpha` unless `Z` has mean
/// zero.
pub fn csd_scale_envelope(
    x: &EmpiricalDistribution,
    z: &EmpiricalDistribution,
    f_z: f64,
    f_zero: f64,
    regime: Regime,
) -> Result<EnvelopeCertificate> {
    if z.mean().abs() <= tol::CURVE {
        if x.mean().abs() > tol::CURVE {
            return Ok(EnvelopeCertificate::infeasible());
        }
        return tilde_rho_z(x, z, f_z, f_zero, regime);
    }
    let alpha = x.mean() / z.mean();
    let interval = ssd_scale_interval(x, z, regime.alpha_max());
    if !(alpha >= 0.0) || !interval.contains(alpha, tol::CURVE * (1.0 + alpha.abs())) {
        return Ok(EnvelopeCertificate::infeasible());
    }
    Ok(scale_certificate(x, z, alpha, f_z, f_zero, regime))
}

// `(beta, ES_beta(X), ES_beta(Z))` on the union grid, both ends included.
fn es_table(x: &EmpiricalDistribution, z: &EmpiricalDistribution) -> Vec<(f64, f64, f64)> {
    union_breakpoints(&[x, z])
        .into_iter()
        .map(|b| (b, x.es_unchecked(b), z.es_unchecked(b)))
        .collect()
}

// Smallest `c` with `alpha ES(Z) + c >= ES(X)` on the whole table.
fn min_shift(table: &[(f64, f64, f64)], alpha: f64) -> f64 {
    table
        .iter()
        .map(|&(_, ex, ez)| ex - alpha * ez)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Affine envelope: minimizes `alpha rho(Z) + c` over `alpha` in `[0, 1]`
/// and `c` real subject to `alpha Z + c` dominating `X` in second order.
///
/// For fixed `alpha` the best `c` is the largest gap `ES(X) - alpha ES(Z)`,
/// a convex piecewise linear function of `alpha`. Its kinks are pairwise
/// intersections of the constraint lines, so the optimum sits at one of
/// those or at an end of `[0, 1]`.
pub fn affine_envelope_lp(x: &EmpiricalDistribution, z: &EmpiricalDistribution, rho_z: f64) -> EnvelopeCertificate {
    let table = es_table(x, z);
    let mut candidates = vec![0.0, 1.0];
    for (i, &(_, xi, zi)) in table.iter().enumerate() {
        for &(_, xj, zj) in &table[i + 1..] {
            let dz = zi - zj;
            if dz.abs() > tol::BREAKPOINT {
                let alpha = (xi - xj) / dz;
                if alpha > 0.0 && alpha < 1.0 {
                    candidates.push(alpha);
                }
            }
        }
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for alpha in candidates {
        let c = min_shift(&table, alpha);
        let value = alpha * rho_z + c;
        if value < best.0 {
            best = (value, alpha, c);
        }
    }
    let (value, alpha, c) = best;
    let active_breakpoints = table
        .iter()
        .filter(|&&(_, ex, ez)| alpha * ez + c - ex <= tol::CURVE * (1.0 + ex.abs()))
        .map(|&(b, _, _)| b)
        .collect();
    EnvelopeCertificate {
        value: EvalResult::Finite(value),
        alpha: Some(alpha),
        c: Some(c),
        chosen_index: None,
        active_breakpoints,
    }
}

/// `(ES_beta(X), int VaR(X) VaR(Y_beta))` where `Y_beta` puts mass `beta`
/// on zero and `1 - beta` on `1 / (1 - beta)`.
pub fn kusuoka_es_identity(x: &EmpiricalDistribution, beta: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&beta) {
        return Err(EnvelopeError::Level(beta));
    }
    let y = if beta == 0.0 {
        EmpiricalDistribution::point_mass(1.0)?
    } else {
        EmpiricalDistribution::from_atoms([(0.0, beta), (1.0 / (1.0 - beta), 1.0 - beta)])?
    };
    Ok((x.es_unchecked(beta), x.quantile_inner(&y)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberReport {
    pub index: usize,
    pub in_gamma: bool,
    pub alpha: Option<f64>,
    pub c: Option<f64>,
    pub value: EvalResult,
    pub active_breakpoints: Vec<f64>,
}

impl MemberReport {
    fn excluded(index: usize) -> Self {
        Self {
            index,
            in_gamma: false,
            alpha: None,
            c: None,
            value: EvalResult::PlusInfinity,
            active_breakpoints: Vec::new(),
        }
    }
}

/// Outcome of a minimum-representation check against a target value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepresentationReport {
    pub target: EvalResult,
    pub members: Vec<MemberReport>,
    pub min: EvalResult,
    pub argmin: Option<usize>,
    pub pass: bool,
    pub tolerance: f64,
}

impl RepresentationReport {
    // Every member at or above the target and the minimum at or below it.
    fn assemble(target: f64, members: Vec<MemberReport>) -> Self {
        let tolerance = REPRESENTATION_TOL;
        let mut argmin = None;
        let mut min = f64::INFINITY;
        for m in &members {
            let v = m.value.value();
            if v < min {
                min = v;
                argmin = Some(m.index);
            }
        }
        if argmin.is_none() {
            argmin = members.iter().find(|m| m.in_gamma).map(|m| m.index);
        }
        let lower = members.iter().all(|m| m.value.value() >= target - tolerance);
        let upper = min <= target + tolerance;
        Self {
            target: EvalResult::from_f64(target),
            members,
            min: EvalResult::from_f64(min),
            argmin,
            pass: lower && upper,
            tolerance,
        }
    }
}

/// Checks `rho(X) = min_Z envelope_Z(X)` over a finite family that contains
/// `X` itself.
pub fn minfamily_representation_check(
    x: &RandomVariable,
    fam: &CandidateFamily,
    rho_x: f64,
    regime: Regime,
    mode: EnvelopeMode,
) -> Result<RepresentationReport> {
    if mode == EnvelopeMode::Affine && fam.rho_zero.abs() > tol::CURVE {
        return Err(EnvelopeError::NotNormalized(fam.rho_zero));
    }
    let xd = x.to_distribution();
    let mut members = Vec::with_capacity(fam.members.len());
    for (index, cand) in fam.members.iter().enumerate() {
        let zd = cand.z.to_distribution();
        let cert = match mode {
            EnvelopeMode::Ssd => tilde_rho_z(&xd, &zd, cand.rho_z, fam.rho_zero, regime)?,
            EnvelopeMode::Csd => csd_scale_envelope(&xd, &zd, cand.rho_z, fam.rho_zero, regime)?,
            EnvelopeMode::Affine => affine_envelope_lp(&xd, &zd, cand.rho_z),
        };
        members.push(MemberReport {
            index,
            in_gamma: true,
            alpha: cert.alpha,
            c: cert.c,
            value: cert.value,
            active_breakpoints: cert.active_breakpoints,
        });
    }
    Ok(RepresentationReport::assemble(rho_x, members))
}

// Largest value of `diff(VaR_b(X), VaR_b(Z))` over levels in (0, 1), with
// the right ends of the segments where it is attained.
fn sup_over_levels(
    x: &EmpiricalDistribution,
    z: &EmpiricalDistribution,
    diff: impl Fn(f64, f64) -> f64,
) -> (f64, Vec<f64>) {
    let grid = union_breakpoints(&[x, z]);
    let values: Vec<(f64, f64)> = segments(&grid)
        .map(|(right, mid)| {
            let v = diff(x.quantile_curve().value_inside(mid), z.quantile_curve().value_inside(mid));
            (right, v)
        })
        .collect();
    let sup = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let active = values
        .iter()
        .filter(|v| sup - v.1 <= tol::CURVE * (1.0 + sup.abs()))
        .map(|v| v.0)
        .collect();
    (sup, active)
}

/// Checks `f(X) = min_Z sup_b {VaR_b(X) - alpha (VaR_b(Z) - f(Z))}` over the
/// members `Z` with `X` equal in law to `alpha Z`.
///
/// A non-normalized `f` in the star regime contributes its
/// `(1 - alpha) f(0)` term to every member.
pub fn var_robust_representation(
    x: &RandomVariable,
    fam: &CandidateFamily,
    f_x: f64,
    regime: Regime,
) -> RepresentationReport {
    let xd = x.to_distribution();
    let members = fam
        .members
        .iter()
        .enumerate()
        .map(|(index, cand)| {
            let zd = cand.z.to_distribution();
            let Some(alpha) = law_match_scale(&xd, &zd, regime.alpha_max()) else {
                return MemberReport::excluded(index);
            };
            if !f_x.is_finite() {
                return MemberReport {
                    in_gamma: true,
                    alpha: Some(alpha),
                    ..MemberReport::excluded(index)
                };
            }
            let (sup, active) = sup_over_levels(&xd, &zd, |vx, vz| vx - alpha * (vz - cand.rho_z));
            let offset = match regime {
                Regime::Star => (1.0 - alpha) * fam.rho_zero,
                Regime::Homog => 0.0,
            };
            MemberReport {
                index,
                in_gamma: true,
                alpha: Some(alpha),
                c: None,
                value: EvalResult::Finite(sup + offset),
                active_breakpoints: active,
            }
        })
        .collect();
    RepresentationReport::assemble(f_x, members)
}

/// Smallest shift `c` with `alpha Z + c` dominating `X` in first order, if
/// the dominance verifies.
pub fn affine_fsd_shift(x: &EmpiricalDistribution, z: &EmpiricalDistribution, alpha: f64) -> Option<f64> {
    let (c, _) = sup_over_levels(x, z, |vx, vz| vx - alpha * vz);
    let shifted = z.affine(alpha, c).ok()?;
    fsd_compare(&shifted, x).holds.then_some(c)
}

// Supremum of the feasible scalings in [0, 1]; the set is an interval
// containing zero.
fn alpha_bar(x: &EmpiricalDistribution, z: &EmpiricalDistribution) -> f64 {
    if affine_fsd_shift(x, z, 1.0).is_some() {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if affine_fsd_shift(x, z, mid).is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Checks `rho(X) = min_Z sup_b {VaR_b(X) - alpha_bar VaR_b(Z)}` over the
/// acceptable members `rho(Z) <= 0`; the family should contain `X - rho(X)`.
pub fn ca_var_representation(x: &RandomVariable, fam: &CandidateFamily, rho_x: f64) -> RepresentationReport {
    let xd = x.to_distribution();
    let members = fam
        .members
        .iter()
        .enumerate()
        .map(|(index, cand)| {
            if cand.rho_z > tol::CURVE {
                return MemberReport::excluded(index);
            }
            let zd = cand.z.to_distribution();
            let alpha = alpha_bar(&xd, &zd);
            let (sup, active) = sup_over_levels(&xd, &zd, |vx, vz| vx - alpha * vz);
            MemberReport {
                index,
                in_gamma: true,
                alpha: Some(alpha),
                c: Some(sup),
                value: EvalResult::Finite(sup),
                active_breakpoints: active,
            }
        })
        .collect();
    RepresentationReport::assemble(rho_x, members)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(values: &[f64]) -> EmpiricalDistribution {
        EmpiricalDistribution::uniform(values).unwrap()
    }

    fn pm(v: f64) -> EmpiricalDistribution {
        EmpiricalDistribution::point_mass(v).unwrap()
    }

    fn fin(v: f64) -> EvalResult {
        EvalResult::Finite(v)
    }

    #[test]
    fn rho_z_eval_examples() {
        let z = u(&[1.0, 3.0]);
        assert_eq!(rho_z_eval(&z, &z, 2.5, 0.0, Regime::Star), fin(2.5));
        assert_eq!(rho_z_eval(&u(&[0.5, 1.5]), &z, 2.5, 0.0, Regime::Star), fin(1.25));
        assert_eq!(rho_z_eval(&u(&[0.5, 1.5]), &z, 2.5, 1.0, Regime::Star), fin(1.75));
        assert_eq!(rho_z_eval(&u(&[0.5, 2.0]), &z, 2.5, 0.0, Regime::Star), EvalResult::PlusInfinity);
        assert_eq!(rho_z_eval(&u(&[2.0, 6.0]), &z, 2.5, 0.0, Regime::Star), EvalResult::PlusInfinity);
        assert_eq!(rho_z_eval(&u(&[2.0, 6.0]), &z, 2.5, 0.0, Regime::Homog), fin(5.0));
    }

    #[test]
    fn ssd_scale_interval_examples() {
        assert_eq!(
            ssd_scale_interval(&u(&[0.0, 1.0]), &u(&[0.0, 2.0]), 1.0),
            AlphaInterval::Feasible { lo: 0.5, hi: 1.0 }
        );
        let x = u(&[-2.0, 0.5, 3.0]);
        assert!(ssd_scale_interval(&x, &x, 1.0).contains(1.0, 0.0));
        assert_eq!(ssd_scale_interval(&pm(1.0), &pm(0.0), 1.0), AlphaInterval::Infeasible);
        assert_eq!(
            ssd_scale_interval(&u(&[0.0, 1.0]), &u(&[0.0, 2.0]), f64::INFINITY),
            AlphaInterval::Feasible { lo: 0.5, hi: f64::INFINITY }
        );
        // negative reference caps alpha from above
        assert_eq!(
            ssd_scale_interval(&pm(-2.0), &pm(-1.0), 5.0),
            AlphaInterval::Feasible { lo: 0.0, hi: 2.0 }
        );
    }

    #[test]
    fn tilde_rho_z_examples() {
        let cert = tilde_rho_z(&u(&[0.0, 1.0]), &u(&[0.0, 2.0]), 1.0, 0.0, Regime::Star).unwrap();
        assert_eq!(cert.value, fin(0.5));
        assert_eq!(cert.alpha, Some(0.5));
        assert!(!cert.active_breakpoints.is_empty());

        let x = u(&[1.0, 2.0, 4.0]);
        let cert = tilde_rho_z(&x, &x, 3.0, 0.0, Regime::Star).unwrap();
        assert!(cert.alpha.unwrap() <= 1.0);
        assert_eq!(cert.value, fin(cert.alpha.unwrap() * 3.0));

        let cert = tilde_rho_z(&pm(1.0), &pm(0.0), 0.0, 0.0, Regime::Star).unwrap();
        assert_eq!(cert.value, EvalResult::PlusInfinity);
        assert_eq!(cert.alpha, None);

        assert_eq!(
            tilde_rho_z(&pm(-2.0), &pm(-1.0), -1.0, 0.0, Regime::Homog).unwrap().value,
            fin(-2.0)
        );
        assert_eq!(
            tilde_rho_z(&u(&[0.0, 1.0]), &u(&[0.0, 2.0]), -1.0, 0.0, Regime::Homog),
            Err(EnvelopeError::UnboundedBelow)
        );
    }

    #[test]
    fn csd_scale_envelope_examples() {
        let z = RandomVariable::uniform(vec![0.0, 4.0, 10.0]).unwrap();
        let x = crate::dominance::mps_contract(&z, 0, 1).unwrap();
        let cert = csd_scale_envelope(&x.to_distribution(), &z.to_distribution(), 7.0, 0.0, Regime::Star).unwrap();
        assert_eq!(cert.alpha, Some(1.0));
        assert_eq!(cert.value, fin(7.0));

        // scaling down to match the mean breaks domination of the maximum
        let far = csd_scale_envelope(&u(&[-10.0, 12.0]), &u(&[0.0, 4.0]), 1.0, 0.0, Regime::Star).unwrap();
        assert_eq!(far.value, EvalResult::PlusInfinity);
        let cert = csd_scale_envelope(&u(&[0.0, 1.0]), &u(&[-1.0, 1.0]), 1.0, 0.0, Regime::Star).unwrap();
        assert_eq!(cert.value, EvalResult::PlusInfinity);

        let d = u(&[1.0, 2.0, 6.0]);
        assert_eq!(csd_scale_envelope(&d, &d, 4.0, 0.0, Regime::Star).unwrap().value, fin(4.0));
        let zero_mean = u(&[-1.0, 1.0]);
        let cert = csd_scale_envelope(&u(&[-0.5, 0.5]), &zero_mean, 1.0, 0.0, Regime::Star).unwrap();
        assert_eq!(cert.value, fin(0.5));
    }

    #[test]
    fn affine_envelope_lp_examples() {
        let cert = affine_envelope_lp(&u(&[0.0, 1.0]), &u(&[-1.0, 1.0]), 0.2);
        assert!((cert.value.value() - 0.6).abs() < 1e-15);
        assert_eq!(cert.alpha, Some(0.5));
        assert_eq!(cert.c, Some(0.5));
        assert_eq!(cert.active_breakpoints, vec![0.0, 0.5, 1.0]);

        let x = u(&[-1.0, 0.5, 3.0]);
        let rho = x.es_at(0.5).unwrap();
        assert!(affine_envelope_lp(&x, &x, rho).value.value() <= rho + 1e-12);
        assert!(affine_envelope_lp(&pm(2.5), &x, 10.0).value.value() <= 2.5);
    }

    #[test]
    fn kusuoka_examples() {
        let d = u(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(kusuoka_es_identity(&d, 0.5).unwrap(), (3.5, 3.5));
        let (l, r) = kusuoka_es_identity(&d, 0.0).unwrap();
        assert_eq!((l, r), (2.5, 2.5));
        let (l, r) = kusuoka_es_identity(&pm(-1.5), 0.3).unwrap();
        assert!((l + 1.5).abs() < 1e-15 && (r + 1.5).abs() < 1e-15);
        assert_eq!(kusuoka_es_identity(&d, 1.0), Err(EnvelopeError::Level(1.0)));
    }

    fn rv(values: &[f64]) -> RandomVariable {
        RandomVariable::uniform(values.to_vec()).unwrap()
    }

    fn es(v: &RandomVariable, b: f64) -> f64 {
        v.to_distribution().es_at(b).unwrap()
    }

    #[test]
    fn minfamily_check_on_expected_shortfall() {
        let x = rv(&[-1.0, 2.0, 0.5, 4.0]);
        let zs = [x.clone(), x.transform(2.0, 0.0).unwrap(), rv(&[0.0, 10.0]), x.transform(1.0, 1.0).unwrap()];
        let members = zs.iter().map(|z| Candidate { z: z.clone(), rho_z: es(z, 0.9) }).collect();
        let fam = CandidateFamily::new(members, 0.0).unwrap();
        for mode in [EnvelopeMode::Ssd, EnvelopeMode::Csd, EnvelopeMode::Affine] {
            let report = minfamily_representation_check(&x, &fam, es(&x, 0.9), Regime::Star, mode).unwrap();
            assert!(report.pass, "{mode:?}: {report:?}");
            assert!((report.min.value() - es(&x, 0.9)).abs() <= 1e-12);
        }
    }

    #[test]
    fn minfamily_check_rejects_a_non_star_shaped_functional() {
        // f(X) = sqrt|E X|: the half-scaled member undercuts f(X)
        let f = |v: &RandomVariable| v.to_distribution().mean().abs().sqrt();
        let x = rv(&[1.0, 3.0]);
        let zs = [x.clone(), x.transform(2.0, 0.0).unwrap()];
        let members = zs.iter().map(|z| Candidate { z: z.clone(), rho_z: f(z) }).collect();
        let fam = CandidateFamily::new(members, 0.0).unwrap();
        let report = minfamily_representation_check(&x, &fam, f(&x), Regime::Star, EnvelopeMode::Ssd).unwrap();
        assert!(!report.pass);
        assert_eq!(report.argmin, Some(1));
    }

    #[test]
    fn affine_mode_requires_normalization() {
        let x = rv(&[1.0, 2.0]);
        let fam = CandidateFamily::new(vec![Candidate { z: x.clone(), rho_z: 1.5 }], 1.0).unwrap();
        assert_eq!(
            minfamily_representation_check(&x, &fam, 1.5, Regime::Star, EnvelopeMode::Affine),
            Err(EnvelopeError::NotNormalized(1.0))
        );
    }

    #[test]
    fn var_robust_examples() {
        let var = |v: &RandomVariable| v.to_distribution().var_at(0.9).unwrap();
        let x = rv(&[-1.0, 2.0, 0.5, 4.0, 3.0]);
        let zs = [x.clone(), x.transform(2.0, 0.0).unwrap(), x.transform(1.0, 1.0).unwrap()];
        let members = zs.iter().map(|z| Candidate { z: z.clone(), rho_z: var(z) }).collect();
        let fam = CandidateFamily::new(members, 0.0).unwrap();
        let report = var_robust_representation(&x, &fam, var(&x), Regime::Star);
        assert!(report.pass);
        assert!(report.members[0].in_gamma && report.members[1].in_gamma && !report.members[2].in_gamma);
        assert_eq!(report.members[1].alpha, Some(0.5));
        assert_eq!(report.min, fin(var(&x)));

        let solo = CandidateFamily::new(vec![Candidate { z: x.clone(), rho_z: var(&x) }], 0.0).unwrap();
        assert!(var_robust_representation(&x, &solo, var(&x), Regime::Star).pass);

        let inf = var_robust_representation(&x, &fam, f64::INFINITY, Regime::Star);
        assert!(inf.pass);
        assert!(inf.members.iter().all(|m| m.value == EvalResult::PlusInfinity));
    }

    #[test]
    fn ca_var_examples() {
        let x = rv(&[-1.0, 2.0, 0.5, 4.0]);
        let rho = es(&x, 0.9);
        let shifted = x.transform(1.0, -rho).unwrap();
        let zs = [
            shifted.clone(),
            x.transform(2.0, -2.0 * rho - 1.0).unwrap(),
            rv(&[-5.0, -3.0]),
            x.clone(),
        ];
        let members = zs.iter().map(|z| Candidate { z: z.clone(), rho_z: es(z, 0.9) }).collect();
        let fam = CandidateFamily::new(members, 0.0).unwrap();
        let report = ca_var_representation(&x, &fam, rho);
        assert!(report.pass, "{report:?}");
        assert_eq!(report.argmin, Some(0));
        assert!(!report.members[3].in_gamma);
        assert!(report.members.iter().filter(|m| m.in_gamma).all(|m| m.alpha == Some(1.0)));

        let mean = x.to_distribution().mean();
        let zs = [x.transform(1.0, -mean).unwrap(), rv(&[-1.0, 1.0]), rv(&[-7.0, 3.0])];
        let members = zs.iter().map(|z| Candidate { z: z.clone(), rho_z: z.to_distribution().mean() }).collect();
        let fam = CandidateFamily::new(members, 0.0).unwrap();
        assert!(ca_var_representation(&x, &fam, mean).pass);

        let solo = CandidateFamily::new(vec![Candidate { z: shifted, rho_z: 0.0 }], 0.0).unwrap();
        let r = ca_var_representation(&x, &solo, rho);
        assert!((r.min.value() - rho).abs() < 1e-12);
    }

    #[test]
    fn family_validation() {
        assert_eq!(CandidateFamily::new(vec![], 0.0), Err(EnvelopeError::EmptyFamily));
        let c = Candidate { z: rv(&[1.0]), rho_z: f64::INFINITY };
        assert!(matches!(CandidateFamily::new(vec![c], 0.0), Err(EnvelopeError::NonFiniteCandidate { index: 0, .. })));
    }
}
