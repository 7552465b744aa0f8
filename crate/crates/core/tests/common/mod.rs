//! Brute-force oracles shared by the integration tests. None of them go
//! through the crate's quantile curves.
#![allow(dead_code)]

use starshape::scenario::RandomVariable;

pub type Atoms = Vec<(f64, f64)>;

/// Raw `(value, probability)` pairs, one per scenario.
pub fn atoms(rv: &RandomVariable) -> Atoms {
    rv.values().iter().copied().zip(rv.probabilities().iter().copied()).collect()
}

pub fn affine(a: &[(f64, f64)], scale: f64, shift: f64) -> Atoms {
    a.iter().map(|&(v, p)| (scale * v + shift, p)).collect()
}

/// `E[(X - t)^+]`.
pub fn stop_loss(a: &[(f64, f64)], t: f64) -> f64 {
    a.iter().map(|&(v, p)| p * (v - t).max(0.0)).sum()
}

/// `P(X <= t)`.
pub fn cdf(a: &[(f64, f64)], t: f64) -> f64 {
    a.iter().filter(|&&(v, _)| v <= t).map(|&(_, p)| p).sum()
}

fn union_values(x: &[(f64, f64)], y: &[(f64, f64)]) -> Vec<f64> {
    let mut ts: Vec<f64> = x.iter().chain(y).map(|a| a.0).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

/// `X` dominates `Y` in increasing convex order: every stop-loss transform
/// of `X` is at least that of `Y`. Stop-loss curves are piecewise linear with
/// kinks at atoms, and below all atoms they reduce to the means.
pub fn ssd_oracle(x: &[(f64, f64)], y: &[(f64, f64)], tol: f64) -> bool {
    union_values(x, y)
        .into_iter()
        .all(|t| stop_loss(x, t) >= stop_loss(y, t) - tol)
}

/// `X` dominates `Y` in first order: `F_X <= F_Y` at every atom.
pub fn fsd_oracle(x: &[(f64, f64)], y: &[(f64, f64)], tol: f64) -> bool {
    union_values(x, y).into_iter().all(|t| cdf(x, t) <= cdf(y, t) + tol)
}

/// Expected shortfall by sorting scenarios and averaging the top `1 - beta`
/// of the probability mass.
pub fn es_bruteforce(a: &[(f64, f64)], beta: f64) -> f64 {
    let mut sorted = a.to_vec();
    sorted.sort_by(|p, q| q.0.total_cmp(&p.0));
    if beta >= 1.0 {
        return sorted[0].0;
    }
    let mut remaining = 1.0 - beta;
    let mut acc = 0.0;
    for (v, p) in sorted {
        let take = p.min(remaining);
        acc += take * v;
        remaining -= take;
        if remaining <= 0.0 {
            break;
        }
    }
    acc / (1.0 - beta)
}

/// Left quantile by scanning the cumulative mass of sorted scenarios.
pub fn var_bruteforce(a: &[(f64, f64)], beta: f64) -> f64 {
    let mut sorted = a.to_vec();
    sorted.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut acc = 0.0;
    for &(v, p) in &sorted {
        acc += p;
        if acc >= beta - 1e-12 {
            return v;
        }
    }
    sorted[sorted.len() - 1].0
}

const GRID: usize = 200;

fn affine_feasible(x: &[(f64, f64)], z: &[(f64, f64)], alpha: f64, c: f64) -> bool {
    // same stop-loss test as `ssd_oracle`, without materializing `alpha Z + c`
    let shifted = |t: f64| z.iter().map(|&(v, p)| p * (alpha * v + c - t).max(0.0)).sum::<f64>();
    let ts = x.iter().map(|a| a.0).chain(z.iter().map(|a| alpha * a.0 + c));
    ts.into_iter().all(|t| shifted(t) >= stop_loss(x, t) - 1e-12)
}

/// Smallest feasible shift for a fixed scale, by bisection between a
/// bound below which the means already fail and one above which `alpha Z + c`
/// sits pointwise above `X`.
fn min_shift(x: &[(f64, f64)], z: &[(f64, f64)], alpha: f64) -> f64 {
    let mean = |a: &[(f64, f64)]| a.iter().map(|&(v, p)| v * p).sum::<f64>();
    let max = |a: &[(f64, f64)]| a.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let min = |a: &[(f64, f64)]| a.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let mut lo = mean(x) - alpha * mean(z) - 1.0;
    let mut hi = max(x) - alpha * min(z) + 1.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if affine_feasible(x, z, alpha, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-13 * (1.0 + hi.abs()) {
            break;
        }
    }
    hi
}

/// Grid search for `min alpha rho_z + c` over `alpha` in `[0, 1]` subject to
/// `alpha Z + c` dominating `X` in increasing convex order.
///
/// The feasible set is convex in `(alpha, c)`, so the objective after
/// minimizing out `c` is convex in `alpha`: a 200-column scan brackets the
/// optimum and golden-section search finishes it.
pub fn lp_grid_oracle(x: &[(f64, f64)], z: &[(f64, f64)], rho_z: f64) -> (f64, f64, f64) {
    let objective = |alpha: f64| alpha * rho_z + min_shift(x, z, alpha);
    let step = 1.0 / (GRID - 1) as f64;
    let column = |i: usize| (i as f64 * step).min(1.0);
    let values: Vec<f64> = (0..GRID).map(|i| objective(column(i))).collect();
    let best = (0..GRID).min_by(|&i, &j| values[i].total_cmp(&values[j])).unwrap();
    let (mut lo, mut hi) = (column(best.saturating_sub(1)), column((best + 1).min(GRID - 1)));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (hi - ratio * (hi - lo), lo + ratio * (hi - lo));
    let (mut fa, mut fb) = (objective(a), objective(b));
    while hi - lo > 1e-12 {
        if fa <= fb {
            (hi, b, fb) = (b, a, fa);
            a = hi - ratio * (hi - lo);
            fa = objective(a);
        } else {
            (lo, a, fa) = (a, b, fb);
            b = lo + ratio * (hi - lo);
            fb = objective(b);
        }
    }
    let mut out = (values[best], column(best));
    for (alpha, v) in [(a, fa), (b, fb)] {
        if v < out.0 {
            out = (v, alpha);
        }
    }
    (out.0, out.1, min_shift(x, z, out.1))
}
