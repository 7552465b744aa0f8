//! Numeric tolerances shared across the crate.

/// Allowed deviation of a probability vector's sum from one.
pub const WEIGHT_SUM: f64 = 1e-12;

/// Relative distance under which two atom values are merged.
pub const ATOM_MERGE: f64 = 1e-12;

/// Distance under which two cumulative breakpoints are treated as equal.
pub const BREAKPOINT: f64 = 1e-12;

/// Comparison tolerance for derived quantities (curves, measure values).
pub const CURVE: f64 = 1e-9;

/// `a` and `b` agree up to an absolute-plus-relative tolerance.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// `a <= b` up to an absolute-plus-relative tolerance.
pub fn le(a: f64, b: f64, tol: f64) -> bool {
    if a <= b {
        return true;
    }
    a - b <= tol * (1.0 + a.abs().max(b.abs()))
}
