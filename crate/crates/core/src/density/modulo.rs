use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Reduces `x` into the half-open cell `[-a/2, a/2)`.
///
/// Returns `x - k a` for the unique integer `k` that lands the result in the cell.
pub fn mod_reduce<T: Real>(x: T, a: T) -> Result<T> {
    if !x.is_finite() {
        return invalid(format!("mod_reduce: non-finite x = {x}"));
    }
    if !(a > T::zero()) || !a.is_finite() {
        return invalid(format!("mod_reduce: interval length must be positive, got {a}"));
    }
    Ok(wrap(x, a))
}

/// Unchecked form of [`mod_reduce`] for hot loops whose arguments were validated upstream.
#[inline]
pub fn wrap<T: Real>(x: T, a: T) -> T {
    let half = a * T::lit(0.5);
    let mut r = x - a * ((x + half) / a).floor();
    // (x + a/2)/a can round up to an integer when x sits just below a cell edge
    if r >= half {
        r = r - a;
    }
    if r < -half {
        r = r + a;
    }
    r
}
