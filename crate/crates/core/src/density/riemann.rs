use crate::density::grid::GridDensity;
use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Which set of shifted sample points enters the Riemann sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumForm {
    /// `k = -floor(M/2) ..= ceil(M/2) - 1`, compared against the integral over `[-A/2, A/2]`;
    /// the shift must satisfy `0 <= x < A/(2M)`.
    Bounded,
    /// Every `k` whose sample point meets the support, compared against the full integral.
    FullLine,
}

/// `sum_k (A/M) f(x + k A/M)` for a closure `f` supported on `[support_lo, support_hi]`.
///
/// For symmetric unimodal `f` the sum is within `(A/M) f(0)` of the corresponding integral.
pub fn riemann_shift_sum_fn<T: Real>(
    f: impl Fn(T) -> T,
    support: (T, T),
    a: T,
    m: usize,
    x: T,
    form: SumForm,
) -> Result<T> {
    if !(a > T::zero()) || m == 0 {
        return invalid("riemann_shift_sum needs A > 0 and M >= 1");
    }
    if !x.is_finite() {
        return invalid("riemann_shift_sum: non-finite shift");
    }
    let step = a / T::from_count(m);
    let (k_lo, k_hi) = match form {
        SumForm::Bounded => {
            if x < T::zero() || x >= step * T::lit(0.5) {
                return invalid(format!(
                    "bounded Riemann sum needs 0 <= x < A/(2M) = {}, got {x}",
                    step * T::lit(0.5)
                ));
            }
            let m = m as i64;
            (-(m / 2), (m + 1) / 2 - 1)
        }
        SumForm::FullLine => {
            let lo = ((support.0 - x) / step).floor().to_i64().unwrap_or(i64::MIN / 2);
            let hi = ((support.1 - x) / step).ceil().to_i64().unwrap_or(i64::MAX / 2);
            (lo, hi)
        }
    };
    let sum = (k_lo..=k_hi).fold(T::zero(), |s, k| s + f(x + T::lit(k as f64) * step));
    Ok(sum * step)
}

/// [`riemann_shift_sum_fn`] applied to the interpolant of a grid density.
pub fn riemann_shift_sum<T: Real>(
    f: &GridDensity<T>,
    a: T,
    m: usize,
    x: T,
    form: SumForm,
) -> Result<T> {
    riemann_shift_sum_fn(|t| f.eval(t), (f.lo(), f.hi()), a, m, x, form)
}
