//! The periodic normalisation profile `d(x)` of a shaping density and the input density
//! `p = q / d` it induces.

use crate::density::grid::GridDensity;
use crate::density::modulo::wrap;
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Extremes of `d(x)` implied by the shifted Riemann-sum bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DExtrema<T: Real = f64> {
    pub d_min: T,
    pub d_max: T,
}

impl<T: Real> DExtrema<T> {
    /// The sandwich and entropy bounds need `d_min > 0`.
    pub fn is_usable(&self) -> bool {
        self.d_min > T::zero()
    }

    pub fn width(&self) -> T {
        self.d_max - self.d_min
    }

    pub(crate) fn require_usable(&self) -> Result<()> {
        if self.is_usable() {
            Ok(())
        } else {
            Err(Error::DegenerateShaping(format!(
                "d_min = {} <= 0; increase M or widen the shaping density",
                self.d_min
            )))
        }
    }
}

fn check_support<T: Real>(q: &GridDensity<T>, a: T, m: usize) -> Result<()> {
    if !(a > T::zero()) || m == 0 {
        return invalid("profile needs A > 0 and M >= 1");
    }
    let half = a * T::lit(0.5);
    let slack = T::lit(1e-9) * a;
    if q.lo() < -half - slack || q.hi() > half + slack {
        return invalid(format!(
            "shaping density support [{}, {}] exceeds [-A/2, A/2] with A = {a}",
            q.lo(),
            q.hi()
        ));
    }
    Ok(())
}

/// Whether `q` lives on exactly `[-A/2, A/2]` with a cell count divisible by `M`, so every
/// shift by `A/M` maps centres onto centres.
fn lattice_aligned<T: Real>(q: &GridDensity<T>, a: T, m: usize) -> bool {
    let half = a * T::lit(0.5);
    let tol = T::lit(1e-12) * a;
    q.n() % m == 0 && (q.lo() + half).abs() <= tol && (q.hi() - half).abs() <= tol
}

/// `d(x) = sum_{k=0}^{M-1} (A/M) q((x + k A/M) mod A)` at an arbitrary point.
pub fn d_value<T: Real>(q: &GridDensity<T>, a: T, m: usize, x: T) -> T {
    let step = a / T::from_count(m);
    (0..m).fold(T::zero(), |s, k| {
        s + q.eval(wrap(x + T::from_count(k) * step, a))
    }) * step
}

/// `d` evaluated at each centre of `q`'s own grid.
pub fn d_on_grid<T: Real>(q: &GridDensity<T>, a: T, m: usize) -> Result<Vec<T>> {
    check_support(q, a, m)?;
    let step = a / T::from_count(m);
    if lattice_aligned(q, a, m) {
        let n = q.n();
        let period = n / m;
        let v = q.values();
        let mut one_period = vec![T::zero(); period];
        for (j, slot) in one_period.iter_mut().enumerate() {
            *slot = (0..m).fold(T::zero(), |s, k| s + v[j + k * period]) * step;
        }
        Ok((0..n).map(|i| one_period[i % period]).collect())
    } else {
        Ok(q.centers().map(|x| d_value(q, a, m, x)).collect())
    }
}

/// One period of `d` on `[0, A/M)`.
pub fn d_profile<T: Real>(q: &GridDensity<T>, a: T, m: usize) -> Result<GridDensity<T>> {
    check_support(q, a, m)?;
    let step = a / T::from_count(m);
    let n = q.n();
    if lattice_aligned(q, a, m) && n % 2 == 0 {
        // centres of [0, A/M) are q's centres n/2 .. n/2 + n/M, wrapping when M = 1
        let full = d_on_grid(q, a, m)?;
        let values = (0..n / m).map(|j| full[(n / 2 + j) % n]).collect();
        return GridDensity::new(T::zero(), step, values);
    }
    let cells = n.div_ceil(m).max(8);
    let h = step / T::from_count(cells);
    let values = (0..cells)
        .map(|j| d_value(q, a, m, (T::from_count(j) + T::lit(0.5)) * h))
        .collect();
    GridDensity::new(T::zero(), step, values)
}

/// `d_min = 1 - (A/M) q(0)` and `d_max = 1 + (A/M) q(0)`.
pub fn d_extrema<T: Real>(q: &GridDensity<T>, a: T, m: usize) -> Result<DExtrema<T>> {
    check_support(q, a, m)?;
    let offset = a / T::from_count(m) * q.eval(T::zero());
    Ok(DExtrema {
        d_min: T::one() - offset,
        d_max: T::one() + offset,
    })
}

/// `p(x) = q(x) / d(x)` on `q`'s grid.
pub fn input_density<T: Real>(q: &GridDensity<T>, a: T, m: usize) -> Result<GridDensity<T>> {
    d_extrema(q, a, m)?.require_usable()?;
    let d = d_on_grid(q, a, m)?;
    q.map_indexed(|i, _, v| if v == T::zero() { T::zero() } else { v / d[i] })
}
