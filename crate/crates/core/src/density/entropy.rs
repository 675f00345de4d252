use crate::density::grid::{GridDensity, MASS_TOL};
use crate::density::profile::DExtrema;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Differential entropy in nats by midpoint quadrature of `-f log f`, with `0 log 0 = 0`.
pub fn entropy<T: Real>(f: &GridDensity<T>) -> Result<T> {
    if f.atom_at_zero() > T::zero() {
        return Err(Error::InvalidDensity(
            "differential entropy is undefined with a point mass".into(),
        ));
    }
    f.check_unit_mass(MASS_TOL)?;
    Ok(neg_f_log_f(f))
}

/// `h_q(X) = E_q[-log q(X)]`.
pub fn hq<T: Real>(q: &GridDensity<T>) -> Result<T> {
    entropy(q)
}

fn neg_f_log_f<T: Real>(f: &GridDensity<T>) -> T {
    let sum = f.values().iter().fold(T::zero(), |s, &v| {
        if v > T::zero() {
            s - v * v.ln()
        } else {
            s
        }
    });
    sum * f.spacing()
}

/// `(E_q[X^2] / d_max, E_q[X^2] / d_min)`, which contains the power of `p = q / d`.
pub fn power_bounds<T: Real>(q: &GridDensity<T>, ext: &DExtrema<T>) -> Result<(T, T)> {
    ext.require_usable()?;
    let m2 = q.second_moment();
    Ok((m2 / ext.d_max, m2 / ext.d_min))
}

/// Bracket on `h(X)` for `X ~ q / d` from `h_q`, the extrema of `d`, and `[q(0) log q(0)]^+`.
pub fn entropy_bounds_x<T: Real>(q: &GridDensity<T>, ext: &DExtrema<T>) -> Result<(T, T)> {
    ext.require_usable()?;
    let h = hq(q)?;
    let q0 = q.eval(T::zero());
    let peak = (q0 * q0.ln()).max(T::zero());
    let gap = (T::one() / ext.d_min - T::one() / ext.d_max) * peak;
    Ok((
        h / ext.d_max + ext.d_min.ln() - gap,
        h / ext.d_min + ext.d_max.ln() + gap,
    ))
}
