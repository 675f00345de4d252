use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::density::grid::GridDensity;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Linear convolution of two grid densities with matching spacing.
///
/// The output centres are the pairwise sums of input centres, covering
/// `[lo_f + lo_g + h/2, hi_f + hi_g - h/2]` with `n_f + n_g - 1` cells. Atoms at zero are carried
/// through `(c_f δ + f) * (c_g δ + g) = c_f c_g δ + c_f g + c_g f + f * g`.
pub fn convolve<T: Real>(f: &GridDensity<T>, g: &GridDensity<T>) -> Result<GridDensity<T>> {
    convolve_with(f, g, fft_linear)
}

/// Same contract as [`convolve`], evaluated by the direct double sum. Kept as a reference
/// implementation for cross-checking the transform path.
pub fn convolve_direct<T: Real>(f: &GridDensity<T>, g: &GridDensity<T>) -> Result<GridDensity<T>> {
    convolve_with(f, g, direct_linear)
}

/// Convolves a list of densities left to right.
pub fn convolve_all<T: Real>(parts: &[GridDensity<T>]) -> Result<GridDensity<T>> {
    let (first, rest) = parts
        .split_first()
        .ok_or_else(|| Error::InvalidArgument("nothing to convolve".into()))?;
    rest.iter().try_fold(first.clone(), |acc, g| convolve(&acc, g))
}

fn convolve_with<T: Real>(
    f: &GridDensity<T>,
    g: &GridDensity<T>,
    linear: fn(&[T], &[T]) -> Vec<T>,
) -> Result<GridDensity<T>> {
    let h = f.spacing();
    let hg = g.spacing();
    if ((h - hg) / h).abs() > T::lit(1e-9) {
        return Err(Error::IncompatibleGrids(format!(
            "spacings differ: {h} vs {hg}; resample first"
        )));
    }
    let lo = f.lo() + g.lo() + h * T::lit(0.5);
    let hi = f.hi() + g.hi() - h * T::lit(0.5);
    let n = f.n() + g.n() - 1;

    let mut values: Vec<T> = linear(f.values(), g.values())
        .into_iter()
        .map(|v| v * h)
        .collect();
    values.truncate(n);

    let (cf, cg) = (f.atom_at_zero(), g.atom_at_zero());
    if cf > T::zero() {
        let zf = f.zero_index().expect("atom implies zero on a centre");
        for (j, &v) in g.values().iter().enumerate() {
            values[j + zf] = values[j + zf] + cf * v;
        }
    }
    if cg > T::zero() {
        let zg = g.zero_index().expect("atom implies zero on a centre");
        for (i, &v) in f.values().iter().enumerate() {
            values[i + zg] = values[i + zg] + cg * v;
        }
    }
    // transform round-off can dip a hair below zero in the tails
    for v in &mut values {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
    let out = GridDensity::from_parts_unchecked(lo, hi, values, cf * cg);
    if cf * cg > T::zero() && out.zero_index().is_none() {
        return Err(Error::IncompatibleGrids("product atom off the output lattice".into()));
    }
    Ok(out)
}

fn direct_linear<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == T::zero() {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = out[i + j] + x * y;
        }
    }
    out
}

fn fft_linear<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    let n = a.len() + b.len() - 1;
    if a.len().min(b.len()) <= 32 {
        return direct_linear(a, b);
    }
    let len = n.next_power_of_two();
    let mut planner = FftPlanner::<T>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let pad = |x: &[T]| {
        let mut buf = vec![Complex::new(T::zero(), T::zero()); len];
        for (slot, &v) in buf.iter_mut().zip(x) {
            slot.re = v;
        }
        buf
    };
    let mut fa = pad(a);
    let mut fb = pad(b);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = *x * *y;
    }
    inv.process(&mut fa);
    let scale = T::one() / T::from_count(len);
    fa.into_iter().take(n).map(|c| c.re * scale).collect()
}
