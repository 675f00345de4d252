//! Densities sampled at the cell centres of a uniform grid.

use crate::density::modulo::wrap;
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Default mass tolerance for densities that went through renormalisation-free operations.
pub const MASS_TOL: f64 = 1e-6;

/// Default number of cells per modulo interval.
pub const DEFAULT_CELLS: usize = 4096;

/// Relative tolerance used when deciding whether two grids share a spacing or a lattice.
const ALIGN_TOL: f64 = 1e-6;

/// Whether zero falls on a cell centre (`Odd` cell count on a symmetric grid) or on a cell edge
/// (`Even`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    fn cells_covering(self, half_width: f64, spacing: f64) -> usize {
        let r = half_width / spacing;
        match self {
            Parity::Odd => 2 * ((r - 0.5 - 1e-9).ceil().max(0.0) as usize) + 1,
            Parity::Even => 2 * ((r - 1e-9).ceil().max(1.0) as usize),
        }
    }
}

/// A real function sampled at the centres of `n` equal cells covering `[lo, hi]`, plus an
/// optional Dirac mass at zero.
///
/// Between centres the function is read by linear interpolation and held flat over the two
/// outer half-cells, so the interpolant integrates to exactly `spacing * sum(values)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity<T: Real = f64> {
    lo: T,
    hi: T,
    values: Vec<T>,
    atom_at_zero: T,
}

impl<T: Real> GridDensity<T> {
    pub fn new(lo: T, hi: T, values: Vec<T>) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return invalid(format!("grid interval must satisfy lo < hi, got [{lo}, {hi}]"));
        }
        if values.is_empty() {
            return invalid("grid needs at least one cell");
        }
        if let Some(v) = values.iter().find(|v| !(**v >= T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidDensity(format!("grid value {v} is negative or non-finite")));
        }
        Ok(Self {
            lo,
            hi,
            values,
            atom_at_zero: T::zero(),
        })
    }

    /// Attaches a point mass at zero. Zero must sit on a cell centre so that convolutions with
    /// the atom land back on the grid.
    pub fn with_atom(mut self, atom: T) -> Result<Self> {
        if !(atom >= T::zero()) || !atom.is_finite() {
            return Err(Error::InvalidDensity(format!("atom mass {atom} must be non-negative")));
        }
        if atom > T::zero() && self.zero_index().is_none() {
            return Err(Error::IncompatibleGrids(
                "an atom at zero needs zero on a cell centre".into(),
            ));
        }
        self.atom_at_zero = atom;
        Ok(self)
    }

    /// Unit-mass uniform density on `[lo, hi]`.
    pub fn uniform(lo: T, hi: T, n: usize) -> Result<Self> {
        if n == 0 {
            return invalid("uniform density needs n >= 1");
        }
        let v = T::one() / (hi - lo);
        Self::new(lo, hi, vec![v; n])
    }

    /// Pure unit atom at zero on a single-cell grid of the given spacing.
    pub fn point_mass(spacing: T) -> Result<Self> {
        let half = spacing * T::lit(0.5);
        Self::new(-half, half, vec![T::zero()])?.with_atom(T::one())
    }

    /// Gaussian kernel truncated to `[-a/2, a/2]` and normalised to unit mass on the grid.
    pub fn truncated_gaussian(sigma_x: T, a: T, n: usize) -> Result<Self> {
        if !(sigma_x > T::zero()) || !sigma_x.is_finite() {
            return invalid(format!("sigma_x must be positive, got {sigma_x}"));
        }
        if !(a > T::zero()) || !a.is_finite() {
            return invalid(format!("interval length must be positive, got {a}"));
        }
        if n < 8 {
            return invalid(format!("truncated Gaussian needs n >= 8, got {n}"));
        }
        let half = a * T::lit(0.5);
        let h = a / T::from_count(n);
        let two_var = T::lit(2.0) * sigma_x * sigma_x;
        let raw: Vec<T> = (0..n)
            .map(|i| {
                let x = -half + (T::from_count(i) + T::lit(0.5)) * h;
                (-(x * x) / two_var).exp()
            })
            .collect();
        let total = raw.iter().fold(T::zero(), |s, &v| s + v) * h;
        Self::new(-half, half, raw.into_iter().map(|v| v / total).collect())
    }

    /// Zero-mean Gaussian clipped at `clip` standard deviations, stored as exact cell averages so
    /// that widths far below the spacing still carry their mass.
    pub fn gaussian(sigma: T, spacing: T, clip: f64, parity: Parity) -> Result<Self> {
        let (s, h) = (sigma.as_f64(), spacing.as_f64());
        if !(s > 0.0 && s.is_finite()) {
            return invalid(format!("Gaussian sigma must be positive, got {s}"));
        }
        if !(h > 0.0 && h.is_finite()) || !(clip > 0.0) {
            return invalid("Gaussian needs a positive spacing and clip width");
        }
        let m = parity.cells_covering(clip * s, h);
        let lo = -0.5 * m as f64 * h;
        let scale = 1.0 / (s * std::f64::consts::SQRT_2);
        let cdf = |x: f64| 0.5 * statrs::function::erf::erf(x * scale);
        let values = (0..m)
            .map(|i| {
                let a = lo + i as f64 * h;
                let b = a + h;
                // difference of upper tails on the right half keeps tail cells accurate
                let p = if a >= 0.0 {
                    0.5 * (statrs::function::erf::erfc(a * scale) - statrs::function::erf::erfc(b * scale))
                } else if b <= 0.0 {
                    0.5 * (statrs::function::erf::erfc(-b * scale) - statrs::function::erf::erfc(-a * scale))
                } else {
                    cdf(b) - cdf(a)
                };
                T::lit(p.max(0.0) / h)
            })
            .collect();
        Self::new(T::lit(lo), T::lit(-lo), values)
    }

    pub fn lo(&self) -> T {
        self.lo
    }

    pub fn hi(&self) -> T {
        self.hi
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn atom_at_zero(&self) -> T {
        self.atom_at_zero
    }

    pub fn spacing(&self) -> T {
        (self.hi - self.lo) / T::from_count(self.n())
    }

    pub fn center(&self, i: usize) -> T {
        self.lo + (T::from_count(i) + T::lit(0.5)) * self.spacing()
    }

    pub fn centers(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.n()).map(move |i| self.center(i))
    }

    /// Total mass: atom plus midpoint quadrature of the samples.
    pub fn mass(&self) -> T {
        self.atom_at_zero + self.spacing() * self.values.iter().fold(T::zero(), |s, &v| s + v)
    }

    /// Fails when the mass is off by more than `tol`, or by more than the rounding a sum of
    /// `n` samples can accumulate in `T`, whichever is larger.
    pub fn check_unit_mass(&self, tol: f64) -> Result<()> {
        let rounding = 4.0 * (self.n() as f64).sqrt() * T::epsilon().as_f64();
        let tol = tol.max(rounding);
        let m = self.mass().as_f64();
        if (m - 1.0).abs() > tol {
            return Err(Error::InvalidDensity(format!("mass {m} differs from 1 by more than {tol}")));
        }
        Ok(())
    }

    /// Mass of the interpolant on `[a, b)`, counting the atom when `a <= 0 < b`.
    pub fn mass_between(&self, a: T, b: T) -> T {
        if !(b > a) {
            return T::zero();
        }
        let anti = Antiderivative::new(self);
        let atom = if a <= T::zero() && T::zero() < b {
            self.atom_at_zero
        } else {
            T::zero()
        };
        anti.at(b) - anti.at(a) + atom
    }

    /// Masses of consecutive intervals `[edges[i], edges[i + 1])`.
    pub fn bin_masses(&self, edges: &[T]) -> Vec<T> {
        let anti = Antiderivative::new(self);
        edges
            .windows(2)
            .map(|w| {
                let atom = if w[0] <= T::zero() && T::zero() < w[1] {
                    self.atom_at_zero
                } else {
                    T::zero()
                };
                anti.at(w[1]) - anti.at(w[0]) + atom
            })
            .collect()
    }

    pub fn max_value(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| m.max(v))
    }

    /// True when `lo == -hi` up to rounding, so centre `i` mirrors centre `n - 1 - i`.
    pub fn is_centered(&self) -> bool {
        (self.lo + self.hi).abs() <= T::lit(1e-12) * (self.hi - self.lo)
    }

    /// Index of the cell whose centre is zero, if any.
    pub fn zero_index(&self) -> Option<usize> {
        let pos = (-self.lo / self.spacing() - T::lit(0.5)).as_f64();
        let k = pos.round();
        if k >= 0.0 && (k as usize) < self.n() && (pos - k).abs() <= ALIGN_TOL {
            Some(k as usize)
        } else {
            None
        }
    }

    /// Piecewise-linear reading of the samples; zero outside `[lo, hi]`. The atom is not
    /// included.
    pub fn eval(&self, x: T) -> T {
        if x < self.lo || x > self.hi {
            return T::zero();
        }
        let h = self.spacing();
        let n = self.n();
        let pos = (x - self.lo) / h - T::lit(0.5);
        if pos <= T::zero() {
            return self.values[0];
        }
        let i = pos.floor().to_usize().unwrap_or(n - 1);
        if i >= n - 1 {
            return self.values[n - 1];
        }
        let t = pos - T::from_count(i);
        self.values[i] + (self.values[i + 1] - self.values[i]) * t
    }

    /// Integral of `x^2` against the density (atom contributes nothing).
    pub fn second_moment(&self) -> T {
        let h = self.spacing();
        self.centers()
            .zip(&self.values)
            .fold(T::zero(), |s, (x, &v)| s + x * x * v)
            * h
    }

    /// Multiplies samples and atom by a non-negative constant.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        if !(factor >= T::zero()) {
            return invalid(format!("scale factor must be non-negative, got {factor}"));
        }
        Ok(Self {
            lo: self.lo,
            hi: self.hi,
            values: self.values.iter().map(|&v| v * factor).collect(),
            atom_at_zero: self.atom_at_zero * factor,
        })
    }

    /// Pointwise map keeping the grid; used for `q / d` style constructions.
    pub fn map_indexed(&self, mut f: impl FnMut(usize, T, T) -> T) -> Result<Self> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(i, self.center(i), v))
            .collect();
        let mut out = Self::new(self.lo, self.hi, values)?;
        out.atom_at_zero = self.atom_at_zero;
        Ok(out)
    }

    /// Density of `c X` on a centred grid with the given spacing, stored as exact cell averages of
    /// the scaled interpolant. Mass, symmetry, unimodality and pointwise ordering between inputs
    /// on the same grid all carry over.
    pub fn scale_resample(&self, c: T, spacing: T, parity: Parity) -> Result<Self> {
        if !(spacing > T::zero()) {
            return invalid("resample spacing must be positive");
        }
        if c == T::zero() {
            let n = match parity {
                Parity::Odd => 1,
                Parity::Even => 2,
            };
            let half = spacing * T::from_count(n) * T::lit(0.5);
            let total = self.mass();
            return match parity {
                Parity::Odd => Self::new(-half, half, vec![T::zero()])?.with_atom(total),
                // zero sits on the middle edge: split the mass between the two central cells
                Parity::Even => Self::new(-half, half, vec![total / (T::lit(2.0) * spacing); 2]),
            };
        }
        let abs_c = c.abs();
        let half_width = (self.lo.abs().max(self.hi.abs()) * abs_c).as_f64();
        let m = parity.cells_covering(half_width, spacing.as_f64());
        let lo = -spacing * T::from_count(m) * T::lit(0.5);
        let anti = Antiderivative::new(self);
        let values = (0..m)
            .map(|i| {
                let a = lo + T::from_count(i) * spacing;
                let b = a + spacing;
                let mass = if c > T::zero() {
                    anti.at(b / c) - anti.at(a / c)
                } else {
                    anti.at(a / c) - anti.at(b / c)
                };
                (mass / spacing).max(T::zero())
            })
            .collect();
        let out = Self::new(lo, -lo, values)?;
        if self.atom_at_zero > T::zero() {
            return match parity {
                Parity::Odd => out.with_atom(self.atom_at_zero),
                Parity::Even => Err(Error::IncompatibleGrids(
                    "cannot keep an atom on an even grid".into(),
                )),
            };
        }
        Ok(out)
    }

    /// Folds the density onto the modulo cell `[-a/2, a/2)` with `n` cells, summing all aliases
    /// `x + l a`. Centres that fall between target centres are split linearly.
    pub fn fold_mod(&self, a: T, n: usize) -> Result<Self> {
        if n == 0 || !(a > T::zero()) {
            return invalid("fold_mod needs a positive interval and cell count");
        }
        let ht = a / T::from_count(n);
        let h = self.spacing();
        if ((h - ht) / ht).abs() > T::lit(ALIGN_TOL) {
            return Err(Error::IncompatibleGrids(format!(
                "fold target spacing {ht} differs from source spacing {h}"
            )));
        }
        let half = a * T::lit(0.5);
        let mut out = vec![T::zero(); n];
        for (i, &v) in self.values.iter().enumerate() {
            if v == T::zero() {
                continue;
            }
            let r = wrap(self.center(i), a);
            let pos = ((r + half) / ht - T::lit(0.5)).as_f64();
            let k = pos.round();
            if (pos - k).abs() <= ALIGN_TOL {
                out[(k as i64).rem_euclid(n as i64) as usize] += v;
            } else {
                let k0 = pos.floor();
                let w = T::lit(pos - k0);
                out[(k0 as i64).rem_euclid(n as i64) as usize] += v * (T::one() - w);
                out[(k0 as i64 + 1).rem_euclid(n as i64) as usize] += v * w;
            }
        }
        let folded = Self::new(-half, half, out)?;
        if self.atom_at_zero > T::zero() {
            if folded.zero_index().is_none() {
                return Err(Error::IncompatibleGrids("folded atom needs zero on a centre".into()));
            }
            return folded.with_atom(self.atom_at_zero);
        }
        Ok(folded)
    }

    /// Reads the grid as one period and returns `x -> f((x - offset) mod period)` sampled on the
    /// same centres. Whole-cell offsets are exact index rotations.
    pub fn shift_circular(&self, offset: T) -> Result<Self> {
        let n = self.n() as i64;
        let s = (offset / self.spacing()).as_f64();
        let k = s.round();
        let mut out = vec![T::zero(); self.n()];
        if (s - k).abs() <= ALIGN_TOL {
            let k = k as i64;
            for (j, o) in out.iter_mut().enumerate() {
                *o = self.values[(j as i64 - k).rem_euclid(n) as usize];
            }
        } else {
            let k0 = s.floor() as i64;
            let w = T::lit(s - s.floor());
            for (j, o) in out.iter_mut().enumerate() {
                let a = self.values[(j as i64 - k0).rem_euclid(n) as usize];
                let b = self.values[(j as i64 - k0 - 1).rem_euclid(n) as usize];
                *o = a * (T::one() - w) + b * w;
            }
        }
        let mut g = Self::new(self.lo, self.hi, out)?;
        g.atom_at_zero = self.atom_at_zero;
        Ok(g)
    }

    pub(crate) fn from_parts_unchecked(lo: T, hi: T, values: Vec<T>, atom: T) -> Self {
        Self {
            lo,
            hi,
            values,
            atom_at_zero: atom,
        }
    }
}

/// Antiderivative of the piecewise-linear interpolant of a grid (atom excluded).
pub(crate) struct Antiderivative<'a, T: Real> {
    grid: &'a GridDensity<T>,
    at_centers: Vec<T>,
}

impl<'a, T: Real> Antiderivative<'a, T> {
    pub(crate) fn new(grid: &'a GridDensity<T>) -> Self {
        let h = grid.spacing();
        let v = grid.values();
        let mut at_centers = Vec::with_capacity(v.len());
        let mut acc = v[0] * h * T::lit(0.5);
        at_centers.push(acc);
        for w in v.windows(2) {
            acc = acc + h * (w[0] + w[1]) * T::lit(0.5);
            at_centers.push(acc);
        }
        Self { grid, at_centers }
    }

    /// Integral of the interpolant from `-inf` to `x`.
    pub(crate) fn at(&self, x: T) -> T {
        let g = self.grid;
        let n = g.n();
        let h = g.spacing();
        let v = g.values();
        if x <= g.lo() {
            return T::zero();
        }
        if x >= g.hi() {
            return self.at_centers[n - 1] + v[n - 1] * h * T::lit(0.5);
        }
        let pos = (x - g.lo()) / h - T::lit(0.5);
        if pos <= T::zero() {
            return (x - g.lo()) * v[0];
        }
        let i = pos.floor().to_usize().unwrap_or(n - 1).min(n - 1);
        let t = (pos - T::from_count(i)) * h;
        if i == n - 1 {
            return self.at_centers[i] + v[i] * t;
        }
        let slope = (v[i + 1] - v[i]) / h;
        self.at_centers[i] + v[i] * t + slope * t * t * T::lit(0.5)
    }
}
