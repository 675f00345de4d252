use serde::Serialize;

use crate::density::{d_extrema, input_density, DExtrema, GridDensity, DEFAULT_CELLS};
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Number of grid cells per modulo interval for an `M`-ary alphabet: the smallest multiple of
/// `2M` that is at least [`DEFAULT_CELLS`], so alphabet points and shifts by `A/M` fall on
/// cell centres.
pub fn default_cells(order: usize) -> usize {
    let step = 2 * order.max(1);
    DEFAULT_CELLS.div_ceil(step) * step
}

/// ASK order, modulo interval and truncated-Gaussian shaping width of one real input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Shaping<T: Real = f64> {
    pub order: usize,
    pub interval: T,
    pub sigma_x: T,
    pub grid_cells: usize,
}

impl<T: Real> Shaping<T> {
    pub fn new(order: usize, interval: T, sigma_x: T) -> Result<Self> {
        let s = Self {
            order,
            interval,
            sigma_x,
            grid_cells: default_cells(order),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_grid_cells(mut self, cells: usize) -> Result<Self> {
        self.grid_cells = cells;
        self.validate()?;
        Ok(self)
    }

    /// Shaping whose input density `q / d` has second moment `power`, with the interval tied to
    /// the shaping width by `A = ratio * sigma_x`.
    ///
    /// With `A` proportional to `sigma_x` the whole construction scales, so one evaluation at
    /// `sigma_x = 1` fixes the answer.
    pub fn matched(power: T, order: usize, ratio: T) -> Result<Self> {
        if !(power > T::zero()) || !(ratio > T::zero()) {
            return invalid("matched shaping needs positive power and interval ratio");
        }
        let unit = Self::new(order, ratio, T::one())?;
        let p = unit.input()?.power;
        let sigma_x = (power / p).sqrt();
        Self::new(order, ratio * sigma_x, sigma_x)
    }

    fn validate(&self) -> Result<()> {
        if self.order < 2 {
            return invalid(format!("ASK order must be at least 2, got {}", self.order));
        }
        if !(self.interval > T::zero()) || !self.interval.is_finite() {
            return invalid(format!("modulo interval must be positive, got {}", self.interval));
        }
        if !(self.sigma_x > T::zero()) || !self.sigma_x.is_finite() {
            return invalid(format!("sigma_x must be positive, got {}", self.sigma_x));
        }
        if self.grid_cells % self.order != 0 || self.grid_cells < 8 {
            return invalid(format!(
                "grid cells {} must be a multiple of M = {} and at least 8",
                self.grid_cells, self.order
            ));
        }
        Ok(())
    }

    pub fn alphabet(&self) -> AskAlphabet<T> {
        AskAlphabet::new(self.order, self.interval).expect("validated shaping")
    }

    /// The truncated Gaussian `q` on `[-A/2, A/2]`.
    pub fn shaping_density(&self) -> Result<GridDensity<T>> {
        GridDensity::truncated_gaussian(self.sigma_x, self.interval, self.grid_cells)
    }

    pub fn input(&self) -> Result<ShapedInput<T>> {
        let q = self.shaping_density()?;
        let extrema = d_extrema(&q, self.interval, self.order)?;
        let p = input_density(&q, self.interval, self.order)?;
        let power = p.second_moment();
        Ok(ShapedInput {
            shaping: *self,
            q,
            extrema,
            p,
            power,
        })
    }

    pub fn spacing(&self) -> T {
        self.interval / T::from_count(self.grid_cells)
    }
}

/// Grid densities attached to one shaping: `q`, the extrema of `d`, and `p = q / d`.
#[derive(Debug, Clone)]
pub struct ShapedInput<T: Real = f64> {
    pub shaping: Shaping<T>,
    pub q: GridDensity<T>,
    pub extrema: DExtrema<T>,
    pub p: GridDensity<T>,
    /// `E[X^2]` under `p`.
    pub power: T,
}

impl<T: Real> ShapedInput<T> {
    pub fn lower(&self) -> Result<GridDensity<T>> {
        self.q.scaled(T::one() / self.extrema.d_max)
    }

    pub fn upper(&self) -> Result<GridDensity<T>> {
        self.q.scaled(T::one() / self.extrema.d_min)
    }
}

/// The `M` points `-A/2 + (m + 1/2) A/M`.
#[derive(Debug, Clone, PartialEq)]
pub struct AskAlphabet<T: Real = f64> {
    points: Vec<T>,
    interval: T,
}

impl<T: Real> AskAlphabet<T> {
    pub fn new(order: usize, interval: T) -> Result<Self> {
        if order == 0 || !(interval > T::zero()) {
            return invalid("alphabet needs M >= 1 and A > 0");
        }
        let step = interval / T::from_count(order);
        let half = interval * T::lit(0.5);
        let points = (0..order)
            .map(|m| -half + (T::from_count(m) + T::lit(0.5)) * step)
            .collect();
        Ok(Self { points, interval })
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> T {
        self.points[index]
    }

    pub fn interval(&self) -> T {
        self.interval
    }

    pub fn spacing(&self) -> T {
        self.interval / T::from_count(self.points.len())
    }

    /// Half the point spacing; the innermost points are `±kappa` for even `M`.
    pub fn kappa(&self) -> T {
        self.spacing() * T::lit(0.5)
    }
}

/// A shaped input of another stream entering the effective noise with weight `coefficient`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapedTerm<T: Real = f64> {
    pub coefficient: T,
    pub shaping: Shaping<T>,
    /// Index of the originating real stream, when the term comes from a decomposition.
    pub source: Option<usize>,
}

/// Noise `sum_j c_j X_j + sum_h b_h W_h` with shaped inputs `X_j` and unit-variance Gaussians
/// `W_h`, before normalisation by the channel gain.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct NoiseMixture<T: Real = f64> {
    pub shaped_terms: Vec<ShapedTerm<T>>,
    pub gaussian_terms: Vec<T>,
}

impl<T: Real> NoiseMixture<T> {
    pub fn gaussian(std_dev: T) -> Self {
        Self {
            shaped_terms: Vec::new(),
            gaussian_terms: vec![std_dev],
        }
    }

    /// Standard deviation of the combined Gaussian part.
    pub fn gaussian_std(&self) -> T {
        self.gaussian_terms
            .iter()
            .fold(T::zero(), |s, &b| s + b * b)
            .sqrt()
    }

    /// Variance given the power of each shaped term's input.
    pub fn variance_with(&self, power_of: impl Fn(&Shaping<T>) -> T) -> T {
        let shaped = self
            .shaped_terms
            .iter()
            .fold(T::zero(), |s, t| s + t.coefficient * t.coefficient * power_of(&t.shaping));
        shaped + self.gaussian_std().powi(2)
    }

    /// Variance with every shaped input at its exact grid power.
    pub fn variance(&self) -> Result<T> {
        let mut total = self.gaussian_std().powi(2);
        for t in &self.shaped_terms {
            total += t.coefficient * t.coefficient * t.shaping.input()?.power;
        }
        Ok(total)
    }
}

/// One real scalar dirty-paper channel `y = g x + s + z`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarDpcConfig<T: Real = f64> {
    pub shaping: Shaping<T>,
    pub alpha: T,
    pub channel_gain: T,
    pub noise: NoiseMixture<T>,
}

impl<T: Real> ScalarDpcConfig<T> {
    /// Builds the configuration with the MMSE coefficient for the exact input power and the
    /// gain-normalised noise power.
    pub fn new(shaping: Shaping<T>, channel_gain: T, noise: NoiseMixture<T>) -> Result<Self> {
        if !(channel_gain > T::zero()) || !channel_gain.is_finite() {
            return invalid(format!("channel gain must be positive, got {channel_gain}"));
        }
        let px = shaping.input()?.power;
        let pz = noise.variance()? / (channel_gain * channel_gain);
        if !(pz > T::zero()) || !pz.is_finite() {
            return Err(Error::InvalidMixture(format!("noise variance {pz} must be positive")));
        }
        let alpha = super::encoder::mmse_alpha(px, pz)?;
        Self::with_alpha(shaping, alpha, channel_gain, noise)
    }

    pub fn with_alpha(
        shaping: Shaping<T>,
        alpha: T,
        channel_gain: T,
        noise: NoiseMixture<T>,
    ) -> Result<Self> {
        if !(alpha > T::zero() && alpha <= T::one()) {
            return invalid(format!("alpha must lie in (0, 1], got {alpha}"));
        }
        if !(channel_gain > T::zero()) {
            return invalid(format!("channel gain must be positive, got {channel_gain}"));
        }
        Ok(Self {
            shaping,
            alpha,
            channel_gain,
            noise,
        })
    }

    /// Noise power after dividing the channel by its gain.
    pub fn normalized_noise_power(&self) -> Result<T> {
        Ok(self.noise.variance()? / (self.channel_gain * self.channel_gain))
    }
}
