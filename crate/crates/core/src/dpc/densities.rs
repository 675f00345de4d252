//! Grid densities of the effective noise `Z'`, the receiver statistic `Y'`, and the rates and
//! entropy brackets built from them.

use serde::Serialize;

use crate::density::{convolve_all, entropy, entropy_bounds_x, GridDensity, Parity, MASS_TOL};
use crate::dpc::config::{AskAlphabet, ScalarDpcConfig, ShapedInput};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Gaussian components are kept out to this many standard deviations.
const GAUSSIAN_CLIP: f64 = 10.0;

/// Which input density stands in for each shaped term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Variant {
    Exact,
    Lower,
    Upper,
}

fn pick<T: Real>(input: &ShapedInput<T>, v: Variant) -> Result<GridDensity<T>> {
    match v {
        Variant::Exact => Ok(input.p.clone()),
        Variant::Lower => input.lower(),
        Variant::Upper => input.upper(),
    }
}

/// The shaped inputs a configuration refers to, resolved to grid densities.
#[derive(Debug, Clone)]
pub struct MixtureInputs<T: Real = f64> {
    pub own: ShapedInput<T>,
    pub terms: Vec<ShapedInput<T>>,
}

impl<T: Real> MixtureInputs<T> {
    pub fn resolve(cfg: &ScalarDpcConfig<T>) -> Result<Self> {
        let own = cfg.shaping.input()?;
        let terms = cfg
            .noise
            .shaped_terms
            .iter()
            .map(|t| t.shaping.input())
            .collect::<Result<_>>()?;
        Ok(Self { own, terms })
    }
}

fn z_prime_variant<T: Real>(
    cfg: &ScalarDpcConfig<T>,
    inputs: &MixtureInputs<T>,
    v: Variant,
) -> Result<GridDensity<T>> {
    if inputs.terms.len() != cfg.noise.shaped_terms.len() {
        return Err(Error::InvalidMixture(format!(
            "{} shaped inputs for {} shaped terms",
            inputs.terms.len(),
            cfg.noise.shaped_terms.len()
        )));
    }
    let h = cfg.shaping.spacing();
    let alpha = cfg.alpha;
    let g = cfg.channel_gain;
    let mut scaled: Vec<(T, GridDensity<T>)> = vec![(alpha - T::one(), pick(&inputs.own, v)?)];
    for (t, input) in cfg.noise.shaped_terms.iter().zip(&inputs.terms) {
        if !t.coefficient.is_finite() {
            return Err(Error::InvalidMixture("non-finite mixture coefficient".into()));
        }
        if t.coefficient != T::zero() {
            scaled.push((alpha * t.coefficient / g, pick(input, v)?));
        }
    }
    let mut parts = Vec::with_capacity(scaled.len() + 1);
    // the own term is resampled with zero on a cell edge, everything else with zero on a centre,
    // so the sum lands on the even grid of the modulo interval
    for (i, (c, f)) in scaled.iter().enumerate() {
        let parity = if i == 0 { Parity::Even } else { Parity::Odd };
        parts.push(f.scale_resample(*c, h, parity)?);
    }
    let sigma = alpha * cfg.noise.gaussian_std() / g;
    if !sigma.is_finite() {
        return Err(Error::InvalidMixture("non-finite Gaussian coefficient".into()));
    }
    if sigma > T::zero() {
        parts.push(GridDensity::gaussian(sigma, h, GAUSSIAN_CLIP, Parity::Odd)?);
    }
    let all_zero = scaled.iter().all(|(c, _)| *c == T::zero()) && sigma == T::zero();
    if all_zero {
        return Err(Error::InvalidMixture("effective noise has zero variance".into()));
    }
    convolve_all(&parts)
}

/// Density of `Z' = (alpha - 1) X + (alpha / g) (sum_j c_j X_j + sum_h b_h W_h)` on a grid
/// whose spacing divides the modulo interval.
pub fn z_prime_density<T: Real>(
    cfg: &ScalarDpcConfig<T>,
    inputs: &MixtureInputs<T>,
) -> Result<GridDensity<T>> {
    z_prime_variant(cfg, inputs, Variant::Exact)
}

/// Lower and upper envelopes of the `Z'` density from replacing each shaped input by `q / d_max`
/// and `q / d_min`.
pub fn z_prime_density_bounds<T: Real>(
    cfg: &ScalarDpcConfig<T>,
    inputs: &MixtureInputs<T>,
) -> Result<(GridDensity<T>, GridDensity<T>)> {
    for ext in std::iter::once(&inputs.own).chain(&inputs.terms).map(|i| i.extrema) {
        ext.require_usable()?;
    }
    Ok((
        z_prime_variant(cfg, inputs, Variant::Lower)?,
        z_prime_variant(cfg, inputs, Variant::Upper)?,
    ))
}

/// `Z' mod A` on the `n`-cell grid of `[-A/2, A/2)`.
pub fn fold_to_interval<T: Real>(f: &GridDensity<T>, a: T) -> Result<GridDensity<T>> {
    let n = (a / f.spacing()).round().to_usize().unwrap_or(0);
    f.fold_mod(a, n)
}

/// Density of `Y' = (U + Z') mod A` with `U` uniform on the alphabet.
pub fn y_prime_density<T: Real>(
    alphabet: &AskAlphabet<T>,
    p_zprime: &GridDensity<T>,
) -> Result<GridDensity<T>> {
    let a = alphabet.interval();
    let folded = fold_to_interval(p_zprime, a)?;
    mix_shifts(alphabet, &folded)
}

fn mix_shifts<T: Real>(alphabet: &AskAlphabet<T>, folded: &GridDensity<T>) -> Result<GridDensity<T>> {
    let mut acc = vec![T::zero(); folded.n()];
    for &u in alphabet.points() {
        let shifted = folded.shift_circular(u)?;
        for (o, v) in acc.iter_mut().zip(shifted.values()) {
            *o += *v;
        }
    }
    let inv_m = T::one() / T::from_count(alphabet.len());
    for o in &mut acc {
        *o *= inv_m;
    }
    GridDensity::new(folded.lo(), folded.hi(), acc)
}

/// Pointwise bounds on the `Y'` density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YPrimeExtrema<T: Real = f64> {
    pub p_min: T,
    pub p_max: T,
}

impl<T: Real> YPrimeExtrema<T> {
    pub fn is_usable(&self) -> bool {
        self.p_min > T::zero()
    }
}

/// `p_min = (1/A)(m_lower - (A/M) p_lower(0))` and `p_max = (1/A)(m_upper + (A/M) p_upper(0))`,
/// where `m_lower` and `m_upper` are the masses of the envelopes (`1/d_max` and `1/d_min` with a
/// single shaped term).
pub fn y_prime_extrema<T: Real>(
    p_lower: &GridDensity<T>,
    p_upper: &GridDensity<T>,
    a: T,
    m: usize,
) -> YPrimeExtrema<T> {
    let step = a / T::from_count(m);
    let peak = |f: &GridDensity<T>| f.eval(T::zero()).max(f.max_value());
    YPrimeExtrema {
        p_min: (p_lower.mass() - step * peak(p_lower)) / a,
        p_max: (p_upper.mass() + step * peak(p_upper)) / a,
    }
}

/// `(-log p_max, -log p_min)`.
pub fn h_yprime_bounds<T: Real>(ext: &YPrimeExtrema<T>) -> Result<(T, T)> {
    if !ext.is_usable() {
        return Err(Error::DegenerateShaping(format!(
            "p_min = {} <= 0; the h(Y') bracket needs a larger M",
            ext.p_min
        )));
    }
    Ok((-ext.p_max.ln(), -ext.p_min.ln()))
}

/// Entropies and rates of one scalar channel, in nats per real dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateReport<T: Real = f64> {
    pub h_y: T,
    pub h_zmod: T,
    pub h_x: T,
    pub log_a: T,
    /// `I(U; Y') = h(Y') - h(Z' mod A)`.
    pub i_u_y: T,
    /// `I(U; S') = log A - h(X)`.
    pub i_u_s: T,
    /// `I(U; Y') - I(U; S')`.
    pub rate: T,
}

impl<T: Real> RateReport<T> {
    pub fn from_entropies(h_y: T, h_zmod: T, h_x: T, a: T) -> Self {
        let log_a = a.ln();
        let i_u_y = h_y - h_zmod;
        let i_u_s = log_a - h_x;
        Self {
            h_y,
            h_zmod,
            h_x,
            log_a,
            i_u_y,
            i_u_s,
            rate: i_u_y - i_u_s,
        }
    }
}

/// Everything the grid computation produces for one configuration.
#[derive(Debug, Clone)]
pub struct ScalarAnalysis<T: Real = f64> {
    pub inputs: MixtureInputs<T>,
    pub z_prime: GridDensity<T>,
    pub z_lower: GridDensity<T>,
    pub z_upper: GridDensity<T>,
    pub z_mod: GridDensity<T>,
    pub y_prime: GridDensity<T>,
    pub y_extrema: YPrimeExtrema<T>,
    pub report: RateReport<T>,
    /// Bracket on `h(Y')`, present when `p_min > 0`.
    pub h_y_bounds: Option<(T, T)>,
    /// Bracket on the rate from the `h(Y')` and `h(X)` brackets, present when `p_min > 0`.
    pub rate_bounds: Option<(T, T)>,
}

pub fn analyze<T: Real>(cfg: &ScalarDpcConfig<T>) -> Result<ScalarAnalysis<T>> {
    let inputs = MixtureInputs::resolve(cfg)?;
    analyze_with(cfg, inputs)
}

pub fn analyze_with<T: Real>(
    cfg: &ScalarDpcConfig<T>,
    inputs: MixtureInputs<T>,
) -> Result<ScalarAnalysis<T>> {
    let a = cfg.shaping.interval;
    let alphabet = cfg.shaping.alphabet();
    let z_prime = z_prime_density(cfg, &inputs)?;
    let (z_lower, z_upper) = z_prime_density_bounds(cfg, &inputs)?;
    let z_mod = fold_to_interval(&z_prime, a)?;
    z_mod.check_unit_mass(MASS_TOL)?;
    let y_prime = mix_shifts(&alphabet, &z_mod)?;
    let y_extrema = y_prime_extrema(&z_lower, &z_upper, a, alphabet.len());
    let report = RateReport::from_entropies(
        entropy(&y_prime)?,
        entropy(&z_mod)?,
        entropy(&inputs.own.p)?,
        a,
    );
    let h_y_bounds = h_yprime_bounds(&y_extrema).ok();
    let rate_bounds = match h_y_bounds {
        Some((hy_lo, hy_hi)) => {
            let (hx_lo, hx_hi) = entropy_bounds_x(&inputs.own.q, &inputs.own.extrema)?;
            Some((
                hy_lo - report.h_zmod - report.log_a + hx_lo,
                hy_hi - report.h_zmod - report.log_a + hx_hi,
            ))
        }
        None => None,
    };
    Ok(ScalarAnalysis {
        inputs,
        z_prime,
        z_lower,
        z_upper,
        z_mod,
        y_prime,
        y_extrema,
        report,
        h_y_bounds,
        rate_bounds,
    })
}

/// Achievable rate in nats per real dimension, computed on the grid.
pub fn rate<T: Real>(cfg: &ScalarDpcConfig<T>) -> Result<T> {
    Ok(analyze(cfg)?.report.rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{convolve_direct, is_symmetric, is_unimodal};
    use crate::dpc::config::{NoiseMixture, ShapedTerm, Shaping};
    use approx::assert_abs_diff_eq;

    fn fig_config() -> ScalarDpcConfig {
        let s = Shaping::<f64>::new(4, 6.0, 1.8).unwrap();
        let px = s.input().unwrap().power;
        ScalarDpcConfig::new(s, 1.0, NoiseMixture::gaussian(px.sqrt())).unwrap()
    }

    #[test]
    fn single_convolution_form() {
        let cfg = fig_config();
        let inputs = MixtureInputs::resolve(&cfg).unwrap();
        let z = z_prime_density(&cfg, &inputs).unwrap();
        let h = cfg.shaping.spacing();
        let px = inputs.own.p.scale_resample(-0.5, h, Parity::Even).unwrap();
        let sigma = 0.5 * cfg.noise.gaussian_std();
        let pz = GridDensity::gaussian(sigma, h, 10.0, Parity::Odd).unwrap();
        let direct = convolve_direct(&px, &pz).unwrap();
        assert_eq!(z.n(), direct.n());
        for (a, b) in z.values().iter().zip(direct.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
        assert!(is_symmetric(&z, 1e-9));
        assert!(is_unimodal(&z, 1e-9));
        assert_abs_diff_eq!(z.mass(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn pure_gaussian_noise() {
        let s = Shaping::<f64>::new(4, 6.0, 1.8).unwrap();
        let cfg = ScalarDpcConfig::with_alpha(s, 1.0, 1.0, NoiseMixture::gaussian(1.0)).unwrap();
        let z = z_prime_density(&cfg, &MixtureInputs::resolve(&cfg).unwrap()).unwrap();
        assert_abs_diff_eq!(z.second_moment(), 1.0, epsilon = 1e-4);
        assert_eq!(z.atom_at_zero(), 0.0);
    }

    #[test]
    fn envelopes_sandwich_exact_density() {
        let cfg = fig_config();
        let inputs = MixtureInputs::resolve(&cfg).unwrap();
        let z = z_prime_density(&cfg, &inputs).unwrap();
        let (lo, hi) = z_prime_density_bounds(&cfg, &inputs).unwrap();
        for ((l, p), u) in lo.values().iter().zip(z.values()).zip(hi.values()) {
            assert!(l <= &(p + 1e-15) && p <= &(u + 1e-15), "{l} {p} {u}");
        }
        assert!(is_symmetric(&lo, 1e-9) && is_unimodal(&lo, 1e-9));
        assert!(is_symmetric(&hi, 1e-9) && is_unimodal(&hi, 1e-9));
    }

    #[test]
    fn flat_shaping_has_tight_envelopes() {
        let s = Shaping::<f64>::new(4, 6.0, 1e6).unwrap();
        let cfg = ScalarDpcConfig::with_alpha(s, 0.5, 1.0, NoiseMixture::gaussian(1.0)).unwrap();
        let inputs = MixtureInputs::resolve(&cfg).unwrap();
        let z = z_prime_density(&cfg, &inputs).unwrap();
        let (lo, hi) = z_prime_density_bounds(&cfg, &inputs).unwrap();
        let scale = 1.0 / inputs.own.extrema.d_max;
        for ((l, p), u) in lo.values().iter().zip(z.values()).zip(hi.values()) {
            // envelopes of a flat shaping are the exact density rescaled by 1/d_max and 1/d_min
            assert_abs_diff_eq!(*l, p * scale, epsilon = 1e-9);
            assert!(*u >= p - 1e-15);
        }
    }

    #[test]
    fn y_prime_is_periodic_and_symmetric() {
        let cfg = fig_config();
        let an = analyze(&cfg).unwrap();
        let y = &an.y_prime;
        let period = y.n() / 4;
        let v = y.values();
        let err = (0..y.n())
            .map(|i| (v[i] - v[(i + period) % y.n()]).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
        assert!(is_symmetric(y, 1e-9));
        assert_abs_diff_eq!(y.mass(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn near_noiseless_y_prime_spikes_at_alphabet() {
        let s = Shaping::<f64>::new(4, 6.0, 1.8).unwrap();
        let cfg = ScalarDpcConfig::with_alpha(s, 1.0, 1.0, NoiseMixture::gaussian(1e-4)).unwrap();
        let an = analyze(&cfg).unwrap();
        let y = &an.y_prime;
        let h = y.spacing();
        for &u in cfg.shaping.alphabet().points() {
            let mass: f64 = y
                .centers()
                .zip(y.values())
                .filter(|(x, _): &(f64, &f64)| (x - u).abs() < 0.01)
                .map(|(_, v)| v * h)
                .sum();
            assert_abs_diff_eq!(mass, 0.25, epsilon = 1e-9);
        }
    }

    #[test]
    fn uniform_noise_gives_zero_rate() {
        let s = Shaping::<f64>::new(4, 6.0, 1e8).unwrap();
        // Z' = -X with X uniform on the interval
        let cfg = ScalarDpcConfig {
            shaping: s,
            alpha: 1e-12,
            channel_gain: 1.0,
            noise: NoiseMixture::default(),
        };
        let inputs = MixtureInputs::resolve(&cfg).unwrap();
        let z = z_prime_density(&cfg, &inputs).unwrap();
        let z_mod = fold_to_interval(&z, 6.0).unwrap();
        let y = y_prime_density(&cfg.shaping.alphabet(), &z).unwrap();
        let r = RateReport::from_entropies(
            entropy(&y).unwrap(),
            entropy(&z_mod).unwrap(),
            entropy(&inputs.own.p).unwrap(),
            6.0,
        );
        assert_abs_diff_eq!(r.i_u_y, 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.rate, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn small_alphabet_bracket_contains_density() {
        let an = analyze(&fig_config()).unwrap();
        let ext = an.y_extrema;
        assert!(ext.is_usable());
        assert!(an.y_prime.values().iter().all(|&v| ext.p_min <= v && v <= ext.p_max));
        let (lo, hi) = an.h_y_bounds.unwrap();
        assert!(lo < an.report.h_y && an.report.h_y < hi);
        let unusable = YPrimeExtrema { p_min: -0.01, p_max: 0.3 };
        assert!(matches!(h_yprime_bounds(&unusable), Err(Error::DegenerateShaping(_))));
    }

    #[test]
    fn matched_rate_near_capacity() {
        let s = Shaping::<f64>::matched(0.5, 256, 6.0).unwrap();
        let cfg = ScalarDpcConfig::new(s, 1.0, NoiseMixture::gaussian(0.5f64.sqrt())).unwrap();
        let an = analyze(&cfg).unwrap();
        let target = 0.5 * 2f64.ln();
        assert!((an.report.rate - target).abs() < 0.05, "{:?}", an.report);
        let (lo, hi) = an.h_y_bounds.unwrap();
        assert!(lo < an.report.h_y && an.report.h_y < hi);
        let (rlo, rhi) = an.rate_bounds.unwrap();
        assert!(rlo <= an.report.rate && an.report.rate <= rhi);
    }

    #[test]
    fn shaped_interference_term() {
        let own = Shaping::<f64>::matched(1.0, 16, 6.0).unwrap();
        let other = Shaping::<f64>::matched(1.0, 16, 6.0).unwrap();
        let noise = NoiseMixture {
            shaped_terms: vec![ShapedTerm {
                coefficient: 0.6,
                shaping: other,
                source: None,
            }],
            gaussian_terms: vec![0.8],
        };
        let cfg = ScalarDpcConfig::new(own, 1.0, noise).unwrap();
        assert_abs_diff_eq!(cfg.alpha, 0.5, epsilon = 1e-9);
        let inputs = MixtureInputs::resolve(&cfg).unwrap();
        let z = z_prime_density(&cfg, &inputs).unwrap();
        assert_abs_diff_eq!(z.mass(), 1.0, epsilon = 1e-9);
        // Var = (1 - a)^2 + a^2 (0.36 + 0.64)
        assert_abs_diff_eq!(z.second_moment(), 0.5, epsilon = 1e-4);
        let (lo, hi) = z_prime_density_bounds(&cfg, &inputs).unwrap();
        assert!(lo.values().iter().zip(z.values()).all(|(l, p)| *l <= p + 1e-15));
        assert!(hi.values().iter().zip(z.values()).all(|(u, p)| *u >= p - 1e-15));
        let m_lo = 1.0 / (inputs.own.extrema.d_max * inputs.terms[0].extrema.d_max);
        assert_abs_diff_eq!(lo.mass(), m_lo, epsilon = 1e-9);
    }

    #[test]
    fn f32_rate() {
        let s = Shaping::<f32>::matched(0.5, 64, 6.0).unwrap();
        let cfg = ScalarDpcConfig::new(s, 1.0, NoiseMixture::gaussian(0.5f32.sqrt())).unwrap();
        let r = rate(&cfg).unwrap();
        assert!((r - 0.3466).abs() < 0.1, "{r}");
    }
}
