use rand::Rng;
use serde::Serialize;

use crate::density::{d_extrema, wrap, GridDensity};
use crate::dpc::config::{AskAlphabet, ScalarDpcConfig};
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// `P_X / (P_X + P_Z)`.
pub fn mmse_alpha<T: Real>(px: T, pz: T) -> Result<T> {
    if !(px > T::zero()) || !(pz > T::zero()) || !px.is_finite() || !pz.is_finite() {
        return invalid(format!("mmse_alpha needs positive powers, got P_X = {px}, P_Z = {pz}"));
    }
    Ok(px / (px + pz))
}

/// `z' = (alpha - 1) x + alpha z`.
pub fn effective_noise<T: Real>(x: T, z: T, alpha: T) -> T {
    (alpha - T::one()) * x + alpha * z
}

/// `(alpha y + d) mod A`.
pub fn receiver_front<T: Real>(y: T, alpha: T, d: T, a: T) -> T {
    wrap(alpha * y + d, a)
}

/// `P(U = u | s')` for every alphabet point.
///
/// The shaping rule weighs `u` by `q((u - s') mod A) / d((u - s') mod A)`. The points
/// `(u - s') mod A` are one `A/M` coset, so `d` takes the same value on all of them and the
/// probabilities are the normalised `q` values.
pub fn shaping_probabilities<T: Real>(
    s_prime: T,
    q: &GridDensity<T>,
    alphabet: &AskAlphabet<T>,
) -> Result<Vec<T>> {
    let a = alphabet.interval();
    let mut w: Vec<T> = alphabet
        .points()
        .iter()
        .map(|&u| q.eval(wrap(u - s_prime, a)))
        .collect();
    let total = w.iter().fold(T::zero(), |s, &v| s + v);
    if !(total > T::zero()) {
        return Err(Error::DegenerateShaping(format!(
            "all shaping weights vanish at s' = {s_prime}"
        )));
    }
    for v in &mut w {
        *v /= total;
    }
    Ok(w)
}

/// Index drawn from `probs` using one uniform variate in `[0, 1)`.
pub(crate) fn pick_index<T: Real>(probs: &[T], r: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p.as_f64();
        if r < acc {
            return i;
        }
    }
    // rounding left a sliver past the last cumulative sum
    probs.iter().rposition(|p| *p > T::zero()).unwrap_or(0)
}

/// Draws an alphabet index by the shaping rule.
pub fn shaping_sample<T: Real, R: Rng + ?Sized>(
    s_prime: T,
    q: &GridDensity<T>,
    alphabet: &AskAlphabet<T>,
    rng: &mut R,
) -> Result<usize> {
    let probs = shaping_probabilities(s_prime, q, alphabet)?;
    Ok(pick_index(&probs, rng.random::<f64>()))
}

/// One encoded symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Encoded<T: Real = f64> {
    pub u_index: usize,
    pub u: T,
    pub d: T,
    pub s_prime: T,
    pub x: T,
}

/// Modulo-ASK encoder with truncated-Gaussian probabilistic shaping.
#[derive(Debug, Clone)]
pub struct Encoder<T: Real = f64> {
    alpha: T,
    q: GridDensity<T>,
    alphabet: AskAlphabet<T>,
}

impl<T: Real> Encoder<T> {
    pub fn new(cfg: &ScalarDpcConfig<T>) -> Result<Self> {
        let q = cfg.shaping.shaping_density()?;
        Self::from_parts(q, cfg.shaping.alphabet(), cfg.alpha)
    }

    pub fn from_parts(q: GridDensity<T>, alphabet: AskAlphabet<T>, alpha: T) -> Result<Self> {
        d_extrema(&q, alphabet.interval(), alphabet.len())?.require_usable()?;
        Ok(Self { alpha, q, alphabet })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn interval(&self) -> T {
        self.alphabet.interval()
    }

    pub fn alphabet(&self) -> &AskAlphabet<T> {
        &self.alphabet
    }

    pub fn shaping_density(&self) -> &GridDensity<T> {
        &self.q
    }

    /// Encodes `s` with a fresh dither and shaping draw from `rng`.
    pub fn encode<R: Rng + ?Sized>(&self, s: T, rng: &mut R) -> Result<Encoded<T>> {
        let a = self.interval();
        let d = wrap(T::lit(rng.random::<f64>() - 0.5) * a, a);
        let r = rng.random::<f64>();
        self.encode_with(s, d, |probs| pick_index(probs, r))
    }

    /// Encodes `s` with a given dither; `pick` chooses the alphabet index from the shaping
    /// probabilities.
    pub fn encode_with(&self, s: T, d: T, pick: impl FnOnce(&[T]) -> usize) -> Result<Encoded<T>> {
        let a = self.interval();
        let s_prime = wrap(self.alpha * s + d, a);
        let probs = shaping_probabilities(s_prime, &self.q, &self.alphabet)?;
        let u_index = pick(&probs);
        if u_index >= self.alphabet.len() {
            return invalid(format!("alphabet index {u_index} out of range"));
        }
        let u = self.alphabet.point(u_index);
        Ok(Encoded {
            u_index,
            u,
            d,
            s_prime,
            x: wrap(u - s_prime, a),
        })
    }
}
