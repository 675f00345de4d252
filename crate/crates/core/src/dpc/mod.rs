//! Scalar dirty-paper coding with modulo-ASK alphabets and truncated-Gaussian shaping.

mod config;
mod densities;
mod encoder;

pub use config::{
    default_cells, AskAlphabet, NoiseMixture, ScalarDpcConfig, ShapedInput, ShapedTerm, Shaping,
};
pub use densities::{
    analyze, analyze_with, fold_to_interval, h_yprime_bounds, rate, y_prime_density,
    y_prime_extrema, z_prime_density, z_prime_density_bounds, MixtureInputs, RateReport,
    ScalarAnalysis, YPrimeExtrema,
};
pub(crate) use encoder::pick_index;
pub use encoder::{
    effective_noise, mmse_alpha, receiver_front, shaping_probabilities, shaping_sample, Encoded,
    Encoder,
};
