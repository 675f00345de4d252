//! Seeded end-to-end simulation of the decomposed broadcast channel and statistical checks of
//! the samples against the grid analysis.

mod estimators;
mod report;
mod rng;
mod simulate;

pub use estimators::{
    chi_square_uniform, entropy_mm, histogram, ks_critical, ks_statistic, mean_and_se,
    mutual_information_mm, Binning, ChiSquare, HistogramDensity,
};
pub use report::{
    estimate_rate, independence_test, independence_u_xz, marginal_tests, run, ChannelReport,
    IndependenceReport, MarginalReport, PairMi, RateEstimate, ReceiverRates, SimReport,
    mi_allowance, tv_allowance, CHAIN_LIMIT, CHI2_P_LIMIT, MIN_TRIALS, MI_BINS, MI_LIMIT, RATE_BINS,
    REFERENCE_TRIALS, TV_BINS, TV_LIMIT,
};
pub use rng::{stream_rng, StreamTag};
pub use simulate::{
    interference_with_zeroed, known_interference, simulate, ChannelSamples, CVector, DitherMode,
    Prepared, SimConfig, TrialRecord, TrialTable,
};
