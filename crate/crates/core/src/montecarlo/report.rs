use rayon::prelude::*;
use serde::Serialize;

use crate::density::{power_bounds, wrap, GridDensity};
use crate::dpc::ScalarAnalysis;
use crate::mimo::{capacity_targets, Part};
use crate::montecarlo::estimators::{
    chi_square_uniform, mean_and_se, mutual_information_mm, Binning, ChiSquare, HistogramDensity,
};
use crate::montecarlo::simulate::{ChannelSamples, DitherMode, Prepared, SimConfig, TrialTable};

/// Bins for histogram-versus-grid comparisons of continuous quantities.
pub const TV_BINS: usize = 64;
/// Bins per dimension for independence estimates.
pub const MI_BINS: usize = 16;
/// Bins over the modulo interval for the entropy-based rate estimate.
pub const RATE_BINS: usize = 256;
/// Runs shorter than this only warn about statistical checks.
pub const MIN_TRIALS: usize = 10_000;

/// Trial count at which the thresholds below are stated.
pub const REFERENCE_TRIALS: usize = 100_000;

pub const TV_LIMIT: f64 = 0.03;
pub const MI_LIMIT: f64 = 0.01;
pub const CHI2_P_LIMIT: f64 = 1e-3;
pub const CHAIN_LIMIT: f64 = 1e-9;

/// Histogram checks of one channel's marginals against the grid densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginalReport {
    pub chi2: ChiSquare,
    pub tv_x: f64,
    pub tv_z: f64,
}

/// Growth of the histogram sampling floor of the total variation below [`REFERENCE_TRIALS`]:
/// `E|p_hat - p|` summed over `bins` cells is about `sqrt(bins / (2 pi n))`.
pub fn tv_allowance(n: usize, bins: usize) -> f64 {
    let floor = |n: usize| (bins as f64 / (2.0 * std::f64::consts::PI * n as f64)).sqrt();
    (floor(n) - floor(REFERENCE_TRIALS)).max(0.0)
}

/// Growth of the plug-in mutual information bias `(ka - 1)(kb - 1) / 2n` below
/// [`REFERENCE_TRIALS`].
pub fn mi_allowance(n: usize, ka: usize, kb: usize) -> f64 {
    let dof = ((ka - 1) * (kb - 1)) as f64;
    (dof / (2.0 * n as f64) - dof / (2.0 * REFERENCE_TRIALS as f64)).max(0.0)
}

/// Range `[-L, L)` holding the bulk of a centred density: six standard deviations, clipped to
/// the grid support.
fn bulk_range(f: &GridDensity) -> f64 {
    let std = f.second_moment().sqrt();
    (6.0 * std).min(f.lo().abs().max(f.hi().abs()))
}

/// Masses of `f` on the bins of `b`, with the end bins absorbing the tails.
fn binned_masses(f: &GridDensity, b: &Binning) -> Vec<f64> {
    let mut edges = b.edges();
    let pad = f.spacing();
    edges[0] = edges[0].min(f.lo() - pad);
    let last = edges.len() - 1;
    edges[last] = edges[last].max(f.hi() + pad);
    f.bin_masses(&edges)
}

/// Uniformity of `U`, and total variation of the `x` and `z'` histograms from `p = q / d` and
/// the `Z'` density.
pub fn marginal_tests(s: &ChannelSamples, an: &ScalarAnalysis, order: usize) -> MarginalReport {
    let mut counts = vec![0u64; order];
    for &u in &s.u_index {
        counts[u as usize] += 1;
    }
    let p = &an.inputs.own.p;
    let a = an.inputs.own.shaping.interval;
    let bx = Binning::new(-a / 2.0, a / 2.0, TV_BINS);
    let tv_x = HistogramDensity::new(&s.x, bx).total_variation(&binned_masses(p, &bx));
    let l = bulk_range(&an.z_prime);
    let bz = Binning::new(-l, l, TV_BINS);
    let tv_z = HistogramDensity::new(&s.z_prime, bz).total_variation(&binned_masses(&an.z_prime, &bz));
    MarginalReport {
        chi2: chi_square_uniform(&counts),
        tv_x,
        tv_z,
    }
}

/// Estimate of `h(Y') - h(Z' mod A) - log A + h(X)` from histograms of the samples, with the
/// standard error of the per-sample information density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEstimate {
    pub rate: f64,
    pub se: f64,
    pub i_u_y: f64,
    pub h_y: f64,
    pub h_zmod: f64,
    pub h_x: f64,
}

pub fn estimate_rate(s: &ChannelSamples, a: f64) -> RateEstimate {
    let b = Binning::new(-a / 2.0, a / 2.0, RATE_BINS);
    let zmod: Vec<f64> = s.y_prime.iter().zip(&s.u).map(|(y, u)| wrap(y - u, a)).collect();
    let hy = HistogramDensity::new(&s.y_prime, b);
    let hz = HistogramDensity::new(&zmod, b);
    let hx = HistogramDensity::new(&s.x, b);
    let log_a = a.ln();
    let per_sample: Vec<f64> = (0..s.x.len())
        .map(|t| {
            hy.neg_log_density(s.y_prime[t]) - hz.neg_log_density(zmod[t]) - log_a
                + hx.neg_log_density(s.x[t])
        })
        .collect();
    let (_, se) = mean_and_se(&per_sample);
    let (h_y, h_zmod, h_x) = (hy.entropy(), hz.entropy(), hx.entropy());
    RateEstimate {
        rate: h_y - h_zmod - log_a + h_x,
        se,
        i_u_y: h_y - h_zmod,
        h_y,
        h_zmod,
        h_x,
    }
}

/// Mutual information between a grouped `U` and the jointly binned `(x, z')`.
pub fn independence_u_xz(s: &ChannelSamples, an: &ScalarAnalysis, order: usize) -> f64 {
    let groups = order.min(MI_BINS);
    let a = an.inputs.own.shaping.interval;
    let bx = Binning::new(-a / 2.0, a / 2.0, MI_BINS);
    let l = bulk_range(&an.z_prime);
    let bz = Binning::new(-l, l, MI_BINS);
    let u: Vec<usize> = s.u_index.iter().map(|&i| i as usize * groups / order).collect();
    let xz: Vec<usize> = s
        .x
        .iter()
        .zip(&s.z_prime)
        .map(|(&x, &z)| bx.index(x) * MI_BINS + bz.index(z))
        .collect();
    mutual_information_mm(&u, groups, &xz, MI_BINS * MI_BINS)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairMi {
    pub a: usize,
    pub b: usize,
    pub mi: f64,
}

/// Mutual information between every pair of distinct real channel inputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndependenceReport {
    pub pairs: Vec<PairMi>,
    pub max_mi: f64,
}

pub fn independence_test(streams: &[Vec<f64>], interval: f64) -> IndependenceReport {
    let b = Binning::new(-interval / 2.0, interval / 2.0, MI_BINS);
    let binned: Vec<Vec<usize>> = streams
        .iter()
        .map(|s| s.iter().map(|&x| b.index(x)).collect())
        .collect();
    let idx: Vec<(usize, usize)> = (0..streams.len())
        .flat_map(|i| (i + 1..streams.len()).map(move |j| (i, j)))
        .collect();
    let pairs: Vec<PairMi> = idx
        .par_iter()
        .map(|&(i, j)| PairMi {
            a: i,
            b: j,
            mi: mutual_information_mm(&binned[i], MI_BINS, &binned[j], MI_BINS),
        })
        .collect();
    let max_mi = pairs.iter().map(|p| p.mi).fold(f64::NEG_INFINITY, f64::max);
    IndependenceReport {
        max_mi: if pairs.is_empty() { 0.0 } else { max_mi },
        pairs,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelReport {
    pub receiver: usize,
    pub index: usize,
    pub part: Part,
    pub sigma: f64,
    pub alpha: f64,
    pub grid_rate: f64,
    pub empirical: RateEstimate,
    /// `log(1 + sigma^2) / 2`.
    pub capacity_target: f64,
    pub marginals: MarginalReport,
    pub mi_u_xz: f64,
    pub power: f64,
    pub power_se: f64,
    pub power_bounds: (f64, f64),
    pub chain_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReceiverRates {
    pub receiver: usize,
    pub position: usize,
    pub empirical: f64,
    pub grid: f64,
    pub target: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimReport {
    pub n_trials: usize,
    pub seed: u64,
    pub dither: DitherMode,
    pub order: usize,
    pub ratio: f64,
    pub channels: Vec<ChannelReport>,
    pub receivers: Vec<ReceiverRates>,
    pub independence: IndependenceReport,
    pub warnings: Vec<String>,
}

impl SimReport {
    pub fn build(prep: &Prepared, cfg: &SimConfig, table: &TrialTable) -> Self {
        let order = cfg.params.order;
        let channels: Vec<ChannelReport> = prep
            .channels
            .par_iter()
            .zip(&prep.analyses)
            .zip(&table.channels)
            .map(|((ch, an), s)| {
                let a = ch.config.shaping.interval;
                let x2: Vec<f64> = s.x.iter().map(|x| x * x).collect();
                let (power, power_se) = mean_and_se(&x2);
                let own = &an.inputs.own;
                let bounds = power_bounds(&own.q, &own.extrema).unwrap_or((f64::NAN, f64::NAN));
                ChannelReport {
                    receiver: ch.receiver,
                    index: ch.index,
                    part: ch.part,
                    sigma: ch.config.channel_gain,
                    alpha: ch.config.alpha,
                    grid_rate: an.report.rate,
                    empirical: estimate_rate(s, a),
                    capacity_target: 0.5 * ch.config.channel_gain.powi(2).ln_1p(),
                    marginals: marginal_tests(s, an, order),
                    mi_u_xz: independence_u_xz(s, an, order),
                    power,
                    power_se,
                    power_bounds: bounds,
                    chain_error: s.chain_error,
                }
            })
            .collect();
        let targets = capacity_targets(&prep.plan);
        let receivers = prep
            .plan
            .receivers
            .iter()
            .map(|rp| {
                let mine = channels.iter().filter(|c| c.receiver == rp.receiver);
                ReceiverRates {
                    receiver: rp.receiver,
                    position: rp.position,
                    empirical: mine.clone().map(|c| c.empirical.rate).sum(),
                    grid: mine.map(|c| c.grid_rate).sum(),
                    target: targets
                        .iter()
                        .filter(|t| t.receiver == rp.receiver)
                        .map(|t| t.complex)
                        .sum(),
                }
            })
            .collect();
        let interval = cfg.params.shaping().map(|s| s.interval).unwrap_or(f64::NAN);
        let mut warnings = Vec::new();
        if cfg.n_trials < MIN_TRIALS {
            warnings.push(format!(
                "{} trials is below {MIN_TRIALS}; statistical checks are not enforced",
                cfg.n_trials
            ));
        }
        Self {
            n_trials: cfg.n_trials,
            seed: cfg.seed,
            dither: cfg.dither,
            order,
            ratio: cfg.params.ratio,
            channels,
            receivers,
            independence: independence_test(&table.streams, interval),
            warnings,
        }
    }

    /// Invariant violations. Statistical checks count only with at least [`MIN_TRIALS`] trials.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        let n = self.n_trials;
        let stats = n >= MIN_TRIALS;
        let tv_limit = TV_LIMIT + tv_allowance(n, TV_BINS);
        let groups = self.order.min(MI_BINS);
        let mi_u_limit = MI_LIMIT + mi_allowance(n, groups, MI_BINS * MI_BINS);
        let mi_pair_limit = MI_LIMIT + mi_allowance(n, MI_BINS, MI_BINS);
        for c in &self.channels {
            let tag = format!("receiver {} subchannel {} {:?}", c.receiver + 1, c.index + 1, c.part);
            if !(c.chain_error < CHAIN_LIMIT) {
                out.push(format!("{tag}: receiver chain error {:e}", c.chain_error));
            }
            if c.grid_rate < 0.0 {
                out.push(format!("{tag}: negative grid rate {}", c.grid_rate));
            }
            if !stats {
                continue;
            }
            let e = &c.empirical;
            if (e.rate - c.grid_rate).abs() > 3.0 * e.se {
                out.push(format!(
                    "{tag}: empirical rate {:.5} differs from grid rate {:.5} by more than 3 se ({:.5})",
                    e.rate, c.grid_rate, e.se
                ));
            }
            if c.marginals.chi2.p_value <= CHI2_P_LIMIT {
                out.push(format!("{tag}: U uniformity p-value {:e}", c.marginals.chi2.p_value));
            }
            if c.marginals.tv_x >= tv_limit {
                out.push(format!("{tag}: x histogram TV {:.4}", c.marginals.tv_x));
            }
            if c.marginals.tv_z >= tv_limit {
                out.push(format!("{tag}: z' histogram TV {:.4}", c.marginals.tv_z));
            }
            if c.mi_u_xz >= mi_u_limit {
                out.push(format!("{tag}: I(U; X, Z') estimate {:.4}", c.mi_u_xz));
            }
            let (lo, hi) = c.power_bounds;
            if c.power < lo - 5.0 * c.power_se || c.power > hi + 5.0 * c.power_se {
                out.push(format!("{tag}: power {:.5} outside [{lo:.5}, {hi:.5}]", c.power));
            }
        }
        if stats && self.independence.max_mi >= mi_pair_limit {
            out.push(format!(
                "channel inputs not independent: max pairwise MI {:.4}",
                self.independence.max_mi
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// Header and rows of the per-channel rate table.
    pub fn rate_table(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        let header = vec![
            "receiver",
            "subchannel",
            "part",
            "sigma",
            "alpha",
            "grid_rate",
            "empirical_rate",
            "empirical_se",
            "target",
            "tv_x",
            "tv_z",
            "chi2_p",
            "mi_u_xz",
        ];
        let rows = self
            .channels
            .iter()
            .map(|c| {
                vec![
                    (c.receiver + 1).to_string(),
                    (c.index + 1).to_string(),
                    format!("{:?}", c.part),
                    format!("{:.6}", c.sigma),
                    format!("{:.6}", c.alpha),
                    format!("{:.6}", c.grid_rate),
                    format!("{:.6}", c.empirical.rate),
                    format!("{:.6}", c.empirical.se),
                    format!("{:.6}", c.capacity_target),
                    format!("{:.6}", c.marginals.tv_x),
                    format!("{:.6}", c.marginals.tv_z),
                    format!("{:.6e}", c.marginals.chi2.p_value),
                    format!("{:.6}", c.mi_u_xz),
                ]
            })
            .collect();
        (header, rows)
    }
}

/// Simulates and summarises in one call.
pub fn run(prep: &Prepared, cfg: &SimConfig) -> crate::error::Result<(TrialTable, SimReport)> {
    let table = crate::montecarlo::simulate::simulate(prep, cfg)?;
    let report = SimReport::build(prep, cfg, &table);
    Ok((table, report))
}
