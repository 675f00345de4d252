use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::density::wrap;
use crate::dpc::{analyze, effective_noise, pick_index, receiver_front, Encoded, Encoder, ScalarAnalysis};
use crate::error::{invalid, Result};
use crate::mimo::{decompose, real_split, stream_index, ChannelModel, DpcParams, Part, RealChannel, SubchannelPlan};
use crate::montecarlo::rng::{stream_rng, StreamTag};

pub type CVector = DVector<Complex64>;

/// How dithers are drawn across real streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum DitherMode {
    /// One independent dither per real stream.
    #[default]
    Independent,
    /// Every stream of a receiver reuses one dither. Breaks the independence of the channel
    /// inputs; only useful as a negative control.
    SharedWithinReceiver,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub params: DpcParams,
    pub n_trials: usize,
    pub seed: u64,
    pub dither: DitherMode,
}

/// What a real stream carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    /// Index into the real channels.
    Data(usize),
    /// A stream with zero gain: a shaped input with no interference and no receiver.
    Idle,
}

/// Decomposition, real channels, encoders and grid analyses for one model and parameter set.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub model: ChannelModel,
    pub params: DpcParams,
    pub plan: SubchannelPlan,
    pub channels: Vec<RealChannel>,
    pub analyses: Vec<ScalarAnalysis>,
    encoders: Vec<Encoder>,
    idle: Encoder,
    roles: Vec<Role>,
}

impl Prepared {
    pub fn new(model: &ChannelModel, params: DpcParams) -> Result<Self> {
        let plan = decompose(model)?;
        let channels = real_split(&plan, &params)?;
        let analyses = channels
            .par_iter()
            .map(|c| analyze(&c.config))
            .collect::<Result<Vec<_>>>()?;
        let encoders = channels
            .iter()
            .map(|c| Encoder::new(&c.config))
            .collect::<Result<Vec<_>>>()?;
        let shaping = params.shaping()?;
        let idle = Encoder::from_parts(shaping.shaping_density()?, shaping.alphabet(), 1.0)?;
        let n_streams = model.num_receivers() * model.n_t() * 2;
        let mut roles = vec![Role::Idle; n_streams];
        for (i, c) in channels.iter().enumerate() {
            roles[c.stream] = Role::Data(i);
        }
        Ok(Self {
            model: model.clone(),
            params,
            plan,
            channels,
            analyses,
            encoders,
            idle,
            roles,
        })
    }

    pub fn n_streams(&self) -> usize {
        self.roles.len()
    }

    pub fn encoder(&self, channel: usize) -> &Encoder {
        &self.encoders[channel]
    }
}

/// `U_k^H Q_check^{-1/2} H_k sum_l K_l^{1/2} V_l X_l` over receivers `l` encoded before `k`.
///
/// `x_tilde` holds the whitened streams of every receiver, indexed by receiver.
pub fn known_interference(prep: &Prepared, k: usize, x_tilde: &[CVector]) -> CVector {
    let rp = prep.plan.receiver(k);
    let h = &prep.model.receiver(k).h;
    let mut sum = CVector::zeros(prep.model.n_t());
    for &l in prep.model.earlier(k) {
        sum += prep.plan.receiver(l).precoder() * &x_tilde[l];
    }
    rp.filter() * h * sum
}

fn part_of(z: Complex64, part: Part) -> f64 {
    match part {
        Part::Re => z.re,
        Part::Im => z.im,
    }
}

/// Circular distance on `[-A/2, A/2)`.
fn circular_gap(a: f64, b: f64, period: f64) -> f64 {
    wrap(a - b, period).abs()
}

/// Columns of one real channel over all trials.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ChannelSamples {
    pub u_index: Vec<u32>,
    pub u: Vec<f64>,
    pub d: Vec<f64>,
    pub s_prime: Vec<f64>,
    pub x: Vec<f64>,
    pub z_prime: Vec<f64>,
    pub y_prime: Vec<f64>,
    /// Largest circular gap between `(alpha y + d) mod A` and `(u + z') mod A`.
    pub chain_error: f64,
}

/// One trial of one real channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub receiver: usize,
    pub index: usize,
    pub part: Part,
    pub u: f64,
    pub d: f64,
    pub s_prime: f64,
    pub x: f64,
    pub z_prime: f64,
    pub y_prime: f64,
}

/// All samples of a run.
#[derive(Debug, Clone)]
pub struct TrialTable {
    pub seed: u64,
    pub n_trials: usize,
    pub channels: Vec<ChannelSamples>,
    /// Channel input of every real stream, indexed by stream.
    pub streams: Vec<Vec<f64>>,
    /// Whitened noise per receiver (encoding order) and output dimension.
    pub whitened_noise: Vec<Vec<Vec<Complex64>>>,
}

impl TrialTable {
    pub fn record(&self, prep: &Prepared, channel: usize, trial: usize) -> TrialRecord {
        let c = &prep.channels[channel];
        let s = &self.channels[channel];
        TrialRecord {
            trial: trial as u64,
            seed: self.seed,
            receiver: c.receiver,
            index: c.index,
            part: c.part,
            u: s.u[trial],
            d: s.d[trial],
            s_prime: s.s_prime[trial],
            x: s.x[trial],
            z_prime: s.z_prime[trial],
            y_prime: s.y_prime[trial],
        }
    }
}

struct TrialOut {
    encoded: Vec<Encoded>,
    z_prime: Vec<f64>,
    y_prime: Vec<f64>,
    chain: Vec<f64>,
    streams: Vec<f64>,
    noise: Vec<Vec<Complex64>>,
    known: Vec<CVector>,
}

/// Inputs that replace the encoder output of chosen receivers; used to probe causality.
pub(crate) type Override<'a> = &'a (dyn Fn(usize) -> Option<CVector> + Sync);

fn run_trial(prep: &Prepared, cfg: &SimConfig, t: u64, overrides: Option<Override>) -> Result<TrialOut> {
    let model = &prep.model;
    let n_t = model.n_t();
    let k_count = model.num_receivers();
    let mut x_tilde = vec![CVector::zeros(n_t); k_count];
    let mut encoded: Vec<Option<Encoded>> = vec![None; prep.channels.len()];
    let mut streams = vec![0.0; prep.n_streams()];
    let mut known = vec![CVector::zeros(0); k_count];
    for rp in &prep.plan.receivers {
        let k = rp.receiver;
        known[k] = known_interference(prep, k, &x_tilde);
        let shared = match cfg.dither {
            DitherMode::SharedWithinReceiver => {
                let mut r = stream_rng(cfg.seed, StreamTag::SharedDither, k as u64, t);
                Some(r.random::<f64>())
            }
            DitherMode::Independent => None,
        };
        for h in 0..n_t {
            for part in Part::BOTH {
                let sid = stream_index(n_t, k, h, part);
                let mut rng = stream_rng(cfg.seed, StreamTag::Encode, sid as u64, t);
                let r_d = rng.random::<f64>();
                let r_u = rng.random::<f64>();
                let (enc, s) = match prep.roles[sid] {
                    Role::Data(c) => {
                        let sigma = prep.channels[c].config.channel_gain;
                        (&prep.encoders[c], part_of(known[k][h], part) / sigma)
                    }
                    Role::Idle => (&prep.idle, 0.0),
                };
                let a = enc.interval();
                let d = wrap((shared.unwrap_or(r_d) - 0.5) * a, a);
                let e = enc.encode_with(s, d, |p| pick_index(p, r_u))?;
                if let Role::Data(c) = prep.roles[sid] {
                    encoded[c] = Some(e);
                }
                streams[sid] = e.x;
                let z = &mut x_tilde[k][h];
                match part {
                    Part::Re => z.re = e.x,
                    Part::Im => z.im = e.x,
                }
            }
        }
        if let Some(f) = overrides {
            if let Some(v) = f(k) {
                x_tilde[k] = v;
            }
        }
    }
    let mut x = CVector::zeros(n_t);
    for rp in &prep.plan.receivers {
        x += rp.precoder() * &x_tilde[rp.receiver];
    }
    let mut z_prime = vec![0.0; prep.channels.len()];
    let mut y_prime = vec![0.0; prep.channels.len()];
    let mut chain = vec![0.0; prep.channels.len()];
    let mut noise = Vec::with_capacity(k_count);
    let half = 0.5f64.sqrt();
    for rp in &prep.plan.receivers {
        let k = rp.receiver;
        let r = model.receiver(k);
        let n_k = r.h.nrows();
        let mut rng = stream_rng(cfg.seed, StreamTag::Noise, k as u64, t);
        let w = CVector::from_iterator(
            n_k,
            (0..n_k).map(|_| {
                let re: f64 = rng.sample(rand_distr::StandardNormal);
                let im: f64 = rng.sample(rand_distr::StandardNormal);
                Complex64::new(re * half, im * half)
            }),
        );
        let y = &r.h * &x + &rp.q_sqrt * w;
        let y_t = rp.filter() * y;
        let mut z_t = y_t.clone() - &known[k];
        for (i, s) in rp.sigma.iter().enumerate() {
            z_t[i] -= x_tilde[k][i] * *s;
        }
        noise.push(z_t.iter().copied().collect());
        for (c, ch) in prep.channels.iter().enumerate().filter(|(_, ch)| ch.receiver == k) {
            let e = encoded[c].expect("data stream encoded");
            let cfg_c = &ch.config;
            let sigma = cfg_c.channel_gain;
            let a = cfg_c.shaping.interval;
            let y_r = part_of(y_t[ch.index], ch.part);
            let s_r = part_of(known[k][ch.index], ch.part);
            let z_n = (y_r - sigma * e.x - s_r) / sigma;
            let zp = effective_noise(e.x, z_n, cfg_c.alpha);
            let yp = receiver_front(y_r / sigma, cfg_c.alpha, e.d, a);
            z_prime[c] = zp;
            y_prime[c] = yp;
            chain[c] = circular_gap(yp, wrap(e.u + zp, a), a);
        }
    }
    Ok(TrialOut {
        encoded: encoded.into_iter().map(|e| e.expect("data stream encoded")).collect(),
        z_prime,
        y_prime,
        chain,
        streams,
        noise,
        known,
    })
}

/// Runs `n_trials` independent trials; the result depends only on the inputs and the seed.
pub fn simulate(prep: &Prepared, cfg: &SimConfig) -> Result<TrialTable> {
    simulate_with(prep, cfg, None)
}

pub(crate) fn simulate_with(prep: &Prepared, cfg: &SimConfig, overrides: Option<Override>) -> Result<TrialTable> {
    if cfg.n_trials == 0 {
        return invalid("simulation needs at least one trial");
    }
    if cfg.params != prep.params {
        return invalid("simulation parameters differ from the prepared ones");
    }
    let outs = (0..cfg.n_trials as u64)
        .into_par_iter()
        .map(|t| run_trial(prep, cfg, t, overrides))
        .collect::<Result<Vec<_>>>()?;
    let n = cfg.n_trials;
    let mut channels: Vec<ChannelSamples> = prep
        .channels
        .iter()
        .map(|_| ChannelSamples {
            u_index: Vec::with_capacity(n),
            u: Vec::with_capacity(n),
            d: Vec::with_capacity(n),
            s_prime: Vec::with_capacity(n),
            x: Vec::with_capacity(n),
            z_prime: Vec::with_capacity(n),
            y_prime: Vec::with_capacity(n),
            chain_error: 0.0,
        })
        .collect();
    let mut streams = vec![Vec::with_capacity(n); prep.n_streams()];
    let mut whitened_noise: Vec<Vec<Vec<Complex64>>> = prep
        .plan
        .receivers
        .iter()
        .map(|rp| vec![Vec::with_capacity(n); rp.subchannels.len()])
        .collect();
    for o in outs {
        for (c, s) in channels.iter_mut().enumerate() {
            let e = &o.encoded[c];
            s.u_index.push(e.u_index as u32);
            s.u.push(e.u);
            s.d.push(e.d);
            s.s_prime.push(e.s_prime);
            s.x.push(e.x);
            s.z_prime.push(o.z_prime[c]);
            s.y_prime.push(o.y_prime[c]);
            s.chain_error = s.chain_error.max(o.chain[c]);
        }
        for (col, v) in streams.iter_mut().zip(&o.streams) {
            col.push(*v);
        }
        for (per_rx, z) in whitened_noise.iter_mut().zip(&o.noise) {
            for (col, v) in per_rx.iter_mut().zip(z) {
                col.push(*v);
            }
        }
    }
    Ok(TrialTable {
        seed: cfg.seed,
        n_trials: n,
        channels,
        streams,
        whitened_noise,
    })
}

/// Known interference of receiver `k` in one trial after replacing the whitened inputs of the
/// `zeroed` receivers by zeros. Receivers encoded after a zeroed one re-encode against the
/// changed interference.
pub fn interference_with_zeroed(
    prep: &Prepared,
    cfg: &SimConfig,
    k: usize,
    trial: u64,
    zeroed: &[usize],
) -> Result<CVector> {
    let n_t = prep.model.n_t();
    let f = |l: usize| zeroed.contains(&l).then(|| CVector::zeros(n_t));
    let out = run_trial(prep, cfg, trial, Some(&f))?;
    Ok(out.known[k].clone())
}
