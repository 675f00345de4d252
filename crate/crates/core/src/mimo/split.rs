use serde::Serialize;

use crate::dpc::{NoiseMixture, ScalarDpcConfig, ShapedTerm, Shaping};
use crate::error::{invalid, Result};
use crate::mimo::plan::{StreamCoeff, SubchannelPlan};

/// Real or imaginary component of a complex stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Part {
    Re,
    Im,
}

impl Part {
    pub const BOTH: [Part; 2] = [Part::Re, Part::Im];
}

/// ASK order and interval-to-width ratio shared by every real stream; shaping is matched to
/// power 1/2 per real dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DpcParams {
    pub order: usize,
    pub ratio: f64,
}

impl DpcParams {
    pub fn shaping(&self) -> Result<Shaping> {
        Shaping::matched(0.5, self.order, self.ratio)
    }
}

/// Index of the real stream `(receiver, h, part)` among `n_receivers * n_t * 2`.
pub fn stream_index(n_t: usize, receiver: usize, h: usize, part: Part) -> usize {
    (receiver * n_t + h) * 2 + usize::from(part == Part::Im)
}

/// One real scalar dirty-paper channel of a receiver.
#[derive(Debug, Clone, Serialize)]
pub struct RealChannel {
    pub receiver: usize,
    pub index: usize,
    pub part: Part,
    /// Real stream carrying this channel's input.
    pub stream: usize,
    pub config: ScalarDpcConfig,
}

/// Maps a complex weight `a` on stream `(l, h)` to weights on the real and imaginary parts:
/// `Re(a X) = a_r X_r - a_i X_i` and `Im(a X) = a_i X_r + a_r X_i`.
fn real_weights(c: &StreamCoeff, part: Part) -> [(Part, f64); 2] {
    let (ar, ai) = (c.value.re, c.value.im);
    match part {
        Part::Re => [(Part::Re, ar), (Part::Im, -ai)],
        Part::Im => [(Part::Re, ai), (Part::Im, ar)],
    }
}

/// Splits each active complex subchannel into two real channels with gain `sigma`, input power
/// 1/2 and noise variance 1/2.
pub fn real_split(plan: &SubchannelPlan, params: &DpcParams) -> Result<Vec<RealChannel>> {
    if params.order < 2 || !(params.ratio > 0.0) {
        return invalid("DPC parameters need M >= 2 and a positive ratio");
    }
    let shaping = params.shaping()?;
    let half = 0.5f64.sqrt();
    let mut out = Vec::new();
    for rp in &plan.receivers {
        for sc in rp.subchannels.iter().filter(|s| s.active()) {
            for part in Part::BOTH {
                let shaped_terms = sc
                    .a
                    .iter()
                    .flat_map(|c| {
                        real_weights(c, part).map(|(p, w)| ShapedTerm {
                            coefficient: w,
                            shaping,
                            source: Some(stream_index(plan.n_t, c.user, c.stream, p)),
                        })
                    })
                    .filter(|t| t.coefficient != 0.0)
                    .collect();
                let gaussian_terms = sc
                    .b
                    .iter()
                    .flat_map(|b| match part {
                        Part::Re => [b.re * half, -b.im * half],
                        Part::Im => [b.im * half, b.re * half],
                    })
                    .filter(|w| *w != 0.0)
                    .collect();
                let noise = NoiseMixture {
                    shaped_terms,
                    gaussian_terms,
                };
                out.push(RealChannel {
                    receiver: rp.receiver,
                    index: sc.index,
                    part,
                    stream: stream_index(plan.n_t, rp.receiver, sc.index, part),
                    config: ScalarDpcConfig::new(shaping, sc.sigma, noise)?,
                });
            }
        }
    }
    Ok(out)
}
