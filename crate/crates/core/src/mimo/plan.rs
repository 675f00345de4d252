use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::Result;
use crate::mimo::linalg::{full_svd, inv_sqrt, psd_sqrt, CMatrix};
use crate::mimo::model::{to_pairs, ChannelModel};

/// Singular values at or below this fraction of a receiver's largest are inactive.
pub const SIGMA_FLOOR: f64 = 1e-9;

fn ser_matrix<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    to_pairs(m).serialize(s)
}

fn ser_complex<S: Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

fn ser_complex_vec<S: Serializer>(v: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
    v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
}

/// `Q_k + sum over later receivers l of H_k K_l H_k^H`.
pub fn effective_noise_cov(k: usize, model: &ChannelModel) -> CMatrix {
    let r = model.receiver(k);
    model.later(k).iter().fold(r.q.clone(), |acc, &l| {
        acc + &r.h * &model.receiver(l).k * r.h.adjoint()
    })
}

/// Whitening filter and SVD of receiver `k`'s effective channel.
#[derive(Debug, Clone)]
pub struct Whitened {
    pub q_check: CMatrix,
    /// `Q_check^{-1/2}`.
    pub whitener: CMatrix,
    pub k_sqrt: CMatrix,
    pub u: CMatrix,
    pub sigma: Vec<f64>,
    pub v: CMatrix,
}

/// `Q_check^{-1/2} H_k K_k^{1/2} = U diag(sigma) V^H` with full unitary `U` and `V`.
pub fn whiten_and_svd(k: usize, model: &ChannelModel) -> Result<Whitened> {
    let q_check = effective_noise_cov(k, model);
    let whitener = inv_sqrt(&q_check)?;
    let r = model.receiver(k);
    let k_sqrt = psd_sqrt(&r.k)?;
    let (u, sigma, v) = full_svd(&(&whitener * &r.h * &k_sqrt))?;
    Ok(Whitened {
        q_check,
        whitener,
        k_sqrt,
        u,
        sigma,
        v,
    })
}

/// Weight of stream `h` of receiver `user` in a whitened output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StreamCoeff {
    pub user: usize,
    pub stream: usize,
    #[serde(serialize_with = "ser_complex")]
    pub value: Complex64,
}

/// One complex subchannel `Y_i = sigma X_i + S_i + Z_i` of a receiver.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subchannel {
    pub index: usize,
    pub sigma: f64,
    /// Later receivers' streams in the whitened noise.
    pub a: Vec<StreamCoeff>,
    /// Entries of the unit Gaussian noise vector in the whitened noise.
    #[serde(serialize_with = "ser_complex_vec")]
    pub b: Vec<Complex64>,
    /// Earlier receivers' streams in the whitened, known interference.
    pub s: Vec<StreamCoeff>,
}

impl Subchannel {
    pub fn active(&self) -> bool {
        self.sigma > 0.0
    }

    /// `sum |a|^2 + sum |b|^2`, the variance of the whitened noise.
    pub fn noise_variance(&self) -> f64 {
        self.a.iter().map(|c| c.value.norm_sqr()).sum::<f64>()
            + self.b.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReceiverPlan {
    pub receiver: usize,
    pub position: usize,
    #[serde(serialize_with = "ser_matrix")]
    pub q_check: CMatrix,
    #[serde(serialize_with = "ser_matrix")]
    pub whitener: CMatrix,
    #[serde(serialize_with = "ser_matrix")]
    pub k_sqrt: CMatrix,
    #[serde(serialize_with = "ser_matrix")]
    pub q_sqrt: CMatrix,
    #[serde(serialize_with = "ser_matrix")]
    pub u: CMatrix,
    pub sigma: Vec<f64>,
    #[serde(serialize_with = "ser_matrix")]
    pub v: CMatrix,
    /// One entry per output dimension; entries past `sigma.len()` have zero gain.
    pub subchannels: Vec<Subchannel>,
}

impl ReceiverPlan {
    /// The receive filter `U^H Q_check^{-1/2}`.
    pub fn filter(&self) -> CMatrix {
        self.u.adjoint() * &self.whitener
    }

    /// `K^{1/2} V`, mapping whitened streams to the transmitted signal.
    pub fn precoder(&self) -> CMatrix {
        &self.k_sqrt * &self.v
    }
}

/// Per-receiver parallel scalar channels, listed in encoding order.
#[derive(Debug, Clone, Serialize)]
pub struct SubchannelPlan {
    pub n_t: usize,
    pub ordering: Vec<usize>,
    pub receivers: Vec<ReceiverPlan>,
}

impl SubchannelPlan {
    pub fn receiver(&self, k: usize) -> &ReceiverPlan {
        self.receivers.iter().find(|r| r.receiver == k).expect("receiver in plan")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serialises")
    }
}

fn coeffs(row: usize, m: &CMatrix, user: usize) -> impl Iterator<Item = StreamCoeff> + '_ {
    (0..m.ncols()).map(move |h| StreamCoeff {
        user,
        stream: h,
        value: m[(row, h)],
    })
}

/// Rows of `U_k^H Q_check^{-1/2} H_k K_l^{1/2} V_l` for later receivers `l` and of
/// `U_k^H Q_check^{-1/2} Q_k^{1/2}`.
pub fn mixing_coefficients(
    k: usize,
    model: &ChannelModel,
    whitened: &[Whitened],
) -> Result<Vec<Subchannel>> {
    let w = &whitened[k];
    let r = model.receiver(k);
    let filter = w.u.adjoint() * &w.whitener;
    let through = |l: usize| &filter * &r.h * &whitened[l].k_sqrt * &whitened[l].v;
    let later: Vec<(usize, CMatrix)> = model.later(k).iter().map(|&l| (l, through(l))).collect();
    let earlier: Vec<(usize, CMatrix)> = model.earlier(k).iter().map(|&l| (l, through(l))).collect();
    let b = &filter * psd_sqrt(&r.q)?;
    let peak = w.sigma.first().copied().unwrap_or(0.0);
    Ok((0..r.h.nrows())
        .map(|i| {
            let sigma = w.sigma.get(i).copied().unwrap_or(0.0);
            Subchannel {
                index: i,
                sigma: if sigma > SIGMA_FLOOR * peak { sigma } else { 0.0 },
                a: later.iter().flat_map(|(l, m)| coeffs(i, m, *l)).collect(),
                b: b.row(i).iter().copied().collect(),
                s: earlier.iter().flat_map(|(l, m)| coeffs(i, m, *l)).collect(),
            }
        })
        .collect())
}

/// Whitens and decomposes every receiver of the model.
pub fn decompose(model: &ChannelModel) -> Result<SubchannelPlan> {
    let whitened = (0..model.num_receivers())
        .map(|k| whiten_and_svd(k, model))
        .collect::<Result<Vec<_>>>()?;
    let mut receivers = Vec::with_capacity(model.num_receivers());
    for (position, &k) in model.ordering().iter().enumerate() {
        let subchannels = mixing_coefficients(k, model, &whitened)?;
        let w = &whitened[k];
        receivers.push(ReceiverPlan {
            receiver: k,
            position,
            q_check: w.q_check.clone(),
            whitener: w.whitener.clone(),
            k_sqrt: w.k_sqrt.clone(),
            q_sqrt: psd_sqrt(&model.receiver(k).q)?,
            u: w.u.clone(),
            sigma: w.sigma.clone(),
            v: w.v.clone(),
            subchannels,
        });
    }
    Ok(SubchannelPlan {
        n_t: model.n_t(),
        ordering: model.ordering().to_vec(),
        receivers,
    })
}

/// Capacity of one scalar subchannel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityTarget {
    pub receiver: usize,
    pub index: usize,
    pub sigma: f64,
    /// `log(1 + sigma^2)` nats per complex use.
    pub complex: f64,
    /// Half of that per real dimension.
    pub real: f64,
}

pub fn capacity_targets(plan: &SubchannelPlan) -> Vec<CapacityTarget> {
    plan.receivers
        .iter()
        .flat_map(|r| {
            r.subchannels.iter().map(move |s| {
                let c = s.sigma.powi(2).ln_1p();
                CapacityTarget {
                    receiver: r.receiver,
                    index: s.index,
                    sigma: s.sigma,
                    complex: c,
                    real: 0.5 * c,
                }
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mimo::linalg::tests::{random_complex, random_pd};
    use crate::mimo::linalg::{rect_diag, relative_residual, unitarity_residual};
    use crate::mimo::model::Receiver;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar(v: f64) -> CMatrix {
        CMatrix::from_element(1, 1, Complex64::new(v, 0.0))
    }

    fn random_model(seed: u64, n_t: usize, dims: &[usize]) -> ChannelModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut receivers: Vec<Receiver> = dims
            .iter()
            .map(|&n| Receiver {
                h: random_complex(&mut rng, n, n_t),
                q: random_pd(&mut rng, n),
                k: random_pd(&mut rng, n_t),
            })
            .collect();
        let total: f64 = receivers.iter().map(|r| r.k.trace().re).sum();
        for r in &mut receivers {
            r.k = r.k.scale(2.0 / total);
        }
        ChannelModel::new(receivers, 2.0, (0..dims.len()).rev().collect()).unwrap()
    }

    #[test]
    fn scalar_two_user_example() {
        let m = ChannelModel::new(
            vec![
                Receiver { h: scalar(1.0), q: scalar(1.0), k: scalar(1.0) },
                Receiver { h: scalar(1.0), q: scalar(1.0), k: scalar(2.0) },
            ],
            3.0,
            vec![0, 1],
        )
        .unwrap();
        assert_abs_diff_eq!(effective_noise_cov(0, &m)[(0, 0)].re, 3.0);
        assert_abs_diff_eq!(effective_noise_cov(1, &m)[(0, 0)].re, 1.0);
        let plan = decompose(&m).unwrap();
        let first = &plan.receiver(0).subchannels[0];
        assert_eq!(first.a.len(), 1);
        assert_abs_diff_eq!(first.a[0].value.norm_sqr(), 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(first.b[0].norm_sqr(), 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(first.sigma, (1.0f64 / 3.0).sqrt(), epsilon = 1e-12);
        let last = &plan.receiver(1).subchannels[0];
        assert!(last.a.is_empty());
        assert_abs_diff_eq!(last.noise_variance(), 1.0, epsilon = 1e-12);
        assert_eq!(last.s.len(), 1);
    }

    #[test]
    fn identity_channel() {
        let i2 = CMatrix::identity(2, 2);
        let m = ChannelModel::new(
            vec![Receiver { h: i2.clone(), q: i2.clone(), k: i2.clone() }],
            2.0,
            vec![0],
        )
        .unwrap();
        let w = whiten_and_svd(0, &m).unwrap();
        assert!(w.sigma.iter().all(|&s| (s - 1.0).abs() < 1e-12));
    }

    #[test]
    fn random_instances_reconstruct() {
        for (seed, n_t, dims) in [(1u64, 3usize, vec![2usize, 2, 1]), (2, 2, vec![3, 1]), (3, 3, vec![2])] {
            let m = random_model(seed, n_t, &dims);
            let plan = decompose(&m).unwrap();
            for rp in &plan.receivers {
                let r = m.receiver(rp.receiver);
                let q_direct = m
                    .later(rp.receiver)
                    .iter()
                    .fold(r.q.clone(), |acc, &l| acc + &r.h * &m.receiver(l).k * r.h.adjoint());
                assert!(relative_residual(&rp.q_check, &q_direct) < 1e-12);
                assert!(relative_residual(&rp.q_check.adjoint(), &rp.q_check) < 1e-12);
                let target = &rp.whitener * &r.h * &rp.k_sqrt;
                let back = &rp.u * rect_diag(&rp.sigma, r.h.nrows(), n_t) * rp.v.adjoint();
                assert!(relative_residual(&back, &target) < 1e-9);
                assert!(unitarity_residual(&rp.u) < 1e-9 && unitarity_residual(&rp.v) < 1e-9);
                for s in &rp.subchannels {
                    assert_abs_diff_eq!(s.noise_variance(), 1.0, epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn rank_deficient_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = random_complex(&mut rng, 3, 1);
        let k = &g * g.adjoint();
        let k = k.scale(1.0 / k.trace().re);
        let m = ChannelModel::new(
            vec![Receiver { h: random_complex(&mut rng, 3, 3), q: random_pd(&mut rng, 3), k }],
            1.0,
            vec![0],
        )
        .unwrap();
        let plan = decompose(&m).unwrap();
        let active = plan.receivers[0].subchannels.iter().filter(|s| s.active()).count();
        assert_eq!(active, 1);
        assert!(plan.receivers[0].sigma[1..].iter().all(|&s| s < 1e-9));
    }

    #[test]
    fn single_user_log_det() {
        let m = random_model(5, 3, &[2]);
        let plan = decompose(&m).unwrap();
        let total: f64 = capacity_targets(&plan).iter().map(|c| c.complex).sum();
        let r = m.receiver(0);
        let w = crate::mimo::linalg::inv_sqrt(&r.q).unwrap();
        let g = CMatrix::identity(2, 2) + &w * &r.h * &r.k * r.h.adjoint() * &w;
        let det = g.determinant().re;
        assert!((total - det.ln()).abs() < 1e-9 * det.ln().abs());
    }

    #[test]
    fn capacity_examples() {
        let m = ChannelModel::new(
            vec![Receiver { h: scalar(1.0), q: scalar(1.0), k: scalar(1.0) }],
            1.0,
            vec![0],
        )
        .unwrap();
        let t = capacity_targets(&decompose(&m).unwrap());
        assert_abs_diff_eq!(t[0].complex, 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(t[0].real, 0.5 * 2f64.ln(), epsilon = 1e-12);
        let zero = ChannelModel::new(
            vec![Receiver { h: scalar(0.0), q: scalar(1.0), k: scalar(1.0) }],
            1.0,
            vec![0],
        )
        .unwrap();
        assert_eq!(capacity_targets(&decompose(&zero).unwrap())[0].complex, 0.0);
    }

    #[test]
    fn plan_exports_json() {
        let plan = decompose(&random_model(4, 2, &[1, 1])).unwrap();
        let v: serde_json::Value = serde_json::from_str(&plan.to_json()).unwrap();
        assert_eq!(v["receivers"].as_array().unwrap().len(), 2);
        assert!(v["receivers"][0]["subchannels"][0]["b"][0].is_array());
    }
}
