use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mimo::linalg::{check_hermitian, hermitian_eigen, inv_sqrt, psd_sqrt, CMatrix};

/// Slack allowed on the total power constraint.
pub const POWER_TOL: f64 = 1e-9;

/// Channel matrix, noise covariance and input covariance of one receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct Receiver {
    pub h: CMatrix,
    pub q: CMatrix,
    pub k: CMatrix,
}

/// A Gaussian vector broadcast channel `Y_k = H_k X + Z_k` with fixed input covariances and one
/// encoding order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    receivers: Vec<Receiver>,
    power: f64,
    ordering: Vec<usize>,
}

impl ChannelModel {
    /// `ordering` lists 0-based receiver indices from first encoded to last encoded.
    pub fn new(receivers: Vec<Receiver>, power: f64, ordering: Vec<usize>) -> Result<Self> {
        if receivers.is_empty() {
            return invalid("channel model needs at least one receiver");
        }
        if !(power > 0.0) || !power.is_finite() {
            return invalid(format!("total power must be positive, got {power}"));
        }
        let n_t = receivers[0].h.ncols();
        if n_t == 0 {
            return invalid("transmitter needs at least one antenna");
        }
        let mut total = 0.0;
        for (idx, r) in receivers.iter().enumerate() {
            let n_k = r.h.nrows();
            if n_k == 0 || r.h.ncols() != n_t {
                return invalid(format!(
                    "receiver {idx}: H is {}x{}, expected n_k x {n_t}",
                    n_k,
                    r.h.ncols()
                ));
            }
            if r.q.shape() != (n_k, n_k) {
                return invalid(format!("receiver {idx}: Q must be {n_k}x{n_k}"));
            }
            if r.k.shape() != (n_t, n_t) {
                return invalid(format!("receiver {idx}: K must be {n_t}x{n_t}"));
            }
            check_hermitian(&r.q, &format!("receiver {idx} Q"))?;
            check_hermitian(&r.k, &format!("receiver {idx} K"))?;
            inv_sqrt(&r.q).map_err(|e| match e {
                Error::NearSingular(m) => Error::NearSingular(format!("receiver {idx} Q: {m}")),
                other => other,
            })?;
            psd_sqrt(&r.k)?;
            total += r.k.trace().re;
        }
        if total > power + POWER_TOL {
            return Err(Error::InvalidModel(format!(
                "sum of trace(K_k) = {total} exceeds the power budget {power}"
            )));
        }
        let mut seen = vec![false; receivers.len()];
        if ordering.len() != receivers.len()
            || ordering.iter().any(|&k| k >= seen.len() || std::mem::replace(&mut seen[k], true))
        {
            return Err(Error::InvalidModel(format!(
                "ordering {ordering:?} is not a permutation of the {} receivers",
                receivers.len()
            )));
        }
        Ok(Self {
            receivers,
            power,
            ordering,
        })
    }

    pub fn with_ordering(&self, ordering: Vec<usize>) -> Result<Self> {
        Self::new(self.receivers.clone(), self.power, ordering)
    }

    pub fn receivers(&self) -> &[Receiver] {
        &self.receivers
    }

    pub fn receiver(&self, k: usize) -> &Receiver {
        &self.receivers[k]
    }

    pub fn num_receivers(&self) -> usize {
        self.receivers.len()
    }

    pub fn n_t(&self) -> usize {
        self.receivers[0].h.ncols()
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    /// Position of receiver `k` in the encoding order.
    pub fn position(&self, k: usize) -> usize {
        self.ordering.iter().position(|&r| r == k).expect("valid receiver")
    }

    /// Receivers encoded after `k`, whose signals receiver `k` treats as noise.
    pub fn later(&self, k: usize) -> &[usize] {
        &self.ordering[self.position(k) + 1..]
    }

    /// Receivers encoded before `k`, whose signals are known interference for receiver `k`.
    pub fn earlier(&self, k: usize) -> &[usize] {
        &self.ordering[..self.position(k)]
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ModelFile =
            toml::from_str(text).map_err(|e| Error::InvalidModel(format!("channel model: {e}")))?;
        file.into_model()
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidModel(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        let file = ModelFile {
            power: self.power,
            ordering: Some(self.ordering.iter().map(|k| k + 1).collect()),
            receiver: self
                .receivers
                .iter()
                .map(|r| ReceiverFile {
                    h: to_pairs(&r.h),
                    q: to_pairs(&r.q),
                    k: to_pairs(&r.k),
                })
                .collect(),
        };
        toml::to_string(&file).expect("model serialises")
    }

    /// Smallest eigenvalue of every `Q_k`, for diagnostics.
    pub fn noise_eigen_floor(&self) -> Result<f64> {
        let mut floor = f64::INFINITY;
        for r in &self.receivers {
            let (vals, _) = hermitian_eigen(&r.q)?;
            floor = vals.into_iter().fold(floor, f64::min);
        }
        Ok(floor)
    }
}

/// On-disk layout: matrices are lists of rows, each entry a `[re, im]` pair; the ordering is
/// 1-based and defaults to `1..=K`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    power: f64,
    #[serde(default)]
    ordering: Option<Vec<usize>>,
    receiver: Vec<ReceiverFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReceiverFile {
    h: Vec<Vec<[f64; 2]>>,
    q: Vec<Vec<[f64; 2]>>,
    k: Vec<Vec<[f64; 2]>>,
}

impl ModelFile {
    fn into_model(self) -> Result<ChannelModel> {
        let receivers = self
            .receiver
            .iter()
            .enumerate()
            .map(|(i, r)| {
                Ok(Receiver {
                    h: from_pairs(&r.h, &format!("receiver {} h", i + 1))?,
                    q: from_pairs(&r.q, &format!("receiver {} q", i + 1))?,
                    k: from_pairs(&r.k, &format!("receiver {} k", i + 1))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let ordering = match self.ordering {
            Some(o) => {
                if o.contains(&0) {
                    return Err(Error::InvalidModel("ordering is 1-based".into()));
                }
                o.into_iter().map(|k| k - 1).collect()
            }
            None => (0..receivers.len()).collect(),
        };
        ChannelModel::new(receivers, self.power, ordering)
    }
}

fn from_pairs(rows: &[Vec<[f64; 2]>], what: &str) -> Result<CMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidModel(format!("{what}: ragged or empty matrix")));
    }
    Ok(CMatrix::from_fn(n, m, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
}

pub(crate) fn to_pairs(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> CMatrix {
        CMatrix::from_element(1, 1, Complex64::new(v, 0.0))
    }

    fn two_user_scalar(k1: f64, k2: f64, power: f64) -> Result<ChannelModel> {
        ChannelModel::new(
            vec![
                Receiver { h: scalar(1.0), q: scalar(1.0), k: scalar(k1) },
                Receiver { h: scalar(1.0), q: scalar(1.0), k: scalar(k2) },
            ],
            power,
            vec![0, 1],
        )
    }

    #[test]
    fn validation() {
        assert!(two_user_scalar(1.0, 1.0, 2.0).is_ok());
        assert!(matches!(two_user_scalar(1.0, 1.5, 2.0), Err(Error::InvalidModel(_))));
        assert!(two_user_scalar(1.0, 1.0 + 5e-10, 2.0).is_ok());
        let m = two_user_scalar(1.0, 1.0, 2.0).unwrap();
        assert!(m.with_ordering(vec![0, 0]).is_err());
        assert!(m.with_ordering(vec![1]).is_err());
        let r = m.with_ordering(vec![1, 0]).unwrap();
        assert_eq!(r.later(1), &[0]);
        assert_eq!(r.earlier(0), &[1]);
        let bad_q = Receiver { h: scalar(1.0), q: scalar(0.0), k: scalar(1.0) };
        assert!(ChannelModel::new(vec![bad_q], 1.0, vec![0]).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
power = 2.0
ordering = [2, 1]

[[receiver]]
h = [[[1.0, 0.0], [0.5, -0.5]]]
q = [[[1.0, 0.0]]]
k = [[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]]

[[receiver]]
h = [[[0.3, 0.1], [1.0, 0.0]]]
q = [[[2.0, 0.0]]]
k = [[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]]
"#;
        let m = ChannelModel::from_toml_str(text).unwrap();
        assert_eq!(m.n_t(), 2);
        assert_eq!(m.ordering(), &[1, 0]);
        assert_eq!(m.receiver(0).h[(0, 1)], Complex64::new(0.5, -0.5));
        let again = ChannelModel::from_toml_str(&m.to_toml_string()).unwrap();
        assert_eq!(again, m);
        assert!(ChannelModel::from_toml_str("power = 1.0\nreceiver = []").is_err());
        assert!(ChannelModel::from_toml_str(&text.replace("[2, 1]", "[0, 1]")).is_err());
    }
}
