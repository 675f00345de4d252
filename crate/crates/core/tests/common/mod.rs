#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use scalar_dpc::mimo::{CMatrix, ChannelModel, Receiver};

pub fn c(re: f64) -> CMatrix {
    CMatrix::from_element(1, 1, Complex64::new(re, 0.0))
}

/// All-scalar model with unit gains and noise and the given input powers.
pub fn scalar_model(powers: &[f64], ordering: Vec<usize>) -> ChannelModel {
    let receivers = powers
        .iter()
        .map(|&p| Receiver { h: c(1.0), q: c(1.0), k: c(p) })
        .collect();
    ChannelModel::new(receivers, powers.iter().sum(), ordering).unwrap()
}

pub fn random_complex(rng: &mut impl Rng, r: usize, cols: usize) -> CMatrix {
    DMatrix::from_fn(r, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// `G G^H + 0.1 I`, Hermitian positive definite.
pub fn random_pd(rng: &mut impl Rng, n: usize) -> CMatrix {
    let g = random_complex(rng, n, n);
    let mut m = &g * g.adjoint() + CMatrix::identity(n, n).scale(0.1);
    // exact Hermitian symmetry
    for i in 0..n {
        for j in 0..i {
            m[(i, j)] = m[(j, i)].conj();
        }
        m[(i, i)].im = 0.0;
    }
    m
}

/// Random model with `k` receivers, `n_t` transmit antennas, up to `max_rx` receive antennas,
/// unit total power and a random ordering.
pub fn random_model(rng: &mut impl Rng, k: usize, n_t: usize, max_rx: usize) -> ChannelModel {
    let mut receivers: Vec<Receiver> = (0..k)
        .map(|_| {
            let n_k = rng.random_range(1..=max_rx);
            Receiver {
                h: random_complex(rng, n_k, n_t),
                q: random_pd(rng, n_k),
                k: random_pd(rng, n_t),
            }
        })
        .collect();
    let total: f64 = receivers.iter().map(|r| r.k.trace().re).sum();
    for r in &mut receivers {
        r.k = r.k.scale(1.0 / total);
    }
    let mut ordering: Vec<usize> = (0..k).collect();
    for i in (1..k).rev() {
        ordering.swap(i, rng.random_range(0..=i));
    }
    ChannelModel::new(receivers, 1.0, ordering).unwrap()
}
