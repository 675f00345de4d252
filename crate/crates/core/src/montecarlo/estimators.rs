//! Histogram estimators and goodness-of-fit statistics used to check simulated samples against
//! the grid densities.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// `bins` equal cells on `[lo, hi)`; samples outside are clamped into the end cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Binning {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl Binning {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        assert!(hi > lo && bins > 0, "binning needs hi > lo and at least one bin");
        Self { lo, hi, bins }
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn index(&self, x: f64) -> usize {
        let i = ((x - self.lo) / self.width()).floor();
        if i < 0.0 {
            0
        } else {
            (i as usize).min(self.bins - 1)
        }
    }

    pub fn edges(&self) -> Vec<f64> {
        let w = self.width();
        (0..=self.bins).map(|i| self.lo + i as f64 * w).collect()
    }
}

pub fn histogram(samples: &[f64], binning: &Binning) -> Vec<u64> {
    let mut counts = vec![0u64; binning.bins];
    for &x in samples {
        counts[binning.index(x)] += 1;
    }
    counts
}

/// Plug-in entropy of a discrete sample in nats with the Miller-Madow correction
/// `(occupied cells - 1) / (2 N)`.
pub fn entropy_mm(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let occupied = counts.iter().filter(|&&c| c > 0).count();
    let plug_in = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / nf;
            -p * p.ln()
        })
        .sum::<f64>();
    plug_in + (occupied.saturating_sub(1)) as f64 / (2.0 * nf)
}

/// Histogram density estimate of a continuous sample.
#[derive(Debug, Clone)]
pub struct HistogramDensity {
    pub binning: Binning,
    pub counts: Vec<u64>,
    pub n: u64,
}

impl HistogramDensity {
    pub fn new(samples: &[f64], binning: Binning) -> Self {
        let counts = histogram(samples, &binning);
        Self {
            binning,
            n: samples.len() as u64,
            counts,
        }
    }

    /// Differential entropy: bias-corrected discrete entropy plus `log(width)`.
    pub fn entropy(&self) -> f64 {
        entropy_mm(&self.counts) + self.binning.width().ln()
    }

    /// `-log f_hat(x)`, whose sample mean is the plug-in entropy.
    pub fn neg_log_density(&self, x: f64) -> f64 {
        let c = self.counts[self.binning.index(x)] as f64;
        -(c / (self.n as f64 * self.binning.width())).ln()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let nf = self.n as f64;
        self.counts.iter().map(|&c| c as f64 / nf).collect()
    }

    /// `1/2 sum |p_hat - p|` against reference bin masses.
    pub fn total_variation(&self, masses: &[f64]) -> f64 {
        assert_eq!(masses.len(), self.counts.len());
        0.5 * self
            .probabilities()
            .iter()
            .zip(masses)
            .map(|(p, m)| (p - m).abs())
            .sum::<f64>()
    }
}

/// Plug-in mutual information in nats between two discrete samples, each term bias-corrected.
pub fn mutual_information_mm(a: &[usize], ka: usize, b: &[usize], kb: usize) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut ca = vec![0u64; ka];
    let mut cb = vec![0u64; kb];
    let mut cab = vec![0u64; ka * kb];
    for (&x, &y) in a.iter().zip(b) {
        ca[x] += 1;
        cb[y] += 1;
        cab[x * kb + y] += 1;
    }
    entropy_mm(&ca) + entropy_mm(&cb) - entropy_mm(&cab)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson test of equal cell probabilities.
pub fn chi_square_uniform(counts: &[u64]) -> ChiSquare {
    let k = counts.len();
    let n: u64 = counts.iter().sum();
    let expected = n as f64 / k as f64;
    let statistic = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum::<f64>();
    let dof = k.saturating_sub(1).max(1);
    let p_value = ChiSquared::new(dof as f64)
        .map(|d| d.sf(statistic))
        .unwrap_or(f64::NAN);
    ChiSquare {
        statistic,
        dof,
        p_value,
    }
}

/// Largest gap between the empirical distribution of `samples` and `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    })
}

/// Asymptotic Kolmogorov critical value `sqrt(-log(alpha / 2) / 2) / sqrt(n)`.
pub fn ks_critical(alpha: f64, n: usize) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Sample mean and its standard error.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use statrs::distribution::Normal;

    #[test]
    fn uniform_counts_have_log_k_entropy() {
        let counts = vec![100u64; 8];
        assert_abs_diff_eq!(entropy_mm(&counts), 8f64.ln() + 7.0 / 1600.0, epsilon = 1e-12);
        assert_eq!(entropy_mm(&[]), 0.0);
    }

    #[test]
    fn gaussian_differential_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..200_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let h = HistogramDensity::new(&xs, Binning::new(-6.0, 6.0, 240));
        let closed = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
        assert!((h.entropy() - closed).abs() < 0.01);
        let (mean, _) = mean_and_se(&xs.iter().map(|&x| h.neg_log_density(x)).collect::<Vec<_>>());
        // the per-sample form is the uncorrected plug-in
        assert!((mean - closed).abs() < 0.01);
    }

    #[test]
    fn mutual_information_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a: Vec<usize> = (0..100_000).map(|_| rng.random_range(0..4)).collect();
        let b: Vec<usize> = (0..100_000).map(|_| rng.random_range(0..4)).collect();
        assert!(mutual_information_mm(&a, 4, &b, 4).abs() < 1e-3);
        let same = mutual_information_mm(&a, 4, &a, 4);
        assert_abs_diff_eq!(same, 4f64.ln(), epsilon = 0.01);
    }

    #[test]
    fn chi_square_two_cells_is_binomial_z_test() {
        let counts = [5_120u64, 4_880];
        let c = chi_square_uniform(&counts);
        let n = 10_000.0;
        let z = (5_120.0 - n / 2.0) / (n * 0.25f64).sqrt();
        assert_abs_diff_eq!(c.statistic, z * z, epsilon = 1e-9);
        let two_sided = 2.0 * Normal::new(0.0, 1.0).unwrap().sf(z.abs());
        assert_abs_diff_eq!(c.p_value, two_sided, epsilon = 1e-9);
        assert_eq!(c.dof, 1);
    }

    #[test]
    fn ks_accepts_matching_and_rejects_shifted() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..20_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = Normal::new(0.0, 1.0).unwrap();
        let crit = ks_critical(1e-3, xs.len());
        assert!(ks_statistic(&xs, |x| n.cdf(x)) < crit);
        assert!(ks_statistic(&xs, |x| n.cdf(x - 0.1)) > crit);
    }

    #[test]
    fn total_variation_of_exact_masses() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let h = HistogramDensity::new(&xs, Binning::new(0.0, 1.0, 10));
        assert_abs_diff_eq!(h.total_variation(&[0.1; 10]), 0.0, epsilon = 1e-12);
        let mut skew = vec![0.1; 10];
        skew[0] = 0.2;
        skew[9] = 0.0;
        assert_abs_diff_eq!(h.total_variation(&skew), 0.1, epsilon = 1e-12);
    }
}
