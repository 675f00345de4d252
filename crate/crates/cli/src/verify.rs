use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use scalar_dpc::density::{
    convolve, d_profile, d_value, entropy, entropy_bounds_x, is_symmetric, is_unimodal,
    mod_reduce, power_bounds, riemann_shift_sum_fn, wrap, GridDensity, SumForm,
};
use scalar_dpc::dpc::{
    analyze, effective_noise, receiver_front, shaping_probabilities, Encoder, NoiseMixture,
    ScalarDpcConfig,
};
use scalar_dpc::mimo::{
    capacity_targets, decompose, effective_noise_cov, rect_diag, relative_residual,
    unitarity_residual, whiten_and_svd, CMatrix, ChannelModel, Receiver,
};
use serde::Serialize;

use crate::config::{CliResult, ShapingSetup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Lemmas,
    Dpc,
    Mimo,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Lemmas => "lemmas",
            Suite::Dpc => "dpc",
            Suite::Mimo => "mimo",
            Suite::All => "all",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub suite: &'static str,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub values: BTreeMap<String, f64>,
}

impl VerifyReport {
    pub fn failed(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

struct Collector {
    suite: &'static str,
    checks: Vec<Check>,
    values: BTreeMap<String, f64>,
}

impl Collector {
    fn new(suite: &'static str) -> Self {
        Self {
            suite,
            checks: Vec::new(),
            values: BTreeMap::new(),
        }
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            suite: self.suite,
            name: name.into(),
            passed,
            detail,
        });
    }

    fn value(&mut self, key: &str, v: f64) {
        self.values.insert(format!("{}.{key}", self.suite), v);
    }
}

pub fn run(suite: Suite, setup: &ShapingSetup, seed: u64) -> CliResult<VerifyReport> {
    let mut parts = Vec::new();
    if matches!(suite, Suite::Lemmas | Suite::All) {
        parts.push(lemmas(seed)?);
    }
    if matches!(suite, Suite::Dpc | Suite::All) {
        parts.push(dpc(setup, seed)?);
    }
    if matches!(suite, Suite::Mimo | Suite::All) {
        parts.push(mimo(seed)?);
    }
    let mut checks = Vec::new();
    let mut values = BTreeMap::new();
    for c in parts {
        checks.extend(c.checks);
        values.extend(c.values);
    }
    Ok(VerifyReport {
        suite: suite.name(),
        passed: checks.iter().all(|c| c.passed),
        checks,
        values,
    })
}

const LEMMA_SPACING: f64 = 0.02;

/// Random symmetric density on an odd grid of `2r + 1` cells.
fn random_symmetric(rng: &mut ChaCha8Rng) -> CliResult<GridDensity> {
    let r: usize = rng.random_range(5..80);
    let half: Vec<f64> = (0..=r).map(|_| rng.random::<f64>()).collect();
    let values: Vec<f64> = (0..2 * r + 1).map(|i| half[i.abs_diff(r)]).collect();
    normalised(r, values, 0.0)
}

/// Random mixture of centred uniforms, with an atom at zero half of the time.
fn random_unimodal(rng: &mut ChaCha8Rng) -> CliResult<GridDensity> {
    let r = rng.random_range(5..80);
    let mut values = vec![0.0; 2 * r + 1];
    for _ in 0..rng.random_range(1..5) {
        let w: f64 = rng.random();
        let m = rng.random_range(0..=r);
        for v in &mut values[r - m..=r + m] {
            *v += w / (2 * m + 1) as f64;
        }
    }
    let atom = if rng.random::<bool>() { rng.random::<f64>() * 0.5 } else { 0.0 };
    normalised(r, values, atom)
}

fn normalised(r: usize, values: Vec<f64>, atom: f64) -> CliResult<GridDensity> {
    let total: f64 = values.iter().sum::<f64>() * LEMMA_SPACING;
    let half = (r as f64 + 0.5) * LEMMA_SPACING;
    let scale = (1.0 - atom) / total;
    Ok(GridDensity::new(-half, half, values.into_iter().map(|v| v * scale).collect())?.with_atom(atom)?)
}

fn lemmas(seed: u64) -> CliResult<Collector> {
    let mut c = Collector::new("lemmas");
    let cases = [(0.0, 6.0, 0.0), (3.0, 6.0, -3.0), (7.5, 6.0, 1.5)];
    let mod_ok = cases.iter().all(|&(x, a, want)| mod_reduce(x, a) == Ok(want));
    c.check("mod_reduce_examples", mod_ok, "(0,6)->0, (3,6)->-3, (7.5,6)->1.5".into());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let x = (rng.random::<f64>() - 0.5) * 1e3;
        let r = mod_reduce(x, 6.0)?;
        let m = rng.random_range(-50i32..50) as f64;
        worst = worst
            .max((mod_reduce(r, 6.0)? - r).abs())
            .max(wrap(mod_reduce(x + m * 6.0, 6.0)? - r, 6.0).abs());
    }
    c.check("mod_reduce_idempotent_periodic", worst <= 1e-12, format!("max deviation {worst:e}"));

    let mut sym_fail = 0;
    let mut uni_fail = 0;
    for _ in 0..200 {
        let f = random_symmetric(&mut rng)?;
        let g = random_symmetric(&mut rng)?;
        let fg = convolve(&f, &g)?;
        if !is_symmetric(&fg, 1e-9 * fg.max_value()) {
            sym_fail += 1;
        }
        let f = random_unimodal(&mut rng)?;
        let g = random_unimodal(&mut rng)?;
        let fg = convolve(&f, &g)?;
        let tol = 1e-9 * fg.max_value();
        if !is_symmetric(&fg, tol) || !is_unimodal(&fg, tol) {
            uni_fail += 1;
        }
    }
    c.check("symmetric_closure", sym_fail == 0, format!("{sym_fail} of 200 pairs failed"));
    c.check("unimodal_closure", uni_fail == 0, format!("{uni_fail} of 200 pairs failed"));

    let (cases, fails, slack) = riemann_suite(&mut rng);
    c.check(
        "riemann_shift_bound",
        fails == 0,
        format!("{fails} of {cases} cases exceed (A/M) f(0) + 1e-8; smallest slack {slack:e}"),
    );
    Ok(c)
}

/// Test family for the shifted Riemann sum: closure, support, exact integral, peak.
type Family = (Box<dyn Fn(f64) -> f64>, (f64, f64), f64, SumForm);

pub fn riemann_families(a: f64) -> Vec<(&'static str, Family)> {
    let h = a / 2.0;
    let gauss_norm = |s: f64| {
        // midpoint quadrature on 2e5 cells
        let n = 200_000;
        let w = a / n as f64;
        (0..n)
            .map(|i| {
                let x = -h + (i as f64 + 0.5) * w;
                (-x * x / (2.0 * s * s)).exp()
            })
            .sum::<f64>()
            * w
    };
    let truncated = |s: f64| -> Family {
        let z = gauss_norm(s);
        (
            Box::new(move |x: f64| if x.abs() <= h { (-x * x / (2.0 * s * s)).exp() / z } else { 0.0 }),
            (-h, h),
            1.0,
            SumForm::Bounded,
        )
    };
    vec![
        (
            "uniform",
            (Box::new(move |x: f64| if x.abs() <= h { 1.0 / a } else { 0.0 }), (-h, h), 1.0, SumForm::Bounded),
        ),
        (
            "triangle",
            (Box::new(move |x: f64| ((1.0 - x.abs() / h) / h).max(0.0)), (-h, h), 1.0, SumForm::Bounded),
        ),
        ("truncated_gaussian_0.8", truncated(0.8)),
        ("truncated_gaussian_1.8", truncated(1.8)),
        (
            "gaussian",
            (
                Box::new(|x: f64| (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()),
                (-8.0, 8.0),
                1.0,
                SumForm::FullLine,
            ),
        ),
    ]
}

/// Families x M in 2..=64 x 16 random shifts; returns (cases, failures, smallest slack).
pub fn riemann_suite(rng: &mut ChaCha8Rng) -> (usize, usize, f64) {
    let a = 6.0;
    let mut cases = 0;
    let mut fails = 0;
    let mut slack = f64::INFINITY;
    for (_, (f, support, integral, form)) in riemann_families(a) {
        let peak = f(0.0);
        for m in 2..=64usize {
            let step = a / m as f64;
            for _ in 0..16 {
                let x = rng.random::<f64>() * step / 2.0;
                let sum = riemann_shift_sum_fn(&f, support, a, m, x, form).expect("valid shift");
                let s = step * peak + 1e-8 - (integral - sum).abs();
                slack = slack.min(s);
                cases += 1;
                if s < 0.0 {
                    fails += 1;
                }
            }
        }
    }
    (cases, fails, slack)
}

fn dpc(setup: &ShapingSetup, seed: u64) -> CliResult<Collector> {
    let mut c = Collector::new("dpc");
    let (m, a) = (setup.order, setup.interval);
    let shaping = setup.shaping()?;
    let input = shaping.input()?;
    let q = &input.q;
    let ext = input.extrema;
    let q0 = q.eval(0.0);
    c.value("q0", q0);
    c.value("d_min", ext.d_min);
    c.value("d_max", ext.d_max);
    let offsets = ((ext.d_max - 1.0) - (1.0 - ext.d_min)).abs();
    c.check(
        "d_extrema",
        ext.d_min <= 1.0 && ext.d_max >= 1.0 && offsets < 1e-9,
        format!("d_min = {:.6}, d_max = {:.6}", ext.d_min, ext.d_max),
    );
    let prof = d_profile(q, a, m)?;
    let inside = prof.values().iter().all(|&d| d >= ext.d_min - 1e-12 && d <= ext.d_max + 1e-12);
    c.check("d_profile_within_extrema", inside, format!("{} profile samples", prof.n()));
    let period = a / m as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let periodic = (0..200)
        .map(|_| {
            let x = (rng.random::<f64>() - 0.5) * a;
            (d_value(q, a, m, x) - d_value(q, a, m, x.rem_euclid(period))).abs()
        })
        .fold(0.0f64, f64::max);
    c.check("d_periodic", periodic <= 1e-9, format!("max |d(x) - d(x mod A/M)| = {periodic:e}"));

    let lower = input.lower()?;
    let upper = input.upper()?;
    let p = &input.p;
    let fig2 = sandwich_violation(&lower, p, &upper);
    c.check("fig2_sandwich", fig2 <= 1e-12, format!("largest violation {fig2:e} over {} points", p.n()));
    c.check(
        "input_mass",
        (p.mass() - 1.0).abs() <= 1e-6,
        format!("mass {}", p.mass()),
    );

    let power = p.second_moment();
    let (plo, phi) = power_bounds(q, &ext)?;
    c.value("power", power);
    c.check(
        "power_bracket",
        plo <= power && power <= phi,
        format!("{plo:.6} <= {power:.6} <= {phi:.6}"),
    );
    let hx = entropy(p)?;
    let (hlo, hhi) = entropy_bounds_x(q, &ext)?;
    c.value("h_x", hx);
    c.check(
        "entropy_bracket",
        hlo <= hx && hx <= hhi,
        format!("{hlo:.6} <= {hx:.6} <= {hhi:.6}"),
    );

    let cfg = ScalarDpcConfig::new(shaping, 1.0, NoiseMixture::gaussian(power.sqrt()))?;
    let an = analyze(&cfg)?;
    let fig3 = sandwich_violation(&an.z_lower, &an.z_prime, &an.z_upper);
    c.check("fig3_sandwich", fig3 <= 1e-12, format!("largest violation {fig3:e}"));
    let y = &an.y_prime;
    let shift = y.n() / m;
    let vals = y.values();
    let per = (0..y.n())
        .map(|i| (vals[i] - vals[(i + shift) % y.n()]).abs())
        .fold(0.0f64, f64::max);
    c.check("y_prime_periodic", per < 1e-6, format!("max deviation {per:e}"));
    let ye = an.y_extrema;
    c.value("p_min", ye.p_min);
    c.value("p_max", ye.p_max);
    c.value("h_y", an.report.h_y);
    match an.h_y_bounds {
        Some((lo, hi)) => {
            let inside = vals.iter().all(|&v| v >= ye.p_min - 1e-12 && v <= ye.p_max + 1e-12);
            c.check("y_prime_within_extrema", inside, format!("[{:.6}, {:.6}]", ye.p_min, ye.p_max));
            c.check(
                "h_y_bracket",
                lo <= an.report.h_y && an.report.h_y <= hi,
                format!("{lo:.6} <= {:.6} <= {hi:.6}", an.report.h_y),
            );
        }
        None => c.check(
            "h_y_bracket",
            true,
            format!("not applicable: p_min = {:.6} <= 0", ye.p_min),
        ),
    }
    let rate = an.report.rate;
    let target = 0.5 * 2f64.ln();
    c.value("rate", rate);
    c.value("i_u_y", an.report.i_u_y);
    c.check(
        "rate_within_capacity",
        rate >= 0.0 && rate <= target,
        format!("0 <= {rate:.6} <= {target:.6}"),
    );

    let alphabet = shaping.alphabet();
    let norm = (0..100)
        .map(|_| {
            let s = (rng.random::<f64>() - 0.5) * a;
            shaping_probabilities(s, q, &alphabet).map(|p| (p.iter().sum::<f64>() - 1.0).abs())
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0f64, f64::max);
    c.check("shaping_normalised", norm < 1e-10, format!("max |sum - 1| = {norm:e}"));

    let enc = Encoder::new(&cfg)?;
    let sigma_z = power.sqrt();
    let mut chain = 0.0f64;
    let mut counts = vec![0u64; m];
    for _ in 0..10_000 {
        let s = rng.sample::<f64, _>(StandardNormal) * 10.0;
        let e = enc.encode(s, &mut rng)?;
        let z = rng.sample::<f64, _>(StandardNormal) * sigma_z;
        let yv = e.x + s + z;
        let yp = receiver_front(yv, cfg.alpha, e.d, a);
        let zp = effective_noise(e.x, z, cfg.alpha);
        chain = chain.max(wrap(yp - (e.u + zp), a).abs());
        counts[e.u_index] += 1;
    }
    c.check("chain_identity", chain < 1e-9, format!("max gap {chain:e} over 10^4 trials"));
    let chi = scalar_dpc::montecarlo::chi_square_uniform(&counts);
    c.check("u_uniform", chi.p_value > 1e-3, format!("chi-square p-value {:.4}", chi.p_value));
    Ok(c)
}

/// Largest amount by which `lower <= mid <= upper` fails on a shared grid.
pub fn sandwich_violation(lower: &GridDensity, mid: &GridDensity, upper: &GridDensity) -> f64 {
    let xs: Vec<f64> = mid.centers().collect();
    xs.iter()
        .zip(mid.values())
        .map(|(&x, &v)| (lower.eval(x) - v).max(v - upper.eval(x)).max(0.0))
        .fold(0.0, f64::max)
}

fn random_complex(rng: &mut ChaCha8Rng, r: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(r, cols, |_, _| {
        num_complex::Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

fn random_pd(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let g = random_complex(rng, n, n);
    let m = &g * g.adjoint() + CMatrix::identity(n, n).scale(0.1);
    (&m + m.adjoint()).scale(0.5)
}

/// Random model with up to three receivers and up to four antennas per side.
pub fn random_model(rng: &mut ChaCha8Rng) -> CliResult<ChannelModel> {
    let k = rng.random_range(1..=3);
    let n_t = rng.random_range(1..=4);
    let mut receivers: Vec<Receiver> = (0..k)
        .map(|_| {
            let n_k = rng.random_range(1..=4);
            let rank = rng.random_range(1..=n_t);
            let g = random_complex(rng, n_t, rank);
            Receiver {
                h: random_complex(rng, n_k, n_t),
                q: random_pd(rng, n_k),
                k: &g * g.adjoint(),
            }
        })
        .collect();
    let total: f64 = receivers.iter().map(|r| r.k.trace().re).sum();
    let power = 1.0 + rng.random::<f64>() * 9.0;
    for r in &mut receivers {
        r.k = r.k.scale(power / total);
        r.k = (&r.k + r.k.adjoint()).scale(0.5);
    }
    let mut ordering: Vec<usize> = (0..k).collect();
    for i in (1..k).rev() {
        ordering.swap(i, rng.random_range(0..=i));
    }
    Ok(ChannelModel::new(receivers, power, ordering)?)
}

fn mimo(seed: u64) -> CliResult<Collector> {
    let mut c = Collector::new("mimo");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut recon, mut unit, mut rows, mut order_bad, mut last_bad) = (0.0f64, 0.0f64, 0.0f64, 0, 0);
    for _ in 0..50 {
        let model = random_model(&mut rng)?;
        let plan = decompose(&model)?;
        for k in 0..model.num_receivers() {
            let w = whiten_and_svd(k, &model)?;
            let h = &model.receiver(k).h;
            let lhs = &w.u * rect_diag(&w.sigma, h.nrows(), h.ncols()) * w.v.adjoint();
            recon = recon.max(relative_residual(&lhs, &(&w.whitener * h * &w.k_sqrt)));
            unit = unit.max(unitarity_residual(&w.u)).max(unitarity_residual(&w.v));
            if w.sigma.windows(2).any(|s| s[1] > s[0]) {
                order_bad += 1;
            }
        }
        for rp in &plan.receivers {
            for sc in &rp.subchannels {
                rows = rows.max((sc.noise_variance() - 1.0).abs());
            }
            if rp.position + 1 == model.num_receivers() && rp.subchannels.iter().any(|s| !s.a.is_empty()) {
                last_bad += 1;
            }
        }
    }
    c.check("svd_reconstruction", recon < 1e-9, format!("max relative residual {recon:e}"));
    c.check("svd_unitarity", unit < 1e-9, format!("max residual {unit:e}"));
    c.check("sigma_sorted", order_bad == 0, format!("{order_bad} unsorted receivers"));
    c.check("unit_variance_rows", rows <= 1e-8, format!("max | sum |a|^2 + |b|^2 - 1 | = {rows:e}"));
    c.check("last_receiver_gaussian", last_bad == 0, format!("{last_bad} plans with shaped noise"));

    let one = |v: f64| CMatrix::from_element(1, 1, num_complex::Complex64::new(v, 0.0));
    let scalar = ChannelModel::new(
        vec![
            Receiver { h: one(1.0), q: one(1.0), k: one(0.0) },
            Receiver { h: one(1.0), q: one(1.0), k: one(2.0) },
        ],
        2.0,
        vec![0, 1],
    )?;
    let qc = effective_noise_cov(0, &scalar)[(0, 0)].re;
    let plan = decompose(&scalar)?;
    let sc = &plan.receiver(0).subchannels[0];
    let a2 = sc.a.iter().map(|x| x.value.norm_sqr()).sum::<f64>();
    let b2 = sc.b.iter().map(|x| x.norm_sqr()).sum::<f64>();
    c.check(
        "scalar_two_user",
        (qc - 3.0).abs() < 1e-12 && (a2 - 2.0 / 3.0).abs() < 1e-12 && (b2 - 1.0 / 3.0).abs() < 1e-12,
        format!("Q_check = {qc}, |a|^2 = {a2:.12}, |b|^2 = {b2:.12}"),
    );

    let mut det_err = 0.0f64;
    for _ in 0..20 {
        let n_t = rng.random_range(1..=4);
        let n_r = rng.random_range(1..=4);
        let kk = random_pd(&mut rng, n_t);
        let p = kk.trace().re;
        let r = Receiver { h: random_complex(&mut rng, n_r, n_t), q: random_pd(&mut rng, n_r), k: kk };
        let model = ChannelModel::new(vec![r.clone()], p, vec![0])?;
        let sum: f64 = capacity_targets(&decompose(&model)?).iter().map(|t| t.complex).sum();
        let wq = scalar_dpc::mimo::inv_sqrt(&r.q)?;
        let g = CMatrix::identity(n_r, n_r) + &wq * &r.h * &r.k * r.h.adjoint() * &wq;
        let logdet = g.determinant().re.ln();
        det_err = det_err.max(((sum - logdet) / logdet).abs());
    }
    c.check("single_user_logdet", det_err < 1e-9, format!("max relative error {det_err:e}"));
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_families_have_expected_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let f = random_unimodal(&mut rng).unwrap();
            assert!((f.mass() - 1.0).abs() < 1e-12);
            assert!(is_symmetric(&f, 1e-12) && is_unimodal(&f, 1e-12));
            let g = random_symmetric(&mut rng).unwrap();
            assert!(is_symmetric(&g, 1e-12));
        }
    }

    #[test]
    fn sandwich_violation_detects_crossing() {
        let u = GridDensity::uniform(-1.0, 1.0, 10).unwrap();
        let half = u.scaled(0.5).unwrap();
        assert_eq!(sandwich_violation(&half, &u, &u), 0.0);
        assert_eq!(sandwich_violation(&u, &half, &u), 0.25);
    }
}
