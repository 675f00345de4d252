use proptest::prelude::*;
use scalar_dpc::density::{convolve, d_value, is_symmetric, mod_reduce, wrap, GridDensity};
use scalar_dpc::dpc::{analyze, Encoder, NoiseMixture, ScalarDpcConfig};
use scalar_dpc::{ScalarDpcConfigF32, ShapingF32, ShapingF64};

/// Direct sum of `q` over the M shifted copies, evaluated by interpolation.
fn d_oracle(q: &GridDensity, a: f64, m: usize, x: f64) -> f64 {
    (0..m)
        .map(|k| a / m as f64 * q.eval(wrap(x + k as f64 * a / m as f64, a)))
        .sum()
}

#[test]
fn d_value_matches_shift_sum() {
    let s = ShapingF64::new(8, 6.0, 1.5).unwrap();
    let q = s.shaping_density().unwrap();
    for i in 0..50 {
        let x = -3.0 + 6.0 * i as f64 / 50.0;
        let got = d_value(&q, 6.0, 8, x);
        assert!((got - d_oracle(&q, 6.0, 8, x)).abs() < 1e-9, "x = {x}");
    }
}

#[test]
fn f32_analysis_tracks_f64() {
    let a64 = analyze(&ScalarDpcConfig::new(ShapingF64::new(4, 6.0, 1.8).unwrap(), 1.0, NoiseMixture::gaussian(1.0)).unwrap()).unwrap();
    let cfg32: ScalarDpcConfigF32 =
        ScalarDpcConfig::new(ShapingF32::new(4, 6.0, 1.8).unwrap(), 1.0, NoiseMixture::gaussian(1.0)).unwrap();
    let a32 = analyze(&cfg32).unwrap();
    assert!((a32.report.rate as f64 - a64.report.rate).abs() < 1e-3);
    assert!((a32.inputs.own.extrema.d_min as f64 - a64.inputs.own.extrema.d_min).abs() < 1e-4);
}

#[test]
fn rate_grows_with_order() {
    let rate = |m| {
        let s = ShapingF64::matched(1.0, m, 6.0).unwrap();
        analyze(&ScalarDpcConfig::new(s, 1.0, NoiseMixture::gaussian(1.0)).unwrap()).unwrap().report.rate
    };
    let r: Vec<f64> = [4, 8, 16, 64].into_iter().map(rate).collect();
    assert!(r.windows(2).all(|w| w[1] > w[0]), "{r:?}");
    assert!(r[3] < 0.5 * 2f64.ln());
}

#[test]
fn too_few_points_is_rejected() {
    let err = ShapingF64::matched(1.0, 2, 6.0).and_then(|s| s.input()).unwrap_err();
    assert!(matches!(err, scalar_dpc::Error::DegenerateShaping(_)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mod_reduce_lands_in_interval(x in -1e3f64..1e3, a in 0.1f64..20.0) {
        let r = mod_reduce(x, a).unwrap();
        prop_assert!(r >= -a / 2.0 && r < a / 2.0);
        let k = (x - r) / a;
        prop_assert!((k - k.round()).abs() < 1e-9);
    }

    #[test]
    fn mod_reduce_is_periodic(x in -50.0f64..50.0, a in 0.5f64..10.0, k in -5i32..5) {
        let r1 = mod_reduce(x, a).unwrap();
        let r2 = mod_reduce(x + k as f64 * a, a).unwrap();
        let diff = (r1 - r2).abs();
        prop_assert!(diff < 1e-9 || (a - diff).abs() < 1e-9);
    }

    #[test]
    fn shaping_density_is_normalised(m in 4usize..40, ratio in 3.0f64..8.0, power in 0.1f64..5.0) {
        let s = ShapingF64::matched(power, m, ratio).unwrap();
        let q = s.shaping_density().unwrap();
        prop_assert!((q.mass() - 1.0).abs() < 1e-9);
        let input = s.input().unwrap();
        prop_assert!((input.p.mass() - 1.0).abs() < 1e-6);
        prop_assert!(input.extrema.d_min <= 1.0 && input.extrema.d_max >= 1.0);
    }

    #[test]
    fn input_density_is_sandwiched(m in 3usize..32, sigma in 0.8f64..3.0) {
        let input = ShapingF64::new(m, 6.0, sigma).unwrap().input().unwrap();
        let e = input.extrema;
        for (&p, &q) in input.p.values().iter().zip(input.q.values()) {
            prop_assert!(q / e.d_max - p <= 1e-12 && p - q / e.d_min <= 1e-12);
        }
    }

    #[test]
    fn symmetric_convolution_is_symmetric(
        a in prop::collection::vec(0.0f64..1.0, 1..30),
        b in prop::collection::vec(0.0f64..1.0, 1..30),
    ) {
        let mirror = |side: &[f64]| {
            let v: Vec<f64> = side.iter().rev().chain(&side[1..]).copied().collect();
            let total: f64 = v.iter().sum::<f64>() * 0.1;
            let half = v.len() as f64 * 0.05;
            GridDensity::new(-half, half, v.iter().map(|x| (x + 1e-3) / (total + 1e-4 * v.len() as f64)).collect())
        };
        let (f, g) = (mirror(&a).unwrap(), mirror(&b).unwrap());
        let fg = convolve(&f, &g).unwrap();
        prop_assert!(is_symmetric(&fg, 1e-9 * fg.max_value()));
    }

    #[test]
    fn encoder_output_lies_in_interval(s in -20.0f64..20.0, d in -2.9f64..2.9, pick in 0usize..8) {
        let cfg = ScalarDpcConfig::new(ShapingF64::new(8, 6.0, 1.8).unwrap(), 1.0, NoiseMixture::gaussian(1.0)).unwrap();
        let enc = Encoder::new(&cfg).unwrap();
        let e = enc.encode_with(s, d, |_| pick).unwrap();
        prop_assert!(e.x >= -3.0 && e.x < 3.0);
        prop_assert!(e.s_prime >= -3.0 && e.s_prime < 3.0);
        let back = mod_reduce(e.x + e.s_prime - e.u, 6.0).unwrap();
        prop_assert!(back.abs() < 1e-9 || (back.abs() - 3.0).abs() < 1e-9);
    }
}
