mod common;

use oeturbo::bounds::{asymptote_multi, asymptote_single, default_grid, q_function};
use oeturbo::channel::{llr, transmit, ChannelSpec};
use oeturbo::spectrum::SpectrumTerm;

#[test]
fn q_function_matches_quadrature() {
    let rule = common::gauss_legendre(20);
    let mut worst: f64 = 0.0;
    for k in 0..=800 {
        let x = k as f64 * 0.0125;
        let rel = (q_function(x) - common::q_oracle(x, &rule)).abs() / common::q_oracle(x, &rule);
        worst = worst.max(rel);
    }
    assert!(worst < 1e-12, "worst relative error {worst:e} on [0, 10]");
    // deep tail, where the result is still a normal number
    for x in [15.0, 20.0, 30.0, 37.0] {
        let rel = (q_function(x) - common::q_oracle(x, &rule)).abs() / common::q_oracle(x, &rule);
        assert!(rel < 1e-12, "x={x}: {rel:e}");
    }
    assert!((q_function(3.0) - 1.349_898_031_630_1e-3).abs() < 1e-15);
}

#[test]
fn reference_asymptotes_are_pinned() {
    let grid = [0.0, 2.0, 4.0, 6.0];
    let cases = [
        (
            (5.004, 7.865),
            [
                2.462946636896804e-5,
                2.0260700687411884e-6,
                4.2996112341277e-8,
                1.0741787738430397e-10,
            ],
        ),
        (
            (8.437, 7.783),
            [
                4.3453964313257974e-5,
                3.6622745692574146e-6,
                8.074482229364029e-8,
                2.1428088425334058e-10,
            ],
        ),
    ];
    for ((w, d), want) in cases {
        let got = asymptote_single(w, d, 512, 0.5, &grid);
        for (p, v) in got.iter().zip(want) {
            assert!(
                (p.ber - v).abs() <= 1e-12 * v,
                "{w},{d} at {} dB: {:e} vs {v:e}",
                p.ebno_db,
                p.ber
            );
        }
    }
}

#[test]
fn one_term_multi_equals_single() {
    let g = default_grid();
    for (w, d, n) in [(1u64, 8u32, 399usize), (3, 7, 400), (5, 12, 512)] {
        let multi = asymptote_multi(&[SpectrumTerm::new(d, 1, w)], n, 0.5, &g);
        let single = asymptote_single(w as f64, d as f64, n, 0.5, &g);
        assert_eq!(multi, single);
    }
}

#[test]
fn asymptotes_scale_inversely_with_length() {
    let g = default_grid();
    let a = asymptote_single(4.0, 9.0, 256, 0.5, &g);
    let b = asymptote_single(4.0, 9.0, 512, 0.5, &g);
    for (x, y) in a.iter().zip(&b) {
        assert!((x.ber - 2.0 * y.ber).abs() <= 1e-15 * x.ber);
    }
}

fn moments(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[test]
fn channel_sample_moments() {
    let spec = ChannelSpec::new(1.0, 0.5, 2024);
    let n = 1_000_000;
    let sigma2 = spec.noise_variance();
    let y = transmit(&spec, &vec![0u8; n]);
    let (mean, var) = moments(&y);
    assert!(
        (mean - 1.0).abs() < 3.0 * sigma2.sqrt() / (n as f64).sqrt(),
        "mean {mean}"
    );
    assert!((var / sigma2 - 1.0).abs() < 0.01, "variance {var} vs {sigma2}");

    // consistency: LLRs of bit 0 have mean 2/sigma^2 and variance 4/sigma^2
    let l = llr(&spec, &y).unwrap();
    let (lm, lv) = moments(&l);
    assert!((lm / (2.0 / sigma2) - 1.0).abs() < 0.01, "llr mean {lm}");
    assert!((lv / (4.0 / sigma2) - 1.0).abs() < 0.01, "llr variance {lv}");

    // uncoded hard decisions
    let errors = l.iter().filter(|&&v| v < 0.0).count() as f64;
    let p = q_function(1.0 / sigma2.sqrt());
    let tol = 4.0 * (p * (1.0 - p) / n as f64).sqrt();
    assert!(
        (errors / n as f64 - p).abs() < tol,
        "hard-decision BER {} vs {p}",
        errors / n as f64
    );
}

#[test]
fn llr_is_odd() {
    let spec = ChannelSpec::new(2.0, 0.5, 0);
    let y = [0.3, -1.2, 2.5, 0.0];
    let neg: Vec<f64> = y.iter().map(|v| -v).collect();
    let a = llr(&spec, &y).unwrap();
    let b = llr(&spec, &neg).unwrap();
    for (p, q) in a.iter().zip(&b) {
        assert_eq!(*p, -*q);
    }
}
