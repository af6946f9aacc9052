//! Acceptance run: one PASS/FAIL line per criterion; exits nonzero on any FAIL.

mod common;

use std::time::Instant;

use oeturbo::bounds::{asymptote_multi, asymptote_single, default_grid, q_function};
use oeturbo::codec::{
    siso_logmap, turbo_decode, turbo_encode, LlrFrame, MaxStar, PuncturePhase, Termination, TurboCodeConfig,
};
use oeturbo::harness::{run_ber_sweep, run_census, run_ensemble_stats, EnsembleStats, FamilyKind, RunConfig};
use oeturbo::interleave::{
    gen_block, gen_hsr_oddeven, gen_random, gen_random_oddeven, uep_coverage, HsrBudget, Permutation,
};
use oeturbo::poly::RscSpec;
use oeturbo::rng::{derive_seed, rng_from_seed};
use oeturbo::spectrum::{brute_force_spectrum, compute_spectrum, SearchLimits, SpectrumTerm};
use rand::Rng;

const MASTER: u64 = 2024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target
}

fn terms(list: &[(u32, u64, u64)]) -> Vec<SpectrumTerm> {
    list.iter().map(|&(d, m, w)| SpectrumTerm::new(d, m, w)).collect()
}

fn berrou_block(rows: usize, cols: usize) -> TurboCodeConfig {
    TurboCodeConfig::new(
        RscSpec::berrou(),
        gen_block(rows, cols).unwrap(),
        PuncturePhase::P1AtEvenIndex,
        Termination::BothSecondParityOnly,
    )
}

fn table(rows: usize, cols: usize, want: &[(u32, u64, u64)]) -> Outcome {
    let t = Instant::now();
    let got = compute_spectrum(&berrou_block(rows, cols), SearchLimits::new(12)).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let shown: Vec<String> = got
        .terms
        .iter()
        .map(|t| format!("({},{},{})", t.weight, t.multiplicity, t.information_weight))
        .collect();
    outcome(
        got.terms == terms(want) && secs <= 900.0,
        format!(
            "gen_block(rows={rows}, cols={cols}), term=both-p2, phase=even: {} in {secs:.2}s",
            shown.join(" ")
        ),
    )
}

fn ensemble(family: FamilyKind, s: Option<u32>, samples: usize) -> EnsembleStats {
    let cfg = RunConfig {
        family,
        s,
        n: Some(512),
        samples,
        seed: MASTER,
        ..Default::default()
    };
    run_ensemble_stats(&cfg).unwrap()
}

fn show(e: &EnsembleStats) -> String {
    format!(
        "{}{} M={} (d,N,w)=({:.3},{:.3},{:.3})",
        e.family,
        if e.params.is_empty() {
            String::new()
        } else {
            format!("[{}]", e.params)
        },
        e.samples,
        e.mean_dfree,
        e.mean_nfree,
        e.mean_wfree
    )
}

fn criterion3() -> Outcome {
    let r = ensemble(FamilyKind::Random, None, 2000);
    let o = ensemble(FamilyKind::RandomOddEven, None, 2000);
    let close = |e: &EnsembleStats, t: (f64, f64, f64)| {
        within(e.mean_dfree, t.0, 0.05) && within(e.mean_nfree, t.1, 0.05) && within(e.mean_wfree, t.2, 0.05)
    };
    let ratio = o.mean_nfree / r.mean_nfree;
    let pass = close(&r, (7.865, 2.273, 5.004))
        && close(&o, (7.783, 3.953, 8.437))
        && r.mean_dfree > o.mean_dfree
        && (1.5..=2.3).contains(&ratio);
    outcome(pass, format!("{}; {}; N ratio {ratio:.3}", show(&r), show(&o)))
}

fn criterion4() -> Outcome {
    let h20 = ensemble(FamilyKind::Hsr, Some(20), 1000);
    let o20 = ensemble(FamilyKind::HsrOddEven, Some(20), 1000);
    let h21 = ensemble(FamilyKind::Hsr, Some(21), 1000);
    let o21 = ensemble(FamilyKind::HsrOddEven, Some(21), 1000);
    let ratio = o21.mean_nfree / h21.mean_nfree;
    let pass = (8.8..=9.2).contains(&h20.mean_dfree)
        && within(o20.mean_dfree, 11.82, 0.05)
        && within(h21.mean_dfree, 10.807, 0.07)
        && within(o21.mean_dfree, 11.821, 0.05)
        && o20.mean_dfree > h20.mean_dfree
        && ratio > 3.0;
    outcome(
        pass,
        format!(
            "{}; {}; {}; {}; N ratio at S=21 {ratio:.2}",
            show(&h20),
            show(&o20),
            show(&h21),
            show(&o21)
        ),
    )
}

fn criterion5() -> Outcome {
    let n = 512.0;
    let mut cfg = RunConfig {
        n: Some(512),
        samples: 10_000,
        seed: MASTER,
        ..Default::default()
    };
    let random = run_census(&cfg, false).unwrap().preservation_probability();
    cfg.family = FamilyKind::RandomOddEven;
    let oe = run_census(&cfg, false).unwrap().preservation_probability();
    let ratio = oe / random;
    let pass = within(random, 2.0 / n, 0.2) && within(oe, 4.0 / n, 0.2) && (1.8..=2.2).contains(&ratio);
    outcome(
        pass,
        format!(
            "10000 draws, CL=7: random {:.3}/N, random-oe {:.3}/N, ratio {ratio:.3}",
            random * n,
            oe * n
        ),
    )
}

fn criterion6() -> Outcome {
    let phases = [PuncturePhase::P1AtEvenIndex, PuncturePhase::P1AtOddIndex];
    let uniform = |p: &Permutation| phases.iter().all(|&ph| uep_coverage(p, ph).is_uniform());
    let mut odd_even_ok = uniform(&gen_block(19, 21).unwrap());
    for k in 0..100 {
        odd_even_ok &= uniform(&gen_random_oddeven(512, derive_seed(MASTER, k)).unwrap());
    }
    for k in 0..10 {
        let p = gen_hsr_oddeven(512, 20, derive_seed(MASTER, k), HsrBudget::default()).unwrap();
        odd_even_ok &= uniform(&p);
    }
    let mixed = (0..100)
        .filter(|&k| {
            let h = uep_coverage(
                &gen_random(512, derive_seed(MASTER + 1, k)).unwrap(),
                PuncturePhase::P1AtEvenIndex,
            )
            .histogram;
            h[0] > 0 && h[2] > 0
        })
        .count();
    outcome(
        odd_even_ok && mixed >= 99,
        format!(
            "odd-even (21x19 block, 100 random-oe, 10 hsr-oe) uniform: {odd_even_ok}; random draws with 0- and 2-protected bits: {mixed}/100"
        ),
    )
}

fn criterion7() -> Outcome {
    let mut rng = rng_from_seed(MASTER);
    let mut mismatches = Vec::new();
    for k in 0..50usize {
        let n = rng.gen_range(6..=12);
        let spec = if k % 2 == 0 { RscSpec::lte() } else { RscSpec::berrou() };
        let term = Termination::ALL[(k / 2) % 4];
        let phase = if (k / 8) % 2 == 0 {
            PuncturePhase::P1AtEvenIndex
        } else {
            PuncturePhase::P1AtOddIndex
        };
        let seed = rng.gen();
        let pi = if (k / 16) % 2 == 0 {
            gen_random(n, seed)
        } else {
            gen_random_oddeven(n, seed)
        }
        .unwrap();
        let cfg = TurboCodeConfig::new(spec, pi, phase, term);
        let fast = compute_spectrum(&cfg, SearchLimits::new(16)).unwrap();
        let slow = brute_force_spectrum(&cfg, 16).unwrap();
        if fast.terms != slow.terms {
            mismatches.push(format!("#{k} n={n} {term} {phase}"));
        }
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "50 configurations, d_max=16; mismatches: {}",
            if mismatches.is_empty() {
                "none".into()
            } else {
                mismatches.join(", ")
            }
        ),
    )
}

fn criterion8() -> Outcome {
    // log-MAP posterior vs exhaustive MAP on the constituent trellis, N=8
    let mut rng = rng_from_seed(MASTER);
    let mut worst: f64 = 0.0;
    for spec in [RscSpec::lte(), RscSpec::berrou()] {
        let m = spec.memory() as usize;
        for trial in 0..20 {
            let mut draw =
                |scale: f64| -> Vec<f64> { (0..8).map(|_| scale * (rng.gen::<f64>() * 2.0 - 1.0)).collect() };
            let (sys, par, apr) = (draw(4.0), draw(4.0), draw(2.0));
            let flat = draw(3.0);
            let tail_llr: Vec<(f64, f64)> = (0..m).map(|i| (flat[i], flat[7 - i])).collect();
            let tail = (trial % 2 == 0).then_some(&tail_llr[..]);
            let ext = siso_logmap(&spec, &sys, &par, &apr, tail, MaxStar::Exact).unwrap();
            let exact = common::exhaustive_posterior(&spec, &sys, &par, &apr, tail);
            for t in 0..8 {
                worst = worst.max((ext[t] + sys[t] + apr[t] - exact[t]).abs());
            }
        }
    }

    // noiseless decoding across codes and terminations
    let mut noiseless_ok = true;
    for (k, term) in Termination::ALL.into_iter().enumerate() {
        for spec in [RscSpec::lte(), RscSpec::berrou()] {
            let cfg = TurboCodeConfig::new(
                spec,
                gen_random(512, k as u64).unwrap(),
                PuncturePhase::P1AtEvenIndex,
                term,
            );
            let info: Vec<u8> = (0..512).map(|_| rng.gen_range(0..2)).collect();
            let bits = turbo_encode(&cfg, &info).unwrap().to_bits();
            let llr: Vec<f64> = bits.iter().map(|&b| 5.0 * (1.0 - 2.0 * b as f64)).collect();
            let out = turbo_decode(&cfg, &LlrFrame::from_flat(&cfg, &llr).unwrap(), 10).unwrap();
            noiseless_ok &= out.bits == info;
        }
    }

    // BER harness: LTE, random interleaver per frame, N=512, 10 iterations, 2.0 dB
    let cfg = RunConfig {
        n: Some(512),
        snr: vec![2.0],
        iterations: 10,
        min_bit_errors: 2000,
        max_frames: 3000,
        seed: MASTER,
        ..Default::default()
    };
    let p = run_ber_sweep(&cfg).unwrap()[0];
    let ber_ok = p.ber() <= 1e-4;
    outcome(
        worst < 1e-6 && noiseless_ok && ber_ok,
        format!(
            "max |log-MAP - exhaustive MAP| = {worst:.2e}; noiseless error-free: {noiseless_ok}; BER at 2.0 dB = {:.3e} ({} errors in {} frames)",
            p.ber(),
            p.bit_errors,
            p.frames
        ),
    )
}

fn criterion9() -> Outcome {
    let rule = common::gauss_legendre(20);
    let worst = (0..=1000)
        .map(|k| {
            let x = k as f64 * 0.01;
            let q = common::q_oracle(x, &rule);
            (q_function(x) - q).abs() / q
        })
        .fold(0.0, f64::max);
    let g = default_grid();
    let one_term =
        asymptote_multi(&[SpectrumTerm::new(8, 1, 1)], 399, 0.5, &g) == asymptote_single(1.0, 8.0, 399, 0.5, &g);
    let pinned = [
        (0.0, 2.462946636896804e-5),
        (2.0, 2.0260700687411884e-6),
        (4.0, 4.2996112341277e-8),
        (6.0, 1.0741787738430397e-10),
    ];
    let grid: Vec<f64> = pinned.iter().map(|p| p.0).collect();
    let eq1 = asymptote_single(5.004, 7.865, 512, 0.5, &grid);
    let pinned_ok = eq1
        .iter()
        .zip(&pinned)
        .all(|(p, &(_, v))| (p.ber - v).abs() <= 1e-12 * v);
    outcome(
        worst < 1e-12 && one_term && pinned_ok,
        format!("Q max rel. error on [0,10] = {worst:.1e}; one-term multi == single: {one_term}; single-term asymptote at the N=512 ensemble means pinned: {pinned_ok}"),
    )
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome); 9] = [
        ("1", "Berrou spectrum, 21x19 odd-even block", || {
            table(19, 21, &[(8, 1, 1), (11, 1, 1), (12, 382, 1523)])
        }),
        ("2", "Berrou spectrum, 20x20 block", || {
            table(
                20,
                20,
                &[(7, 1, 2), (8, 2, 3), (9, 1, 2), (10, 4, 8), (11, 4, 7), (12, 839, 3350)],
            )
        }),
        ("3", "random / random-oe ensemble means, N=512", criterion3),
        ("4", "hsr / hsr-oe ensemble means, N=512", criterion4),
        ("5", "weight-2 pairing probabilities", criterion5),
        ("6", "uniform error protection", criterion6),
        ("7", "spectrum search vs brute force", criterion7),
        ("8", "decoder correctness", criterion8),
        ("9", "Q function and asymptotes", criterion9),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        let t = Instant::now();
        let o = run();
        failed += !o.pass as usize;
        println!(
            "{} criterion {id}: {name} -- {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
