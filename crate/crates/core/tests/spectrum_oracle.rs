use oeturbo::codec::{PuncturePhase, Termination, TurboCodeConfig};
use oeturbo::interleave::{gen_random, gen_random_oddeven, Permutation};
use oeturbo::poly::RscSpec;
use oeturbo::spectrum::{brute_force_spectrum, compute_spectrum, SearchLimits};

const TERMS: [Termination; 4] = Termination::ALL;
const PHASES: [PuncturePhase; 2] = [PuncturePhase::P1AtEvenIndex, PuncturePhase::P1AtOddIndex];

fn check(cfg: &TurboCodeConfig, d_max: u32) {
    let fast = compute_spectrum(cfg, SearchLimits::new(d_max)).unwrap();
    let slow = brute_force_spectrum(cfg, d_max).unwrap();
    assert_eq!(
        fast.terms,
        slow.terms,
        "N={} {:?} {:?} {:?}",
        cfg.n(),
        cfg.termination,
        cfg.phase,
        cfg.interleaver.table()
    );
    assert_eq!(fast.min_weight_inputs, slow.min_weight_inputs);
}

#[test]
fn search_matches_brute_force_small_frames() {
    for (k, code) in [RscSpec::lte(), RscSpec::berrou()].into_iter().enumerate() {
        for n in 6..=12 {
            for term in TERMS {
                for phase in PHASES {
                    let seed = (k * 1000 + n * 10) as u64;
                    let pi = if n % 2 == 0 {
                        gen_random(n, seed)
                    } else {
                        gen_random_oddeven(n, seed)
                    };
                    check(&TurboCodeConfig::new(code, pi.unwrap(), phase, term), 16);
                }
            }
        }
    }
}

#[test]
fn search_matches_brute_force_identity() {
    for term in TERMS {
        let cfg = TurboCodeConfig::new(
            RscSpec::lte(),
            Permutation::identity(14).unwrap(),
            PuncturePhase::P1AtOddIndex,
            term,
        );
        check(&cfg, 12);
    }
}
