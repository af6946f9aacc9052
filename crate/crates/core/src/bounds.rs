//! Union-bound ML asymptotes from distance-spectrum terms.

use crate::spectrum::SpectrumTerm;

/// Gaussian tail probability `P(Z > x)` for standard normal `Z`.
///
/// Underflows to zero for `x` beyond about 38.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptotePoint {
    pub ebno_db: f64,
    pub ber: f64,
}

/// Evenly spaced grid `start, start + step, ...` up to and including `stop`.
pub fn ebno_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || stop < start {
        return vec![start];
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|k| start + k as f64 * step).collect()
}

/// Default plotting grid, 0 to 6 dB in 0.25 dB steps.
pub fn default_grid() -> Vec<f64> {
    ebno_grid(0.0, 6.0, 0.25)
}

/// One spectral term's contribution `(w/N) Q(sqrt(2 d R Eb/N0))`.
fn term_ber(w: f64, d: f64, n: usize, rate: f64, ebno_db: f64) -> f64 {
    let ebno = 10f64.powf(ebno_db / 10.0);
    w / n as f64 * q_function((d * rate * 2.0 * ebno).sqrt())
}

/// Single-term asymptote; accepts the non-integer ensemble means.
pub fn asymptote_single(w_free: f64, d_free: f64, n: usize, rate: f64, grid: &[f64]) -> Vec<AsymptotePoint> {
    grid.iter()
        .map(|&ebno_db| AsymptotePoint {
            ebno_db,
            ber: term_ber(w_free, d_free, n, rate, ebno_db),
        })
        .collect()
}

/// Sum of the single-term asymptote over every listed term.
pub fn asymptote_multi(terms: &[SpectrumTerm], n: usize, rate: f64, grid: &[f64]) -> Vec<AsymptotePoint> {
    grid.iter()
        .map(|&ebno_db| AsymptotePoint {
            ebno_db,
            ber: terms
                .iter()
                .map(|t| term_ber(t.information_weight as f64, t.weight as f64, n, rate, ebno_db))
                .sum(),
        })
        .collect()
}

/// `ebno_db,ber` CSV.
pub fn asymptote_csv(points: &[AsymptotePoint]) -> String {
    let mut s = String::from("ebno_db,ber\n");
    for p in points {
        s.push_str(&format!("{},{:e}\n", p.ebno_db, p.ber));
    }
    s
}
