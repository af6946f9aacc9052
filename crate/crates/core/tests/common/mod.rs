//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use oeturbo::poly::RscSpec;

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(k: usize) -> Vec<(f64, f64)> {
    (1..=k)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (k as f64 + 0.5)).cos();
            loop {
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=k {
                    let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = k as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    let w = 2.0 / ((1.0 - x * x) * dp * dp);
                    return (x, w);
                }
            }
        })
        .collect()
}

/// `Q(x)` by quadrature of the scaled density `exp(-(t^2 - x^2)/2)` over
/// `[x, x + 12]`, multiplied back by `exp(-x^2/2)`.
pub fn q_oracle(x: f64, rule: &[(f64, f64)]) -> f64 {
    let h = 0.05;
    let mut sum = 0.0;
    for k in 0..240 {
        let a = x + k as f64 * h;
        for &(t, w) in rule {
            let s = a + 0.5 * h * (t + 1.0);
            sum += 0.5 * h * w * (-(s - x) * (s + x) / 2.0).exp();
        }
    }
    sum * (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Posterior LLRs by summing over every input of length `n`.
pub fn exhaustive_posterior(
    spec: &RscSpec,
    sys: &[f64],
    par: &[f64],
    apr: &[f64],
    tail: Option<&[(f64, f64)]>,
) -> Vec<f64> {
    let n = sys.len();
    let sgn = |b: u8| 1.0 - 2.0 * b as f64;
    let mut per_bit = vec![[Vec::new(), Vec::new()]; n];
    for x in 0u32..(1 << n) {
        let u: Vec<u8> = (0..n).map(|i| ((x >> i) & 1) as u8).collect();
        let (p, state) = spec.encode(&u);
        let mut m: f64 = (0..n)
            .map(|t| 0.5 * (sys[t] + apr[t]) * sgn(u[t]) + 0.5 * par[t] * sgn(p[t]))
            .sum();
        if let Some(tl) = tail {
            for (&(tu, tp), &(ls, lp)) in spec.tail(state).iter().zip(tl) {
                m += 0.5 * ls * sgn(tu) + 0.5 * lp * sgn(tp);
            }
        }
        for (t, bit) in per_bit.iter_mut().enumerate() {
            bit[u[t] as usize].push(m);
        }
    }
    per_bit.iter().map(|b| logsumexp(&b[0]) - logsumexp(&b[1])).collect()
}
