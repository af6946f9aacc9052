//! BPSK over AWGN.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelSpec {
    pub ebno_db: f64,
    pub rate: f64,
    pub seed: u64,
}

impl ChannelSpec {
    pub fn new(ebno_db: f64, rate: f64, seed: u64) -> Self {
        Self { ebno_db, rate, seed }
    }

    /// Noise variance per real dimension for unit-energy symbols:
    /// `1 / (2 R Eb/N0)`.
    pub fn noise_variance(&self) -> f64 {
        1.0 / (2.0 * self.rate * 10f64.powf(self.ebno_db / 10.0))
    }
}

/// Bit `b` is sent as `1 - 2b` and received with additive Gaussian noise, one
/// normal draw per symbol in order.
pub fn transmit(spec: &ChannelSpec, bits: &[u8]) -> Vec<f64> {
    let sigma = spec.noise_variance().sqrt();
    let mut rng = rng_from_seed(spec.seed);
    bits.iter()
        .map(|&b| {
            let n: f64 = StandardNormal.sample(&mut rng);
            (1.0 - 2.0 * b as f64) + sigma * n
        })
        .collect()
}

/// Channel LLRs `2y / σ²`.
pub fn llr(spec: &ChannelSpec, samples: &[f64]) -> Result<Vec<f64>> {
    llr_with_variance(spec.noise_variance(), samples)
}

pub fn llr_with_variance(variance: f64, samples: &[f64]) -> Result<Vec<f64>> {
    if !(variance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise variance {variance} must be positive"
        )));
    }
    let scale = 2.0 / variance;
    Ok(samples.iter().map(|y| scale * y).collect())
}
