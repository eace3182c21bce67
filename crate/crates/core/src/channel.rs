//! AWGN channel: `y = c + sigma * z` with `z` i.i.d. standard normal.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::numeric::{expand_seed, inv_norm_cdf};

/// Received word plus realized-noise diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelOutput {
    /// Received samples, same length as the input.
    pub y: Vec<f64>,
    /// Noise variance the channel was asked to apply.
    pub sigma2: f64,
    /// Realized sample variance of the added noise (0 when `sigma2 == 0`).
    pub realized_noise_var: f64,
}

/// Transmits `codeword` over AWGN with variance `sigma2`, drawing noise from
/// a ChaCha8 stream seeded by `seed`. `sigma2 == 0` returns the codeword
/// bit-exactly without consuming randomness.
pub fn transmit(codeword: &[f64], sigma2: f64, seed: u64) -> ChannelOutput {
    assert!(sigma2 >= 0.0, "noise variance must be nonnegative, got {sigma2}");
    if sigma2 == 0.0 {
        return ChannelOutput { y: codeword.to_vec(), sigma2, realized_noise_var: 0.0 };
    }
    let sigma = libm::sqrt(sigma2);
    let mut rng = ChaCha8Rng::from_seed(expand_seed(seed));
    let mut y = Vec::with_capacity(codeword.len());
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for &c in codeword {
        let x = rng.next_u64();
        let u = (x >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0) + 1.0 / 18_014_398_509_481_984.0;
        let z = sigma * inv_norm_cdf(u);
        sum += z;
        sum_sq += z * z;
        y.push(c + z);
    }
    let n = codeword.len() as f64;
    let realized_noise_var = if codeword.is_empty() { 0.0 } else { sum_sq / n - (sum / n) * (sum / n) };
    ChannelOutput { y, sigma2, realized_noise_var }
}

/// Empirical signal-to-noise ratio `||x||^2 / ||y - x||^2` of a transmitted /
/// received pair. Returns `f64::INFINITY` when the pair is noise-free; report
/// layers serialize that as null.
pub fn empirical_snr(transmitted: &[f64], received: &[f64]) -> f64 {
    assert_eq!(transmitted.len(), received.len(), "length mismatch");
    let signal: f64 = transmitted.iter().map(|x| x * x).sum();
    let noise: f64 = transmitted.iter().zip(received.iter()).map(|(x, y)| (y - x) * (y - x)).sum();
    if noise == 0.0 {
        f64::INFINITY
    } else {
        signal / noise
    }
}
