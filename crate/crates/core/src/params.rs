//! Code dimensions and channel constants.
//!
//! A code is described by `L` sections of `B` columns each, a codelength `n`
//! derived from the requested rate, and the AWGN channel constants. All rates
//! and capacities are kept in nats per channel use; reporting layers convert
//! to bits via `ln 2`.

use serde::Serialize;
use thiserror::Error;

/// Construction errors for [`CodeParams`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamsError {
    #[error("section size must be a power of two >= 2, got {b}")]
    SectionSizeNotPowerOfTwo { b: usize },
    #[error("{what} must be positive (got {value})")]
    NonPositive { what: &'static str, value: f64 },
    #[error("threshold offset must be nonnegative, got {a}")]
    NegativeThresholdOffset { a: f64 },
}

/// Dimensions and derived channel constants for one code.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodeParams {
    /// Number of sections.
    pub l: usize,
    /// Section size (power of two).
    pub b: usize,
    /// Codeword length in channel uses: `ceil(L ln(B) / R)`.
    pub n: usize,
    /// Signal-to-noise ratio `P / sigma2`.
    pub snr: f64,
    /// Total codeword power (`snr * sigma2`).
    pub p: f64,
    /// Noise variance (fixed at 1; `snr` carries the scale).
    pub sigma2: f64,
    /// Requested rate in nats per channel use.
    pub rate_nats: f64,
    /// Channel capacity `0.5 ln(1 + snr)` in nats.
    pub capacity_nats: f64,
    /// `nu = P / (P + sigma2) = 1 - e^{-2C}`.
    pub nu: f64,
    /// `nu / 2`, the rate scale of the constant power allocation.
    pub r0: f64,
    /// Threshold offset `a >= 0`.
    pub a: f64,
    /// Small positive shift `h` added to `a` in the analysis.
    pub h: f64,
    /// `a' = a + h`.
    pub a_prime: f64,
    /// Acceptance threshold `tau = sqrt(2 ln B) + a`.
    pub tau: f64,
    /// `log2(B)`.
    pub log2_b: u32,
}

impl CodeParams {
    /// Builds the parameter set, validating ranges and deriving all constants.
    ///
    /// `h` is the analysis shift; use [`CodeParams::default_shift`] for the
    /// standard choice `0.01 * sqrt(2 ln B)`.
    pub fn new(l: usize, b: usize, snr: f64, rate_nats: f64, a: f64, h: f64) -> Result<Self, ParamsError> {
        if l == 0 {
            return Err(ParamsError::NonPositive { what: "section count", value: 0.0 });
        }
        if b < 2 || !b.is_power_of_two() {
            return Err(ParamsError::SectionSizeNotPowerOfTwo { b });
        }
        if !(snr > 0.0) {
            return Err(ParamsError::NonPositive { what: "snr", value: snr });
        }
        if !(rate_nats > 0.0) {
            return Err(ParamsError::NonPositive { what: "rate", value: rate_nats });
        }
        if !(a >= 0.0) {
            return Err(ParamsError::NegativeThresholdOffset { a });
        }
        if !(h > 0.0) {
            return Err(ParamsError::NonPositive { what: "shift h", value: h });
        }
        let sigma2 = 1.0;
        let p = snr * sigma2;
        let ln_b = libm::log(b as f64);
        let n = libm::ceil(l as f64 * ln_b / rate_nats) as usize;
        let capacity_nats = 0.5 * libm::log1p(snr);
        let nu = p / (p + sigma2);
        let tau = libm::sqrt(2.0 * ln_b) + a;
        Ok(CodeParams {
            l,
            b,
            n,
            snr,
            p,
            sigma2,
            rate_nats,
            capacity_nats,
            nu,
            r0: 0.5 * nu,
            a,
            h,
            a_prime: a + h,
            tau,
            log2_b: b.trailing_zeros(),
        })
    }

    /// The standard analysis shift `0.01 * sqrt(2 ln B)`.
    pub fn default_shift(b: usize) -> f64 {
        0.01 * libm::sqrt(2.0 * libm::log(b as f64))
    }

    /// Payload size in bits: `K = L * log2(B)`.
    pub fn payload_bits(&self) -> usize {
        self.l * self.log2_b as usize
    }

    /// The rate actually realized by the integer codelength, `L ln(B) / n`.
    pub fn realized_rate_nats(&self) -> f64 {
        self.l as f64 * libm::log(self.b as f64) / self.n as f64
    }

    /// Total number of dictionary columns, `B * L`.
    pub fn total_columns(&self) -> usize {
        self.b * self.l
    }

    /// Bytes needed to hold the dictionary as f64 (`n * B * L * 8`).
    pub fn dictionary_bytes(&self) -> u128 {
        self.n as u128 * self.total_columns() as u128 * 8
    }

    /// `sqrt(2 ln B)`.
    pub fn root_2_ln_b(&self) -> f64 {
        libm::sqrt(2.0 * libm::log(self.b as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn small_code_constants() {
        let p = CodeParams::new(2, 4, 1.0, 0.25, 0.0, 0.01).unwrap();
        assert_eq!(p.n, 12); // ceil(2 * ln 4 / 0.25) = ceil(11.09)
        assert_abs_diff_eq!(p.capacity_nats, 0.5 * std::f64::consts::LN_2, epsilon = 1e-15);
        assert_abs_diff_eq!(p.nu, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.r0, 0.25, epsilon = 1e-15);
        assert_eq!(p.payload_bits(), 4);
    }

    #[test]
    fn high_snr_capacity() {
        // snr = 15: capacity = 0.5 ln 16 = 2 ln 2 nats; nu = 15/16.
        let p = CodeParams::new(8, 16, 15.0, 1.0, 0.1, 0.01).unwrap();
        assert_abs_diff_eq!(p.capacity_nats, 2.0 * std::f64::consts::LN_2, epsilon = 1e-15);
        assert_abs_diff_eq!(p.nu, 0.9375, epsilon = 1e-15);
    }

    #[test]
    fn codelength_and_threshold() {
        let p = CodeParams::new(100, 512, 15.0, 1.0, 0.5, 0.01).unwrap();
        assert_eq!(p.n, 624); // ceil(100 * 6.2383 / 1.0)
        assert_abs_diff_eq!(p.tau, 4.032_230_277, epsilon = 1e-6);
        // Realized rate sits in [R/(1+1/n), R].
        let realized = p.realized_rate_nats();
        assert!(realized <= 1.0 + 1e-15 && realized > 1.0 / (1.0 + 1.0 / p.n as f64));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            CodeParams::new(2, 3, 1.0, 0.5, 0.0, 0.01),
            Err(ParamsError::SectionSizeNotPowerOfTwo { b: 3 })
        ));
        assert!(matches!(CodeParams::new(2, 1, 1.0, 0.5, 0.0, 0.01), Err(_)));
        assert!(CodeParams::new(0, 4, 1.0, 0.5, 0.0, 0.01).is_err());
        assert!(CodeParams::new(2, 4, 0.0, 0.5, 0.0, 0.01).is_err());
        assert!(CodeParams::new(2, 4, 1.0, 0.0, 0.0, 0.01).is_err());
        assert!(CodeParams::new(2, 4, 1.0, 0.5, -0.1, 0.01).is_err());
        assert!(CodeParams::new(2, 4, 1.0, 0.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn nu_complements_exponential_of_capacity() {
        for &snr in &[0.1, 0.5, 1.0, 3.0, 7.0, 15.0, 100.0] {
            let p = CodeParams::new(4, 8, snr, 0.5, 0.2, 0.01).unwrap();
            assert_abs_diff_eq!(p.nu + libm::exp(-2.0 * p.capacity_nats), 1.0, epsilon = 1e-15);
            assert!(p.nu > 0.0 && p.nu < 1.0);
        }
    }

    #[test]
    fn default_shift_rule() {
        let h = CodeParams::default_shift(1 << 16);
        assert_abs_diff_eq!(h, 0.047_096_400_9, epsilon = 1e-9);
    }
}
