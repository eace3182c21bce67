//! Power allocation across sections.
//!
//! Each section `ell` (1-based) receives a share `pi_ell` of the total power,
//! with `sum pi_ell = 1`. Three families are supported:
//!
//! * constant: `pi_ell = 1/L`;
//! * exponential: `pi_ell` proportional to `e^{-2 gamma (ell-1) / L}`;
//! * leveled: the exponential profile with its tail raised to a floor
//!   `cut = e^{-2 gamma} (1 + delta_c)`, `delta_c = c / sqrt(2 ln B)`.
//!
//! The struct also carries two derived quantities used by the rate and
//! error-analysis layers: `l_pi = 1 / max_ell pi_ell` (the effective number of
//! sections at the largest share) and `delta_sum_sq`, the relative excess of
//! the leveled profile over the pure exponential mass.

use serde::Serialize;
use thiserror::Error;

use crate::params::CodeParams;

/// Construction errors for [`PowerAllocation`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PowerError {
    #[error("decay parameter gamma must lie in (0, capacity]; got {gamma}, capacity {capacity}")]
    GammaOutOfRange { gamma: f64, capacity: f64 },
    #[error("floor parameter c must be nonnegative, got {c}")]
    NegativeFloor { c: f64 },
    #[error("operation requires a leveled allocation, got {kind:?}")]
    NotLeveled { kind: AllocationKind },
}

/// Which family a [`PowerAllocation`] belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationKind {
    Constant,
    Exponential,
    Leveled,
}

/// A normalized per-section power profile with its derived constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerAllocation {
    pub kind: AllocationKind,
    /// Decay parameter, if the family has one.
    pub gamma: Option<f64>,
    /// Floor parameter `c`, leveled only.
    pub c: Option<f64>,
    /// `delta_c = c / sqrt(2 ln B)`, leveled only (0 otherwise).
    pub delta_c: f64,
    /// Floor level `e^{-2 gamma} (1 + delta_c)` on the normalized profile
    /// `u_ell = e^{-2 gamma (ell-1)/L}`; 0 for non-leveled families.
    pub cut: f64,
    /// Normalized shares, `sum = 1`, length `L`.
    pub pi: Vec<f64>,
    /// `1 / max_ell pi_ell`.
    pub l_pi: f64,
    /// Relative excess mass over the pure exponential profile.
    pub delta_sum_sq: f64,
}

/// `Z0(gamma) = (1 - e^{-2 gamma}) / (2 gamma)`, the mean of
/// `u(t) = e^{-2 gamma t}` over `t in [0, 1]`.
fn mean_exponential_profile(gamma: f64) -> f64 {
    // expm1 keeps precision for small gamma; the limit at 0 is 1.
    -libm::expm1(-2.0 * gamma) / (2.0 * gamma)
}

/// Constant allocation `pi_ell = 1/L`.
pub fn alloc_constant(params: &CodeParams) -> PowerAllocation {
    let l = params.l;
    let share = 1.0 / l as f64;
    PowerAllocation {
        kind: AllocationKind::Constant,
        gamma: None,
        c: None,
        delta_c: 0.0,
        cut: 0.0,
        pi: vec![share; l],
        l_pi: l as f64,
        delta_sum_sq: 0.0,
    }
}

/// Exponential allocation `pi_ell` proportional to `e^{-2 gamma (ell-1)/L}`.
pub fn alloc_exponential(params: &CodeParams, gamma: f64) -> Result<PowerAllocation, PowerError> {
    if !(gamma > 0.0 && gamma <= params.capacity_nats + 1e-12) {
        return Err(PowerError::GammaOutOfRange { gamma, capacity: params.capacity_nats });
    }
    let mut alloc = leveled_profile(params, gamma, 0.0, 0.0)?;
    alloc.kind = AllocationKind::Exponential;
    alloc.c = None;
    alloc.delta_c = 0.0;
    alloc.cut = 0.0;
    Ok(alloc)
}

/// Leveled allocation: exponential profile with floor
/// `cut = e^{-2 gamma}(1 + delta_c)`, `delta_c = c / sqrt(2 ln B)`.
pub fn alloc_leveled(params: &CodeParams, gamma: f64, c: f64) -> Result<PowerAllocation, PowerError> {
    if !(gamma > 0.0 && gamma <= params.capacity_nats + 1e-12) {
        return Err(PowerError::GammaOutOfRange { gamma, capacity: params.capacity_nats });
    }
    if !(c >= 0.0) {
        return Err(PowerError::NegativeFloor { c });
    }
    let delta_c = c / params.root_2_ln_b();
    let cut = libm::exp(-2.0 * gamma) * (1.0 + delta_c);
    leveled_profile(params, gamma, c, delta_c.min(f64::INFINITY))
        .map(|mut a| {
            a.cut = cut;
            a.delta_c = delta_c;
            a
        })
}

/// Shared construction for exponential (cut = 0) and leveled profiles.
fn leveled_profile(params: &CodeParams, gamma: f64, c: f64, delta_c: f64) -> Result<PowerAllocation, PowerError> {
    let l = params.l;
    let lf = l as f64;
    let cut = if delta_c > 0.0 || c > 0.0 {
        libm::exp(-2.0 * gamma) * (1.0 + delta_c)
    } else {
        0.0
    };
    // Unnormalized profile max{u_ell, cut}, u_ell = e^{-2 gamma (ell-1)/L}.
    let mut raw = Vec::with_capacity(l);
    let mut total = 0.0;
    for ell in 1..=l {
        let u = libm::exp(-2.0 * gamma * (ell as f64 - 1.0) / lf);
        let v = if u < cut { cut } else { u };
        raw.push(v);
        total += v;
    }
    let pi: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let max_pi = pi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // Excess of the realized mass over L * Z0(gamma), the mass of the pure
    // exponential profile in the continuum; zero when no floor is active.
    let delta_sum_sq = total / (lf * mean_exponential_profile(gamma)) - 1.0;
    Ok(PowerAllocation {
        kind: AllocationKind::Leveled,
        gamma: Some(gamma),
        c: Some(c),
        delta_c,
        cut,
        pi,
        l_pi: 1.0 / max_pi,
        delta_sum_sq,
    })
}

/// `(1 + delta) ln(1 + delta) - delta`, the Poisson-style divergence used in
/// the concentration bound for the realized power sum. Requires `delta > -1`.
pub fn bernoulli_divergence(delta: f64) -> f64 {
    assert!(delta > -1.0, "divergence defined for delta > -1, got {delta}");
    (1.0 + delta) * libm::log1p(delta) - delta
}

/// The relative excess mass `delta_sum_sq` of a leveled allocation.
///
/// Errors for other families (the quantity is identically zero for the pure
/// exponential and constant profiles by construction).
pub fn leveled_excess(alloc: &PowerAllocation) -> Result<f64, PowerError> {
    match alloc.kind {
        AllocationKind::Leveled => Ok(alloc.delta_sum_sq),
        kind => Err(PowerError::NotLeveled { kind }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn params(l: usize, b: usize, snr: f64) -> CodeParams {
        CodeParams::new(l, b, snr, 1.0, 0.5, 0.01).unwrap()
    }

    #[test]
    fn constant_allocation_shape() {
        let p = params(7, 16, 15.0);
        let a = alloc_constant(&p);
        assert_eq!(a.pi.len(), 7);
        for &s in &a.pi {
            assert_abs_diff_eq!(s, 1.0 / 7.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(a.l_pi, 7.0, epsilon = 1e-12);
        assert_eq!(a.delta_sum_sq, 0.0);
        assert_eq!(a.cut, 0.0);
    }

    #[test]
    fn two_section_exponential_shares() {
        // L = 2, gamma = C = 2 ln 2 (snr = 15): shares e^0 : e^{-2 ln 2} = 1 : 1/4.
        let p = params(2, 16, 15.0);
        let a = alloc_exponential(&p, p.capacity_nats).unwrap();
        assert_abs_diff_eq!(a.pi[0], 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(a.pi[1], 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(a.l_pi, 1.25, epsilon = 1e-12);
    }

    #[test]
    fn leveled_floor_value() {
        // B = 2^16, c = 1.6, gamma = C at snr = 15 (C = 2 ln 2, e^{-2C} = 1/16).
        let p = params(100, 1 << 16, 15.0);
        let a = alloc_leveled(&p, p.capacity_nats, 1.6).unwrap();
        assert_abs_diff_eq!(a.delta_c, 0.339_728_720_1, epsilon = 1e-9);
        assert_abs_diff_eq!(a.cut, 0.083_733_045_0, epsilon = 1e-9);
        // Floor engages on the tail: last share strictly above the pure
        // exponential's, first share unchanged in ratio terms.
        let e = alloc_exponential(&p, p.capacity_nats).unwrap();
        assert!(a.pi[99] > e.pi[99]);
    }

    #[test]
    fn leveled_excess_small_and_bounded() {
        // In the many-section limit the excess approaches D(delta_c)/snr
        // (0.05210/15 ~ 0.00347 here) and stays below delta_c^2/(2 snr).
        // The discrete left-endpoint sum carries an O(1/L) positive bias, so
        // the limit is checked at L = 10^6 and a finite-L value is frozen.
        let p = params(1_000_000, 1 << 16, 15.0);
        let a = alloc_leveled(&p, p.capacity_nats, 1.6).unwrap();
        assert_abs_diff_eq!(a.delta_sum_sq, 0.003_473, epsilon = 2e-4);
        let ceiling = a.delta_c * a.delta_c / (2.0 * p.snr);
        assert_abs_diff_eq!(ceiling, 0.003_847, epsilon = 1e-5);
        assert!(a.delta_sum_sq <= ceiling);

        let p = params(1000, 1 << 16, 15.0);
        let a = alloc_leveled(&p, p.capacity_nats, 1.6).unwrap();
        assert_abs_diff_eq!(a.delta_sum_sq, 0.004_828_80, epsilon = 1e-6);
        assert!(a.delta_sum_sq <= ceiling + 10.0 / 1000.0);
    }

    #[test]
    fn divergence_reference_values() {
        assert_eq!(bernoulli_divergence(0.0), 0.0);
        assert_abs_diff_eq!(bernoulli_divergence(0.339_731), 0.052_1, epsilon = 2e-4);
        // Symmetric-ish small-delta behavior: D(delta) ~ delta^2 / 2.
        assert_abs_diff_eq!(bernoulli_divergence(1e-4), 0.5e-8, epsilon = 1e-11);
    }

    #[test]
    #[should_panic]
    fn divergence_rejects_below_minus_one() {
        bernoulli_divergence(-1.0);
    }

    #[test]
    fn leveled_with_zero_floor_matches_exponential() {
        let p = params(64, 512, 7.0);
        let e = alloc_exponential(&p, 0.7 * p.capacity_nats).unwrap();
        let z = alloc_leveled(&p, 0.7 * p.capacity_nats, 0.0).unwrap();
        for (a, b) in e.pi.iter().zip(z.pi.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn gamma_range_enforced() {
        let p = params(4, 16, 15.0);
        assert!(alloc_exponential(&p, 0.0).is_err());
        assert!(alloc_exponential(&p, p.capacity_nats * 1.01).is_err());
        assert!(alloc_leveled(&p, p.capacity_nats, -0.5).is_err());
    }

    #[test]
    fn excess_accessor_rejects_non_leveled() {
        let p = params(4, 16, 15.0);
        let a = alloc_constant(&p);
        assert!(matches!(leveled_excess(&a), Err(PowerError::NotLeveled { .. })));
        let lv = alloc_leveled(&p, p.capacity_nats, 1.0).unwrap();
        assert!(leveled_excess(&lv).is_ok());
    }

    proptest! {
        #[test]
        fn shares_normalized_and_monotone(
            l in 1usize..200,
            log_b in 1u32..14,
            gamma_frac in 0.05f64..1.0,
            c in 0.0f64..3.0,
            snr in 0.2f64..20.0,
        ) {
            let p = CodeParams::new(l, 1usize << log_b, snr, 0.8, 0.3, 0.01).unwrap();
            let gamma = gamma_frac * p.capacity_nats;
            let a = alloc_leveled(&p, gamma, c).unwrap();
            let sum: f64 = a.pi.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            for w in a.pi.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-15); // nonincreasing
            }
            prop_assert!(a.l_pi >= 1.0 - 1e-12 && a.l_pi <= l as f64 + 1e-9);
            prop_assert!(a.delta_sum_sq >= -1e-12);
        }

        #[test]
        fn constant_is_special_case(l in 1usize..100) {
            let p = CodeParams::new(l, 64, 3.0, 0.5, 0.1, 0.01).unwrap();
            let a = alloc_constant(&p);
            let sum: f64 = a.pi.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!((a.l_pi - l as f64).abs() < 1e-9);
        }
    }
}
