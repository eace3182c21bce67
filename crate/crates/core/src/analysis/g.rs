//! The progression function `g(x)`: the expected weighted fraction of
//! sections whose terms are detectable by step statistics when a weighted
//! fraction `x` has already been decoded.
//!
//! Four forms:
//! * [`g_constant`] — constant power at the base rate: `Phi(mu_x(1))`.
//! * [`g_sum`] — exact weighted sum over a finite allocation.
//! * [`g_integral`] — the capacity-form integral approximation, by
//!   adaptive quadrature.
//! * [`g_continuum`] — the many-section limit of `g_sum` for any decay
//!   parameter, in closed form (no quadrature).

use super::{mu_shift, AllocModel, AnalysisError, AnalysisParams};
use crate::numeric::{integrate, norm_cdf, norm_pdf};
use crate::power::{AllocationKind, PowerAllocation};

/// Constant-power progression at the base rate `R0 = nu/2`: `Phi(mu_x(1))`.
pub fn g_constant(x: f64, ap: &AnalysisParams) -> Result<f64, AnalysisError> {
    Ok(norm_cdf(mu_x_checked(x, 1.0, ap)?))
}

/// Exact progression for a finite allocation at rate `rate_nats`:
/// `sum_ell pi_(ell) Phi(mu_x(pi_(ell) L nu / (2 R)))`.
pub fn g_sum(
    x: f64,
    alloc: &PowerAllocation,
    rate_nats: f64,
    ap: &AnalysisParams,
) -> Result<f64, AnalysisError> {
    check_rate(rate_nats)?;
    check_state(x, ap)?;
    let l = alloc.pi.len() as f64;
    let scale = l * ap.nu() / (2.0 * rate_nats);
    let (nu, root, a_prime) = (ap.nu(), ap.root_2_ln_b(), ap.a_prime());
    let mut total = 0.0;
    for &pi in &alloc.pi {
        total += pi * norm_cdf(mu_shift(x, pi * scale, nu, root, a_prime)?);
    }
    Ok(total)
}

/// Capacity-form integral approximation
/// `(1/nu) Int_{e^{-2C}}^{1} Phi(mu_x(max{u, cut} C / R)) du`,
/// where `cut = 0` for the exponential profile and
/// `cut = e^{-2C}(1 + c/sqrt(2 ln B))` for the leveled one.
/// Evaluated by adaptive quadrature to absolute error below 1e-9.
pub fn g_integral(
    x: f64,
    rate_nats: f64,
    ap: &AnalysisParams,
    kind: AllocationKind,
) -> Result<f64, AnalysisError> {
    check_rate(rate_nats)?;
    check_state(x, ap)?;
    let cut = match kind {
        AllocationKind::Exponential => 0.0,
        AllocationKind::Leveled => {
            libm::exp(-2.0 * ap.capacity_nats()) * (1.0 + ap.c / ap.root_2_ln_b())
        }
        AllocationKind::Constant => {
            return Err(AnalysisError::BadInput {
                what: "integral form applies to decaying power profiles only".into(),
            });
        }
    };
    let nu = ap.nu();
    let (root, a_prime) = (ap.root_2_ln_b(), ap.a_prime());
    let scale = ap.capacity_nats() / rate_nats;
    let rho = libm::sqrt(1.0 - x * nu);
    let integrand = |u: f64| {
        let arg = u.max(cut) * scale;
        norm_cdf((libm::sqrt(arg) / rho - 1.0) * root - a_prime)
    };
    // The result carries a 1/nu factor, so ask the quadrature for nu times
    // the output tolerance.
    let quad = integrate(integrand, libm::exp(-2.0 * ap.capacity_nats()), 1.0, 0.5e-9 * nu)?;
    Ok(quad.value / nu)
}

/// Many-section limit of `g_sum` at rate `rate_nats`, for the profile kind
/// and decay parameter in `ap`. Closed form: with the normalized density
/// `p(t) = max{e^{-2 gamma t}, cut} / Zbar` on `[0,1]`,
///
/// `g(x) = Int_0^1 p(t) Phi(mu_x(s u(t))) dt`,   `s = nu / (2 R Zbar)`,
///
/// the exponential stretch reduces (via `w = e^{-2 gamma t}`, then
/// `v = sqrt(w)`, then `z = alpha v + beta`) to an integral of
/// `(z - beta) Phi(z)` with an elementary antiderivative, so no numeric
/// quadrature is needed.
pub fn g_continuum(x: f64, rate_nats: f64, ap: &AnalysisParams) -> Result<f64, AnalysisError> {
    check_rate(rate_nats)?;
    let model = continuum_model(ap)?;
    g_eval(x, rate_nats, ap, &model)
}

/// Evaluates g against whichever profile view the caller holds. Finite
/// profiles with more than `FINITE_SUM_LIMIT` sections are delegated to the
/// continuum closed form (the two agree to O(1/L)).
pub(crate) fn g_eval(
    x: f64,
    rate_nats: f64,
    ap: &AnalysisParams,
    model: &AllocModel,
) -> Result<f64, AnalysisError> {
    check_rate(rate_nats)?;
    let g = match model {
        AllocModel::Finite(alloc) if alloc.pi.len() <= FINITE_SUM_LIMIT => {
            g_sum(x, alloc, rate_nats, ap)?
        }
        AllocModel::Finite(_) => {
            let model = continuum_model(ap)?;
            return g_eval(x, rate_nats, ap, &model);
        }
        AllocModel::ContinuumConstant => {
            let u = ap.nu() / (2.0 * rate_nats);
            norm_cdf(mu_x_checked(x, u, ap)?)
        }
        AllocModel::ContinuumProfile { gamma, cut, z_bar, t_cut, .. } => {
            check_state(x, ap)?;
            profile_closed_form(x, rate_nats, ap, *gamma, *cut, *z_bar, *t_cut)
        }
    };
    // A probability-weighted average of normal tails; clamp away the last
    // bit of floating-point overshoot so downstream divergences stay in
    // domain.
    Ok(g.clamp(0.0, 1.0))
}

/// Sections beyond which the exact finite sum gives way to the closed form.
pub(crate) const FINITE_SUM_LIMIT: usize = 4096;

/// Continuum view of `ap`'s profile kind, regardless of `ap.sections`.
pub(crate) fn continuum_model(ap: &AnalysisParams) -> Result<AllocModel, AnalysisError> {
    let continuum = AnalysisParams { sections: super::Sections::Continuum, ..ap.clone() };
    continuum.alloc_model()
}

fn profile_closed_form(
    x: f64,
    rate_nats: f64,
    ap: &AnalysisParams,
    gamma: f64,
    cut: f64,
    z_bar: f64,
    t_cut: f64,
) -> f64 {
    let nu = ap.nu();
    let s = nu / (2.0 * rate_nats * z_bar);
    let rho = libm::sqrt(1.0 - x * nu);
    let tau0 = ap.root_2_ln_b();
    // Phi argument along the exponential stretch: alpha sqrt(w) + beta.
    let alpha = tau0 * libm::sqrt(s) / rho;
    let beta = -(tau0 + ap.a_prime());
    let lo = cut.max(libm::exp(-2.0 * gamma));
    let z_lo = alpha * libm::sqrt(lo) + beta;
    let z_hi = alpha + beta;
    let stretch = (2.0 / (alpha * alpha))
        * (phi_moment_antiderivative(z_hi, beta) - phi_moment_antiderivative(z_lo, beta))
        / (2.0 * gamma * z_bar);
    let level = if cut > 0.0 && t_cut < 1.0 {
        let m = (libm::sqrt(s * cut) / rho - 1.0) * tau0 - ap.a_prime();
        cut * (1.0 - t_cut) / z_bar * norm_cdf(m)
    } else {
        0.0
    };
    stretch + level
}

/// Antiderivative of `(z - beta) Phi(z)`:
/// `(z^2 - 1) Phi(z)/2 + z phi(z)/2 - beta (z Phi(z) + phi(z))`.
fn phi_moment_antiderivative(z: f64, beta: f64) -> f64 {
    let cdf = norm_cdf(z);
    let pdf = norm_pdf(z);
    0.5 * (z * z - 1.0) * cdf + 0.5 * z * pdf - beta * (z * cdf + pdf)
}

fn check_rate(rate_nats: f64) -> Result<(), AnalysisError> {
    if !(rate_nats > 0.0) {
        return Err(AnalysisError::BadInput { what: format!("rate {rate_nats} must be positive") });
    }
    Ok(())
}

fn check_state(x: f64, ap: &AnalysisParams) -> Result<(), AnalysisError> {
    if !(x >= 0.0) || x * ap.nu() >= 1.0 {
        return Err(AnalysisError::StateOutOfRange { x, nu: ap.nu() });
    }
    Ok(())
}

fn mu_x_checked(x: f64, u: f64, ap: &AnalysisParams) -> Result<f64, AnalysisError> {
    mu_shift(x, u, ap.nu(), ap.root_2_ln_b(), ap.a_prime())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Sections;
    use crate::params::CodeParams;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ap_with(b: usize, l: usize, snr: f64, a: f64, kind: AllocationKind, c: f64) -> AnalysisParams {
        AnalysisParams::new(b, Sections::Finite(l), snr, a, kind, None, c, 0.5).unwrap()
    }

    fn finite_alloc(ap: &AnalysisParams) -> PowerAllocation {
        match ap.alloc_model().unwrap() {
            AllocModel::Finite(a) => a,
            other => panic!("expected finite model, got {other:?}"),
        }
    }

    #[test]
    fn constant_base_cases() {
        // g(0) = Phi(-a').
        let ap = ap_with(1 << 14, 100, 1.0, 0.6 - CodeParams::default_shift(1 << 14), AllocationKind::Constant, 0.0);
        assert_abs_diff_eq!(ap.a_prime(), 0.6, epsilon = 1e-12);
        let g0 = g_constant(0.0, &ap).unwrap();
        assert_abs_diff_eq!(g0, 0.274_253, epsilon = 1e-6);
        assert_abs_diff_eq!(g0, norm_cdf(-0.6), epsilon = 1e-15);
        // Strictly increasing over the working range x in [0, 1]; past it
        // the value keeps climbing toward saturation at 1.
        let mut prev = -1.0;
        for i in 0..=40 {
            let x = i as f64 / 40.0;
            let g = g_constant(x, &ap).unwrap();
            assert!(g > prev, "x={x}: {g} <= {prev}");
            prev = g;
        }
        assert!(g_constant(1.0 / ap.nu() - 1e-6, &ap).unwrap() >= prev);
        assert!(g_constant(1.0 / ap.nu(), &ap).is_err());
    }

    #[test]
    fn sum_collapses_to_constant_at_base_rate() {
        // Constant allocation at R = R0: every section argument is exactly 1.
        let ap = ap_with(1 << 12, 137, 7.0, 0.4, AllocationKind::Constant, 0.0);
        let alloc = finite_alloc(&ap);
        let r0 = ap.nu() / 2.0;
        for i in 0..20 {
            let x = i as f64 / 20.0;
            let a = g_sum(x, &alloc, r0, &ap).unwrap();
            let b = g_constant(x, &ap).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn section_capacity_identity_and_limit() {
        // Exponential profile at gamma = C: pi_ell L nu/(2R) = u_ell C_L / R
        // with C_L = (L/2)(1 - e^{-2C/L}); C_L -> C as L grows.
        for &l in &[100usize, 1000] {
            let ap = ap_with(1 << 14, l, 15.0, 0.7, AllocationKind::Exponential, 0.0);
            let alloc = finite_alloc(&ap);
            let cap = ap.capacity_nats();
            let lf = l as f64;
            let c_l = lf / 2.0 * (-libm::expm1(-2.0 * cap / lf));
            let rate = 1.0;
            for ell in [0usize, l / 2, l - 1] {
                let u_ell = libm::exp(-2.0 * cap * ell as f64 / lf);
                let lhs = alloc.pi[ell] * lf * ap.nu() / (2.0 * rate);
                let rhs = u_ell * c_l / rate;
                assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12 * rhs.abs().max(1.0));
            }
        }
        let lf = 1e6;
        let cap = 0.5 * libm::log1p(15.0);
        let c_l = lf / 2.0 * (-libm::expm1(-2.0 * cap / lf));
        assert_abs_diff_eq!(c_l, cap, epsilon = 1e-5);
    }

    #[test]
    fn integral_tracks_sum_within_inverse_sections() {
        // |g_sum - g_integral| <= 5/L, exponential profile at snr = 15; the
        // two estimates tighten together as the section count grows.
        for &l in &[100usize, 1000] {
            let ap = ap_with(1 << 14, l, 15.0, 0.7, AllocationKind::Exponential, 0.0);
            let alloc = finite_alloc(&ap);
            let rate = 1.0;
            for i in 0..=10 {
                let x = i as f64 / 10.0;
                let gs = g_sum(x, &alloc, rate, &ap).unwrap();
                let gi = g_integral(x, rate, &ap, AllocationKind::Exponential).unwrap();
                assert!((gs - gi).abs() <= 5.0 / l as f64, "x={x} L={l}: |{gs} - {gi}|");
            }
        }
    }

    #[test]
    fn integral_range_and_low_rate_limit() {
        let ap = ap_with(1 << 14, 100, 15.0, 0.7, AllocationKind::Leveled, 1.6);
        for i in 0..=8 {
            let x = i as f64 / 8.0;
            let g = g_integral(x, 0.9, &ap, AllocationKind::Leveled).unwrap();
            assert!((0.0..=1.0).contains(&g));
        }
        // x = 0, R -> 0+: all shifts diverge, g -> 1.
        let g = g_integral(0.0, 1e-6, &ap, AllocationKind::Leveled).unwrap();
        assert!(g > 1.0 - 1e-12, "g = {g}");
        // Constant kind is not an integral-form profile.
        assert!(g_integral(0.0, 0.9, &ap, AllocationKind::Constant).is_err());
    }

    #[test]
    fn continuum_matches_integral_for_pure_exponential_at_capacity_decay() {
        // At gamma = C and cut = 0 the closed form and the quadrature
        // evaluate the same integral.
        let ap = ap_with(1 << 16, 100, 15.0, 0.86, AllocationKind::Exponential, 0.0);
        for &rate in &[0.6, 0.9, 1.2] {
            for i in 0..=10 {
                let x = i as f64 / 10.0;
                let closed = g_continuum(x, rate, &ap).unwrap();
                let quad = g_integral(x, rate, &ap, AllocationKind::Exponential).unwrap();
                assert_abs_diff_eq!(closed, quad, epsilon = 5e-9);
            }
        }
    }

    #[test]
    fn continuum_closed_form_matches_direct_quadrature() {
        // Independent check of the closed form against brute-force quadrature
        // of the defining integral, leveled profile at gamma < C.
        let ap = AnalysisParams::new(
            1 << 16,
            Sections::Continuum,
            15.0,
            0.86,
            AllocationKind::Leveled,
            Some(0.8 * 0.5 * libm::log1p(15.0)),
            1.6,
            0.5,
        )
        .unwrap();
        let model = ap.alloc_model().unwrap();
        let (gamma, cut, z_bar) = match &model {
            AllocModel::ContinuumProfile { gamma, cut, z_bar, .. } => (*gamma, *cut, *z_bar),
            other => panic!("unexpected model {other:?}"),
        };
        let rate = 0.8;
        for i in 0..=6 {
            let x = i as f64 / 6.0;
            let closed = g_eval(x, rate, &ap, &model).unwrap();
            let s = ap.nu() / (2.0 * rate * z_bar);
            let rho = libm::sqrt(1.0 - x * ap.nu());
            let integrand = |t: f64| {
                let u = libm::exp(-2.0 * gamma * t).max(cut);
                let m = (libm::sqrt(s * u) / rho - 1.0) * ap.root_2_ln_b() - ap.a_prime();
                u / z_bar * norm_cdf(m)
            };
            let quad = integrate(integrand, 0.0, 1.0, 1e-11).unwrap().value;
            assert_abs_diff_eq!(closed, quad, epsilon = 1e-9);
        }
    }

    #[test]
    fn continuum_matches_large_finite_sum() {
        // Leveled profile: the closed form is the L -> infinity limit of the
        // exact sum.
        let l = 20_000;
        let ap = ap_with(1 << 16, l, 15.0, 0.86, AllocationKind::Leveled, 1.6);
        let alloc = finite_alloc(&ap);
        for i in 0..=5 {
            let x = i as f64 / 5.0;
            let exact = g_sum(x, &alloc, 0.9, &ap).unwrap();
            let limit = g_continuum(x, 0.9, &ap).unwrap();
            assert!((exact - limit).abs() < 5.0 / l as f64, "x={x}: {exact} vs {limit}");
        }
    }

    #[test]
    fn large_finite_profiles_delegate_to_closed_form() {
        let l = FINITE_SUM_LIMIT + 1;
        let ap = ap_with(1 << 14, l, 15.0, 0.7, AllocationKind::Exponential, 0.0);
        let model = ap.alloc_model().unwrap();
        let delegated = g_eval(0.4, 0.9, &ap, &model).unwrap();
        let closed = g_continuum(0.4, 0.9, &ap).unwrap();
        assert_abs_diff_eq!(delegated, closed, epsilon = 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn g_in_unit_interval_and_nondecreasing(
            log2b in 4u32..18,
            snr in 0.25f64..32.0,
            a in 0.0f64..1.5,
            c in 0.0f64..2.5,
            kind in prop::sample::select(vec![
                AllocationKind::Constant,
                AllocationKind::Exponential,
                AllocationKind::Leveled,
            ]),
            rate_frac in 0.2f64..1.1,
        ) {
            let ap = AnalysisParams::new(1usize << log2b, Sections::Finite(64), snr, a, kind, None, c, 0.5).unwrap();
            let alloc = finite_alloc(&ap);
            let rate = rate_frac * ap.capacity_nats();
            let mut prev = -1.0f64;
            for i in 0..=24 {
                let x = i as f64 / 24.0 * (1.0 / ap.nu() - 1e-9).min(1.0);
                let g = g_sum(x, &alloc, rate, &ap).unwrap();
                prop_assert!((0.0..=1.0).contains(&g));
                prop_assert!(g >= prev - 1e-12);
                prev = g;
            }
        }
    }
}
