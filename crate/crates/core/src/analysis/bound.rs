//! Reliability bound for a finished schedule.
//!
//! Each step contributes three exponentially small failure terms: the
//! detection level falling short of its target, the false-alarm fraction
//! exceeding its working rate, and the empirical dictionary-column norms
//! drifting past the shift allowance absorbed in the threshold. The bound
//! on the probability that the run's weighted mistake rate exceeds
//! `m f + rem` is the sum over steps, clipped to 1 for reporting.

use serde::Serialize;

use super::schedule::Schedule;
use super::{AnalysisError, AnalysisParams, Sections};
use crate::numeric::bernoulli_kl;
use crate::params::CodeParams;

/// `D_eps = -ln(1 - eps) - eps`: divergence of the chi-square norm drift
/// event at relative excess `eps`. Nonnegative, and at least `eps^2 / 2`.
pub fn shifted_divergence(eps: f64) -> f64 {
    -libm::log1p(-eps) - eps
}

/// One step's failure terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepBoundTerms {
    /// Step index `k = 1..=m`.
    pub step: usize,
    /// `exp(-L_pi D(q_{1,k} || q*_{1,k}) + C k)`: detection shortfall.
    pub term_progress: f64,
    /// `exp(-L_pi (B-1) D(f/(B-1) || f*/(B-1)))`: false-alarm excess.
    pub term_false_alarm: f64,
    /// `exp(-(n - k + 1) D_{eps_k})`: column-norm drift past the shift
    /// allowance, with the per-step allowance `eps_k` shrinking as earlier
    /// steps consume it.
    pub term_power: f64,
}

/// Summed reliability bound for a schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub per_step: Vec<StepBoundTerms>,
    /// Unclipped sum of all terms.
    pub raw_total: f64,
    /// `min(1, raw_total)`.
    pub clipped_total: f64,
    /// The mistake allowance the bound protects: `m f + rem`.
    pub mistake_budget: f64,
    /// Effective section count the exponents scale with (None in the
    /// many-section limit, where every term vanishes).
    pub l_pi: Option<f64>,
    /// Codeword length used by the norm-drift terms (None in the
    /// many-section limit).
    pub n: Option<usize>,
}

/// Evaluates the reliability bound for a schedule built from `ap`.
///
/// Requires `q_{1,k} <= q*_{1,k}` at every step (the divergence is used on
/// its lower tail) and, in the finite-section case, a working false-alarm
/// rate strictly above the threshold mean `f*`.
pub fn error_bound(sched: &Schedule, ap: &AnalysisParams) -> Result<BoundReport, AnalysisError> {
    for k in 0..sched.m {
        if sched.q[k] > sched.q_star[k] {
            return Err(AnalysisError::KlOrientation {
                step: k + 1,
                q: sched.q[k],
                q_star: sched.q_star[k],
            });
        }
    }
    let l = match ap.sections {
        Sections::Finite(l) => l,
        Sections::Continuum => {
            // The exponents grow without bound in the many-section limit:
            // every failure term is zero.
            let per_step = (1..=sched.m)
                .map(|step| StepBoundTerms {
                    step,
                    term_progress: 0.0,
                    term_false_alarm: 0.0,
                    term_power: 0.0,
                })
                .collect();
            return Ok(BoundReport {
                per_step,
                raw_total: 0.0,
                clipped_total: 0.0,
                mistake_budget: sched.mistake_budget,
                l_pi: None,
                n: None,
            });
        }
    };

    let f_star = ap.f_star();
    if sched.f > 0.0 && sched.f <= f_star {
        return Err(AnalysisError::FalseAlarmTooSmall { f: sched.f, f_star });
    }
    let model = ap.alloc_model()?;
    let l_pi = model.l_pi().expect("finite sections have a finite section-size measure");
    let params = CodeParams::new(l, ap.b, ap.snr, sched.rate_nats, ap.a, ap.h)
        .map_err(|e| AnalysisError::BadInput { what: e.to_string() })?;
    let n = params.n;
    let c0 = ap.capacity_nats();

    // False-alarm divergence is step-independent; skip it when f = 0 (no
    // false-alarm event is budgeted, the term is vacuous).
    let bm1 = (ap.b - 1) as f64;
    let d_fa = if sched.f > 0.0 {
        l_pi * bm1 * bernoulli_kl(sched.f / bm1, f_star / bm1)
    } else {
        f64::INFINITY
    };

    // Norm-drift allowance: the threshold shift absorbs a relative excess
    // eps in the average of the n - k + 1 columns still unused at step k.
    let delta_h = ap.h / ap.root_2_ln_b();
    let eps = 1.0 - (1.0 - delta_h) * (1.0 - delta_h);
    let nf = n as f64;

    let mut per_step = Vec::with_capacity(sched.m);
    let mut raw_total = 0.0;
    for k in 1..=sched.m {
        let kf = k as f64;
        let term_progress = if sched.q[k - 1] < sched.q_star[k - 1] {
            libm::exp(-l_pi * bernoulli_kl(sched.q[k - 1], sched.q_star[k - 1]) + c0 * kf)
        } else {
            // Zero divergence: the bound term is trivial.
            libm::exp(c0 * kf)
        };
        let term_false_alarm = libm::exp(-d_fa);
        let remaining = nf - kf + 1.0;
        let eps_k = (nf * eps - kf + 1.0) / remaining;
        let term_power = if eps_k <= 0.0 {
            1.0
        } else if eps_k >= 1.0 {
            0.0
        } else {
            libm::exp(-remaining * shifted_divergence(eps_k))
        };
        raw_total += term_progress + term_false_alarm + term_power;
        per_step.push(StepBoundTerms { step: k, term_progress, term_false_alarm, term_power });
    }

    Ok(BoundReport {
        per_step,
        raw_total,
        clipped_total: raw_total.min(1.0),
        mistake_budget: sched.mistake_budget,
        l_pi: Some(l_pi),
        n: Some(n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::schedule::build_schedule;
    use crate::analysis::{AnalysisParams, ScheduleTactic, Sections};
    use crate::power::AllocationKind;
    use approx::assert_abs_diff_eq;

    #[test]
    fn shifted_divergence_reference_and_floor() {
        assert_abs_diff_eq!(shifted_divergence(0.1), 0.005_360_515_7, epsilon = 1e-10);
        for &eps in &[1e-3, 0.05, 0.3, 0.7] {
            assert!(shifted_divergence(eps) >= eps * eps / 2.0);
        }
        assert_eq!(shifted_divergence(0.0), 0.0);
    }

    fn desk_params(l: usize) -> AnalysisParams {
        let cap = 0.5 * libm::log1p(15.0);
        AnalysisParams {
            eta: Some(0.02),
            f: Some(0.02),
            tactic: ScheduleTactic::ConstantEta,
            ..AnalysisParams::new(
                512,
                Sections::Finite(l),
                15.0,
                0.5,
                AllocationKind::Leveled,
                Some(0.8 * cap),
                1.0,
                12.0,
            )
            .unwrap()
        }
    }

    #[test]
    fn orientation_violation_is_detected() {
        let ap = desk_params(100);
        let mut sched = build_schedule(&ap).unwrap();
        sched.q[0] = sched.q_star[0] + 1e-3;
        match error_bound(&sched, &ap) {
            Err(AnalysisError::KlOrientation { step, .. }) => assert_eq!(step, 1),
            other => panic!("expected an orientation error, got {other:?}"),
        }
    }

    #[test]
    fn continuum_bound_is_vacuously_zero() {
        let cap = 0.5 * libm::log1p(15.0);
        let ap = AnalysisParams::new(
            1 << 16,
            Sections::Continuum,
            15.0,
            0.86,
            AllocationKind::Leveled,
            Some(0.8 * cap),
            1.6,
            8.0,
        )
        .unwrap();
        let sched = build_schedule(&ap).unwrap();
        let rep = error_bound(&sched, &ap).unwrap();
        assert_eq!(rep.raw_total, 0.0);
        assert_eq!(rep.clipped_total, 0.0);
        assert_eq!(rep.l_pi, None);
        assert_eq!(rep.n, None);
        assert_eq!(rep.per_step.len(), sched.m);
        assert!(rep
            .per_step
            .iter()
            .all(|t| t.term_progress == 0.0 && t.term_false_alarm == 0.0 && t.term_power == 0.0));
    }

    #[test]
    fn doubling_sections_shrinks_the_bound_geometrically() {
        let mut totals = Vec::new();
        for &l in &[100usize, 200, 400] {
            let ap = desk_params(l);
            let sched = build_schedule(&ap).unwrap();
            let rep = error_bound(&sched, &ap).unwrap();
            assert!(rep.raw_total > 0.0);
            totals.push(rep.raw_total);
        }
        assert!(totals[1] <= 0.99 * totals[0], "{totals:?}");
        assert!(totals[2] <= 0.99 * totals[1], "{totals:?}");
    }

    #[test]
    fn per_step_terms_recompute_from_their_definitions() {
        let ap = desk_params(100);
        let sched = build_schedule(&ap).unwrap();
        let rep = error_bound(&sched, &ap).unwrap();
        let model = ap.alloc_model().unwrap();
        let l_pi = model.l_pi().unwrap();
        let n = rep.n.unwrap() as f64;
        let c0 = ap.capacity_nats();
        let k = 2usize;
        let t = &rep.per_step[k - 1];
        assert_eq!(t.step, k);
        let expect_progress = libm::exp(
            -l_pi * bernoulli_kl(sched.q[k - 1], sched.q_star[k - 1]) + c0 * k as f64,
        );
        assert_abs_diff_eq!(t.term_progress, expect_progress, epsilon = 1e-15 * expect_progress);
        let bm1 = (ap.b - 1) as f64;
        let expect_fa =
            libm::exp(-l_pi * bm1 * bernoulli_kl(sched.f / bm1, ap.f_star() / bm1));
        assert_abs_diff_eq!(t.term_false_alarm, expect_fa, epsilon = 1e-15 * expect_fa);
        let delta_h = ap.h / ap.root_2_ln_b();
        let eps = 1.0 - (1.0 - delta_h) * (1.0 - delta_h);
        let eps_k = (n * eps - (k as f64) + 1.0) / (n - (k as f64) + 1.0);
        let expect_power = libm::exp(-(n - (k as f64) + 1.0) * shifted_divergence(eps_k));
        assert_abs_diff_eq!(t.term_power, expect_power, epsilon = 1e-12 * expect_power.max(1e-300));
        let sum: f64 = rep
            .per_step
            .iter()
            .map(|t| t.term_progress + t.term_false_alarm + t.term_power)
            .sum();
        assert_abs_diff_eq!(rep.raw_total, sum, epsilon = 1e-15 * sum.max(1.0));
        assert_eq!(rep.clipped_total, rep.raw_total.min(1.0));
    }

    #[test]
    fn working_rate_at_or_below_threshold_mean_is_rejected() {
        let ap = AnalysisParams {
            f: Some(ap_f_star_half()),
            ..desk_params(100)
        };
        let sched = build_schedule(&ap).unwrap();
        match error_bound(&sched, &ap) {
            Err(AnalysisError::FalseAlarmTooSmall { f, f_star }) => {
                assert!(f <= f_star);
            }
            other => panic!("expected a false-alarm-rate error, got {other:?}"),
        }
    }

    fn ap_f_star_half() -> f64 {
        0.5 * desk_params(100).f_star()
    }

    #[test]
    fn derived_rate_terms_sum_near_their_design_levels() {
        // Constant-exponent tactic with derived f: progress terms sum to
        // about the design target and false-alarm terms to about half of it
        // whenever the multiplier sits above its floor.
        let ap = AnalysisParams::new(
            1 << 12,
            Sections::Finite(1 << 12),
            15.0,
            0.86,
            AllocationKind::Leveled,
            Some(0.8 * 0.5 * libm::log1p(15.0)),
            1.6,
            12.0,
        )
        .unwrap();
        let sched = build_schedule(&ap).unwrap();
        let rep = error_bound(&sched, &ap).unwrap();
        let p_t = ap.bound_sum_target;
        let progress: f64 = rep.per_step.iter().map(|t| t.term_progress).sum();
        // The level is sized for the final step count; the sum is within a
        // small factor of the target.
        assert!(progress / p_t > 0.2 && progress / p_t < 2.0, "progress sum {progress}");
        if sched.kappa.unwrap() > 2.0 + 1e-9 {
            let fa: f64 = rep.per_step.iter().map(|t| t.term_false_alarm).sum();
            assert!(fa / (p_t / 2.0) > 0.9 && fa / (p_t / 2.0) < 1.1, "false-alarm sum {fa}");
        }
    }
}
