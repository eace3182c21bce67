//! Decoder step schedules.
//!
//! A schedule is the deterministic staircase `x_0 = 0`,
//! `q*_{1,k} = g(x_{k-1})`, `q_{1,k} = q*_{1,k} - eta_k`,
//! `x_k = q_{1,k} / (1 + k f / q_{1,k})`, run until the state crosses the
//! working-interval endpoint, plus one completion step. It carries the
//! combine weights the decoder should use and the failed-detection /
//! false-alarm allowances the run is budgeted for.

use serde::Serialize;

use super::g::g_eval;
use super::rate::{rate_nats, x_star};
use super::{AllocModel, AnalysisError, AnalysisParams, ScheduleTactic};
use crate::numeric::bernoulli_kl_inverse_lower;

/// Hard ceiling on staircase length.
pub(crate) const STEP_CAP: usize = 20_000;

/// A finished decoding schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    /// Target detection levels `q*_{1,k} = g(x_{k-1})`, `k = 1..=m`.
    pub q_star: Vec<f64>,
    /// Scheduled detection levels `q_{1,k} = q*_{1,k} - eta_k`.
    pub q: Vec<f64>,
    /// Per-step shortfalls.
    pub eta: Vec<f64>,
    /// Adjusted states `x_0..x_m` (`x_0 = 0`).
    pub x: Vec<f64>,
    /// Weight increments `w_k = 1/(1 - x_k nu) - 1/(1 - x_{k-1} nu)`.
    pub w: Vec<f64>,
    /// Combine weights for decoder steps `2..=m`:
    /// `lambda_k = w_{k-1} (1 - x_{k-1} nu)`.
    pub lambda: Vec<f64>,
    /// Number of steps; the last one is the completion step taken after the
    /// state first reaches `x_star`.
    pub m: usize,
    /// Working per-step false-alarm rate.
    pub f: f64,
    /// Multiplier in `f = kappa f*` when `f` was derived (None when the
    /// caller fixed `f` directly).
    pub kappa: Option<f64>,
    /// Common progress-divergence level of the constant-exponent tactic
    /// (0 when unused).
    pub d_level: f64,
    /// Failed-detection allowance `1 - q_{1,m}`.
    pub rem: f64,
    /// False-alarm allowance `m f`.
    pub false_alarm_budget: f64,
    /// Total weighted mistake allowance `m f + rem`.
    pub mistake_budget: f64,
    /// Crossing target the staircase was run against.
    pub x_star: f64,
    /// Rate the schedule was built for.
    pub rate_nats: f64,
    pub tactic: ScheduleTactic,
}

/// Closed-form step-count bound from the accumulation gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepCountBound {
    /// `Lambda = gap - eta`: per-step progress before false-alarm drag.
    pub step_gap: f64,
    /// `Lambda~ = Lambda (1 + sqrt(1 - 4 x* f / Lambda^2)) / 2`: effective
    /// per-step progress including the drag.
    pub effective_gap: f64,
    /// `ceil(1 / Lambda~)`: bound on the number of steps.
    pub m_bound: usize,
}

/// Evaluates the step-count bound. Requires `gap > eta` and the
/// admissibility condition `4 f x* <= (gap - eta)^2`.
pub fn step_count_bound(
    gap: f64,
    eta: f64,
    f: f64,
    x_star: f64,
) -> Result<StepCountBound, AnalysisError> {
    if !(gap > eta) {
        return Err(AnalysisError::BadInput {
            what: format!("step bound needs gap {gap} > eta {eta}"),
        });
    }
    if !(f >= 0.0) || !(x_star > 0.0) {
        return Err(AnalysisError::BadInput {
            what: format!("step bound needs f >= 0 and x* > 0, got f = {f}, x* = {x_star}"),
        });
    }
    let step_gap = gap - eta;
    let lhs = 4.0 * f * x_star;
    let rhs = step_gap * step_gap;
    if lhs > rhs {
        return Err(AnalysisError::InfeasibleStepBound { lhs, rhs });
    }
    let effective_gap = step_gap * (1.0 + libm::sqrt(1.0 - lhs / rhs)) / 2.0;
    Ok(StepCountBound { step_gap, effective_gap, m_bound: libm::ceil(1.0 / effective_gap) as usize })
}

/// Builds the schedule for a parameter set: resolves the rate, endpoint,
/// working false-alarm rate, and shortfall rule, then runs the staircase.
///
/// The shortfall level and the false-alarm multiplier both depend on the
/// final step count, so the construction is iterated to a fixed point over
/// `m` (breaking on a revisited value).
pub fn build_schedule(ap: &AnalysisParams) -> Result<Schedule, AnalysisError> {
    ap.validate()?;
    if ap.tactic == ScheduleTactic::ConstantEta && ap.eta.is_none() {
        return Err(AnalysisError::BadInput {
            what: "constant-eta tactic needs an explicit eta".into(),
        });
    }
    let model = ap.alloc_model()?;
    let rate = rate_nats(ap)?;
    let target = x_star(ap)?;
    let f_star = ap.f_star();
    let l_pi = model.l_pi();

    let mut m_guess = 8usize;
    let mut seen = vec![m_guess];
    let mut result: Option<(Staircase, f64, Option<f64>, f64)> = None;
    for _ in 0..30 {
        let (f, kappa) = derive_false_alarm_rate(ap, f_star, l_pi, m_guess);
        let d_level = derive_exponent_level(ap, l_pi, m_guess);
        let stair = run_staircase(ap, &model, rate, target, f, d_level)?;
        let m = stair.q.len();
        result = Some((stair, f, kappa, d_level));
        if m == m_guess || seen.contains(&m) {
            break;
        }
        seen.push(m);
        m_guess = m;
    }
    let (stair, f, kappa, d_level) = result.expect("at least one staircase round ran");

    let m = stair.q.len();
    let nu = ap.nu();
    let inv = |x: f64| 1.0 / (1.0 - x * nu);
    let w: Vec<f64> = (1..=m).map(|k| inv(stair.x[k]) - inv(stair.x[k - 1])).collect();
    let mut lambda = Vec::with_capacity(m.saturating_sub(1));
    for k in 2..=m {
        let lam = (stair.x[k - 1] - stair.x[k - 2]) * nu / (1.0 - stair.x[k - 2] * nu);
        if !(lam > 0.0 && lam < 1.0) {
            return Err(AnalysisError::BadInput {
                what: format!(
                    "state path is not increasing at step {k}; combine weight {lam} leaves (0,1)"
                ),
            });
        }
        lambda.push(lam);
    }

    let rem = 1.0 - stair.q[m - 1];
    let false_alarm_budget = m as f64 * f;
    Ok(Schedule {
        q_star: stair.q_star,
        q: stair.q,
        eta: stair.eta,
        x: stair.x,
        w,
        lambda,
        m,
        f,
        kappa,
        d_level,
        rem,
        false_alarm_budget,
        mistake_budget: false_alarm_budget + rem,
        x_star: target,
        rate_nats: rate,
        tactic: ap.tactic,
    })
}

struct Staircase {
    q_star: Vec<f64>,
    q: Vec<f64>,
    eta: Vec<f64>,
    x: Vec<f64>,
}

fn run_staircase(
    ap: &AnalysisParams,
    model: &AllocModel,
    rate: f64,
    target: f64,
    f: f64,
    d_level: f64,
) -> Result<Staircase, AnalysisError> {
    let mut q_star = Vec::new();
    let mut q: Vec<f64> = Vec::new();
    let mut eta = Vec::new();
    let mut x = vec![0.0_f64];
    let mut crossed = false;
    loop {
        let k = q.len() + 1;
        if k > STEP_CAP {
            return Err(AnalysisError::StepCapExceeded { cap: STEP_CAP, x_star: target });
        }
        let qs = g_eval(*x.last().expect("state vector is non-empty"), rate, ap, model)?;
        let eta_k = shortfall(ap, d_level, qs);
        let qk = qs - eta_k;
        if !(qk > 0.0) {
            return Err(AnalysisError::BadInput {
                what: format!(
                    "step {k}: shortfall {eta_k} swallows the detection level q* = {qs}"
                ),
            });
        }
        if !crossed && k >= 2 && qk <= q[k - 2] {
            return Err(AnalysisError::AccumulationStall {
                step: k,
                q_prev: q[k - 2],
                q: qk,
                x_star: target,
            });
        }
        let xk = if f > 0.0 { qk / (1.0 + k as f64 * f / qk) } else { qk };
        q_star.push(qs);
        q.push(qk);
        eta.push(eta_k);
        x.push(xk);
        if crossed {
            // The completion step after crossing fixes the final q_{1,m}.
            break;
        }
        if xk >= target {
            crossed = true;
        }
    }
    Ok(Staircase { q_star, q, eta, x })
}

/// Per-step shortfall under the active tactic.
fn shortfall(ap: &AnalysisParams, d_level: f64, q_star_k: f64) -> f64 {
    match ap.tactic {
        ScheduleTactic::ConstantEta => ap.eta.expect("checked by build_schedule"),
        ScheduleTactic::ConstantExponent => {
            if d_level == 0.0 || q_star_k <= 0.0 {
                return 0.0;
            }
            // Largest q below q* whose progress divergence equals the level.
            let qs = q_star_k.min(1.0 - 1e-12);
            (q_star_k - bernoulli_kl_inverse_lower(qs, d_level)).max(0.0)
        }
    }
}

/// Working false-alarm rate `f`. An explicit `ap.f` wins; otherwise
/// `f = kappa f*` where `kappa >= 2` solves
/// `kappa ln kappa - kappa + 1 = ln(2 m / target) / (L_pi f*)`,
/// sized so the per-step false-alarm bound terms sum to half the target.
/// In the many-section limit the exponents diverge and the multiplier stays
/// at its floor of 2.
fn derive_false_alarm_rate(
    ap: &AnalysisParams,
    f_star: f64,
    l_pi: Option<f64>,
    m: usize,
) -> (f64, Option<f64>) {
    if let Some(f) = ap.f {
        return (f, None);
    }
    let kappa = match l_pi {
        None => 2.0,
        Some(lp) => {
            let t = libm::log(2.0 * m as f64 / ap.bound_sum_target) / (lp * f_star);
            solve_kappa(t).max(2.0)
        }
    };
    (kappa * f_star, Some(kappa))
}

/// Progress-divergence level `d` for the constant-exponent tactic:
/// `d = (ln sum_{k=1..m} e^{c0 k} - ln target) / L_pi` with `c0 = C`, so the
/// per-step progress bound terms `e^{-L_pi d + c0 k}` sum to the target.
/// Zero in the many-section limit (the exponents diverge for any positive
/// shortfall, so none is needed).
fn derive_exponent_level(ap: &AnalysisParams, l_pi: Option<f64>, m: usize) -> f64 {
    if ap.tactic != ScheduleTactic::ConstantExponent {
        return 0.0;
    }
    let Some(lp) = l_pi else { return 0.0 };
    let c0 = ap.capacity_nats();
    let mf = m as f64;
    // ln of e^{c0} + ... + e^{c0 m}, overflow-safe.
    let ln_sum = c0 * mf + libm::log1p(-libm::exp(-c0 * mf)) - libm::log1p(-libm::exp(-c0));
    (ln_sum - libm::log(ap.bound_sum_target)) / lp
}

/// Solves `kappa ln kappa - kappa + 1 = t` for `kappa >= 1` (the left side
/// is 0 at 1 and strictly increasing).
fn solve_kappa(t: f64) -> f64 {
    if !(t > 0.0) {
        return 1.0;
    }
    let h = |k: f64| k * libm::log(k) - k + 1.0;
    let mut hi = 2.0;
    while h(hi) < t {
        hi *= 2.0;
    }
    let mut lo = 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
