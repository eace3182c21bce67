//! Rate and reliability analysis.
//!
//! Everything here is deterministic arithmetic on code parameters: the
//! baseline false-alarm rate `f*`, the detection-shift function `mu_x(u)`,
//! the progression function `g(x)` in exact, integral, and continuum forms,
//! the achievable-rate formula, step schedules for the decoder, the
//! per-step probability bound, and a parameter search built on top.

mod bound;
mod g;
mod optimize;
mod rate;
mod schedule;

pub use bound::{error_bound, shifted_divergence, BoundReport, StepBoundTerms};
pub use g::{g_constant, g_continuum, g_integral, g_sum};
pub use optimize::{
    evaluate_profile, optimize_params, rate_sweep, AnalysisProfile, Feasibility, OptimizeTargets,
    SweepPoint,
};
pub use rate::{gap_profile, rate_from_deltas, rate_nats, x_star, GapReport};
pub use schedule::{build_schedule, step_count_bound, StepCountBound, Schedule};

use serde::Serialize;
use thiserror::Error;

use crate::numeric::{self, NumericError};
use crate::params::CodeParams;
use crate::power::{
    alloc_constant, alloc_exponential, alloc_leveled, AllocationKind, PowerAllocation, PowerError,
};

/// Errors from the analysis layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("invalid input: {what}")]
    BadInput { what: String },
    #[error("state x = {x} with nu = {nu} leaves 1 - x nu <= 0")]
    StateOutOfRange { x: f64, nu: f64 },
    #[error("quadrature failed: {0}")]
    Quadrature(#[from] NumericError),
    #[error(
        "accumulation failed at step {step}: q dropped from {q_prev} to {q} before reaching x* = {x_star}"
    )]
    AccumulationStall { step: usize, q_prev: f64, q: f64, x_star: f64 },
    #[error("schedule exceeded {cap} steps without reaching x* = {x_star}")]
    StepCapExceeded { cap: usize, x_star: f64 },
    #[error(
        "step bound needs 4 f x* <= (gap - eta)^2: got 4 f x* = {lhs}, (gap - eta)^2 = {rhs}"
    )]
    InfeasibleStepBound { lhs: f64, rhs: f64 },
    #[error("divergence orientation violated at step {step}: q = {q} exceeds target {q_star}")]
    KlOrientation { step: usize, q: f64, q_star: f64 },
    #[error(
        "working false-alarm rate {f} must exceed the baseline rate {f_star} for the bound"
    )]
    FalseAlarmTooSmall { f: f64, f_star: f64 },
    #[error("threshold offset a' = {a_prime} violates the side condition a' < sqrt(2 pi)/2")]
    ConstantSideCondition { a_prime: f64 },
    #[error("power allocation: {0}")]
    Power(#[from] PowerError),
}

/// Section count: a finite code, or the many-section limit in which the
/// profile weights become a density and the per-section bound terms vanish.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sections {
    Finite(usize),
    Continuum,
}

impl Sections {
    pub fn finite(&self) -> Option<usize> {
        match self {
            Sections::Finite(l) => Some(*l),
            Sections::Continuum => None,
        }
    }
}

/// How per-step shortfalls `eta_k` are chosen when building a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleTactic {
    /// Fixed `eta` every step.
    ConstantEta,
    /// `eta_k` solved so each step's progress-divergence exponent sits at a
    /// common level calibrated to a target bound sum.
    ConstantExponent,
}

/// Inputs of one analysis evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisParams {
    /// Section size (power of two).
    pub b: usize,
    /// Number of sections, or the many-section limit.
    pub sections: Sections,
    pub snr: f64,
    /// Threshold offset `a >= 0`.
    pub a: f64,
    /// Analysis shift `h > 0`; `a' = a + h`.
    pub h: f64,
    pub alloc_kind: AllocationKind,
    /// Decay parameter for exponential/leveled profiles; `None` defaults to
    /// full capacity. Ignored for the constant profile.
    pub gamma: Option<f64>,
    /// Leveling parameter `c >= 0` (leveled profile only).
    pub c: f64,
    /// Rate-margin knob `r >= 0`.
    pub r: f64,
    /// Fixed per-step shortfall for the constant-eta tactic.
    pub eta: Option<f64>,
    /// Working false-alarm rate override; `None` derives it from the bound
    /// target (and never below the baseline `f*`).
    pub f: Option<f64>,
    pub tactic: ScheduleTactic,
    /// Target for the summed progress/false-alarm exponent terms used to set
    /// levels in the constant-exponent tactic and the derived `f`.
    pub bound_sum_target: f64,
}

impl AnalysisParams {
    /// Validated constructor with the standard defaults: `h = 0.01 sqrt(2 ln B)`,
    /// constant-exponent tactic, bound sum target `8e-4`, derived `f`.
    pub fn new(
        b: usize,
        sections: Sections,
        snr: f64,
        a: f64,
        alloc_kind: AllocationKind,
        gamma: Option<f64>,
        c: f64,
        r: f64,
    ) -> Result<Self, AnalysisError> {
        let ap = AnalysisParams {
            b,
            sections,
            snr,
            a,
            h: CodeParams::default_shift(b),
            alloc_kind,
            gamma,
            c,
            r,
            eta: None,
            f: None,
            tactic: ScheduleTactic::ConstantExponent,
            bound_sum_target: 8e-4,
        };
        ap.validate()?;
        Ok(ap)
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        let fail = |what: String| Err(AnalysisError::BadInput { what });
        if self.b < 2 || !self.b.is_power_of_two() {
            return fail(format!("section size {} must be a power of two >= 2", self.b));
        }
        if let Sections::Finite(l) = self.sections {
            if l == 0 {
                return fail("section count must be >= 1".into());
            }
        }
        if !(self.snr > 0.0) {
            return fail(format!("snr {} must be positive", self.snr));
        }
        if !(self.a >= 0.0) {
            return fail(format!("threshold offset a = {} must be >= 0", self.a));
        }
        if !(self.h > 0.0) {
            return fail(format!("shift h = {} must be positive", self.h));
        }
        if !(self.c >= 0.0) {
            return fail(format!("leveling parameter c = {} must be >= 0", self.c));
        }
        if !(self.r >= 0.0) {
            return fail(format!("rate margin r = {} must be >= 0", self.r));
        }
        if let Some(gamma) = self.gamma {
            if !(gamma > 0.0 && gamma <= self.capacity_nats() + 1e-12) {
                return fail(format!(
                    "decay parameter gamma = {gamma} must lie in (0, {}]",
                    self.capacity_nats()
                ));
            }
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0) {
                return fail(format!("eta = {eta} must be positive"));
            }
        }
        if let Some(f) = self.f {
            if !(f >= 0.0) {
                return fail(format!("working false-alarm rate f = {f} must be >= 0"));
            }
        }
        if !(self.bound_sum_target > 0.0) {
            return fail(format!("bound sum target {} must be positive", self.bound_sum_target));
        }
        Ok(())
    }

    pub fn ln_b(&self) -> f64 {
        libm::log(self.b as f64)
    }

    pub fn root_2_ln_b(&self) -> f64 {
        libm::sqrt(2.0 * self.ln_b())
    }

    pub fn capacity_nats(&self) -> f64 {
        0.5 * libm::log1p(self.snr)
    }

    /// `nu = snr / (1 + snr)`.
    pub fn nu(&self) -> f64 {
        self.snr / (1.0 + self.snr)
    }

    pub fn a_prime(&self) -> f64 {
        self.a + self.h
    }

    /// `delta_a = a' / sqrt(2 ln B)`.
    pub fn delta_a(&self) -> f64 {
        self.a_prime() / self.root_2_ln_b()
    }

    /// `tau_B^2 = 2 (ln B) (1 + delta_a)^2`.
    pub fn tau_b_sq(&self) -> f64 {
        let d = 1.0 + self.delta_a();
        2.0 * self.ln_b() * d * d
    }

    /// Decoder threshold `tau = sqrt(2 ln B) + a`.
    pub fn tau(&self) -> f64 {
        self.root_2_ln_b() + self.a
    }

    /// Baseline false-alarm rate at this threshold offset.
    pub fn f_star(&self) -> f64 {
        f_star(self.a, self.b)
    }

    /// Effective decay parameter: the configured one, or full capacity.
    pub fn gamma_eff(&self) -> f64 {
        self.gamma.unwrap_or_else(|| self.capacity_nats())
    }

    /// Resolves the power-profile view this analysis runs against.
    pub fn alloc_model(&self) -> Result<AllocModel, AnalysisError> {
        match self.sections {
            Sections::Finite(l) => {
                // Layout-only parameter set: the allocation constructors read
                // dimensions and channel constants, never the rate.
                let params = CodeParams::new(l, self.b, self.snr, 1.0, self.a, self.h)
                    .map_err(|e| AnalysisError::BadInput { what: e.to_string() })?;
                let alloc = match self.alloc_kind {
                    AllocationKind::Constant => alloc_constant(&params),
                    AllocationKind::Exponential => alloc_exponential(&params, self.gamma_eff())?,
                    AllocationKind::Leveled => alloc_leveled(&params, self.gamma_eff(), self.c)?,
                };
                Ok(AllocModel::Finite(alloc))
            }
            Sections::Continuum => {
                let gamma = self.gamma_eff();
                match self.alloc_kind {
                    AllocationKind::Constant => Ok(AllocModel::ContinuumConstant),
                    AllocationKind::Exponential => {
                        Ok(AllocModel::continuum_profile(gamma, 0.0))
                    }
                    AllocationKind::Leveled => {
                        let delta_c = self.c / self.root_2_ln_b();
                        let cut = libm::exp(-2.0 * gamma) * (1.0 + delta_c);
                        Ok(AllocModel::continuum_profile(gamma, cut))
                    }
                }
            }
        }
    }
}

/// Power-profile view used by the progression function and the bound.
#[derive(Debug, Clone, PartialEq)]
pub enum AllocModel {
    /// Explicit finite profile.
    Finite(PowerAllocation),
    /// Many-section limit of the constant profile.
    ContinuumConstant,
    /// Many-section limit of the exponential/leveled profile: density
    /// `max{e^{-2 gamma t}, cut}` on `t in [0, 1]`.
    ContinuumProfile {
        gamma: f64,
        /// Floor on the normalized density (0 = pure exponential).
        cut: f64,
        /// Mass of the density (normalizer).
        z_bar: f64,
        /// Where the floor engages: `min(1, ln(1/cut) / (2 gamma))`.
        t_cut: f64,
        /// Relative excess mass over the pure exponential.
        delta_sum_sq: f64,
    },
}

impl AllocModel {
    fn continuum_profile(gamma: f64, cut: f64) -> AllocModel {
        let z0 = -libm::expm1(-2.0 * gamma) / (2.0 * gamma);
        if cut <= libm::exp(-2.0 * gamma) {
            // Floor below the profile floor: pure exponential.
            AllocModel::ContinuumProfile {
                gamma,
                cut: 0.0,
                z_bar: z0,
                t_cut: 1.0,
                delta_sum_sq: 0.0,
            }
        } else {
            let t_cut = (libm::log(1.0 / cut) / (2.0 * gamma)).min(1.0);
            let z_bar = (1.0 - libm::exp(-2.0 * gamma * t_cut)) / (2.0 * gamma)
                + cut * (1.0 - t_cut);
            AllocModel::ContinuumProfile {
                gamma,
                cut,
                z_bar,
                t_cut,
                delta_sum_sq: z_bar / z0 - 1.0,
            }
        }
    }

    /// Relative excess power mass of the profile over its pure-exponential
    /// baseline (`0` for constant/exponential).
    pub fn delta_sum_sq(&self) -> f64 {
        match self {
            AllocModel::Finite(alloc) => alloc.delta_sum_sq,
            AllocModel::ContinuumConstant => 0.0,
            AllocModel::ContinuumProfile { delta_sum_sq, .. } => *delta_sum_sq,
        }
    }

    /// `1 / max_ell pi_ell`, or `None` in the many-section limit.
    pub fn l_pi(&self) -> Option<f64> {
        match self {
            AllocModel::Finite(alloc) => Some(alloc.l_pi),
            _ => None,
        }
    }
}

/// Baseline false-alarm rate
/// `f* = exp(-a sqrt(2 ln B) - a^2/2) / ((sqrt(2 ln B) + a) sqrt(2 pi))`.
pub fn f_star(a: f64, b: usize) -> f64 {
    let s = libm::sqrt(2.0 * libm::log(b as f64));
    libm::exp(-a * s - a * a / 2.0) / ((s + a) * numeric::SQRT_2PI)
}

/// Detection shift `mu_x(u) = (sqrt(u)/sqrt(1 - x nu) - 1) sqrt(2 ln B) - a'`
/// with explicit constants (usable outside a full parameter set).
pub fn mu_shift(x: f64, u: f64, nu: f64, root_2_ln_b: f64, a_prime: f64) -> Result<f64, AnalysisError> {
    if !(x >= 0.0) || x * nu >= 1.0 {
        return Err(AnalysisError::StateOutOfRange { x, nu });
    }
    if !(u > 0.0) {
        return Err(AnalysisError::BadInput { what: format!("mu argument u = {u} must be positive") });
    }
    Ok((libm::sqrt(u) / libm::sqrt(1.0 - x * nu) - 1.0) * root_2_ln_b - a_prime)
}

/// Detection shift under a parameter set.
pub fn mu_x(x: f64, u: f64, ap: &AnalysisParams) -> Result<f64, AnalysisError> {
    mu_shift(x, u, ap.nu(), ap.root_2_ln_b(), ap.a_prime())
}
