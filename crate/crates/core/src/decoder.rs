//! Adaptive successive threshold decoder.
//!
//! Step 1 scores every column against the received word,
//! `Z_j = X_j' y / ||y||`, and accepts terms scoring at least `tau`. Each
//! later step forms a fresh direction `G_k` — in orthogonal mode the part of
//! the previous step's fit increment orthogonal to all earlier directions, in
//! residual mode the current residual `y - fit` — scores the remaining terms
//! against it, folds the new scores into a running combined statistic with
//! weights `lambda_k`, and accepts the terms whose combined statistic crosses
//! the same `tau`. Sections with no accepted term are resolved at the end by
//! the configured rule (argmax of the last combined statistic, or erasure).

use serde::Serialize;
use thiserror::Error;

use crate::codec::{DesignMatrix, SectionIndices};
use crate::params::CodeParams;
use crate::power::PowerAllocation;

/// Relative norm floor below which a new direction carries no information.
const DEGENERATE_RATIO: f64 = 1e-10;

/// Errors from decoder configuration or inputs.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecoderError {
    #[error("received vector has zero norm")]
    ZeroReceived,
    #[error("dimension mismatch: {what}")]
    DimensionMismatch { what: String },
    #[error("combination weight at step {step} is {lambda}, outside [0, 1]")]
    LambdaOutOfRange { step: usize, lambda: f64 },
    #[error("weight schedule has {got} entries, steps 2..={steps} need {needed}")]
    ScheduleTooShort { needed: usize, got: usize, steps: usize },
    #[error("invalid configuration: {what}")]
    BadConfig { what: String },
}

/// How the per-step scoring direction is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticMode {
    /// Directions are orthogonalized fit increments; new scores enter the
    /// combination with a negative sign.
    Orthogonal,
    /// Directions are residuals `y - fit`; new scores enter with a positive
    /// sign and weights are estimated from realized acceptance.
    Residual,
}

/// How sections with no accepted term are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalizeRule {
    /// Pick the term with the largest last combined statistic.
    Argmax,
    /// Mark the section erased (index 0 in the output).
    Erase,
}

/// What leaves the candidate set when a term is accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionRemoval {
    /// Remove the whole section: one term per section by construction, so no
    /// other term of an accepted section is scanned again (default).
    WholeSection,
    /// Remove only the accepted terms themselves.
    AcceptedTermsOnly,
}

/// Source of the combination weights `lambda_k`.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaRule {
    /// Precomputed weights; entry `i` applies at step `i + 2`.
    Schedule(Vec<f64>),
    /// Plug-in weights from the realized accepted weight: the running
    /// accepted power share is deflated by the nominal false-alarm rate and
    /// pushed through the same two-step recursion the analysis uses.
    Empirical,
}

/// Decoder configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderConfig {
    pub mode: StatisticMode,
    /// Maximum number of steps `m >= 1`.
    pub max_steps: usize,
    /// Acceptance threshold; `+inf` accepts nothing.
    pub tau: f64,
    pub lambda: LambdaRule,
    pub finalize: FinalizeRule,
    pub removal: SectionRemoval,
    /// Per-step nominal false-alarm weight used by [`LambdaRule::Empirical`]
    /// to deflate realized acceptance; ignored with a fixed schedule.
    pub nominal_false_alarm: f64,
}

impl DecoderConfig {
    /// Orthogonal-mode config with argmax finalization and whole-section
    /// removal.
    pub fn new(tau: f64, max_steps: usize, lambda: LambdaRule) -> Self {
        DecoderConfig {
            mode: StatisticMode::Orthogonal,
            max_steps,
            tau,
            lambda,
            finalize: FinalizeRule::Argmax,
            removal: SectionRemoval::WholeSection,
            nominal_false_alarm: 0.0,
        }
    }

    fn validate(&self) -> Result<(), DecoderError> {
        if self.max_steps == 0 {
            return Err(DecoderError::BadConfig { what: "max_steps must be >= 1".into() });
        }
        if self.tau.is_nan() {
            return Err(DecoderError::BadConfig { what: "tau is NaN".into() });
        }
        if !(self.nominal_false_alarm >= 0.0) {
            return Err(DecoderError::BadConfig {
                what: format!("nominal false-alarm rate {} must be >= 0", self.nominal_false_alarm),
            });
        }
        if let LambdaRule::Schedule(v) = &self.lambda {
            let needed = self.max_steps.saturating_sub(1);
            if v.len() < needed {
                return Err(DecoderError::ScheduleTooShort {
                    needed,
                    got: v.len(),
                    steps: self.max_steps,
                });
            }
            for (i, &lambda) in v.iter().enumerate().take(needed) {
                if !(lambda > 0.0 && lambda < 1.0) {
                    return Err(DecoderError::LambdaOutOfRange { step: i + 2, lambda });
                }
            }
        }
        Ok(())
    }
}

/// One term accepted by the threshold test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcceptedTerm {
    /// Step at which the term crossed the threshold.
    pub step: usize,
    /// Section, 0-based.
    pub section: usize,
    /// Index within the section, 1-based.
    pub index: usize,
    /// Statistic value that triggered acceptance.
    pub stat: f64,
}

/// Why the step loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Ran all configured steps.
    Completed,
    /// A step accepted nothing, so no further direction exists.
    NoAcceptances { step: usize },
    /// The new direction's norm was negligible relative to its source.
    DegenerateDirection { step: usize },
    /// Every section has an accepted term.
    AllSectionsDecoded { step: usize },
}

/// Per-step record: the scoring direction, raw and combined statistics over
/// the still-candidate terms (`NaN` elsewhere), and the acceptances.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Step number, 1-based.
    pub k: usize,
    /// Combination weight applied this step (0 at step 1).
    pub lambda: f64,
    /// Running sum of squared combination coefficients (1 up to rounding).
    pub coeff_sq_sum: f64,
    /// Scoring direction (orthogonalized increment, or residual).
    pub direction: Vec<f64>,
    pub direction_norm: f64,
    /// Cumulative fit after this step's acceptances.
    pub fit: Vec<f64>,
    /// New statistics `X_j' G / ||G||`; `NaN` for terms no longer scanned.
    pub stats: Vec<f64>,
    /// Combined statistics after this step; `NaN` for terms no longer scanned.
    pub comb: Vec<f64>,
    pub accepted: Vec<AcceptedTerm>,
    /// Decoder-observable accepted power weight through this step.
    pub accepted_weight_cum: f64,
    /// Candidate terms left after removal.
    pub remaining_after: usize,
    /// True when the step only recorded a degenerate direction.
    pub degenerate: bool,
}

/// Final per-section decisions. Index 0 marks an erased section.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecodedSections {
    /// Per-section decided index, 1-based; 0 = erased.
    pub indices: Vec<usize>,
    pub decisions: Vec<SectionDecision>,
}

/// Where a section's final index came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum SectionDecision {
    /// A term was threshold-accepted at this step.
    Accepted { step: usize },
    /// No acceptance; argmax of the last combined statistic.
    Argmax,
    /// No acceptance; erased.
    Erased,
}

impl DecodedSections {
    /// Decisions as message indices; fails if any section is erased.
    pub fn to_indices(&self) -> Option<SectionIndices> {
        if self.indices.iter().any(|&j| j == 0) {
            None
        } else {
            Some(SectionIndices(self.indices.clone()))
        }
    }
}

/// Full decoding record.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderTrace {
    pub n: usize,
    pub b: usize,
    pub l: usize,
    pub tau: f64,
    pub mode: StatisticMode,
    pub steps: Vec<StepRecord>,
    pub stop: StopReason,
    /// Last computed combined statistic per term (step-1 value for terms
    /// never rescanned).
    pub final_comb: Vec<f64>,
    /// All acceptances in step order.
    pub accepted_terms: Vec<AcceptedTerm>,
    pub decisions: DecodedSections,
}

/// Truth-annotated per-step error weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepErrorStats {
    pub step: usize,
    /// Power weight of correct terms accepted at this step.
    pub q_hat: f64,
    /// Power weight of wrong terms accepted at this step.
    pub f_hat: f64,
    /// Cumulative correct-acceptance weight through this step.
    pub q_hat_cum: f64,
    /// Cumulative false-alarm weight through this step.
    pub f_hat_cum: f64,
}

/// Final-decision error summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MistakeStats {
    /// Power weight of sections whose final decision is correct.
    pub q_hat: f64,
    /// Power weight of sections whose final decision is wrong and came from
    /// a threshold acceptance (false alarms; argmax/erasure wrongs are
    /// failed detections instead).
    pub f_hat: f64,
    /// Unweighted fraction of sections decided incorrectly (erasures count).
    pub section_mistake_fraction: f64,
    /// Weighted mistake total: failed-detection weight `(1 - q_hat)` plus
    /// false-alarm weight `f_hat`.
    pub weighted_mistakes: f64,
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

/// `v` minus its projections onto a list of mutually orthogonal, nonzero
/// basis vectors: `v - sum (<v,G>/||G||^2) G`.
pub fn orthogonal_component(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut out = v.to_vec();
    for g in basis {
        let gg: f64 = g.iter().map(|x| x * x).sum();
        if gg == 0.0 {
            continue;
        }
        let vg: f64 = out.iter().zip(g.iter()).map(|(a, b)| a * b).sum();
        let coeff = vg / gg;
        for (o, gi) in out.iter_mut().zip(g.iter()) {
            *o -= coeff * gi;
        }
    }
    out
}

/// Elementwise `sqrt(1 - lambda) * prev - sqrt(lambda) * z`.
pub fn combine_statistic(
    prev_comb: &[f64],
    z_k: &[f64],
    lambda_k: f64,
) -> Result<Vec<f64>, DecoderError> {
    if !(0.0..=1.0).contains(&lambda_k) {
        return Err(DecoderError::LambdaOutOfRange { step: 0, lambda: lambda_k });
    }
    if prev_comb.len() != z_k.len() {
        return Err(DecoderError::DimensionMismatch {
            what: format!("combined statistic length {} vs new {}", prev_comb.len(), z_k.len()),
        });
    }
    let keep = libm::sqrt(1.0 - lambda_k);
    let add = libm::sqrt(lambda_k);
    Ok(prev_comb.iter().zip(z_k.iter()).map(|(p, z)| keep * p - add * z).collect())
}

/// Step-1 scoring: statistics for every column, the accepted set, and the
/// weighted fit of the accepted columns.
pub struct StepOne {
    /// `X_j' y / ||y||` for every column, section-major.
    pub stats: Vec<f64>,
    pub accepted: Vec<AcceptedTerm>,
    /// `sum over accepted of sqrt(P pi_section) X_j`.
    pub f1: Vec<f64>,
}

/// Scores every column against the received word and thresholds at `tau`.
pub fn step_one(
    dict: &DesignMatrix,
    y: &[f64],
    params: &CodeParams,
    alloc: &PowerAllocation,
    tau: f64,
) -> Result<StepOne, DecoderError> {
    check_shapes(dict, y, params, alloc)?;
    let y_norm = norm(y);
    if y_norm == 0.0 {
        return Err(DecoderError::ZeroReceived);
    }
    let total = dict.total_columns();
    let mut stats = Vec::with_capacity(total);
    for c in 0..total {
        let col = dict.column(c);
        let dot: f64 = col.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
        stats.push(dot / y_norm);
    }
    let mut accepted = Vec::new();
    let mut f1 = vec![0.0; dict.n];
    for (c, &z) in stats.iter().enumerate() {
        if z >= tau {
            let section = c / dict.b;
            let index = c % dict.b + 1;
            accepted.push(AcceptedTerm { step: 1, section, index, stat: z });
            let w = libm::sqrt(params.p * alloc.pi[section]);
            for (f, x) in f1.iter_mut().zip(dict.column(c).iter()) {
                *f += w * x;
            }
        }
    }
    Ok(StepOne { stats, accepted, f1 })
}

fn check_shapes(
    dict: &DesignMatrix,
    y: &[f64],
    params: &CodeParams,
    alloc: &PowerAllocation,
) -> Result<(), DecoderError> {
    if dict.n != params.n || dict.b != params.b || dict.l != params.l {
        return Err(DecoderError::DimensionMismatch {
            what: format!(
                "design matrix {}x({}x{}) vs params {}x({}x{})",
                dict.n, dict.b, dict.l, params.n, params.b, params.l
            ),
        });
    }
    if y.len() != dict.n {
        return Err(DecoderError::DimensionMismatch {
            what: format!("received length {} vs codelength {}", y.len(), dict.n),
        });
    }
    if alloc.pi.len() != params.l {
        return Err(DecoderError::DimensionMismatch {
            what: format!("allocation sections {} vs params {}", alloc.pi.len(), params.l),
        });
    }
    Ok(())
}

/// Plug-in state estimate from decoder-observable acceptance: the accepted
/// weight deflated by the accumulated nominal false alarms,
/// `x = w / (1 + k f / w)`.
fn adjusted_state(accepted_weight: f64, steps_so_far: usize, f_nominal: f64) -> f64 {
    if accepted_weight <= 0.0 {
        return 0.0;
    }
    accepted_weight / (1.0 + steps_so_far as f64 * f_nominal / accepted_weight)
}

/// Two-step combination-weight recursion shared with the analysis layer:
/// `lambda_k = (x_{k-1} - x_{k-2}) nu / (1 - x_{k-2} nu)`.
fn lambda_from_states(x_prev: f64, x_prev2: f64, nu: f64) -> f64 {
    ((x_prev - x_prev2) * nu / (1.0 - x_prev2 * nu)).clamp(0.0, 1.0)
}

/// Runs the full decoding loop and finalizes section decisions.
pub fn run_decoder(
    dict: &DesignMatrix,
    y: &[f64],
    params: &CodeParams,
    alloc: &PowerAllocation,
    config: &DecoderConfig,
) -> Result<DecoderTrace, DecoderError> {
    config.validate()?;
    check_shapes(dict, y, params, alloc)?;
    let y_norm = norm(y);
    if y_norm == 0.0 {
        return Err(DecoderError::ZeroReceived);
    }

    let total = dict.total_columns();
    let b = dict.b;
    let mut live = vec![true; total];
    let mut section_done = vec![false; dict.l];
    let mut remaining = total;

    let mut steps: Vec<StepRecord> = Vec::new();
    let mut accepted_all: Vec<AcceptedTerm> = Vec::new();
    let mut final_comb = vec![f64::NAN; total];
    let mut fit = vec![0.0f64; dict.n];
    let mut basis: Vec<Vec<f64>> = Vec::new(); // orthogonal mode directions
    let mut prev_comb = vec![f64::NAN; total];
    let mut prev_increment = vec![0.0f64; dict.n]; // F_{k-1}
    let mut coeff_sq_sum = 1.0;
    let mut accepted_weight = 0.0;
    // Adjusted-state history for empirical weights: x_hat[k] after step k.
    let mut x_hist = vec![0.0f64; 1];
    let mut stop = StopReason::Completed;

    for k in 1..=config.max_steps {
        // Direction for this step.
        let (direction, degenerate, lambda) = if k == 1 {
            (y.to_vec(), false, 0.0)
        } else {
            let lambda = match &config.lambda {
                LambdaRule::Schedule(v) => v[k - 2],
                LambdaRule::Empirical => lambda_from_states(
                    x_hist[k - 1],
                    x_hist[k - 2],
                    params.nu,
                ),
            };
            match config.mode {
                StatisticMode::Orthogonal => {
                    let source_norm = norm(&prev_increment);
                    // Project twice: the second pass clears the rounding left
                    // by the first and keeps pairwise orthogonality at the
                    // 1e-8 level over many steps.
                    let g = orthogonal_component(&prev_increment, &basis);
                    let g = orthogonal_component(&g, &basis);
                    let degenerate = norm(&g) <= DEGENERATE_RATIO * source_norm;
                    (g, degenerate, lambda)
                }
                StatisticMode::Residual => {
                    let r: Vec<f64> = y.iter().zip(fit.iter()).map(|(a, f)| a - f).collect();
                    let degenerate = norm(&r) <= DEGENERATE_RATIO * y_norm;
                    (r, degenerate, lambda)
                }
            }
        };
        let direction_norm = norm(&direction);

        if degenerate || direction_norm == 0.0 {
            steps.push(StepRecord {
                k,
                lambda,
                coeff_sq_sum,
                direction,
                direction_norm,
                fit: fit.clone(),
                stats: vec![f64::NAN; total],
                comb: vec![f64::NAN; total],
                accepted: Vec::new(),
                accepted_weight_cum: accepted_weight,
                remaining_after: remaining,
                degenerate: true,
            });
            stop = StopReason::DegenerateDirection { step: k };
            break;
        }

        // New statistics over the live set.
        let mut stats = vec![f64::NAN; total];
        for (c, s) in stats.iter_mut().enumerate() {
            if live[c] {
                let col = dict.column(c);
                let dot: f64 = col.iter().zip(direction.iter()).map(|(a, b)| a * b).sum();
                *s = dot / direction_norm;
            }
        }

        // Combined statistics.
        let comb: Vec<f64> = if k == 1 {
            stats.clone()
        } else {
            let keep = libm::sqrt(1.0 - lambda);
            let add = libm::sqrt(lambda);
            let sign = match config.mode {
                StatisticMode::Orthogonal => -1.0,
                StatisticMode::Residual => 1.0,
            };
            coeff_sq_sum = (1.0 - lambda) * coeff_sq_sum + lambda;
            prev_comb
                .iter()
                .zip(stats.iter())
                .map(|(p, z)| keep * p + sign * add * z)
                .collect()
        };
        for c in 0..total {
            if live[c] {
                final_comb[c] = comb[c];
            }
        }

        // Threshold test and fit update.
        let mut accepted = Vec::new();
        let mut increment = vec![0.0f64; dict.n];
        for (c, &value) in comb.iter().enumerate() {
            if live[c] && value >= config.tau {
                let section = c / b;
                let index = c % b + 1;
                accepted.push(AcceptedTerm { step: k, section, index, stat: value });
                let w = libm::sqrt(params.p * alloc.pi[section]);
                for (f, x) in increment.iter_mut().zip(dict.column(c).iter()) {
                    *f += w * x;
                }
            }
        }
        for (f, inc) in fit.iter_mut().zip(increment.iter()) {
            *f += *inc;
        }

        // Removal: accepted terms always leave; whole-section removal also
        // retires every other term of a newly decided section.
        for term in &accepted {
            let c = term.section * b + (term.index - 1);
            live[c] = false;
            if !section_done[term.section] {
                section_done[term.section] = true;
                accepted_weight += alloc.pi[term.section];
            }
            if config.removal == SectionRemoval::WholeSection {
                for idx in 0..b {
                    live[term.section * b + idx] = false;
                }
            }
        }
        remaining = live.iter().filter(|&&v| v).count();
        x_hist.push(adjusted_state(accepted_weight, k, config.nominal_false_alarm));

        let accepted_empty = accepted.is_empty();
        accepted_all.extend(accepted.iter().cloned());
        steps.push(StepRecord {
            k,
            lambda,
            coeff_sq_sum,
            direction,
            direction_norm,
            fit: fit.clone(),
            stats,
            comb: comb.clone(),
            accepted,
            accepted_weight_cum: accepted_weight,
            remaining_after: remaining,
            degenerate: false,
        });

        if config.mode == StatisticMode::Orthogonal {
            // This step's direction joins the basis; the next direction is
            // the fit increment just formed, orthogonalized against it.
            basis.push(steps.last().expect("step just pushed").direction.clone());
        }
        prev_increment = increment;
        prev_comb = comb;

        if section_done.iter().all(|&d| d) {
            stop = StopReason::AllSectionsDecoded { step: k };
            break;
        }
        if accepted_empty {
            if k < config.max_steps {
                stop = StopReason::NoAcceptances { step: k };
            }
            break;
        }
    }

    let mut trace = DecoderTrace {
        n: dict.n,
        b,
        l: dict.l,
        tau: config.tau,
        mode: config.mode,
        steps,
        stop,
        final_comb,
        accepted_terms: accepted_all,
        decisions: DecodedSections { indices: Vec::new(), decisions: Vec::new() },
    };
    trace.decisions = finalize(&trace, config.finalize);
    Ok(trace)
}

/// Resolves per-section decisions from a completed trace.
///
/// A section with accepted terms takes the earliest-accepted one (ties:
/// larger acceptance statistic, then smaller index). A section with none
/// takes the argmax of its last combined statistics, or an erasure flag.
pub fn finalize(trace: &DecoderTrace, rule: FinalizeRule) -> DecodedSections {
    let b = trace.b;
    let mut indices = vec![0usize; trace.l];
    let mut decisions = vec![SectionDecision::Erased; trace.l];
    let mut chosen: Vec<Option<&AcceptedTerm>> = vec![None; trace.l];
    for term in &trace.accepted_terms {
        let slot = &mut chosen[term.section];
        let better = match slot {
            None => true,
            Some(cur) => {
                (term.step, -term.stat, term.index) < (cur.step, -cur.stat, cur.index)
            }
        };
        if better {
            *slot = Some(term);
        }
    }
    for section in 0..trace.l {
        if let Some(term) = chosen[section] {
            indices[section] = term.index;
            decisions[section] = SectionDecision::Accepted { step: term.step };
        } else {
            match rule {
                FinalizeRule::Argmax => {
                    let base = section * b;
                    let mut best = 0usize;
                    let mut best_val = f64::NEG_INFINITY;
                    for j in 0..b {
                        let v = trace.final_comb[base + j];
                        if !v.is_nan() && v > best_val {
                            best_val = v;
                            best = j + 1;
                        }
                    }
                    indices[section] = best; // 0 only if nothing was ever scored
                    decisions[section] =
                        if best == 0 { SectionDecision::Erased } else { SectionDecision::Argmax };
                }
                FinalizeRule::Erase => {
                    indices[section] = 0;
                    decisions[section] = SectionDecision::Erased;
                }
            }
        }
    }
    DecodedSections { indices, decisions }
}

/// Per-step correct-acceptance and false-alarm weights against the truth.
pub fn annotate_trace(
    trace: &DecoderTrace,
    sent: &SectionIndices,
    alloc: &PowerAllocation,
) -> Result<Vec<StepErrorStats>, DecoderError> {
    if sent.0.len() != trace.l || alloc.pi.len() != trace.l {
        return Err(DecoderError::DimensionMismatch {
            what: format!(
                "trace has {} sections, sent {}, allocation {}",
                trace.l,
                sent.0.len(),
                alloc.pi.len()
            ),
        });
    }
    let mut out = Vec::with_capacity(trace.steps.len());
    let mut q_cum = 0.0;
    let mut f_cum = 0.0;
    for step in &trace.steps {
        let mut q = 0.0;
        let mut f = 0.0;
        for term in &step.accepted {
            if term.index == sent.0[term.section] {
                q += alloc.pi[term.section];
            } else {
                f += alloc.pi[term.section];
            }
        }
        q_cum += q;
        f_cum += f;
        out.push(StepErrorStats { step: step.k, q_hat: q, f_hat: f, q_hat_cum: q_cum, f_hat_cum: f_cum });
    }
    Ok(out)
}

/// Final-decision error weights against the truth.
pub fn mistake_stats(
    decoded: &DecodedSections,
    sent: &SectionIndices,
    alloc: &PowerAllocation,
) -> MistakeStats {
    assert_eq!(decoded.indices.len(), sent.0.len(), "section count mismatch");
    assert_eq!(alloc.pi.len(), sent.0.len(), "allocation length mismatch");
    let l = sent.0.len();
    let mut q_hat = 0.0;
    let mut f_hat = 0.0;
    let mut wrong = 0usize;
    for section in 0..l {
        let correct = decoded.indices[section] == sent.0[section];
        if correct {
            q_hat += alloc.pi[section];
        } else {
            wrong += 1;
            if matches!(decoded.decisions[section], SectionDecision::Accepted { .. }) {
                f_hat += alloc.pi[section];
            }
        }
    }
    MistakeStats {
        q_hat,
        f_hat,
        section_mistake_fraction: wrong as f64 / l as f64,
        weighted_mistakes: (1.0 - q_hat) + f_hat,
    }
}
