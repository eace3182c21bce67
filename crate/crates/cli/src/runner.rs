//! Experiment execution: turns a resolved configuration into analysis
//! calls, dictionaries, channels, and decoder runs, and assembles the
//! report. Trials run in a parallel worker pool with per-trial derived
//! seeds; records are sorted by trial index before emission, so the output
//! is independent of scheduling.

use rayon::prelude::*;
use sparc_core::codec::CodecError;
use sparc_core::params::ParamsError;
use sparc_core::power::PowerError;
use sparc_core::{
    alloc_constant, alloc_exponential, alloc_leveled, annotate_trace, concat_payload_bits,
    evaluate_profile, finalize, gen_dictionary, make_codeword, mistake_stats, optimize_params,
    outer_correct, outer_indices, overall_rate_nats, random_indices, rate_sweep, run_decoder,
    transmit, AllocationKind, AnalysisError, AnalysisParams, AnalysisProfile, CodeParams,
    ConcatError, DecoderConfig, DecoderError, DecoderTrace, DesignMatrix, FinalizeRule,
    LambdaRule, OptimizeTargets, PowerAllocation, RsError, RsParams, Schedule, ScheduleTactic,
    SectionIndices, Sections, StopReason, SweepPoint,
};

use crate::config::{
    AllocKindCfg, ExperimentConfig, FinalizeCfg, LambdaCfg, Mode, RateSpec, Resolved,
    SweepSectionsCfg, TacticCfg,
};
use crate::report::{
    aggregate, AnalysisFailure, CodeSummary, ConcatSummary, SimReport, SweepRow, TrialRecord,
};
use crate::seeds::{dictionary_seed, message_seed, noise_seed, seeded_bits};

/// Trials run when the config leaves `montecarlo.trials` unset.
const DEFAULT_TRIALS: usize = 100;
/// Rate-margin knob used when the config leaves `analysis.r` unset: a
/// small drag that keeps the staircase endpoint interior at little rate
/// cost.
const DEFAULT_R: f64 = 0.5;

/// A failure after config validation: analysis, code construction,
/// decoding, or the memory guardrail.
#[derive(Debug)]
pub enum RunError {
    Analysis(AnalysisError),
    Params(ParamsError),
    Power(PowerError),
    Codec(CodecError),
    Decoder(DecoderError),
    Rs(RsError),
    Concat(ConcatError),
}

macro_rules! from_err {
    ($variant:ident, $ty:ty) => {
        impl From<$ty> for RunError {
            fn from(e: $ty) -> Self {
                RunError::$variant(e)
            }
        }
    };
}

from_err!(Analysis, AnalysisError);
from_err!(Params, ParamsError);
from_err!(Power, PowerError);
from_err!(Codec, CodecError);
from_err!(Decoder, DecoderError);
from_err!(Rs, RsError);
from_err!(Concat, ConcatError);

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Analysis(e) => write!(f, "analysis: {e}"),
            RunError::Params(e) => write!(f, "code parameters: {e}"),
            RunError::Power(e) => write!(f, "power allocation: {e}"),
            RunError::Codec(e) => write!(f, "codec: {e}"),
            RunError::Decoder(e) => write!(f, "decoder: {e}"),
            RunError::Rs(e) => write!(f, "outer code: {e}"),
            RunError::Concat(e) => write!(f, "concatenation: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl RunError {
    /// Machine-readable error object for stderr. The memory guardrail gets
    /// structured fields so callers can read off the suggested section
    /// size.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            RunError::Codec(CodecError::DictionaryTooLarge {
                requested_bytes,
                limit_bytes,
                largest_feasible_b,
            }) => serde_json::json!({
                "error": "runtime",
                "kind": "memory_guardrail",
                "requested_bytes": u64::try_from(*requested_bytes).unwrap_or(u64::MAX),
                "memory_budget_bytes": u64::try_from(*limit_bytes).unwrap_or(u64::MAX),
                "largest_feasible_b": largest_feasible_b,
                "message": self.to_string(),
            }),
            _ => serde_json::json!({ "error": "runtime", "message": self.to_string() }),
        }
    }
}

/// Runs the experiment the resolved config describes.
pub fn run(res: &Resolved) -> Result<SimReport, RunError> {
    match res.mode {
        Mode::Analyze => run_analyze(res),
        Mode::Montecarlo => run_montecarlo(res),
        Mode::Sweep => run_sweep(res),
        Mode::Concat => run_concat(res),
    }
}

fn targets(cfg: &ExperimentConfig) -> OptimizeTargets {
    OptimizeTargets {
        mistake_fraction: cfg.targets.mistake_fraction,
        prob_bound: cfg.targets.prob_bound,
        eval_budget: cfg.targets.eval_budget,
    }
}

/// Assembles the analysis knobs from the config; unset optional knobs keep
/// the library defaults.
fn analysis_params(res: &Resolved, sections: Sections) -> Result<AnalysisParams, RunError> {
    let cfg = &res.cfg;
    let kind = cfg.allocation.kind.unwrap_or(AllocKindCfg::Constant);
    let mut ap = AnalysisParams::new(
        cfg.code.b.expect("validated"),
        sections,
        cfg.code.snr.expect("validated"),
        cfg.analysis.a.expect("validated"),
        kind.into(),
        res.gamma_nats,
        cfg.allocation.c.unwrap_or(0.0),
        cfg.analysis.r.unwrap_or(DEFAULT_R),
    )?;
    if let Some(h) = cfg.analysis.h {
        ap.h = h;
    }
    ap.eta = cfg.analysis.eta;
    ap.f = cfg.analysis.f;
    ap.tactic = match cfg.analysis.tactic.unwrap_or(TacticCfg::ConstantExponent) {
        TacticCfg::ConstantEta => ScheduleTactic::ConstantEta,
        TacticCfg::ConstantExponent => ScheduleTactic::ConstantExponent,
    };
    if let Some(t) = cfg.analysis.bound_sum_target {
        ap.bound_sum_target = t;
    }
    ap.validate()?;
    Ok(ap)
}

/// Builds the decoder configuration, drawing defaults from the analysis
/// schedule when one exists: its step count, its combine weights, and its
/// working false-alarm rate for the empirical rule.
fn decoder_config(
    cfg: &ExperimentConfig,
    params: &CodeParams,
    schedule: Option<&Schedule>,
) -> DecoderConfig {
    let dec = &cfg.decoder;
    let max_steps = dec.max_steps.or_else(|| schedule.map(|s| s.m)).unwrap_or(1);
    let lambda = match (dec.lambda, schedule) {
        (Some(LambdaCfg::Empirical), _) | (_, None) => LambdaRule::Empirical,
        (_, Some(s)) => LambdaRule::Schedule(s.lambda.clone()),
    };
    let mut dconf = DecoderConfig::new(params.tau, max_steps, lambda);
    if let Some(rule) = dec.finalize {
        dconf.finalize = match rule {
            FinalizeCfg::Argmax => FinalizeRule::Argmax,
            FinalizeCfg::Erase => FinalizeRule::Erase,
        };
    }
    dconf.nominal_false_alarm =
        dec.nominal_false_alarm.or_else(|| schedule.map(|s| s.f)).unwrap_or(0.0);
    dconf
}

fn allocation(res: &Resolved, params: &CodeParams) -> Result<PowerAllocation, RunError> {
    let kind = res.cfg.allocation.kind.unwrap_or(AllocKindCfg::Constant);
    let gamma = res.gamma_nats.unwrap_or(params.capacity_nats);
    Ok(match kind {
        AllocKindCfg::Constant => alloc_constant(params),
        AllocKindCfg::Exponential => alloc_exponential(params, gamma)?,
        AllocKindCfg::Leveled => {
            alloc_leveled(params, gamma, res.cfg.allocation.c.unwrap_or(0.0))?
        }
    })
}

fn stop_name(stop: &StopReason) -> String {
    match stop {
        StopReason::Completed => "completed".into(),
        StopReason::NoAcceptances { step } => format!("no_acceptances_at_step_{step}"),
        StopReason::DegenerateDirection { step } => format!("degenerate_direction_at_step_{step}"),
        StopReason::AllSectionsDecoded { step } => format!("all_sections_decoded_at_step_{step}"),
    }
}

/// Failure classes that are legitimate analysis outcomes — the operating
/// point cannot accumulate — as opposed to invalid inputs. These become a
/// diagnostic section of the report instead of an error exit.
fn failure_kind(e: &AnalysisError) -> Option<&'static str> {
    match e {
        AnalysisError::AccumulationStall { .. } => Some("accumulation_stall"),
        AnalysisError::StepCapExceeded { .. } => Some("step_cap_exceeded"),
        AnalysisError::InfeasibleStepBound { .. } => Some("infeasible_step_bound"),
        AnalysisError::KlOrientation { .. } => Some("divergence_orientation"),
        AnalysisError::FalseAlarmTooSmall { .. } => Some("false_alarm_too_small"),
        AnalysisError::ConstantSideCondition { .. } => Some("threshold_side_condition"),
        AnalysisError::StateOutOfRange { .. } => Some("state_out_of_range"),
        _ => None,
    }
}

/// Everything a decoding trial needs, built once per experiment.
struct InnerSetup {
    params: CodeParams,
    alloc: PowerAllocation,
    dict: DesignMatrix,
    dconf: DecoderConfig,
    profile: Option<AnalysisProfile>,
    sigma2: f64,
    trials: usize,
}

/// Resolves the rate (explicit or from the analysis), then builds the
/// code, allocation, dictionary (behind the memory guardrail), and decoder
/// configuration shared by all trials.
fn inner_setup(res: &Resolved) -> Result<InnerSetup, RunError> {
    let cfg = &res.cfg;
    let l = cfg.code.l.expect("validated");
    let b = cfg.code.b.expect("validated");
    let snr = cfg.code.snr.expect("validated");
    let a = cfg.analysis.a.expect("validated");
    let (rate, profile) = match res.rate {
        RateSpec::Explicit(rate) => (rate, None),
        RateSpec::FromAnalysis => {
            let ap = analysis_params(res, Sections::Finite(l))?;
            let profile = evaluate_profile(&ap, &targets(cfg))?;
            (profile.rate_nats, Some(profile))
        }
    };
    let h = cfg.analysis.h.unwrap_or_else(|| CodeParams::default_shift(b));
    let params = CodeParams::new(l, b, snr, rate, a, h)?;
    let alloc = allocation(res, &params)?;
    let dict = gen_dictionary(
        &params,
        dictionary_seed(cfg.seeds.dictionary),
        Some(u128::from(cfg.limits.memory_budget_bytes)),
    )?;
    let dconf = decoder_config(cfg, &params, profile.as_ref().map(|p| &p.schedule));
    Ok(InnerSetup {
        params,
        alloc,
        dict,
        dconf,
        profile,
        sigma2: cfg.montecarlo.sigma2.unwrap_or(1.0),
        trials: cfg.montecarlo.trials.unwrap_or(DEFAULT_TRIALS),
    })
}

/// One decode against known sent indices, recorded as a trial row.
fn decode_trial(
    setup: &InnerSetup,
    sent: &SectionIndices,
    nseed: u64,
    mseed: u64,
    trial: usize,
) -> Result<(TrialRecord, DecoderTrace), RunError> {
    let codeword = make_codeword(&setup.params, &setup.alloc, &setup.dict, sent)?;
    let channel = transmit(codeword.as_slice(), setup.sigma2, nseed);
    let trace = run_decoder(&setup.dict, &channel.y, &setup.params, &setup.alloc, &setup.dconf)?;
    let decoded = finalize(&trace, setup.dconf.finalize);
    let stats = mistake_stats(&decoded, sent, &setup.alloc);
    let steps = annotate_trace(&trace, sent, &setup.alloc)?;
    let record = TrialRecord {
        trial,
        noise_seed: nseed,
        message_seed: mseed,
        steps_used: trace.steps.len(),
        stop: stop_name(&trace.stop),
        section_mistake_fraction: stats.section_mistake_fraction,
        q_hat: stats.q_hat,
        f_hat: stats.f_hat,
        weighted_mistakes: stats.weighted_mistakes,
        erased_sections: decoded.indices.iter().filter(|&&i| i == 0).count(),
        block_error: stats.section_mistake_fraction > 0.0,
        q_hat_steps: steps.iter().map(|s| s.q_hat_cum).collect(),
        f_hat_steps: steps.iter().map(|s| s.f_hat_cum).collect(),
    };
    Ok((record, trace))
}

fn run_montecarlo(res: &Resolved) -> Result<SimReport, RunError> {
    let setup = inner_setup(res)?;
    let cfg = &res.cfg;
    let records: Result<Vec<TrialRecord>, RunError> = (0..setup.trials)
        .into_par_iter()
        .map(|trial| {
            let nseed = noise_seed(cfg.seeds.noise, trial as u64);
            let mseed = message_seed(cfg.seeds.message, trial as u64);
            let sent = random_indices(&setup.params, mseed);
            decode_trial(&setup, &sent, nseed, mseed, trial).map(|(record, _)| record)
        })
        .collect();
    let mut records = records?;
    records.sort_by_key(|t| t.trial);

    let budget = setup.profile.as_ref().map(|p| p.schedule.mistake_budget);
    let mut report = SimReport::new(res.mode, cfg);
    report.code = Some(CodeSummary::new(&setup.params));
    report.analysis = setup.profile;
    report.aggregates = Some(aggregate(&records, budget));
    report.trials = Some(records);
    Ok(report)
}

fn run_analyze(res: &Resolved) -> Result<SimReport, RunError> {
    let cfg = &res.cfg;
    let sections = cfg.code.l.map(Sections::Finite).unwrap_or(Sections::Continuum);
    let ap = analysis_params(res, sections)?;
    let mut report = SimReport::new(res.mode, cfg);
    match evaluate_profile(&ap, &targets(cfg)) {
        Ok(profile) => report.analysis = Some(profile),
        Err(e) => match failure_kind(&e) {
            Some(kind) => {
                report.analysis_failure =
                    Some(AnalysisFailure { kind: kind.into(), message: e.to_string() })
            }
            None => return Err(e.into()),
        },
    }
    Ok(report)
}

/// Mirrors the sweep-row assembly used by the warm-started sweep so
/// per-size rows are identical however they were produced.
fn sweep_point(b: usize, prof: &AnalysisProfile) -> SweepPoint {
    let lnb = (b as f64).ln();
    let p = &prof.params;
    SweepPoint {
        b,
        capacity_nats: prof.capacity_nats,
        rate_nats: prof.rate_nats,
        gap_scaling: (prof.capacity_nats - prof.rate_nats) * lnb / lnb.ln(),
        feasibility: prof.feasibility,
        m: prof.schedule.m,
        mistake_budget: prof.schedule.mistake_budget,
        bound_clipped: prof.bound.clipped_total,
        alloc_kind: p.alloc_kind,
        gamma_nats: p.gamma,
        a: p.a,
        c: matches!(p.alloc_kind, AllocationKind::Leveled).then_some(p.c),
        r: p.r,
        eta: p.eta,
        f: prof.schedule.f,
        evaluations: prof.evaluations,
    }
}

/// Independent per-size searches; a failed size keeps its row (with the
/// error text) and the sweep continues.
fn per_size_rows(
    bs: &[usize],
    capacity: f64,
    search: impl Fn(usize) -> Result<AnalysisProfile, AnalysisError>,
) -> Vec<SweepRow> {
    bs.iter()
        .map(|&b| match search(b) {
            Ok(prof) => SweepRow {
                b,
                capacity_nats: prof.capacity_nats,
                point: Some(sweep_point(b, &prof)),
                error: None,
            },
            Err(e) => {
                SweepRow { b, capacity_nats: capacity, point: None, error: Some(e.to_string()) }
            }
        })
        .collect()
}

fn run_sweep(res: &Resolved) -> Result<SimReport, RunError> {
    let cfg = &res.cfg;
    let snr = cfg.code.snr.expect("validated");
    let bs = cfg.sweep.b_list.as_deref().expect("validated");
    let t = targets(cfg);
    let capacity = 0.5 * (1.0 + snr).ln();
    let rows = match cfg.sweep.sections.unwrap_or(SweepSectionsCfg::Continuum) {
        SweepSectionsCfg::Continuum => match rate_sweep(bs, snr, &t) {
            // Warm-started fast path. If any size fails it, rerun the sizes
            // independently so each failure lands in its own row.
            Ok(points) => points
                .into_iter()
                .map(|p| SweepRow {
                    b: p.b,
                    capacity_nats: p.capacity_nats,
                    point: Some(p),
                    error: None,
                })
                .collect(),
            Err(_) => per_size_rows(bs, capacity, |b| {
                optimize_params(b, Sections::Continuum, snr, &t)
            }),
        },
        SweepSectionsCfg::LEqualsB => {
            per_size_rows(bs, capacity, |b| optimize_params(b, Sections::Finite(b), snr, &t))
        }
    };
    let mut report = SimReport::new(res.mode, cfg);
    report.sweep = Some(rows);
    Ok(report)
}

fn run_concat(res: &Resolved) -> Result<SimReport, RunError> {
    let cfg = &res.cfg;
    let b = cfg.code.b.expect("validated");
    let extended = cfg.concat.extended.unwrap_or(false);
    let rsp = match (cfg.concat.delta, cfg.concat.k_rs) {
        (Some(delta), None) => RsParams::from_mistake_fraction(b, delta, extended)?,
        (None, Some(k_rs)) => {
            let n_rs = if extended { b } else { b - 1 };
            RsParams::new(b, n_rs, k_rs)?
        }
        _ => unreachable!("validated: exactly one of delta and k_rs"),
    };
    let setup = inner_setup(res)?;
    let payload_bits = concat_payload_bits(&rsp, &setup.params);

    let records: Result<Vec<TrialRecord>, RunError> = (0..setup.trials)
        .into_par_iter()
        .map(|trial| {
            let nseed = noise_seed(cfg.seeds.noise, trial as u64);
            let mseed = message_seed(cfg.seeds.message, trial as u64);
            let bits = seeded_bits(mseed, payload_bits);
            let sent = outer_indices(&bits, &rsp, &setup.params)?;
            let (mut record, trace) = decode_trial(&setup, &sent, nseed, mseed, trial)?;
            let inner = finalize(&trace, setup.dconf.finalize);
            let outer = outer_correct(&inner, &rsp, &setup.params)?;
            // An outer "success" returning different bits would be an
            // undetected block error; fold it in.
            record.block_error = outer.block_error || outer.bits != bits;
            Ok(record)
        })
        .collect();
    let mut records = records?;
    records.sort_by_key(|t| t.trial);

    let budget = setup.profile.as_ref().map(|p| p.schedule.mistake_budget);
    let mut report = SimReport::new(res.mode, cfg);
    report.code = Some(CodeSummary::new(&setup.params));
    report.concat = Some(ConcatSummary {
        field_size: rsp.field_size,
        n_rs: rsp.n_rs,
        k_rs: rsp.k_rs,
        t: rsp.t,
        delta: rsp.delta,
        extended: rsp.extended(),
        prim_poly: format!("{:#x}", rsp.field().prim_poly),
        payload_bits,
        overall_rate_nats: overall_rate_nats(&rsp, &setup.params),
    });
    report.analysis = setup.profile;
    report.aggregates = Some(aggregate(&records, budget));
    report.trials = Some(records);
    Ok(report)
}
