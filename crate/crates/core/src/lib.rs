//! Sparse superposition codes over the AWGN channel.
//!
//! A message selects one column per section of a Gaussian design matrix; the
//! codeword is the power-weighted sum of the selected columns. This crate
//! provides the code construction, the adaptive successive-decoding chain,
//! the rate/reliability analysis used to pick schedules and parameters, and a
//! Reed-Solomon outer layer for concatenated transmission.
//!
//! Modules are layered bottom-up: [`numeric`] (special functions, quadrature,
//! seeding, optimization helpers), [`params`]/[`power`] (code dimensions and
//! per-section power shares), [`codec`]/[`channel`] (dictionary, encoding,
//! AWGN), [`decoder`] (adaptive successive threshold decoder), [`analysis`]
//! (progression functions, rate targets, schedules, error bounds, parameter
//! search), and [`gf`]/[`rs`]/[`concat`] (finite fields, Reed-Solomon, and
//! the concatenated pipeline).

pub mod analysis;
pub mod channel;
pub mod codec;
pub mod concat;
pub mod decoder;
pub mod gf;
pub mod numeric;
pub mod params;
pub mod power;
pub mod rs;

pub use analysis::{
    build_schedule, error_bound, evaluate_profile, gap_profile, optimize_params, rate_nats,
    rate_sweep, AnalysisError, AnalysisParams, AnalysisProfile, BoundReport, Feasibility,
    GapReport, OptimizeTargets, Schedule, ScheduleTactic, Sections, SweepPoint,
};
pub use channel::{empirical_snr, transmit, ChannelOutput};
pub use concat::{
    concat_decode, concat_encode, concat_payload_bits, outer_correct, outer_indices,
    overall_rate_nats, ConcatDecodeOutcome, ConcatError, OuterOutcome,
};
pub use codec::{
    decode_bits, encode_bits, gen_dictionary, make_codeword, random_indices, Codeword,
    DesignMatrix, SectionIndices, GENERATOR_ID,
};
pub use decoder::{
    annotate_trace, combine_statistic, finalize, mistake_stats, orthogonal_component, run_decoder,
    step_one, DecodedSections, DecoderConfig, DecoderError, DecoderTrace, FinalizeRule, LambdaRule,
    MistakeStats, SectionDecision, SectionRemoval, StatisticMode, StepErrorStats, StopReason,
};
pub use gf::{Field, GfError};
pub use params::CodeParams;
pub use power::{
    alloc_constant, alloc_exponential, alloc_leveled, bernoulli_divergence, AllocationKind,
    PowerAllocation,
};
pub use rs::{rs_decode, rs_encode, RsError, RsParams};
