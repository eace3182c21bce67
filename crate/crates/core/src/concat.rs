//! Concatenated pipeline: a Reed-Solomon outer code wrapped around the
//! sparse-superposition inner code.
//!
//! Each inner section carries one outer symbol (section index `s + 1`
//! encodes symbol `s`), so the section count must equal the outer code
//! length and the section size must equal the outer field size. Sections
//! the inner decoder leaves undecided become outer erasures; decided but
//! wrong sections become outer symbol errors. Whenever the inner mistake
//! fraction stays below the outer design fraction, the outer decode
//! restores the payload exactly; an outer decoding failure is surfaced as
//! a block error, never as silently wrong bits.

use crate::codec::{make_codeword, CodecError, Codeword, SectionIndices};
use crate::decoder::{
    finalize, run_decoder, DecodedSections, DecoderConfig, DecoderError, StopReason,
};
use crate::params::CodeParams;
use crate::power::PowerAllocation;
use crate::rs::{rs_decode, rs_encode, RsError, RsParams};
use crate::DesignMatrix;
use thiserror::Error;

/// Errors from wiring the inner and outer codes together.
#[derive(Debug, Error)]
pub enum ConcatError {
    #[error("inner code has {l} sections but the outer code length is {n_rs}")]
    SectionCount { l: usize, n_rs: usize },
    #[error("inner section size {b} must equal the outer field size {field_size}")]
    AlphabetMismatch { b: usize, field_size: usize },
    #[error("expected {expected} payload bits, got {got}")]
    BitLength { expected: usize, got: usize },
    #[error("bit value {value} at position {position} is not 0 or 1")]
    BadBit { value: u8, position: usize },
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Decoder(#[from] DecoderError),
    #[error(transparent)]
    Rs(#[from] RsError),
}

/// Result of one concatenated decode.
#[derive(Debug, Clone)]
pub struct ConcatDecodeOutcome {
    /// Recovered payload bits; empty when `block_error` is set.
    pub bits: Vec<u8>,
    /// The outer decode failed (too many inner mistakes); no payload claim
    /// is made.
    pub block_error: bool,
    /// Number of sections the inner decoder left undecided.
    pub erased_sections: usize,
    /// Outer symbols read off the inner sections (erased sections as 0),
    /// before outer correction.
    pub inner_symbols: Vec<u16>,
    /// The inner decoder's per-section decisions.
    pub inner: DecodedSections,
    /// Number of inner decoding steps actually executed.
    pub steps_used: usize,
    /// Why the inner decoder stopped.
    pub stop: StopReason,
}

/// Payload size in bits of the concatenated code: `k_rs log2(B)`.
pub fn concat_payload_bits(rsp: &RsParams, params: &CodeParams) -> usize {
    rsp.k_rs * params.log2_b as usize
}

/// Overall rate: the inner rate scaled by the outer rate `k_rs / n_rs`
/// (equal to `1 - 2 delta` up to the integer rounding of `k_rs`).
pub fn overall_rate_nats(rsp: &RsParams, params: &CodeParams) -> f64 {
    params.realized_rate_nats() * rsp.k_rs as f64 / rsp.n_rs as f64
}

fn check_shapes(rsp: &RsParams, params: &CodeParams) -> Result<(), ConcatError> {
    if params.l != rsp.n_rs {
        return Err(ConcatError::SectionCount { l: params.l, n_rs: rsp.n_rs });
    }
    if params.b != rsp.field_size {
        return Err(ConcatError::AlphabetMismatch { b: params.b, field_size: rsp.field_size });
    }
    Ok(())
}

/// Groups payload bits into field symbols, most significant bit first,
/// mirroring the plain codec's section mapping.
pub(crate) fn bits_to_symbols(bits: &[u8], bits_per: usize) -> Result<Vec<u16>, ConcatError> {
    let mut out = Vec::with_capacity(bits.len() / bits_per);
    for (g, group) in bits.chunks(bits_per).enumerate() {
        let mut value = 0u16;
        for (i, &bit) in group.iter().enumerate() {
            if bit > 1 {
                return Err(ConcatError::BadBit { value: bit, position: g * bits_per + i });
            }
            value = (value << 1) | u16::from(bit);
        }
        out.push(value);
    }
    Ok(out)
}

pub(crate) fn symbols_to_bits(symbols: &[u16], bits_per: usize) -> Vec<u8> {
    let mut bits = Vec::with_capacity(symbols.len() * bits_per);
    for &s in symbols {
        for i in (0..bits_per).rev() {
            bits.push(((s >> i) & 1) as u8);
        }
    }
    bits
}

/// Splits inner section decisions into outer symbols plus erasure
/// positions (undecided sections read as symbol 0 and are erased).
pub(crate) fn sections_to_symbols(indices: &[usize]) -> (Vec<u16>, Vec<usize>) {
    let mut symbols = Vec::with_capacity(indices.len());
    let mut erasures = Vec::new();
    for (section, &index) in indices.iter().enumerate() {
        if index == 0 {
            erasures.push(section);
            symbols.push(0);
        } else {
            symbols.push((index - 1) as u16);
        }
    }
    (symbols, erasures)
}

/// Outer-encodes the payload into the section indices the inner code will
/// carry: one field symbol per section, symbol `s` stored as index `s + 1`.
pub fn outer_indices(
    bits: &[u8],
    rsp: &RsParams,
    params: &CodeParams,
) -> Result<SectionIndices, ConcatError> {
    check_shapes(rsp, params)?;
    let expected = concat_payload_bits(rsp, params);
    if bits.len() != expected {
        return Err(ConcatError::BitLength { expected, got: bits.len() });
    }
    let message = bits_to_symbols(bits, params.log2_b as usize)?;
    let code = rs_encode(&message, rsp)?;
    Ok(SectionIndices(code.iter().map(|&s| s as usize + 1).collect()))
}

/// Outer-encodes the payload and modulates the resulting symbols through
/// the inner code.
pub fn concat_encode(
    bits: &[u8],
    rsp: &RsParams,
    params: &CodeParams,
    alloc: &PowerAllocation,
    dict: &DesignMatrix,
) -> Result<Codeword, ConcatError> {
    let indices = outer_indices(bits, rsp, params)?;
    Ok(make_codeword(params, alloc, dict, &indices)?)
}

/// Outer correction applied to finalized inner decisions.
#[derive(Debug, Clone)]
pub struct OuterOutcome {
    /// Recovered payload bits; empty when `block_error` is set.
    pub bits: Vec<u8>,
    /// The outer decode failed (too many inner mistakes); no payload claim
    /// is made.
    pub block_error: bool,
    /// Number of sections the inner decoder left undecided.
    pub erased_sections: usize,
    /// Outer symbols read off the inner sections (erased sections as 0),
    /// before outer correction.
    pub inner_symbols: Vec<u16>,
}

/// Converts finalized inner decisions to outer symbols and erasures and
/// applies the outer correction. An outer failure is a block error, not an
/// `Err`: the pipeline result is "this block is lost", reported as data.
pub fn outer_correct(
    inner: &DecodedSections,
    rsp: &RsParams,
    params: &CodeParams,
) -> Result<OuterOutcome, ConcatError> {
    check_shapes(rsp, params)?;
    let (symbols, erasures) = sections_to_symbols(&inner.indices);
    let (bits, block_error) = match rs_decode(&symbols, &erasures, rsp) {
        Ok(message) => (symbols_to_bits(&message, params.log2_b as usize), false),
        Err(RsError::Uncorrectable) | Err(RsError::TooManyErasures { .. }) => (Vec::new(), true),
        Err(other) => return Err(ConcatError::Rs(other)),
    };
    Ok(OuterOutcome { bits, block_error, erased_sections: erasures.len(), inner_symbols: symbols })
}

/// Runs the inner decoder, converts its decisions to outer symbols and
/// erasures, and applies the outer correction.
pub fn concat_decode(
    y: &[f64],
    rsp: &RsParams,
    params: &CodeParams,
    alloc: &PowerAllocation,
    dict: &DesignMatrix,
    config: &DecoderConfig,
) -> Result<ConcatDecodeOutcome, ConcatError> {
    check_shapes(rsp, params)?;
    let trace = run_decoder(dict, y, params, alloc, config)?;
    let inner = finalize(&trace, config.finalize);
    let outer = outer_correct(&inner, rsp, params)?;
    Ok(ConcatDecodeOutcome {
        bits: outer.bits,
        block_error: outer.block_error,
        erased_sections: outer.erased_sections,
        inner_symbols: outer.inner_symbols,
        inner,
        steps_used: trace.steps.len(),
        stop: trace.stop,
    })
}
