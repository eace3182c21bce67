//! Code construction: design matrix, message indices, bit mapping, codeword.
//!
//! The design matrix has `n` rows and `B * L` columns of i.i.d. standard
//! normals. Column `c` is generated from its own ChaCha8 stream seeded by
//! `hash64([seed, c])`, with uniforms mapped through the inverse normal CDF —
//! one `u64` per entry, so any column can be regenerated independently and
//! the matrix is identical across platforms and thread counts.
//!
//! A message is one column index per section, 1-based within the section
//! (`1..=B`). `K = L * log2(B)` bits map to indices MSB-first per section.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

use crate::numeric::{expand_seed, hash64, inv_norm_cdf};
use crate::params::CodeParams;
use crate::power::PowerAllocation;

/// Identifies the sampling pipeline (stream cipher, seed mixer, and normal
/// transform) so reports can pin reproducibility to an algorithm version.
pub const GENERATOR_ID: &str = "chacha8-splitmix64-as241/v1";

/// Errors from code construction and bit mapping.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error(
        "design matrix needs {requested_bytes} bytes, over the {limit_bytes}-byte limit{}",
        match largest_feasible_b {
            Some(b) => format!("; largest section size that fits is B = {b}"),
            None => String::from("; no power-of-two section size fits"),
        }
    )]
    DictionaryTooLarge {
        requested_bytes: u128,
        limit_bytes: u128,
        largest_feasible_b: Option<usize>,
    },
    #[error("payload must be {expected} bits, got {got}")]
    BitLengthMismatch { expected: usize, got: usize },
    #[error("payload bit {position} is {value}, expected 0 or 1")]
    BitNotBinary { position: usize, value: u8 },
    #[error("section {section}: index {index} outside 1..={b}")]
    IndexOutOfRange { section: usize, index: usize, b: usize },
    #[error("expected {expected} sections, got {got}")]
    SectionCountMismatch { expected: usize, got: usize },
    #[error("dimension mismatch: {what}")]
    DimensionMismatch { what: String },
}

/// Column-major `n x (B*L)` matrix of i.i.d. standard normals.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub n: usize,
    pub b: usize,
    pub l: usize,
    /// Seed the per-column streams were derived from.
    pub seed: u64,
    /// Column-major entries: column `c` occupies `data[c*n .. (c+1)*n]`.
    data: Vec<f64>,
}

impl DesignMatrix {
    /// Column `c` (global index, `0..B*L`).
    pub fn column(&self, c: usize) -> &[f64] {
        &self.data[c * self.n..(c + 1) * self.n]
    }

    /// Column for section `section` (0-based) and within-section index
    /// `index` (1-based).
    pub fn section_column(&self, section: usize, index: usize) -> &[f64] {
        self.column(section * self.b + (index - 1))
    }

    /// All entries, column-major.
    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    pub fn total_columns(&self) -> usize {
        self.b * self.l
    }
}

/// One selected column per section, 1-based within the section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionIndices(pub Vec<usize>);

impl SectionIndices {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn validate(&self, params: &CodeParams) -> Result<(), CodecError> {
        if self.0.len() != params.l {
            return Err(CodecError::SectionCountMismatch { expected: params.l, got: self.0.len() });
        }
        for (section, &index) in self.0.iter().enumerate() {
            if index < 1 || index > params.b {
                return Err(CodecError::IndexOutOfRange { section, index, b: params.b });
            }
        }
        Ok(())
    }
}

/// A length-`n` channel input.
#[derive(Debug, Clone, PartialEq)]
pub struct Codeword(pub Vec<f64>);

impl Codeword {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Turns one u64 into a standard normal: open-(0,1) uniform with exactly 53
/// mantissa bits centered in its cell, then the inverse normal CDF.
#[inline]
fn u64_to_normal(x: u64) -> f64 {
    let u = (x >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0) + 1.0 / 18_014_398_509_481_984.0;
    inv_norm_cdf(u)
}

/// Generates the design matrix. `memory_limit_bytes` (default 2 GiB) guards
/// against accidental huge allocations; the error names the largest section
/// size that would fit at this `L` and rate.
pub fn gen_dictionary(
    params: &CodeParams,
    seed: u64,
    memory_limit_bytes: Option<u128>,
) -> Result<DesignMatrix, CodecError> {
    let limit = memory_limit_bytes.unwrap_or(2 << 30);
    let requested = params.dictionary_bytes();
    if requested > limit {
        return Err(CodecError::DictionaryTooLarge {
            requested_bytes: requested,
            limit_bytes: limit,
            largest_feasible_b: largest_feasible_b(params, limit),
        });
    }
    let n = params.n;
    let cols = params.total_columns();
    let mut data = vec![0.0f64; n * cols];
    for (c, chunk) in data.chunks_mut(n).enumerate() {
        let mut rng = ChaCha8Rng::from_seed(expand_seed(hash64(&[seed, c as u64])));
        for v in chunk.iter_mut() {
            *v = u64_to_normal(rng.next_u64());
        }
    }
    Ok(DesignMatrix { n, b: params.b, l: params.l, seed, data })
}

/// Largest power-of-two section size whose design matrix fits in `limit`
/// bytes at this `L` and rate (codelength re-derived per candidate).
fn largest_feasible_b(params: &CodeParams, limit: u128) -> Option<usize> {
    let mut best = None;
    for log2b in 1..=params.log2_b {
        let b = 1usize << log2b;
        let n = libm::ceil(params.l as f64 * libm::log(b as f64) / params.rate_nats) as u128;
        if n * (b as u128) * (params.l as u128) * 8 <= limit {
            best = Some(b);
        } else {
            break;
        }
    }
    best
}

/// Uniform random message: one index per section from a single ChaCha8
/// stream, one u64 per section masked to `log2(B)` bits.
pub fn random_indices(params: &CodeParams, seed: u64) -> SectionIndices {
    let mut rng = ChaCha8Rng::from_seed(expand_seed(seed));
    let mask = (params.b - 1) as u64;
    SectionIndices((0..params.l).map(|_| 1 + (rng.next_u64() & mask) as usize).collect())
}

/// Maps `K = L * log2(B)` payload bits to section indices, MSB-first within
/// each `log2(B)`-bit group.
pub fn encode_bits(params: &CodeParams, bits: &[u8]) -> Result<SectionIndices, CodecError> {
    let expected = params.payload_bits();
    if bits.len() != expected {
        return Err(CodecError::BitLengthMismatch { expected, got: bits.len() });
    }
    let per = params.log2_b as usize;
    let mut out = Vec::with_capacity(params.l);
    for (g, group) in bits.chunks(per).enumerate() {
        let mut value = 0usize;
        for (i, &bit) in group.iter().enumerate() {
            if bit > 1 {
                return Err(CodecError::BitNotBinary { position: g * per + i, value: bit });
            }
            value = (value << 1) | bit as usize;
        }
        out.push(value + 1);
    }
    Ok(SectionIndices(out))
}

/// Inverse of [`encode_bits`]: section indices back to payload bits.
pub fn decode_bits(params: &CodeParams, indices: &SectionIndices) -> Result<Vec<u8>, CodecError> {
    indices.validate(params)?;
    let per = params.log2_b as usize;
    let mut bits = Vec::with_capacity(params.payload_bits());
    for &index in &indices.0 {
        let value = index - 1;
        for i in (0..per).rev() {
            bits.push(((value >> i) & 1) as u8);
        }
    }
    Ok(bits)
}

/// Superposes the selected columns with per-section power weights:
/// `sum_ell sqrt(P * pi_ell) * X_{section ell, index j_ell}`.
pub fn make_codeword(
    params: &CodeParams,
    alloc: &PowerAllocation,
    dict: &DesignMatrix,
    indices: &SectionIndices,
) -> Result<Codeword, CodecError> {
    indices.validate(params)?;
    if dict.n != params.n || dict.b != params.b || dict.l != params.l {
        return Err(CodecError::DimensionMismatch {
            what: format!(
                "design matrix is {}x({}x{}), params want {}x({}x{})",
                dict.n, dict.b, dict.l, params.n, params.b, params.l
            ),
        });
    }
    if alloc.pi.len() != params.l {
        return Err(CodecError::DimensionMismatch {
            what: format!("allocation has {} sections, params want {}", alloc.pi.len(), params.l),
        });
    }
    let mut c = vec![0.0f64; params.n];
    for (section, &index) in indices.0.iter().enumerate() {
        let w = libm::sqrt(params.p * alloc.pi[section]);
        let col = dict.section_column(section, index);
        for (ci, xi) in c.iter_mut().zip(col.iter()) {
            *ci += w * xi;
        }
    }
    Ok(Codeword(c))
}
