//! Reed-Solomon codes over GF(2^m): systematic encoding and
//! bounded-distance errors-and-erasures decoding.
//!
//! Codewords are polynomials with roots at consecutive powers of the field
//! generator; decoding runs syndromes, the Euclidean key-equation solver, a
//! Chien root search, and Forney magnitudes, then rechecks every syndrome
//! of the corrected word before accepting it. With `e` symbol errors and
//! `s` declared erasures, correction succeeds whenever
//! `2e + s <= n_rs - k_rs`.
//!
//! The default code length is one less than the field size; the full-field
//! length is a single-symbol extension: the parent codeword is extended by
//! its next syndrome value, which lifts the minimum distance by one while
//! keeping the code maximum-distance-separable.

use crate::gf::{Field, GfError};
use thiserror::Error;

/// Errors from code construction, encoding, or decoding.
#[derive(Debug, Error, PartialEq)]
pub enum RsError {
    #[error(transparent)]
    Field(#[from] GfError),
    #[error("code length {n_rs} must equal the field size {field_size} or one less")]
    CodeLength { n_rs: usize, field_size: usize },
    #[error("message length {k_rs} must be in 1..={n_rs}")]
    MessageLength { k_rs: usize, n_rs: usize },
    #[error("design mistake fraction {delta} must lie in [0, 0.5)")]
    MistakeFraction { delta: f64 },
    #[error("expected {expected} symbols, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("symbol {value} at position {position} is outside the field of size {field_size}")]
    SymbolOutOfRange { value: u16, position: usize, field_size: usize },
    #[error("erasure position {position} is out of range or duplicated")]
    BadErasure { position: usize },
    #[error("{erasures} erasures exceed the correction budget {budget}")]
    TooManyErasures { erasures: usize, budget: usize },
    #[error("received word is beyond the bounded-distance correction radius")]
    Uncorrectable,
}

/// A Reed-Solomon code over GF(2^m) together with its field tables and
/// generator polynomial.
#[derive(Debug, Clone)]
pub struct RsParams {
    /// Field (and section-alphabet) size `B = 2^m`.
    pub field_size: usize,
    /// Code length: `B - 1`, or `B` for the extended code.
    pub n_rs: usize,
    /// Message length in symbols.
    pub k_rs: usize,
    /// Design mistake fraction; `k_rs = ceil((1 - 2 delta) n_rs)`.
    pub delta: f64,
    /// Error-correction radius `floor((n_rs - k_rs) / 2)`.
    pub t: usize,
    field: Field,
    /// Generator polynomial of the cyclic part, roots at consecutive
    /// generator powers starting from exponent 1.
    generator: Vec<u16>,
}

impl RsParams {
    /// Code with explicit length and dimension; `delta` is derived as
    /// `(n_rs - k_rs) / (2 n_rs)`.
    pub fn new(field_size: usize, n_rs: usize, k_rs: usize) -> Result<Self, RsError> {
        let field = Field::with_size(field_size)?;
        if n_rs != field_size && n_rs != field_size - 1 {
            return Err(RsError::CodeLength { n_rs, field_size });
        }
        if k_rs == 0 || k_rs > n_rs {
            return Err(RsError::MessageLength { k_rs, n_rs });
        }
        let delta = (n_rs - k_rs) as f64 / (2.0 * n_rs as f64);
        Self::assemble(field, n_rs, k_rs, delta)
    }

    /// Code sized from a design mistake fraction:
    /// `k_rs = ceil((1 - 2 delta) n_rs)`.
    pub fn from_mistake_fraction(
        field_size: usize,
        delta: f64,
        extended: bool,
    ) -> Result<Self, RsError> {
        if !(0.0..0.5).contains(&delta) {
            return Err(RsError::MistakeFraction { delta });
        }
        let field = Field::with_size(field_size)?;
        let n_rs = if extended { field_size } else { field_size - 1 };
        let k_rs = libm::ceil((1.0 - 2.0 * delta) * n_rs as f64) as usize;
        if k_rs == 0 {
            return Err(RsError::MessageLength { k_rs, n_rs });
        }
        Self::assemble(field, n_rs, k_rs, delta)
    }

    fn assemble(field: Field, n_rs: usize, k_rs: usize, delta: f64) -> Result<Self, RsError> {
        let t = (n_rs - k_rs) / 2;
        // Safeguard: the radius must cover the designed mistake fraction.
        let designed = libm::floor(delta * n_rs as f64) as i64;
        if (t as i64) < designed - 1 {
            return Err(RsError::MistakeFraction { delta });
        }
        let extended = n_rs == field.size && k_rs < n_rs;
        let parent_parity = n_rs - k_rs - usize::from(extended);
        let mut generator = vec![1u16];
        for j in 1..=parent_parity {
            generator = poly_mul(&field, &generator, &[field.alpha_pow(j as i64), 1]);
        }
        Ok(RsParams { field_size: field.size, n_rs, k_rs, delta, t, field, generator })
    }

    /// Whether the single-symbol extension is active.
    pub fn extended(&self) -> bool {
        self.n_rs == self.field_size && self.k_rs < self.n_rs
    }

    /// The field tables backing this code.
    pub fn field(&self) -> &Field {
        &self.field
    }

    /// Cyclic-part length: `n_rs`, minus one when extended.
    fn cyclic_len(&self) -> usize {
        self.n_rs - usize::from(self.extended())
    }

    /// Number of parity symbols inside the cyclic part.
    fn parent_parity(&self) -> usize {
        self.cyclic_len() - self.k_rs
    }

    fn check_symbols(&self, word: &[u16]) -> Result<(), RsError> {
        for (position, &value) in word.iter().enumerate() {
            if value as usize >= self.field_size {
                return Err(RsError::SymbolOutOfRange {
                    value,
                    position,
                    field_size: self.field_size,
                });
            }
        }
        Ok(())
    }
}

/// Systematic encoding: the message occupies the top `k_rs` coefficients,
/// parity fills the low positions, and the extension symbol (when active)
/// is appended last.
pub fn rs_encode(message: &[u16], rsp: &RsParams) -> Result<Vec<u16>, RsError> {
    if message.len() != rsp.k_rs {
        return Err(RsError::LengthMismatch { expected: rsp.k_rs, got: message.len() });
    }
    rsp.check_symbols(message)?;
    if rsp.k_rs == rsp.n_rs {
        return Ok(message.to_vec());
    }
    let f = &rsp.field;
    let pc = rsp.parent_parity();
    let mut code = vec![0u16; rsp.cyclic_len()];
    code[pc..].copy_from_slice(message);
    if pc > 0 {
        let (_, rem) = poly_divmod(f, &code, &rsp.generator);
        code[..rem.len()].copy_from_slice(&rem);
    }
    if rsp.extended() {
        let ext = syndrome(f, &code, (pc + 1) as i64);
        code.push(ext);
    }
    Ok(code)
}

/// Bounded-distance errors-and-erasures decoding back to the message
/// symbols. Erased positions may hold any value; they are treated as
/// unknown. Fails (never silently miscorrects past its radius) when no
/// codeword lies within `2e + s <= n_rs - k_rs` of the received word.
pub fn rs_decode(
    received: &[u16],
    erasures: &[usize],
    rsp: &RsParams,
) -> Result<Vec<u16>, RsError> {
    if received.len() != rsp.n_rs {
        return Err(RsError::LengthMismatch { expected: rsp.n_rs, got: received.len() });
    }
    rsp.check_symbols(received)?;
    let mut eras: Vec<usize> = erasures.to_vec();
    eras.sort_unstable();
    for (i, &p) in eras.iter().enumerate() {
        if p >= rsp.n_rs || (i > 0 && eras[i - 1] == p) {
            return Err(RsError::BadErasure { position: p });
        }
    }
    let budget = rsp.n_rs - rsp.k_rs;
    if eras.len() > budget {
        return Err(RsError::TooManyErasures { erasures: eras.len(), budget });
    }
    if rsp.k_rs == rsp.n_rs {
        return Ok(received.to_vec());
    }
    let corrected = if rsp.extended() {
        decode_extended(received, &eras, rsp)?
    } else {
        decode_plain(received, &eras, rsp)?
    };
    Ok(corrected[rsp.parent_parity()..rsp.cyclic_len()].to_vec())
}

fn decode_plain(received: &[u16], eras: &[usize], rsp: &RsParams) -> Result<Vec<u16>, RsError> {
    let f = &rsp.field;
    let ns = rsp.n_rs - rsp.k_rs;
    let mut work = received.to_vec();
    for &p in eras {
        work[p] = 0;
    }
    let syn: Vec<u16> = (1..=ns).map(|j| syndrome(f, &work, j as i64)).collect();
    correct_in_place(f, &mut work, eras, &syn)?;
    if !(1..=ns).all(|j| syndrome(f, &work, j as i64) == 0) {
        return Err(RsError::Uncorrectable);
    }
    Ok(work)
}

fn decode_extended(received: &[u16], eras: &[usize], rsp: &RsParams) -> Result<Vec<u16>, RsError> {
    let f = &rsp.field;
    let cyc = rsp.cyclic_len();
    let pc = rsp.parent_parity();
    let ext_exp = (pc + 1) as i64;
    let ext_pos = rsp.n_rs - 1;
    let ext_erased = eras.contains(&ext_pos);
    let cyc_eras: Vec<usize> = eras.iter().copied().filter(|&p| p != ext_pos).collect();

    let mut work = received[..cyc].to_vec();
    for &p in &cyc_eras {
        work[p] = 0;
    }
    let honest: Vec<u16> = (1..=pc).map(|j| syndrome(f, &work, j as i64)).collect();
    let parent_ok = |w: &[u16]| (1..=pc).all(|j| syndrome(f, w, j as i64) == 0);

    if ext_erased {
        // The extension symbol is unknown: decode the cyclic part, then
        // rebuild the extension from the corrected word.
        correct_in_place(f, &mut work, &cyc_eras, &honest)?;
        if !parent_ok(&work) {
            return Err(RsError::Uncorrectable);
        }
        let ext = syndrome(f, &work, ext_exp);
        work.push(ext);
        return Ok(work);
    }

    let ext_val = received[ext_pos];
    // First hypothesis: the extension symbol is clean, so its defining
    // equation supplies one extra honest syndrome.
    let mut syn_full = honest.clone();
    syn_full.push(f.add(syndrome(f, &work, ext_exp), ext_val));
    let mut first = work.clone();
    if correct_in_place(f, &mut first, &cyc_eras, &syn_full).is_ok()
        && parent_ok(&first)
        && syndrome(f, &first, ext_exp) == ext_val
    {
        first.push(ext_val);
        return Ok(first);
    }

    // Second hypothesis: the extension symbol itself is in error. The
    // cyclic syndromes stay honest; the rebuilt extension counts toward
    // the radius.
    let mut second = work;
    let changed = correct_in_place(f, &mut second, &cyc_eras, &honest)?;
    if !parent_ok(&second) {
        return Err(RsError::Uncorrectable);
    }
    let ext = syndrome(f, &second, ext_exp);
    let total = changed + usize::from(ext != ext_val);
    if total > rsp.t {
        return Err(RsError::Uncorrectable);
    }
    second.push(ext);
    Ok(second)
}

/// Core corrector: given the received vector (erasures zeroed) and its
/// syndrome sequence, finds locations and magnitudes and applies them.
/// Returns the number of repaired non-erasure positions. The caller still
/// rechecks the syndromes it trusts.
fn correct_in_place(
    f: &Field,
    word: &mut [u16],
    eras: &[usize],
    syn: &[u16],
) -> Result<usize, RsError> {
    let ns = syn.len();
    let s = eras.len();
    if s > ns {
        return Err(RsError::TooManyErasures { erasures: s, budget: ns });
    }
    if syn.iter().all(|&v| v == 0) {
        // Already a codeword with the erased positions read as zero.
        return Ok(0);
    }

    let mut gamma = vec![1u16];
    for &p in eras {
        gamma = poly_mul(f, &gamma, &[1, f.alpha_pow(p as i64)]);
    }
    let s_poly = trimmed(syn.to_vec());
    let t_poly = poly_mod_x(poly_mul(f, &gamma, &s_poly), ns);

    // Euclidean key-equation solver: run remainders of (x^ns, T) down to
    // degree < (ns + s) / 2; the accumulated multiplier of T is the error
    // locator.
    let lambda = if t_poly.is_empty() {
        vec![1u16]
    } else {
        let mut a = vec![0u16; ns + 1];
        a[ns] = 1;
        let mut b = t_poly;
        let mut ua: Vec<u16> = Vec::new();
        let mut ub: Vec<u16> = vec![1];
        while !b.is_empty() && 2 * (b.len() - 1) >= ns + s {
            let (q, rem) = poly_divmod(f, &a, &b);
            let next_u = poly_add(&ua, &poly_mul(f, &q, &ub));
            a = b;
            b = rem;
            ua = ub;
            ub = next_u;
        }
        if b.is_empty() {
            return Err(RsError::Uncorrectable);
        }
        ub
    };
    if lambda.is_empty() || lambda[0] == 0 {
        return Err(RsError::Uncorrectable);
    }
    let e = lambda.len() - 1;
    if 2 * e + s > ns {
        return Err(RsError::Uncorrectable);
    }

    let psi = poly_mul(f, &lambda, &gamma);
    let omega = poly_mod_x(poly_mul(f, &psi, &s_poly), ns);
    // Formal derivative in characteristic 2: odd-degree coefficients drop
    // one degree, even ones vanish.
    let mut psi_d = vec![0u16; psi.len().saturating_sub(1)];
    for (i, slot) in psi_d.iter_mut().enumerate() {
        if i % 2 == 0 {
            *slot = psi[i + 1];
        }
    }

    let mut roots = Vec::new();
    for p in 0..word.len() {
        let x = f.alpha_pow(-(p as i64));
        if poly_eval(f, &psi, x) == 0 {
            roots.push((p, x));
        }
    }
    if roots.len() != psi.len() - 1 {
        return Err(RsError::Uncorrectable);
    }

    let mut repaired = 0usize;
    for &(p, x) in &roots {
        let den = poly_eval(f, &psi_d, x);
        if den == 0 {
            return Err(RsError::Uncorrectable);
        }
        let magnitude = f.div(poly_eval(f, &omega, x), den);
        if magnitude != 0 {
            word[p] ^= magnitude;
            if eras.binary_search(&p).is_err() {
                repaired += 1;
            }
        }
    }
    Ok(repaired)
}

/// `sum_i word[i] alpha^(i j)`: the received polynomial evaluated at the
/// j-th generator power.
fn syndrome(f: &Field, word: &[u16], j: i64) -> u16 {
    poly_eval(f, word, f.alpha_pow(j))
}

fn trimmed(mut p: Vec<u16>) -> Vec<u16> {
    while p.last() == Some(&0) {
        p.pop();
    }
    p
}

fn poly_mod_x(mut p: Vec<u16>, n: usize) -> Vec<u16> {
    p.truncate(n);
    trimmed(p)
}

fn poly_add(a: &[u16], b: &[u16]) -> Vec<u16> {
    let mut out = vec![0u16; a.len().max(b.len())];
    out[..a.len()].copy_from_slice(a);
    for (slot, &v) in out.iter_mut().zip(b.iter()) {
        *slot ^= v;
    }
    trimmed(out)
}

fn poly_mul(f: &Field, a: &[u16], b: &[u16]) -> Vec<u16> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u16; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] ^= f.mul(ai, bj);
        }
    }
    trimmed(out)
}

/// Quotient and remainder of trimmed polynomials; the divisor is nonzero.
fn poly_divmod(f: &Field, num: &[u16], den: &[u16]) -> (Vec<u16>, Vec<u16>) {
    let den = trimmed(den.to_vec());
    let dd = den.len() - 1;
    let mut rem = trimmed(num.to_vec());
    if rem.len() <= dd {
        return (Vec::new(), rem);
    }
    let mut quo = vec![0u16; rem.len() - dd];
    let lead_inv = f.inv(den[dd]);
    for i in (dd..rem.len()).rev() {
        let c = rem[i];
        if c == 0 {
            continue;
        }
        let qc = f.mul(c, lead_inv);
        quo[i - dd] = qc;
        for (j, &dj) in den.iter().enumerate() {
            rem[i - dd + j] ^= f.mul(qc, dj);
        }
    }
    (trimmed(quo), trimmed(rem))
}

fn poly_eval(f: &Field, p: &[u16], x: u16) -> u16 {
    let mut acc = 0u16;
    for &c in p.iter().rev() {
        acc = f.mul(acc, x) ^ c;
    }
    acc
}
