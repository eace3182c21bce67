//! Shared numeric building blocks: normal distribution functions, the inverse
//! normal CDF, adaptive Gauss–Kronrod quadrature, seeded hashing, Bernoulli
//! Kullback–Leibler divergence, and small deterministic optimizers.
//!
//! Every transcendental on a reproducibility-sensitive path goes through the
//! pure-software `libm` implementations so results are bit-identical across
//! platforms.

use thiserror::Error;

/// `sqrt(2*pi)`.
pub const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Errors from the numeric building blocks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    /// Quadrature failed to reach the requested tolerance within its
    /// subdivision budget; the achieved error estimate is reported.
    #[error("quadrature did not converge: achieved error {achieved:.3e} > requested {requested:.3e}")]
    QuadratureNoConverge { achieved: f64, requested: f64 },
    /// Argument outside the function's domain.
    #[error("argument out of domain: {what}")]
    Domain { what: String },
}

// ---------------------------------------------------------------------------
// Normal distribution
// ---------------------------------------------------------------------------

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / SQRT_2PI
}

/// Standard normal CDF, absolute error below 1e-15 over the whole line.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal survival function `1 - norm_cdf(x)`, computed without
/// cancellation for large `x`.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Inverse standard normal CDF (Wichura's PPND16 rational approximations,
/// relative error ~1e-16). `p` must lie strictly inside (0, 1).
pub fn inv_norm_cdf(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0, "inv_norm_cdf needs p in (0,1), got {p}");
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        // Central region.
        const A: [f64; 8] = [
            3.387_132_872_796_366_608,
            1.331_416_678_917_843_774_5e2,
            1.971_590_950_306_551_442_7e3,
            1.373_169_376_550_946_112_5e4,
            4.592_195_393_154_987_145_7e4,
            6.726_577_092_700_870_085_3e4,
            3.343_057_558_358_812_810_5e4,
            2.509_080_928_730_122_672_7e3,
        ];
        const B: [f64; 8] = [
            1.0,
            4.231_333_070_160_091_125_2e1,
            6.871_870_074_920_579_083e2,
            5.394_196_021_424_751_107_7e3,
            2.121_379_430_158_659_586_7e4,
            3.930_789_580_009_271_061e4,
            2.872_908_573_572_194_267_4e4,
            5.226_495_278_852_854_561e3,
        ];
        let r = 0.180625 - q * q;
        return q * poly7(&A, r) / poly7(&B, r);
    }
    // Tail regions.
    let r = if q < 0.0 { p } else { 1.0 - p };
    let mut r = libm::sqrt(-libm::log(r));
    let x = if r <= 5.0 {
        const C: [f64; 8] = [
            1.423_437_110_749_683_577_3,
            4.630_337_846_156_545_295_9,
            5.769_497_221_460_691_405_5,
            3.647_848_324_763_204_605,
            1.270_458_252_452_368_382_6,
            2.417_807_251_774_506_117_7e-1,
            2.272_384_498_926_918_458_3e-2,
            7.745_450_142_783_414_076_4e-4,
        ];
        const D: [f64; 8] = [
            1.0,
            2.053_191_626_637_758_821_9,
            1.676_384_830_183_803_849_4,
            6.897_673_349_851_000_045_5e-1,
            1.481_039_764_274_800_745_9e-1,
            1.519_866_656_361_645_719_7e-2,
            5.475_938_084_995_344_946e-4,
            1.050_750_071_644_416_843_2e-9,
        ];
        r -= 1.6;
        poly7(&C, r) / poly7(&D, r)
    } else {
        const E: [f64; 8] = [
            6.657_904_643_501_103_777_2,
            5.463_784_911_164_114_369_9,
            1.784_826_539_917_291_335_8,
            2.965_605_718_285_048_912_3e-1,
            2.653_218_952_657_612_309_3e-2,
            1.242_660_947_388_078_438_6e-3,
            2.711_555_568_743_487_578_2e-5,
            2.010_334_399_292_288_132_6e-7,
        ];
        const F: [f64; 8] = [
            1.0,
            5.998_322_065_558_879_376_9e-1,
            1.369_298_809_227_358_053_1e-1,
            1.487_536_129_085_061_485_2e-2,
            7.868_691_311_456_132_591e-4,
            1.846_318_317_510_054_681_8e-5,
            1.421_511_758_316_445_888_7e-7,
            0.0,
        ];
        r -= 5.0;
        poly7(&E, r) / poly7(&F, r)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

#[inline]
fn poly7(c: &[f64; 8], x: f64) -> f64 {
    // Horner evaluation of c0 + c1 x + ... + c7 x^7.
    ((((((c[7] * x + c[6]) * x + c[5]) * x + c[4]) * x + c[3]) * x + c[2]) * x + c[1]) * x + c[0]
}

// ---------------------------------------------------------------------------
// Adaptive Gauss–Kronrod quadrature (7–15 pair)
// ---------------------------------------------------------------------------

/// Result of an adaptive quadrature run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Sum of per-interval |K15 - G7| discrepancies (error estimate).
    pub error_estimate: f64,
    /// Number of evaluated subintervals.
    pub intervals: usize,
}

// 15-point Kronrod nodes (positive half) and weights; 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_2,
    0.949_107_912_342_758_524_5,
    0.864_864_423_359_769_072_8,
    0.741_531_185_599_394_439_9,
    0.586_087_235_467_691_130_3,
    0.405_845_151_377_397_166_9,
    0.207_784_955_007_898_467_6,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_96,
    0.063_092_092_629_978_553_29,
    0.104_790_010_322_250_183_8,
    0.140_653_259_715_525_918_7,
    0.169_004_726_639_267_902_8,
    0.190_350_578_064_785_409_9,
    0.204_432_940_075_298_892_4,
    0.209_482_141_084_727_828,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_3,
    0.279_705_391_489_276_667_9,
    0.381_830_050_505_118_945,
    0.417_959_183_673_469_387_8,
];

fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut kron = 0.0;
    let mut gauss = 0.0;
    for i in 0..8 {
        let dx = half * XGK[i];
        let (flo, fhi) = (f(mid - dx), f(mid + dx));
        let pair = if i == 7 { f(mid) } else { flo + fhi };
        kron += WGK[i] * pair;
        // Gauss nodes are the odd Kronrod indices (1, 3, 5) plus the midpoint.
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        } else if i == 7 {
            gauss += WG[3] * pair;
        }
    }
    (kron * half, (kron - gauss).abs() * half)
}

/// Adaptive quadrature of `f` over `[a, b]` to absolute tolerance `abs_tol`.
///
/// Subdivides the worst interval first (largest error) until the summed error
/// estimate meets the tolerance. Fails with the achieved error if the interval
/// budget (4096) is exhausted.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<Quadrature, NumericError> {
    if a == b {
        return Ok(Quadrature { value: 0.0, error_estimate: 0.0, intervals: 0 });
    }
    // (error, lo, hi, value), kept as a simple vector: interval counts stay
    // small for the smooth integrands used here.
    let (val, err) = gauss_kronrod_15(&f, a, b);
    let mut segs = vec![(err, a, b, val)];
    const MAX_INTERVALS: usize = 4096;
    loop {
        let total_err: f64 = segs.iter().map(|s| s.0).sum();
        if total_err <= abs_tol {
            return Ok(Quadrature {
                value: segs.iter().map(|s| s.3).sum(),
                error_estimate: total_err,
                intervals: segs.len(),
            });
        }
        if segs.len() >= MAX_INTERVALS {
            return Err(NumericError::QuadratureNoConverge { achieved: total_err, requested: abs_tol });
        }
        // Split the interval with the largest error estimate.
        let worst = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .0.partial_cmp(&y.1 .0).expect("non-NaN errors"))
            .map(|(i, _)| i)
            .expect("nonempty");
        let (_, lo, hi, _) = segs.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gauss_kronrod_15(&f, lo, mid);
        let (v2, e2) = gauss_kronrod_15(&f, mid, hi);
        segs.push((e1, lo, mid, v1));
        segs.push((e2, mid, hi, v2));
    }
}

// ---------------------------------------------------------------------------
// Seeded hashing / seed expansion
// ---------------------------------------------------------------------------

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
/// Fixed initialization vector for [`hash64`] (first 64 fraction bits of pi).
const HASH_IV: u64 = 0x243F_6A88_85A3_08D3;

/// One step of the splitmix64 sequence; advances `state` and returns the output.
pub fn splitmix64_next(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    mix64(*state)
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines words into a single 64-bit seed with a fixed, documented rule
/// (splitmix64 finalizer chain). Used to derive independent generator streams,
/// e.g. `hash64(&[base_seed, stream_id, trial_index])`.
pub fn hash64(parts: &[u64]) -> u64 {
    let mut acc = HASH_IV;
    for &p in parts {
        acc = mix64(acc.wrapping_add(GOLDEN_GAMMA).wrapping_add(p));
    }
    acc
}

/// Expands a 64-bit seed into 32 bytes of generator key material via the
/// splitmix64 stream (little-endian words).
pub fn expand_seed(seed: u64) -> [u8; 32] {
    let mut state = seed;
    let mut out = [0u8; 32];
    for chunk in out.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64_next(&mut state).to_le_bytes());
    }
    out
}

// ---------------------------------------------------------------------------
// Bernoulli Kullback–Leibler divergence
// ---------------------------------------------------------------------------

/// `KL(q || p)` between Bernoulli(q) and Bernoulli(p), in nats.
/// Both arguments must lie in [0, 1] and `p` strictly inside (0, 1) unless it
/// equals `q`.
pub fn bernoulli_kl(q: f64, p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&q) && (0.0..=1.0).contains(&p));
    if q == p {
        return 0.0;
    }
    let mut kl = 0.0;
    if q > 0.0 {
        kl += q * libm::log(q / p);
    }
    if q < 1.0 {
        kl += (1.0 - q) * libm::log((1.0 - q) / (1.0 - p));
    }
    kl
}

/// Largest `q < q_star` with `KL(q || q_star) = d` (bisection to ~1e-15
/// relative). Returns 0 when even `q = 0` fails to reach divergence `d`.
pub fn bernoulli_kl_inverse_lower(q_star: f64, d: f64) -> f64 {
    debug_assert!(q_star > 0.0 && q_star < 1.0 && d >= 0.0);
    if d == 0.0 {
        return q_star;
    }
    if bernoulli_kl(0.0, q_star) <= d {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0_f64, q_star);
    // KL(q||q*) is strictly decreasing in q on [0, q*].
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bernoulli_kl(mid, q_star) > d {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

// ---------------------------------------------------------------------------
// Kolmogorov–Smirnov distance
// ---------------------------------------------------------------------------

/// Two-sided Kolmogorov–Smirnov statistic of `samples` against the CDF `cdf`.
/// `samples` need not be sorted (a sorted copy is made).
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    assert!(!samples.is_empty(), "ks_statistic needs at least one sample");
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("non-NaN samples"));
    let n = xs.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

// ---------------------------------------------------------------------------
// Deterministic scalar/simplex optimizers
// ---------------------------------------------------------------------------

/// Golden-section search maximizing a unimodal `f` on `[lo, hi]`.
/// Returns `(argmax, max)` after `iters` interval reductions.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, iters: usize) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Nelder–Mead simplex minimization. Deterministic: the starting simplex is
/// `x0` plus one `steps[i]` perturbation per coordinate. Returns the best
/// point and value after `max_evals` function evaluations (or earlier on
/// simplex collapse).
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    steps: &[f64],
    max_evals: usize,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    assert_eq!(n, steps.len());
    let mut evals = 0usize;
    let eval = |f: &mut F, x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(&mut f, x0, &mut evals);
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += steps[i];
        let v = eval(&mut f, &x, &mut evals);
        simplex.push((x, v));
    }
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("non-NaN objective"));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if (worst - best).abs() <= 1e-12 * (1.0 + best.abs()) {
            break;
        }
        // Centroid of all but the worst point.
        let mut centroid = vec![0.0; n];
        for (x, _) in simplex.iter().take(n) {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&simplex[n].0)
            .map(|(c, w)| c + alpha * (c - w))
            .collect();
        let fr = eval(&mut f, &reflect, &mut evals);
        if fr < simplex[0].1 {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&reflect)
                .map(|(c, r)| c + gamma * (r - c))
                .collect();
            let fe = eval(&mut f, &expand, &mut evals);
            simplex[n] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflect, fr);
        } else {
            let contract: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + rho * (w - c))
                .collect();
            let fc = eval(&mut f, &contract, &mut evals);
            if fc < simplex[n].1 {
                simplex[n] = (contract, fc);
            } else {
                // Shrink toward the best vertex.
                let best_x = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = best_x
                        .iter()
                        .zip(&entry.0)
                        .map(|(b, x)| b + sigma * (x - b))
                        .collect();
                    let v = eval(&mut f, &x, &mut evals);
                    *entry = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("non-NaN objective"));
    simplex.swap_remove(0).into()
}
