//! Arithmetic over binary extension fields GF(2^m).
//!
//! Elements are integers below `2^m`, read as polynomials over GF(2) modulo
//! a fixed primitive polynomial per degree. Multiplication runs on log /
//! antilog tables built once at construction; the polynomial choices are
//! pinned so tables (and therefore codewords) are reproducible across
//! implementations.

use thiserror::Error;

/// Errors from field construction or element validation.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum GfError {
    #[error("field degree m = {m} is outside the supported range 2..=16")]
    UnsupportedDegree { m: u32 },
    #[error("{value} is not a power of two in the supported field-size range")]
    NotAFieldSize { value: usize },
}

/// Fixed primitive polynomial per degree, bit `i` holding the coefficient
/// of `x^i` (the conventional choices, e.g. `x^8 + x^4 + x^3 + x^2 + 1`
/// for GF(256)).
const PRIMITIVE_POLYS: [u32; 15] = [
    0x7,     // m = 2
    0xB,     // m = 3
    0x13,    // m = 4
    0x25,    // m = 5
    0x43,    // m = 6
    0x89,    // m = 7
    0x11D,   // m = 8
    0x211,   // m = 9
    0x409,   // m = 10
    0x805,   // m = 11
    0x1053,  // m = 12
    0x201B,  // m = 13
    0x4443,  // m = 14
    0x8003,  // m = 15
    0x1100B, // m = 16
];

/// GF(2^m) with log/antilog tables over a fixed primitive element alpha.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    /// Extension degree `m`.
    pub m: u32,
    /// Field size `2^m`.
    pub size: usize,
    /// Primitive polynomial defining the field, bit `i` = coefficient of
    /// `x^i`.
    pub prim_poly: u32,
    /// `exp[i] = alpha^i` for `i` in `0..2(size-1)`, doubled so products of
    /// two logs index without a modular reduction.
    exp: Vec<u16>,
    /// `log[a]` with `alpha^(log[a]) = a`; entry 0 is unused.
    log: Vec<u16>,
}

impl Field {
    /// Builds GF(2^m) for `m` in `2..=16`.
    pub fn new(m: u32) -> Result<Self, GfError> {
        if !(2..=16).contains(&m) {
            return Err(GfError::UnsupportedDegree { m });
        }
        let prim_poly = PRIMITIVE_POLYS[(m - 2) as usize];
        let size = 1usize << m;
        let order = size - 1;
        let mut exp = vec![0u16; 2 * order];
        let mut log = vec![0u16; size];
        let mut x: u32 = 1;
        for i in 0..order {
            exp[i] = x as u16;
            exp[i + order] = x as u16;
            log[x as usize] = i as u16;
            x <<= 1;
            if x & (1 << m) != 0 {
                x ^= prim_poly;
            }
        }
        debug_assert_eq!(x, 1, "pinned polynomial must be primitive");
        Ok(Field { m, size, prim_poly, exp, log })
    }

    /// Builds the field of the given size (`size = 2^m`, `m` in `2..=16`).
    pub fn with_size(size: usize) -> Result<Self, GfError> {
        if size < 4 || size > (1 << 16) || !size.is_power_of_two() {
            return Err(GfError::NotAFieldSize { value: size });
        }
        Field::new(size.trailing_zeros())
    }

    /// Addition (= subtraction): carry-free polynomial sum.
    #[inline]
    pub fn add(&self, a: u16, b: u16) -> u16 {
        a ^ b
    }

    /// Product of two field elements.
    #[inline]
    pub fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
    }

    /// Multiplicative inverse of a nonzero element.
    #[inline]
    pub fn inv(&self, a: u16) -> u16 {
        assert!(a != 0, "zero has no inverse");
        let order = self.size - 1;
        self.exp[order - self.log[a as usize] as usize]
    }

    /// Quotient `a / b` with nonzero `b`.
    #[inline]
    pub fn div(&self, a: u16, b: u16) -> u16 {
        self.mul(a, self.inv(b))
    }

    /// `alpha^i` for any signed exponent, reduced mod `size - 1`.
    #[inline]
    pub fn alpha_pow(&self, i: i64) -> u16 {
        let order = (self.size - 1) as i64;
        self.exp[i.rem_euclid(order) as usize]
    }

    /// Discrete log of a nonzero element: the `i` with `alpha^i = a`.
    #[inline]
    pub fn log_of(&self, a: u16) -> u32 {
        assert!(a != 0, "zero has no logarithm");
        self.log[a as usize] as u32
    }

    /// `a^e` by exponent folding through the log table.
    pub fn pow(&self, a: u16, e: u64) -> u16 {
        if a == 0 {
            return if e == 0 { 1 } else { 0 };
        }
        let order = (self.size - 1) as u64;
        let idx = (self.log[a as usize] as u64 * (e % order)) % order;
        self.exp[idx as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_out_of_range_degrees_and_sizes() {
        assert_eq!(Field::new(1), Err(GfError::UnsupportedDegree { m: 1 }));
        assert_eq!(Field::new(17), Err(GfError::UnsupportedDegree { m: 17 }));
        assert_eq!(Field::with_size(3), Err(GfError::NotAFieldSize { value: 3 }));
        assert_eq!(Field::with_size(2), Err(GfError::NotAFieldSize { value: 2 }));
        assert_eq!(Field::with_size(256).unwrap().m, 8);
    }

    #[test]
    fn tables_are_permutations_for_every_degree() {
        for m in 2..=16 {
            let f = Field::new(m).unwrap();
            let order = f.size - 1;
            let mut seen = vec![false; f.size];
            for i in 0..order {
                let v = f.exp[i] as usize;
                assert!(v != 0 && !seen[v], "m={m}: alpha^{i} repeats");
                seen[v] = true;
            }
            // alpha has full order: the walk returns to 1 only after
            // size - 1 steps.
            assert_eq!(f.exp[0], 1);
            assert_eq!(f.exp[order], 1);
        }
    }

    #[test]
    fn gf16_field_axioms_exhaustive() {
        let f = Field::new(4).unwrap();
        let n = f.size as u16;
        for a in 0..n {
            for b in 0..n {
                assert_eq!(f.mul(a, b), f.mul(b, a));
                assert_eq!(f.add(a, b), f.add(b, a));
                for c in 0..n {
                    assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                    assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                    assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                }
            }
        }
        for a in 1..n {
            assert_eq!(f.mul(a, f.inv(a)), 1);
            assert_eq!(f.div(a, a), 1);
        }
        assert_eq!(f.mul(0, 7), 0);
        assert_eq!(f.add(9, 9), 0);
    }

    #[test]
    fn gf256_field_axioms_randomized() {
        let f = Field::new(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..20_000 {
            let a = (rng.next_u32() & 0xFF) as u16;
            let b = (rng.next_u32() & 0xFF) as u16;
            let c = (rng.next_u32() & 0xFF) as u16;
            assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
            assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
            assert_eq!(f.mul(a, b), f.mul(b, a));
            if a != 0 {
                assert_eq!(f.mul(a, f.inv(a)), 1);
                assert_eq!(f.div(f.mul(a, b), a), b);
            }
        }
    }

    #[test]
    fn gf256_reference_products() {
        // Known products under the conventional degree-8 polynomial 0x11D.
        let f = Field::new(8).unwrap();
        assert_eq!(f.mul(2, 128), 29); // alpha * alpha^7 wraps through 0x11D
        assert_eq!(f.pow(2, 8), 29);
        assert_eq!(f.alpha_pow(14), 19); // 135 doubled, reduced by 0x11D
        assert_eq!(f.inv(2), 142); // (0x11D >> 1): 142 doubled folds to 1
        assert_eq!(f.pow(2, 255), 1);
        assert_eq!(f.alpha_pow(-1), f.inv(2));
    }
}
