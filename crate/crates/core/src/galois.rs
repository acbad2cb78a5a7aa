//! Arithmetic in GF(2) polynomial rings and the field extensions GF(2^m).
//!
//! Polynomials over GF(2) are stored as little-endian coefficient bitmasks:
//! bit `i` of the word is the coefficient of `z^i`. A field is described by
//! [`FieldSpec`], the pair of a word width `m` and an irreducible reduction
//! polynomial of degree exactly `m`. Elements are plain unsigned values below
//! `2^m`, with bit `i` the coefficient of `z^i`.
//!
//! `m = 1` with `p = z + 1` is a genuine field here, not a special case:
//! addition degenerates to XOR on single bits and multiplication to AND, so
//! bit-oriented and word-oriented memories share one code path.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An element of GF(2^m), valid when `< 2^m` for the field it is used with.
pub type GfElement = u16;

/// Maximum supported word width in bits.
pub const MAX_WIDTH: u8 = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GaloisError {
    #[error("word width must be between 1 and {MAX_WIDTH}, got {0}")]
    BadWidth(u8),
    #[error("reduction polynomial {poly:#x} must have degree exactly {m}")]
    BadDegree { poly: u32, m: u8 },
    #[error("polynomial {0:#x} is reducible over GF(2)")]
    Reducible(u32),
    #[error("irreducibility is undefined for polynomials of degree < 1")]
    DegreeZero,
    #[error("element {value:#x} is out of range for GF(2^{m})")]
    ElementOutOfRange { value: u32, m: u8 },
    #[error("zero has no multiplicative inverse")]
    NoInverseOfZero,
}

/// Degree of a GF(2) polynomial bitmask, or `None` for the zero polynomial.
pub fn poly_degree(p: u32) -> Option<u32> {
    if p == 0 {
        None
    } else {
        Some(31 - p.leading_zeros())
    }
}

/// Remainder of GF(2) polynomial long division `a mod b`. `b` must be nonzero.
pub fn poly_rem(mut a: u64, b: u64) -> u64 {
    assert!(b != 0, "division by the zero polynomial");
    let db = 63 - b.leading_zeros();
    while a != 0 {
        let da = 63 - a.leading_zeros();
        if da < db {
            break;
        }
        a ^= b << (da - db);
    }
    a
}

/// Irreducibility over GF(2) by trial division.
///
/// Divides by every polynomial of degree `1 ..= deg(p)/2`; any factorization
/// of `p` contains a factor in that range. At the widths supported here
/// (degree <= 16) this is exhaustive and self-evidently correct.
pub fn poly_is_irreducible(p: u32) -> Result<bool, GaloisError> {
    let deg = poly_degree(p).ok_or(GaloisError::DegreeZero)?;
    if deg == 0 {
        return Err(GaloisError::DegreeZero);
    }
    let half = deg / 2;
    for q in 2u32..(1u32 << (half + 1)) {
        if poly_rem(p as u64, q as u64) == 0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The field GF(2^m): word width plus reduction polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSpec {
    m: u8,
    poly: u32,
}

impl FieldSpec {
    /// Builds a field, checking that `poly` has degree exactly `m` and is
    /// irreducible over GF(2).
    pub fn new(m: u8, poly: u32) -> Result<Self, GaloisError> {
        if m == 0 || m > MAX_WIDTH {
            return Err(GaloisError::BadWidth(m));
        }
        if poly_degree(poly) != Some(m as u32) {
            return Err(GaloisError::BadDegree { poly, m });
        }
        if !poly_is_irreducible(poly)? {
            return Err(GaloisError::Reducible(poly));
        }
        Ok(Self { m, poly })
    }

    /// GF(2) with `p = z + 1`, the field of the bit-oriented automaton.
    pub fn gf2() -> Self {
        Self { m: 1, poly: 0b11 }
    }

    pub fn width(&self) -> u8 {
        self.m
    }

    pub fn poly(&self) -> u32 {
        self.poly
    }

    /// Number of field elements, `2^m`.
    pub fn order(&self) -> u32 {
        1 << self.m
    }

    pub fn contains(&self, value: GfElement) -> bool {
        (value as u32) < self.order()
    }

    /// Validates an element, for values arriving from configs or the CLI.
    pub fn element(&self, value: u32) -> Result<GfElement, GaloisError> {
        if value < self.order() {
            Ok(value as GfElement)
        } else {
            Err(GaloisError::ElementOutOfRange { value, m: self.m })
        }
    }

    /// Field addition: coefficient-wise sum modulo 2, i.e. XOR.
    pub fn add(&self, a: GfElement, b: GfElement) -> GfElement {
        debug_assert!(self.contains(a) && self.contains(b));
        a ^ b
    }

    /// Field multiplication: carry-less product reduced modulo `p(z)`,
    /// interleaving the reduction with the shift-and-add loop.
    pub fn mul(&self, a: GfElement, b: GfElement) -> GfElement {
        debug_assert!(self.contains(a) && self.contains(b));
        let mut a = a as u32;
        let mut b = b as u32;
        let mut acc = 0u32;
        let top = 1u32 << self.m;
        while b != 0 {
            if b & 1 != 0 {
                acc ^= a;
            }
            b >>= 1;
            a <<= 1;
            if a & top != 0 {
                a ^= self.poly;
            }
        }
        acc as GfElement
    }

    /// Multiplicative inverse via `a^(2^m - 2)` (square-and-multiply).
    pub fn inv(&self, a: GfElement) -> Result<GfElement, GaloisError> {
        debug_assert!(self.contains(a));
        if a == 0 {
            return Err(GaloisError::NoInverseOfZero);
        }
        let mut exp = self.order() - 2;
        let mut base = a;
        let mut acc: GfElement = 1;
        while exp > 0 {
            if exp & 1 != 0 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        Ok(acc)
    }
}

impl std::fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GF(2^{}) mod {:#x}", self.m, self.poly)
    }
}
