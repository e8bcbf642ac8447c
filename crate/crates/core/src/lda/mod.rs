//! Linear deterministic channel, the bit-exact relaying scheme, and gDoF corners.
//!
//! A level vector of length `n` is packed into a `u64` with the top
//! (strongest) level as bit `n − 1`. A down-shift by `k` levels is `x >> k`.

pub mod gdof;
pub mod scheme;

use std::fmt;

use serde::Serialize;

use crate::error::{CoopError, Result};

pub use gdof::{gdof_corners, gdof_limit_oracle, DuplexMode, GdofCorners, GdofSnrPoint};
pub use scheme::{lda_scheme_run, LdaBlockLog, LdaRun, LdaSlotRecord};

pub const MAX_LEVELS: u32 = 64;

pub(crate) fn mask(k: u32) -> u64 {
    if k >= 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LevelVector {
    pub bits: u64,
    pub n: u32,
}

impl LevelVector {
    pub fn new(bits: u64, n: u32) -> Result<Self> {
        if n == 0 || n > MAX_LEVELS {
            return Err(CoopError::invalid(format!(
                "level count must be in 1..={MAX_LEVELS}, got {n}"
            )));
        }
        if bits & !mask(n) != 0 {
            return Err(CoopError::invalid(format!(
                "value {bits:#x} does not fit in {n} levels"
            )));
        }
        Ok(LevelVector { bits, n })
    }

    /// Parse a top-level-first binary string such as `"1000"`.
    pub fn parse(s: &str) -> Result<Self> {
        let n = u32::try_from(s.len()).unwrap_or(u32::MAX);
        if n == 0 || n > MAX_LEVELS || !s.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(CoopError::invalid(format!(
                "not a binary level vector: {s:?}"
            )));
        }
        LevelVector::new(u64::from_str_radix(s, 2).expect("checked digits"), n)
    }

    pub fn zero(n: u32) -> Result<Self> {
        LevelVector::new(0, n)
    }

    /// Down-shift by `k` levels; `k >= n` annihilates.
    pub fn shift_down(&self, k: u32) -> Self {
        let bits = if k >= 64 { 0 } else { self.bits >> k };
        LevelVector { bits, n: self.n }
    }

    pub fn xor(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(CoopError::LengthMismatch {
                expected: self.n as usize,
                got: other.n as usize,
            });
        }
        Ok(LevelVector {
            bits: self.bits ^ other.bits,
            n: self.n,
        })
    }
}

impl fmt::Display for LevelVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:0width$b}", self.bits, width = self.n as usize)
    }
}

/// Integer-exponent deterministic channel; `n` is the largest exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LdaChannel {
    pub beta_max: u32,
    pub beta_min: u32,
    pub beta_1: u32,
    pub n: u32,
}

impl LdaChannel {
    pub fn new(beta_max: u32, beta_min: u32, beta_1: u32) -> Result<Self> {
        let n = beta_max.max(beta_min).max(beta_1);
        if n == 0 || n > MAX_LEVELS {
            return Err(CoopError::invalid(format!(
                "largest exponent must be in 1..={MAX_LEVELS}, got {n}"
            )));
        }
        Ok(LdaChannel {
            beta_max,
            beta_min,
            beta_1,
            n,
        })
    }
}

/// `(y1, y3)`: user 1 hears user 2 through `beta_1`; the destination hears
/// the XOR of both users' shifted signals.
pub fn lda_transmit(
    ch: &LdaChannel,
    x1: &LevelVector,
    x2: &LevelVector,
) -> Result<(LevelVector, LevelVector)> {
    for x in [x1, x2] {
        if x.n != ch.n {
            return Err(CoopError::LengthMismatch {
                expected: ch.n as usize,
                got: x.n as usize,
            });
        }
    }
    let y1 = x2.shift_down(ch.n - ch.beta_1);
    let y3 = x1
        .shift_down(ch.n - ch.beta_max)
        .xor(&x2.shift_down(ch.n - ch.beta_min))?;
    Ok((y1, y3))
}
