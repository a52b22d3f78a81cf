//! Symmetric modular reduction.
//!
//! The remainder convention used everywhere in this crate maps a to
//! a - m*floor(a/m + 1/2), which lands in [-m/2, m/2) with the halfway
//! point of an even modulus going to -m/2. For m = 256 that is exactly
//! the wraparound of a signed 8-bit register, so residues are always
//! storable in the narrow integer type of the matching backend.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::matrix::BigIntMatrix;

/// Symmetric remainder of `a` modulo `m` (m >= 2).
pub fn symmetric_mod(a: &BigInt, m: &BigInt) -> Result<BigInt> {
    if m < &BigInt::from(2) {
        return Err(Error::InvalidModulus(m.to_u64().unwrap_or(0)));
    }
    let r0 = a.mod_floor(m);
    // r0 in [0, m); fold the upper half down, sending the exact midpoint
    // of an even modulus to -m/2.
    if &r0 * 2 >= *m {
        Ok(r0 - m)
    } else {
        Ok(r0)
    }
}

/// Symmetric remainder on machine integers; `m >= 2`, and `a` must be far
/// enough from the i128 limits that `2 * r0` cannot overflow (always true
/// for the residue ranges used here).
pub fn symmetric_mod_i128(a: i128, m: i128) -> i128 {
    debug_assert!(m >= 2);
    let r0 = a.rem_euclid(m);
    if 2 * r0 >= m {
        r0 - m
    } else {
        r0
    }
}

/// Least nonnegative remainder, in [0, m).
pub fn floor_mod(a: &BigInt, m: &BigInt) -> BigInt {
    a.mod_floor(m)
}

/// Elementwise symmetric remainder.
pub fn matrix_symmetric_mod(x: &BigIntMatrix, m: &BigInt) -> Result<BigIntMatrix> {
    let data = x
        .data()
        .iter()
        .map(|v| symmetric_mod(v, m))
        .collect::<Result<_>>()?;
    BigIntMatrix::new(x.rows(), x.cols(), data)
}
