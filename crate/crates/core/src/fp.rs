//! Bit-exact binary64 kernels: decoding, error-free transformations, and
//! conversions between dyadic integers (m * 2^e) and binary64.
//!
//! Scaling exponents are read off the bit pattern instead of calling a
//! logarithm, so subnormals and values near binade boundaries are handled
//! exactly.

use alloc::vec;
use alloc::vec::Vec;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// |x| without touching the math library.
#[inline]
pub fn abs(x: f64) -> f64 {
    f64::from_bits(x.to_bits() & 0x7fff_ffff_ffff_ffff)
}

/// Exact decomposition of a finite nonzero binary64 into (m, e) with
/// x = m * 2^e and m a signed integer, |m| < 2^53. Returns None for zero
/// and for non-finite input.
pub fn decode(x: f64) -> Option<(i64, i64)> {
    if x == 0.0 || !x.is_finite() {
        return None;
    }
    let bits = x.to_bits();
    let neg = bits >> 63 == 1;
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mag, e) = if biased == 0 {
        // subnormal: value = frac * 2^-1074
        (frac, -1074)
    } else {
        ((1u64 << 52) | frac, biased - 1075)
    };
    let m = if neg { -(mag as i64) } else { mag as i64 };
    Some((m, e))
}

/// floor(log2 |x|) by bit decode; exact for subnormals too.
pub fn pow2_scale_exponent(x: f64) -> Result<i32> {
    if x == 0.0 {
        return Err(Error::ZeroArgument);
    }
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    let (m, e) = decode(x).expect("finite nonzero");
    let mag = m.unsigned_abs();
    let msb = 63 - mag.leading_zeros() as i64;
    Ok((msb + e) as i32)
}

/// Error-free transformation: a + b = s + err with s = fl(a + b).
/// Branch-free Knuth version, no magnitude precondition.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

/// Error-free transformation requiring |a| >= |b| (or a == 0).
#[inline]
pub fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    debug_assert!(abs(a) >= abs(b) || a == 0.0);
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

/// Adds one binary64 to a nonoverlapping expansion (components stored in
/// increasing magnitude order), preserving the exact sum and dropping zeros.
pub fn grow_expansion(e: &[f64], b: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(e.len() + 1);
    let mut q = b;
    for &component in e {
        let (sum, err) = two_sum(q, component);
        q = sum;
        if err != 0.0 {
            h.push(err);
        }
    }
    if q != 0.0 {
        h.push(q);
    }
    h
}

/// Compresses a nonoverlapping expansion (increasing magnitude order).
/// The returned expansion has the same exact sum, and its largest component
/// approximates that sum to within half an ulp.
pub fn compress(e: &[f64]) -> Vec<f64> {
    let m = e.len();
    if m == 0 {
        return Vec::new();
    }
    if m == 1 {
        return vec![e[0]];
    }
    // Downward sweep: absorb components from the top, spilling each summand
    // that no longer fits. `bottom` can shrink at most m-1 times, so it
    // never wraps below zero.
    let mut g = vec![0.0; m];
    let mut bottom = m - 1;
    let mut q = e[m - 1];
    for i in (0..m - 1).rev() {
        let (sum, err) = fast_two_sum(q, e[i]);
        if err != 0.0 {
            g[bottom] = sum;
            bottom -= 1;
            q = err;
        } else {
            q = sum;
        }
    }
    g[bottom] = q;
    // Upward sweep: re-accumulate, emitting the small leftovers in
    // increasing order and the final sum on top.
    let mut h = Vec::with_capacity(m);
    let mut q = g[bottom];
    for &component in &g[bottom + 1..] {
        let (sum, err) = fast_two_sum(component, q);
        q = sum;
        if err != 0.0 {
            h.push(err);
        }
    }
    h.push(q);
    h
}

/// Rewrites a list of binary64 words into an equal-value list of the same
/// length in which consecutive words never overlap:
/// 2^-53 * |out[t]| >= |out[t+1]|. The exact sum is preserved.
pub fn multiword_renormalize(words: &[f64]) -> Result<Vec<f64>> {
    if words.is_empty() {
        return Err(Error::InvalidParameter("empty word list".into()));
    }
    if words.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut expansion: Vec<f64> = Vec::new();
    for &w in words {
        if w != 0.0 {
            expansion = grow_expansion(&expansion, w);
        }
    }
    if expansion.iter().any(|x| !x.is_finite()) {
        return Err(Error::Overflow);
    }
    let mut out = Vec::with_capacity(words.len());
    let mut rest = expansion;
    while out.len() < words.len() {
        if rest.is_empty() {
            out.push(0.0);
            continue;
        }
        let compressed = compress(&rest);
        out.push(*compressed.last().expect("nonempty"));
        rest = compressed[..compressed.len() - 1].to_vec();
    }
    // The exact expansion of n words has at most n components and each round
    // consumes at least one, so nothing can be left over.
    debug_assert!(rest.is_empty());
    Ok(out)
}

/// Exact sum of dyadic terms m_i * 2^{e_i}, in canonical form: the mantissa
/// is odd (or the pair is (0, 0)), so equal values compare equal.
pub fn dyadic_sum(parts: &[(i64, i64)]) -> (BigInt, i64) {
    if parts.is_empty() {
        return (BigInt::zero(), 0);
    }
    let emin = parts.iter().map(|&(_, e)| e).min().expect("nonempty");
    let mut acc = BigInt::zero();
    for &(m, e) in parts {
        acc += BigInt::from(m) << u64::try_from(e - emin).expect("e >= emin");
    }
    if acc.is_zero() {
        (acc, 0)
    } else {
        let tz = acc.trailing_zeros().expect("nonzero");
        (acc >> tz, emin + tz as i64)
    }
}

/// floor(log2 |m * 2^e|); m must be nonzero.
pub fn dyadic_floor_log2(m: &BigInt, e: i64) -> i64 {
    debug_assert!(!m.is_zero());
    m.magnitude().bits() as i64 - 1 + e
}

/// 2^e as binary64 for e in the normal exponent range [-1022, 1023].
#[inline]
pub(crate) fn pow2(e: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// Nearest binary64 (ties to even) to the dyadic integer m * 2^e.
/// Errors with [`Error::Overflow`] if the rounded value exceeds the
/// binary64 range; underflow rounds through subnormals to zero exactly as
/// IEEE 754 would.
pub fn dyadic_to_f64_nearest(m: &BigInt, e: i64) -> Result<f64> {
    if m.is_zero() {
        return Ok(0.0);
    }
    let neg = m.is_negative();
    let mag = m.magnitude();
    let nbits = mag.bits() as i64;
    // Round at the grid the result will live on: 53 significant bits, but
    // never finer than 2^-1074.
    let shift = (nbits - 53).max(-1074 - e);
    let (q, exp) = if shift > 0 {
        let s = shift as u64;
        let q0: BigInt = BigInt::from(mag.clone()) >> s;
        let r: BigInt = BigInt::from(mag.clone()) - (&q0 << s);
        let half: BigInt = BigInt::one() << (s - 1);
        let round_up = r > half || (r == half && q0.is_odd());
        (if round_up { q0 + 1 } else { q0 }, e + shift)
    } else {
        (BigInt::from(mag.clone()), e)
    };
    let mut qu = q.to_u64().expect("rounded significand fits 54 bits");
    let mut exp = exp;
    if qu == 1 << 53 {
        qu = 1 << 52;
        exp += 1;
    }
    let msb = 63 - qu.leading_zeros() as i64;
    if msb + exp > 1023 {
        return Err(Error::Overflow);
    }
    let mut f = qu as f64; // exact: qu <= 2^53
    let mut remaining = exp;
    while remaining > 0 {
        let step = remaining.min(1023);
        f *= pow2(step);
        remaining -= step;
    }
    while remaining < 0 {
        let step = remaining.max(-1022);
        f *= pow2(step);
        remaining -= step;
    }
    Ok(if neg { -f } else { f })
}

/// Approximate ratio (num_m * 2^{num_e}) / (den_m * 2^{den_e}) as binary64,
/// accurate to well below one part in 2^60. Overflow reports infinity; a
/// zero numerator reports exactly zero. Intended for error metrics, not for
/// reconstruction.
pub fn dyadic_ratio_to_f64(num: (&BigInt, i64), den: (&BigInt, i64)) -> f64 {
    let (nm, ne) = num;
    let (dm, de) = den;
    debug_assert!(!dm.is_zero());
    if nm.is_zero() {
        return 0.0;
    }
    let neg = nm.is_negative() != dm.is_negative();
    let nmag = nm.magnitude();
    let dmag = dm.magnitude();
    let shift = (dmag.bits() as i64 + 64 - nmag.bits() as i64).max(0) as u64;
    let q = BigInt::from(nmag << shift) / BigInt::from(dmag.clone());
    let q = if neg { -q } else { q };
    match dyadic_to_f64_nearest(&q, ne - de - shift as i64) {
        Ok(v) => v,
        Err(_) => {
            if neg {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        }
    }
}
