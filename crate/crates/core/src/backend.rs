//! Exact residue GEMM backends.
//!
//! Each backend multiplies two symmetric-residue integer matrices and
//! returns the full, unreduced integer product. The three implementations
//! trade generality for speed but must agree bitwise; each refuses inputs
//! outside the envelope in which it is exact, so a wrong answer is never
//! silently produced.

use core::sync::atomic::{AtomicU64, Ordering};

use alloc::vec;
use alloc::vec::Vec;
use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::fp;
use crate::matrix::{BigIntMatrix, IntegerMatrix8};
use crate::modular;

/// Longest inner-dimension block an i32 accumulator can take without
/// overflow in the all-(-128) worst case: (2^17 - 1) * 2^14 < 2^31.
const INT8_BLOCK: usize = (1 << 17) - 1;

/// Which arithmetic carries the residue products.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    /// Signed 8-bit entries, 32-bit blocked accumulation; models integer
    /// matrix engines. Moduli must be <= 256.
    Int8Sim,
    /// Binary64 entries with plain accumulation; exact while
    /// q * m^2 <= 2^55. Models running the products on an FP64 GEMM.
    Fp64Exact,
    /// Arbitrary-precision reference; always applicable, slowest.
    BigIntRef,
}

/// One unreduced residue product C_t = A_t * B_t.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueProduct {
    pub modulus_index: usize,
    pub product: BigIntMatrix,
}

/// A residue multiplier with a running count of logical GEMM calls.
///
/// The count is the scheme's cost currency: one increment per residue
/// product, regardless of internal blocking.
#[derive(Debug)]
pub struct ExactBackend {
    kind: BackendKind,
    gemm_count: AtomicU64,
}

impl ExactBackend {
    pub fn new(kind: BackendKind) -> Self {
        Self {
            kind,
            gemm_count: AtomicU64::new(0),
        }
    }

    pub fn kind(&self) -> BackendKind {
        self.kind
    }

    pub fn gemm_count(&self) -> u64 {
        self.gemm_count.load(Ordering::Relaxed)
    }

    pub fn reset_gemm_count(&self) {
        self.gemm_count.store(0, Ordering::Relaxed);
    }

    fn check_symmetric_range(m: &BigIntMatrix, modulus: u64) -> Result<()> {
        let big = BigInt::from(modulus);
        for v in m.data() {
            let two = v * 2;
            if two < -&big || two >= big {
                return Err(Error::ResidueOutOfRange);
            }
        }
        Ok(())
    }

    /// Multiplies one residue pair under `modulus`, returning the exact
    /// unreduced product.
    pub fn multiply_residue(
        &self,
        a: &BigIntMatrix,
        b: &BigIntMatrix,
        modulus: u64,
        modulus_index: usize,
    ) -> Result<ResidueProduct> {
        if a.cols() != b.rows() {
            return Err(Error::ShapeMismatch("inner dimensions must agree".into()));
        }
        if modulus < 2 {
            return Err(Error::InvalidModulus(modulus));
        }
        Self::check_symmetric_range(a, modulus)?;
        Self::check_symmetric_range(b, modulus)?;
        let product = match self.kind {
            BackendKind::Int8Sim => {
                if modulus > 256 {
                    return Err(Error::BackendPrecondition(
                        "int8 residues need a modulus of at most 256".into(),
                    ));
                }
                let a8 = IntegerMatrix8::try_from_bigint(a)?;
                let b8 = IntegerMatrix8::try_from_bigint(b)?;
                mul_int8_blocked(&a8, &b8)
            }
            BackendKind::Fp64Exact => {
                let q = a.cols().max(1) as u128;
                let m2 = (modulus as u128) * (modulus as u128);
                if q * m2 > 1u128 << 55 {
                    return Err(Error::BackendPrecondition(
                        "q * m^2 exceeds the binary64 exactness envelope".into(),
                    ));
                }
                mul_f64_exact(a, b)
            }
            BackendKind::BigIntRef => a.mul_exact(b)?,
        };
        self.gemm_count.fetch_add(1, Ordering::Relaxed);
        Ok(ResidueProduct {
            modulus_index,
            product,
        })
    }

    /// Multiplies every residue pair with its own modulus.
    pub fn multiply_all_residues(
        &self,
        a_res: &[BigIntMatrix],
        b_res: &[BigIntMatrix],
        moduli: &[u64],
    ) -> Result<Vec<ResidueProduct>> {
        if a_res.len() != moduli.len() || b_res.len() != moduli.len() {
            return Err(Error::ShapeMismatch(
                "one residue matrix per modulus required".into(),
            ));
        }
        let mut out = Vec::with_capacity(moduli.len());
        for (t, &m) in moduli.iter().enumerate() {
            out.push(self.multiply_residue(&a_res[t], &b_res[t], m, t)?);
        }
        Ok(out)
    }

    /// Chained residue product A * B * C under one modulus: the first
    /// product is reduced back to symmetric residues before the second, so
    /// each factor pair stays inside the backend envelope. Two GEMM counts.
    pub fn multiply_three_residues(
        &self,
        a: &BigIntMatrix,
        b: &BigIntMatrix,
        c: &BigIntMatrix,
        modulus: u64,
        modulus_index: usize,
    ) -> Result<ResidueProduct> {
        let first = self.multiply_residue(a, b, modulus, modulus_index)?;
        let reduced = modular::matrix_symmetric_mod(&first.product, &BigInt::from(modulus))?;
        self.multiply_residue(&reduced, c, modulus, modulus_index)
    }
}

fn mul_int8_blocked(a: &IntegerMatrix8, b: &IntegerMatrix8) -> BigIntMatrix {
    let (n, q, p) = (a.rows(), a.cols(), b.cols());
    let ad = a.data();
    let bd = b.data();
    let mut acc = vec![0i64; n * p];
    let mut k0 = 0;
    while k0 < q {
        let k1 = (k0 + INT8_BLOCK).min(q);
        for i in 0..n {
            for j in 0..p {
                let mut block: i32 = 0;
                for k in k0..k1 {
                    block += i32::from(ad[i * q + k]) * i32::from(bd[k * p + j]);
                }
                acc[i * p + j] += i64::from(block);
            }
        }
        k0 = k1;
    }
    let mut out = BigIntMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            out.set(i, j, BigInt::from(acc[i * p + j]));
        }
    }
    out
}

fn mul_f64_exact(a: &BigIntMatrix, b: &BigIntMatrix) -> BigIntMatrix {
    let (n, q, p) = (a.rows(), a.cols(), b.cols());
    // |residue| < 2^27, so the conversion through i64 -> f64 is exact
    let convert = |m: &BigIntMatrix| -> Vec<f64> {
        m.data()
            .iter()
            .map(|v| i64::try_from(v).expect("residue fits i64") as f64)
            .collect()
    };
    let af = convert(a);
    let bf = convert(b);
    let mut cf = vec![0.0f64; n * p];
    for i in 0..n {
        for k in 0..q {
            let x = af[i * q + k];
            if x == 0.0 {
                continue;
            }
            for j in 0..p {
                cf[i * p + j] += x * bf[k * p + j];
            }
        }
    }
    let mut out = BigIntMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            let v = cf[i * p + j];
            debug_assert!(fp::abs(v) <= 9007199254740992.0);
            let as_int = v as i64;
            debug_assert!(as_int as f64 == v, "accumulation left the exact range");
            out.set(i, j, BigInt::from(as_int));
        }
    }
    out
}
