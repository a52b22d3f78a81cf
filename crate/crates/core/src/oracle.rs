//! Exact reference arithmetic for certifying the fast paths.
//!
//! Everything here is slow on purpose: matrices of dyadic rationals held to
//! full precision, schoolbook products, and a brute-force residue search.
//! The fast pipeline is correct exactly when it agrees with this module.

use alloc::vec::Vec;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::fp;
use crate::matrix::{BigIntMatrix, MatrixF64, MatrixInput, MatrixOutput};

/// A matrix of dyadic rationals `data[i][j] * 2^exp` with one shared
/// exponent. Every operation is exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
    exp: i64,
}

impl ExactMatrix {
    /// Builds from per-entry dyadic parts, normalizing to the smallest
    /// exponent present among nonzero entries.
    pub fn from_parts(rows: usize, cols: usize, parts: Vec<(BigInt, i64)>) -> Result<Self> {
        if parts.len() != rows * cols {
            return Err(Error::ShapeMismatch(
                "entry count must equal rows * cols".into(),
            ));
        }
        let exp = parts
            .iter()
            .filter(|(m, _)| !m.is_zero())
            .map(|&(_, e)| e)
            .min()
            .unwrap_or(0);
        let data = parts
            .into_iter()
            .map(|(m, e)| {
                if m.is_zero() {
                    m
                } else {
                    debug_assert!(e >= exp);
                    m << ((e - exp) as usize)
                }
            })
            .collect();
        Ok(Self {
            rows,
            cols,
            data,
            exp,
        })
    }

    pub fn from_f64(m: &MatrixF64) -> Result<Self> {
        m.ensure_finite()?;
        let parts = m
            .data()
            .iter()
            .map(|&x| match fp::decode(x) {
                Some((mant, e)) => (BigInt::from(mant), e),
                None => (BigInt::zero(), 0),
            })
            .collect();
        Self::from_parts(m.rows(), m.cols(), parts)
    }

    pub fn from_input(input: &MatrixInput) -> Result<Self> {
        input.ensure_finite()?;
        let (rows, cols) = (input.rows(), input.cols());
        let mut parts = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                parts.push(input.entry_dyadic(i, j));
            }
        }
        Self::from_parts(rows, cols, parts)
    }

    /// Interprets an integer matrix at a fixed exponent.
    pub fn from_bigint(m: &BigIntMatrix, exp: i64) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            data: m.data().to_vec(),
            exp,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    pub fn entry(&self, i: usize, j: usize) -> (&BigInt, i64) {
        (&self.data[i * self.cols + j], self.exp)
    }

    pub fn mul_exact(&self, rhs: &ExactMatrix) -> Result<ExactMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::ShapeMismatch(
                "inner dimensions must agree".into(),
            ));
        }
        let mut data = alloc::vec![BigInt::zero(); self.rows * rhs.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = &rhs.data[k * rhs.cols + j];
                    if !b.is_zero() {
                        data[i * rhs.cols + j] += a * b;
                    }
                }
            }
        }
        Ok(ExactMatrix {
            rows: self.rows,
            cols: rhs.cols,
            data,
            exp: self.exp + rhs.exp,
        })
    }

    /// Exact difference self - rhs.
    pub fn sub(&self, rhs: &ExactMatrix) -> Result<ExactMatrix> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::ShapeMismatch("difference needs equal shapes".into()));
        }
        let exp = self.exp.min(rhs.exp);
        let ls = (self.exp - exp) as usize;
        let rs = (rhs.exp - exp) as usize;
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a << ls) - (b << rs))
            .collect();
        Ok(ExactMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
            exp,
        })
    }

    /// Largest magnitude entry, as a dyadic pair.
    pub fn max_abs(&self) -> (BigInt, i64) {
        let mut best = BigInt::zero();
        for v in &self.data {
            let a = v.abs();
            if a > best {
                best = a;
            }
        }
        (best, self.exp)
    }

    pub fn entry_to_f64(&self, i: usize, j: usize) -> Result<f64> {
        let (m, e) = self.entry(i, j);
        fp::dyadic_to_f64_nearest(m, e)
    }

    /// Rounds every entry to nearest binary64.
    pub fn to_f64_nearest(&self) -> Result<MatrixF64> {
        let mut out = MatrixF64::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let v = self.entry_to_f64(i, j)?;
                out.set(i, j, v);
            }
        }
        Ok(out)
    }
}

/// Exact product of two inputs of any supported precision.
pub fn exact_matmul(a: &MatrixInput, b: &MatrixInput) -> Result<ExactMatrix> {
    let ea = ExactMatrix::from_input(a)?;
    let eb = ExactMatrix::from_input(b)?;
    ea.mul_exact(&eb)
}

/// Componentwise error of a computed matrix against the exact reference.
///
/// Relative error is measured only where the reference entry is nonzero;
/// zero-reference entries contribute to the absolute figure alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub max_abs_err: f64,
    pub max_rel_err: f64,
    pub worst_abs: (usize, usize),
    pub worst_rel: (usize, usize),
}

impl ErrorReport {
    pub fn between(reference: &ExactMatrix, computed: &MatrixOutput) -> Result<ErrorReport> {
        if reference.rows() != computed.rows() || reference.cols() != computed.cols() {
            return Err(Error::ShapeMismatch(
                "error report needs equal shapes".into(),
            ));
        }
        match computed {
            MatrixOutput::F64(m) => m.ensure_finite()?,
            MatrixOutput::MultiWord(m) => m.ensure_finite()?,
        }
        let one = BigInt::one();
        let mut report = ErrorReport {
            max_abs_err: 0.0,
            max_rel_err: 0.0,
            worst_abs: (0, 0),
            worst_rel: (0, 0),
        };
        for i in 0..reference.rows() {
            for j in 0..reference.cols() {
                let (cm, ce) = match computed {
                    MatrixOutput::F64(m) => match fp::decode(m.get(i, j)) {
                        Some((mant, e)) => (BigInt::from(mant), e),
                        None => (BigInt::zero(), 0),
                    },
                    MatrixOutput::MultiWord(m) => m.entry_dyadic(i, j),
                };
                let (rm, re) = reference.entry(i, j);
                let e = ce.min(re);
                let diff = ((cm << ((ce - e) as usize)) - (rm << ((re - e) as usize))).abs();
                if diff.is_zero() {
                    continue;
                }
                let abs = fp::dyadic_ratio_to_f64((&diff, e), (&one, 0));
                if abs > report.max_abs_err {
                    report.max_abs_err = abs;
                    report.worst_abs = (i, j);
                }
                if !rm.is_zero() {
                    let rel = fp::dyadic_ratio_to_f64((&diff, e), (&rm.abs(), re));
                    if rel > report.max_rel_err {
                        report.max_rel_err = rel;
                        report.worst_rel = (i, j);
                    }
                }
            }
        }
        Ok(report)
    }
}

/// Finds the symmetric representative x in [-M/2, M/2) with
/// x = r_i (mod m_i) for every i, by scanning the whole window.
///
/// Intended for small moduli products only; refuses when the product
/// overflows the scan arithmetic.
pub fn brute_force_crt(residues: &[i64], moduli: &[u64]) -> Result<BigInt> {
    if residues.len() != moduli.len() || moduli.is_empty() {
        return Err(Error::ShapeMismatch(
            "one residue per modulus required".into(),
        ));
    }
    for &m in moduli {
        if m < 2 {
            return Err(Error::InvalidModulus(m));
        }
    }
    let mut product: i128 = 1;
    for &m in moduli {
        product = product.checked_mul(m as i128).ok_or(Error::Overflow)?;
        if product > 1i128 << 62 {
            return Err(Error::Overflow);
        }
    }
    let lo = -(product / 2);
    let hi = product - product / 2;
    let mut found: Option<i128> = None;
    let mut x = lo;
    while x < hi {
        let ok = residues
            .iter()
            .zip(moduli)
            .all(|(&r, &m)| x.rem_euclid(m as i128) == (r as i128).rem_euclid(m as i128));
        if ok {
            if found.is_some() {
                return Err(Error::NonUniqueCrtSolution);
            }
            found = Some(x);
        }
        x += 1;
    }
    match found {
        Some(x) => Ok(BigInt::from(x)),
        None => Err(Error::NoCrtSolution),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn mf(rows: usize, cols: usize, data: &[f64]) -> MatrixF64 {
        MatrixF64::new(rows, cols, data.to_vec()).unwrap()
    }

    #[test]
    fn small_product_is_exact() {
        let a = MatrixInput::from(mf(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        let b = MatrixInput::from(mf(2, 2, &[5.0, 6.0, 7.0, 8.0]));
        let c = exact_matmul(&a, &b).unwrap();
        let want = [19.0, 22.0, 43.0, 50.0];
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(c.entry_to_f64(i, j).unwrap(), want[i * 2 + j]);
            }
        }
    }

    #[test]
    fn common_exponent_normalization() {
        let m = ExactMatrix::from_f64(&mf(1, 3, &[1.0, 0.5, 0.0])).unwrap();
        assert_eq!(m.exponent(), -53);
        // 1.0 decodes as 2^52 * 2^-52; at exp -53 it is 2^53
        assert_eq!(m.entry(0, 0).0, &(BigInt::one() << 53u32));
        assert_eq!(m.entry(0, 1).0, &(BigInt::one() << 52u32));
        assert!(m.entry(0, 2).0.is_zero());
    }

    #[test]
    fn product_exponents_add() {
        let a = MatrixInput::from(mf(1, 1, &[0.5]));
        let b = MatrixInput::from(mf(1, 1, &[0.25]));
        let c = exact_matmul(&a, &b).unwrap();
        assert_eq!(c.entry_to_f64(0, 0).unwrap(), 0.125);
    }

    #[test]
    fn report_is_zero_for_identical() {
        let a = MatrixInput::from(mf(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        let b = MatrixInput::from(mf(2, 2, &[5.0, 6.0, 7.0, 8.0]));
        let c = exact_matmul(&a, &b).unwrap();
        let computed = MatrixOutput::F64(c.to_f64_nearest().unwrap());
        let rep = ErrorReport::between(&c, &computed).unwrap();
        assert_eq!(rep.max_abs_err, 0.0);
        assert_eq!(rep.max_rel_err, 0.0);
    }

    #[test]
    fn report_catches_one_ulp() {
        let exact = ExactMatrix::from_f64(&mf(1, 2, &[1.0, 2.0])).unwrap();
        let computed =
            MatrixOutput::F64(mf(1, 2, &[1.0 + f64::EPSILON, 2.0]));
        let rep = ErrorReport::between(&exact, &computed).unwrap();
        assert_eq!(rep.worst_abs, (0, 0));
        assert!((rep.max_rel_err - f64::EPSILON).abs() < 1e-30);
        assert!((rep.max_abs_err - f64::EPSILON).abs() < 1e-30);
    }

    #[test]
    fn zero_reference_entries_skip_relative_error() {
        let exact = ExactMatrix::from_f64(&mf(1, 2, &[0.0, 1.0])).unwrap();
        let computed = MatrixOutput::F64(mf(1, 2, &[1e-300, 1.0]));
        let rep = ErrorReport::between(&exact, &computed).unwrap();
        assert_eq!(rep.max_rel_err, 0.0);
        assert!(rep.max_abs_err > 0.0);
    }

    #[test]
    fn brute_force_agrees_with_the_textbook_example() {
        let x = brute_force_crt(&[2, 3, 2], &[3, 5, 7]).unwrap();
        assert_eq!(x, BigInt::from(23));
    }

    #[test]
    fn brute_force_symmetric_window() {
        // 103 mod 105 is -2 in the symmetric window
        let x = brute_force_crt(&[1, 3, 5], &[3, 5, 7]).unwrap();
        assert_eq!(x, BigInt::from(-2));
    }

    #[test]
    fn brute_force_detects_degenerate_moduli() {
        assert!(matches!(
            brute_force_crt(&[0, 1], &[2, 4]),
            Err(Error::NoCrtSolution)
        ));
        assert!(matches!(
            brute_force_crt(&[1, 1], &[2, 4]),
            Err(Error::NonUniqueCrtSolution)
        ));
    }

    #[test]
    fn brute_force_refuses_huge_products() {
        assert!(matches!(
            brute_force_crt(&[0, 0], &[u64::MAX, u64::MAX]),
            Err(Error::Overflow)
        ));
    }

    #[test]
    fn subtraction_aligns_exponents() {
        let a = ExactMatrix::from_f64(&mf(1, 1, &[1.5])).unwrap();
        let b = ExactMatrix::from_f64(&mf(1, 1, &[1.0])).unwrap();
        let d = a.sub(&b).unwrap();
        assert_eq!(d.entry_to_f64(0, 0).unwrap(), 0.5);
        let (m, _) = d.max_abs();
        assert!(!m.is_zero());
    }

    #[test]
    fn nearest_rounding_is_half_even() {
        let big = (BigInt::one() << 53u32) + 1;
        let m = ExactMatrix::from_parts(1, 1, vec![(big, 0)]).unwrap();
        let v = m.entry_to_f64(0, 0).unwrap();
        assert_eq!(v, 9007199254740992.0);
    }
}
