//! Dense row-major matrix containers used throughout the pipeline.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::fp;

/// Dense binary64 matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixF64 {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl MatrixF64 {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Errors if any entry is NaN or infinite. Pipeline entry points call
    /// this so that deeper layers may assume finite data.
    pub fn ensure_finite(&self) -> Result<()> {
        if self.data.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite)
        }
    }

    /// Plain binary64 triple-loop product with a fixed (i,k,j) accumulation
    /// order, the rounding behaviour a conventional GEMM would have.
    pub fn mul_f64(&self, rhs: &MatrixF64) -> Result<MatrixF64> {
        if self.cols != rhs.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = MatrixF64::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let lhs_row = i * rhs.cols;
                let rhs_row = k * rhs.cols;
                for j in 0..rhs.cols {
                    out.data[lhs_row + j] += a * rhs.data[rhs_row + j];
                }
            }
        }
        Ok(out)
    }

    /// Elementwise sum; shapes must match.
    pub fn add_assign(&mut self, rhs: &MatrixF64) -> Result<()> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::ShapeMismatch(format!(
                "cannot add {}x{} and {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        for (a, b) in self.data.iter_mut().zip(rhs.data.iter()) {
            *a += *b;
        }
        Ok(())
    }
}

/// Matrix held as an unevaluated sum of binary64 word matrices,
/// most significant word first.
///
/// Invariant: all words share one shape, and for every entry the word
/// magnitudes decay fast enough that consecutive words never overlap:
/// 2^-53 * |word_t| >= |word_{t+1}|.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiWordMatrix {
    words: Vec<MatrixF64>,
}

impl MultiWordMatrix {
    pub fn new(words: Vec<MatrixF64>) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::InvalidParameter(
                "multi-word matrix needs at least one word".into(),
            ));
        }
        let (r, c) = (words[0].rows(), words[0].cols());
        for w in &words[1..] {
            if w.rows() != r || w.cols() != c {
                return Err(Error::ShapeMismatch(
                    "all words of a multi-word matrix must share one shape".into(),
                ));
            }
        }
        let m = Self { words };
        m.ensure_word_order()?;
        Ok(m)
    }

    fn ensure_word_order(&self) -> Result<()> {
        const U: f64 = f64::EPSILON / 2.0; // 2^-53
        for t in 0..self.words.len() - 1 {
            let hi = &self.words[t];
            let lo = &self.words[t + 1];
            for (a, b) in hi.data().iter().zip(lo.data().iter()) {
                // negated so NaN words fail the check as well
                #[allow(clippy::neg_cmp_op_on_partial_ord)]
                if !(fp::abs(*b) <= U * fp::abs(*a)) {
                    return Err(Error::InvalidParameter(
                        "multi-word words overlap; renormalize first".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.words[0].rows()
    }

    pub fn cols(&self) -> usize {
        self.words[0].cols()
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn words(&self) -> &[MatrixF64] {
        &self.words
    }

    pub fn ensure_finite(&self) -> Result<()> {
        for w in &self.words {
            w.ensure_finite()?;
        }
        Ok(())
    }

    /// Exact value of one entry as a dyadic integer: (m, e) with value m*2^e.
    pub fn entry_dyadic(&self, i: usize, j: usize) -> (BigInt, i64) {
        let parts: Vec<(i64, i64)> = self
            .words
            .iter()
            .filter_map(|w| fp::decode(w.get(i, j)))
            .collect();
        fp::dyadic_sum(&parts)
    }
}

/// Arbitrary-precision integer matrix. The modulus product exceeds 550 bits
/// already at two dozen word-size moduli, so scaled representatives and
/// reconstruction candidates need unbounded storage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BigIntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl BigIntMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<BigInt>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn from_i64(rows: usize, cols: usize, data: &[i64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&v| BigInt::from(v)).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[BigInt] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    /// Exact integer product.
    pub fn mul_exact(&self, rhs: &BigIntMatrix) -> Result<BigIntMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = BigIntMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let idx = i * rhs.cols + j;
                    out.data[idx] += a * rhs.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> BigInt {
        let mut best = BigInt::zero();
        for v in &self.data {
            let a = v.abs();
            if a > best {
                best = a;
            }
        }
        best
    }

    pub fn abs(&self) -> BigIntMatrix {
        BigIntMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v.abs()).collect(),
        }
    }
}

/// Integer matrix with entries representable in 8 signed bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegerMatrix8 {
    rows: usize,
    cols: usize,
    data: Vec<i8>,
}

impl IntegerMatrix8 {
    pub fn new(rows: usize, cols: usize, data: Vec<i8>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Checked narrowing from an arbitrary-precision matrix.
    pub fn try_from_bigint(m: &BigIntMatrix) -> Result<Self> {
        let data = m
            .data()
            .iter()
            .map(|v| {
                v.to_i64()
                    .and_then(|x| i8::try_from(x).ok())
                    .ok_or(Error::ResidueOutOfRange)
            })
            .collect::<Result<Vec<i8>>>()?;
        Ok(Self {
            rows: m.rows(),
            cols: m.cols(),
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[i8] {
        &self.data
    }
}

/// Integer matrix with 32-bit entries; holds one inner-dimension block of an
/// 8-bit product, which stays exactly representable under the blocking bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegerMatrix32 {
    rows: usize,
    cols: usize,
    data: Vec<i32>,
}

impl IntegerMatrix32 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[i32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [i32] {
        &mut self.data
    }
}

/// Either input representation accepted by the scaling front end.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixInput {
    F64(MatrixF64),
    MultiWord(MultiWordMatrix),
}

impl MatrixInput {
    pub fn rows(&self) -> usize {
        match self {
            MatrixInput::F64(m) => m.rows(),
            MatrixInput::MultiWord(m) => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            MatrixInput::F64(m) => m.cols(),
            MatrixInput::MultiWord(m) => m.cols(),
        }
    }

    pub fn ensure_finite(&self) -> Result<()> {
        match self {
            MatrixInput::F64(m) => m.ensure_finite(),
            MatrixInput::MultiWord(m) => m.ensure_finite(),
        }
    }

    /// Exact value of one entry as a dyadic integer.
    pub fn entry_dyadic(&self, i: usize, j: usize) -> (BigInt, i64) {
        match self {
            MatrixInput::F64(m) => match fp::decode(m.get(i, j)) {
                Some((mant, e)) => (BigInt::from(mant), e),
                None => (BigInt::zero(), 0),
            },
            MatrixInput::MultiWord(m) => m.entry_dyadic(i, j),
        }
    }
}

impl From<MatrixF64> for MatrixInput {
    fn from(m: MatrixF64) -> Self {
        MatrixInput::F64(m)
    }
}

impl From<MultiWordMatrix> for MatrixInput {
    fn from(m: MultiWordMatrix) -> Self {
        MatrixInput::MultiWord(m)
    }
}

/// Result representation produced by the back end of the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixOutput {
    F64(MatrixF64),
    MultiWord(MultiWordMatrix),
}

impl MatrixOutput {
    pub fn rows(&self) -> usize {
        match self {
            MatrixOutput::F64(m) => m.rows(),
            MatrixOutput::MultiWord(m) => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            MatrixOutput::F64(m) => m.cols(),
            MatrixOutput::MultiWord(m) => m.cols(),
        }
    }

    pub fn as_f64(&self) -> Option<&MatrixF64> {
        match self {
            MatrixOutput::F64(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_multiword(&self) -> Option<&MultiWordMatrix> {
        match self {
            MatrixOutput::MultiWord(m) => Some(m),
            _ => None,
        }
    }
}
