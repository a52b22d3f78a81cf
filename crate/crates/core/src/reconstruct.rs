//! Residue accumulation, uniqueness certification, and the full pipeline.
//!
//! The pipeline: scale both factors to integer images, take symmetric
//! residues under each modulus, run one exact GEMM per modulus, weight and
//! fold the products back together, certify the result window, and undo the
//! scaling. Exactly one GEMM per modulus, whatever the precision target.

use alloc::vec::Vec;
use num_bigint::BigInt;
use num_traits::Zero;

use crate::backend::{BackendKind, ExactBackend, ResidueProduct};
use crate::crt::{build_crt_table, CrtTable, ModulusSet};
use crate::error::{Error, Result};
use crate::fp;
use crate::matrix::{BigIntMatrix, MatrixF64, MatrixInput, MatrixOutput, MultiWordMatrix};
use crate::modular;
use crate::split::{
    estimate_bound, plan_budgets, scale_and_truncate, BoundMethod, BudgetMode, Rounding,
    ScaledIntPair, Side, SplitPlan,
};

/// Adds one residue product into the running weighted sum. The product is
/// first reduced to its least nonnegative remainder, which keeps every
/// accumulated term nonnegative and bounded by (m_t - 1) * w_t.
fn accumulate_product(
    acc: &mut BigIntMatrix,
    product: &BigIntMatrix,
    modulus: u64,
    weight: &BigInt,
) -> Result<()> {
    if acc.rows() != product.rows() || acc.cols() != product.cols() {
        return Err(Error::ShapeMismatch(
            "residue products must share one shape".into(),
        ));
    }
    let m = BigInt::from(modulus);
    for i in 0..acc.rows() {
        for j in 0..acc.cols() {
            let reduced = modular::floor_mod(product.get(i, j), &m);
            let term = acc.get(i, j) + reduced * weight;
            acc.set(i, j, term);
        }
    }
    Ok(())
}

/// Folds unreduced residue products into the symmetric representative
/// modulo the table's product M.
///
/// Every index 0..s must appear exactly once among the products.
pub fn accumulate_and_reduce(
    products: &[ResidueProduct],
    table: &CrtTable,
) -> Result<BigIntMatrix> {
    if products.len() != table.s() {
        return Err(Error::ShapeMismatch(
            "one residue product per modulus required".into(),
        ));
    }
    let mut seen = alloc::vec![false; table.s()];
    for p in products {
        if p.modulus_index >= table.s() || seen[p.modulus_index] {
            return Err(Error::InvalidParameter(
                "residue products must cover each modulus exactly once".into(),
            ));
        }
        seen[p.modulus_index] = true;
    }
    let (rows, cols) = (products[0].product.rows(), products[0].product.cols());
    let mut acc = BigIntMatrix::zeros(rows, cols);
    for p in products {
        accumulate_product(
            &mut acc,
            &p.product,
            table.moduli()[p.modulus_index],
            &table.weights()[p.modulus_index],
        )?;
    }
    modular::matrix_symmetric_mod(&acc, table.modulus_product())
}

/// The symmetric representative is the true integer product exactly when
/// twice its largest possible magnitude stays below M.
pub fn check_uniqueness(c_max: &BigInt, m_product: &BigInt) -> bool {
    c_max * 2u32 < *m_product
}

/// An integer product together with the scaling that produced it.
///
/// Entry (i, j) represents x_ij * 2^(-row_exponents[i] - col_exponents[j]).
/// `certified_unique` records whether the magnitude certificate held; the
/// inverse-scaling routines refuse to touch an uncertified product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReconstructedMatrix {
    pub x: BigIntMatrix,
    pub row_exponents: Vec<i64>,
    pub col_exponents: Vec<i64>,
    pub certified_unique: bool,
}

impl ReconstructedMatrix {
    fn check(&self) -> Result<()> {
        if self.row_exponents.len() != self.x.rows() || self.col_exponents.len() != self.x.cols()
        {
            return Err(Error::ShapeMismatch(
                "one exponent per row and per column required".into(),
            ));
        }
        if !self.certified_unique {
            return Err(Error::AmbiguousReconstruction);
        }
        Ok(())
    }

    fn entry_dyadic(&self, i: usize, j: usize) -> (&BigInt, i64) {
        (
            self.x.get(i, j),
            -(self.row_exponents[i] + self.col_exponents[j]),
        )
    }
}

/// Undoes the row and column scaling, rounding each entry to the nearest
/// binary64 value.
pub fn inverse_scale_to_f64(rec: &ReconstructedMatrix) -> Result<MatrixF64> {
    rec.check()?;
    let mut out = MatrixF64::zeros(rec.x.rows(), rec.x.cols());
    for i in 0..rec.x.rows() {
        for j in 0..rec.x.cols() {
            let (m, e) = rec.entry_dyadic(i, j);
            out.set(i, j, fp::dyadic_to_f64_nearest(m, e)?);
        }
    }
    Ok(out)
}

/// Undoes the scaling into an unevaluated sum of `words` binary64 words:
/// word 0 is the nearest double, word 1 the nearest double to the
/// remainder, and so on. Values beyond binary64's range still refuse.
pub fn inverse_scale_to_multiword(
    rec: &ReconstructedMatrix,
    words: usize,
) -> Result<MultiWordMatrix> {
    rec.check()?;
    if words == 0 {
        return Err(Error::InvalidParameter(
            "a multi-word output needs at least one word".into(),
        ));
    }
    let (rows, cols) = (rec.x.rows(), rec.x.cols());
    let mut mats = Vec::with_capacity(words);
    for _ in 0..words {
        mats.push(MatrixF64::zeros(rows, cols));
    }
    for i in 0..rows {
        for j in 0..cols {
            let (m0, e0) = rec.entry_dyadic(i, j);
            let (mut m, mut e) = (m0.clone(), e0);
            for mat in mats.iter_mut() {
                let w = fp::dyadic_to_f64_nearest(&m, e)?;
                mat.set(i, j, w);
                if w == 0.0 {
                    break;
                }
                // subtract the word exactly: residual = m * 2^e - wm * 2^we
                let (wm, we) = fp::decode(w).expect("nonzero finite word decodes");
                let lo = e.min(we);
                m = (m << ((e - lo) as usize)) - (BigInt::from(wm) << ((we - lo) as usize));
                e = lo;
            }
        }
    }
    MultiWordMatrix::new(mats)
}

/// Result precision for the reconstructed product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    F64,
    /// An unevaluated sum of this many binary64 words per entry.
    MultiWord(usize),
}

/// Pipeline knobs. The defaults run the reference backend with symmetric
/// budgets and the Cauchy-Schwarz certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Os2Options {
    pub backend: BackendKind,
    pub budget_mode: BudgetMode,
    pub rounding: Rounding,
    pub bound_method: BoundMethod,
    pub output: OutputFormat,
    /// Spend certificate slack on extra truncation bits, then re-certify.
    pub tighten: bool,
    /// Skip planning and use these budgets as given. The uniqueness
    /// certificate still decides whether the run is allowed to answer.
    pub budget_override: Option<SplitPlan>,
}

impl Default for Os2Options {
    fn default() -> Self {
        Self {
            backend: BackendKind::BigIntRef,
            budget_mode: BudgetMode::Symmetric,
            rounding: Rounding::TowardZero,
            bound_method: BoundMethod::CauchySchwarz,
            output: OutputFormat::F64,
            tighten: false,
            budget_override: None,
        }
    }
}

/// What a pipeline run produced, with its cost and its certificate.
#[derive(Debug, Clone)]
pub struct Os2Result {
    pub output: MatrixOutput,
    pub reconstructed: ReconstructedMatrix,
    pub plan: SplitPlan,
    pub c_max_bound: BigInt,
    pub gemm_count: u64,
    pub tightened: bool,
}

fn split_both(
    a: &MatrixInput,
    b: &MatrixInput,
    plan: SplitPlan,
    rounding: Rounding,
) -> Result<(ScaledIntPair, ScaledIntPair)> {
    let sa = scale_and_truncate(a, plan.k_a, Side::Left, rounding)?;
    let sb = scale_and_truncate(b, plan.k_b, Side::Right, rounding)?;
    Ok((sa, sb))
}

fn certified_bound(
    sa: &ScaledIntPair,
    sb: &ScaledIntPair,
    method: BoundMethod,
    plan: SplitPlan,
) -> Result<BigInt> {
    Ok(estimate_bound(
        sa.ints(),
        sb.ints(),
        method,
        Some((plan.k_a, plan.k_b)),
    )?
    .c_max)
}

/// Multiplies two matrices through the residue pipeline: one exact GEMM per
/// modulus, then weighted recombination.
///
/// Refuses with `AmbiguousReconstruction` when the magnitude certificate
/// cannot place the integer product inside the unique window, rather than
/// returning a possibly aliased answer.
pub fn ozaki2_matmul(
    a: &MatrixInput,
    b: &MatrixInput,
    set: &ModulusSet,
    opts: &Os2Options,
) -> Result<Os2Result> {
    if a.cols() != b.rows() {
        return Err(Error::ShapeMismatch("inner dimensions must agree".into()));
    }
    a.ensure_finite()?;
    b.ensure_finite()?;
    let table = build_crt_table(set)?;
    let m_product = table.modulus_product();
    let q = a.cols() as u64;

    let mut plan = match opts.budget_override {
        Some(p) => {
            if p.k_a == 0 || p.k_b == 0 {
                return Err(Error::BudgetTooSmall);
            }
            p
        }
        None => plan_budgets(m_product, q, opts.budget_mode)?,
    };
    let (mut sa, mut sb) = split_both(a, b, plan, opts.rounding)?;
    let mut c_max = certified_bound(&sa, &sb, opts.bound_method, plan)?;
    let mut tightened = false;

    if opts.tighten && check_uniqueness(&c_max, m_product) && !c_max.is_zero() {
        // spend the certificate's slack: M / (2 c_max) in whole bits, less
        // one for safety, split across the two factors
        let slack = m_product / (&c_max * 2u32);
        let extra = (slack.bits() - 1).saturating_sub(1) as u32;
        if extra >= 2 {
            let wider = SplitPlan {
                k_a: plan.k_a + extra / 2,
                k_b: plan.k_b + extra / 2,
            };
            let (wa, wb) = split_both(a, b, wider, opts.rounding)?;
            let wide_bound = certified_bound(&wa, &wb, opts.bound_method, wider)?;
            if check_uniqueness(&wide_bound, m_product) {
                plan = wider;
                sa = wa;
                sb = wb;
                c_max = wide_bound;
                tightened = true;
            }
        }
    }

    if !check_uniqueness(&c_max, m_product) {
        return Err(Error::AmbiguousReconstruction);
    }

    let backend = ExactBackend::new(opts.backend);
    let (rows, cols) = (a.rows(), b.cols());
    let mut acc = BigIntMatrix::zeros(rows, cols);
    for (t, &m) in table.moduli().iter().enumerate() {
        // stream one modulus at a time; only the weighted sum is retained
        let m_big = BigInt::from(m);
        let ra = modular::matrix_symmetric_mod(sa.ints(), &m_big)?;
        let rb = modular::matrix_symmetric_mod(sb.ints(), &m_big)?;
        let prod = backend.multiply_residue(&ra, &rb, m, t)?;
        accumulate_product(&mut acc, &prod.product, m, &table.weights()[t])?;
    }
    let x = modular::matrix_symmetric_mod(&acc, m_product)?;
    debug_assert!(x.max_abs() <= c_max, "certificate must dominate the result");

    let reconstructed = ReconstructedMatrix {
        x,
        row_exponents: sa.exps().to_vec(),
        col_exponents: sb.exps().to_vec(),
        certified_unique: true,
    };
    let output = match opts.output {
        OutputFormat::F64 => MatrixOutput::F64(inverse_scale_to_f64(&reconstructed)?),
        OutputFormat::MultiWord(words) => {
            MatrixOutput::MultiWord(inverse_scale_to_multiword(&reconstructed, words)?)
        }
    };
    Ok(Os2Result {
        output,
        reconstructed,
        plan,
        c_max_bound: c_max,
        gemm_count: backend.gemm_count(),
        tightened,
    })
}
