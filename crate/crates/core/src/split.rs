//! Bit-budget planning and the scale-and-truncate front end.
//!
//! The pipeline multiplies scaled integer images A' and B' of the inputs.
//! Budgets say how many bits those images may carry so that the product's
//! largest entry provably stays inside the reconstruction window; the
//! splitter produces the images, and the bound estimators certify (or
//! tighten) what the budgets promised.

use alloc::vec::Vec;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::fp;
use crate::matrix::{BigIntMatrix, MatrixInput};
use crate::modular;

/// How the total bit budget is divided between the two factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BudgetMode {
    /// Equal halves (the extra odd bit is dropped).
    Symmetric,
    /// `left_fraction` of the total goes to A', the rest to B'.
    /// Must lie strictly between 0 and 1.
    Asymmetric { left_fraction: f64 },
}

/// Per-factor truncation budgets, in bits of integer magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitPlan {
    pub k_a: u32,
    pub k_b: u32,
}

fn total_budget(m_product: &BigInt, denom: &BigInt) -> Result<u32> {
    // Require q * 2^(k_a + k_b) <= (M - 2) / 2 so that the naive product
    // bound already implies 2 * c_max < M. floor division is safe here:
    // floor(log2(floor(x))) = floor(log2(x)) for x >= 1.
    let num = (m_product - 2u32) / denom;
    if num < BigInt::one() {
        return Err(Error::BudgetTooSmall);
    }
    Ok((num.bits() - 1) as u32)
}

/// Splits the bit budget implied by modulus product `m_product` and inner
/// dimension `q` between the two factors.
pub fn plan_budgets(m_product: &BigInt, q: u64, mode: BudgetMode) -> Result<SplitPlan> {
    if q == 0 {
        return Err(Error::ZeroArgument);
    }
    let total = total_budget(m_product, &(BigInt::from(q) * 2))?;
    let (k_a, k_b) = match mode {
        BudgetMode::Symmetric => {
            let k = total / 2;
            (k, k)
        }
        BudgetMode::Asymmetric { left_fraction } => {
            if !(left_fraction > 0.0 && left_fraction < 1.0) {
                return Err(Error::InvalidParameter(
                    "left_fraction must lie in (0, 1)".into(),
                ));
            }
            if total < 2 {
                return Err(Error::BudgetTooSmall);
            }
            let k_a = ((total as f64 * left_fraction) as u32).clamp(1, total - 1);
            (k_a, total - k_a)
        }
    };
    if k_a == 0 || k_b == 0 {
        return Err(Error::BudgetTooSmall);
    }
    Ok(SplitPlan { k_a, k_b })
}

/// Common per-factor budget for a three-factor product with inner
/// dimensions `q` and `r`.
pub fn plan_budgets_three(m_product: &BigInt, q: u64, r: u64) -> Result<u32> {
    if q == 0 || r == 0 {
        return Err(Error::ZeroArgument);
    }
    let total = total_budget(m_product, &(BigInt::from(q) * BigInt::from(r) * 2))?;
    let k = total / 3;
    if k == 0 {
        return Err(Error::BudgetTooSmall);
    }
    Ok(k)
}

/// Which factor of the product a matrix is, deciding whether scaling acts
/// on rows (left factor) or columns (right factor).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Rounding used when the scaled entry is truncated to an integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounding {
    /// Drop the fraction. The default; error per entry is below one unit.
    TowardZero,
    /// Round to nearest, ties to even. An entry that would round up to
    /// exactly 2^bits is saturated to 2^bits - 1 to preserve the budget.
    ToNearest,
}

/// A scaled integer image together with the power-of-two exponents that
/// produced it: row i (left side) was multiplied by 2^exps[i].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaledIntPair {
    ints: BigIntMatrix,
    exps: Vec<i64>,
    side: Side,
    bits: u32,
}

impl ScaledIntPair {
    pub fn ints(&self) -> &BigIntMatrix {
        &self.ints
    }

    pub fn exps(&self) -> &[i64] {
        &self.exps
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }
}

fn round_shifted(m: &BigInt, shift: i64, rounding: Rounding, bits: u32) -> BigInt {
    if m.is_zero() {
        return BigInt::zero();
    }
    if shift >= 0 {
        return m << (shift as usize);
    }
    let s = (-shift) as usize;
    let mag = m.abs();
    let q0 = &mag >> s;
    let q = match rounding {
        Rounding::TowardZero => q0,
        Rounding::ToNearest => {
            let rem = &mag - (&q0 << s);
            let up = match (&rem * 2u32).cmp(&(BigInt::one() << s)) {
                core::cmp::Ordering::Greater => true,
                core::cmp::Ordering::Equal => q0.is_odd(),
                core::cmp::Ordering::Less => false,
            };
            let mut q = q0;
            if up {
                q += 1;
            }
            let cap = BigInt::one() << bits;
            if q == cap {
                q -= 1;
            }
            q
        }
    };
    if m.is_negative() {
        -q
    } else {
        q
    }
}

/// Scales each row (left factor) or column (right factor) by a power of two
/// so its largest magnitude lands in [2^(bits-1), 2^bits), then truncates
/// every entry to an integer.
///
/// All-zero rows or columns keep exponent 0. The arithmetic is exact: no
/// intermediate rounding happens before the single final truncation, which
/// also makes multi-word inputs lossless up to that truncation.
pub fn scale_and_truncate(
    input: &MatrixInput,
    bits: u32,
    side: Side,
    rounding: Rounding,
) -> Result<ScaledIntPair> {
    if bits == 0 {
        return Err(Error::BudgetTooSmall);
    }
    input.ensure_finite()?;
    let (rows, cols) = (input.rows(), input.cols());
    let groups = match side {
        Side::Left => rows,
        Side::Right => cols,
    };
    let group_len = match side {
        Side::Left => cols,
        Side::Right => rows,
    };
    let entry_at = |g: usize, t: usize| match side {
        Side::Left => input.entry_dyadic(g, t),
        Side::Right => input.entry_dyadic(t, g),
    };

    let mut exps = Vec::with_capacity(groups);
    for g in 0..groups {
        // largest |entry| of the group, as an exact dyadic comparison
        let mut best: Option<(BigInt, i64)> = None;
        for t in 0..group_len {
            let (m, e) = entry_at(g, t);
            if m.is_zero() {
                continue;
            }
            let mag = m.abs();
            best = Some(match best {
                None => (mag, e),
                Some((bm, be)) => {
                    let lo = e.min(be);
                    if (&mag << ((e - lo) as usize)) > (&bm << ((be - lo) as usize)) {
                        (mag, e)
                    } else {
                        (bm, be)
                    }
                }
            });
        }
        let exp = match best {
            None => 0,
            Some((m, e)) => (bits as i64 - 1) - fp::dyadic_floor_log2(&m, e),
        };
        exps.push(exp);
    }

    let mut ints = BigIntMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let g = match side {
                Side::Left => i,
                Side::Right => j,
            };
            let (m, e) = input.entry_dyadic(i, j);
            if m.is_zero() {
                continue;
            }
            ints.set(i, j, round_shifted(&m, e + exps[g], rounding, bits));
        }
    }
    Ok(ScaledIntPair {
        ints,
        exps,
        side,
        bits,
    })
}

/// Symmetric residues of one integer matrix under each modulus.
pub fn residues_of(ints: &BigIntMatrix, moduli: &[u64]) -> Result<Vec<BigIntMatrix>> {
    moduli
        .iter()
        .map(|&m| modular::matrix_symmetric_mod(ints, &BigInt::from(m)))
        .collect()
}

/// How the product magnitude bound is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMethod {
    /// q * 2^(k_a + k_b), from budgets alone; cheapest, loosest.
    Naive,
    /// ceil(sqrt(max_i sum_k a_ik^2 * max_j sum_k b_kj^2)); no product needed.
    CauchySchwarz,
    /// max entry of |A'| * |B'|, the tightest bound that still ignores signs.
    MagnitudeProduct,
}

/// An upper bound on max |(A'B')_ij| together with how it was obtained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundEstimate {
    pub method: BoundMethod,
    pub c_max: BigInt,
}

fn ceil_sqrt(n: &BigInt) -> BigInt {
    let r = n.sqrt();
    if &(&r * &r) < n {
        r + 1
    } else {
        r
    }
}

/// Bounds the largest product magnitude; `budgets` is needed only by
/// `Naive`. Every method returns a true upper bound, and they are ordered:
/// MagnitudeProduct <= CauchySchwarz <= Naive on the same inputs.
pub fn estimate_bound(
    a: &BigIntMatrix,
    b: &BigIntMatrix,
    method: BoundMethod,
    budgets: Option<(u32, u32)>,
) -> Result<BoundEstimate> {
    if a.cols() != b.rows() {
        return Err(Error::ShapeMismatch("inner dimensions must agree".into()));
    }
    let c_max = match method {
        BoundMethod::Naive => {
            let (k_a, k_b) = budgets.ok_or(Error::InvalidParameter(
                "the naive bound needs the bit budgets".into(),
            ))?;
            BigInt::from(a.cols()) << ((k_a + k_b) as usize)
        }
        BoundMethod::CauchySchwarz => {
            let mut s_a = BigInt::zero();
            for i in 0..a.rows() {
                let mut acc = BigInt::zero();
                for k in 0..a.cols() {
                    let v = a.get(i, k);
                    acc += v * v;
                }
                if acc > s_a {
                    s_a = acc;
                }
            }
            let mut s_b = BigInt::zero();
            for j in 0..b.cols() {
                let mut acc = BigInt::zero();
                for k in 0..b.rows() {
                    let v = b.get(k, j);
                    acc += v * v;
                }
                if acc > s_b {
                    s_b = acc;
                }
            }
            ceil_sqrt(&(s_a * s_b))
        }
        BoundMethod::MagnitudeProduct => magnitude_product_max(a, b),
    };
    Ok(BoundEstimate { method, c_max })
}

/// Max entry of |A| * |B|. Runs in i128 when magnitudes permit, exact
/// BigInt otherwise.
fn magnitude_product_max(a: &BigIntMatrix, b: &BigIntMatrix) -> BigInt {
    let ma = a.max_abs();
    let mb = b.max_abs();
    let fits = ma.bits() + mb.bits() + (a.cols().max(1) as u64).ilog2() as u64 + 2 < 127;
    if fits {
        let ai: Vec<i128> = a
            .data()
            .iter()
            .map(|v| i128::try_from(v.abs()).unwrap_or(i128::MAX))
            .collect();
        let bi: Vec<i128> = b
            .data()
            .iter()
            .map(|v| i128::try_from(v.abs()).unwrap_or(i128::MAX))
            .collect();
        let (n, q, p) = (a.rows(), a.cols(), b.cols());
        let mut best: i128 = 0;
        for i in 0..n {
            for j in 0..p {
                let mut acc: i128 = 0;
                for k in 0..q {
                    acc += ai[i * q + k] * bi[k * p + j];
                }
                if acc > best {
                    best = acc;
                }
            }
        }
        BigInt::from(best)
    } else {
        a.abs().mul_exact(&b.abs()).map(|c| c.max_abs()).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{MatrixF64, MultiWordMatrix};
    use alloc::vec;

    fn input(rows: usize, cols: usize, data: &[f64]) -> MatrixInput {
        MatrixInput::from(MatrixF64::new(rows, cols, data.to_vec()).unwrap())
    }

    #[test]
    fn budget_small_product() {
        let plan = plan_budgets(&BigInt::from(105), 2, BudgetMode::Symmetric).unwrap();
        assert_eq!(plan, SplitPlan { k_a: 2, k_b: 2 });
    }

    #[test]
    fn budget_power_of_two_product() {
        let plan = plan_budgets(&(BigInt::one() << 20u32), 1, BudgetMode::Symmetric).unwrap();
        assert_eq!(plan, SplitPlan { k_a: 9, k_b: 9 });
    }

    #[test]
    fn budget_guarantees_uniqueness_margin() {
        // 2 * q * 2^(k_a + k_b) < M must hold for the planned budgets
        for &(bits, q) in &[(16u32, 3u64), (40, 100), (64, 1024), (127, 65536)] {
            let m = (BigInt::one() << bits) + 5;
            let plan = plan_budgets(&m, q, BudgetMode::Symmetric).unwrap();
            let naive = BigInt::from(q) << ((plan.k_a + plan.k_b) as usize);
            assert!(naive * 2 < m, "bits={bits} q={q}");
        }
    }

    #[test]
    fn budget_refuses_tiny_products() {
        assert!(matches!(
            plan_budgets(&BigInt::from(5), 2, BudgetMode::Symmetric),
            Err(Error::BudgetTooSmall)
        ));
        assert!(matches!(
            plan_budgets(&BigInt::from(105), 0, BudgetMode::Symmetric),
            Err(Error::ZeroArgument)
        ));
    }

    #[test]
    fn asymmetric_split() {
        let m = BigInt::one() << 41u32; // total 40 - 1 + ... compute: (2^41-2)/2 has 40 bits -> total 39
        let plan = plan_budgets(&m, 1, BudgetMode::Asymmetric { left_fraction: 0.75 }).unwrap();
        assert_eq!(plan.k_a + plan.k_b, 39);
        assert_eq!(plan.k_a, 29);
        assert!(plan_budgets(&m, 1, BudgetMode::Asymmetric { left_fraction: 1.5 }).is_err());
    }

    #[test]
    fn three_factor_budgets() {
        assert_eq!(plan_budgets_three(&BigInt::from(105), 1, 1).unwrap(), 1);
        assert_eq!(plan_budgets_three(&(BigInt::one() << 32u32), 2, 2).unwrap(), 9);
    }

    #[test]
    fn split_scales_rows_into_the_top_octave() {
        let sp = scale_and_truncate(&input(1, 2, &[1.0, 0.5]), 3, Side::Left, Rounding::TowardZero)
            .unwrap();
        assert_eq!(sp.exps(), &[2]);
        assert_eq!(sp.ints().get(0, 0), &BigInt::from(4));
        assert_eq!(sp.ints().get(0, 1), &BigInt::from(2));
    }

    #[test]
    fn split_right_side_works_per_column() {
        let sp = scale_and_truncate(
            &input(2, 2, &[1.0, 8.0, 0.5, 2.0]),
            3,
            Side::Right,
            Rounding::TowardZero,
        )
        .unwrap();
        // column maxima 1.0 and 8.0
        assert_eq!(sp.exps(), &[2, -1]);
        assert_eq!(sp.ints().get(0, 0), &BigInt::from(4));
        assert_eq!(sp.ints().get(1, 0), &BigInt::from(2));
        assert_eq!(sp.ints().get(0, 1), &BigInt::from(4));
        assert_eq!(sp.ints().get(1, 1), &BigInt::from(1));
    }

    #[test]
    fn zero_rows_keep_exponent_zero() {
        let sp = scale_and_truncate(
            &input(2, 2, &[0.0, 0.0, 1.0, 2.0]),
            4,
            Side::Left,
            Rounding::TowardZero,
        )
        .unwrap();
        assert_eq!(sp.exps(), &[0, 2]);
        assert!(sp.ints().get(0, 0).is_zero());
    }

    #[test]
    fn split_max_lands_in_top_octave() {
        let data = [0.3, -7.25, 1e-9, 0.125, 2.5e3, -0.625];
        for bits in [1u32, 2, 7, 24, 53, 80] {
            let sp = scale_and_truncate(&input(2, 3, &data), bits, Side::Left, Rounding::TowardZero)
                .unwrap();
            let lo = BigInt::one() << (bits - 1) as usize;
            let hi = BigInt::one() << bits as usize;
            for i in 0..2 {
                let mut mx = BigInt::zero();
                for j in 0..3 {
                    let a = sp.ints().get(i, j).abs();
                    if a > mx {
                        mx = a;
                    }
                }
                assert!(mx >= lo && mx < hi, "bits={bits} row={i} max={mx}");
            }
        }
    }

    #[test]
    fn multiword_split_is_exact_to_the_single_truncation() {
        let hi = MatrixF64::new(1, 1, vec![1.0]).unwrap();
        let lo = MatrixF64::new(1, 1, vec![(2f64).powi(-80)]).unwrap();
        let mw = MultiWordMatrix::new(vec![hi, lo]).unwrap();
        let sp = scale_and_truncate(
            &MatrixInput::from(mw),
            100,
            Side::Left,
            Rounding::TowardZero,
        )
        .unwrap();
        assert_eq!(sp.exps(), &[99]);
        let want = (BigInt::one() << 99u32) + (BigInt::one() << 19u32);
        assert_eq!(sp.ints().get(0, 0), &want);
    }

    #[test]
    fn nearest_rounds_and_saturates() {
        // scaled entries (2.0, 1.5): nearest ties-to-even turns 1.5 into 2
        let sp = scale_and_truncate(&input(1, 2, &[1.0, 0.75]), 2, Side::Left, Rounding::ToNearest)
            .unwrap();
        assert_eq!(sp.ints().get(0, 1), &BigInt::from(2));
        // k = 1 scales the max to 1.5, which would round to 2 = 2^bits; saturate
        let sp = scale_and_truncate(&input(1, 1, &[1.5]), 1, Side::Left, Rounding::ToNearest)
            .unwrap();
        assert_eq!(sp.ints().get(0, 0), &BigInt::one());
    }

    #[test]
    fn truncation_error_is_below_one_unit() {
        let data = [0.3, -7.25, 1e-9, 0.125, 2.5e3, -0.625];
        let inp = input(2, 3, &data);
        let sp = scale_and_truncate(&inp, 12, Side::Left, Rounding::TowardZero).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                // |x - int * 2^-exp| < 2^-exp, compared exactly as dyadics
                let (m, e) = inp.entry_dyadic(i, j);
                let int = sp.ints().get(i, j).clone();
                let ie = -sp.exps()[i];
                let lo = e.min(ie);
                let left = m << ((e - lo) as usize);
                let right = int << ((ie - lo) as usize);
                let diff = (left - right).abs();
                let unit = BigInt::one() << ((ie - lo) as usize);
                assert!(diff < unit, "({i},{j})");
            }
        }
    }

    #[test]
    fn bound_methods_are_ordered_and_pinned() {
        let a = BigIntMatrix::from_i64(2, 2, &[1, 2, 3, 4]).unwrap();
        let b = BigIntMatrix::from_i64(2, 2, &[5, 6, 7, 8]).unwrap();
        let mp = estimate_bound(&a, &b, BoundMethod::MagnitudeProduct, None).unwrap();
        let cs = estimate_bound(&a, &b, BoundMethod::CauchySchwarz, None).unwrap();
        let nv = estimate_bound(&a, &b, BoundMethod::Naive, Some((3, 4))).unwrap();
        assert_eq!(mp.c_max, BigInt::from(50));
        assert_eq!(cs.c_max, BigInt::from(50));
        assert_eq!(nv.c_max, BigInt::from(2) << 7u32);
        assert!(mp.c_max <= cs.c_max && cs.c_max <= nv.c_max);
        assert!(estimate_bound(&a, &b, BoundMethod::Naive, None).is_err());
    }

    #[test]
    fn cauchy_schwarz_separates_from_magnitude_product() {
        // orthogonal-ish rows make Cauchy-Schwarz strictly looser
        let a = BigIntMatrix::from_i64(1, 2, &[3, 4]).unwrap();
        let b = BigIntMatrix::from_i64(2, 1, &[4, -3]).unwrap();
        let mp = estimate_bound(&a, &b, BoundMethod::MagnitudeProduct, None).unwrap();
        let cs = estimate_bound(&a, &b, BoundMethod::CauchySchwarz, None).unwrap();
        assert_eq!(mp.c_max, BigInt::from(24));
        assert_eq!(cs.c_max, BigInt::from(25));
    }

    #[test]
    fn magnitude_product_bigint_path_matches_i128_path() {
        // huge entries force the BigInt branch
        let big = 1i64 << 62;
        let a = BigIntMatrix::from_i64(1, 2, &[big, -big]).unwrap();
        let mut a_big = BigIntMatrix::zeros(1, 2);
        a_big.set(0, 0, BigInt::from(big) << 80u32);
        a_big.set(0, 1, -(BigInt::from(big) << 80u32));
        let b = BigIntMatrix::from_i64(2, 1, &[big, big]).unwrap();
        let small = estimate_bound(&a, &b, BoundMethod::MagnitudeProduct, None).unwrap();
        let large = estimate_bound(&a_big, &b, BoundMethod::MagnitudeProduct, None).unwrap();
        assert_eq!(large.c_max, small.c_max.clone() << 80u32);
        assert_eq!(small.c_max, (BigInt::from(big) * big) * 2);
    }

    #[test]
    fn residues_cover_every_modulus() {
        let x = BigIntMatrix::from_i64(1, 2, &[300, -300]).unwrap();
        let rs = residues_of(&x, &[256, 255]).unwrap();
        assert_eq!(rs.len(), 2);
        assert_eq!(rs[0].get(0, 0), &BigInt::from(44));
        assert_eq!(rs[1].get(0, 0), &BigInt::from(45));
        assert_eq!(rs[0].get(0, 1), &BigInt::from(-44));
        assert_eq!(rs[1].get(0, 1), &BigInt::from(-45));
    }
}
