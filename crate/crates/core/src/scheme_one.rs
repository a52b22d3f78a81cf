//! Conventional slice-based emulation, the baseline the residue pipeline
//! is measured against.
//!
//! Each factor is cut into slices narrow enough that slice-by-slice
//! products are exact in binary64, and the product is assembled from the
//! pairs whose magnitude matters. k slices per factor cost k(k+1)/2 GEMMs,
//! against the residue pipeline's one GEMM per modulus.

use alloc::vec;
use alloc::vec::Vec;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::fp;
use crate::matrix::{MatrixF64, MatrixInput, MatrixOutput};
use crate::oracle::{exact_matmul, ErrorReport};
use crate::split::Side;

/// How the last slice is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Os1Mode {
    /// k - 1 extracted slices plus the exact leftover as the k-th factor.
    /// Binary64 inputs only; with k = 1 this is a plain binary64 GEMM.
    Full,
    /// k extracted slices; whatever remains after the k-th is dropped.
    Truncated,
}

/// Slice count and assembly mode for one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeOneConfig {
    pub k: usize,
    pub mode: Os1Mode,
}

/// Slice width so that a q-deep inner product of two slices stays exact:
/// floor((53 - ceil(log2 q)) / 2) bits.
fn slice_width(q: usize) -> Result<u32> {
    if q == 0 {
        return Err(Error::ZeroArgument);
    }
    let c = 64 - ((q as u64) - 1).leading_zeros() as i64;
    let w = (53 - c).div_euclid(2);
    if w < 1 {
        return Err(Error::SliceWidthUnusable { q });
    }
    Ok(w as u32)
}

/// A factor cut into magnitude-ordered slices.
///
/// Slice t of a row (left side) or column (right side) holds that group's
/// bits from roughly `width * t` to `width * (t + 1)` below its leading
/// bit. For binary64 inputs the leftover after the last slice is kept
/// exactly; multi-word inputs have no binary64-representable remainder.
#[derive(Debug, Clone)]
pub struct SliceDecomposition {
    slices: Vec<MatrixF64>,
    remainder: Option<MatrixF64>,
    width: u32,
    side: Side,
}

impl SliceDecomposition {
    pub fn slices(&self) -> &[MatrixF64] {
        &self.slices
    }

    pub fn remainder(&self) -> Option<&MatrixF64> {
        self.remainder.as_ref()
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn side(&self) -> Side {
        self.side
    }

    fn into_parts(self) -> (Vec<MatrixF64>, Option<MatrixF64>) {
        (self.slices, self.remainder)
    }
}

fn group_indices(side: Side, g: usize, t: usize) -> (usize, usize) {
    match side {
        Side::Left => (g, t),
        Side::Right => (t, g),
    }
}

/// Extraction by the scalar-offset trick: adding sigma = 2^(tau + 53 - w)
/// and subtracting it again leaves exactly the top w-ish bits of every
/// entry below 2^tau, and the removal is exact.
fn extract_f64(
    m: &MatrixF64,
    width: u32,
    count: usize,
    side: Side,
) -> Result<(Vec<MatrixF64>, MatrixF64)> {
    let (rows, cols) = (m.rows(), m.cols());
    let (groups, group_len) = match side {
        Side::Left => (rows, cols),
        Side::Right => (cols, rows),
    };
    let mut work = m.clone();
    let mut slices = vec![MatrixF64::zeros(rows, cols); count];
    for g in 0..groups {
        let mut mx = 0.0f64;
        for t in 0..group_len {
            let (i, j) = group_indices(side, g, t);
            let a = fp::abs(m.get(i, j));
            if a > mx {
                mx = a;
            }
        }
        if mx == 0.0 {
            continue;
        }
        let tau = fp::pow2_scale_exponent(mx)? as i64 + 1;
        for (t, slice) in slices.iter_mut().enumerate() {
            let sig_exp = tau + 53 - (width as i64) * (t as i64 + 1);
            if sig_exp > 1023 {
                return Err(Error::Overflow);
            }
            if sig_exp < -1000 {
                // the rest is already far below one ulp of the result;
                // take it whole rather than offsetting with subnormals
                for u in 0..group_len {
                    let (i, j) = group_indices(side, g, u);
                    slice.set(i, j, work.get(i, j));
                    work.set(i, j, 0.0);
                }
                break;
            }
            let sigma = fp::pow2(sig_exp);
            for u in 0..group_len {
                let (i, j) = group_indices(side, g, u);
                let a = work.get(i, j);
                let s = (sigma + a) - sigma;
                slice.set(i, j, s);
                work.set(i, j, a - s);
            }
        }
    }
    Ok((slices, work))
}

/// Rounds the dyadic m * 2^e to the nearest multiple of 2^g (ties to
/// even), returning the multiple count.
fn round_to_grid(m: &BigInt, e: i64, g: i64) -> BigInt {
    if e >= g {
        return m << ((e - g) as usize);
    }
    let s = (g - e) as usize;
    let mag = m.abs();
    let q0 = &mag >> s;
    let rem = &mag - (&q0 << s);
    let up = match (&rem * 2u32).cmp(&(BigInt::from(1) << s)) {
        core::cmp::Ordering::Greater => true,
        core::cmp::Ordering::Equal => q0.is_odd(),
        core::cmp::Ordering::Less => false,
    };
    let q = if up { q0 + 1 } else { q0 };
    if m.is_negative() {
        -q
    } else {
        q
    }
}

/// Multi-word inputs are sliced on the same per-group bit grid, but through
/// exact integer arithmetic, since the unevaluated sum cannot ride the
/// scalar-offset trick.
fn extract_exact(
    input: &MatrixInput,
    width: u32,
    count: usize,
    side: Side,
) -> Result<Vec<MatrixF64>> {
    let (rows, cols) = (input.rows(), input.cols());
    let (groups, group_len) = match side {
        Side::Left => (rows, cols),
        Side::Right => (cols, rows),
    };
    let mut slices = vec![MatrixF64::zeros(rows, cols); count];
    for g in 0..groups {
        let mut entries: Vec<(BigInt, i64)> = Vec::with_capacity(group_len);
        let mut mx: Option<(BigInt, i64)> = None;
        for t in 0..group_len {
            let (i, j) = group_indices(side, g, t);
            let (m, e) = input.entry_dyadic(i, j);
            if !m.is_zero() {
                let mag = m.abs();
                mx = Some(match mx {
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
            entries.push((m, e));
        }
        let Some((mm, me)) = mx else { continue };
        let tau = fp::dyadic_floor_log2(&mm, me) + 1;
        for (t, slice) in slices.iter_mut().enumerate() {
            // same grid the binary64 path rounds on: ulp of its sigma
            let grid = tau + 1 - (width as i64) * (t as i64 + 1);
            for (u, (m, e)) in entries.iter_mut().enumerate().take(group_len) {
                if m.is_zero() {
                    continue;
                }
                let n = round_to_grid(m, *e, grid);
                if n.is_zero() {
                    continue;
                }
                let (i, j) = group_indices(side, g, u);
                slice.set(i, j, fp::dyadic_to_f64_nearest(&n, grid)?);
                let lo = (*e).min(grid);
                *m = (&*m << ((*e - lo) as usize)) - (&n << ((grid - lo) as usize));
                *e = lo;
            }
        }
    }
    Ok(slices)
}

/// Cuts a factor into `count` slices of `width` bits per group.
pub fn split_slices(
    input: &MatrixInput,
    width: u32,
    count: usize,
    side: Side,
) -> Result<SliceDecomposition> {
    if width == 0 {
        return Err(Error::SliceWidthUnusable { q: 0 });
    }
    input.ensure_finite()?;
    match input {
        MatrixInput::F64(m) => {
            let (slices, remainder) = extract_f64(m, width, count, side)?;
            Ok(SliceDecomposition {
                slices,
                remainder: Some(remainder),
                width,
                side,
            })
        }
        MatrixInput::MultiWord(_) => Ok(SliceDecomposition {
            slices: extract_exact(input, width, count, side)?,
            remainder: None,
            width,
            side,
        }),
    }
}

/// What one slice-scheme run produced and what it cost.
#[derive(Debug, Clone)]
pub struct Os1Result {
    pub output: MatrixF64,
    pub gemm_count: u64,
    pub slice_width: u32,
    pub slices_used: usize,
}

/// Multiplies via slice products, accumulating the k(k+1)/2 pairs with
/// 1-based indices i + j <= k + 1 in binary64, largest magnitudes first
/// (ascending i + j, then ascending i).
pub fn ozaki1_matmul(
    a: &MatrixInput,
    b: &MatrixInput,
    cfg: &SchemeOneConfig,
) -> Result<Os1Result> {
    if a.cols() != b.rows() {
        return Err(Error::ShapeMismatch("inner dimensions must agree".into()));
    }
    a.ensure_finite()?;
    b.ensure_finite()?;
    if cfg.k == 0 {
        return Err(Error::InvalidParameter("at least one slice required".into()));
    }
    let w = slice_width(a.cols())?;
    let k = cfg.k;
    let (fa, fb) = match cfg.mode {
        Os1Mode::Truncated => {
            let sa = split_slices(a, w, k, Side::Left)?;
            let sb = split_slices(b, w, k, Side::Right)?;
            (sa.into_parts().0, sb.into_parts().0)
        }
        Os1Mode::Full => {
            if matches!(a, MatrixInput::MultiWord(_)) || matches!(b, MatrixInput::MultiWord(_)) {
                return Err(Error::InvalidParameter(
                    "full mode needs binary64 inputs; multi-word factors use truncated".into(),
                ));
            }
            let sa = split_slices(a, w, k - 1, Side::Left)?;
            let sb = split_slices(b, w, k - 1, Side::Right)?;
            let (mut va, ra) = sa.into_parts();
            let (mut vb, rb) = sb.into_parts();
            va.push(ra.expect("binary64 split always keeps its remainder"));
            vb.push(rb.expect("binary64 split always keeps its remainder"));
            (va, vb)
        }
    };
    let mut c = MatrixF64::zeros(a.rows(), b.cols());
    let mut count = 0u64;
    for d in 2..=(k + 1) {
        for i in 1usize.max(d.saturating_sub(k))..=(k.min(d - 1)) {
            let j = d - i;
            let p = fa[i - 1].mul_f64(&fb[j - 1])?;
            c.add_assign(&p)?;
            count += 1;
        }
    }
    debug_assert_eq!(count as usize, k * (k + 1) / 2);
    Ok(Os1Result {
        output: c,
        gemm_count: count,
        slice_width: w,
        slices_used: k,
    })
}

/// Runs the slice scheme at each requested k and reports cost and accuracy
/// against the exact product.
pub fn ozaki1_error_curve(
    a: &MatrixInput,
    b: &MatrixInput,
    ks: &[usize],
    mode: Os1Mode,
) -> Result<Vec<(usize, u64, ErrorReport)>> {
    let exact = exact_matmul(a, b)?;
    let mut out = Vec::with_capacity(ks.len());
    for &k in ks {
        let r = ozaki1_matmul(a, b, &SchemeOneConfig { k, mode })?;
        let rep = ErrorReport::between(&exact, &MatrixOutput::F64(r.output))?;
        out.push((k, r.gemm_count, rep));
    }
    Ok(out)
}
