//! Seeded matrix generation. One ChaCha8 stream per matrix, consumed
//! single-threaded, so output is bit-reproducible regardless of how many
//! threads the caller runs elsewhere.

use ozmm_core::{MatrixF64, MultiWordMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GenKind {
    /// Standard normal entries.
    Randn,
    /// (rand - 0.5) * exp(phi * randn) with rand uniform on (0, 1];
    /// phi controls the exponent spread.
    PhiLognormal(f64),
    Constant(f64),
    /// Uniform integers in [lo, hi], stored as binary64.
    IntegerUniform(i64, i64),
}

#[derive(Debug, Clone, Copy)]
pub struct GeneratorSpec {
    pub kind: GenKind,
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
}

/// Uniform on (0, 1]: the complement of the generator's [0, 1) draw, so a
/// logarithm of the result is always finite.
fn rand_open(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.gen::<f64>()
}

/// Box-Muller transform: z = sqrt(-2 ln u1) * cos(2 pi u2). Chosen over a
/// rejection method so the number of draws per variate is fixed, which keeps
/// streams aligned and portable.
fn randn(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = rand_open(rng);
    let u2 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (core::f64::consts::TAU * u2).cos()
}

fn draw(kind: GenKind, rng: &mut ChaCha8Rng) -> f64 {
    match kind {
        GenKind::Randn => randn(rng),
        GenKind::PhiLognormal(phi) => loop {
            let v = (rand_open(rng) - 0.5) * (phi * randn(rng)).exp();
            // rand = 0.5 exactly would produce a zero entry; redraw
            if v != 0.0 {
                break v;
            }
        },
        GenKind::Constant(c) => c,
        GenKind::IntegerUniform(lo, hi) => rng.gen_range(lo..=hi) as f64,
    }
}

fn check(spec: &GeneratorSpec) -> Result<()> {
    if spec.rows == 0 || spec.cols == 0 {
        return Err(CliError::Format("matrix dimensions must be positive".into()));
    }
    match spec.kind {
        GenKind::PhiLognormal(phi) if !phi.is_finite() || phi < 0.0 => Err(CliError::Format(
            "phi must be finite and non-negative".into(),
        )),
        GenKind::Constant(c) if !c.is_finite() => {
            Err(CliError::Format("constant value must be finite".into()))
        }
        GenKind::IntegerUniform(lo, hi) if lo > hi => {
            Err(CliError::Format("integer range is empty".into()))
        }
        _ => Ok(()),
    }
}

pub fn generate(spec: &GeneratorSpec) -> Result<MatrixF64> {
    check(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let data = (0..spec.rows * spec.cols)
        .map(|_| draw(spec.kind, &mut rng))
        .collect();
    Ok(MatrixF64::new(spec.rows, spec.cols, data)?)
}

/// Multi-word matrix: the head word follows `spec`, then each further word
/// scatters u * uniform(-0.5, 0.5] of the previous one, keeping the strict
/// non-overlap the multi-word type requires.
pub fn generate_multiword(spec: &GeneratorSpec, words: usize) -> Result<MultiWordMatrix> {
    if words == 0 {
        return Err(CliError::Format("word count must be positive".into()));
    }
    check(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let head: Vec<f64> = (0..spec.rows * spec.cols)
        .map(|_| draw(spec.kind, &mut rng))
        .collect();
    let mut mats = vec![MatrixF64::new(spec.rows, spec.cols, head)?];
    const U: f64 = f64::EPSILON / 2.0;
    for t in 1..words {
        let prev = mats[t - 1].data().to_vec();
        let data = prev
            .iter()
            .map(|&p| p * U * (0.5 - rng.gen::<f64>()))
            .collect();
        mats.push(MatrixF64::new(spec.rows, spec.cols, data)?);
    }
    Ok(MultiWordMatrix::new(mats)?)
}
