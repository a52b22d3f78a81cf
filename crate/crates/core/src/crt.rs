//! Modulus selection and Chinese-remainder recombination.
//!
//! Two supply regimes exist. The 8-bit regime draws from a fixed chain of
//! pairwise coprime integers <= 256, whose residues (under the symmetric
//! remainder) always fit a signed byte. The binary64 regime draws descending
//! primes below a power-of-two cap chosen so that an inner product of
//! residues is exactly representable in binary64 for the supported inner
//! dimension.

use alloc::vec::Vec;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::matrix::BigIntMatrix;
use crate::modular;

/// Residue word size and exactness envelope for the multiplication backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Moduli <= 256; residues live in a signed byte.
    Int8,
    /// Prime moduli sized so that an inner dimension up to `q_max` keeps
    /// residue inner products exact in binary64 accumulation.
    Fp64 { q_max: u64 },
}

/// First sixteen entries of the 8-bit modulus chain, as published for the
/// 8-bit residue scheme. Note 241 is absent even though it is coprime to
/// everything above it; the chain is pinned to match, and a greedy
/// continuation (which then picks 241 first) extends it.
const INT8_PINNED: [u64; 16] = [
    256, 255, 253, 251, 247, 239, 233, 229, 227, 223, 217, 211, 199, 197, 193, 191,
];

fn coprime_u64(a: u64, b: u64) -> bool {
    a.gcd(&b) == 1
}

/// Full 8-bit modulus chain: the pinned prefix, then every remaining
/// integer in (2..=256) coprime to all accepted so far, scanned once in
/// descending order.
pub fn int8_modulus_chain() -> Vec<u64> {
    let mut chain: Vec<u64> = INT8_PINNED.to_vec();
    for n in (2..=256u64).rev() {
        if chain.contains(&n) {
            continue;
        }
        if chain.iter().all(|&m| coprime_u64(m, n)) {
            chain.push(n);
        }
    }
    chain
}

/// Number of moduli the 8-bit regime can supply before the coprime chain
/// is exhausted.
pub fn max_int8_moduli() -> usize {
    int8_modulus_chain().len()
}

/// A validated, descending, pairwise coprime modulus list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModulusSet {
    moduli: Vec<u64>,
    regime: Regime,
}

impl ModulusSet {
    /// Validates descending order, m >= 2, pairwise coprimality, and the
    /// regime's size envelope.
    pub fn new(moduli: Vec<u64>, regime: Regime) -> Result<Self> {
        if moduli.is_empty() {
            return Err(Error::InvalidModulus(0));
        }
        for &m in &moduli {
            if m < 2 {
                return Err(Error::InvalidModulus(m));
            }
            match regime {
                Regime::Int8 => {
                    if m > 256 {
                        return Err(Error::InvalidModulus(m));
                    }
                }
                Regime::Fp64 { q_max } => {
                    // q_max * m^2 <= 2^55 keeps residue inner products exact.
                    let m2 = (m as u128) * (m as u128);
                    if (q_max as u128).saturating_mul(m2) > 1u128 << 55 {
                        return Err(Error::InvalidModulus(m));
                    }
                }
            }
        }
        for w in moduli.windows(2) {
            if w[0] <= w[1] {
                return Err(Error::InvalidParameter(
                    "moduli must be strictly descending".into(),
                ));
            }
        }
        for i in 0..moduli.len() {
            for j in i + 1..moduli.len() {
                if !coprime_u64(moduli[i], moduli[j]) {
                    return Err(Error::NotCoprime {
                        a: moduli[i],
                        b: moduli[j],
                    });
                }
            }
        }
        Ok(Self { moduli, regime })
    }

    pub fn s(&self) -> usize {
        self.moduli.len()
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// Product of all moduli.
    pub fn product(&self) -> BigInt {
        let mut m = BigInt::one();
        for &v in &self.moduli {
            m *= v;
        }
        m
    }
}

/// First `s` entries of the 8-bit chain, descending.
pub fn build_int8_modulus_set(s: usize) -> Result<ModulusSet> {
    let chain = int8_modulus_chain();
    if s == 0 || s > chain.len() {
        return Err(Error::ModulusSupplyExhausted {
            requested: s,
            available: chain.len(),
        });
    }
    let mut moduli: Vec<u64> = chain[..s].to_vec();
    moduli.sort_unstable_by(|a, b| b.cmp(a));
    ModulusSet::new(moduli, Regime::Int8)
}

fn ceil_log2_u64(q: u64) -> u32 {
    debug_assert!(q >= 1);
    64 - (q - 1).leading_zeros()
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// The `s` largest primes below the power-of-two cap
/// 2^floor((55 - ceil(log2 q_max)) / 2), descending.
///
/// The cap guarantees q_max * m^2 <= 2^55 for every selected prime, which is
/// the exactness envelope of binary64 residue accumulation.
pub fn build_fp64_modulus_set(s: usize, q_max: u64) -> Result<ModulusSet> {
    if s == 0 {
        return Err(Error::ModulusSupplyExhausted {
            requested: 0,
            available: 0,
        });
    }
    if q_max == 0 {
        return Err(Error::InvalidParameter("q_max must be positive".into()));
    }
    let budget = 55i64 - ceil_log2_u64(q_max) as i64;
    let cap_exp = budget.div_euclid(2);
    if cap_exp < 2 {
        // cap <= 2: no prime p >= 2 with p < cap... cap = 2 admits nothing below it.
        return Err(Error::ModulusSupplyExhausted {
            requested: s,
            available: 0,
        });
    }
    let cap = 1u64 << cap_exp;
    let mut moduli = Vec::with_capacity(s);
    let mut n = cap - 1;
    while moduli.len() < s && n >= 2 {
        if is_prime_u64(n) {
            moduli.push(n);
        }
        if n == 2 {
            break;
        }
        n -= 1;
    }
    if moduli.len() < s {
        return Err(Error::ModulusSupplyExhausted {
            requested: s,
            available: moduli.len(),
        });
    }
    ModulusSet::new(moduli, Regime::Fp64 { q_max })
}

/// Precomputed reconstruction weights for one modulus set.
///
/// M is the modulus product; for each modulus, weight_i = (M/m_i) * y_i
/// where y_i inverts M/m_i modulo m_i. Any integer congruent to r_i mod m_i
/// for all i is congruent to sum(r_i * weight_i) mod M.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrtTable {
    set: ModulusSet,
    m_big: BigInt,
    cofactors: Vec<BigInt>,
    inverses: Vec<u64>,
    weights: Vec<BigInt>,
}

/// Modular inverse by extended Euclid; None if gcd(a, m) != 1.
pub(crate) fn mod_inverse_u64(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = ((a % m) as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

pub fn build_crt_table(set: &ModulusSet) -> Result<CrtTable> {
    let m_big = set.product();
    let mut cofactors = Vec::with_capacity(set.s());
    let mut inverses = Vec::with_capacity(set.s());
    let mut weights = Vec::with_capacity(set.s());
    for &m in set.moduli() {
        let cof = &m_big / m;
        let cof_mod: u64 = (&cof % m).try_into().map_err(|_| Error::InvalidModulus(m))?;
        let y = mod_inverse_u64(cof_mod, m).ok_or(Error::NotCoprime { a: cof_mod, b: m })?;
        // verify the defining congruence before trusting the table
        let check = (&cof * y) % m;
        if check != BigInt::one() {
            return Err(Error::NotCoprime { a: cof_mod, b: m });
        }
        weights.push(&cof * y);
        cofactors.push(cof);
        inverses.push(y);
    }
    Ok(CrtTable {
        set: set.clone(),
        m_big,
        cofactors,
        inverses,
        weights,
    })
}

impl CrtTable {
    pub fn set(&self) -> &ModulusSet {
        &self.set
    }

    pub fn moduli(&self) -> &[u64] {
        self.set.moduli()
    }

    pub fn s(&self) -> usize {
        self.set.s()
    }

    /// The modulus product M.
    pub fn modulus_product(&self) -> &BigInt {
        &self.m_big
    }

    /// M / m_i.
    pub fn cofactors(&self) -> &[BigInt] {
        &self.cofactors
    }

    /// y_i with (M/m_i) * y_i == 1 (mod m_i).
    pub fn inverses(&self) -> &[u64] {
        &self.inverses
    }

    /// w_i = (M/m_i) * y_i.
    pub fn weights(&self) -> &[BigInt] {
        &self.weights
    }
}

/// Recombines per-modulus residue matrices into the symmetric representative
/// modulo M.
///
/// Residue entries may follow either remainder convention: anything in
/// [-m_i/2, m_i) is accepted; entries outside that window are treated as
/// corruption and refused.
pub fn crt_reconstruct(residues: &[BigIntMatrix], table: &CrtTable) -> Result<BigIntMatrix> {
    if residues.len() != table.s() {
        return Err(Error::ShapeMismatch(
            "one residue matrix per modulus required".into(),
        ));
    }
    let (rows, cols) = match residues.first() {
        Some(r) => (r.rows(), r.cols()),
        None => return Err(Error::ShapeMismatch("empty residue list".into())),
    };
    for (r, &m) in residues.iter().zip(table.moduli()) {
        if r.rows() != rows || r.cols() != cols {
            return Err(Error::ShapeMismatch(
                "residue matrices must share one shape".into(),
            ));
        }
        let m_big = BigInt::from(m);
        for v in r.data() {
            let two_v = v * 2;
            if two_v < -&m_big || v >= &m_big {
                return Err(Error::ResidueOutOfRange);
            }
        }
    }
    let mut out = BigIntMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let mut acc = BigInt::zero();
            for (r, w) in residues.iter().zip(table.weights()) {
                acc += r.get(i, j) * w;
            }
            out.set(i, j, modular::symmetric_mod(&acc, &table.m_big)?);
        }
    }
    Ok(out)
}
