//! Emulation of high-precision matrix multiplication through exact integer
//! arithmetic over a set of pairwise coprime moduli.
//!
//! The pipeline scales the inputs to integer matrices, multiplies their
//! residues modulo each small modulus with an exact low-precision backend,
//! recombines the residue products by the Chinese remainder theorem, and
//! scales back. As long as the true integer product stays below half the
//! modulus product, the reconstruction is exact, so the only rounding in the
//! whole computation is the initial truncation and the final conversion to
//! binary64 (or to an unevaluated multi-word sum).
//!
//! The crate is `no_std` + `alloc`; everything here is pure computation.
//! File formats, matrix generators and the benchmark command line live in
//! the companion `ozmm-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod backend;
pub mod crt;
pub mod error;
pub mod fp;
pub mod matrix;
pub mod modular;
pub mod oracle;
pub mod reconstruct;
pub mod scheme_one;
pub mod split;

pub use backend::{BackendKind, ExactBackend, ResidueProduct};
pub use crt::{
    build_crt_table, build_fp64_modulus_set, build_int8_modulus_set, crt_reconstruct,
    int8_modulus_chain, max_int8_moduli, CrtTable, ModulusSet, Regime,
};
pub use error::{Error, Result};
pub use modular::{floor_mod, matrix_symmetric_mod, symmetric_mod, symmetric_mod_i128};
pub use matrix::{
    BigIntMatrix, IntegerMatrix32, IntegerMatrix8, MatrixF64, MatrixInput, MatrixOutput,
    MultiWordMatrix,
};
pub use oracle::{brute_force_crt, exact_matmul, ErrorReport, ExactMatrix};
pub use reconstruct::{
    accumulate_and_reduce, check_uniqueness, inverse_scale_to_f64, inverse_scale_to_multiword,
    ozaki2_matmul, Os2Options, Os2Result, OutputFormat, ReconstructedMatrix,
};
pub use scheme_one::{
    ozaki1_error_curve, ozaki1_matmul, split_slices, Os1Mode, Os1Result, SchemeOneConfig,
    SliceDecomposition,
};
pub use split::{
    estimate_bound, plan_budgets, plan_budgets_three, residues_of, scale_and_truncate,
    BoundEstimate, BoundMethod, BudgetMode, Rounding, ScaledIntPair, Side, SplitPlan,
};
