//! End-to-end runs of both schemes against the exact oracle on fixed data.

use ozmm_core::{
    build_fp64_modulus_set, build_int8_modulus_set, exact_matmul, ozaki1_matmul, ozaki2_matmul,
    BackendKind, ErrorReport, MatrixF64, MatrixInput, MatrixOutput, MultiWordMatrix, Os1Mode,
    Os2Options, OutputFormat, SchemeOneConfig,
};

// Deterministic fill with spread-out magnitudes; enough structure to exercise
// per-row and per-column scaling without any RNG dependency in this crate.
fn fill(rows: usize, cols: usize, seed: u64) -> MatrixF64 {
    let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).max(1);
    let mut data = Vec::with_capacity(rows * cols);
    for idx in 0..rows * cols {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        let unit = (state >> 11) as f64 / (1u64 << 53) as f64;
        let scale = [1.0, 1e-3, 1e3, 1e-6][idx % 4];
        data.push((unit - 0.5) * scale);
    }
    MatrixF64::new(rows, cols, data).unwrap()
}

#[test]
fn fp64_regime_reaches_deep_accuracy_on_mixed_magnitudes() {
    let a = MatrixInput::from(fill(8, 8, 1));
    let b = MatrixInput::from(fill(8, 8, 2));
    let set = build_fp64_modulus_set(16, 1024).unwrap();
    let opts = Os2Options {
        backend: BackendKind::Fp64Exact,
        ..Os2Options::default()
    };
    let res = ozaki2_matmul(&a, &b, &set, &opts).unwrap();
    assert_eq!(res.gemm_count, 16);
    assert!(res.reconstructed.certified_unique);
    let exact = exact_matmul(&a, &b).unwrap();
    let report = ErrorReport::between(&exact, &res.output).unwrap();
    // k per side is in the 80s here; the residual error is pure output
    // rounding, far below f64 working precision
    assert!(report.max_rel_err <= 1e-15, "rel err {}", report.max_rel_err);
}

#[test]
fn int8_regime_matches_plain_f64_quality_with_sixteen_products() {
    let a = MatrixInput::from(fill(8, 8, 3));
    let b = MatrixInput::from(fill(8, 8, 4));
    let set = build_int8_modulus_set(16).unwrap();
    let opts = Os2Options {
        backend: BackendKind::Int8Sim,
        ..Os2Options::default()
    };
    let res = ozaki2_matmul(&a, &b, &set, &opts).unwrap();
    assert_eq!(res.gemm_count, 16);
    let exact = exact_matmul(&a, &b).unwrap();
    let report = ErrorReport::between(&exact, &res.output).unwrap();
    assert!(report.max_rel_err <= 1e-10, "rel err {}", report.max_rel_err);
}

#[test]
fn backends_produce_bitwise_identical_pipelines() {
    let a = MatrixInput::from(fill(6, 9, 5));
    let b = MatrixInput::from(fill(9, 5, 6));
    let set = build_int8_modulus_set(12).unwrap();
    let mut outputs = Vec::new();
    for backend in [BackendKind::Int8Sim, BackendKind::Fp64Exact, BackendKind::BigIntRef] {
        let opts = Os2Options {
            backend,
            ..Os2Options::default()
        };
        let res = ozaki2_matmul(&a, &b, &set, &opts).unwrap();
        outputs.push(res.output.as_f64().unwrap().data().to_vec());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
}

#[test]
fn quad_word_inputs_come_back_with_quad_word_accuracy() {
    // two-word inputs whose tails sit ~2^-55 below the heads, multiplied with
    // a modulus set wide enough to capture the full four-word product
    let n = 4;
    let head_a = fill(n, n, 7);
    let head_b = fill(n, n, 8);
    let mut tail_a = fill(n, n, 9);
    let mut tail_b = fill(n, n, 10);
    // fill() stays within +-500, so dividing by 4096 keeps every tail
    // strictly below u * |head| as the word-order invariant requires
    for (t, h) in tail_a.data_mut().iter_mut().zip(head_a.data()) {
        *t *= h * (f64::EPSILON / 4096.0);
    }
    for (t, h) in tail_b.data_mut().iter_mut().zip(head_b.data()) {
        *t *= h * (f64::EPSILON / 4096.0);
    }
    let a = MatrixInput::from(MultiWordMatrix::new(vec![head_a.clone(), tail_a]).unwrap());
    let b = MatrixInput::from(MultiWordMatrix::new(vec![head_b.clone(), tail_b]).unwrap());
    let set = build_fp64_modulus_set(20, 1024).unwrap();
    let opts = Os2Options {
        backend: BackendKind::Fp64Exact,
        output: OutputFormat::MultiWord(4),
        ..Os2Options::default()
    };
    let res = ozaki2_matmul(&a, &b, &set, &opts).unwrap();
    assert_eq!(res.gemm_count, 20);
    let exact = exact_matmul(&a, &b).unwrap();
    let report = ErrorReport::between(&exact, &res.output).unwrap();
    assert!(report.max_rel_err <= 1e-60, "rel err {}", report.max_rel_err);

    // dropping the tails must cost accuracy, or the tails were never real
    let ha = MatrixInput::from(head_a);
    let hb = MatrixInput::from(head_b);
    let res_heads = ozaki2_matmul(&ha, &hb, &set, &opts).unwrap();
    let report_heads = ErrorReport::between(&exact, &res_heads.output).unwrap();
    assert!(report_heads.max_rel_err > report.max_rel_err * 1e6);
}

#[test]
fn scheme_comparison_runs_on_shared_data() {
    let a = MatrixInput::from(fill(8, 8, 11));
    let b = MatrixInput::from(fill(8, 8, 12));
    let exact = exact_matmul(&a, &b).unwrap();

    let set = build_int8_modulus_set(10).unwrap();
    let os2 = ozaki2_matmul(&a, &b, &set, &Os2Options::default()).unwrap();
    let os2_report = ErrorReport::between(&exact, &os2.output).unwrap();

    let cfg = SchemeOneConfig {
        k: 4,
        mode: Os1Mode::Truncated,
    };
    let os1 = ozaki1_matmul(&a, &b, &cfg).unwrap();
    let os1_report =
        ErrorReport::between(&exact, &MatrixOutput::F64(os1.output.clone())).unwrap();

    assert_eq!(os2.gemm_count, 10);
    assert_eq!(os1.gemm_count, 10);
    // matched multiplication budgets. Ten moduli buy ~37 bits per factor, so
    // the residue route lands in the 1e-9 band on this data; slicing keeps
    // exact pair products and is allowed to win at this size. The residue
    // route pulls ahead only once the inputs carry more than one word.
    assert!(os2_report.max_rel_err <= 1e-7, "os2 {}", os2_report.max_rel_err);
    assert!(os1_report.max_rel_err <= 1e-12, "os1 {}", os1_report.max_rel_err);
}
