//! Randomized invariants: every claim here is a structural property of the
//! pipeline, checked against exact arithmetic rather than tolerances.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

use ozmm_core::{
    brute_force_crt, build_crt_table, build_int8_modulus_set, crt_reconstruct, estimate_bound,
    exact_matmul, fp, ozaki2_matmul, scale_and_truncate, symmetric_mod_i128, BackendKind,
    BigIntMatrix, BoundMethod, ExactBackend, MatrixF64, MatrixInput, ModulusSet, Os2Options,
    Regime, Rounding, Side,
};

fn mat(rows: usize, cols: usize, data: Vec<f64>) -> MatrixF64 {
    MatrixF64::new(rows, cols, data).unwrap()
}

fn dims_and_data(max: usize) -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1..=max, 1..=max).prop_flat_map(|(r, c)| {
        prop::collection::vec(-1000.0..1000.0f64, r * c).prop_map(move |d| (r, c, d))
    })
}

fn residue_matrix(modulus: u64, max: usize) -> impl Strategy<Value = (usize, usize, Vec<i64>)> {
    let lo = -((modulus as i64) / 2);
    let hi = (modulus as i64 - 1) / 2;
    (1..=max, 1..=max).prop_flat_map(move |(r, c)| {
        prop::collection::vec(lo..=hi, r * c).prop_map(move |d| (r, c, d))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn crt_roundtrip_inside_the_window(raw in any::<i64>(), s in 1usize..=4) {
        let set = build_int8_modulus_set(s).unwrap();
        let table = build_crt_table(&set).unwrap();
        let m_prod: i128 = set.moduli().iter().map(|&m| m as i128).product();
        let v = symmetric_mod_i128(raw as i128, m_prod);
        let residues: Vec<BigIntMatrix> = set
            .moduli()
            .iter()
            .map(|&m| {
                BigIntMatrix::from_i64(1, 1, &[symmetric_mod_i128(v, m as i128) as i64]).unwrap()
            })
            .collect();
        let x = crt_reconstruct(&residues, &table).unwrap();
        prop_assert_eq!(x.get(0, 0), &BigInt::from(v));
    }

    #[test]
    fn crt_reconstruction_agrees_with_brute_force(raw in any::<i64>()) {
        let moduli = [7u64, 5, 3];
        let v = symmetric_mod_i128(raw as i128, 105);
        let residues: Vec<i64> = moduli
            .iter()
            .map(|&m| symmetric_mod_i128(v, m as i128) as i64)
            .collect();
        let direct = brute_force_crt(&residues, &moduli).unwrap();
        prop_assert_eq!(&direct, &BigInt::from(v));

        let set = ModulusSet::new(moduli.to_vec(), Regime::Int8).unwrap();
        let table = build_crt_table(&set).unwrap();
        let mats: Vec<BigIntMatrix> = residues
            .iter()
            .map(|&r| BigIntMatrix::from_i64(1, 1, &[r]).unwrap())
            .collect();
        let x = crt_reconstruct(&mats, &table).unwrap();
        prop_assert_eq!(x.get(0, 0), &direct);
    }

    #[test]
    fn split_keeps_the_max_in_the_top_octave((r, c, data) in dims_and_data(5), bits in 1u32..40) {
        let input = MatrixInput::from(mat(r, c, data));
        let sp = scale_and_truncate(&input, bits, Side::Left, Rounding::TowardZero).unwrap();
        let lo = BigInt::one() << (bits - 1) as usize;
        let hi = BigInt::one() << bits as usize;
        for i in 0..r {
            let mut mx = BigInt::zero();
            let mut any_nonzero = false;
            for j in 0..c {
                let (m, _) = input.entry_dyadic(i, j);
                any_nonzero |= !m.is_zero();
                let a = sp.ints().get(i, j).abs();
                if a > mx {
                    mx = a;
                }
            }
            if any_nonzero {
                prop_assert!(mx >= lo && mx < hi, "row {i}: {mx}");
            } else {
                prop_assert!(mx.is_zero());
                prop_assert_eq!(sp.exps()[i], 0);
            }
        }
    }

    #[test]
    fn split_truncation_stays_below_one_unit((r, c, data) in dims_and_data(5), bits in 1u32..40) {
        let input = MatrixInput::from(mat(r, c, data));
        let sp = scale_and_truncate(&input, bits, Side::Left, Rounding::TowardZero).unwrap();
        for i in 0..r {
            for j in 0..c {
                let (m, e) = input.entry_dyadic(i, j);
                let ie = -sp.exps()[i];
                let lo = e.min(ie);
                let left = m << ((e - lo) as usize);
                let right = sp.ints().get(i, j).clone() << ((ie - lo) as usize);
                let unit = BigInt::one() << ((ie - lo) as usize);
                prop_assert!((left - right).abs() < unit);
            }
        }
    }

    #[test]
    fn bound_estimates_are_ordered(
        (n, q, a) in residue_matrix(2048, 4),
        p in 1usize..=4,
    ) {
        let bdata: Vec<i64> = a.iter().cycle().take(q * p).map(|v| v.wrapping_mul(7) % 1024).collect();
        let am = BigIntMatrix::from_i64(n, q, &a).unwrap();
        let bm = BigIntMatrix::from_i64(q, p, &bdata).unwrap();
        let mp = estimate_bound(&am, &bm, BoundMethod::MagnitudeProduct, None).unwrap();
        let cs = estimate_bound(&am, &bm, BoundMethod::CauchySchwarz, None).unwrap();
        let nv = estimate_bound(&am, &bm, BoundMethod::Naive, Some((11, 11))).unwrap();
        prop_assert!(mp.c_max <= cs.c_max);
        prop_assert!(cs.c_max <= nv.c_max);
        // each is a true bound on the product
        let exact_max = am.mul_exact(&bm).unwrap().max_abs();
        prop_assert!(exact_max <= mp.c_max);
    }

    #[test]
    fn backends_agree_on_random_residues(
        (n, q, a) in residue_matrix(251, 4),
        p in 1usize..=4,
    ) {
        let bdata: Vec<i64> = a
            .iter()
            .cycle()
            .take(q * p)
            .map(|v| symmetric_mod_i128((v.wrapping_mul(13)) as i128, 251) as i64)
            .collect();
        let am = BigIntMatrix::from_i64(n, q, &a).unwrap();
        let bm = BigIntMatrix::from_i64(q, p, &bdata).unwrap();
        let want = am.mul_exact(&bm).unwrap();
        for kind in [BackendKind::Int8Sim, BackendKind::Fp64Exact, BackendKind::BigIntRef] {
            let got = ExactBackend::new(kind).multiply_residue(&am, &bm, 251, 0).unwrap();
            prop_assert_eq!(&got.product, &want);
        }
    }

    #[test]
    fn renormalization_preserves_value_and_orders_words(
        words in prop::collection::vec(-1e10..1e10f64, 1..=4),
    ) {
        let out = fp::multiword_renormalize(&words).unwrap();
        prop_assert_eq!(out.len(), words.len());
        let dec = |v: &[f64]| -> Vec<(i64, i64)> { v.iter().filter_map(|&x| fp::decode(x)).collect() };
        let (sm, se) = fp::dyadic_sum(&dec(&words));
        let (om, oe) = fp::dyadic_sum(&dec(&out));
        prop_assert_eq!((sm, se), (om, oe));
        let u = f64::EPSILON / 2.0;
        for w in out.windows(2) {
            prop_assert!(fp::abs(w[1]) <= u * fp::abs(w[0]) || (w[0] == 0.0 && w[1] == 0.0));
        }
    }

    #[test]
    fn pipeline_error_stays_inside_the_truncation_budget(
        (n, q, a) in dims_and_data(4),
        p in 1usize..=4,
    ) {
        let bdata: Vec<f64> = a.iter().cycle().take(q * p).map(|v| v * 0.731 - 12.5).collect();
        let am = MatrixInput::from(mat(n, q, a));
        let bm = MatrixInput::from(mat(q, p, bdata));
        let set = build_int8_modulus_set(5).unwrap();
        let res = ozaki2_matmul(&am, &bm, &set, &Os2Options::default()).unwrap();
        prop_assert_eq!(res.gemm_count, 5);
        let exact = exact_matmul(&am, &bm).unwrap();
        let out = res.output.as_f64().unwrap();
        // per entry: |C - C_hat| <= q * (2^ka + 2^kb + 1) * 2^(-d_i - e_j),
        // doubled to absorb the final rounding to binary64
        let k_a = res.plan.k_a as usize;
        let k_b = res.plan.k_b as usize;
        let budget =
            ((BigInt::one() << k_a) + (BigInt::one() << k_b) + 1) * BigInt::from(q) * 2;
        for i in 0..n {
            for j in 0..p {
                let (em, ee) = exact.entry(i, j);
                let (cm, ce) = match fp::decode(out.get(i, j)) {
                    Some(d) => (BigInt::from(d.0), d.1),
                    None => (BigInt::zero(), 0),
                };
                let lo = ee.min(ce);
                let diff = ((em << ((ee - lo) as usize)) - (cm << ((ce - lo) as usize))).abs();
                let be = -res.reconstructed.row_exponents[i]
                    - res.reconstructed.col_exponents[j];
                let blo = lo.min(be);
                let left = diff << ((lo - blo) as usize);
                let right = &budget << ((be - blo) as usize);
                prop_assert!(left <= right, "({i},{j}): {left} > {right}");
            }
        }
    }

    #[test]
    fn pipeline_is_exact_on_small_integer_data(
        (n, q, a) in (1usize..=4, 1usize..=4).prop_flat_map(|(n, q)| {
            prop::collection::vec(-64i64..=64, n * q).prop_map(move |d| (n, q, d))
        }),
        p in 1usize..=4,
    ) {
        let bdata: Vec<i64> = a.iter().cycle().take(q * p).map(|v| (v * 3) % 64).collect();
        let am = MatrixInput::from(mat(n, q, a.iter().map(|&v| v as f64).collect()));
        let bm = MatrixInput::from(mat(q, p, bdata.iter().map(|&v| v as f64).collect()));
        let set = build_int8_modulus_set(4).unwrap();
        let res = ozaki2_matmul(&am, &bm, &set, &Os2Options::default()).unwrap();
        let exact = exact_matmul(&am, &bm).unwrap();
        let want = exact.to_f64_nearest().unwrap();
        prop_assert_eq!(res.output.as_f64().unwrap().data(), want.data());
    }
}
