mod common;

use common::*;
use num_complex::Complex64;
use olnqs::lindblad::{build_hamiltonian, evolve_rk, LindbladModel};
use olnqs::observables::{mean_magnetization, trace_normalize};
use olnqs::DensityMatrix;
use proptest::prelude::*;

#[test]
fn hamiltonian_matches_kronecker_form() {
    let mut r = rng(1);
    for n in 2..=5 {
        let (j, b, g) = random_model(&mut r);
        let model = LindbladModel::new(n, j, b, g).unwrap();
        let dense = dense_hamiltonian(n, j, b);
        let diff = max_abs_diff(&build_hamiltonian(&model), &from_cmat(&dense));
        assert!(diff < 1e-13, "N={n}: {diff:e}");
    }
}

#[test]
fn matrix_free_generator_matches_superoperator() {
    let mut r = rng(2);
    for n in 2..=4 {
        for _ in 0..3 {
            let (j, b, g) = random_model(&mut r);
            let l = LindbladModel::new(n, j, b, g).unwrap().liouvillian();
            let m = dense_liouvillian(n, j, b, g);
            let rho = DensityMatrix::random(1 << n, &mut r);
            let want = unvec(&(&m * vec_row_major(&rho)), 1 << n);
            let got = l.apply(&rho).unwrap();
            assert!(max_abs_diff(&got, &want) < 1e-12, "N={n}");

            let want_adj = unvec(&(m.adjoint() * vec_row_major(&rho)), 1 << n);
            let got_adj = l.apply_adjoint(&rho).unwrap();
            assert!(max_abs_diff(&got_adj, &want_adj) < 1e-12, "adjoint N={n}");
        }
    }
}

#[test]
fn unique_steady_state_matches_rk_endpoint() {
    let cases = [
        (2, [1.4, 2.0, 1.0], [-1.0, 1.0, 0.1]),
        (3, [1.3, 0.1, 1.0], [0.7, 0.3, 0.1]),
        (4, [1.3, 0.1, 1.0], [0.7, 0.3, 0.1]),
    ];
    for (n, j, b) in cases {
        let m = dense_liouvillian(n, j, b, 1.0);
        let svd = m.clone().svd(false, true);
        let mut sv: Vec<(f64, usize)> = svd.singular_values.iter().copied().zip(0..).collect();
        sv.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let largest = sv.last().unwrap().0;
        assert!(sv[0].0 < 1e-10 * largest, "N={n}: no null vector");
        assert!(sv[1].0 > 1e-6 * largest, "N={n}: degenerate null space");

        let v_t = svd.v_t.unwrap();
        let null: Vec<Complex64> = v_t.row(sv[0].1).iter().map(|z| z.conj()).collect();
        let null_vec = nalgebra::DVector::from_vec(null.clone());
        let null_res = (&m * &null_vec).norm() / (largest * null_vec.norm());
        assert!(null_res < 1e-10, "N={n}: null vector residual {null_res:e}");
        let ss = trace_normalize(&DensityMatrix::from_vec(1 << n, null).unwrap()).unwrap();

        let l = LindbladModel::new(n, j, b, 1.0).unwrap().liouvillian();
        let end = evolve_rk(&DensityMatrix::maximally_mixed(n), 1e-2, 6000, &l, |_, _, _| {}).unwrap();
        let (m_ss, m_rk) = (mean_magnetization(&ss).unwrap(), mean_magnetization(&end).unwrap());
        assert!(m_ss.max_abs_diff(&m_rk) < 1e-6, "N={n}: {m_ss:?} vs {m_rk:?}");
    }
}

#[test]
fn trace_and_hermiticity_under_rk() {
    let mut r = rng(3);
    for n in 2..=6 {
        let (j, b, g) = random_model(&mut r);
        let l = LindbladModel::new(n, j, b, g).unwrap().liouvillian();
        let rho0 = DensityMatrix::maximally_mixed(n);
        let end = evolve_rk(&rho0, 1e-2, 50, &l, |_, _, rho| {
            assert!((rho.trace() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            assert!(rho.hermiticity_residual() < 1e-12);
        })
        .unwrap();
        assert!(end.is_finite());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generator_is_traceless_and_hermiticity_preserving(seed in any::<u64>(), n in 2usize..=6) {
        let mut r = rng(seed);
        let (j, b, g) = random_model(&mut r);
        let l = LindbladModel::new(n, j, b, g).unwrap().liouvillian();
        let rho = DensityMatrix::random_hermitian(1 << n, &mut r);
        let out = l.apply(&rho).unwrap();
        let scale = rho.frobenius_norm().max(1.0);
        prop_assert!(out.trace().norm() < 1e-12 * scale * (1 << n) as f64);
        prop_assert!(out.hermiticity_residual() < 1e-12 * scale);
    }

    #[test]
    fn adjoint_pairing(seed in any::<u64>(), n in 2usize..=5) {
        let mut r = rng(seed);
        let (j, b, g) = random_model(&mut r);
        let l = LindbladModel::new(n, j, b, g).unwrap().liouvillian();
        let a = DensityMatrix::random(1 << n, &mut r);
        let x = DensityMatrix::random(1 << n, &mut r);
        let lhs = a.inner(&l.apply(&x).unwrap());
        let rhs = l.apply_adjoint(&a).unwrap().inner(&x);
        prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()));
    }
}
