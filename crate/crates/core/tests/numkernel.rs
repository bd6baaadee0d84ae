mod common;

use common::*;
use hamrom::numkernel::*;
use proptest::prelude::*;

#[test]
fn gram_matches_triple_loop() {
    let mut r = rng(1);
    let y = random_matrix(&mut r, 5, 3);
    let g = gram(&y).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let mut s = 0.0;
            for k in 0..5 {
                s += y[(k, i)] * y[(k, j)];
            }
            assert!((g[(i, j)] - s).abs() <= 1e-15 * (1.0 + s.abs()));
        }
    }
    assert_eq!(g, g.transpose());
}

#[test]
fn sym_eig_reconstructs_random_symmetric() {
    let mut r = rng(2);
    let s = random_symmetric(&mut r, 6);
    let e = sym_eig(&s, 1e-14).unwrap();
    let rec = reconstruct(&e);
    assert!(rec.sub(&s).frobenius() <= 1e-9 * s.frobenius());
    assert!(e.vectors.orthonormality_defect() <= 1e-10);
    let trace: f64 = (0..6).map(|i| s[(i, i)]).sum();
    let sum: f64 = e.values.iter().sum();
    assert!((trace - sum).abs() <= 1e-10 * trace.abs().max(1.0));
    assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn thin_svd_matches_full_svd_oracle() {
    let mut r = rng(3);
    let y = random_matrix(&mut r, 8, 4);
    let svd = thin_svd_snapshots(&y, 4, DEFAULT_RANK_TOL).unwrap();
    let oracle = oracle_singular_values(&y);
    for (a, b) in svd.sigma.iter().zip(&oracle) {
        assert!((a - b).abs() <= 1e-12 * oracle[0], "{a} vs {b}");
    }
    // Y = Φ Σ Vᵀ with V = Yᵀ Φ Σ⁻¹, so Φ Φᵀ Y must reproduce Y at full rank.
    let proj = svd.phi.matmul(&svd.phi.tr_matmul(&y));
    assert!(proj.sub(&y).max_abs() <= 1e-9);
    assert!(svd.phi.orthonormality_defect() <= 1e-12);
}

#[test]
fn thin_svd_resolves_small_singular_values() {
    // Graded spectrum down to 1e-9: square-root accuracy from the Gram route
    // alone would lose the tail entirely.
    let mut r = rng(4);
    let u = random_orthonormal(&mut r, 60, 10);
    let v = random_orthonormal(&mut r, 10, 10);
    let sig: Vec<f64> = (0..10).map(|k| 10f64.powi(-(k as i32))).collect();
    let us = DenseMatrix::from_fn(60, 10, |i, j| u[(i, j)] * sig[j]);
    let y = us.matmul(&v.transpose());
    let svd = thin_svd_snapshots(&y, 10, DEFAULT_RANK_TOL).unwrap();
    for (k, (a, b)) in svd.sigma.iter().zip(&sig).enumerate() {
        assert!((a - b).abs() <= 1e-6 * b, "sigma_{k}: {a} vs {b}");
    }
}

#[test]
fn lu_residual_on_random_system() {
    let mut r = rng(5);
    let mut a = random_matrix(&mut r, 10, 10);
    for i in 0..10 {
        a[(i, i)] += 10.0;
    }
    let rhs = random_matrix(&mut r, 10, 3);
    let x = lu_solve(&a, &rhs).unwrap();
    let res = a.matmul(&x).sub(&rhs);
    for j in 0..3 {
        let col_max = max_abs(&rhs.column(j));
        assert!(max_abs(&res.column(j)) <= 1e-10 * (1.0 + col_max));
    }
}

#[test]
fn lu_handles_periodic_banded_matrix() {
    let n = 50;
    let a = DenseMatrix::from_fn(n, n, |i, j| {
        let d = (i + n - j) % n;
        match d {
            0 => 4.0,
            1 | 49 => -1.0,
            2 => 0.5,
            _ => 0.0,
        }
    });
    let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
    let b = a.matvec(&x_true);
    let x = LuFactor::new(&a).unwrap().solve(&b);
    assert!(max_abs_diff(&x, &x_true) <= 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gram_is_exactly_symmetric(seed in any::<u64>(), rows in 1usize..12, cols in 1usize..8) {
        let y = random_matrix(&mut rng(seed), rows, cols);
        let g = gram(&y).unwrap();
        prop_assert_eq!(g.symmetry_defect(), 0.0);
    }

    #[test]
    fn sym_eig_trace_and_reconstruction(seed in any::<u64>(), n in 1usize..10) {
        let s = random_symmetric(&mut rng(seed), n);
        let e = sym_eig(&s, 1e-14).unwrap();
        let trace: f64 = (0..n).map(|i| s[(i, i)]).sum();
        let sum: f64 = e.values.iter().sum();
        prop_assert!((trace - sum).abs() <= 1e-10 * s.frobenius().max(1e-300));
        prop_assert!(reconstruct(&e).sub(&s).frobenius() <= 1e-9 * s.frobenius());
        prop_assert!(e.vectors.orthonormality_defect() <= 1e-10);
    }

    #[test]
    fn thin_svd_energy_and_orthonormality(seed in any::<u64>(), rows in 4usize..20, cols in 1usize..4) {
        let y = random_matrix(&mut rng(seed), rows, cols);
        let svd = thin_svd_snapshots(&y, cols, DEFAULT_RANK_TOL).unwrap();
        prop_assert!(svd.phi.orthonormality_defect() <= 1e-12);
        let energy: f64 = svd.sigma.iter().map(|s| s * s).sum();
        let fro2 = y.frobenius().powi(2);
        prop_assert!((energy - fro2).abs() <= 1e-10 * fro2);
    }

    #[test]
    fn lu_recovers_solution(seed in any::<u64>(), n in 1usize..12) {
        let mut r = rng(seed);
        let mut a = random_matrix(&mut r, n, n);
        for i in 0..n {
            a[(i, i)] += n as f64;
        }
        let x = random_vector(&mut r, n);
        let b = a.matvec(&x);
        let got = LuFactor::new(&a).unwrap().solve(&b);
        prop_assert!(max_abs_diff(&got, &x) <= 1e-9 * max_abs(&x).max(1.0));
    }
}
