//! ψ, the cycle polynomials, the four-term inequality and even-norm recovery.

use nalgebra::DMatrix;
use ncpnorm::algebra::ComplexMatrix;
use ncpnorm::corner::{
    corner_embed, cycle_polynomial, cycle_polynomial_closed, eval_polynomial, even_norm_power, four_function_gap,
    four_term_defect, psi_eval, psi_eval_direct, psi_ode_residual, psi_series, psi_series_adaptive, psi_tail_nonnegative,
    psi_tail_sign, recover_even_norm, sum_of_powers_gap, truncation_remainder,
};
use ncpnorm::rng::{disk_matrix, trial_rng};
use ncpnorm::Error;
use num_complex::Complex64;
use proptest::prelude::*;

fn to_na(m: &ComplexMatrix) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(m.dim(), m.dim(), m.as_slice())
}

/// `‖a‖_{2n}^{2n}` from nalgebra's singular values.
fn even_power_oracle(a: &ComplexMatrix, n: usize) -> f64 {
    let s = to_na(a).singular_values();
    s.iter().map(|v| v.powi(2 * n as i32)).sum::<f64>() / a.dim() as f64
}

/// `u₊^m + u₋^m` as the trace of the m-th power of the companion matrix of
/// `u² = x(u + 1)`.
fn companion_trace(m: usize, x: f64) -> f64 {
    let c = [[x, x], [1.0, 0.0]];
    let mut acc = [[1.0, 0.0], [0.0, 1.0]];
    for _ in 0..m {
        let mut next = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                next[i][j] = acc[i][0] * c[0][j] + acc[i][1] * c[1][j];
            }
        }
        acc = next;
    }
    acc[0][0] + acc[1][1]
}

fn square_zero(seed: u64, stream: u64, dim: usize) -> ComplexMatrix {
    let mut rng = trial_rng(seed, stream);
    corner_embed(&disk_matrix(&mut rng, dim))
}

#[test]
fn psi_forms_agree() {
    for p in [0.5, 1.0, 3.0, 5.0, 7.3] {
        let series = psi_series(p, 80).unwrap();
        for i in 0..=35 {
            let t = 0.1 * i as f64;
            let v = psi_eval(t, p).unwrap();
            assert!((psi_eval_direct(t, p) - v).abs() <= 1e-12 * v.abs().max(1.0));
            assert!((psi_series_adaptive(t, p).unwrap() - v).abs() <= 1e-10 * v.abs().max(1.0), "p={p} t={t}");
            if t < 2.0 {
                assert!((series.eval(t) - v).abs() <= 1e-10 * v.abs().max(1.0));
            }
        }
    }
    assert!(psi_series_adaptive(4.0, 1.0).is_err());
}

#[test]
fn psi_lambda_values() {
    let s = psi_series(3.0, 3).unwrap();
    assert_eq!(s.lambda(0), 2.0);
    assert!((s.lambda(1) - 2.25).abs() < 1e-15);
    assert!((s.lambda(2) - 2.0 * 2.25 * 1.25 / 24.0).abs() < 1e-15);
    let even = psi_series(4.0, 4).unwrap();
    assert_eq!(even.lambda(3), 0.0);
    assert_eq!(even.lambda(4), 0.0);
}

#[test]
fn psi_satisfies_its_ode() {
    for p in [0.5, 1.0, 3.0, 5.0] {
        for i in 0..=40 {
            let t = 1e-3 * (5e4f64).powf(i as f64 / 40.0);
            let r = psi_ode_residual(t, p).unwrap();
            let scale = psi_eval(t, p).unwrap() * (1.0 + t * t);
            assert!(r.abs() <= 1e-7 * scale, "p={p} t={t} r={r}");
        }
    }
}

#[test]
fn tail_sign_rule() {
    for p in [0.5, 1.0, 3.0, 5.0] {
        for n in 1..=4 {
            let want = psi_tail_nonnegative(p, n);
            for i in 1..=200 {
                let t = 0.5 * i as f64;
                let r = psi_tail_sign(t, p, n).unwrap();
                if want {
                    assert!(r >= -1e-12, "p={p} n={n} t={t} r={r}");
                } else {
                    assert!(r <= 1e-12, "p={p} n={n} t={t} r={r}");
                }
            }
        }
    }
    assert!(psi_tail_sign(0.0, 1.0, 1).is_err());
}

#[test]
fn cycle_polynomials() {
    assert_eq!(cycle_polynomial(1).unwrap(), vec![0, 1]);
    assert_eq!(cycle_polynomial(2).unwrap(), vec![0, 2, 1]);
    assert_eq!(cycle_polynomial(3).unwrap(), vec![0, 0, 3, 1]);
    assert!(cycle_polynomial(0).is_err());
    for m in 1..=12 {
        let c = cycle_polynomial(m).unwrap();
        for i in 0..20 {
            let x = -0.95 + 0.3 * i as f64;
            let want = companion_trace(m, x);
            let scale = want.abs().max(1.0);
            assert!((eval_polynomial(&c, x) - want).abs() <= 1e-8 * scale);
            assert!((cycle_polynomial_closed(m, x) - want).abs() <= 1e-8 * scale, "m={m} x={x}");
        }
    }
}

#[test]
fn sum_of_powers_on_corners() {
    for t in 0..10 {
        let a = square_zero(31, t, 1 + (t as usize % 3));
        for m in 1..=6 {
            assert!(sum_of_powers_gap(&a, m).unwrap() <= 1e-9, "m={m}");
        }
    }
    let not_nilpotent = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
    assert!(sum_of_powers_gap(&not_nilpotent, 2).unwrap() > 1e-3);
}

#[test]
fn four_terms_through_psi() {
    for t in 0..10 {
        let a = square_zero(32, t, 2);
        for p in [0.5, 1.0, 3.0] {
            assert!(four_function_gap(&a, p).unwrap() <= 1e-9);
        }
    }
}

#[test]
fn four_term_inequality() {
    for (t, p) in (0..40u64).flat_map(|t| [1.0, 1.7, 2.0, 3.0].map(|p| (t, p))) {
        let mut rng = trial_rng(33, t);
        let a = disk_matrix(&mut rng, 2 + t as usize % 2).scale_real(1.5);
        assert!(four_term_defect(&a, p).unwrap() >= -1e-10, "p={p}");
    }
    let one = ComplexMatrix::identity(1);
    let v = four_term_defect(&one, 0.5).unwrap();
    assert!((v - (2f64.powf(1.5) - 4.0)).abs() <= 1e-12);
}

#[test]
fn even_norm_recovery_ladder() {
    for t in 0..6 {
        let a = square_zero(34, t, 2 + t as usize % 2);
        for p in [1.0, 3.0] {
            let n1 = even_power_oracle(&a, 1);
            assert!((even_norm_power(&a, 1) - n1).abs() <= 1e-12 * n1.max(1.0));
            let e1 = recover_even_norm(&a, p, 1, &[]).unwrap();
            assert!((e1.value - n1).abs() <= 1e-3 * n1);
            let n2 = even_power_oracle(&a, 2);
            let e2 = recover_even_norm(&a, p, 2, &[e1.value]).unwrap();
            assert!((e2.value - n2).abs() <= 1e-3 * n2, "p={p}: {} vs {n2}", e2.value);
            assert_eq!(e2.ladder.len(), 4);
        }
    }
    let a = square_zero(34, 9, 2);
    assert!(matches!(recover_even_norm(&a, 2.0, 2, &[1.0]), Err(Error::LambdaZero { .. })));
    assert!(recover_even_norm(&a, 3.0, 2, &[]).is_err());
    assert_eq!(recover_even_norm(&ComplexMatrix::zeros(2), 3.0, 1, &[]).unwrap().value, 0.0);
}

#[test]
fn truncation_remainder_shrinks() {
    for t in 0..20 {
        let mut rng = trial_rng(35, t);
        let x = disk_matrix(&mut rng, 2);
        for r in [1e-2, 5e-3] {
            let big = truncation_remainder(&x, 3.0, 2, r).unwrap();
            let small = truncation_remainder(&x, 3.0, 2, r / 2.0).unwrap();
            assert!(small <= 0.6 * big, "{small} vs {big}");
        }
    }
    assert!(truncation_remainder(&ComplexMatrix::identity(2), 3.0, 2, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn psi_is_increasing(t in 0.0f64..30.0, dt in 1e-3f64..5.0, p in 0.1f64..8.0) {
        let a = psi_eval(t, p).unwrap();
        prop_assert!(a >= 2.0);
        prop_assert!(psi_eval(t + dt, p).unwrap() > a);
    }

    #[test]
    fn corner_embedding_is_square_zero(seed in any::<u64>(), dim in 1usize..4) {
        let a = square_zero(seed, 0, dim);
        prop_assert_eq!(a.dim(), 2 * dim);
        prop_assert!(a.matmul(&a).operator_norm() == 0.0);
        let x = a.adjoint_mul(&a);
        let n3 = even_power_oracle(&a, 3);
        prop_assert!((even_norm_power(&a, 3) - n3).abs() <= 1e-12 * n3.max(1.0));
        prop_assert!(x.is_hermitian(1e-14));
    }
}
