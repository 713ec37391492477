//! Gadget families and binomial coefficients.

use ncpnorm::binomial::{
    alpha_count, binomial_i, coefficient_root_report, generalized_binomial, generalized_binomial_exact,
    moment_coefficient, moment_coefficient_exact,
};
use ncpnorm::gadget::{
    compact_family, full_cycle_family, is_circular, verify_cyclic_trace, GadgetFamily, VerifyMode,
};
use ncpnorm::{ComplexMatrix, Error};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// β(β−1)···(β−k+1)/k! written out.
fn falling(beta: f64, k: usize) -> f64 {
    (0..k).map(|i| (beta - i as f64) / (i + 1) as f64).product()
}

#[test]
fn gadget_dimensions_and_small_families() {
    for n in 1..=8 {
        assert_eq!(full_cycle_family(n).unwrap().dim(), n);
        assert_eq!(compact_family(n).unwrap().dim(), n.div_ceil(2));
    }
    let ones = GadgetFamily::custom(vec![ComplexMatrix::identity(1); 2]).unwrap();
    assert!(verify_cyclic_trace(&ones, VerifyMode::Exhaustive, 1e-9).unwrap().pass);
    let e12 = ComplexMatrix::unit(2, 0, 1);
    let bad = GadgetFamily::custom(vec![e12.clone(), e12]).unwrap();
    assert!(!verify_cyclic_trace(&bad, VerifyMode::Exhaustive, 1e-9).unwrap().pass);
    let r = verify_cyclic_trace(&full_cycle_family(4).unwrap(), VerifyMode::Exhaustive, 1e-9).unwrap();
    assert!(r.max_deviation < 1e-10);
    assert!(matches!(
        verify_cyclic_trace(&compact_family(10).unwrap(), VerifyMode::Exhaustive, 1e-9),
        Err(Error::ExhaustiveCap { .. })
    ));
}

#[test]
fn sampled_verification_beyond_the_cap() {
    for n in [10, 11] {
        let fam = compact_family(n).unwrap();
        let r = verify_cyclic_trace(&fam, VerifyMode::Sampled { samples: 2000, seed: 5 }, 1e-9).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.checked >= 2000);
    }
}

#[test]
fn circularity_matches_definition() {
    // brute force over all permutations of 5 points
    fn perms(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in perms(n - 1) {
            for i in 0..=p.len() {
                let mut q = p.clone();
                q.insert(i, n - 1);
                out.push(q);
            }
        }
        out
    }
    let n = 5;
    let mut circular = 0;
    for p in perms(n) {
        let by_def = (0..n).any(|k| (0..n).all(|j| p[j] == (j + k) % n));
        assert_eq!(is_circular(&p), by_def, "{p:?}");
        circular += usize::from(by_def);
    }
    assert_eq!(circular, n);
}

#[test]
fn binomial_examples() {
    assert_eq!(generalized_binomial(1.7, 0), 1.0);
    assert_eq!(generalized_binomial(0.5, 2), -0.125);
    assert_eq!(generalized_binomial(2.0, 3), 0.0);
    assert_eq!(alpha_count(&[true, false]).unwrap(), 1);
    assert_eq!(alpha_count(&[true, true, false, false]).unwrap(), 1);
    assert_eq!(alpha_count(&[false, false, false]).unwrap(), 0);
    assert_eq!(alpha_count(&[]), Err(Error::EmptyPattern));
}

#[test]
fn closed_form_coefficients() {
    for i in 1..=100 {
        let p = 0.08 * i as f64;
        assert!((moment_coefficient(p, 2, 1).unwrap() - p * p / 4.0).abs() <= 1e-12);
        let want = p * p * (p / 2.0 - 1.0) * (p / 2.0 - 2.0) / 24.0;
        assert!((moment_coefficient(p, 4, 1).unwrap() - want).abs() <= 1e-12);
        assert!((moment_coefficient(p, 1, 0).unwrap() - p / 2.0).abs() <= 1e-14);
    }
}

#[test]
fn coefficients_do_not_vanish_off_even_integers() {
    for p in [0.5, 1.0, 1.5, 3.0, std::f64::consts::PI, 5.5] {
        for n in 1..=10 {
            for alpha in 0..=n / 2 {
                assert!(moment_coefficient(p, n, alpha).unwrap().abs() > 1e-12, "p={p} n={n} alpha={alpha}");
            }
        }
    }
}

#[test]
fn root_reports() {
    for n in 1..=10 {
        for alpha in 0..=n / 2 {
            let r = coefficient_root_report(n, alpha).unwrap();
            assert!(r.pass, "{r:?}");
            assert_eq!(r.evaluations.len(), n - 1);
        }
    }
    assert!(coefficient_root_report(1, 0).unwrap().evaluations.is_empty());
}

#[test]
fn vanishing_in_the_excluded_regime_follows_the_roots() {
    // C(2m, N, α) = m·P(m − 1)
    for n in 1..=10usize {
        for alpha in 0..=n / 2 {
            for m in 1..=10usize {
                let c = moment_coefficient_exact(&rat(2 * m as i64), n, alpha);
                let root = ncpnorm::binomial::root_polynomial(&rat(m as i64 - 1), n, alpha);
                assert_eq!(c.is_zero(), root.is_zero(), "n={n} alpha={alpha} m={m}");
                if m >= n - alpha {
                    assert!(!c.is_zero());
                }
            }
        }
    }
}

#[test]
fn elementary_identity_is_exact() {
    for n in 0..=10i64 {
        for alpha in 0..=n {
            for k in 0..=n {
                let lhs = rat(alpha) * rat(binomial_i(alpha - 1, n - k) as i64) + rat(n - alpha) * rat(binomial_i(alpha, n - k) as i64);
                let rhs = rat(k) * rat(binomial_i(alpha, n - k) as i64);
                assert_eq!(lhs, rhs, "n={n} alpha={alpha} k={k}");
            }
        }
    }
}

#[test]
fn alternating_moments_vanish() {
    for alpha in 2..=10i64 {
        for i in 1..alpha {
            let s: BigInt = (0..=alpha)
                .map(|k| {
                    let sign = if k % 2 == 0 { 1 } else { -1 };
                    BigInt::from(binomial_i(alpha, k)) * BigInt::from(sign) * BigInt::from(k).pow(i as u32)
                })
                .sum();
            assert!(s.is_zero(), "alpha={alpha} i={i}");
        }
    }
}

#[test]
fn alpha_is_at_most_half_the_length() {
    for len in 1..=12usize {
        for bits in 0..1u32 << len {
            let pattern: Vec<bool> = (0..len).map(|j| bits >> j & 1 == 1).collect();
            assert!(alpha_count(&pattern).unwrap() <= len / 2);
        }
    }
}

proptest! {
    #[test]
    fn generalized_binomial_matches_product(beta in -6.0f64..6.0, k in 0usize..12) {
        let a = generalized_binomial(beta, k);
        let b = falling(beta, k);
        prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
    }

    #[test]
    fn pascal_rule_exact(num in -40i64..40, den in 1i64..9, k in 0usize..10) {
        let beta = BigRational::new(BigInt::from(num), BigInt::from(den));
        let lhs = generalized_binomial_exact(&beta, k) + generalized_binomial_exact(&beta, k + 1);
        let rhs = generalized_binomial_exact(&(beta + BigRational::one()), k + 1);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn float_path_matches_exact_sum(num in 1i64..64, den in 1i64..8, n in 1usize..11, a in 0usize..6) {
        let alpha = a.min(n / 2);
        let p = BigRational::new(BigInt::from(num), BigInt::from(den));
        let exact = moment_coefficient_exact(&p, n, alpha);
        let f = num as f64 / den as f64;
        let got = moment_coefficient(f, n, alpha).unwrap();
        let want = num_traits::ToPrimitive::to_f64(&exact).unwrap();
        prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        // direct definition Σ_k (N−k) binom(p/2, N−k) binom(α, k)
        let mut s = 0.0;
        for k in 0..=alpha {
            s += (n - k) as f64 * falling(f / 2.0, n - k) * binomial_i(alpha as i64, k as i64) as f64;
        }
        prop_assert!((got - s).abs() <= 1e-9 * s.abs().max(1.0));
    }
}
