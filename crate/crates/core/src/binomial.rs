//! Generalized binomial coefficients and the moment coefficient
//! `C(p, N, α) = Σ_{k=0}^{α} (N−k)·binom(p/2, N−k)·binom(α, k)` that multiplies
//! `τ(x₁^{ε₁}···x_N^{ε_N})` in the Taylor expansion of `‖S_z‖_p^p`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// Coefficients with absolute value at or below this are treated as zero.
pub const ZERO_THRESHOLD: f64 = 1e-12;

/// Largest denominator tried when looking for an exact rational form of `p`.
const MAX_DENOMINATOR: i64 = 1024;

/// `β(β−1)···(β−k+1)/k!`.
pub fn generalized_binomial(beta: f64, k: usize) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc *= (beta - i as f64) / (i + 1) as f64;
    }
    acc
}

/// Exact generalized binomial coefficient.
pub fn generalized_binomial_exact(beta: &BigRational, k: usize) -> BigRational {
    let mut acc = BigRational::one();
    for i in 0..k {
        let i = BigRational::from_integer(BigInt::from(i));
        acc = acc * (beta - &i) / (i + BigRational::one());
    }
    acc
}

/// Ordinary binomial coefficient; zero when `k > n`.
pub fn binomial_u(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Integer binomial extended by zero outside `0 ≤ k ≤ n`.
pub fn binomial_i(n: i64, k: i64) -> u128 {
    if n < 0 || k < 0 || k > n {
        0
    } else {
        binomial_u(n as usize, k as usize)
    }
}

/// Number of cyclic positions `j` with `ε_j = *` and `ε_{j+1} = 1`.
pub fn alpha_count(stars: &[bool]) -> Result<usize> {
    if stars.is_empty() {
        return Err(Error::EmptyPattern);
    }
    let n = stars.len();
    Ok((0..n).filter(|&j| stars[j] && !stars[(j + 1) % n]).count())
}

fn check_query(p: f64, n: usize, alpha: usize) -> Result<()> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::InvalidExponent(p));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("moment coefficient needs N >= 1".into()));
    }
    if alpha > n / 2 {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} exceeds N/2 for N = {n}")));
    }
    Ok(())
}

/// `p` as an exact fraction when it has a denominator up to 1024 to within
/// a few ulps.
pub fn rational_exponent(p: f64) -> Option<BigRational> {
    for d in 1..=MAX_DENOMINATOR {
        let scaled = p * d as f64;
        let k = scaled.round();
        if (scaled - k).abs() <= 4.0 * f64::EPSILON * scaled.abs().max(1.0) {
            return Some(BigRational::new(BigInt::from(k as i64), BigInt::from(d)));
        }
    }
    None
}

/// `C(p, N, α)` in exact rational arithmetic.
pub fn moment_coefficient_exact(p: &BigRational, n: usize, alpha: usize) -> BigRational {
    let half = p / BigRational::from_integer(BigInt::from(2));
    let mut acc = BigRational::zero();
    for k in 0..=alpha.min(n) {
        let weight = BigRational::from_integer(BigInt::from((n - k) as u64) * BigInt::from(binomial_u(alpha, k)));
        acc += weight * generalized_binomial_exact(&half, n - k);
    }
    acc
}

fn neumaier_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for t in terms {
        let s = sum + t;
        comp += if sum.abs() >= t.abs() { (sum - s) + t } else { (t - s) + sum };
        sum = s;
    }
    sum + comp
}

/// `C(p, N, α)`, exact when `p` is a fraction with small denominator and
/// compensated floating point otherwise.
pub fn moment_coefficient(p: f64, n: usize, alpha: usize) -> Result<f64> {
    check_query(p, n, alpha)?;
    if let Some(exact) = rational_exponent(p) {
        return Ok(moment_coefficient_exact(&exact, n, alpha).to_f64().unwrap_or(f64::NAN));
    }
    Ok(neumaier_sum(
        (0..=alpha).map(|k| (n - k) as f64 * generalized_binomial(p / 2.0, n - k) * binomial_u(alpha, k) as f64),
    ))
}

/// [`moment_coefficient`], rejecting values that vanish.
pub fn nonzero_moment_coefficient(p: f64, n: usize, alpha: usize) -> Result<f64> {
    let c = moment_coefficient(p, n, alpha)?;
    if c.abs() <= ZERO_THRESHOLD {
        return Err(Error::ZeroCoefficient { p, n, alpha });
    }
    Ok(c)
}

/// Whether `C(p, N, α)` is guaranteed nonzero: `p` not an even integer, or
/// `p ≥ 2(N − α)`.
pub fn coefficient_guaranteed_nonzero(p: f64, n: usize, alpha: usize) -> bool {
    let half = p / 2.0;
    half.fract() != 0.0 || p >= 2.0 * (n - alpha) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootReport {
    pub n: usize,
    pub alpha: usize,
    pub degree: usize,
    /// `(β, |P(β)|)` for each integer `β` in `[−α, N−α−2]`.
    pub evaluations: Vec<(i64, f64)>,
    pub pass: bool,
}

/// `P(β) = Σ_k binom(β, N−k−1)·binom(α, k)` evaluated exactly.
pub fn root_polynomial(beta: &BigRational, n: usize, alpha: usize) -> BigRational {
    let mut acc = BigRational::zero();
    for k in 0..=alpha {
        if k + 1 > n {
            break;
        }
        let c = BigRational::from_integer(BigInt::from(binomial_u(alpha, k)));
        acc += c * generalized_binomial_exact(beta, n - k - 1);
    }
    acc
}

/// Evaluates `P` at the integers where it is claimed to vanish.
pub fn coefficient_root_report(n: usize, alpha: usize) -> Result<RootReport> {
    if !(1..=12).contains(&n) {
        return Err(Error::InvalidArgument(format!("root report needs 1 <= N <= 12, got {n}")));
    }
    if alpha > n / 2 {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} exceeds N/2 for N = {n}")));
    }
    let lo = -(alpha as i64);
    let hi = n as i64 - alpha as i64 - 2;
    let evaluations: Vec<(i64, f64)> = (lo..=hi)
        .map(|b| {
            let v = root_polynomial(&BigRational::from_integer(BigInt::from(b)), n, alpha);
            (b, v.abs().to_f64().unwrap_or(f64::INFINITY))
        })
        .collect();
    Ok(RootReport {
        n,
        alpha,
        degree: n - 1,
        pass: evaluations.iter().all(|&(_, v)| v <= 1e-8),
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_examples() {
        assert_eq!(generalized_binomial(0.3, 0), 1.0);
        assert_eq!(generalized_binomial(0.5, 2), -0.125);
        assert_eq!(generalized_binomial(2.0, 3), 0.0);
        assert_eq!(binomial_u(5, 2), 10);
        assert_eq!(binomial_i(1, -1), 0);
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha_count(&[true, false]).unwrap(), 1);
        assert_eq!(alpha_count(&[true, true, false, false]).unwrap(), 1);
        assert_eq!(alpha_count(&[false; 3]).unwrap(), 0);
        assert_eq!(alpha_count(&[true]).unwrap(), 0);
        assert_eq!(alpha_count(&[]), Err(Error::EmptyPattern));
    }

    #[test]
    fn coefficient_examples() {
        assert_eq!(moment_coefficient(3.0, 2, 1).unwrap(), 2.25);
        assert_eq!(moment_coefficient(5.0, 1, 0).unwrap(), 2.5);
        let p = std::f64::consts::PI;
        let want = p * p * (p / 2.0 - 1.0) * (p / 2.0 - 2.0) / 24.0;
        assert!((moment_coefficient(p, 4, 1).unwrap() - want).abs() < 1e-14);
        assert_eq!(moment_coefficient(4.0, 2, 1).unwrap(), 4.0);
        assert!(matches!(moment_coefficient(1.0, 3, 2), Err(Error::InvalidArgument(_))));
        assert!(matches!(moment_coefficient(-1.0, 3, 0), Err(Error::InvalidExponent(_))));
    }

    #[test]
    fn vanishing_case_detected() {
        // p = 2, N = 3, α = 0: 3·binom(1, 3) = 0
        assert_eq!(
            nonzero_moment_coefficient(2.0, 3, 0),
            Err(Error::ZeroCoefficient { p: 2.0, n: 3, alpha: 0 })
        );
        assert!(!coefficient_guaranteed_nonzero(2.0, 3, 0));
        assert!(coefficient_guaranteed_nonzero(4.0, 3, 1));
    }

    #[test]
    fn rational_detection() {
        assert_eq!(rational_exponent(1.5).unwrap(), BigRational::new(3.into(), 2.into()));
        assert!(rational_exponent(std::f64::consts::PI).is_none());
    }

    #[test]
    fn root_report_examples() {
        let r = coefficient_root_report(2, 1).unwrap();
        assert_eq!(r.evaluations, vec![(-1, 0.0)]);
        assert!(r.pass);
        let r = coefficient_root_report(3, 0).unwrap();
        assert_eq!(r.evaluations.iter().map(|e| e.0).collect::<Vec<_>>(), vec![0, 1]);
        assert!(r.pass);
        let r = coefficient_root_report(1, 0).unwrap();
        assert!(r.evaluations.is_empty() && r.pass && r.degree == 0);
    }
}
