//! Square-zero corner elements and the scalar function
//! `ψ(t) = (1+u₊)^{p/2} + (1+u₋)^{p/2}`, `u_± = (t ± √(t²+4t))/2`, through
//! which `|1±a|^p + |1±a^*|^p` is expressed when `a² = 0`.

use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::{abs_power, hermitian_apply, hermitian_eigenvalues, schatten_p_power, ComplexMatrix};
use crate::binomial::generalized_binomial;
use crate::error::{Error, Result};
use crate::reconstruct::richardson_limit;

fn check_exponent(p: f64) -> Result<()> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::InvalidExponent(p));
    }
    Ok(())
}

/// `ψ(t)` for `t ≥ 0`.
///
/// Since `(1+u₊)(1+u₋) = 1`, `ψ(t) = 2·cosh((p/2)·ln(1+u₊))`, which avoids
/// evaluating the vanishing base `1+u₋` for large `t`.
pub fn psi_eval(t: f64, p: f64) -> Result<f64> {
    check_exponent(p)?;
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("psi needs t >= 0, got {t}")));
    }
    let s = (t * t + 4.0 * t).sqrt();
    Ok(2.0 * (0.5 * p * (0.5 * (t + s)).ln_1p()).cosh())
}

/// `ψ(t)` from the defining formula, clamping the lower base at 0.
pub fn psi_eval_direct(t: f64, p: f64) -> f64 {
    let s = (t * t + 4.0 * t).sqrt();
    let hi = 1.0 + 0.5 * (t + s);
    let lo = (1.0 + 0.5 * (t - s)).max(0.0);
    hi.powf(p / 2.0) + lo.powf(p / 2.0)
}

/// Power-series coefficients of `ψ` around 0 (radius of convergence 4).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiSeries {
    pub p: f64,
    pub coefficients: Vec<f64>,
}

impl PsiSeries {
    pub fn eval(&self, t: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn lambda(&self, n: usize) -> f64 {
        self.coefficients[n]
    }
}

/// `λ_n = (2/(2n)!)·Π_{k<n}(p²/4 − k²)` for `n ≤ N`.
pub fn psi_series(p: f64, n_max: usize) -> Result<PsiSeries> {
    check_exponent(p)?;
    let q = p * p / 4.0;
    let mut coefficients = Vec::with_capacity(n_max + 1);
    let mut lambda = 2.0;
    for n in 0..=n_max {
        coefficients.push(lambda);
        let nf = n as f64;
        lambda *= (q - nf * nf) / ((2.0 * nf + 1.0) * (2.0 * nf + 2.0));
    }
    Ok(PsiSeries { p, coefficients })
}

/// Partial sums of the series until the terms drop below `1e-18` relative
/// (for `|t| < 4`).
pub fn psi_series_adaptive(t: f64, p: f64) -> Result<f64> {
    check_exponent(p)?;
    if t.abs() >= 4.0 {
        return Err(Error::InvalidArgument(format!("series diverges at |t| = {} >= 4", t.abs())));
    }
    let q = p * p / 4.0;
    let mut term = 2.0;
    let mut sum = 0.0;
    let mut comp = 0.0;
    for n in 0..100_000 {
        let y = term - comp;
        let s = sum + y;
        comp = (s - sum) - y;
        sum = s;
        let nf = n as f64;
        term *= t * (q - nf * nf) / ((2.0 * nf + 1.0) * (2.0 * nf + 2.0));
        if term == 0.0 || (n > 8 && term.abs() < 1e-18 * sum.abs().max(1e-300)) {
            break;
        }
    }
    Ok(sum)
}

/// `ψ(t) − Σ_{n≤N} λ_n tⁿ`.
pub fn psi_tail_sign(t: f64, p: f64, n: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("tail sign needs t > 0, got {t}")));
    }
    let series = psi_series(p, n)?;
    if t < 2.0 {
        // tail summed directly: no cancellation against ψ
        let q = p * p / 4.0;
        let mut term = series.lambda(n) * t.powi(n as i32);
        let mut sum = 0.0;
        for k in n..100_000 {
            let kf = k as f64;
            term *= t * (q - kf * kf) / ((2.0 * kf + 1.0) * (2.0 * kf + 2.0));
            sum += term;
            if term == 0.0 || term.abs() < 1e-20 * sum.abs().max(1e-300) {
                break;
            }
        }
        return Ok(sum);
    }
    Ok(psi_eval(t, p)? - series.eval(t))
}

/// Expected sign of [`psi_tail_sign`]: non-negative iff `p ≥ 2N` or
/// `⌊N − p/2⌋` is odd.
pub fn psi_tail_nonnegative(p: f64, n: usize) -> bool {
    let d = n as f64 - p / 2.0;
    p >= 2.0 * n as f64 || (d.floor() as i64).rem_euclid(2) == 1
}

/// Value with first and second derivative, propagated by the chain rule.
#[derive(Clone, Copy)]
struct Jet {
    v: f64,
    d1: f64,
    d2: f64,
}

impl Jet {
    fn var(t: f64) -> Self {
        Self { v: t, d1: 1.0, d2: 0.0 }
    }

    fn compose(self, g: f64, g1: f64, g2: f64) -> Self {
        Self {
            v: g,
            d1: g1 * self.d1,
            d2: g2 * self.d1 * self.d1 + g1 * self.d2,
        }
    }

    fn add(self, o: Self) -> Self {
        Self {
            v: self.v + o.v,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
        }
    }

    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }

    fn scale(self, c: f64) -> Self {
        Self {
            v: c * self.v,
            d1: c * self.d1,
            d2: c * self.d2,
        }
    }

    fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        self.compose(r, 0.5 / r, -0.25 / (r * self.v))
    }

    fn ln_1p(self) -> Self {
        let w = 1.0 + self.v;
        self.compose(self.v.ln_1p(), 1.0 / w, -1.0 / (w * w))
    }

    fn cosh(self) -> Self {
        self.compose(self.v.cosh(), self.v.sinh(), self.v.cosh())
    }
}

/// `(t²+4t)ψ'' + (t+2)ψ' − (p²/4)ψ` at `t > 0`, with the derivatives of the
/// closed form taken by forward-mode differentiation.
pub fn psi_ode_residual(t: f64, p: f64) -> Result<f64> {
    check_exponent(p)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("ODE residual needs t > 0, got {t}")));
    }
    let x = Jet::var(t);
    let s = x.mul(x).add(x.scale(4.0)).sqrt();
    let psi = x.add(s).scale(0.5).ln_1p().scale(0.5 * p).cosh().scale(2.0);
    Ok((t * t + 4.0 * t) * psi.d2 + (t + 2.0) * psi.d1 - p * p / 4.0 * psi.v)
}

/// Integer coefficients (ascending powers) of `P_m`, from `P_1 = X`,
/// `P_2 = X² + 2X`, `P_{m+2} = X(P_{m+1} + P_m)`.
pub fn cycle_polynomial(m: usize) -> Result<Vec<i64>> {
    if m == 0 {
        return Err(Error::InvalidArgument("P_m is defined for m >= 1".into()));
    }
    let mut prev = vec![0, 1];
    let mut cur = vec![0, 2, 1];
    if m == 1 {
        return Ok(prev);
    }
    for _ in 2..m {
        let mut next = vec![0i64; cur.len() + 1];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i + 1] += c;
        }
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

pub fn eval_polynomial(coeffs: &[i64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c as f64)
}

/// `P_m(X) = u₊^m + u₋^m` with `u_± = (X ± √(X²+4X))/2`, the roots of
/// `u² = X(u + 1)`.
pub fn cycle_polynomial_closed(m: usize, x: f64) -> f64 {
    let s = Complex64::new(x * x + 4.0 * x, 0.0).sqrt();
    let up = (Complex64::new(x, 0.0) + s) * 0.5;
    let um = (Complex64::new(x, 0.0) - s) * 0.5;
    (up.powu(m as u32) + um.powu(m as u32)).re
}

/// `P_m` applied to a matrix by Horner's scheme.
pub fn eval_polynomial_matrix(coeffs: &[i64], x: &ComplexMatrix) -> ComplexMatrix {
    let n = x.dim();
    let mut acc = ComplexMatrix::zeros(n);
    for &c in coeffs.iter().rev() {
        acc = acc.matmul(x);
        for i in 0..n {
            acc[(i, i)] += c as f64;
        }
    }
    acc
}

/// `[[0, x], [0, 0]]`.
pub fn corner_embed(x: &ComplexMatrix) -> ComplexMatrix {
    x.block_upper_right()
}

/// `‖Σ_{j=1}^4 a_j^m − 2P_m(a^*a) − 2P_m(aa^*)‖` for `a_{1,2} = a^*a ± (a + a^*)`,
/// `a_{3,4} = aa^* ± (a + a^*)`; zero whenever `a² = 0`.
pub fn sum_of_powers_gap(a: &ComplexMatrix, m: usize) -> Result<f64> {
    let pm = cycle_polynomial(m)?;
    let s = a + &a.adjoint();
    let ata = a.adjoint_mul(a);
    let aat = a.matmul(&a.adjoint());
    let parts = [&ata + &s, &ata - &s, &aat + &s, &aat - &s];
    let mut lhs = ComplexMatrix::zeros(a.dim());
    for part in &parts {
        lhs += &part.powi(m as u32);
    }
    let rhs = &eval_polynomial_matrix(&pm, &ata).scale_real(2.0) + &eval_polynomial_matrix(&pm, &aat).scale_real(2.0);
    Ok((&lhs - &rhs).operator_norm())
}

fn plus_identity(mut m: ComplexMatrix, s: f64) -> ComplexMatrix {
    for i in 0..m.dim() {
        m[(i, i)] += s;
    }
    m
}

/// `|1+A|^p + |1−A|^p + |1+A^*|^p + |1−A^*|^p`.
pub fn four_term_sum(a: &ComplexMatrix, p: f64) -> Result<ComplexMatrix> {
    check_exponent(p)?;
    let at = a.adjoint();
    let mut acc = abs_power(&plus_identity(a.clone(), 1.0), p)?;
    acc += &abs_power(&plus_identity(-a, 1.0), p)?;
    acc += &abs_power(&plus_identity(at.clone(), 1.0), p)?;
    acc += &abs_power(&plus_identity(-&at, 1.0), p)?;
    Ok(acc)
}

/// Smallest eigenvalue of [`four_term_sum`] minus 4.
pub fn four_term_defect(a: &ComplexMatrix, p: f64) -> Result<f64> {
    let sum = four_term_sum(a, p)?;
    Ok(hermitian_eigenvalues(&sum.hermitian_part())?[0] - 4.0)
}

/// `‖four_term_sum(a) − (2ψ(a^*a) + 2ψ(aa^*) − 4)‖` for square-zero `a`.
pub fn four_function_gap(a: &ComplexMatrix, p: f64) -> Result<f64> {
    let lhs = four_term_sum(a, p)?;
    let psi = |t: f64| psi_eval(t.max(0.0), p).unwrap_or(f64::NAN);
    let r1 = hermitian_apply(&a.adjoint_mul(a).hermitian_part(), psi)?;
    let r2 = hermitian_apply(&a.matmul(&a.adjoint()).hermitian_part(), psi)?;
    let rhs = plus_identity(&r1.scale_real(2.0) + &r2.scale_real(2.0), -4.0);
    Ok((&lhs - &rhs).operator_norm())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvenNormEstimate {
    pub value: f64,
    pub residual: f64,
    pub ladder: Vec<f64>,
    pub raw: Vec<f64>,
}

/// Relative residual above which [`recover_even_norm_with`] reports failure.
pub const EVEN_NORM_TOLERANCE: f64 = 1e-2;

/// Estimates `‖a‖_{2N}^{2N}` for square-zero `a` from the values
/// `oracle(t) = (‖1+ta‖_p^p, ‖1−ta‖_p^p)` and the lower norms
/// `‖a‖_{2n}^{2n}`, `1 ≤ n < N`, using the ladder `t₀, t₀/2, t₀/4, t₀/8` and
/// extrapolation in `t²`.
pub fn recover_even_norm_with(
    oracle: impl Fn(f64) -> Result<(f64, f64)>,
    p: f64,
    n: usize,
    lower_norms: &[f64],
    t0: f64,
) -> Result<EvenNormEstimate> {
    check_exponent(p)?;
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    if lower_norms.len() + 1 < n {
        return Err(Error::InvalidArgument(format!(
            "need ‖a‖_(2n)^(2n) for 1 <= n < {n}, got {} values",
            lower_norms.len()
        )));
    }
    let half = p / 2.0;
    if half.fract() == 0.0 && (half as usize) < n {
        return Err(Error::LambdaZero { p, n });
    }
    if !(t0.is_finite() && t0 > 0.0) {
        return Err(Error::InvalidArgument(format!("t0 must be positive, got {t0}")));
    }
    let series = psi_series(p, n)?;
    let ladder: Vec<f64> = (0..4).map(|i| t0 * 0.5f64.powi(i)).collect();
    let raw = ladder
        .iter()
        .map(|&t| {
            let (plus, minus) = oracle(t)?;
            let mut num = plus + minus - 2.0;
            for k in 1..n {
                num -= 2.0 * series.lambda(k) * t.powi(2 * k as i32) * lower_norms[k - 1];
            }
            Ok(num / (2.0 * series.lambda(n) * t.powi(2 * n as i32)))
        })
        .collect::<Result<Vec<f64>>>()?;
    let as_c: Vec<Complex64> = raw.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let best = richardson_limit(&ladder[1..], &as_c[1..], &[2, 4])?.re;
    let other = richardson_limit(&ladder[..3], &as_c[..3], &[2, 4])?.re;
    let residual = (best - other).abs();
    if residual > EVEN_NORM_TOLERANCE * best.abs().max(1e-12) {
        return Err(Error::NonConvergence {
            residual,
            tolerance: EVEN_NORM_TOLERANCE * best.abs(),
        });
    }
    Ok(EvenNormEstimate {
        value: best,
        residual,
        ladder,
        raw,
    })
}

/// [`recover_even_norm_with`] for an explicit matrix, with
/// `t₀²‖a‖² = 0.1`.
pub fn recover_even_norm(a: &ComplexMatrix, p: f64, n: usize, lower_norms: &[f64]) -> Result<EvenNormEstimate> {
    let op = a.operator_norm();
    if op == 0.0 {
        check_exponent(p)?;
        return Ok(EvenNormEstimate {
            value: 0.0,
            residual: 0.0,
            ladder: Vec::new(),
            raw: Vec::new(),
        });
    }
    let t0 = 0.1f64.sqrt() / op;
    recover_even_norm_with(
        |t| {
            let plus = schatten_p_power(&plus_identity(a.scale_real(t), 1.0), p)?;
            let minus = schatten_p_power(&plus_identity(a.scale_real(-t), 1.0), p)?;
            Ok((plus, minus))
        },
        p,
        n,
        lower_norms,
        t0,
    )
}

/// `‖a‖_{2n}^{2n} = τ((a^*a)^n)`.
pub fn even_norm_power(a: &ComplexMatrix, n: usize) -> f64 {
    a.adjoint_mul(a).powi(n as u32).normalized_trace().re
}

/// `r^{−n}‖|1+rX|^p − Σ_{j≤n} binom(p/2, j) Y_r^j‖`, with
/// `Y_r = r(X + X^*) + r²X^*X` and all powers of `r` above `n` dropped.
pub fn truncation_remainder(x: &ComplexMatrix, p: f64, n: usize, r: f64) -> Result<f64> {
    check_exponent(p)?;
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("r must be positive, got {r}")));
    }
    let d = x.dim();
    let lin = x + &x.adjoint();
    let quad = x.adjoint_mul(x);
    // polynomials in r: index = degree
    let mul = |a: &[ComplexMatrix], b: &[ComplexMatrix]| {
        let mut out = vec![ComplexMatrix::zeros(d); n + 1];
        for (i, ai) in a.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                if i + j <= n {
                    out[i + j] += &ai.matmul(bj);
                }
            }
        }
        out
    };
    let mut y = vec![ComplexMatrix::zeros(d); n + 1];
    if n >= 1 {
        y[1] = lin;
    }
    if n >= 2 {
        y[2] = quad;
    }
    let mut power = vec![ComplexMatrix::zeros(d); n + 1];
    power[0] = ComplexMatrix::identity(d);
    let mut series = vec![ComplexMatrix::zeros(d); n + 1];
    for j in 0..=n {
        let c = generalized_binomial(p / 2.0, j);
        for (s, pw) in series.iter_mut().zip(&power) {
            s.add_scaled(Complex64::new(c, 0.0), pw);
        }
        power = mul(&power, &y);
    }
    let mut q = ComplexMatrix::zeros(d);
    for (k, s) in series.iter().enumerate() {
        q.add_scaled(Complex64::new(r.powi(k as i32), 0.0), s);
    }
    let exact = abs_power(&plus_identity(x.scale_real(r), 1.0), p)?;
    Ok((&exact - &q).operator_norm() / r.powi(n as i32))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_examples() {
        assert_eq!(psi_eval(0.0, 3.3).unwrap(), 2.0);
        for t in [0.0, 0.5, 3.0, 40.0] {
            assert!((psi_eval(t, 2.0).unwrap() - (2.0 + t)).abs() < 1e-12 * (2.0 + t));
        }
        let t = 1.0;
        let direct = psi_eval_direct(t, 4.0);
        assert!((psi_eval(t, 4.0).unwrap() - direct).abs() < 1e-13);
        assert!((psi_series_adaptive(t, 4.0).unwrap() - direct).abs() < 1e-10);
        assert!(psi_eval(-1.0, 1.0).is_err());
    }

    #[test]
    fn series_coefficients() {
        let s = psi_series(3.0, 3).unwrap();
        assert_eq!(s.lambda(0), 2.0);
        assert_eq!(s.lambda(1), 2.25);
        assert_eq!(psi_series(2.0, 2).unwrap().lambda(2), 0.0);
    }

    #[test]
    fn tail_sign_examples() {
        assert!(psi_tail_sign(1.0, 1.0, 1).unwrap() <= 0.0);
        assert!(!psi_tail_nonnegative(1.0, 1));
        assert!(psi_tail_sign(2.0, 5.0, 2).unwrap() >= 0.0);
        assert!(psi_tail_nonnegative(5.0, 2));
        assert!(psi_tail_sign(1e-6, 1.5, 2).unwrap().abs() < 1e-15);
    }

    #[test]
    fn cycle_polynomials() {
        assert_eq!(cycle_polynomial(1).unwrap(), vec![0, 1]);
        assert_eq!(cycle_polynomial(2).unwrap(), vec![0, 2, 1]);
        assert_eq!(cycle_polynomial(3).unwrap(), vec![0, 0, 3, 1]);
        for m in 1..=8 {
            let c = cycle_polynomial(m).unwrap();
            for x in [-3.0, -0.5, 0.7, 2.0] {
                let want = cycle_polynomial_closed(m, x);
                assert!((eval_polynomial(&c, x) - want).abs() < 1e-9 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn corner_examples() {
        let a = corner_embed(&ComplexMatrix::identity(1));
        assert_eq!(a, ComplexMatrix::unit(2, 0, 1));
        assert_eq!(a.matmul(&a), ComplexMatrix::zeros(2));
        assert_eq!(corner_embed(&ComplexMatrix::zeros(2)), ComplexMatrix::zeros(4));
    }

    #[test]
    fn four_term_counterexample() {
        let d = four_term_defect(&ComplexMatrix::identity(1), 0.5).unwrap();
        assert!((d - (2f64.powf(1.5) - 4.0)).abs() < 1e-12);
        assert!(four_term_defect(&ComplexMatrix::zeros(2), 1.3).unwrap().abs() < 1e-14);
    }

    #[test]
    fn even_norm_examples() {
        let e12 = ComplexMatrix::unit(2, 0, 1);
        let est = recover_even_norm(&e12, 3.0, 1, &[]).unwrap();
        assert!((est.value - 0.5).abs() < 1e-6);
        assert_eq!(recover_even_norm(&ComplexMatrix::zeros(2), 3.0, 2, &[0.0]).unwrap().value, 0.0);
        assert_eq!(
            recover_even_norm(&e12, 2.0, 2, &[0.5]).unwrap_err(),
            Error::LambdaZero { p: 2.0, n: 2 }
        );
        let a = corner_embed(&ComplexMatrix::real_diag(&[1.0, 2.0]));
        let lower = [even_norm_power(&a, 1)];
        let est = recover_even_norm(&a, 3.0, 2, &lower).unwrap();
        assert!((est.value - 17.0 / 4.0).abs() < 1e-4, "{}", est.value);
    }

    #[test]
    fn truncation_examples() {
        let x = ComplexMatrix::from_fn(2, |i, j| Complex64::new(0.3 * i as f64 - 0.1, 0.2 * j as f64));
        assert!(truncation_remainder(&ComplexMatrix::zeros(2), 3.0, 2, 0.01).unwrap() < 1e-14);
        assert!(truncation_remainder(&x, 2.0, 2, 0.01).unwrap() < 1e-9);
        let r1 = truncation_remainder(&x, 2.0, 1, 0.01).unwrap();
        assert!((r1 - 0.01 * x.adjoint_mul(&x).operator_norm()).abs() < 1e-12);
    }
}
