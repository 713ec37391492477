//! Recovering a single `*`-moment from p-norm evaluations.
//!
//! With a cyclic-trace gadget `a_1..a_n`, the Fourier coefficient of
//! `z ↦ ‖1 + Σ z_j a_j^{ε_j} ⊗ x_j‖_p^p` at `z^ε` (with `z_j^* = z̄_j`) equals
//! `C(p, n, α(ε))·τ(x_1^{ε_1}···x_n^{ε_n})`. The coefficient is sampled on a
//! roots-of-unity grid of radius `r`, and the aliased higher-order terms are
//! removed by extrapolating `r → 0`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{check_family, eigenvalues_of_symmetrized, schatten_p_power, ComplexMatrix, StarWord};
use crate::binomial::{alpha_count, binomial_i, nonzero_moment_coefficient};
use crate::error::{Error, Result};
use crate::gadget::{compact_family, GadgetFamily};

/// Largest `n·k` accepted by [`gram_deviation_coefficient`].
pub const GRAM_GUARD: usize = 20;
pub const DEFAULT_TOLERANCE: f64 = 1e-3;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::InvalidExponent(p));
    }
    Ok(())
}

/// Black-box access to `z ↦ ‖S_z‖_p^p`.
///
/// Implementations must be deterministic and safe to call from several
/// threads at once.
pub trait NormOracle: Sync {
    fn arity(&self) -> usize;

    fn p(&self) -> f64;

    /// `‖S_z‖_p^p`.
    fn evaluate(&self, z: &[Complex64]) -> Result<f64>;

    /// `‖S_z‖_p^p − 1`. Oracles that can compute this without cancellation
    /// should override it; the grid sums only ever see differences.
    fn evaluate_deviation(&self, z: &[Complex64]) -> Result<f64> {
        Ok(self.evaluate(z)? - 1.0)
    }

    /// Radius below which the binomial series of `|S_z|^p` converges with
    /// margin, when known.
    fn admissible_radius(&self) -> Option<f64> {
        None
    }
}

/// Oracle backed by an explicit matrix realization of `S_z`.
#[derive(Debug, Clone)]
pub struct TensorNormOracle {
    p: f64,
    blocks: Vec<ComplexMatrix>,
    gadget_dim: usize,
    element_dim: usize,
    admissible: f64,
}

impl TensorNormOracle {
    pub fn gadget_dim(&self) -> usize {
        self.gadget_dim
    }

    pub fn element_dim(&self) -> usize {
        self.element_dim
    }

    /// `Σ z_j a_j^{ε_j} ⊗ x_j`.
    pub fn perturbation(&self, z: &[Complex64]) -> Result<ComplexMatrix> {
        if z.len() != self.blocks.len() {
            return Err(Error::DimensionMismatch {
                expected: self.blocks.len(),
                found: z.len(),
            });
        }
        let mut acc = ComplexMatrix::zeros(self.gadget_dim * self.element_dim);
        for (zj, b) in z.iter().zip(&self.blocks) {
            if *zj != zero() {
                acc.add_scaled(*zj, b);
            }
        }
        Ok(acc)
    }

    pub fn operator(&self, z: &[Complex64]) -> Result<ComplexMatrix> {
        let mut s = self.perturbation(z)?;
        for i in 0..s.dim() {
            s[(i, i)] += 1.0;
        }
        Ok(s)
    }
}

impl NormOracle for TensorNormOracle {
    fn arity(&self) -> usize {
        self.blocks.len()
    }

    fn p(&self) -> f64 {
        self.p
    }

    fn evaluate(&self, z: &[Complex64]) -> Result<f64> {
        schatten_p_power(&self.operator(z)?, self.p)
    }

    /// Uses `S_z^*S_z − 1 = Z + Z^* + Z^*Z` and `(1+μ)^{p/2} − 1` evaluated
    /// through `expm1`/`ln_1p`, so the result is accurate relative to `|z|`
    /// rather than to 1.
    fn evaluate_deviation(&self, z: &[Complex64]) -> Result<f64> {
        let zm = self.perturbation(z)?;
        let dev = &(&zm + &zm.adjoint()) + &zm.adjoint_mul(&zm);
        let mu = eigenvalues_of_symmetrized(dev.hermitian_part());
        if mu.first().is_some_and(|&m| m <= -0.5) {
            return Ok(self.evaluate(z)? - 1.0);
        }
        let half = self.p / 2.0;
        let sum: f64 = mu.iter().map(|&m| (half * m.ln_1p()).exp_m1()).sum();
        Ok(sum / mu.len() as f64)
    }

    fn admissible_radius(&self) -> Option<f64> {
        Some(self.admissible)
    }
}

/// Oracle wrapping a closure, for norm data that does not come from an
/// explicit tensor.
pub struct FnOracle<F> {
    arity: usize,
    p: f64,
    admissible: Option<f64>,
    f: F,
}

impl<F> FnOracle<F>
where
    F: Fn(&[Complex64]) -> f64 + Sync,
{
    pub fn new(arity: usize, p: f64, admissible: Option<f64>, f: F) -> Self {
        Self { arity, p, admissible, f }
    }
}

impl<F> NormOracle for FnOracle<F>
where
    F: Fn(&[Complex64]) -> f64 + Sync,
{
    fn arity(&self) -> usize {
        self.arity
    }

    fn p(&self) -> f64 {
        self.p
    }

    fn evaluate(&self, z: &[Complex64]) -> Result<f64> {
        if z.len() != self.arity {
            return Err(Error::DimensionMismatch {
                expected: self.arity,
                found: z.len(),
            });
        }
        Ok((self.f)(z))
    }

    fn admissible_radius(&self) -> Option<f64> {
        self.admissible
    }
}

/// `r·(n²+2n)·K < 1/2` with `K = max_j max(‖a_j‖‖x_j‖, ‖a_j‖²‖x_j‖²)`.
pub fn admissible_radius(coefficient_norms: &[f64], element_norms: &[f64]) -> f64 {
    let n = coefficient_norms.len() as f64;
    let k = coefficient_norms
        .iter()
        .zip(element_norms)
        .map(|(a, x)| {
            let ax = a * x;
            ax.max(ax * ax)
        })
        .fold(0.0, f64::max);
    if k == 0.0 {
        f64::INFINITY
    } else {
        0.5 / ((n * n + 2.0 * n) * k)
    }
}

/// Resolves the element used in slot `j` of `word` and the slot coefficient
/// `a_j^{ε_j}`.
fn slots<'a>(
    gadget: &'a GadgetFamily,
    elements: &'a [ComplexMatrix],
    word: &StarWord,
) -> Result<Vec<(ComplexMatrix, &'a ComplexMatrix, bool)>> {
    if word.is_empty() {
        return Err(Error::InvalidArgument("the word must be non-empty".into()));
    }
    if gadget.n() != word.len() {
        return Err(Error::DimensionMismatch {
            expected: gadget.n(),
            found: word.len(),
        });
    }
    check_family(elements)?;
    word.check_indices(elements.len())?;
    Ok(word
        .letters()
        .iter()
        .enumerate()
        .map(|(j, l)| {
            let a = gadget.get(j);
            let coeff = if l.star { a.adjoint() } else { a.clone() };
            (coeff, &elements[l.index], l.star)
        })
        .collect())
}

/// Builds the oracle `z ↦ ‖1 + Σ z_j a_j^{ε_j} ⊗ x_{i_j}‖_p^p` for the word
/// `x_{i_1}^{ε_1}···x_{i_n}^{ε_n}`.
pub fn make_norm_oracle(
    gadget: &GadgetFamily,
    elements: &[ComplexMatrix],
    word: &StarWord,
    p: f64,
) -> Result<TensorNormOracle> {
    check_exponent(p)?;
    let slots = slots(gadget, elements, word)?;
    let coefficient_norms: Vec<f64> = slots.iter().map(|(a, _, _)| a.operator_norm()).collect();
    let element_norms: Vec<f64> = slots.iter().map(|(_, x, _)| x.operator_norm()).collect();
    let blocks = slots.iter().map(|(a, x, _)| a.kron(x)).collect();
    Ok(TensorNormOracle {
        p,
        blocks,
        gadget_dim: gadget.dim(),
        element_dim: elements[0].dim(),
        admissible: admissible_radius(&coefficient_norms, &element_norms),
    })
}

/// One term of `S_z^*S_z − 1` with its monomial `z^k z̄^l`.
struct Brick {
    z_exp: usize,
    zbar_exp: usize,
    matrix: ComplexMatrix,
}

/// Exact coefficient of `z^ε` in `(S_z^*S_z − 1)^k`, obtained by expanding
/// the `k`-th power over the `n² + 2n` terms `z_j B_j`, `z̄_j B_j^*` and
/// `z̄_i z_j B_i^* B_j`.
pub fn gram_deviation_coefficient(
    gadget: &GadgetFamily,
    elements: &[ComplexMatrix],
    word: &StarWord,
    k: usize,
) -> Result<ComplexMatrix> {
    let n = word.len();
    if n * k > GRAM_GUARD {
        return Err(Error::GuardExceeded {
            required: (n * k) as u128,
            limit: GRAM_GUARD as u128,
        });
    }
    let slots = slots(gadget, elements, word)?;
    let blocks: Vec<ComplexMatrix> = slots.iter().map(|(a, x, _)| a.kron(x)).collect();
    let dim = blocks[0].dim();
    let mut bricks = Vec::with_capacity(n * n + 2 * n);
    for (j, b) in blocks.iter().enumerate() {
        bricks.push(Brick {
            z_exp: 1 << j,
            zbar_exp: 0,
            matrix: b.clone(),
        });
        bricks.push(Brick {
            z_exp: 0,
            zbar_exp: 1 << j,
            matrix: b.adjoint(),
        });
    }
    for (i, bi) in blocks.iter().enumerate() {
        for (j, bj) in blocks.iter().enumerate() {
            // z̄_i z_j: a repeated variable can never divide z^ε
            if i == j {
                continue;
            }
            bricks.push(Brick {
                z_exp: 1 << j,
                zbar_exp: 1 << i,
                matrix: bi.adjoint_mul(bj),
            });
        }
    }
    let target_z: usize = (0..n).filter(|&j| !slots[j].2).map(|j| 1 << j).sum();
    let target_zbar: usize = (0..n).filter(|&j| slots[j].2).map(|j| 1 << j).sum();

    fn expand(
        bricks: &[Brick],
        remaining: usize,
        used_z: usize,
        used_zbar: usize,
        target: (usize, usize),
        prefix: &ComplexMatrix,
        acc: &mut ComplexMatrix,
    ) {
        if remaining == 0 {
            if (used_z, used_zbar) == target {
                *acc += prefix;
            }
            return;
        }
        for b in bricks {
            if b.z_exp & (used_z | !target.0) != 0 || b.zbar_exp & (used_zbar | !target.1) != 0 {
                continue;
            }
            let next = prefix.matmul(&b.matrix);
            expand(
                bricks,
                remaining - 1,
                used_z | b.z_exp,
                used_zbar | b.zbar_exp,
                target,
                &next,
                acc,
            );
        }
    }

    let mut acc = ComplexMatrix::zeros(dim);
    expand(
        &bricks,
        k,
        0,
        0,
        (target_z, target_zbar),
        &ComplexMatrix::identity(dim),
        &mut acc,
    );
    Ok(acc)
}

/// `k·binom(α, n−k)`, the multiplier of `τ(word)` in the trace of
/// [`gram_deviation_coefficient`].
pub fn gram_trace_multiplier(n: usize, alpha: usize, k: usize) -> f64 {
    k as f64 * binomial_i(alpha as i64, n as i64 - k as i64) as f64
}

/// Radii, grid order and extrapolation depth for [`extrapolated_moment`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtrapolationPlan {
    pub radii: Vec<f64>,
    pub q: usize,
    pub richardson_order: usize,
    /// Largest accepted extrapolation residual (in moment units).
    pub tolerance: f64,
}

impl ExtrapolationPlan {
    /// `r₀ = bound/4`, three halvings, `q = 2n+3`, order 2.
    pub fn standard(n: usize, admissible: f64) -> Self {
        PlanTemplate::default().instantiate(n, admissible)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q < 3 {
            return Err(Error::InvalidArgument(format!("grid order q = {} must be at least 3", self.q)));
        }
        if self.radii.is_empty() || self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidArgument("radii must be positive and finite".into()));
        }
        if self.radii.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument("radii must be strictly decreasing".into()));
        }
        if self.radii.len() < self.richardson_order + 1 {
            return Err(Error::InvalidArgument(format!(
                "order {} extrapolation needs at least {} radii",
                self.richardson_order,
                self.richardson_order + 1
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Powers of `r` in the error of [`fourier_moment_estimate`], ascending.
///
/// Extra factors `|z_j|²` add even powers. Aliasing shifts one exponent
/// difference `k_j − l_j` by a multiple of `q`, costing at least `q − 2` extra
/// degrees; for even `q` that keeps the parity, for odd `q` every integer from
/// `q − 2` on can occur.
pub fn error_exponents(q: usize, count: usize) -> Vec<u32> {
    let alias = q.saturating_sub(2) as u32;
    (1u32..)
        .filter(|&e| e % 2 == 0 || (q % 2 == 1 && e >= alias))
        .take(count)
        .collect()
}

/// `(1/(qⁿ rⁿ)) Σ_grid (‖S_z‖_p^p − 1)·Π_j phase_j` over `z_j = r ω^{m_j}`,
/// `ω = e^{2πi/q}`, with phase `ω^{−m_j}` for plain letters and `ω^{m_j}` for
/// starred ones.
pub fn fourier_moment_estimate(oracle: &dyn NormOracle, word: &StarWord, r: f64, q: usize) -> Result<Complex64> {
    let n = oracle.arity();
    if word.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: word.len(),
        });
    }
    if q < 3 {
        return Err(Error::InvalidArgument(format!("grid order q = {q} must be at least 3")));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    if let Some(bound) = oracle.admissible_radius() {
        if r >= bound {
            return Err(Error::RadiusTooLarge { radius: r, bound });
        }
    }
    let stars = word.pattern();
    let roots: Vec<Complex64> = (0..q)
        .map(|m| Complex64::from_polar(1.0, std::f64::consts::TAU * m as f64 / q as f64))
        .collect();
    let total = q.checked_pow(n as u32).ok_or(Error::GuardExceeded {
        required: u128::MAX,
        limit: usize::MAX as u128,
    })?;
    let sum = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut z = Vec::with_capacity(n);
            let mut phase = Complex64::new(1.0, 0.0);
            for &star in &stars {
                let w = roots[idx % q];
                idx /= q;
                z.push(w * r);
                phase *= if star { w } else { w.conj() };
            }
            let v = oracle.evaluate_deviation(&z)?;
            if !v.is_finite() {
                return Err(Error::NonConvergence {
                    residual: f64::NAN,
                    tolerance: 0.0,
                });
            }
            Ok(phase * v)
        })
        .try_reduce(zero, |a, b| Ok(a + b))?;
    Ok(sum / (total as f64 * r.powi(n as i32)))
}

/// Solves a small dense real system with complex right-hand side by Gaussian
/// elimination with partial pivoting.
fn solve_real_complex(mut a: Vec<Vec<f64>>, mut b: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col] == 0.0 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            let bc = b[col];
            b[row] -= bc * f;
        }
    }
    let mut x = vec![zero(); n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for c in row + 1..n {
            s -= x[c] * a[row][c];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// Limit at `r = 0` of values `f(r_i) = L + Σ_t c_t r_i^{e_t}`, fitted exactly
/// through `len(exponents) + 1` points.
pub fn richardson_limit(radii: &[f64], values: &[Complex64], exponents: &[u32]) -> Result<Complex64> {
    let k = exponents.len();
    if radii.len() != k + 1 || values.len() != k + 1 {
        return Err(Error::InvalidArgument("extrapolation needs one more point than exponents".into()));
    }
    let scale = radii.iter().cloned().fold(0.0, f64::max);
    let a: Vec<Vec<f64>> = radii
        .iter()
        .map(|&r| {
            let x = r / scale;
            std::iter::once(1.0).chain(exponents.iter().map(|&e| x.powi(e as i32))).collect()
        })
        .collect();
    let sol = solve_real_complex(a, values.to_vec())
        .ok_or_else(|| Error::InvalidArgument("extrapolation radii are degenerate".into()))?;
    Ok(sol[0])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub value: Complex64,
    /// Gap between two extrapolations on overlapping radius windows.
    pub residual: f64,
    pub coefficient: f64,
    pub alpha: usize,
    /// Raw normalized Fourier estimates, one per radius.
    pub raw: Vec<Complex64>,
}

/// Estimates `τ(word)` through `oracle` by extrapolating Fourier estimates to
/// `r = 0` and dividing by `C(p, n, α)`.
pub fn extrapolated_moment(
    oracle: &dyn NormOracle,
    word: &StarWord,
    p: f64,
    plan: &ExtrapolationPlan,
) -> Result<MomentEstimate> {
    check_exponent(p)?;
    if (oracle.p() - p).abs() > 1e-12 * p {
        return Err(Error::InvalidArgument(format!(
            "oracle exponent {} differs from requested p = {p}",
            oracle.p()
        )));
    }
    plan.validate()?;
    let alpha = alpha_count(&word.pattern())?;
    let coefficient = nonzero_moment_coefficient(p, word.len(), alpha)?;
    let raw = plan
        .radii
        .iter()
        .map(|&r| fourier_moment_estimate(oracle, word, r, plan.q))
        .collect::<Result<Vec<_>>>()?;
    let order = plan.richardson_order;
    let m = raw.len();
    let exps = error_exponents(plan.q, order);
    let best = richardson_limit(&plan.radii[m - order - 1..], &raw[m - order - 1..], &exps)?;
    let other = if m > order + 1 {
        richardson_limit(&plan.radii[m - order - 2..m - 1], &raw[m - order - 2..m - 1], &exps)?
    } else if order > 0 {
        richardson_limit(&plan.radii[m - order..], &raw[m - order..], &exps[..order - 1])?
    } else {
        raw[m - 1]
    };
    let value = best / coefficient;
    let residual = ((best - other) / coefficient).norm();
    if !(residual <= plan.tolerance) {
        return Err(Error::NonConvergence {
            residual,
            tolerance: plan.tolerance,
        });
    }
    Ok(MomentEstimate {
        value,
        residual,
        coefficient,
        alpha,
        raw,
    })
}

/// Shape of a plan independent of the admissibility bound: the radius
/// ladder starts at a quarter of the bound and halves `radii − 1` times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanTemplate {
    /// Grid order; `None` means `2n + 3`.
    pub q: Option<usize>,
    pub radii: usize,
    pub richardson_order: usize,
    pub tolerance: f64,
}

impl Default for PlanTemplate {
    fn default() -> Self {
        Self {
            q: None,
            radii: 4,
            richardson_order: 2,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

impl PlanTemplate {
    pub fn instantiate(&self, n: usize, admissible: f64) -> ExtrapolationPlan {
        let r0 = if admissible.is_finite() { admissible / 4.0 } else { 0.1 };
        ExtrapolationPlan {
            radii: (0..self.radii).map(|i| r0 * 0.5f64.powi(i as i32)).collect(),
            q: self.q.unwrap_or(2 * n + 3),
            richardson_order: self.richardson_order,
            tolerance: self.tolerance,
        }
    }
}

enum PlanSource<'a> {
    Template(&'a PlanTemplate),
    Fixed(&'a ExtrapolationPlan),
}

/// Full pipeline for one word: compact gadget, elements rescaled to operator
/// norm at most 1, plan built from `template`, estimate un-rescaled.
pub fn estimate_word_moment(
    elements: &[ComplexMatrix],
    word: &StarWord,
    p: f64,
    template: &PlanTemplate,
) -> Result<MomentEstimate> {
    estimate_impl(elements, word, p, PlanSource::Template(template))
}

/// [`estimate_word_moment`] with explicit radii (applied to the rescaled
/// elements).
pub fn estimate_word_moment_with_plan(
    elements: &[ComplexMatrix],
    word: &StarWord,
    p: f64,
    plan: &ExtrapolationPlan,
) -> Result<MomentEstimate> {
    estimate_impl(elements, word, p, PlanSource::Fixed(plan))
}

fn estimate_impl(elements: &[ComplexMatrix], word: &StarWord, p: f64, source: PlanSource<'_>) -> Result<MomentEstimate> {
    check_exponent(p)?;
    check_family(elements)?;
    word.check_indices(elements.len())?;
    if word.is_empty() {
        return Ok(MomentEstimate {
            value: Complex64::new(1.0, 0.0),
            residual: 0.0,
            coefficient: 1.0,
            alpha: 0,
            raw: Vec::new(),
        });
    }
    let scales: Vec<f64> = elements.iter().map(|x| x.operator_norm().max(1.0)).collect();
    let scaled: Vec<ComplexMatrix> = elements.iter().zip(&scales).map(|(x, s)| x.scale_real(1.0 / s)).collect();
    let gadget = compact_family(word.len())?;
    let oracle = make_norm_oracle(&gadget, &scaled, word, p)?;
    let built;
    let plan = match source {
        PlanSource::Fixed(plan) => plan,
        PlanSource::Template(t) => {
            built = t.instantiate(word.len(), oracle.admissible);
            &built
        }
    };
    let mut est = extrapolated_moment(&oracle, word, p, plan)?;
    let factor: f64 = word.letters().iter().map(|l| scales[l.index]).product();
    est.value *= factor;
    est.residual *= factor;
    Ok(est)
}
