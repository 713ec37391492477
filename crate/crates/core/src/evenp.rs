//! Even exponents `p = 2m`: `‖1 + Σ a_j ⊗ x_j‖_{2m}^{2m}` is a finite sum of
//! word traces, so finitely many moments decide every matrix level.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{check_family, schatten_p_power, word_trace, ComplexMatrix, Letter, StarWord};
use crate::binomial::{alpha_count, binomial_i};
use crate::error::{Error, Result};
use crate::gadget::compact_family;
use crate::rng::{trial_rng, unit_disk};

/// Largest `(2N)^{2m}` accepted by the expansion.
pub const EXPANSION_GUARD: u128 = 1_000_000;
pub const MOMENT_TOL: f64 = 1e-9;
pub const NORM_TOL: f64 = 1e-8;

/// `Σ_{0≤j≤k} (j/k)·binom(m, j)·binom(α(ε), k−j)`; 1 for the empty pattern.
pub fn expansion_weight(m: usize, stars: &[bool]) -> Result<f64> {
    let k = stars.len();
    if k == 0 {
        return Ok(1.0);
    }
    let alpha = alpha_count(stars)? as i64;
    let mut w = 0.0;
    for j in 0..=k {
        let b = binomial_i(m as i64, j as i64) * binomial_i(alpha, k as i64 - j as i64);
        w += j as f64 / k as f64 * b as f64;
    }
    Ok(w)
}

fn check_guard(n_elements: usize, m: usize) -> Result<()> {
    let required = ((2 * n_elements) as u128).saturating_pow(2 * m as u32);
    if required > EXPANSION_GUARD {
        return Err(Error::GuardExceeded {
            required,
            limit: EXPANSION_GUARD,
        });
    }
    Ok(())
}

fn star_of(m: &ComplexMatrix, star: bool) -> ComplexMatrix {
    if star {
        m.adjoint()
    } else {
        m.clone()
    }
}

/// `Σ_{k≤2m} Σ_{ε, i} tr(a_{i_1}^{ε_1}···a_{i_k}^{ε_k})·τ(x_{i_1}^{ε_1}···x_{i_k}^{ε_k})·W(k, ε)`,
/// which equals `‖1 + Σ a_j ⊗ x_j‖_{2m}^{2m}`.
pub fn expand_even_norm(coeffs: &[ComplexMatrix], elements: &[ComplexMatrix], m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    if coeffs.len() != elements.len() {
        return Err(Error::DimensionMismatch {
            expected: elements.len(),
            found: coeffs.len(),
        });
    }
    check_guard(elements.len(), m)?;
    let na = check_family(coeffs)?.max(1);
    let nx = check_family(elements)?.max(1);
    let letters: Vec<(ComplexMatrix, ComplexMatrix, bool)> = coeffs
        .iter()
        .zip(elements)
        .flat_map(|(a, x)| [false, true].map(|s| (star_of(a, s), star_of(x, s), s)))
        .collect();
    // weights depend only on the star pattern: index by the pattern bits
    let mut weights: Vec<Vec<f64>> = Vec::with_capacity(2 * m + 1);
    for k in 0..=2 * m {
        weights.push(
            (0..1usize << k)
                .map(|bits| {
                    let stars: Vec<bool> = (0..k).map(|i| bits >> i & 1 == 1).collect();
                    expansion_weight(m, &stars)
                })
                .collect::<Result<Vec<_>>>()?,
        );
    }

    struct Walk<'a> {
        letters: &'a [(ComplexMatrix, ComplexMatrix, bool)],
        weights: &'a [Vec<f64>],
        max_len: usize,
    }

    impl Walk<'_> {
        fn go(&self, pa: &ComplexMatrix, px: &ComplexMatrix, depth: usize, bits: usize) -> Complex64 {
            let w = self.weights[depth][bits];
            let mut acc = if w != 0.0 {
                pa.normalized_trace() * px.normalized_trace() * w
            } else {
                Complex64::new(0.0, 0.0)
            };
            if depth < self.max_len {
                for (a, x, s) in self.letters {
                    let nb = bits | (usize::from(*s) << depth);
                    acc += self.go(&pa.matmul(a), &px.matmul(x), depth + 1, nb);
                }
            }
            acc
        }
    }

    let walk = Walk {
        letters: &letters,
        weights: &weights,
        max_len: 2 * m,
    };
    let total = walk.go(&ComplexMatrix::identity(na), &ComplexMatrix::identity(nx), 0, 0);
    Ok(total.re)
}

/// `‖1 + Σ a_j ⊗ x_j‖_p^p` computed from singular values.
pub fn direct_norm_power(coeffs: &[ComplexMatrix], elements: &[ComplexMatrix], p: f64, with_identity: bool) -> Result<f64> {
    let na = check_family(coeffs)?;
    let nx = check_family(elements)?;
    let mut s = ComplexMatrix::zeros(na * nx);
    for (a, x) in coeffs.iter().zip(elements) {
        s += &a.kron(x);
    }
    if with_identity {
        for i in 0..s.dim() {
            s[(i, i)] += 1.0;
        }
    }
    schatten_p_power(&s, p)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelCheck {
    pub level: usize,
    pub trials: usize,
    pub max_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferReport {
    /// Which hypothesis was verified in place of m-isometry.
    pub formulation: &'static str,
    pub m: usize,
    pub seed: u64,
    pub moments_checked: usize,
    pub max_moment_gap: f64,
    pub levels: Vec<LevelCheck>,
    pub pass: bool,
    pub tolerance: f64,
}

fn random_coefficients(seed: u64, stream: u64, count: usize, level: usize) -> Vec<ComplexMatrix> {
    let mut rng = trial_rng(seed, stream);
    (0..count)
        .map(|_| {
            let c = ComplexMatrix::from_fn(level, |_, _| unit_disk(&mut rng));
            let n = c.operator_norm();
            if n > 1.0 {
                c.scale_real(1.0 / n)
            } else {
                c
            }
        })
        .collect()
}

fn level_checks(
    x_fam: &[ComplexMatrix],
    y_fam: &[ComplexMatrix],
    m: usize,
    levels: &[usize],
    trials: usize,
    seed: u64,
    with_identity: bool,
) -> Result<Vec<LevelCheck>> {
    let p = 2.0 * m as f64;
    levels
        .iter()
        .map(|&level| {
            if level == 0 {
                return Err(Error::InvalidArgument("levels must be at least 1".into()));
            }
            let max_gap = (0..trials as u64)
                .into_par_iter()
                .map(|t| {
                    let coeffs = random_coefficients(seed, (level as u64) << 32 | t, x_fam.len(), level);
                    let a = direct_norm_power(&coeffs, x_fam, p, with_identity)?.powf(1.0 / p);
                    let b = direct_norm_power(&coeffs, y_fam, p, with_identity)?.powf(1.0 / p);
                    Ok((a - b).abs())
                })
                .try_reduce(|| 0.0, |a, b| Ok(f64::max(a, b)))?;
            Ok(LevelCheck {
                level,
                trials,
                max_gap,
            })
        })
        .collect()
}

fn check_pair(x_fam: &[ComplexMatrix], y_fam: &[ComplexMatrix]) -> Result<()> {
    if x_fam.len() != y_fam.len() || x_fam.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "families of {} and {} elements",
            x_fam.len(),
            y_fam.len()
        )));
    }
    check_family(x_fam)?;
    check_family(y_fam)?;
    Ok(())
}

/// Moments entering the `2m`-norm expansion with nonzero weight must agree
/// (this is what level-`m` isometry pins down); then sampled norms of
/// `1 + Σ a_j ⊗ x_j` at every requested level are compared.
pub fn even_p_transfer_check(
    x_fam: &[ComplexMatrix],
    y_fam: &[ComplexMatrix],
    m: usize,
    levels: &[usize],
    trials: usize,
    seed: u64,
) -> Result<TransferReport> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    check_pair(x_fam, y_fam)?;
    check_guard(x_fam.len(), m)?;
    let words = crate::distribution::all_words(x_fam.len(), 2 * m, true)?;
    let mut max_gap: f64 = 0.0;
    let mut checked = 0;
    for w in &words {
        let weight = expansion_weight(m, &w.pattern())?;
        if weight == 0.0 {
            continue;
        }
        checked += 1;
        let gap = weight.abs() * (word_trace(x_fam, w)? - word_trace(y_fam, w)?).norm();
        if gap > MOMENT_TOL {
            return Err(Error::PreconditionFailed { word: w.clone(), gap });
        }
        max_gap = max_gap.max(gap);
    }
    let levels = level_checks(x_fam, y_fam, m, levels, trials, seed, true)?;
    Ok(TransferReport {
        formulation: "weighted moments of length <= 2m agree",
        m,
        seed,
        moments_checked: checked,
        max_moment_gap: max_gap,
        pass: levels.iter().all(|l| l.max_gap <= NORM_TOL),
        levels,
        tolerance: NORM_TOL,
    })
}

/// Coefficient of `z_1···z_{2m}` in `‖X(z)‖_{2m}^{2m}`, divided by `m`, for
/// `X(z) = Σ_{j≤m} z̄_{2j−1} a_{2j−1}^* ⊗ x_{i_{2j−1}} + z_{2j} a_{2j} ⊗ x_{i_{2j}}`
/// with the compact gadget of size `m`. Equals
/// `τ(x_{i_1}^* x_{i_2} ··· x_{i_{2m−1}}^* x_{i_{2m}})`.
///
/// The norm is a homogeneous polynomial of degree `2m`, so averaging over
/// `(2m+2)`-th roots of unity at radius 1 isolates the coefficient exactly.
pub fn alternating_moment_from_norms(family: &[ComplexMatrix], indices: &[usize]) -> Result<Complex64> {
    let n = indices.len();
    if n == 0 || n % 2 == 1 {
        return Err(Error::InvalidArgument("alternating words have even positive length".into()));
    }
    check_family(family)?;
    for &i in indices {
        if i >= family.len() {
            return Err(Error::IndexOutOfRange { index: i, len: family.len() });
        }
    }
    let m = n / 2;
    let gadget = compact_family(n)?;
    let blocks: Vec<ComplexMatrix> = (0..n)
        .map(|j| {
            let x = &family[indices[j]];
            if j % 2 == 0 {
                gadget.get(j).adjoint().kron(x)
            } else {
                gadget.get(j).kron(x)
            }
        })
        .collect();
    let q = n + 2;
    let roots: Vec<Complex64> = (0..q)
        .map(|k| Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / q as f64))
        .collect();
    let total = q.pow(n as u32);
    let sum = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut x = ComplexMatrix::zeros(blocks[0].dim());
            let mut phase = Complex64::new(1.0, 0.0);
            for (j, b) in blocks.iter().enumerate() {
                let w = roots[idx % q];
                idx /= q;
                let zj = if j % 2 == 0 { w.conj() } else { w };
                x.add_scaled(zj, b);
                phase *= w.conj();
            }
            let xx = x.adjoint_mul(&x);
            phase * xx.powi(m as u32).normalized_trace()
        })
        .reduce(|| Complex64::new(0.0, 0.0), |a, b| a + b);
    Ok(sum / (total as f64 * m as f64))
}

/// Semifinite variant: the alternating moments
/// `τ(x_{i_1}^* x_{i_2}···x_{i_{2m−1}}^* x_{i_{2m}})`, read off `2m`-norms at
/// level `m`, must agree; then sampled norms of `Σ a_j ⊗ x_j` (no identity
/// summand) are compared.
pub fn semifinite_transfer_check(
    x_fam: &[ComplexMatrix],
    y_fam: &[ComplexMatrix],
    m: usize,
    levels: &[usize],
    trials: usize,
    seed: u64,
) -> Result<TransferReport> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    check_pair(x_fam, y_fam)?;
    check_guard(x_fam.len(), m)?;
    let n = x_fam.len();
    let tuples = n.pow(2 * m as u32);
    let mut max_gap: f64 = 0.0;
    for t in 0..tuples {
        let idx: Vec<usize> = (0..2 * m).map(|j| t / n.pow(j as u32) % n).collect();
        let gap = (alternating_moment_from_norms(x_fam, &idx)? - alternating_moment_from_norms(y_fam, &idx)?).norm();
        if gap > MOMENT_TOL {
            let word = StarWord::new(
                idx.iter()
                    .enumerate()
                    .map(|(j, &i)| Letter { index: i, star: j % 2 == 0 })
                    .collect(),
            );
            return Err(Error::PreconditionFailed { word, gap });
        }
        max_gap = max_gap.max(gap);
    }
    let levels = level_checks(x_fam, y_fam, m, levels, trials, seed, false)?;
    Ok(TransferReport {
        formulation: "alternating moments of length 2m agree",
        m,
        seed,
        moments_checked: tuples,
        max_moment_gap: max_gap,
        pass: levels.iter().all(|l| l.max_gap <= NORM_TOL),
        levels,
        tolerance: NORM_TOL,
    })
}
