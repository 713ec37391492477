//! `*`-moment tables, linear maps on finite spans, and the functionals that
//! detect when such a map fails to be a `*`-homomorphism.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{check_family, schatten_p_norm, ComplexMatrix, Letter, StarWord};
use crate::error::{Error, Result};
use crate::reconstruct::{estimate_word_moment, PlanTemplate};
use crate::rng::{trial_rng, unit_disk};

/// Largest number of words a moment table may hold.
pub const WORD_GUARD: u128 = 1_000_000;
/// Residual threshold for span membership.
pub const SPAN_TOL: f64 = 1e-8;
/// Largest accepted Gram condition number of a span basis.
pub const GRAM_CONDITION_LIMIT: f64 = 1e8;
pub const ASCENT_STEPS: usize = 50;
/// Plan for the length-4 defect words: roundoff in the r⁴ coefficient grows
/// as the ladder shrinks, so only the two largest radii are used.
pub const DEFECT_PLAN: PlanTemplate = PlanTemplate {
    q: None,
    radii: 2,
    richardson_order: 1,
    tolerance: crate::reconstruct::DEFAULT_TOLERANCE,
};

/// Number of words of length `≤ maxdeg` over `letters` letters.
pub fn word_count(letters: usize, maxdeg: usize) -> u128 {
    let mut total: u128 = 0;
    let mut pow: u128 = 1;
    for _ in 0..=maxdeg {
        total = total.saturating_add(pow);
        pow = pow.saturating_mul(letters as u128);
    }
    total
}

/// All words of length `≤ maxdeg` over `n` indices, by length then
/// lexicographically; starred letters are included when `stars` is set.
pub fn all_words(n: usize, maxdeg: usize, stars: bool) -> Result<Vec<StarWord>> {
    let alphabet: Vec<Letter> = (0..n)
        .flat_map(|i| {
            let plain = Letter::plain(i);
            if stars {
                vec![plain, Letter::starred(i)]
            } else {
                vec![plain]
            }
        })
        .collect();
    let required = word_count(alphabet.len(), maxdeg);
    if required > WORD_GUARD {
        return Err(Error::GuardExceeded {
            required,
            limit: WORD_GUARD,
        });
    }
    let mut out = vec![StarWord::empty()];
    let mut layer = vec![StarWord::empty()];
    for _ in 0..maxdeg {
        let mut next = Vec::with_capacity(layer.len() * alphabet.len());
        for w in &layer {
            for &l in &alphabet {
                let mut w2 = w.clone();
                w2.push(l);
                next.push(w2);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    Ok(out)
}

/// Word traces of a family, one entry per word of length `≤ maxdeg`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentTable {
    pub family_size: usize,
    pub maxdeg: usize,
    pub entries: Vec<(StarWord, Complex64)>,
}

impl MomentTable {
    pub fn get(&self, w: &StarWord) -> Option<Complex64> {
        self.entries.iter().find(|(v, _)| v == w).map(|(_, z)| *z)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Exact table by direct products, sharing prefixes across words.
pub fn star_moments(family: &[ComplexMatrix], maxdeg: usize) -> Result<MomentTable> {
    let dim = check_family(family)?;
    let words = all_words(family.len(), maxdeg, true)?;
    let mut entries = Vec::with_capacity(words.len());
    entries.push((StarWord::empty(), Complex64::new(1.0, 0.0)));
    if !family.is_empty() {
        let adjoints: Vec<ComplexMatrix> = family.iter().map(|x| x.adjoint()).collect();
        let adjoints = &adjoints;
        let mut layer = vec![(StarWord::empty(), ComplexMatrix::identity(dim))];
        for _ in 0..maxdeg {
            let next: Vec<(StarWord, ComplexMatrix)> = layer
                .par_iter()
                .flat_map_iter(|(w, prod)| {
                    (0..family.len()).flat_map(move |i| {
                        [false, true].into_iter().map(move |star| {
                            let mut w2 = w.clone();
                            w2.push(Letter { index: i, star });
                            let m = if star { &adjoints[i] } else { &family[i] };
                            (w2, prod.matmul(m))
                        })
                    })
                })
                .collect();
            entries.extend(next.iter().map(|(w, m)| (w.clone(), m.normalized_trace())));
            layer = next;
        }
    }
    Ok(MomentTable {
        family_size: family.len(),
        maxdeg,
        entries,
    })
}

/// Table whose entries come only from p-norm evaluations, one reconstruction
/// per word.
pub fn reconstructed_moments(
    family: &[ComplexMatrix],
    maxdeg: usize,
    p: f64,
    template: &PlanTemplate,
) -> Result<MomentTable> {
    check_family(family)?;
    let words = all_words(family.len(), maxdeg, true)?;
    let entries = words
        .into_par_iter()
        .map(|w| {
            let v = estimate_word_moment(family, &w, p, template)?.value;
            Ok((w, v))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MomentTable {
        family_size: family.len(),
        maxdeg,
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchReport {
    pub pass: bool,
    pub worst_word: StarWord,
    pub worst_gap: f64,
    pub compared: usize,
    pub tolerance: f64,
}

pub fn distributions_match(a: &MomentTable, b: &MomentTable, tol: f64) -> Result<MatchReport> {
    if a.maxdeg != b.maxdeg || a.family_size != b.family_size || a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "({} elements, degree {}) vs ({} elements, degree {})",
            a.family_size, a.maxdeg, b.family_size, b.maxdeg
        )));
    }
    let mut worst = (StarWord::empty(), 0.0);
    for ((wa, za), (wb, zb)) in a.entries.iter().zip(&b.entries) {
        if wa != wb {
            return Err(Error::ShapeMismatch(format!("word {wa} against {wb}")));
        }
        let gap = (za - zb).norm();
        if gap > worst.1 || gap.is_nan() {
            worst = (wa.clone(), if gap.is_nan() { f64::INFINITY } else { gap });
        }
    }
    Ok(MatchReport {
        pass: worst.1 <= tol,
        worst_word: worst.0,
        worst_gap: worst.1,
        compared: a.len(),
        tolerance: tol,
    })
}

fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x.conj() * y).sum::<Complex64>() / a.dim() as f64
}

/// A linear map given on a basis of its domain by the images of the basis.
#[derive(Debug, Clone)]
pub struct SpanMap {
    basis: Vec<ComplexMatrix>,
    images: Vec<ComplexMatrix>,
    unital: bool,
    gram: ComplexMatrix,
}

impl SpanMap {
    /// Checks dimensions, linear independence of the basis and, when
    /// `unital`, that the identity lies in the span and is fixed.
    pub fn new(basis: Vec<ComplexMatrix>, images: Vec<ComplexMatrix>, unital: bool) -> Result<Self> {
        if basis.is_empty() || basis.len() != images.len() {
            return Err(Error::InvalidArgument(format!(
                "need a non-empty basis with one image each ({} basis elements, {} images)",
                basis.len(),
                images.len()
            )));
        }
        check_family(&basis)?;
        check_family(&images)?;
        let k = basis.len();
        let gram = ComplexMatrix::from_fn(k, |i, j| hs_inner(&basis[i], &basis[j]));
        let eig = crate::algebra::hermitian_eigenvalues(&gram.hermitian_part())?;
        let (lo, hi) = (eig[0], eig[k - 1]);
        let condition = if lo <= 0.0 { f64::INFINITY } else { hi / lo };
        if !(condition < GRAM_CONDITION_LIMIT) {
            return Err(Error::IllConditionedBasis { condition });
        }
        let map = Self {
            basis,
            images,
            unital,
            gram,
        };
        if unital {
            let id = ComplexMatrix::identity(map.domain_dim());
            let (c, residual) = map.coordinates(&id);
            if residual > SPAN_TOL {
                return Err(Error::NotUnital(format!("identity is outside the span (residual {residual:e})")));
            }
            let image = map.combine(&c);
            let gap = image.max_abs_diff(&ComplexMatrix::identity(map.image_dim()));
            if gap > SPAN_TOL {
                return Err(Error::NotUnital(format!("identity maps to a matrix at distance {gap:e}")));
            }
        }
        Ok(map)
    }

    pub fn identity(basis: Vec<ComplexMatrix>, unital: bool) -> Result<Self> {
        let images = basis.clone();
        Self::new(basis, images, unital)
    }

    /// `x ↦ U x U^*`.
    pub fn conjugation(basis: Vec<ComplexMatrix>, u: &ComplexMatrix, unital: bool) -> Result<Self> {
        let images = basis.iter().map(|b| u.matmul(b).matmul(&u.adjoint())).collect();
        Self::new(basis, images, unital)
    }

    /// Transposition on all of `M_d`, given on the matrix units.
    pub fn transposition(d: usize) -> Result<Self> {
        let basis: Vec<ComplexMatrix> = (0..d * d).map(|k| ComplexMatrix::unit(d, k / d, k % d)).collect();
        let images = basis.iter().map(|b| b.transpose()).collect();
        Self::new(basis, images, true)
    }

    pub fn basis(&self) -> &[ComplexMatrix] {
        &self.basis
    }

    pub fn images(&self) -> &[ComplexMatrix] {
        &self.images
    }

    pub fn is_unital(&self) -> bool {
        self.unital
    }

    pub fn domain_dim(&self) -> usize {
        self.basis[0].dim()
    }

    pub fn image_dim(&self) -> usize {
        self.images[0].dim()
    }

    /// Least-squares coordinates of `x` in the basis and the normalized
    /// Hilbert–Schmidt residual.
    pub fn coordinates(&self, x: &ComplexMatrix) -> (Vec<Complex64>, f64) {
        let rhs: Vec<Complex64> = self.basis.iter().map(|b| hs_inner(b, x)).collect();
        let c = self.gram.solve(&rhs).unwrap_or_else(|| vec![Complex64::new(0.0, 0.0); rhs.len()]);
        let mut approx = ComplexMatrix::zeros(x.dim());
        for (ci, b) in c.iter().zip(&self.basis) {
            approx.add_scaled(*ci, b);
        }
        let residual = (x - &approx).normalized_hs_norm();
        (c, residual)
    }

    fn combine(&self, c: &[Complex64]) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.image_dim());
        for (ci, m) in c.iter().zip(&self.images) {
            out.add_scaled(*ci, m);
        }
        out
    }

    /// `u(x)` and the span residual of `x`.
    pub fn apply(&self, x: &ComplexMatrix) -> Result<(ComplexMatrix, f64)> {
        if x.dim() != self.domain_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.domain_dim(),
                found: x.dim(),
            });
        }
        let (c, residual) = self.coordinates(x);
        Ok((self.combine(&c), residual))
    }

    /// `Σ_i C_i ⊗ B_i` on the domain side and `Σ_i C_i ⊗ u(B_i)` on the image
    /// side.
    pub fn amplify(&self, coefficients: &[ComplexMatrix]) -> (ComplexMatrix, ComplexMatrix) {
        let level = coefficients[0].dim();
        let mut x = ComplexMatrix::zeros(level * self.domain_dim());
        let mut ux = ComplexMatrix::zeros(level * self.image_dim());
        for ((c, b), img) in coefficients.iter().zip(&self.basis).zip(&self.images) {
            x += &c.kron(b);
            ux += &c.kron(img);
        }
        (x, ux)
    }
}

fn plus_identity(mut m: ComplexMatrix) -> ComplexMatrix {
    for i in 0..m.dim() {
        m[(i, i)] += 1.0;
    }
    m
}

/// `|‖1 + X‖_p − ‖1 + (id ⊗ u)X‖_p|` for `X = Σ C_i ⊗ B_i`.
pub fn isometry_gap(u: &SpanMap, coefficients: &[ComplexMatrix], p: f64) -> Result<f64> {
    let (x, ux) = u.amplify(coefficients);
    let a = schatten_p_norm(&plus_identity(x), p)?;
    let b = schatten_p_norm(&plus_identity(ux), p)?;
    Ok((a - b).abs())
}

fn clamp_norm(c: ComplexMatrix) -> ComplexMatrix {
    let n = c.operator_norm();
    if n > 1.0 {
        c.scale_real(1.0 / n)
    } else {
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub level: usize,
    pub p: f64,
    pub trials: usize,
    pub seed: u64,
    pub max_gap: f64,
    /// Gap of the best random sample before local ascent.
    pub sampled_gap: f64,
    pub ascent_steps: usize,
    /// Coefficients `C_i ∈ M_level` of the worst witness `X = Σ C_i ⊗ B_i`.
    #[serde(skip)]
    pub witness: Vec<ComplexMatrix>,
}

/// Randomized search for `X ∈ M_level(span)` on which `id ⊗ u` fails to
/// preserve `‖1 + X‖_p`, followed by coordinate ascent from the worst sample.
pub fn complete_isometry_probe(u: &SpanMap, level: usize, p: f64, trials: usize, seed: u64) -> Result<ProbeReport> {
    if level == 0 || trials == 0 {
        return Err(Error::InvalidArgument("level and trials must be at least 1".into()));
    }
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::InvalidExponent(p));
    }
    let k = u.basis().len();
    let samples = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let coeffs: Vec<ComplexMatrix> = (0..k)
                .map(|_| clamp_norm(ComplexMatrix::from_fn(level, |_, _| unit_disk(&mut rng))))
                .collect();
            let gap = isometry_gap(u, &coeffs, p)?;
            Ok((gap, t, coeffs))
        })
        .collect::<Result<Vec<_>>>()?;
    let (sampled_gap, _, mut best) = samples
        .into_iter()
        .fold((-1.0, u64::MAX, Vec::new()), |acc, s| if s.0 > acc.0 { s } else { acc });
    let mut best_gap = sampled_gap;

    // coordinate ascent over the real and imaginary parts of every entry
    let mut step = 0.25;
    let mut rng = trial_rng(seed, u64::MAX);
    let directions = [
        Complex64::new(1.0, 0.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(0.0, -1.0),
    ];
    for _ in 0..ASCENT_STEPS {
        let mut improved = false;
        for i in 0..k {
            for r in 0..level {
                for c in 0..level {
                    for d in directions {
                        let mut trial = best.clone();
                        trial[i][(r, c)] += d * step * (0.5 + rng.gen::<f64>());
                        trial[i] = clamp_norm(trial[i].clone());
                        let g = isometry_gap(u, &trial, p)?;
                        if g > best_gap {
                            best_gap = g;
                            best = trial;
                            improved = true;
                        }
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(ProbeReport {
        level,
        p,
        trials,
        seed,
        max_gap: best_gap,
        sampled_gap,
        ascent_steps: ASCENT_STEPS,
        witness: best,
    })
}

/// `τ(u(b)^*u(a)^*u(a)u(b))`, `τ(u(ab)^*u(ab))`, `τ(u(b)^*u(a)^*u(ab))`,
/// `τ(u(ab)^*u(a)u(b))`: the words `(b,a,a,b)`, `(ab,1,1,ab)`, `(b,a,1,ab)`,
/// `(ab,1,a,b)` over the image family `[u(a), u(b), 1, u(ab)]`, all with star
/// pattern `(*,*,1,1)`.
fn defect_words() -> [StarWord; 4] {
    let w = |i: [usize; 4]| StarWord::from_pairs(&[(i[0], true), (i[1], true), (i[2], false), (i[3], false)]);
    [w([1, 0, 0, 1]), w([3, 2, 2, 3]), w([1, 0, 2, 3]), w([3, 2, 0, 1])]
}

/// `‖u(ab) − u(a)u(b)‖₂²` assembled from four traces with star pattern
/// `(*,*,1,1)`: read off the images directly, or reconstructed from p-norms
/// through the compact gadget of size 2 when `use_oracle` is set.
pub fn multiplicativity_defect(u: &SpanMap, a_idx: usize, b_idx: usize, p: f64, use_oracle: bool) -> Result<f64> {
    let k = u.basis().len();
    for idx in [a_idx, b_idx] {
        if idx >= k {
            return Err(Error::IndexOutOfRange { index: idx, len: k });
        }
    }
    if !u.is_unital() {
        return Err(Error::NotUnital("the defect formula uses u(1) = 1".into()));
    }
    let ab = u.basis()[a_idx].matmul(&u.basis()[b_idx]);
    let (u_ab, residual) = u.apply(&ab)?;
    if residual > SPAN_TOL {
        return Err(Error::ProductOutsideSpan {
            a: a_idx,
            b: b_idx,
            residual,
        });
    }
    let family = vec![
        u.images()[a_idx].clone(),
        u.images()[b_idx].clone(),
        ComplexMatrix::identity(u.image_dim()),
        u_ab,
    ];
    let traces = defect_words()
        .iter()
        .map(|w| {
            if use_oracle {
                Ok(estimate_word_moment(&family, w, p, &DEFECT_PLAN)?.value)
            } else {
                crate::algebra::word_trace(&family, w)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let defect = (traces[0] + traces[1] - traces[2] - traces[3]).re;
    Ok(defect.max(0.0))
}

/// `‖u(x^*) − u(x)^*‖₂` for the basis element `x`.
pub fn adjoint_defect(u: &SpanMap, x_idx: usize) -> Result<f64> {
    let k = u.basis().len();
    if x_idx >= k {
        return Err(Error::IndexOutOfRange { index: x_idx, len: k });
    }
    let (ux_star, residual) = u.apply(&u.basis()[x_idx].adjoint())?;
    if residual > SPAN_TOL {
        return Err(Error::AdjointOutsideSpan { index: x_idx, residual });
    }
    Ok((&ux_star - &u.images()[x_idx].adjoint()).normalized_hs_norm())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearizationReport {
    pub pass: bool,
    pub maxdeg: usize,
    pub words: usize,
    /// Largest `|coefficient − τ(word)|` over both families.
    pub extraction_error: f64,
    pub worst_word: StarWord,
    pub worst_gap: f64,
    pub tolerance: f64,
}

/// A polynomial in `z_1..z_k, z̄_1..z̄_k` with matrix coefficients, keyed by
/// exponent vectors.
type MatrixPolynomial = std::collections::BTreeMap<(Vec<u8>, Vec<u8>), ComplexMatrix>;

/// Coefficient of `z_1···z_k` in `tr((Σ_j a_j ⊗ x_{i_j})^k)` with
/// `a_j = z_j e_{j,j+1} + z̄_j e_{j+1,j}` (indices mod `k`), by full expansion.
pub fn linearization_coefficient(family: &[ComplexMatrix], indices: &[usize]) -> Result<Complex64> {
    let k = indices.len();
    let d = check_family(family)?;
    if k == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    // the k linear terms of Σ a_j ⊗ x_{i_j}, each a monomial times a matrix
    let mut terms = Vec::with_capacity(2 * k);
    for (j, &i) in indices.iter().enumerate() {
        let x = family
            .get(i)
            .ok_or(Error::IndexOutOfRange { index: i, len: family.len() })?;
        let mut ez = vec![0u8; k];
        ez[j] = 1;
        terms.push(((ez.clone(), vec![0u8; k]), ComplexMatrix::unit(k, j, (j + 1) % k).kron(x)));
        terms.push(((vec![0u8; k], ez), ComplexMatrix::unit(k, (j + 1) % k, j).kron(x)));
    }
    let mut poly: MatrixPolynomial = MatrixPolynomial::new();
    poly.insert((vec![0u8; k], vec![0u8; k]), ComplexMatrix::identity(k * d));
    for _ in 0..k {
        let mut next = MatrixPolynomial::new();
        for ((pz, pzb), m) in &poly {
            for ((tz, tzb), t) in &terms {
                let key = (
                    pz.iter().zip(tz).map(|(a, b)| a + b).collect::<Vec<u8>>(),
                    pzb.iter().zip(tzb).map(|(a, b)| a + b).collect::<Vec<u8>>(),
                );
                let prod = m.matmul(t);
                next.entry(key)
                    .and_modify(|acc| *acc += &prod)
                    .or_insert(prod);
            }
        }
        poly = next;
    }
    let target = (vec![1u8; k], vec![0u8; k]);
    Ok(poly
        .get(&target)
        .map(|m| m.normalized_trace())
        .unwrap_or_else(|| Complex64::new(0.0, 0.0)))
}

/// For each word of length `≤ maxdeg` (no stars), extracts `τ(word)` from the
/// cyclic linearization of both families and compares.
pub fn selfadjoint_linearization_check(
    x_fam: &[ComplexMatrix],
    y_fam: &[ComplexMatrix],
    maxdeg: usize,
    tol: f64,
) -> Result<LinearizationReport> {
    for m in x_fam.iter().chain(y_fam) {
        if !m.is_hermitian(crate::algebra::HERMITIAN_TOL) {
            return Err(Error::NotHermitian {
                defect: m.hermitian_defect(),
            });
        }
    }
    if x_fam.len() != y_fam.len() {
        return Err(Error::ShapeMismatch(format!("{} vs {} elements", x_fam.len(), y_fam.len())));
    }
    let words = all_words(x_fam.len(), maxdeg, false)?;
    let rows = words
        .par_iter()
        .map(|w| {
            let idx: Vec<usize> = w.letters().iter().map(|l| l.index).collect();
            let cx = linearization_coefficient(x_fam, &idx)?;
            let cy = linearization_coefficient(y_fam, &idx)?;
            let ex = (cx - crate::algebra::word_trace(x_fam, w)?).norm();
            let ey = (cy - crate::algebra::word_trace(y_fam, w)?).norm();
            Ok((w.clone(), (cx - cy).norm(), ex.max(ey)))
        })
        .collect::<Result<Vec<_>>>()?;
    let extraction_error = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let (worst_word, worst_gap) = rows
        .iter()
        .fold((StarWord::empty(), 0.0), |acc, r| if r.1 > acc.1 { (r.0.clone(), r.1) } else { acc });
    Ok(LinearizationReport {
        pass: worst_gap <= tol && extraction_error <= tol,
        maxdeg,
        words: rows.len(),
        extraction_error,
        worst_word,
        worst_gap,
        tolerance: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn units2() -> Vec<ComplexMatrix> {
        vec![
            ComplexMatrix::unit(2, 0, 0),
            ComplexMatrix::unit(2, 0, 1),
            ComplexMatrix::unit(2, 1, 0),
            ComplexMatrix::unit(2, 1, 1),
        ]
    }

    #[test]
    fn word_enumeration_counts() {
        assert_eq!(all_words(2, 2, true).unwrap().len(), 1 + 4 + 16);
        assert_eq!(all_words(0, 3, true).unwrap().len(), 1);
        assert!(matches!(all_words(10, 6, true), Err(Error::GuardExceeded { .. })));
    }

    #[test]
    fn moment_table_examples() {
        let t = star_moments(&[ComplexMatrix::identity(1)], 3).unwrap();
        assert!(t.entries.iter().all(|(_, z)| (z - 1.0).norm() < 1e-15));
        let t = star_moments(&[ComplexMatrix::unit(2, 0, 0)], 2).unwrap();
        assert!(t.entries[1..].iter().all(|(_, z)| (z - 0.5).norm() < 1e-15));
        let t = star_moments(&[], 3).unwrap();
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn scaling_is_detected() {
        let x = ComplexMatrix::unit(2, 0, 0);
        let a = star_moments(std::slice::from_ref(&x), 2).unwrap();
        let b = star_moments(&[x.scale_real(2.0)], 2).unwrap();
        let r = distributions_match(&a, &b, 1e-10).unwrap();
        assert!(!r.pass);
        assert_eq!(r.worst_word.len(), 2);
        assert!(matches!(
            distributions_match(&a, &star_moments(&[x], 3).unwrap(), 1e-10),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn dependent_basis_rejected() {
        let mut b = units2();
        b.push(ComplexMatrix::identity(2));
        assert!(matches!(SpanMap::identity(b, true), Err(Error::IllConditionedBasis { .. })));
    }

    #[test]
    fn adjoint_defect_example() {
        let basis = vec![
            ComplexMatrix::identity(2),
            ComplexMatrix::unit(2, 0, 1),
            ComplexMatrix::unit(2, 1, 0),
        ];
        let images = vec![
            ComplexMatrix::identity(2),
            ComplexMatrix::unit(2, 0, 1),
            ComplexMatrix::unit(2, 1, 0).scale_real(2.0),
        ];
        let u = SpanMap::new(basis, images, true).unwrap();
        assert!((adjoint_defect(&u, 1).unwrap() - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn multiplicativity_example() {
        let basis = units2();
        let mut images = basis.clone();
        images[1] = images[1].scale_real(2.0);
        let u = SpanMap::new(basis, images, true).unwrap();
        assert!((multiplicativity_defect(&u, 1, 2, 3.0, false).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(multiplicativity_defect(&u, 0, 3, 3.0, false).unwrap(), 0.0);
    }

    #[test]
    fn product_outside_span() {
        let basis = vec![ComplexMatrix::identity(2), ComplexMatrix::unit(2, 0, 1), ComplexMatrix::unit(2, 1, 0)];
        let u = SpanMap::identity(basis, true).unwrap();
        assert!(matches!(
            multiplicativity_defect(&u, 1, 2, 3.0, false),
            Err(Error::ProductOutsideSpan { .. })
        ));
    }

    #[test]
    fn linearization_extracts_word_traces() {
        let x = vec![
            ComplexMatrix::real_diag(&[1.0, -0.5]),
            ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.3]]).unwrap(),
        ];
        let c = linearization_coefficient(&x, &[0, 1, 1]).unwrap();
        let w = StarWord::from_pairs(&[(0, false), (1, false), (1, false)]);
        assert!((c - crate::algebra::word_trace(&x, &w).unwrap()).norm() < 1e-14);
    }

    #[test]
    fn linearization_check_examples() {
        let a = vec![ComplexMatrix::real_diag(&[1.0, -1.0])];
        let b = vec![ComplexMatrix::real_diag(&[1.0, 1.0])];
        let r = selfadjoint_linearization_check(&a, &b, 3, 1e-10).unwrap();
        assert!(!r.pass);
        assert_eq!(r.worst_word.len(), 1);
        assert!(selfadjoint_linearization_check(&a, &a, 3, 1e-10).unwrap().pass);
        assert!(matches!(
            selfadjoint_linearization_check(&[ComplexMatrix::unit(2, 0, 1)], &a, 2, 1e-10),
            Err(Error::NotHermitian { .. })
        ));
    }
}
