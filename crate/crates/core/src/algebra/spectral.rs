//! Spectral decompositions by Jacobi rotations.
//!
//! Hermitian eigenproblems use the cyclic two-sided complex Jacobi method;
//! singular values use one-sided (Hestenes) Jacobi directly on the columns,
//! which keeps tiny singular values accurate to high relative precision.
//! That matters for `p < 1`, where `σ^p` amplifies small values.

use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// Relative tolerance used when deciding whether an input is Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 80;

/// Pairs whose coupling is below this fraction of the Frobenius scale are skipped.
const ROTATION_FLOOR: f64 = f64::EPSILON * 1e-3;

/// Parameters of the unitary plane rotation that annihilates the `(p, q)`
/// entry of a Hermitian 2x2 block `[[app, apq], [conj(apq), aqq]]`.
///
/// The rotation acts on columns as `J = [[c, s], [-s·conj(ph), c·conj(ph)]]`
/// where `ph = apq / |apq|`.
#[derive(Clone, Copy)]
struct Rotation {
    c: f64,
    s: f64,
    phase_conj: Complex64,
}

impl Rotation {
    fn annihilating(app: f64, aqq: f64, apq: Complex64) -> Self {
        let mag = apq.norm();
        let phase_conj = (apq / mag).conj();
        let theta = (aqq - app) / (2.0 * mag);
        let t = if theta >= 0.0 {
            1.0 / (theta + (1.0 + theta * theta).sqrt())
        } else {
            -1.0 / (-theta + (1.0 + theta * theta).sqrt())
        };
        let c = 1.0 / (1.0 + t * t).sqrt();
        Self {
            c,
            s: t * c,
            phase_conj,
        }
    }

    #[inline]
    fn jqp(&self) -> Complex64 {
        -self.phase_conj * self.s
    }

    #[inline]
    fn jqq(&self) -> Complex64 {
        self.phase_conj * self.c
    }
}

/// Applies `H <- J^* H J` on a row-major Hermitian buffer and, when requested,
/// `V <- V J`.
fn rotate(h: &mut [Complex64], n: usize, p: usize, q: usize, rot: Rotation, v: Option<&mut [Complex64]>) {
    let (jpp, jpq, jqp, jqq) = (
        Complex64::new(rot.c, 0.0),
        Complex64::new(rot.s, 0.0),
        rot.jqp(),
        rot.jqq(),
    );
    // columns
    for k in 0..n {
        let hkp = h[k * n + p];
        let hkq = h[k * n + q];
        h[k * n + p] = hkp * jpp + hkq * jqp;
        h[k * n + q] = hkp * jpq + hkq * jqq;
    }
    // rows
    for k in 0..n {
        let hpk = h[p * n + k];
        let hqk = h[q * n + k];
        h[p * n + k] = jpp.conj() * hpk + jqp.conj() * hqk;
        h[q * n + k] = jpq.conj() * hpk + jqq.conj() * hqk;
    }
    h[p * n + q] = Complex64::new(0.0, 0.0);
    h[q * n + p] = Complex64::new(0.0, 0.0);
    h[p * n + p] = Complex64::new(h[p * n + p].re, 0.0);
    h[q * n + q] = Complex64::new(h[q * n + q].re, 0.0);
    if let Some(v) = v {
        for k in 0..n {
            let vkp = v[k * n + p];
            let vkq = v[k * n + q];
            v[k * n + p] = vkp * jpp + vkq * jqp;
            v[k * n + q] = vkp * jpq + vkq * jqq;
        }
    }
}

fn jacobi_diagonalize(h: &mut [Complex64], n: usize, mut v: Option<&mut [Complex64]>) {
    let scale = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if scale == 0.0 || n < 2 {
        return;
    }
    let floor = ROTATION_FLOOR * scale;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = h[p * n + q];
                if apq.norm() <= floor {
                    continue;
                }
                let rot = Rotation::annihilating(h[p * n + p].re, h[q * n + q].re, apq);
                rotate(h, n, p, q, rot, v.as_deref_mut());
                rotated = true;
            }
        }
        if !rotated {
            break;
        }
    }
}

fn checked_hermitian(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::NotHermitian {
            defect: m.hermitian_defect(),
        });
    }
    Ok(m.hermitian_part())
}

/// Eigenvalues (ascending) and unitary eigenvector matrix (columns) of a
/// Hermitian matrix. Input is symmetrized before diagonalization.
pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let n = m.dim();
    let mut h = checked_hermitian(m)?.into_vec();
    let mut v = ComplexMatrix::identity(n).into_vec();
    jacobi_diagonalize(&mut h, n, Some(&mut v));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| h[a * n + a].re.total_cmp(&h[b * n + b].re));
    let values = order.iter().map(|&i| h[i * n + i].re).collect();
    let vectors = ComplexMatrix::from_fn(n, |i, j| v[i * n + order[j]]);
    Ok((values, vectors))
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let h = checked_hermitian(m)?;
    Ok(eigenvalues_of_symmetrized(h))
}

/// Eigenvalues of a matrix the caller already knows to be Hermitian up to
/// rounding; only the Hermitian part is used.
pub(crate) fn eigenvalues_of_symmetrized(h: ComplexMatrix) -> Vec<f64> {
    let n = h.dim();
    let mut h = h.into_vec();
    jacobi_diagonalize(&mut h, n, None);
    let mut values: Vec<f64> = (0..n).map(|i| h[i * n + i].re).collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Singular values in non-increasing order (one-sided Jacobi on the columns).
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let n = m.dim();
    if n == 0 {
        return Vec::new();
    }
    // column-major copy: column j occupies cols[j*n..(j+1)*n]
    let mut cols = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            cols[j * n + i] = m[(i, j)];
        }
    }
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let cp = &cols[p * n..(p + 1) * n];
                    let cq = &cols[q * n..(q + 1) * n];
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut gamma = Complex64::new(0.0, 0.0);
                    for (a, b) in cp.iter().zip(cq) {
                        alpha += a.norm_sqr();
                        beta += b.norm_sqr();
                        gamma += a.conj() * b;
                    }
                    (alpha, beta, gamma)
                };
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                if gamma.norm() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                let rot = Rotation::annihilating(alpha, beta, gamma);
                let (jpp, jpq, jqp, jqq) = (
                    Complex64::new(rot.c, 0.0),
                    Complex64::new(rot.s, 0.0),
                    rot.jqp(),
                    rot.jqq(),
                );
                for k in 0..n {
                    let a = cols[p * n + k];
                    let b = cols[q * n + k];
                    cols[p * n + k] = a * jpp + b * jqp;
                    cols[q * n + k] = a * jpq + b * jqq;
                }
                rotated = true;
            }
        }
        if !rotated {
            break;
        }
    }
    let mut values: Vec<f64> = (0..n)
        .map(|j| {
            cols[j * n..(j + 1) * n]
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Applies `f` spectrally to a Hermitian matrix: same eigenvectors,
/// eigenvalues mapped through `f`.
pub fn hermitian_apply(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    let (values, vectors) = hermitian_eigen(m)?;
    let n = m.dim();
    let mapped: Vec<f64> = values.iter().map(|&x| f(x)).collect();
    Ok(ComplexMatrix::from_fn(n, |i, j| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &fk) in mapped.iter().enumerate() {
            acc += vectors[(i, k)] * vectors[(j, k)].conj() * fk;
        }
        acc
    }))
}

/// `|M|^p = (M^* M)^{p/2}`, clamping rounding-level negative eigenvalues to zero.
pub fn abs_power(m: &ComplexMatrix, p: f64) -> Result<ComplexMatrix> {
    let gram = m.adjoint_mul(m).hermitian_part();
    hermitian_apply(&gram, |x| x.max(0.0).powf(p / 2.0))
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::InvalidExponent(p));
    }
    Ok(())
}

/// `‖M‖_p^p = tr_d(|M|^p)`.
pub fn schatten_p_power(m: &ComplexMatrix, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let n = m.dim();
    if n == 0 {
        return Ok(0.0);
    }
    let sum: f64 = singular_values(m).iter().map(|s| s.powf(p)).sum();
    Ok(sum / n as f64)
}

/// Normalized Schatten p-norm `(tr_d |M|^p)^{1/p}`.
pub fn schatten_p_norm(m: &ComplexMatrix, p: f64) -> Result<f64> {
    Ok(schatten_p_power(m, p)?.powf(1.0 / p))
}
