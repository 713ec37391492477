use super::matrix::ComplexMatrix;
use super::spectral::singular_values;

/// Singular values of a `d x d` matrix read as a non-increasing step function
/// on `[0, 1)`, each value occupying an interval of length `1/d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularProfile {
    values: Vec<f64>,
}

impl SingularProfile {
    pub fn of(m: &ComplexMatrix) -> Self {
        Self {
            values: singular_values(m),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Non-increasing singular values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `μ_t`, right-continuous on the grid `{k/d}`. Returns 0 for `t ≥ 1`.
    pub fn mu(&self, t: f64) -> f64 {
        let d = self.values.len();
        if d == 0 || t >= 1.0 {
            return 0.0;
        }
        let k = (t.max(0.0) * d as f64).floor() as usize;
        self.values[k.min(d - 1)]
    }

    /// `μ` at the grid point `k/d`.
    pub fn mu_at(&self, k: usize) -> f64 {
        self.values.get(k).copied().unwrap_or(0.0)
    }

    /// `∫₀¹ μ_t^p dt`, the Riemann sum of the step profile.
    pub fn power_integral(&self, p: f64) -> f64 {
        let d = self.values.len();
        if d == 0 {
            return 0.0;
        }
        self.values.iter().map(|s| s.powf(p)).sum::<f64>() / d as f64
    }
}

/// Shorthand for [`SingularProfile::of`].
pub fn singular_profile(m: &ComplexMatrix) -> SingularProfile {
    SingularProfile::of(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn zero_and_unitary_profiles() {
        assert_eq!(singular_profile(&ComplexMatrix::zeros(3)).values(), &[0.0; 3]);
        let u = ComplexMatrix::diag(&[Complex64::from_polar(1.0, 0.3), Complex64::from_polar(1.0, -2.0)]);
        for s in singular_profile(&u).values() {
            assert!((s - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn step_reading() {
        let p = singular_profile(&ComplexMatrix::unit(2, 0, 1));
        assert_eq!(p.values(), &[1.0, 0.0]);
        assert_eq!(p.mu(0.0), 1.0);
        assert_eq!(p.mu(0.49), 1.0);
        assert_eq!(p.mu(0.5), 0.0);
        assert_eq!(p.mu(1.0), 0.0);
    }
}
