//! Dense complex matrices with the normalized trace, Schatten norms and
//! spectral calculus.

mod matrix;
mod profile;
mod spectral;
mod word;

pub use matrix::ComplexMatrix;
pub use profile::{singular_profile, SingularProfile};
pub use spectral::{
    abs_power, hermitian_apply, hermitian_eigen, hermitian_eigenvalues, schatten_p_norm,
    schatten_p_power, singular_values, HERMITIAN_TOL,
};
pub(crate) use spectral::eigenvalues_of_symmetrized;
pub use word::{check_family, word_trace, Letter, StarWord};

use num_complex::Complex64;

/// `tr_d(M) = (1/d) Σ M_ii`.
pub fn normalized_trace(m: &ComplexMatrix) -> Complex64 {
    m.normalized_trace()
}
