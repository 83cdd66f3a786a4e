//! Complex linear algebra, special functions and seeded randomness.

mod eig;
mod matrix;
mod rng;
mod special;

pub use eig::{hermitian_eig, HermitianEig};
pub use matrix::{dot_h, dot_t, least_squares_1d, norm_sqr, ComplexMatrix};
pub use rng::{sample_complex_normal, SeededRng};
pub use special::{chi2_cdf, chi2_quantile, gamma_p, gamma_q, ln_gamma};

pub use num_complex::Complex64;
