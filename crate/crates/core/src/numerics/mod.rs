//! Random streams, dense linear algebra and distance kernels.

pub mod distance;
pub mod linalg;
pub mod rng;

pub use linalg::{
    cholesky_lower, haar_rotation, pca_fit, rotation_fractional_power, rotation_log, singular_values, sym_eigen,
    sym_eigenvalues, Matrix, Pca,
};
pub use rng::Rng;
