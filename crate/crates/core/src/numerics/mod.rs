//! Dense complex linear algebra for dimensions up to 4.

pub mod eig;
pub mod expm;
pub mod matrix;
pub mod partial_trace;
pub mod svd;

pub use eig::{eig_general, eigenvalues, eigh, EigenCondition, SpectralDecomposition, DEFAULT_EIG_TOL};
pub use expm::{expm, expm_action, solve};
pub use matrix::{c, sigma_x, sigma_y, sigma_z, CMatrix, CVector, C64, I, ONE, ZERO};
pub use partial_trace::{partial_trace, Qubit};
pub use svd::singular_values;
