//! Two-particle scattering of continuous-time quantum walks on the infinite line
//! with an on-site Bose-Hubbard interaction confined to `N = 2L + 1` central sites.
//!
//! The crate is organised bottom-up:
//!
//! - [`lattice_integrals`]: the two-particle lattice Green's-function coefficients `J(E, n)`
//!   through complete elliptic integrals, plus quadrature oracles.
//! - [`toeplitz_solver`]: the complex symmetric Toeplitz system `T_N x = b c_P`.
//! - [`scattering_core`]: finite-N S-matrix kernels and the asymptotic closed forms.
//! - [`gate_analysis`]: wavepacket matrix elements, CPHASE gate fidelity, scans and fits.
//! - [`time_oracle`]: direct time evolution on a truncated lattice, used as ground truth.

pub mod error;
pub mod gate_analysis;
pub mod lattice_integrals;
pub mod quadrature;
pub mod scattering_core;
pub mod time_oracle;
pub mod toeplitz_solver;

pub use error::{ErrorCategory, ScatterError};
pub use num_complex::Complex64;

pub type Result<T> = std::result::Result<T, ScatterError>;
