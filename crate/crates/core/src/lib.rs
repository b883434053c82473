//! Lindblad simulation of the two-photon driven-dissipative oscillator and
//! slow/fast reduction of its dynamics onto the cat-qubit subspace.

pub mod analysis;
pub mod cat_qubit;
pub mod checks;
pub mod error;
pub mod experiment;
pub mod fock;
pub mod integrator;
pub mod lindblad;
pub mod linalg;
pub mod random;
pub mod reduction;

pub use error::{Error, Result};
pub use fock::{DensityMatrix, FockOperator, FockSpace, Ket};
pub use lindblad::LindbladModel;
