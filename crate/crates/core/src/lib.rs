//! Sylvester equations `AX − XB = C` solved through polynomial separation of
//! the spectra of `A` and `B`.
//!
//! The crate is organised bottom-up:
//!
//! * [`matcore`] dense complex matrices, eigenvalues, norms, `expm`;
//! * [`polyops`] scalar polynomials, Lagrange bases, divided differences;
//! * [`bivarcalc`] the bivariate calculus `f(A,B)(C) = Σ α_ij A^i C B^j`;
//! * [`multicentric`] Taylor coefficients of the multicentric representation
//!   `φ(z) = Σ_j δ_j(z) f_j(p(z))` and their truncation bounds;
//! * [`regions`] lemniscate sets `V_p(T)`, pseudospectra and separation
//!   certificates;
//! * [`solvers`] the solver suite, all checked against a Kronecker oracle;
//! * [`families`] deterministic generators for test instances.

pub mod bivarcalc;
pub mod contour;
pub mod error;
pub mod families;
pub mod matcore;
pub mod multicentric;
pub mod pairs;
pub mod polyops;
pub mod regions;
pub mod solvers;

pub use error::{Error, Result};
pub use matcore::{CMatrix, Spectrum, C64};
pub use polyops::Poly;
