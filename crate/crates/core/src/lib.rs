//! Numerical machinery for nonlinear scalar field equations `-Delta u = f(u)`
//! on R^N under general Berestycki-Lions-type nonlinearities.
//!
//! The crate computes and verifies candidate solutions: positive radial ground
//! states, radial excited states, and nonradial sign-changing states in
//! block-symmetric antisymmetric classes. The main pieces:
//!
//! * [`nonlinearity`] — models of `f`, the positive/negative split driving the
//!   `J_lambda = A - lambda B` family, and the comparison envelope.
//! * [`grid`] / [`field`] — symmetry-reduced discretization with weighted
//!   quadrature and the reduced Laplacian.
//! * [`functional`] — energies, exact discrete gradients, Pohozaev diagnostics.
//! * [`testmaps`] — explicit odd families of piecewise-affine profiles and the
//!   antisymmetric test maps built from them.
//! * [`solver`] — mountain-pass and symmetric minimax descent with
//!   lambda-continuation.
//! * [`decomposition`] — translation profile extraction for bounded
//!   Palais-Smale-like sequences.
//! * [`oracle`] — independent radial shooting solver used for verification.

pub mod decomposition;
pub mod error;
pub mod field;
pub mod functional;
pub mod grid;
pub mod nonlinearity;
pub mod oracle;
pub mod quad;
pub mod solver;
pub mod testmaps;

pub use error::{Error, Result};
pub use field::{read_field_csv, write_field_csv, Field, Half};
pub use functional::{classify, energy, gradient, pohozaev, Classification, EnergyBreakdown};
pub use grid::{build_grid, GridRef, ReducedGrid, SymmetryClass};
pub use nonlinearity::{
    comparison_envelope, derive_mu, find_lambda0, find_zeta, truncate, validate_bl, ModelKind,
    NonlinearityModel, SplitScheme,
};
