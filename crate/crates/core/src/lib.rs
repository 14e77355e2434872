//! Exact calculus on the flat quaternionic model `R^{4n}`.
//!
//! The crate turns the local differential geometry of a quaternionic
//! manifold into executable, exactly checkable operations:
//!
//! * [`flatmodel`]: the hypercomplex structure `(J1, J2, J3)`, polynomial
//!   fields with rational coefficients, exterior calculus and the
//!   Q-hermitian projector.
//! * [`connection`]: quaternionic connections `D = d + S^alpha`, their
//!   curvature, Ricci contraction and the Weyl / `R^eta` split.
//! * [`ehrep`]: the `E`-`H` description of `T*M (x) Q`, the weight operator
//!   `B`, its projectors and the `T_j` operators.
//! * [`twistor`]: the tangent vertical bundle of the twistor fibration and
//!   the connection it inherits from `D`.
//! * [`penrose`]: the Penrose operator and the Weitzenboeck identities.
//! * [`hermtwist`]: torsion form and Chern pairing of the twistor metric.
//! * [`harness`]: seeded check suites and machine-readable reports.
//!
//! Everything exact is computed over [`Rat`]; `f64` is only used by the
//! finite-difference oracle in [`twistor::fd`].

pub mod connection;
pub mod ehrep;
pub mod error;
pub mod flatmodel;
pub mod gauss;
pub mod harness;
pub mod hermtwist;
pub mod matrix;
pub mod penrose;
pub mod poly;
pub mod sample;
pub mod scalar;
pub mod twistor;

pub use error::{Error, Result};
pub use gauss::GaussRat;
pub use matrix::Mat;
pub use poly::Poly;
pub use scalar::{rat, Field, Rat, Ring};
