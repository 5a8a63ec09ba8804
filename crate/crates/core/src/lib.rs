//! Floquet analysis and exact quantum states for periodically driven
//! harmonic oscillators
//!
//! ```text
//! H(x, p, t) = p² / 2M(t) + M(t) w²(t) x² / 2 − x F(t),   H(t + τ) = H(t)
//! ```
//!
//! The crate integrates the classical equation of motion in canonical
//! coordinates `(x, M ẋ)`, classifies the monodromy matrix, builds a real
//! stable solution pair `{u, v}`, and from it evaluates the exact wave
//! functions together with their overall, dynamical and geometric (Berry)
//! phases over one quasiperiod. Unstable or resonant systems are reported as
//! having no definable Berry phase, with the growth evidence attached.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, the CLI and
//! parallel scans live in the `floquet-phase` companion crate.
#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod classical;
pub mod driven;
mod error;
pub mod floquet;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod phases;
pub mod quadrature;
pub mod quantum;
mod tolerance;

pub use classical::{CanonicalState, FundamentalMatrix, Trajectory};
pub use driven::{ActionIntegral, ParticularSolution};
pub use error::{Error, Result};
pub use floquet::{ClassicalBasis, Representation, StabilityClass};
pub use model::{Coefficients, FourierSeries, PeriodicCoefficients, ValidationReport};
pub use phases::{PhaseReport, Verdict};
pub use quantum::{QuantumStateSpec, SpatialGrid};
pub use tolerance::ToleranceSettings;
