//! Fluctuation identities for `d`-dimensional isotropic stable processes.
//!
//! The crate evaluates the closed-form laws of first passage, closest reach,
//! ladder potentials, radial excursions, the operator Wiener–Hopf
//! factorisation and the stationary law of the process reflected in its
//! radial maximum. Every identity is paired with an independent check:
//! quadrature in [`numerics`] and path simulation in [`montecarlo`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod cli;
pub mod error;
pub mod identities;
pub mod model;
pub mod montecarlo;
pub mod numerics;
pub mod operators;

pub use error::{Error, Result};
pub use model::{kelvin_invert, BallSpec, IdentityReport, Point, StableParams};
pub use num_complex;
