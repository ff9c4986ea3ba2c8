//! Multizone higher-order Ambisonics reproduction by regularized mode
//! matching, with an optional regularizer built from the direction-of-arrival
//! distribution of the primary field.
//!
//! The crate is organized bottom-up:
//!
//! - [`special`]: spherical Bessel/Hankel functions and spherical harmonics.
//! - [`geometry`]: positions and loudspeaker layouts.
//! - [`field`]: point sources and their interior expansions about any origin.
//! - [`mode_matching`]: transfer matrix, primary vector, DoA weights, solvers.
//! - [`evaluation`]: ball grids, NRE and the direction sweep.
//! - [`binaural`]: rigid-sphere head model and ear-signal errors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod binaural;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod field;
pub mod geometry;
pub mod mode_matching;
pub mod report;
pub mod special;

pub use error::{Error, Result};
pub use exec::Execution;
pub use field::{ExpansionCoefficients, Wavenumber};
pub use geometry::{ArrayGeometry, Position};
pub use mode_matching::{DoAWeights, DrivingSignals, Method, SolverInputs, ZoneSet};

pub use num_complex::Complex64;
