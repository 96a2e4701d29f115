//! Spectral-Galerkin toolkit for synthesizing and verifying
//! Fredholm-backstepping feedback laws on skew-adjoint Fourier-multiplier
//! systems, the linearized capillary-gravity water-wave equation in
//! particular.
//!
//! The pipeline: build a truncated spectrum ([`spectral`]), form the
//! resolvent family and check its frame bounds ([`riesz`]), pin the feedback
//! gains through the `TB = B` fixed point and assemble the transform
//! ([`feedback`]), then verify the closed loop by pole placement and
//! simulation ([`closed_loop`]). Open-loop null controllability by the
//! moment method lives in [`control`], and [`acceptance`] bundles every
//! finite-truncation claim into a pass/fail suite.

pub mod acceptance;
pub mod closed_loop;
pub mod control;
pub mod error;
pub mod feedback;
pub mod linalg;
pub mod riesz;
pub mod seeded;
pub mod spectral;

pub use error::{Error, Result};
