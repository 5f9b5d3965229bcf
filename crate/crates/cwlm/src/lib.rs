//! Conditioned continuous weak linear measurement (CWLM) statistics for a qubit.
//!
//! The central object is a counting-field-augmented Bloch-master equation:
//! the trace of the chi-evolved quasi-density matrix is the moment generating
//! function of the time-integrated detector output. Post-selection on a final
//! state conditions the statistics on both ends of the evolution.
//!
//! Pipeline: build a [`generator::Liouvillian`], propagate with
//! [`propagate::evolve`] over a chi grid, normalize into a conditioned
//! generating function with [`statistics::sample_cf`], and Fourier-invert to a
//! probability distribution with [`statistics::invert`]. The [`analytic`]
//! module provides closed-form limits and the [`trajectories`] module an
//! independent stochastic-unraveling Monte Carlo; both serve as cross-checks
//! of the generating-function pipeline.

pub mod analytic;
pub mod cli;
pub mod error;
pub mod generator;
pub mod linalg;
pub mod model;
pub mod propagate;
pub mod statistics;
pub mod trajectories;

pub use error::CwlmError;
