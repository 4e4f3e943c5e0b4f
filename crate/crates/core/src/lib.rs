//! Near-field direction-of-arrival estimation for uniform linear arrays.
//!
//! The processing chain is
//!
//! 1. simulate (or receive) snapshots `y(k)` from spherical-wavefront sources
//!    ([`geometry`], [`sim`]),
//! 2. form the sample covariance and rebuild it as a Hermitian Toeplitz
//!    virtual covariance matrix whose entries are picked so that the range
//!    dependent phase terms cancel ([`covariance`]),
//! 3. crop the virtual covariance to a fixed size and take its canonicalized
//!    signal-subspace eigenvector ([`eigen`], [`subspace`]),
//! 4. regress the angle with a complex-valued convolutional residual network
//!    ([`cvnn`]).
//!
//! Near-field 2-D MUSIC and a real-valued time-delay network are provided as
//! baselines ([`baselines`]) and [`pipeline`] holds dataset generation,
//! training, evaluation and the experiment suites driven by the `nfdoa` CLI.

// `!(x > 0.0)` style checks intentionally reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cli;
pub mod cmat;
pub mod config;
pub mod covariance;
pub mod cvnn;
pub mod eigen;
pub mod error;
pub mod geometry;
pub mod pipeline;
pub mod sim;
pub mod subspace;

pub use error::{Error, Result};
pub use num_complex::Complex64;
