//! Generalized fiducial inference.
//!
//! The crate inverts data generating algorithms to obtain fiducial
//! distributions for:
//!
//! * the mean and covariance of multivariate normal data, with the covariance
//!   written as `Z Λ² Zᵀ` and `Z` parameterized by a Cayley transform
//!   ([`mvn`]);
//! * the one-way random effects model ([`ranef`]);
//! * binomial data with `p` unknown ([`binom_p`]), `n` unknown ([`binom_n`])
//!   or both unknown ([`binom_np`]).
//!
//! [`regions`] turns draws into confidence regions, and [`numerics`] holds the
//! special functions, random streams and structured linear algebra shared by
//! everything else.

pub mod binom_n;
pub mod binom_np;
pub mod binom_p;
pub mod error;
pub mod mcmc;
pub mod mvn;
pub mod numerics;
pub mod ranef;
pub mod regions;

pub use error::{GfiError, Result};
