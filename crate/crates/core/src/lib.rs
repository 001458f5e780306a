//! Analysis toolkit for 3-query locally correctable codes in geometric form.
//!
//! The crate models codes as vector lists with spanning-triple matchings and
//! provides the full reduction pipeline used to certify dimension bounds:
//! isotropic-position transforms, spread and correlation analysis, triple
//! clustering, regular-form and multiplicity reductions, random restrictions,
//! and the amplification driver, plus generators and a line-oriented file
//! format.

pub mod cluster;
pub mod error;
pub mod field;
pub mod forster;
pub mod io;
pub mod linalg;
pub mod model;
pub mod multiplicity;
pub mod pipeline;
pub mod report;
pub mod restrict;
pub mod spectral;

pub use error::{Error, Result};
