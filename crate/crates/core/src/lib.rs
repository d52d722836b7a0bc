//! Energy landscape and metastable Glauber dynamics of the mean-field
//! (Curie-Weiss) Potts model.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod critical;
pub mod ek;
pub mod error;
pub mod export;
pub mod family;
pub mod landscape;
pub mod potential;
pub mod roots;
pub mod simplex;

pub use error::{Error, Result};
pub use simplex::SimplexPoint;
