//! Numerical laboratory for fractional Poincaré inequalities on irregular
//! domains: dyadic Whitney decompositions, chain decompositions, summability
//! conditions, fractional seminorms and the apartment counterexample.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod chains;
pub mod conditions;
pub mod counterexample;
pub mod error;
pub mod functional;
pub mod geometry;
pub mod par;
pub mod stats;
pub mod whitney;

pub use error::{Error, Result};
