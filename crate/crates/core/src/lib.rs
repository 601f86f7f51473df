//! Closed-form performance analysis of a fixed-gain dual-hop relay link
//! with a Nakagami-m RF hop and a Gamma-Gamma FSO hop under pointing
//! errors, with a Monte-Carlo simulator to check every formula.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod error;
pub mod mcsim;
pub mod quad;
pub mod relay;
pub mod specfun;
pub mod sum;

pub use error::{Error, Result};
