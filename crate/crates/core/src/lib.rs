//! Monte Carlo simulation of the square-root (CIR) variance process and the
//! Heston model through its integrated variance.
//!
//! The central object is the integrated-variance implicit scheme ([`ivi`]):
//! each step samples the integrated variance `U` over the step from an
//! inverse Gaussian law and recovers the end-of-step variance from it, which
//! keeps every simulated variance non-negative by construction.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod baseline;
pub mod error;
pub mod harness;
pub mod heston;
pub mod ig;
pub mod ivi;
pub mod mc;
pub mod quad;
pub mod rng;
pub mod scheme;

pub use error::{Error, Result};
pub use heston::{HestonParams, HestonPath, PathSimulator, Payoff};
pub use ig::IgParams;
pub use ivi::{CirParams, CirPath, StepOutput, TimeGrid};
pub use mc::McEstimate;
pub use rng::{PathRng, RngStream};
pub use scheme::VarianceScheme;
