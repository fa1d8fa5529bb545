//! Regge pole analysis of integral cross sections.
//!
//! S-matrix elements known at integer total angular momentum are continued
//! into the complex J plane with a rational interpolant. Its poles in the
//! first quadrant (Regge poles) give the resonance part of the integral
//! cross section through the Mulholland formula; subtracting it leaves the
//! smooth direct background.

// Negated comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod data;
pub mod error;
pub mod ics;
pub mod linalg;
pub mod mp;
pub mod pade;
pub mod poles;
pub mod poly;
pub mod quadrature;
pub mod serve;
pub mod shell_model;
pub mod trajectory;
pub mod units;
pub mod workflow;

pub use error::{Error, Result};
