//! Semi-analytic pricing of a joint-life variable annuity with a guaranteed minimum accumulation
//! benefit, a surrender benefit and a death benefit, plus a path-simulation oracle.

pub mod config;
pub mod contract;
pub mod error;
pub mod integrands;
pub mod integration;
pub mod levy;
pub mod mortality;
pub mod oracle;
pub mod pricing;
pub mod term_structure;
pub mod validation;

pub use error::{Error, Result};
