//! Inverse modeling toolkit for steel tempering hardness.
//!
//! A forward surrogate ("Teacher") learns the many-to-one map from 13
//! process and composition features to Rockwell hardness. An inverse
//! network ("Student") is then trained by backpropagating a
//! target-consistency loss through the frozen Teacher. Two conventional
//! baselines (a direct-inverse MLP and a multi-output regression forest)
//! and a TD3 agent provide the comparison points, and `eval` produces
//! comparison reports under both the input-space and functional
//! evaluation protocols.

pub mod baselines;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod nncore;
pub mod rl;
pub mod training;

pub use error::{Error, Result};
