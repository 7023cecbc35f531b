//! Core library for causally guided hierarchical reinforcement learning.
//!
//! The crate is organized around a boolean structural causal model over
//! subgoal variables: `graph` holds ground-truth structures and generators,
//! `ascm` executes them (plus a small gridworld in `grid`), `ssd` recovers
//! structure from interventional data, `strategy` ranks candidate
//! interventions, `hrc` runs the full discovery/training loop, and `cost`
//! computes exact and empirical training costs.

pub mod ascm;
pub mod cost;
pub mod graph;
pub mod grid;
pub mod hrc;
pub mod ssd;
pub mod strategy;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("cyclic graph not supported: {0}")]
    Cyclic(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
