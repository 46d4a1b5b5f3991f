//! Density-based topology optimization in 2D with on-the-fly reduced-order
//! models inside an error-aware trust-region method.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod fem;
pub mod filter;
pub mod hdm;
pub mod mma;
pub mod rom;
pub mod trust_region;
pub mod bench;

use thiserror::Error;

/// Top-level error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Fem(#[from] fem::FemError),
    #[error("solution does not belong to the requested design")]
    StaleSolution,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("reduced system is singular: {0}")]
    DegenerateBasis(String),
    #[error("reduced state belongs to basis generation {found}, expected {expected}")]
    BasisMismatch { expected: u64, found: u64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("reference value unavailable: {0}")]
    MissingReference(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
