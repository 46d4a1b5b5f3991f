//! Structured Q1 meshes, closed-form element matrices, sparse assembly and
//! sparse SPD factorization shared by the elasticity and Helmholtz systems.

mod element;
mod mesh;
mod sparse;

pub use element::{
    elasticity_element_matrix, helmholtz_element_matrices, laplacian_element_matrix,
    mass_element_matrix, ElasticityElement, Matrix4, Matrix8, Vector4,
};
pub use mesh::{DofMap, Edge, StructuredMesh};
pub use sparse::{factorize, Assembler, SparsePattern, SparseSpdMatrix, SpdFactorization};

use thiserror::Error;

/// Errors raised while building meshes, assembling, or factorizing.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid material parameter: {0}")]
    InvalidMaterial(String),
    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("matrix is not positive definite (non-positive pivot at column {column})")]
    Indefinite { column: usize },
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<(), FemError> {
    if expected == found {
        Ok(())
    } else {
        Err(FemError::SizeMismatch { expected, found })
    }
}
