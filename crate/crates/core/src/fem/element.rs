use nalgebra::SMatrix;

use super::FemError;

pub type Matrix8 = SMatrix<f64, 8, 8>;
pub type Matrix4 = SMatrix<f64, 4, 4>;
pub type Vector4 = nalgebra::Vector4<f64>;

/// Plane-stress material constants for the reference element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticityElement {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
}

impl Default for ElasticityElement {
    fn default() -> Self {
        Self {
            youngs_modulus: 1.0,
            poisson_ratio: 0.3,
        }
    }
}

/// Unit-density Q1 plane-stress stiffness matrix of a square element.
///
/// Dofs are ordered `(ux, uy)` per node, nodes counter-clockwise from the
/// bottom-left corner. In 2D with unit thickness the matrix does not depend
/// on the element size; `h` is only validated.
pub fn elasticity_element_matrix(e0: f64, nu: f64, h: f64) -> Result<Matrix8, FemError> {
    if !(e0 > 0.0) || !e0.is_finite() {
        return Err(FemError::InvalidMaterial(format!(
            "Young's modulus must be positive, got {e0}"
        )));
    }
    if !(0.0..0.5).contains(&nu) {
        return Err(FemError::InvalidMaterial(format!(
            "Poisson ratio must lie in [0, 0.5), got {nu}"
        )));
    }
    if !(h > 0.0) {
        return Err(FemError::InvalidMesh(format!("element size must be positive, got {h}")));
    }
    let k = [
        0.5 - nu / 6.0,
        0.125 + nu / 8.0,
        -0.25 - nu / 12.0,
        -0.125 + 3.0 * nu / 8.0,
        -0.25 + nu / 12.0,
        -0.125 - nu / 8.0,
        nu / 6.0,
        0.125 - 3.0 * nu / 8.0,
    ];
    #[rustfmt::skip]
    let idx: [[usize; 8]; 8] = [
        [0, 1, 2, 3, 4, 5, 6, 7],
        [1, 0, 7, 6, 5, 4, 3, 2],
        [2, 7, 0, 5, 6, 3, 4, 1],
        [3, 6, 5, 0, 7, 2, 1, 4],
        [4, 5, 6, 7, 0, 1, 2, 3],
        [5, 4, 3, 2, 1, 0, 7, 6],
        [6, 3, 4, 1, 2, 7, 0, 5],
        [7, 2, 1, 4, 3, 6, 5, 0],
    ];
    let scale = e0 / (1.0 - nu * nu);
    Ok(Matrix8::from_fn(|i, j| scale * k[idx[i][j]]))
}

/// Q1 Laplacian element matrix (size independent in 2D).
pub fn laplacian_element_matrix() -> Matrix4 {
    #[rustfmt::skip]
    let s = Matrix4::new(
         4.0, -1.0, -2.0, -1.0,
        -1.0,  4.0, -1.0, -2.0,
        -2.0, -1.0,  4.0, -1.0,
        -1.0, -2.0, -1.0,  4.0,
    );
    s / 6.0
}

/// Consistent Q1 mass matrix of a square element of side `h`.
pub fn mass_element_matrix(h: f64) -> Matrix4 {
    #[rustfmt::skip]
    let m = Matrix4::new(
        4.0, 2.0, 1.0, 2.0,
        2.0, 4.0, 2.0, 1.0,
        1.0, 2.0, 4.0, 2.0,
        2.0, 1.0, 2.0, 4.0,
    );
    m * (h * h / 36.0)
}

/// Helmholtz element matrix `r^2 S + M` and the element load `M 1`.
pub fn helmholtz_element_matrices(r: f64, h: f64) -> Result<(Matrix4, Vector4), FemError> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(FemError::InvalidMaterial(format!("filter length must be >= 0, got {r}")));
    }
    if !(h > 0.0) {
        return Err(FemError::InvalidMesh(format!("element size must be positive, got {h}")));
    }
    let mass = mass_element_matrix(h);
    let load = mass * Vector4::repeat(1.0);
    Ok((laplacian_element_matrix() * (r * r) + mass, load))
}
