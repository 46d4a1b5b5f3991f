use super::FemError;

/// Rectangular grid of congruent square Q1 elements.
///
/// Nodes are numbered row-major with x fastest, starting at the bottom-left
/// corner: node `(i, j)` has index `j * (nx + 1) + i`. Element `(i, j)` has
/// index `j * nx + i` and lists its nodes counter-clockwise from the
/// bottom-left corner.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredMesh {
    nx: usize,
    ny: usize,
    h: f64,
}

/// One side of the rectangular domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

impl StructuredMesh {
    pub fn new(nx: usize, ny: usize, h: f64) -> Result<Self, FemError> {
        if nx == 0 || ny == 0 {
            return Err(FemError::InvalidMesh(format!(
                "element counts must be positive, got {nx}x{ny}"
            )));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(FemError::InvalidMesh(format!(
                "element size must be positive and finite, got {h}"
            )));
        }
        Ok(Self { nx, ny, h })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn node_count(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn elem_count(&self) -> usize {
        self.nx * self.ny
    }

    /// Area of a single element, `h^2`.
    pub fn elem_area(&self) -> f64 {
        self.h * self.h
    }

    pub fn width(&self) -> f64 {
        self.nx as f64 * self.h
    }

    pub fn height(&self) -> f64 {
        self.ny as f64 * self.h
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= self.nx && j <= self.ny);
        j * (self.nx + 1) + i
    }

    pub fn node_coords(&self, node: usize) -> (f64, f64) {
        let i = node % (self.nx + 1);
        let j = node / (self.nx + 1);
        (i as f64 * self.h, j as f64 * self.h)
    }

    pub fn elem(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    /// Grid position `(i, j)` of an element.
    pub fn elem_position(&self, e: usize) -> (usize, usize) {
        (e % self.nx, e / self.nx)
    }

    /// Nodes of element `e`: bottom-left, bottom-right, top-right, top-left.
    pub fn elem_nodes(&self, e: usize) -> [usize; 4] {
        let (i, j) = self.elem_position(e);
        let n0 = self.node(i, j);
        let n3 = self.node(i, j + 1);
        [n0, n0 + 1, n3 + 1, n3]
    }

    /// Displacement dofs of element `e` in `(ux, uy)` pairs per node.
    pub fn elem_vector_dofs(&self, e: usize) -> [usize; 8] {
        let nodes = self.elem_nodes(e);
        let mut dofs = [0; 8];
        for (k, n) in nodes.iter().enumerate() {
            dofs[2 * k] = 2 * n;
            dofs[2 * k + 1] = 2 * n + 1;
        }
        dofs
    }

    /// Nodes on one side of the domain, ordered by increasing coordinate.
    pub fn edge_nodes(&self, edge: Edge) -> Vec<usize> {
        match edge {
            Edge::Left => (0..=self.ny).map(|j| self.node(0, j)).collect(),
            Edge::Right => (0..=self.ny).map(|j| self.node(self.nx, j)).collect(),
            Edge::Bottom => (0..=self.nx).map(|i| self.node(i, 0)).collect(),
            Edge::Top => (0..=self.nx).map(|i| self.node(i, self.ny)).collect(),
        }
    }

    /// Coordinate of a node along the given edge.
    pub fn edge_coordinate(&self, edge: Edge, node: usize) -> f64 {
        let (x, y) = self.node_coords(node);
        match edge {
            Edge::Left | Edge::Right => y,
            Edge::Bottom | Edge::Top => x,
        }
    }
}

/// Map between the full dof numbering and the free dofs that remain after
/// homogeneous Dirichlet dofs are eliminated.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    full_to_free: Vec<Option<usize>>,
    free_to_full: Vec<usize>,
}

impl DofMap {
    pub fn new(n_full: usize, fixed: impl IntoIterator<Item = usize>) -> Self {
        let mut is_fixed = vec![false; n_full];
        for d in fixed {
            is_fixed[d] = true;
        }
        let mut full_to_free = vec![None; n_full];
        let mut free_to_full = Vec::with_capacity(n_full);
        for (d, fixed) in is_fixed.iter().enumerate() {
            if !fixed {
                full_to_free[d] = Some(free_to_full.len());
                free_to_full.push(d);
            }
        }
        Self {
            full_to_free,
            free_to_full,
        }
    }

    /// Every dof free.
    pub fn identity(n: usize) -> Self {
        Self::new(n, std::iter::empty())
    }

    pub fn n_full(&self) -> usize {
        self.full_to_free.len()
    }

    pub fn n_free(&self) -> usize {
        self.free_to_full.len()
    }

    pub fn free(&self, full: usize) -> Option<usize> {
        self.full_to_free[full]
    }

    pub fn full(&self, free: usize) -> usize {
        self.free_to_full[free]
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free_to_full.iter().map(|&d| full[d]).collect()
    }

    pub fn extend(&self, free: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_full()];
        for (k, &d) in self.free_to_full.iter().enumerate() {
            out[d] = free[k];
        }
        out
    }
}
