use std::sync::{Arc, OnceLock};

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::linalg::LltError;
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{MatMut, Side};
use nalgebra::DMatrix;

use super::{check_len, FemError};

/// Upper-triangular compressed-column sparsity pattern of an assembled
/// symmetric matrix. The symbolic Cholesky analysis (AMD ordering) is
/// computed lazily and shared by every matrix with this pattern.
pub struct SparsePattern {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    symbolic: OnceLock<Result<SymbolicLlt<usize>, FemError>>,
}

impl std::fmt::Debug for SparsePattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparsePattern")
            .field("n", &self.n)
            .field("nnz", &self.row_idx.len())
            .finish()
    }
}

impl SparsePattern {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    fn symbolic_view(&self) -> SymbolicSparseColMatRef<'_, usize> {
        SymbolicSparseColMatRef::new_checked(self.n, self.n, &self.col_ptr, None, &self.row_idx)
    }

    fn symbolic_llt(&self) -> Result<SymbolicLlt<usize>, FemError> {
        self.symbolic
            .get_or_init(|| {
                SymbolicLlt::try_new(self.symbolic_view(), Side::Upper)
                    .map_err(|e| FemError::Factorization(format!("{e:?}")))
            })
            .clone()
    }

    fn slot(&self, row: usize, col: usize) -> usize {
        let (r, c) = if row <= col { (row, col) } else { (col, row) };
        let start = self.col_ptr[c];
        let end = self.col_ptr[c + 1];
        start
            + self.row_idx[start..end]
                .binary_search(&r)
                .expect("entry outside the assembled pattern")
    }
}

/// Scatter plan that assembles congruent element matrices into a global
/// symmetric sparse matrix over the free dofs.
#[derive(Debug, Clone)]
pub struct Assembler {
    pattern: Arc<SparsePattern>,
    n_local: usize,
    n_elem: usize,
    // For each element, one slot per local (a, b) pair; usize::MAX marks
    // entries that are eliminated or belong to the lower triangle.
    slots: Vec<usize>,
}

impl Assembler {
    /// `element_dofs[e]` lists the free index of each local dof of element
    /// `e`, or `None` when that dof is eliminated.
    pub fn new(n: usize, element_dofs: &[Vec<Option<usize>>]) -> Self {
        let n_local = element_dofs.first().map_or(0, Vec::len);
        let mut columns: Vec<Vec<usize>> = vec![Vec::new(); n];
        for dofs in element_dofs {
            assert_eq!(dofs.len(), n_local, "elements must share one local size");
            for a in dofs.iter().flatten() {
                for b in dofs.iter().flatten() {
                    if a <= b {
                        columns[*b].push(*a);
                    }
                }
            }
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for mut col in columns {
            col.sort_unstable();
            col.dedup();
            row_idx.extend(col);
            col_ptr.push(row_idx.len());
        }
        let pattern = SparsePattern {
            n,
            col_ptr,
            row_idx,
            symbolic: OnceLock::new(),
        };
        let mut slots = Vec::with_capacity(element_dofs.len() * n_local * n_local);
        for dofs in element_dofs {
            for a in dofs {
                for b in dofs {
                    let s = match (a, b) {
                        (Some(a), Some(b)) if a <= b => pattern.slot(*a, *b),
                        _ => usize::MAX,
                    };
                    slots.push(s);
                }
            }
        }
        Self {
            pattern: Arc::new(pattern),
            n_local,
            n_elem: element_dofs.len(),
            slots,
        }
    }

    pub fn n(&self) -> usize {
        self.pattern.n
    }

    pub fn n_elem(&self) -> usize {
        self.n_elem
    }

    pub fn pattern(&self) -> &Arc<SparsePattern> {
        &self.pattern
    }

    /// Assembles `sum_e scales[e] * P_e local P_e^T`. `local` is the shared
    /// element matrix in column-major order (symmetric, so either order).
    pub fn assemble(&self, local: &[f64], scales: &[f64]) -> Result<SparseSpdMatrix, FemError> {
        check_len(self.n_local * self.n_local, local.len())?;
        check_len(self.n_elem, scales.len())?;
        let mut values = vec![0.0; self.pattern.nnz()];
        let block = self.n_local * self.n_local;
        for (e, &s) in scales.iter().enumerate() {
            let slots = &self.slots[e * block..(e + 1) * block];
            for (k, &slot) in slots.iter().enumerate() {
                if slot != usize::MAX {
                    values[slot] += s * local[k];
                }
            }
        }
        Ok(SparseSpdMatrix {
            pattern: Arc::clone(&self.pattern),
            values,
        })
    }
}

/// Symmetric sparse matrix stored as its upper triangle.
#[derive(Debug, Clone)]
pub struct SparseSpdMatrix {
    pattern: Arc<SparsePattern>,
    values: Vec<f64>,
}

impl SparseSpdMatrix {
    pub fn n(&self) -> usize {
        self.pattern.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let (r, c) = if row <= col { (row, col) } else { (col, row) };
        let start = self.pattern.col_ptr[c];
        let end = self.pattern.col_ptr[c + 1];
        match self.pattern.row_idx[start..end].binary_search(&r) {
            Ok(k) => self.values[start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n()];
        let p = &self.pattern;
        for c in 0..p.n {
            for k in p.col_ptr[c]..p.col_ptr[c + 1] {
                let r = p.row_idx[k];
                let v = self.values[k];
                y[r] += v * x[c];
                if r != c {
                    y[c] += v * x[r];
                }
            }
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let p = &self.pattern;
        let mut a = DMatrix::zeros(p.n, p.n);
        for c in 0..p.n {
            for k in p.col_ptr[c]..p.col_ptr[c + 1] {
                let r = p.row_idx[k];
                a[(r, c)] = self.values[k];
                a[(c, r)] = self.values[k];
            }
        }
        a
    }

    fn view(&self) -> SparseColMatRef<'_, usize, f64> {
        SparseColMatRef::new(self.pattern.symbolic_view(), &self.values)
    }
}

/// Sparse Cholesky factorization `A = L L^T` with fill-reducing ordering.
#[derive(Debug, Clone)]
pub struct SpdFactorization {
    n: usize,
    llt: Llt<usize, f64>,
}

/// Factorizes an SPD matrix; a non-positive pivot is reported as
/// [`FemError::Indefinite`].
pub fn factorize(a: &SparseSpdMatrix) -> Result<SpdFactorization, FemError> {
    let symbolic = a.pattern.symbolic_llt()?;
    let llt = Llt::try_new_with_symbolic(symbolic, a.view(), Side::Upper).map_err(|e| match e {
        LltError::Numeric(faer::linalg::cholesky::llt::factor::LltError::NonPositivePivot {
            index,
        }) => FemError::Indefinite { column: index },
        other => FemError::Factorization(format!("{other:?}")),
    })?;
    Ok(SpdFactorization { n: a.n(), llt })
}

impl SpdFactorization {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, FemError> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<(), FemError> {
        check_len(self.n, x.len())?;
        self.llt
            .solve_in_place(MatMut::from_column_major_slice_mut(x, self.n, 1));
        Ok(())
    }
}
