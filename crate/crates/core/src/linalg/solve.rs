//! Sparse LU backed by faer.
//!
//! A CSR matrix is handed to faer as the CSC storage of its transpose, and
//! solves use the transposed factorization. The symbolic analysis can be kept
//! and reused whenever the sparsity pattern is unchanged. Symmetric positive
//! definite matrices can use a sparse Cholesky factorization instead.

use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::linalg::solvers::Solve;
use faer::{MatMut, Side};

use super::sparse::SparseMatrix;
use crate::error::{Error, Result};

/// Relative residual accepted by the solvers unless overridden.
pub const DEFAULT_TOL: f64 = 1e-12;

/// A factorization that can be refreshed with new values on a fixed pattern.
pub trait Factorization: Sized {
    fn factor(a: &SparseMatrix) -> Result<Self>;
    fn refactor(&mut self, a: &SparseMatrix) -> Result<()>;
    fn solve(&self, b: &[f64]) -> Result<Vec<f64>>;
}

/// Check `‖Ax − b‖ ≤ tol·max(‖b‖, ‖A‖‖x‖)` in max norms.
fn check_residual(a: &SparseMatrix, b: &[f64], x: Vec<f64>, tol: f64) -> Result<Vec<f64>> {
    let ax = a.matvec(&x);
    let bn = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = (0.0f64, 0usize);
    for (i, (p, q)) in ax.iter().zip(b).enumerate() {
        let r = (p - q).abs();
        if !(r <= worst.0) {
            worst = (r, i);
        }
    }
    if !worst.0.is_finite() {
        return Err(Error::Singular { pivot: worst.1 });
    }
    // A backward-stable solve cannot beat ‖A‖‖x‖·eps.
    let xn = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = bn.max(a.max_abs() * xn);
    if worst.0 > tol * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::SolveResidual { residual: worst.0 / scale, tol });
    }
    Ok(x)
}

pub struct LuSolver {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    matrix: SparseMatrix,
    symbolic: SymbolicLu<usize>,
    lu: Lu<usize, f64>,
    tol: f64,
}

fn map_err(e: LuError) -> Error {
    match e {
        LuError::SymbolicSingular { index } => Error::Singular { pivot: index },
        LuError::Generic(e) => Error::InvalidArgument(format!("sparse LU: {e:?}")),
    }
}

impl LuSolver {
    pub fn new(a: &SparseMatrix) -> Result<LuSolver> {
        if a.nrows != a.ncols {
            return Err(Error::DimensionMismatch { expected: a.nrows, got: a.ncols });
        }
        faer::set_global_parallelism(faer::Par::Seq);
        let n = a.nrows;
        let sym = SymbolicSparseColMatRef::new_checked(n, n, &a.row_ptr, None, &a.col_idx);
        let symbolic = SymbolicLu::try_new(sym).map_err(|e| Error::InvalidArgument(format!("{e:?}")))?;
        let lu = Lu::try_new_with_symbolic(symbolic.clone(), SparseColMatRef::new(sym, &a.values)).map_err(map_err)?;
        Ok(LuSolver {
            n,
            row_ptr: a.row_ptr.clone(),
            col_idx: a.col_idx.clone(),
            matrix: a.clone(),
            symbolic,
            lu,
            tol: DEFAULT_TOL,
        })
    }

    pub fn with_tol(mut self, tol: f64) -> LuSolver {
        self.tol = tol;
        self
    }

    pub fn set_tol(&mut self, tol: f64) {
        self.tol = tol;
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// Numeric refactorization; the pattern must equal the original one.
    pub fn refactor(&mut self, a: &SparseMatrix) -> Result<()> {
        if a.row_ptr != self.row_ptr || a.col_idx != self.col_idx {
            *self = LuSolver::new(a)?.with_tol(self.tol);
            return Ok(());
        }
        let sym = SymbolicSparseColMatRef::new_checked(self.n, self.n, &self.row_ptr, None, &self.col_idx);
        self.lu = Lu::try_new_with_symbolic(self.symbolic.clone(), SparseColMatRef::new(sym, &a.values)).map_err(map_err)?;
        self.matrix = a.clone();
        Ok(())
    }

    /// Solve `A x = b` and check the residual.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: b.len() });
        }
        let mut x = b.to_vec();
        self.lu.solve_transpose_in_place(MatMut::from_column_major_slice_mut(&mut x, self.n, 1));
        check_residual(&self.matrix, b, x, self.tol)
    }
}

impl Factorization for LuSolver {
    fn factor(a: &SparseMatrix) -> Result<Self> {
        LuSolver::new(a)
    }

    fn refactor(&mut self, a: &SparseMatrix) -> Result<()> {
        LuSolver::refactor(self, a)
    }

    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        LuSolver::solve(self, b)
    }
}

/// Sparse Cholesky for symmetric positive definite matrices (both triangles
/// stored).
pub struct CholeskySolver {
    n: usize,
    matrix: SparseMatrix,
    symbolic: SymbolicLlt<usize>,
    llt: Llt<usize, f64>,
    tol: f64,
}

fn llt_err<E: std::fmt::Debug>(e: E) -> Error {
    Error::InvalidArgument(format!("matrix is not positive definite: {e:?}"))
}

impl CholeskySolver {
    pub fn new(a: &SparseMatrix) -> Result<CholeskySolver> {
        if a.nrows != a.ncols {
            return Err(Error::DimensionMismatch { expected: a.nrows, got: a.ncols });
        }
        faer::set_global_parallelism(faer::Par::Seq);
        let n = a.nrows;
        let sym = SymbolicSparseColMatRef::new_checked(n, n, &a.row_ptr, None, &a.col_idx);
        let symbolic = SymbolicLlt::try_new(sym, Side::Lower).map_err(|e| Error::InvalidArgument(format!("{e:?}")))?;
        let llt = Llt::try_new_with_symbolic(symbolic.clone(), SparseColMatRef::new(sym, &a.values), Side::Lower)
            .map_err(llt_err)?;
        Ok(CholeskySolver { n, matrix: a.clone(), symbolic, llt, tol: DEFAULT_TOL })
    }

    pub fn refactor(&mut self, a: &SparseMatrix) -> Result<()> {
        if a.row_ptr != self.matrix.row_ptr || a.col_idx != self.matrix.col_idx {
            let tol = self.tol;
            *self = CholeskySolver::new(a)?;
            self.tol = tol;
            return Ok(());
        }
        let sym = SymbolicSparseColMatRef::new_checked(self.n, self.n, &a.row_ptr, None, &a.col_idx);
        self.llt = Llt::try_new_with_symbolic(self.symbolic.clone(), SparseColMatRef::new(sym, &a.values), Side::Lower)
            .map_err(llt_err)?;
        self.matrix.values.copy_from_slice(&a.values);
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: b.len() });
        }
        let mut x = b.to_vec();
        self.llt.solve_in_place(MatMut::from_column_major_slice_mut(&mut x, self.n, 1));
        check_residual(&self.matrix, b, x, self.tol)
    }
}

impl Factorization for CholeskySolver {
    fn factor(a: &SparseMatrix) -> Result<Self> {
        CholeskySolver::new(a)
    }

    fn refactor(&mut self, a: &SparseMatrix) -> Result<()> {
        CholeskySolver::refactor(self, a)
    }

    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        CholeskySolver::solve(self, b)
    }
}

/// One-shot factor-and-solve.
pub fn solve_direct(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    LuSolver::new(a)?.solve(b)
}
