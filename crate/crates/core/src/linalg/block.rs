//! Monolithic solve of the 2×2 block (δu, δρ) system.

use super::solve::LuSolver;
use super::sparse::{SparseMatrix, TripletBuilder};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub a_uu: SparseMatrix,
    pub a_urho: SparseMatrix,
    pub a_rhou: SparseMatrix,
    pub a_rhorho: SparseMatrix,
}

impl BlockSystem {
    pub fn new(a_uu: SparseMatrix, a_urho: SparseMatrix, a_rhou: SparseMatrix, a_rhorho: SparseMatrix) -> Result<Self> {
        let (nu, nr) = (a_uu.nrows, a_rhorho.nrows);
        let shapes = [
            (a_uu.nrows, a_uu.ncols, nu, nu),
            (a_urho.nrows, a_urho.ncols, nu, nr),
            (a_rhou.nrows, a_rhou.ncols, nr, nu),
            (a_rhorho.nrows, a_rhorho.ncols, nr, nr),
        ];
        for (r, c, er, ec) in shapes {
            if r != er {
                return Err(Error::DimensionMismatch { expected: er, got: r });
            }
            if c != ec {
                return Err(Error::DimensionMismatch { expected: ec, got: c });
            }
        }
        Ok(BlockSystem { a_uu, a_urho, a_rhou, a_rhorho })
    }

    pub fn n_u(&self) -> usize {
        self.a_uu.nrows
    }

    pub fn n_rho(&self) -> usize {
        self.a_rhorho.nrows
    }

    pub fn assemble(&self) -> SparseMatrix {
        let nu = self.n_u();
        let n = nu + self.n_rho();
        let nnz = self.a_uu.nnz() + self.a_urho.nnz() + self.a_rhou.nnz() + self.a_rhorho.nnz();
        let mut t = TripletBuilder::with_capacity(n, n, nnz);
        for (m, ro, co) in [(&self.a_uu, 0, 0), (&self.a_urho, 0, nu), (&self.a_rhou, nu, 0), (&self.a_rhorho, nu, nu)] {
            for i in 0..m.nrows {
                for (j, v) in m.row(i) {
                    t.push(i + ro, j + co, v);
                }
            }
        }
        t.finalize()
    }

    pub fn factorize(&self, tol: f64) -> Result<BlockSolver> {
        Ok(BlockSolver { n_u: self.n_u(), lu: LuSolver::new(&self.assemble())?.with_tol(tol) })
    }
}

/// Factorized block system, reused across solves.
pub struct BlockSolver {
    n_u: usize,
    lu: LuSolver,
}

impl BlockSolver {
    pub fn solve(&self, r_u: &[f64], r_rho: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut rhs = Vec::with_capacity(r_u.len() + r_rho.len());
        rhs.extend_from_slice(r_u);
        rhs.extend_from_slice(r_rho);
        let mut x = self.lu.solve(&rhs)?;
        let rho = x.split_off(self.n_u);
        Ok((x, rho))
    }
}

/// Factor and solve once.
pub fn solve_block(sys: &BlockSystem, r_u: &[f64], r_rho: &[f64], tol: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    sys.factorize(tol)?.solve(r_u, r_rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeros(r: usize, c: usize) -> SparseMatrix {
        TripletBuilder::new(r, c).finalize()
    }

    #[test]
    fn identity_blocks() {
        let sys = BlockSystem::new(SparseMatrix::identity(2), zeros(2, 3), zeros(3, 2), SparseMatrix::identity(3)).unwrap();
        let (u, r) = solve_block(&sys, &[1.0, 2.0], &[3.0, 4.0, 5.0], 1e-12).unwrap();
        assert_eq!(u, vec![1.0, 2.0]);
        assert_eq!(r, vec![3.0, 4.0, 5.0]);
        let (u, r) = solve_block(&sys, &[0.0; 2], &[0.0; 3], 1e-12).unwrap();
        assert!(u.iter().chain(&r).all(|&v| v == 0.0));
    }

    #[test]
    fn shape_mismatch() {
        assert!(BlockSystem::new(SparseMatrix::identity(2), zeros(3, 3), zeros(3, 2), SparseMatrix::identity(3)).is_err());
    }
}
