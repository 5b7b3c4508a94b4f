//! Sparse matrices and direct solvers.

mod block;
mod solve;
mod sparse;

pub use block::{solve_block, BlockSolver, BlockSystem};
pub use solve::{solve_direct, CholeskySolver, Factorization, LuSolver, DEFAULT_TOL};
pub use sparse::{SparseMatrix, TripletBuilder};
