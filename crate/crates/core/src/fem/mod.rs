//! Reference elements, compatible spaces, quadrature and tabulation.

mod field;
mod line;
mod quadrature;
mod space;

pub use field::{eval_all, eval_local, Field};
pub use line::LineSpace;
pub use quadrature::{gauss_legendre, gauss_legendre_1d, gauss_lobatto_nodes, QuadRule};
pub use space::{tabulate_basis, tabulate_points, BasisTable, Block, Component, FiniteElementSpace, Shape, SpaceFamily};
