//! One-dimensional Lagrange spaces used as tensor factors.

use super::quadrature::{gauss_legendre_1d, gauss_lobatto_nodes};

#[derive(Debug, Clone, PartialEq)]
pub struct LineSpace {
    pub continuous: bool,
    pub degree: usize,
    pub ncells: usize,
    pub periodic: bool,
    /// Local nodes on [0,1].
    pub nodes: Vec<f64>,
    /// Barycentric-style denominators Π_{j≠i}(x_i − x_j).
    denom: Vec<f64>,
}

impl LineSpace {
    /// Continuous spaces need `degree >= 1`; DG nodes sit at Gauss points.
    pub fn new(continuous: bool, degree: usize, ncells: usize, periodic: bool) -> LineSpace {
        let nodes: Vec<f64> = if continuous {
            gauss_lobatto_nodes(degree).into_iter().map(|x| 0.5 * (x + 1.0)).collect()
        } else {
            gauss_legendre_1d(degree + 1).0.into_iter().map(|x| 0.5 * (x + 1.0)).collect()
        };
        let denom = (0..nodes.len())
            .map(|i| (0..nodes.len()).filter(|&j| j != i).map(|j| nodes[i] - nodes[j]).product())
            .collect();
        LineSpace { continuous, degree, ncells, periodic, nodes, denom }
    }

    pub fn n_local(&self) -> usize {
        self.degree + 1
    }

    pub fn n_global(&self) -> usize {
        if self.continuous {
            self.ncells * self.degree + usize::from(!self.periodic)
        } else {
            self.ncells * (self.degree + 1)
        }
    }

    pub fn global(&self, cell: usize, i: usize) -> usize {
        if self.continuous {
            let g = cell * self.degree + i;
            if self.periodic {
                g % (self.ncells * self.degree)
            } else {
                g
            }
        } else {
            cell * (self.degree + 1) + i
        }
    }

    /// Value and derivative (reference coordinate) of local basis `i` at `x`.
    pub fn eval(&self, i: usize, x: f64) -> (f64, f64) {
        let n = self.nodes.len();
        let mut val = 1.0;
        for j in 0..n {
            if j != i {
                val *= x - self.nodes[j];
            }
        }
        let mut der = 0.0;
        for m in 0..n {
            if m == i {
                continue;
            }
            let mut p = 1.0;
            for j in 0..n {
                if j != i && j != m {
                    p *= x - self.nodes[j];
                }
            }
            der += p;
        }
        (val / self.denom[i], der / self.denom[i])
    }

    /// Whether global index `g` lies on the domain boundary (non-periodic CG only).
    pub fn is_boundary(&self, g: usize) -> bool {
        self.continuous && !self.periodic && (g == 0 || g == self.n_global() - 1)
    }
}
