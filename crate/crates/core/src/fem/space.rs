//! Tensor-product compatible spaces on a structured mesh.
//!
//! Every space is a union of blocks `X ⊗ Z` of one-dimensional Lagrange
//! spaces. RT degrees of freedom are physical normal velocity components at
//! nodes, so the contravariant map reduces to the identity on rectangles.

use super::line::LineSpace;
use crate::error::{Error, Result};
use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceFamily {
    Cg(usize),
    Dg(usize),
    Rt(usize),
    Cp(usize),
}

impl SpaceFamily {
    pub fn degree(self) -> usize {
        match self {
            SpaceFamily::Cg(k) | SpaceFamily::Dg(k) | SpaceFamily::Rt(k) | SpaceFamily::Cp(k) => k,
        }
    }

    pub fn is_vector(self) -> bool {
        matches!(self, SpaceFamily::Rt(_))
    }

    pub fn name(self) -> String {
        match self {
            SpaceFamily::Cg(k) => format!("CG{k}"),
            SpaceFamily::Dg(k) => format!("DG{k}"),
            SpaceFamily::Rt(k) => format!("RT{k}"),
            SpaceFamily::Cp(k) => format!("CP{k}"),
        }
    }

    pub fn parse(s: &str) -> Option<SpaceFamily> {
        let (head, k) = s.split_at(2);
        let k: usize = k.parse().ok()?;
        match head {
            "CG" => Some(SpaceFamily::Cg(k)),
            "DG" => Some(SpaceFamily::Dg(k)),
            "RT" => Some(SpaceFamily::Rt(k)),
            "CP" => Some(SpaceFamily::Cp(k)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Scalar,
    X,
    Z,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub x: LineSpace,
    pub z: LineSpace,
    pub component: Component,
    /// First global dof of the block.
    pub offset: usize,
    /// First local (per-cell) dof of the block.
    pub local_offset: usize,
}

impl Block {
    fn n_local(&self) -> usize {
        self.x.n_local() * self.z.n_local()
    }

    fn n_global(&self) -> usize {
        self.x.n_global() * self.z.n_global()
    }
}

#[derive(Debug, Clone)]
pub struct FiniteElementSpace {
    pub mesh: Mesh,
    pub family: SpaceFamily,
    pub blocks: Vec<Block>,
    n_dofs: usize,
    n_local: usize,
    cell_dofs: Vec<usize>,
    constrained: Vec<bool>,
}

impl PartialEq for FiniteElementSpace {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family && self.mesh == other.mesh
    }
}

impl FiniteElementSpace {
    pub fn new(mesh: &Mesh, family: SpaceFamily) -> Result<FiniteElementSpace> {
        let k = family.degree();
        if k == 0 && !matches!(family, SpaceFamily::Dg(_)) {
            return Err(Error::UnsupportedDegree(0));
        }
        if k > 4 {
            return Err(Error::UnsupportedDegree(k));
        }
        let (nx, nz, pz) = (mesh.nx, mesh.nz, mesh.periodic_z);
        let cg = |d: usize, n: usize, p: bool| LineSpace::new(true, d, n, p);
        let dg = |d: usize, n: usize, p: bool| LineSpace::new(false, d, n, p);
        let specs: Vec<(LineSpace, LineSpace, Component)> = match family {
            SpaceFamily::Cg(k) => vec![(cg(k, nx, true), cg(k, nz, pz), Component::Scalar)],
            SpaceFamily::Dg(k) => vec![(dg(k, nx, true), dg(k, nz, pz), Component::Scalar)],
            SpaceFamily::Rt(k) => vec![
                (cg(k, nx, true), dg(k - 1, nz, pz), Component::X),
                (dg(k - 1, nx, true), cg(k, nz, pz), Component::Z),
            ],
            SpaceFamily::Cp(k) => vec![(dg(k - 1, nx, true), cg(k, nz, pz), Component::Scalar)],
        };
        let mut blocks = Vec::new();
        let (mut offset, mut local_offset) = (0, 0);
        for (x, z, component) in specs {
            let b = Block { x, z, component, offset, local_offset };
            offset += b.n_global();
            local_offset += b.n_local();
            blocks.push(b);
        }
        let (n_dofs, n_local) = (offset, local_offset);
        let mut cell_dofs = Vec::with_capacity(n_local * mesh.n_cells());
        for cell in 0..mesh.n_cells() {
            let (cx, cz) = mesh.cell_coords(cell);
            for b in &blocks {
                let gx = b.x.n_global();
                for j in 0..b.z.n_local() {
                    for i in 0..b.x.n_local() {
                        cell_dofs.push(b.offset + b.x.global(cx, i) + gx * b.z.global(cz, j));
                    }
                }
            }
        }
        let mut constrained = vec![false; n_dofs];
        if family.is_vector() && !pz {
            let b = &blocks[1];
            let gx = b.x.n_global();
            for gz in [0, b.z.n_global() - 1] {
                for gxi in 0..gx {
                    constrained[b.offset + gxi + gx * gz] = true;
                }
            }
        }
        Ok(FiniteElementSpace { mesh: *mesh, family, blocks, n_dofs, n_local, cell_dofs, constrained })
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    /// Number of basis functions supported on one cell.
    pub fn n_local(&self) -> usize {
        self.n_local
    }

    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        &self.cell_dofs[cell * self.n_local..(cell + 1) * self.n_local]
    }

    /// Dofs fixed to zero by the slip condition u·n = 0 (RT on a slab).
    pub fn constrained(&self) -> &[bool] {
        &self.constrained
    }

    pub fn is_vector(&self) -> bool {
        self.family.is_vector()
    }

    /// Block index and tensor indices of local dof `l`.
    pub fn local_block(&self, l: usize) -> (usize, usize, usize) {
        for (bi, b) in self.blocks.iter().enumerate() {
            if l < b.local_offset + b.n_local() {
                let r = l - b.local_offset;
                return (bi, r % b.x.n_local(), r / b.x.n_local());
            }
        }
        unreachable!("local dof {l} out of range")
    }

    /// Value and physical gradient of local basis `l` at reference point `xi`.
    /// Scalars use slot 0; vector bases carry one nonzero component.
    pub fn shape(&self, l: usize, xi: [f64; 2]) -> Shape {
        let (bi, i, j) = self.local_block(l);
        let b = &self.blocks[bi];
        let (vx, dx) = b.x.eval(i, xi[0]);
        let (vz, dz) = b.z.eval(j, xi[1]);
        let v = vx * vz;
        let g = [dx * vz / self.mesh.dx, vx * dz / self.mesh.dz];
        let c = match b.component {
            Component::Scalar | Component::X => 0,
            Component::Z => 1,
        };
        let mut s = Shape::default();
        s.val[c] = v;
        s.grad[c] = g;
        s
    }

    /// Physical coordinates and component of every global dof node. Shared
    /// dofs report the node seen from the lowest-numbered cell.
    pub fn dof_nodes(&self) -> Vec<([f64; 2], Component)> {
        let mut out = vec![([f64::NAN; 2], Component::Scalar); self.n_dofs];
        let mut seen = vec![false; self.n_dofs];
        for cell in 0..self.mesh.n_cells() {
            for (l, &g) in self.cell_dofs(cell).iter().enumerate() {
                if seen[g] {
                    continue;
                }
                seen[g] = true;
                let (bi, i, j) = self.local_block(l);
                let b = &self.blocks[bi];
                out[g] = (self.mesh.map_point(cell, [b.x.nodes[i], b.z.nodes[j]]), b.component);
            }
        }
        out
    }
}

/// Basis value and physical gradient; `grad[c][d] = ∂_d v_c`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Shape {
    pub val: [f64; 2],
    pub grad: [[f64; 2]; 2],
}

impl Shape {
    pub fn div(&self) -> f64 {
        self.grad[0][0] + self.grad[1][1]
    }
}

/// Shapes of every local basis at a fixed set of reference points,
/// stored basis-major: `shapes[l * n_points + q]`.
#[derive(Debug, Clone)]
pub struct BasisTable {
    pub n_basis: usize,
    pub n_points: usize,
    pub shapes: Vec<Shape>,
}

impl BasisTable {
    pub fn get(&self, l: usize, q: usize) -> &Shape {
        &self.shapes[l * self.n_points + q]
    }
}

pub fn tabulate_points(space: &FiniteElementSpace, points: &[[f64; 2]]) -> BasisTable {
    let n = space.n_local();
    let mut shapes = Vec::with_capacity(n * points.len());
    for l in 0..n {
        for p in points {
            shapes.push(space.shape(l, *p));
        }
    }
    BasisTable { n_basis: n, n_points: points.len(), shapes }
}

/// Tabulate at the points of a rule given on [0,1]².
pub fn tabulate_basis(space: &FiniteElementSpace, rule: &super::QuadRule) -> BasisTable {
    tabulate_points(space, &rule.points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus() -> Mesh {
        Mesh::new(2, 2, 1.0, 1.0, true).unwrap()
    }

    #[test]
    fn dof_counts() {
        let m = torus();
        assert_eq!(FiniteElementSpace::new(&m, SpaceFamily::Cg(2)).unwrap().n_dofs(), 16);
        assert_eq!(FiniteElementSpace::new(&m, SpaceFamily::Dg(1)).unwrap().n_dofs(), 16);
        assert!(FiniteElementSpace::new(&m, SpaceFamily::Rt(0)).is_err());
        let cp = FiniteElementSpace::new(&m, SpaceFamily::Cp(2)).unwrap();
        assert_eq!(cp.n_local(), 6);
        let rt = FiniteElementSpace::new(&m, SpaceFamily::Rt(2)).unwrap();
        assert_eq!(rt.n_local(), 12);
    }

    #[test]
    fn straka_counts() {
        let m = Mesh::new(80, 16, 32000.0, 6400.0, false).unwrap();
        let rt = FiniteElementSpace::new(&m, SpaceFamily::Rt(2)).unwrap();
        assert_eq!(rt.n_dofs(), 160 * 32 + 80 * 66);
        assert_eq!(rt.constrained().iter().filter(|&&c| c).count(), 2 * 160);
        let cp = FiniteElementSpace::new(&m, SpaceFamily::Cp(2)).unwrap();
        assert_eq!(cp.n_dofs(), 80 * 33 * 2);
    }

    #[test]
    fn cg1_centre_values() {
        let s = FiniteElementSpace::new(&torus(), SpaceFamily::Cg(1)).unwrap();
        for l in 0..4 {
            assert!((s.shape(l, [0.5, 0.5]).val[0] - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn cp_matches_rt_vertical_nodes() {
        let m = Mesh::new(3, 2, 3.0, 2.0, false).unwrap();
        let rt = FiniteElementSpace::new(&m, SpaceFamily::Rt(2)).unwrap();
        let cp = FiniteElementSpace::new(&m, SpaceFamily::Cp(2)).unwrap();
        let rn = rt.dof_nodes();
        let cn = cp.dof_nodes();
        let zoff = rt.blocks[1].offset;
        for (g, (p, _)) in cn.iter().enumerate() {
            assert_eq!(*p, rn[zoff + g].0);
        }
    }

    #[test]
    fn family_names_roundtrip() {
        for f in [SpaceFamily::Cg(2), SpaceFamily::Dg(1), SpaceFamily::Rt(3), SpaceFamily::Cp(2)] {
            assert_eq!(SpaceFamily::parse(&f.name()), Some(f));
        }
    }
}
