//! Structured rectangular meshes, periodic in x and optionally in z.
//!
//! Cells are numbered `ix + nx * iz`. A facet joining two cells labels the
//! lower cell index as the `+` side; `normal` is the outward normal of that
//! cell.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh {
    pub nx: usize,
    pub nz: usize,
    pub lx: f64,
    pub lz: f64,
    pub periodic_z: bool,
    pub dx: f64,
    pub dz: f64,
}

/// Local facet of the reference cell [0,1]².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LocalFacet {
    Left,
    Right,
    Bottom,
    Top,
}

impl LocalFacet {
    pub const ALL: [LocalFacet; 4] = [LocalFacet::Left, LocalFacet::Right, LocalFacet::Bottom, LocalFacet::Top];

    pub fn index(self) -> usize {
        match self {
            LocalFacet::Left => 0,
            LocalFacet::Right => 1,
            LocalFacet::Bottom => 2,
            LocalFacet::Top => 3,
        }
    }

    pub fn outward_normal(self) -> [f64; 2] {
        match self {
            LocalFacet::Left => [-1.0, 0.0],
            LocalFacet::Right => [1.0, 0.0],
            LocalFacet::Bottom => [0.0, -1.0],
            LocalFacet::Top => [0.0, 1.0],
        }
    }

    /// Reference coordinates of the facet point with parameter `t` in [0,1].
    pub fn point(self, t: f64) -> [f64; 2] {
        match self {
            LocalFacet::Left => [0.0, t],
            LocalFacet::Right => [1.0, t],
            LocalFacet::Bottom => [t, 0.0],
            LocalFacet::Top => [t, 1.0],
        }
    }

    pub fn is_vertical(self) -> bool {
        matches!(self, LocalFacet::Left | LocalFacet::Right)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Vertical,
    Horizontal,
    AllInterior,
    Boundary,
}

/// One facet. Boundary facets have no `minus` side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Facet {
    pub plus: (usize, LocalFacet),
    pub minus: Option<(usize, LocalFacet)>,
    pub normal: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct FacetSet {
    pub orientation: Orientation,
    pub facets: Vec<Facet>,
}

impl FacetSet {
    pub fn len(&self) -> usize {
        self.facets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facets.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry {
    pub origin: [f64; 2],
    pub jacobian: [[f64; 2]; 2],
    pub measure: f64,
}

impl Mesh {
    pub fn new(nx: usize, nz: usize, lx: f64, lz: f64, periodic_z: bool) -> Result<Mesh> {
        if nx < 2 || nz < 2 {
            return Err(Error::InvalidMesh(format!("need nx, nz >= 2, got {nx}x{nz}")));
        }
        if !(lx > 0.0 && lz > 0.0 && lx.is_finite() && lz.is_finite()) {
            return Err(Error::InvalidMesh(format!("extents must be positive, got {lx} x {lz}")));
        }
        Ok(Mesh { nx, nz, lx, lz, periodic_z, dx: lx / nx as f64, dz: lz / nz as f64 })
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.nz
    }

    pub fn cell_index(&self, ix: usize, iz: usize) -> usize {
        ix + self.nx * iz
    }

    pub fn cell_coords(&self, cell: usize) -> (usize, usize) {
        (cell % self.nx, cell / self.nx)
    }

    pub fn cell_measure(&self) -> f64 {
        self.dx * self.dz
    }

    pub fn cell_geometry(&self, cell: usize) -> Result<CellGeometry> {
        if cell >= self.n_cells() {
            return Err(Error::IndexOutOfRange { index: cell, limit: self.n_cells() });
        }
        Ok(CellGeometry {
            origin: self.cell_origin(cell),
            jacobian: [[self.dx, 0.0], [0.0, self.dz]],
            measure: self.dx * self.dz,
        })
    }

    pub fn cell_origin(&self, cell: usize) -> [f64; 2] {
        let (ix, iz) = self.cell_coords(cell);
        [ix as f64 * self.dx, iz as f64 * self.dz]
    }

    /// Physical coordinates of reference point `xi` in `cell`.
    pub fn map_point(&self, cell: usize, xi: [f64; 2]) -> [f64; 2] {
        let o = self.cell_origin(cell);
        [o[0] + xi[0] * self.dx, o[1] + xi[1] * self.dz]
    }

    /// Length of a facet with the given local orientation.
    pub fn facet_measure(&self, f: LocalFacet) -> f64 {
        if f.is_vertical() {
            self.dz
        } else {
            self.dx
        }
    }

    fn vertical_facets(&self) -> Vec<Facet> {
        let mut out = Vec::with_capacity(self.nx * self.nz);
        for iz in 0..self.nz {
            for ix in 0..self.nx {
                let left = self.cell_index(ix, iz);
                let right = self.cell_index((ix + 1) % self.nx, iz);
                out.push(if left < right {
                    Facet { plus: (left, LocalFacet::Right), minus: Some((right, LocalFacet::Left)), normal: [1.0, 0.0] }
                } else {
                    Facet { plus: (right, LocalFacet::Left), minus: Some((left, LocalFacet::Right)), normal: [-1.0, 0.0] }
                });
            }
        }
        out
    }

    fn horizontal_facets(&self) -> Vec<Facet> {
        let top = if self.periodic_z { self.nz } else { self.nz - 1 };
        let mut out = Vec::with_capacity(self.nx * top);
        for iz in 0..top {
            for ix in 0..self.nx {
                let below = self.cell_index(ix, iz);
                let above = self.cell_index(ix, (iz + 1) % self.nz);
                out.push(if below < above {
                    Facet { plus: (below, LocalFacet::Top), minus: Some((above, LocalFacet::Bottom)), normal: [0.0, 1.0] }
                } else {
                    Facet { plus: (above, LocalFacet::Bottom), minus: Some((below, LocalFacet::Top)), normal: [0.0, -1.0] }
                });
            }
        }
        out
    }

    fn boundary_facets(&self) -> Vec<Facet> {
        if self.periodic_z {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(2 * self.nx);
        for ix in 0..self.nx {
            out.push(Facet { plus: (self.cell_index(ix, 0), LocalFacet::Bottom), minus: None, normal: [0.0, -1.0] });
        }
        for ix in 0..self.nx {
            out.push(Facet {
                plus: (self.cell_index(ix, self.nz - 1), LocalFacet::Top),
                minus: None,
                normal: [0.0, 1.0],
            });
        }
        out
    }

    /// Facet set of the requested orientation. Interior sets never contain
    /// boundary facets; `Boundary` is empty on a torus.
    pub fn facets(&self, orientation: Orientation) -> FacetSet {
        let facets = match orientation {
            Orientation::Vertical => self.vertical_facets(),
            Orientation::Horizontal => self.horizontal_facets(),
            Orientation::AllInterior => {
                let mut v = self.vertical_facets();
                v.extend(self.horizontal_facets());
                v
            }
            Orientation::Boundary => self.boundary_facets(),
        };
        FacetSet { orientation, facets }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_counts() {
        let m = Mesh::new(2, 2, 1.0, 1.0, true).unwrap();
        assert_eq!(m.n_cells(), 4);
        assert_eq!(m.facets(Orientation::Vertical).len(), 4);
        assert_eq!(m.facets(Orientation::Horizontal).len(), 4);
        assert!(m.facets(Orientation::Boundary).is_empty());
        for f in m.facets(Orientation::Vertical).facets {
            assert_eq!(f.normal[1], 0.0);
            assert_eq!(f.normal[0].abs(), 1.0);
        }
    }

    #[test]
    fn slab_counts() {
        let m = Mesh::new(2, 2, 1.0, 1.0, false).unwrap();
        assert_eq!(m.facets(Orientation::Horizontal).len(), 2);
        assert_eq!(m.facets(Orientation::Boundary).len(), 4);
        let m = Mesh::new(80, 16, 32000.0, 6400.0, false).unwrap();
        assert_eq!(m.n_cells(), 1280);
        assert_eq!(m.dx, 400.0);
        assert_eq!(m.dz, 400.0);
        assert_eq!(m.cell_geometry(0).unwrap().measure, 1.6e5);
        let all = m.facets(Orientation::AllInterior).len();
        assert_eq!(all, m.facets(Orientation::Vertical).len() + m.facets(Orientation::Horizontal).len());
    }

    #[test]
    fn straka_mesh_measure() {
        let m = Mesh::new(320, 64, 32000.0, 6400.0, false).unwrap();
        assert_eq!(m.cell_geometry(17).unwrap().measure, 1.0e4);
        assert_eq!(m.cell_geometry(17).unwrap().jacobian, [[100.0, 0.0], [0.0, 100.0]]);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(Mesh::new(1, 4, 1.0, 1.0, true).is_err());
        assert!(Mesh::new(4, 1, 1.0, 1.0, true).is_err());
        assert!(Mesh::new(4, 4, 0.0, 1.0, true).is_err());
        let m = Mesh::new(2, 2, 1.0, 1.0, true).unwrap();
        assert!(m.cell_geometry(4).is_err());
    }

    #[test]
    fn facet_sides_are_consistent() {
        for periodic_z in [true, false] {
            let m = Mesh::new(3, 4, 3.0, 2.0, periodic_z).unwrap();
            for f in m.facets(Orientation::AllInterior).facets {
                let (cp, lp) = f.plus;
                let (cm, lm) = f.minus.unwrap();
                assert!(cp < cm);
                assert_eq!(lp.outward_normal(), f.normal);
                let nm = lm.outward_normal();
                assert_eq!([-nm[0], -nm[1]], f.normal);
            }
        }
    }

    #[test]
    fn measures_sum_to_area() {
        let m = Mesh::new(7, 5, 3.5, 2.5, false).unwrap();
        let total: f64 = (0..m.n_cells()).map(|c| m.cell_geometry(c).unwrap().measure).sum();
        assert!((total - m.lx * m.lz).abs() <= 1e-12 * m.lx * m.lz);
    }
}
