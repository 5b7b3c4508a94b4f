use std::sync::Arc;

use super::space::{BasisTable, Component, FiniteElementSpace, Shape};
use crate::error::{Error, Result};

/// Coefficient vector over the global dofs of a space.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub space: Arc<FiniteElementSpace>,
    pub coeffs: Vec<f64>,
}

impl Field {
    pub fn zeros(space: &Arc<FiniteElementSpace>) -> Field {
        Field { space: space.clone(), coeffs: vec![0.0; space.n_dofs()] }
    }

    pub fn from_coeffs(space: &Arc<FiniteElementSpace>, coeffs: Vec<f64>) -> Result<Field> {
        if coeffs.len() != space.n_dofs() {
            return Err(Error::DimensionMismatch { expected: space.n_dofs(), got: coeffs.len() });
        }
        Ok(Field { space: space.clone(), coeffs })
    }

    /// Nodal interpolant. Scalar spaces read slot 0 of `f`; RT spaces read the
    /// component normal to each node's facet.
    pub fn interpolate(space: &Arc<FiniteElementSpace>, f: impl Fn([f64; 2]) -> [f64; 2]) -> Field {
        let coeffs = space
            .dof_nodes()
            .into_iter()
            .map(|(p, c)| {
                let v = f(p);
                match c {
                    Component::Scalar | Component::X => v[0],
                    Component::Z => v[1],
                }
            })
            .collect();
        let mut out = Field { space: space.clone(), coeffs };
        out.apply_constraints();
        out
    }

    pub fn interpolate_scalar(space: &Arc<FiniteElementSpace>, f: impl Fn([f64; 2]) -> f64) -> Field {
        Field::interpolate(space, |p| [f(p), 0.0])
    }

    /// Zero the slip-constrained dofs.
    pub fn apply_constraints(&mut self) {
        for (c, &k) in self.coeffs.iter_mut().zip(self.space.constrained()) {
            if k {
                *c = 0.0;
            }
        }
    }

    pub fn same_space(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.space, &other.space) || *self.space == *other.space
    }

    pub fn check_space(&self, other: &Field) -> Result<()> {
        if self.same_space(other) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch(format!("{} vs {}", self.space.family.name(), other.space.family.name())))
        }
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, other: &Field, b: f64) -> Field {
        debug_assert!(self.same_space(other));
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| a * x + b * y).collect();
        Field { space: self.space.clone(), coeffs }
    }

    pub fn midpoint(&self, other: &Field) -> Field {
        self.lin_comb(0.5, other, 0.5)
    }

    pub fn gather(&self, cell: usize, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.space.cell_dofs(cell).iter().map(|&g| self.coeffs[g]));
    }

    /// Values and gradients at reference points of one cell.
    pub fn evaluate(&self, cell: usize, ref_points: &[[f64; 2]]) -> Result<Vec<Shape>> {
        if cell >= self.space.mesh.n_cells() {
            return Err(Error::IndexOutOfRange { index: cell, limit: self.space.mesh.n_cells() });
        }
        let dofs = self.space.cell_dofs(cell);
        Ok(ref_points
            .iter()
            .map(|&p| {
                let mut acc = Shape::default();
                for (l, &g) in dofs.iter().enumerate() {
                    acc.add_scaled(&self.space.shape(l, p), self.coeffs[g]);
                }
                acc
            })
            .collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Shape {
    pub fn add_scaled(&mut self, s: &Shape, a: f64) {
        self.val[0] += a * s.val[0];
        self.val[1] += a * s.val[1];
        self.grad[0][0] += a * s.grad[0][0];
        self.grad[0][1] += a * s.grad[0][1];
        self.grad[1][0] += a * s.grad[1][0];
        self.grad[1][1] += a * s.grad[1][1];
    }
}

/// Evaluate local coefficients against a table at point `q`.
pub fn eval_local(table: &BasisTable, local: &[f64], q: usize) -> Shape {
    let mut acc = Shape::default();
    for (l, &c) in local.iter().enumerate() {
        if c != 0.0 {
            acc.add_scaled(table.get(l, q), c);
        }
    }
    acc
}

/// Evaluate at every point of a table.
pub fn eval_all(table: &BasisTable, local: &[f64], out: &mut Vec<Shape>) {
    out.clear();
    out.extend((0..table.n_points).map(|q| eval_local(table, local, q)));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::SpaceFamily;
    use crate::mesh::{Mesh, Orientation};

    fn space(m: &Mesh, f: SpaceFamily) -> Arc<FiniteElementSpace> {
        Arc::new(FiniteElementSpace::new(m, f).unwrap())
    }

    #[test]
    fn reproduces_polynomials() {
        let m = Mesh::new(2, 2, 1.0, 1.0, false).unwrap();
        let s = space(&m, SpaceFamily::Cg(2));
        let f = Field::interpolate_scalar(&s, |p| p[0] * (1.0 - p[0]) + p[1]);
        let cell = 0;
        let v = f.evaluate(cell, &[[0.74, 0.5]]).unwrap();
        let x = 0.37;
        assert!((v[0].val[0] - (x * (1.0 - x) + 0.25)).abs() < 1e-14);
        let cp = space(&m, SpaceFamily::Cp(2));
        let f = Field::interpolate_scalar(&cp, |_| 300.0);
        assert!(f.coeffs.iter().all(|&c| c == 300.0));
    }

    #[test]
    fn constant_rt_field_is_divergence_free() {
        let m = Mesh::new(3, 3, 1.0, 1.0, true).unwrap();
        let s = space(&m, SpaceFamily::Rt(2));
        let f = Field::interpolate(&s, |_| [1.0, 0.0]);
        for cell in 0..m.n_cells() {
            for v in f.evaluate(cell, &[[0.1, 0.7], [0.5, 0.5]]).unwrap() {
                assert!(v.div().abs() < 1e-13);
                assert!((v.val[0] - 1.0).abs() < 1e-14 && v.val[1].abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cg_continuous_across_facets() {
        let m = Mesh::new(3, 3, 2.0, 1.0, true).unwrap();
        let s = space(&m, SpaceFamily::Cg(2));
        let f = Field::interpolate_scalar(&s, |p| (p[0] * 3.1).sin() * (p[1] * 6.28).cos());
        for fc in m.facets(Orientation::AllInterior).facets {
            let (cp, lp) = fc.plus;
            let (cm, lm) = fc.minus.unwrap();
            for t in [0.2, 0.9] {
                let a = f.evaluate(cp, &[lp.point(t)]).unwrap()[0].val[0];
                let b = f.evaluate(cm, &[lm.point(t)]).unwrap()[0].val[0];
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn zero_field_and_bad_cell() {
        let m = Mesh::new(2, 2, 1.0, 1.0, true).unwrap();
        let f = Field::zeros(&space(&m, SpaceFamily::Dg(1)));
        assert!(f.evaluate(0, &[[0.3, 0.3]]).unwrap()[0].val[0] == 0.0);
        assert!(f.evaluate(4, &[[0.3, 0.3]]).is_err());
    }
}
