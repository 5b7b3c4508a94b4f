//! Shared assembly context: the compatible space quadruple, quadrature,
//! basis tables, mass-matrix factorizations and generic assembly loops.
//!
//! Cell integrals use a tensor Gauss rule with k+2 points per direction;
//! facet integrals use the matching one-dimensional rule. Every integral in
//! the solver goes through the same rules, so discrete energy identities hold
//! at the quadrature level.

use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::fem::{eval_all, eval_local, gauss_legendre, tabulate_points, BasisTable, Field, FiniteElementSpace, Shape, SpaceFamily};
use crate::linalg::{CholeskySolver, Factorization, LuSolver, SparseMatrix, TripletBuilder};
use crate::mesh::{Facet, FacetSet, LocalFacet, Mesh, Orientation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    Euler,
    ThermalSwe,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Euler => "euler",
            Model::ThermalSwe => "thermal_swe",
        }
    }
}

/// Which directions the SUPG term differentiates along.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupgMode {
    /// S(u; γ) = u·∇γ, for continuous thermal spaces.
    Full,
    /// S(u; γ) = u_z ∂_z γ, for the Charney–Phillips space.
    Vertical,
}

pub struct Tables {
    pub volume: BasisTable,
    pub facet: [BasisTable; 4],
}

pub struct Discretization {
    pub mesh: Mesh,
    pub degree: usize,
    pub model: Model,
    pub vq: Arc<FiniteElementSpace>,
    pub vu: Arc<FiniteElementSpace>,
    pub vrho: Arc<FiniteElementSpace>,
    pub vtheta: Arc<FiniteElementSpace>,
    /// Cell rule on [0,1]²; weights sum to 1.
    pub qpoints: Vec<[f64; 2]>,
    pub qweights: Vec<f64>,
    /// Facet rule on [0,1].
    pub fpoints: Vec<f64>,
    pub fweights: Vec<f64>,
    tables: Vec<Tables>,
    pub vertical: FacetSet,
    pub horizontal: FacetSet,
    pub interior: FacetSet,
    pub boundary: FacetSet,
    mass: Vec<LuSolver>,
    mass_mat: Vec<SparseMatrix>,
    pub(crate) weighted_q: Mutex<Option<CholeskySolver>>,
    pub(crate) weighted_u: Mutex<Option<CholeskySolver>>,
    pub(crate) supg: Mutex<Option<LuSolver>>,
}

/// Index of a space inside the quadruple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Q = 0,
    U = 1,
    Rho = 2,
    Theta = 3,
}

impl Discretization {
    pub fn new(mesh: &Mesh, degree: usize, model: Model) -> Result<Discretization> {
        if degree == 0 {
            return Err(Error::UnsupportedDegree(0));
        }
        let vq = Arc::new(FiniteElementSpace::new(mesh, SpaceFamily::Cg(degree))?);
        let vu = Arc::new(FiniteElementSpace::new(mesh, SpaceFamily::Rt(degree))?);
        let vrho = Arc::new(FiniteElementSpace::new(mesh, SpaceFamily::Dg(degree - 1))?);
        let vtheta = match model {
            Model::Euler => Arc::new(FiniteElementSpace::new(mesh, SpaceFamily::Cp(degree))?),
            Model::ThermalSwe => vq.clone(),
        };
        let rule = gauss_legendre(degree + 2, 2)?.to_unit();
        let frule = gauss_legendre(degree + 2, 1)?.to_unit();
        let fpoints: Vec<f64> = frule.points.iter().map(|p| p[0]).collect();
        let tables = [&vq, &vu, &vrho, &vtheta]
            .iter()
            .map(|s| Tables {
                volume: tabulate_points(s, &rule.points),
                facet: LocalFacet::ALL.map(|f| {
                    let pts: Vec<[f64; 2]> = fpoints.iter().map(|&t| f.point(t)).collect();
                    tabulate_points(s, &pts)
                }),
            })
            .collect();
        let mut d = Discretization {
            mesh: *mesh,
            degree,
            model,
            vq,
            vu,
            vrho,
            vtheta,
            qpoints: rule.points,
            qweights: rule.weights,
            fpoints,
            fweights: frule.weights,
            tables,
            vertical: mesh.facets(Orientation::Vertical),
            horizontal: mesh.facets(Orientation::Horizontal),
            interior: mesh.facets(Orientation::AllInterior),
            boundary: mesh.facets(Orientation::Boundary),
            mass: Vec::new(),
            mass_mat: Vec::new(),
            weighted_q: Mutex::new(None),
            weighted_u: Mutex::new(None),
            supg: Mutex::new(None),
        };
        for slot in [Slot::Q, Slot::U, Slot::Rho, Slot::Theta] {
            let mut m = d.mass_matrix(slot, None);
            if slot == Slot::U {
                m = m.constrain_symmetric(d.vu.constrained());
            }
            d.mass.push(LuSolver::new(&m)?);
            d.mass_mat.push(m);
        }
        Ok(d)
    }

    pub fn space(&self, slot: Slot) -> &Arc<FiniteElementSpace> {
        match slot {
            Slot::Q => &self.vq,
            Slot::U => &self.vu,
            Slot::Rho => &self.vrho,
            Slot::Theta => &self.vtheta,
        }
    }

    pub fn tables(&self, slot: Slot) -> &Tables {
        &self.tables[slot as usize]
    }

    pub fn supg_mode(&self) -> SupgMode {
        match self.vtheta.family {
            SpaceFamily::Cp(_) => SupgMode::Vertical,
            _ => SupgMode::Full,
        }
    }

    pub fn nq(&self) -> usize {
        self.qweights.len()
    }

    pub fn nfq(&self) -> usize {
        self.fweights.len()
    }

    /// Physical coordinates of cell quadrature point `q`.
    pub fn qpoint(&self, cell: usize, q: usize) -> [f64; 2] {
        self.mesh.map_point(cell, self.qpoints[q])
    }

    /// Physical weight of cell quadrature point `q`.
    pub fn qweight(&self, q: usize) -> f64 {
        self.qweights[q] * self.mesh.cell_measure()
    }

    /// Constant mass matrix of a space (slip rows/columns replaced by the
    /// identity for the velocity space).
    pub fn mass(&self, slot: Slot) -> &SparseMatrix {
        &self.mass_mat[slot as usize]
    }

    pub fn mass_solve(&self, slot: Slot, b: &[f64]) -> Result<Vec<f64>> {
        let mut b = b.to_vec();
        if slot == Slot::U {
            zero_constrained(&self.vu, &mut b);
        }
        self.mass[slot as usize].solve(&b)
    }

    /// Values of a field at all cell quadrature points, cell-major.
    pub fn eval(&self, f: &Field, slot: Slot) -> Vec<Shape> {
        let t = &self.tables(slot).volume;
        let mut out = Vec::with_capacity(self.mesh.n_cells() * self.nq());
        let (mut local, mut buf) = (Vec::new(), Vec::new());
        for cell in 0..self.mesh.n_cells() {
            f.gather(cell, &mut local);
            eval_all(t, &local, &mut buf);
            out.extend_from_slice(&buf);
        }
        out
    }

    /// Trace of a field on one facet of one cell, at every facet point.
    pub fn eval_facet(&self, f: &Field, slot: Slot, cell: usize, lf: LocalFacet) -> Vec<Shape> {
        let t = &self.tables(slot).facet[lf.index()];
        let mut local = Vec::new();
        f.gather(cell, &mut local);
        (0..t.n_points).map(|q| eval_local(t, &local, q)).collect()
    }

    /// b_i = Σ_K Σ_q w_q (coef(K,q) : shape_i), with `:` the full
    /// value-and-gradient contraction.
    pub fn load(&self, slot: Slot, mut coef: impl FnMut(usize, usize) -> Shape) -> Vec<f64> {
        let space = self.space(slot);
        let t = &self.tables(slot).volume;
        let mut b = vec![0.0; space.n_dofs()];
        let nq = self.nq();
        let mut cs = vec![Shape::default(); nq];
        for cell in 0..self.mesh.n_cells() {
            for (q, c) in cs.iter_mut().enumerate() {
                *c = coef(cell, q);
            }
            for (l, &g) in space.cell_dofs(cell).iter().enumerate() {
                let mut acc = 0.0;
                for (q, c) in cs.iter().enumerate() {
                    acc += self.qweight(q) * contract(c, t.get(l, q));
                }
                b[g] += acc;
            }
        }
        b
    }

    /// Facet load: `coef(facet, plus, minus)` fills, per facet point, the
    /// coefficients contracted with the plus-side and minus-side test traces.
    pub fn facet_load(
        &self,
        slot: Slot,
        facets: &FacetSet,
        mut coef: impl FnMut(&Facet, &mut [Shape], &mut [Shape]),
    ) -> Vec<f64> {
        let space = self.space(slot);
        let tabs = self.tables(slot);
        let mut b = vec![0.0; space.n_dofs()];
        let nf = self.nfq();
        let mut cp = vec![Shape::default(); nf];
        let mut cm = vec![Shape::default(); nf];
        for f in &facets.facets {
            let len = self.mesh.facet_measure(f.plus.1);
            cp.iter_mut().chain(cm.iter_mut()).for_each(|c| *c = Shape::default());
            coef(f, &mut cp, &mut cm);
            let sides = [(Some(f.plus), &cp), (f.minus, &cm)];
            for (side, cs) in sides {
                let Some((cell, lf)) = side else { continue };
                let t = &tabs.facet[lf.index()];
                for (l, &g) in space.cell_dofs(cell).iter().enumerate() {
                    let mut acc = 0.0;
                    for (q, c) in cs.iter().enumerate() {
                        acc += self.fweights[q] * len * contract(c, t.get(l, q));
                    }
                    b[g] += acc;
                }
            }
        }
        b
    }

    /// A_ij = Σ_K Σ_q w_q form(K, q, trial_j, test_i).
    pub fn bilinear(
        &self,
        trial: Slot,
        test: Slot,
        mut form: impl FnMut(usize, usize, &Shape, &Shape) -> f64,
    ) -> SparseMatrix {
        let (st, sv) = (self.space(trial), self.space(test));
        let (tt, tv) = (&self.tables(trial).volume, &self.tables(test).volume);
        let (nt, nv) = (st.n_local(), sv.n_local());
        let mut b = TripletBuilder::with_capacity(sv.n_dofs(), st.n_dofs(), self.mesh.n_cells() * nt * nv);
        let mut local = vec![0.0; nt * nv];
        for cell in 0..self.mesh.n_cells() {
            local.iter_mut().for_each(|v| *v = 0.0);
            for q in 0..self.nq() {
                let w = self.qweight(q);
                for i in 0..nv {
                    let si = tv.get(i, q);
                    for j in 0..nt {
                        local[i * nt + j] += w * form(cell, q, tt.get(j, q), si);
                    }
                }
            }
            let (dt, dv) = (st.cell_dofs(cell), sv.cell_dofs(cell));
            for i in 0..nv {
                for j in 0..nt {
                    b.push(dv[i], dt[j], local[i * nt + j]);
                }
            }
        }
        b.finalize()
    }

    /// Mass matrix, optionally weighted by values at cell quadrature points.
    pub fn mass_matrix(&self, slot: Slot, weight: Option<&[f64]>) -> SparseMatrix {
        let nq = self.nq();
        self.bilinear(slot, slot, |cell, q, a, b| {
            let w = weight.map_or(1.0, |w| w[cell * nq + q]);
            w * (a.val[0] * b.val[0] + a.val[1] * b.val[1])
        })
    }

    /// Solve with a matrix that is refactored in place inside `cache`.
    pub(crate) fn cached_solve<F: Factorization>(cache: &Mutex<Option<F>>, a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        match guard.as_mut() {
            Some(s) => s.refactor(a)?,
            None => *guard = Some(F::factor(a)?),
        }
        guard.as_ref().expect("factorization present").solve(b)
    }

    /// ∫ f over the domain, from values at cell quadrature points.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let nq = self.nq();
        let mut total = 0.0;
        for cell in 0..self.mesh.n_cells() {
            for q in 0..nq {
                total += self.qweight(q) * values[cell * nq + q];
            }
        }
        total
    }
}

/// Full contraction of a coefficient against a basis shape.
#[inline]
pub fn contract(c: &Shape, s: &Shape) -> f64 {
    c.val[0] * s.val[0]
        + c.val[1] * s.val[1]
        + c.grad[0][0] * s.grad[0][0]
        + c.grad[0][1] * s.grad[0][1]
        + c.grad[1][0] * s.grad[1][0]
        + c.grad[1][1] * s.grad[1][1]
}

/// Coefficient testing a scalar value: ⟨v, φ⟩.
#[inline]
pub fn scalar_coef(v: f64) -> Shape {
    Shape { val: [v, 0.0], grad: [[0.0; 2]; 2] }
}

/// Coefficient testing a vector value and a divergence: ⟨a, w⟩ + ⟨d, ∇·w⟩.
#[inline]
pub fn vector_coef(a: [f64; 2], d: f64) -> Shape {
    Shape { val: a, grad: [[d, 0.0], [0.0, d]] }
}

pub fn zero_constrained(space: &FiniteElementSpace, v: &mut [f64]) {
    for (x, &c) in v.iter_mut().zip(space.constrained()) {
        if c {
            *x = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_quadruple() {
        let m = Mesh::new(4, 3, 4.0, 3.0, false).unwrap();
        let d = Discretization::new(&m, 2, Model::Euler).unwrap();
        assert_eq!(d.vtheta.family, SpaceFamily::Cp(2));
        assert_eq!(d.vrho.family, SpaceFamily::Dg(1));
        assert_eq!(d.supg_mode(), SupgMode::Vertical);
        let m = Mesh::new(4, 4, 1.0, 1.0, true).unwrap();
        let d = Discretization::new(&m, 2, Model::ThermalSwe).unwrap();
        assert!(Arc::ptr_eq(&d.vq, &d.vtheta));
        assert_eq!(d.supg_mode(), SupgMode::Full);
    }

    #[test]
    fn cg1_mass_row_sums_are_patch_integrals() {
        let m = Mesh::new(3, 2, 3.0, 1.0, false).unwrap();
        let d = Discretization::new(&m, 1, Model::ThermalSwe).unwrap();
        let mm = d.mass(Slot::Q);
        let ones = vec![1.0; mm.ncols];
        let rows = mm.matvec(&ones);
        let h = m.dx * m.dz;
        for (g, (p, _)) in d.vq.dof_nodes().iter().enumerate() {
            let on_edge = p[1] == 0.0 || p[1] == 1.0;
            let expect = if on_edge { h / 2.0 } else { h };
            assert!((rows[g] - expect).abs() < 1e-14, "dof {g}: {} vs {expect}", rows[g]);
        }
    }

    #[test]
    fn mass_solve_reproduces_in_space_function() {
        let m = Mesh::new(3, 3, 2.0, 1.0, true).unwrap();
        let d = Discretization::new(&m, 2, Model::ThermalSwe).unwrap();
        let f = Field::interpolate_scalar(&d.vq, |p| (std::f64::consts::PI * p[0]).sin() + p[1] * p[1]);
        let vals = d.eval(&f, Slot::Q);
        let nq = d.nq();
        let b = d.load(Slot::Q, |c, q| scalar_coef(vals[c * nq + q].val[0]));
        let x = d.mass_solve(Slot::Q, &b).unwrap();
        for (a, e) in x.iter().zip(&f.coeffs) {
            assert!((a - e).abs() < 1e-12);
        }
    }
}
