//! Approximate Jacobian for the Picard iteration, linearized about a state
//! at rest with a prescribed density profile and constant θ.

use crate::discretization::{Discretization, Model, Slot};
use crate::error::Result;
use crate::fem::Field;
use crate::linalg::{BlockSolver, BlockSystem, SparseMatrix};
use crate::operators::{dot, perp};
use crate::physics::ModelConstants;

use super::{Residual, SchemeKind};

/// Linearization state: ρ̄̄ in the density space and a constant θ̄̄.
#[derive(Debug, Clone)]
pub struct Background {
    pub rho: Field,
    pub theta: f64,
}

/// Factorized (δu, δρ) block together with the u–θ coupling.
pub struct PicardJacobian {
    pub block: BlockSolver,
    pub a_utheta: SparseMatrix,
}

fn scale_rows(m: &mut SparseMatrix, d: &[f64]) {
    for i in 0..m.nrows {
        for k in m.row_ptr[i]..m.row_ptr[i + 1] {
            m.values[k] *= d[i];
        }
    }
}

fn scale_cols(m: &mut SparseMatrix, d: &[f64]) {
    for (v, &j) in m.values.iter_mut().zip(&m.col_idx) {
        *v *= d[j];
    }
}

/// Ratio of the ρ̄̄-weighted to the unweighted velocity mass diagonal. For
/// nodal velocity dofs this is the background density near each dof.
fn density_diagonal(disc: &Discretization, rho: &[f64]) -> Vec<f64> {
    let w = disc.mass_matrix(Slot::U, Some(rho));
    let m = disc.mass_matrix(Slot::U, None);
    let mask = disc.vu.constrained();
    (0..m.nrows).map(|i| if mask[i] { 1.0 } else { w.get(i, i) / m.get(i, i) }).collect()
}

pub fn build_picard_jacobian(
    disc: &Discretization,
    bg: &Background,
    dt: f64,
    c: &ModelConstants,
    scheme: SchemeKind,
    tol: f64,
) -> Result<PicardJacobian> {
    let nq = disc.nq();
    let h = 0.5 * dt;
    let mask = disc.vu.constrained();
    let rv: Vec<f64> = disc.eval(&bg.rho, Slot::Rho).iter().map(|s| s.val[0]).collect();
    let th = bg.theta;
    let topo = crate::physics::topography_values(disc, c);
    // (κ_ρ, κ_θ, ν) at each quadrature point.
    let coef: Vec<[f64; 3]> = rv
        .iter()
        .zip(&topo)
        .map(|(&r, &b)| match disc.model {
            Model::Euler => {
                let pi = c.exner_unchecked(r, th);
                let e = c.exner_exponent();
                [c.g + c.c_p * th * e * pi / r, c.c_p * pi * (e + 1.0), c.c_p * pi]
            }
            Model::ThermalSwe => [th, r + b, 0.5 * r + b],
        })
        .collect();
    let f0 = c.f0;
    let mut a_uu = disc
        .bilinear(Slot::U, Slot::U, |_, _, a, w| a.val[0] * w.val[0] + a.val[1] * w.val[1] + h * f0 * dot(perp(a.val), w.val))
        .constrain_symmetric(mask);
    let mut a_urho = disc.bilinear(Slot::Rho, Slot::U, |cell, q, p, w| -h * coef[cell * nq + q][0] * p.val[0] * w.div());
    let mut a_utheta = disc.bilinear(Slot::Theta, Slot::U, |cell, q, g, w| {
        let k = coef[cell * nq + q];
        -h * (k[1] * g.val[0] * w.div() + k[2] * dot(g.grad[0], w.val))
    });
    let d = density_diagonal(disc, &rv);
    let mut a_rhou = disc.bilinear(Slot::U, Slot::Rho, |_, _, w, p| h * w.div() * p.val[0]);
    let dcol: Vec<f64> = d.iter().zip(mask).map(|(&v, &m)| if m { 0.0 } else { v }).collect();
    scale_cols(&mut a_rhou, &dcol);
    let zero_rows: Vec<f64> = mask.iter().map(|&m| if m { 0.0 } else { 1.0 }).collect();
    scale_rows(&mut a_urho, &zero_rows);
    scale_rows(&mut a_utheta, &zero_rows);
    if scheme.density_weighted_momentum() {
        scale_rows(&mut a_uu, &d);
        scale_rows(&mut a_urho, &d);
        scale_rows(&mut a_utheta, &d);
    }
    let sys = BlockSystem::new(a_uu, a_urho, a_rhou, disc.mass(Slot::Rho).clone())?;
    Ok(PicardJacobian { block: sys.factorize(tol)?, a_utheta })
}

impl PicardJacobian {
    /// Increment (δu, δρ, δθ) solving J δ = −R.
    pub fn solve(&self, disc: &Discretization, r: &Residual) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let neg: Vec<f64> = r.theta.iter().map(|v| -v).collect();
        let dth = disc.mass_solve(Slot::Theta, &neg)?;
        let coupling = self.a_utheta.matvec(&dth);
        let ru: Vec<f64> = r.u.iter().zip(&coupling).map(|(a, b)| -a - b).collect();
        let rr: Vec<f64> = r.rho.iter().map(|v| -v).collect();
        let (du, drho) = self.block.solve(&ru, &rr)?;
        Ok((du, drho, dth))
    }
}
