//! Model constants, Exner pressure, Hamiltonians and their variations.

use crate::discretization::{Discretization, Model, Slot};
use crate::operators::{l2_project, l2_project_vector};
use crate::error::{Error, Result};
use crate::fem::{gauss_legendre_1d, Field, Shape};

#[derive(Debug, Clone)]
pub struct ModelConstants {
    pub g: f64,
    pub c_p: f64,
    pub c_v: f64,
    pub r: f64,
    pub p0: f64,
    pub kappa: f64,
    pub f0: f64,
    /// Bottom topography in the thermal space (shallow water only).
    pub topography: Option<Field>,
}

impl ModelConstants {
    pub fn euler() -> ModelConstants {
        let (c_v, r) = (716.5, 287.0);
        let c_p = r + c_v;
        ModelConstants { g: 9.810616, c_p, c_v, r, p0: 1.0e5, kappa: r / c_p, f0: 0.0, topography: None }
    }

    pub fn thermal_swe(g: f64, f0: f64) -> ModelConstants {
        ModelConstants { g, f0, ..ModelConstants::euler() }
    }

    /// π = ((R/p₀)ρθ)^{κ/(1−κ)}.
    pub fn exner(&self, rho: f64, theta: f64) -> Result<f64> {
        let p = rho * theta;
        if !(p > 0.0) {
            return Err(Error::NonPositive(format!("rho*theta = {p}")));
        }
        Ok(self.exner_unchecked(rho, theta))
    }

    #[inline]
    pub fn exner_unchecked(&self, rho: f64, theta: f64) -> f64 {
        (self.r / self.p0 * rho * theta).powf(self.kappa / (1.0 - self.kappa))
    }

    /// Exponent κ/(1−κ) = R/c_v.
    pub fn exner_exponent(&self) -> f64 {
        self.kappa / (1.0 - self.kappa)
    }
}

/// Prognostic triple.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub model: Model,
    pub u: Field,
    pub rho: Field,
    pub theta: Field,
}

impl State {
    pub fn lin_comb(&self, a: f64, other: &State, b: f64) -> State {
        State {
            model: self.model,
            u: self.u.lin_comb(a, &other.u, b),
            rho: self.rho.lin_comb(a, &other.rho, b),
            theta: self.theta.lin_comb(a, &other.theta, b),
        }
    }

    pub fn midpoint(&self, other: &State) -> State {
        self.lin_comb(0.5, other, 0.5)
    }

    /// Concatenated coefficients (u, ρ, θ).
    pub fn flat(&self) -> Vec<f64> {
        let mut v = self.u.coeffs.clone();
        v.extend_from_slice(&self.rho.coeffs);
        v.extend_from_slice(&self.theta.coeffs);
        v
    }
}

/// Values of a state at every cell quadrature point.
pub(crate) struct PointValues {
    pub u: Vec<Shape>,
    pub rho: Vec<Shape>,
    pub theta: Vec<Shape>,
}

pub(crate) fn point_values(disc: &Discretization, z: &State) -> PointValues {
    PointValues { u: disc.eval(&z.u, Slot::U), rho: disc.eval(&z.rho, Slot::Rho), theta: disc.eval(&z.theta, Slot::Theta) }
}

/// Topography at quadrature points (zeros when absent).
pub(crate) fn topography_values(disc: &Discretization, c: &ModelConstants) -> Vec<f64> {
    match &c.topography {
        Some(b) => disc.eval(b, Slot::Theta).iter().map(|s| s.val[0]).collect(),
        None => vec![0.0; disc.mesh.n_cells() * disc.nq()],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubEnergies {
    pub kinetic: f64,
    pub internal: f64,
    pub potential: f64,
}

impl SubEnergies {
    pub fn total(&self) -> f64 {
        self.kinetic + self.internal + self.potential
    }
}

/// Pointwise (kinetic, internal, potential) energy densities.
#[inline]
fn densities(model: Model, c: &ModelConstants, u: [f64; 2], rho: f64, theta: f64, z: f64, b: f64) -> [f64; 3] {
    let k = 0.5 * rho * (u[0] * u[0] + u[1] * u[1]);
    match model {
        Model::Euler => [k, c.c_v * rho * theta * c.exner_unchecked(rho, theta), c.g * rho * z],
        Model::ThermalSwe => [k, rho * theta * (0.5 * rho + b), 0.0],
    }
}

pub fn sub_energies(disc: &Discretization, z: &State, c: &ModelConstants) -> SubEnergies {
    let pv = point_values(disc, z);
    let b = topography_values(disc, c);
    let nq = disc.nq();
    let mut acc = [0.0; 3];
    for cell in 0..disc.mesh.n_cells() {
        for q in 0..nq {
            let i = cell * nq + q;
            let x = disc.qpoint(cell, q);
            let e = densities(z.model, c, pv.u[i].val, pv.rho[i].val[0], pv.theta[i].val[0], x[1], b[i]);
            let w = disc.qweight(q);
            for k in 0..3 {
                acc[k] += w * e[k];
            }
        }
    }
    SubEnergies { kinetic: acc[0], internal: acc[1], potential: acc[2] }
}

pub fn total_energy(disc: &Discretization, z: &State, c: &ModelConstants) -> f64 {
    sub_energies(disc, z, c).total()
}

/// Variations of the Hamiltonian: dH/du ∈ V_u (slip-constrained), dH/dρ ∈ V_ρ,
/// and the pointwise T at cell quadrature points.
#[derive(Debug, Clone)]
pub struct Variations {
    pub hu: Field,
    pub hrho: Field,
    pub t: Vec<f64>,
}

/// Pointwise integrands (ρu, dH/dρ density, T).
#[inline]
fn variation_integrands(
    model: Model,
    c: &ModelConstants,
    u: [f64; 2],
    rho: f64,
    theta: f64,
    z: f64,
    b: f64,
) -> ([f64; 2], f64, f64) {
    let ke = 0.5 * (u[0] * u[0] + u[1] * u[1]);
    match model {
        Model::Euler => {
            let pi = c.exner_unchecked(rho, theta);
            ([rho * u[0], rho * u[1]], ke + c.g * z + c.c_p * theta * pi, c.c_p * rho * pi)
        }
        Model::ThermalSwe => ([rho * u[0], rho * u[1]], ke + theta * (rho + b), rho * (0.5 * rho + b)),
    }
}

/// Time-averaged variations ∫₀¹ δH(zₙ + s(z₁ − zₙ)) ds with an `n_quad`-point
/// Gauss rule in s. `n_quad = 1` with equal states gives the instantaneous
/// variations.
pub fn time_averaged_variations(
    disc: &Discretization,
    zn: &State,
    z1: &State,
    c: &ModelConstants,
    n_quad: usize,
) -> Result<Variations> {
    if n_quad == 0 || n_quad > 10 {
        return Err(Error::QuadratureOrder(n_quad));
    }
    let (gs, gw) = gauss_legendre_1d(n_quad);
    let s: Vec<(f64, f64)> = gs.iter().zip(&gw).map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect();
    let a = point_values(disc, zn);
    let bvals = point_values(disc, z1);
    let topo = topography_values(disc, c);
    let nq = disc.nq();
    let n = disc.mesh.n_cells() * nq;
    let mut m = vec![[0.0; 2]; n];
    let mut phi = vec![0.0; n];
    let mut t = vec![0.0; n];
    for cell in 0..disc.mesh.n_cells() {
        for q in 0..nq {
            let i = cell * nq + q;
            let zc = disc.qpoint(cell, q)[1];
            for &(sk, wk) in &s {
                let lerp = |x: f64, y: f64| x + sk * (y - x);
                let u = [lerp(a.u[i].val[0], bvals.u[i].val[0]), lerp(a.u[i].val[1], bvals.u[i].val[1])];
                let rho = lerp(a.rho[i].val[0], bvals.rho[i].val[0]);
                let th = lerp(a.theta[i].val[0], bvals.theta[i].val[0]);
                if disc.model == Model::Euler && !(rho * th > 0.0) {
                    return Err(Error::NonPositive(format!("rho*theta = {} in cell {cell}", rho * th)));
                }
                let (mm, p, tt) = variation_integrands(disc.model, c, u, rho, th, zc, topo[i]);
                m[i][0] += wk * mm[0];
                m[i][1] += wk * mm[1];
                phi[i] += wk * p;
                t[i] += wk * tt;
            }
        }
    }
    let hu = l2_project_vector(disc, &m)?;
    let hrho = l2_project(disc, Slot::Rho, &phi)?;
    Ok(Variations { hu, hrho, t })
}

pub fn variations(disc: &Discretization, z: &State, c: &ModelConstants) -> Result<Variations> {
    time_averaged_variations(disc, z, z, c, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;

    #[test]
    fn constants() {
        let c = ModelConstants::euler();
        assert_eq!(c.c_p, 1003.5);
        assert!((c.kappa - 0.2860).abs() < 1e-4);
    }

    #[test]
    fn exner_values() {
        let c = ModelConstants::euler();
        assert_eq!(c.exner(c.p0 / c.r, 1.0).unwrap(), 1.0);
        let rho = c.p0 / (c.r * 300.0);
        assert!((rho - 1.16144).abs() < 1e-5);
        assert!((c.exner(rho, 300.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(c.exner(-1.0, 300.0).is_err());
        let (rho, th, h) = (1.1, 290.0, 1e-6);
        let fd = (c.exner(rho + h, th).unwrap() - c.exner(rho - h, th).unwrap()) / (2.0 * h);
        let an = c.exner_exponent() * c.exner(rho, th).unwrap() / rho;
        assert!(((fd - an) / an).abs() < 1e-8);
        let a = 1.7;
        assert!((c.exner(a * rho, th / a).unwrap() - c.exner(rho, th).unwrap()).abs() < 1e-14);
    }

    fn swe_rest(h0: f64) -> (Discretization, State, ModelConstants) {
        let m = Mesh::new(3, 3, 3.0, 2.0, true).unwrap();
        let d = Discretization::new(&m, 2, Model::ThermalSwe).unwrap();
        let c = ModelConstants::thermal_swe(9.8, 0.0);
        let z = State {
            model: Model::ThermalSwe,
            u: Field::zeros(&d.vu),
            rho: Field::interpolate_scalar(&d.vrho, |_| h0),
            theta: Field::interpolate_scalar(&d.vtheta, |_| c.g),
        };
        (d, z, c)
    }

    #[test]
    fn swe_rest_energy() {
        let (d, z, c) = swe_rest(5.0);
        let e = sub_energies(&d, &z, &c);
        let exact = c.g * 25.0 * 6.0 / 2.0;
        assert!((e.total() - exact).abs() < 1e-12 * exact);
        assert_eq!(e.kinetic, 0.0);
        let v = variations(&d, &z, &c).unwrap();
        assert!(v.hu.max_abs() == 0.0);
        assert!(v.t.iter().all(|&t| (t - 12.5).abs() < 1e-12));
    }

    #[test]
    fn constant_density_momentum() {
        let (d, mut z, c) = swe_rest(2.0);
        z.u = Field::interpolate(&d.vu, |p| [p[1].sin(), (p[0] * 2.0).cos()]);
        let v = variations(&d, &z, &c).unwrap();
        for (a, b) in v.hu.coeffs.iter().zip(&z.u.coeffs) {
            assert!((a - 2.0 * b).abs() < 1e-12);
        }
    }
}
