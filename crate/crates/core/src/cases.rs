//! Initial states, constants and backgrounds for the test problems.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::discretization::{Discretization, Model, Slot};
use crate::error::{Error, Result};
use crate::fem::Field;
use crate::mesh::Mesh;
use crate::physics::{ModelConstants, State};
use crate::timestepping::{Background, RunConfig, SchemeKind};

/// A ready-to-run problem.
#[derive(Clone)]
pub struct CaseSetup {
    pub name: String,
    pub disc: Arc<Discretization>,
    pub state: State,
    pub constants: ModelConstants,
    pub background: Background,
    /// Recommended run parameters.
    pub config: RunConfig,
}

impl std::fmt::Debug for CaseSetup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CaseSetup")
            .field("name", &self.name)
            .field("mesh", &self.disc.mesh)
            .field("degree", &self.disc.degree)
            .field("config", &self.config)
            .finish()
    }
}

fn cells(extent: f64, resolution: f64) -> Result<usize> {
    if !(resolution > 0.0) {
        return Err(Error::InvalidArgument(format!("resolution {resolution} must be positive")));
    }
    let n = (extent / resolution).round();
    if n < 2.0 || ((n * resolution - extent) / extent).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("resolution {resolution} m does not divide {extent} m")));
    }
    Ok(n as usize)
}

/// Analytic Exner pressure of an isentropic atmosphere, 1 − gz/(c_pθ₀).
pub fn isentropic_exner(c: &ModelConstants, theta0: f64, z: f64) -> f64 {
    1.0 - c.g * z / (c.c_p * theta0)
}

/// Density of the isentropic atmosphere from the ideal gas law.
pub fn isentropic_density(c: &ModelConstants, theta0: f64, z: f64) -> f64 {
    c.p0 / (c.r * theta0) * isentropic_exner(c, theta0, z).powf(1.0 / c.exner_exponent())
}

/// Hydrostatic state at rest with constant θ₀. The density is the analytic
/// profile corrected cell by cell so that the projected dH/dρ is the constant
/// c_pθ₀, which makes the discrete momentum residual vanish at rest.
pub fn hydrostatic_background(disc: &Discretization, theta0: f64, c: &ModelConstants) -> Result<State> {
    if !(theta0 > 0.0) {
        return Err(Error::NonPositive(format!("theta0 = {theta0}")));
    }
    if isentropic_exner(c, theta0, disc.mesh.lz) <= 0.0 {
        return Err(Error::InvalidArgument(format!("domain too tall for theta0 = {theta0}")));
    }
    let mut rho = Field::interpolate_scalar(&disc.vrho, |p| isentropic_density(c, theta0, p[1]));
    let table = &disc.tables(Slot::Rho).volume;
    let nl = disc.vrho.n_local();
    let nq = disc.nq();
    let e = c.exner_exponent();
    let target = c.c_p * theta0;
    for cell in 0..disc.mesh.n_cells() {
        let dofs = disc.vrho.cell_dofs(cell).to_vec();
        for _ in 0..50 {
            let mut f = DVector::<f64>::zeros(nl);
            let mut jac = DMatrix::<f64>::zeros(nl, nl);
            for q in 0..nq {
                let r: f64 = (0..nl).map(|l| rho.coeffs[dofs[l]] * table.get(l, q).val[0]).sum();
                let pi = c.exner(r, theta0)?;
                let z = disc.qpoint(cell, q)[1];
                let w = disc.qweight(q);
                let res = c.g * z + target * pi - target;
                let dres = target * e * pi / r;
                for i in 0..nl {
                    let pi_ = table.get(i, q).val[0];
                    f[i] += w * res * pi_;
                    for j in 0..nl {
                        jac[(i, j)] += w * dres * table.get(j, q).val[0] * pi_;
                    }
                }
            }
            let delta = jac.lu().solve(&(-&f)).ok_or(Error::Singular { pivot: cell })?;
            for l in 0..nl {
                rho.coeffs[dofs[l]] += delta[l];
            }
            if delta.amax() <= 1e-15 * rho.coeffs[dofs[0]].abs() {
                break;
            }
        }
    }
    let theta = Field::interpolate_scalar(&disc.vtheta, |_| theta0);
    Ok(State { model: Model::Euler, u: Field::zeros(&disc.vu), rho, theta })
}

/// Cold bubble in a 32 km × 6.4 km slab, perturbation converted from
/// temperature to θ at the unperturbed Exner pressure.
pub fn straka_falling_bubble(resolution: f64, degree: usize) -> Result<CaseSetup> {
    let (lx, lz, theta0) = (32_000.0, 6_400.0, 300.0);
    let mesh = Mesh::new(cells(lx, resolution)?, cells(lz, resolution)?, lx, lz, false)?;
    let disc = Arc::new(Discretization::new(&mesh, degree, Model::Euler)?);
    let c = ModelConstants::euler();
    let bg = hydrostatic_background(&disc, theta0, &c)?;
    let cc = c.clone();
    let theta = Field::interpolate_scalar(&disc.vtheta, move |p| {
        theta0 + straka_delta_t(p) / isentropic_exner(&cc, theta0, p[1])
    });
    let dt = resolution / 200.0;
    let config = RunConfig::new(Model::Euler, SchemeKind::EcSupg, dt, (900.0 / dt).round() as usize, 32);
    Ok(CaseSetup {
        name: "straka".into(),
        background: Background { rho: bg.rho.clone(), theta: theta0 },
        state: State { theta, ..bg },
        disc,
        constants: c,
        config,
    })
}

/// ΔT = −7.5(1 + cos πr) for r < 1, centred at (16, 3) km with radii (4, 2) km.
pub fn straka_delta_t(p: [f64; 2]) -> f64 {
    let r = (((p[0] - 16_000.0) / 4_000.0).powi(2) + ((p[1] - 3_000.0) / 2_000.0).powi(2)).sqrt();
    if r < 1.0 {
        -7.5 * (1.0 + (PI * r).cos())
    } else {
        0.0
    }
}

/// Warm bubble in a 10 km square with Δθ = 2cos²(πr/2).
pub fn rising_bubble(resolution: f64, degree: usize) -> Result<CaseSetup> {
    let (l, theta0) = (10_000.0, 300.0);
    let n = cells(l, resolution)?;
    let mesh = Mesh::new(n, n, l, l, false)?;
    let disc = Arc::new(Discretization::new(&mesh, degree, Model::Euler)?);
    let c = ModelConstants::euler();
    let bg = hydrostatic_background(&disc, theta0, &c)?;
    let theta = Field::interpolate_scalar(&disc.vtheta, |p| theta0 + rising_delta_theta(p));
    let dt = resolution / 100.0;
    let config = RunConfig::new(Model::Euler, SchemeKind::EcFullUpwindApprox, dt, (1000.0 / dt).round() as usize, 4);
    Ok(CaseSetup {
        name: "rising_bubble".into(),
        background: Background { rho: bg.rho.clone(), theta: theta0 },
        state: State { theta, ..bg },
        disc,
        constants: c,
        config,
    })
}

/// Δθ = 2cos²(πr/2) for r < 1, centred at (5, 2) km with radius 2 km.
pub fn rising_delta_theta(p: [f64; 2]) -> f64 {
    let r = (((p[0] - 5_000.0) / 2_000.0).powi(2) + ((p[1] - 2_000.0) / 2_000.0).powi(2)).sqrt();
    if r < 1.0 {
        2.0 * (PI * r / 2.0).cos().powi(2)
    } else {
        0.0
    }
}

/// Parameters of the doubly periodic thermal shallow water jet.
#[derive(Debug, Clone, PartialEq)]
pub struct SweParams {
    pub length: f64,
    pub cells: usize,
    pub degree: usize,
    pub g: f64,
    pub f0: f64,
    pub h0: f64,
    pub u0: f64,
    pub eps: f64,
    /// Height of a compact cos² bump in the topography (0 disables it).
    pub bump_height: f64,
    pub bump_radius: f64,
    pub dt: f64,
}

impl Default for SweParams {
    fn default() -> Self {
        SweParams {
            length: 5.0e6,
            cells: 32,
            degree: 2,
            g: 9.80616,
            f0: 1.0e-4,
            h0: 5960.0,
            u0: 20.0,
            eps: 0.05,
            bump_height: 0.0,
            bump_radius: 5.0e5,
            dt: 600.0,
        }
    }
}

/// Depth profile in geostrophic balance with u = (u₀ sin ky, 0) and
/// θ = g(1 + ε(H₀/ρ)²). The balance f u + θ∂_yρ + (ρ/2)∂_yθ = 0 reduces to
/// g∂_yρ = −f u for this θ, so ε drops out of the depth.
pub fn balanced_depth(p: &SweParams, y: f64) -> f64 {
    let k = 2.0 * PI / p.length;
    p.h0 + p.f0 * p.u0 / (p.g * k) * (k * y).cos()
}

/// Zonal jet in exact continuous geostrophic balance on a periodic square.
/// The second mesh direction plays the role of y.
pub fn planar_swe_balanced(p: &SweParams) -> Result<CaseSetup> {
    if p.f0 == 0.0 && p.u0 != 0.0 {
        return Err(Error::InvalidArgument("a balanced jet needs f0 != 0".into()));
    }
    let min_depth = p.h0 - (p.f0 * p.u0 * p.length / (2.0 * PI * p.g)).abs();
    if !(min_depth > 0.0) {
        return Err(Error::InvalidArgument("jet too strong for a positive balanced depth".into()));
    }
    let mesh = Mesh::new(p.cells, p.cells, p.length, p.length, true)?;
    let disc = Arc::new(Discretization::new(&mesh, p.degree, Model::ThermalSwe)?);
    let mut c = ModelConstants::thermal_swe(p.g, p.f0);
    if p.bump_height != 0.0 {
        let (h, r0, l) = (p.bump_height, p.bump_radius, p.length);
        c.topography = Some(Field::interpolate_scalar(&disc.vtheta, move |x| {
            let r = ((x[0] - 0.5 * l).powi(2) + (x[1] - 0.5 * l).powi(2)).sqrt() / r0;
            if r < 1.0 {
                h * (PI * r / 2.0).cos().powi(2)
            } else {
                0.0
            }
        }));
    }
    let k = 2.0 * PI / p.length;
    let u = Field::interpolate(&disc.vu, |x| [p.u0 * (k * x[1]).sin(), 0.0]);
    let rho = Field::interpolate_scalar(&disc.vrho, |x| balanced_depth(p, x[1]));
    let theta = Field::interpolate_scalar(&disc.vtheta, |x| p.g * (1.0 + p.eps * (p.h0 / balanced_depth(p, x[1])).powi(2)));
    let config = RunConfig::new(Model::ThermalSwe, SchemeKind::EcSupg, p.dt, 200, 4);
    Ok(CaseSetup {
        name: "planar_swe".into(),
        background: Background { rho: Field::interpolate_scalar(&disc.vrho, |_| p.h0), theta: p.g },
        state: State { model: Model::ThermalSwe, u, rho, theta },
        disc,
        constants: c,
        config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{diagnostic_vorticity, dot, perp};
    use crate::physics::variations;
    use crate::timestepping::{residual, StepInputs};

    #[test]
    fn exner_profile() {
        let c = ModelConstants::euler();
        assert_eq!(isentropic_exner(&c, 300.0, 0.0), 1.0);
        let top = 1.0 - 9.810616 * 6400.0 / (1003.5 * 300.0);
        assert!((isentropic_exner(&c, 300.0, 6400.0) - top).abs() < 1e-15);
        assert!((top - 0.79144).abs() < 1e-5);
        // Ideal gas law at the surface.
        let rho = isentropic_density(&c, 300.0, 0.0);
        assert!((c.exner(rho, 300.0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn perturbation_shapes() {
        assert_eq!(straka_delta_t([16_000.0, 3_000.0]), -15.0);
        assert_eq!(straka_delta_t([20_000.0, 3_000.0]), 0.0);
        assert!((rising_delta_theta([5_000.0, 2_000.0]) - 2.0).abs() < 1e-15);
        assert!(rising_delta_theta([5_000.0, 4_000.0]).abs() < 1e-15);
    }

    #[test]
    fn bad_resolution() {
        assert!(straka_falling_bubble(300.0, 2).is_err());
        assert!(straka_falling_bubble(-1.0, 2).is_err());
    }

    #[test]
    fn rest_state_residual_vanishes() {
        let mesh = Mesh::new(4, 4, 4000.0, 6400.0, false).unwrap();
        let disc = Discretization::new(&mesh, 2, Model::Euler).unwrap();
        let c = ModelConstants::euler();
        let z = hydrostatic_background(&disc, 300.0, &c).unwrap();
        let v = variations(&disc, &z, &c).unwrap();
        let spread = v.hrho.coeffs.iter().map(|x| (x - c.c_p * 300.0).abs()).fold(0.0, f64::max);
        assert!(spread < 1e-9, "{spread}");
        let q = diagnostic_vorticity(&disc, &z.u, &z.rho, 0.0).unwrap();
        // The non-conserving bracket integrates (1/ρ)dH/dθ by parts under
        // inexact quadrature, so it only balances to quadrature accuracy.
        for (scheme, tol) in [(SchemeKind::EcSupg, 1e-12), (SchemeKind::NecBracket, 1e-8), (SchemeKind::EcFullUpwindApprox, 1e-12)] {
            let cfg = RunConfig::new(Model::Euler, scheme, 2.0, 1, 1);
            let inp = StepInputs { disc: &disc, c: &c, cfg: &cfg, zn: &z, qn: Some(&q) };
            let r = residual(&inp, &z).unwrap();
            // Rows scale like Δt·c_pθ₀·(facet length).
            let scale = cfg.dt * c.c_p * 300.0 * mesh.dx;
            assert!(r.max_abs() / scale < tol, "{scheme:?}: {}", r.max_abs());
        }
    }

    #[test]
    fn swe_profile_is_balanced() {
        let p = SweParams::default();
        let h = 1.0;
        for y in [0.1e6, 1.3e6, 3.7e6] {
            let d = |y: f64| balanced_depth(&p, y);
            let th = |y: f64| p.g * (1.0 + p.eps * (p.h0 / d(y)).powi(2));
            let dy = |f: &dyn Fn(f64) -> f64| (f(y + h) - f(y - h)) / (2.0 * h);
            let u = p.u0 * (2.0 * PI * y / p.length).sin();
            // f u⊥ + ∇(θρ) − (ρ/2)∇θ = 0 in the y direction.
            let bal = p.f0 * dot(perp([u, 0.0]), [0.0, 1.0]) + dy(&|y| th(y) * d(y)) - 0.5 * d(y) * dy(&th);
            assert!(bal.abs() < 1e-7, "{bal}");
        }
        assert!(planar_swe_balanced(&SweParams { u0: 1e4, ..p }).is_err());
    }
}
