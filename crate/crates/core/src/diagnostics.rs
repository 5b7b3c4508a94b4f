//! Energy series, DG semi-norms, error norms and structural checks.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretization::{Discretization, Model, Slot, SupgMode};
use crate::error::{Error, Result};
use crate::fem::{Field, Shape};
use crate::mesh::Mesh;
use crate::operators::{assemble_supg_mass, diagnostic_vorticity, l2_project, relative_vorticity};
use crate::physics::{sub_energies, total_energy, variations, ModelConstants, State};
use crate::timestepping::{bracket_action, BracketKind, Frozen};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub time: f64,
    pub energy: f64,
    pub kinetic: f64,
    pub internal: f64,
    pub potential: f64,
    pub rel_energy_err: f64,
    pub mass: f64,
    pub dg_rho: f64,
    pub dg_u: f64,
    pub theta_min: f64,
    pub theta_max: f64,
}

pub fn compute_record(
    disc: &Discretization,
    z: &State,
    c: &ModelConstants,
    step: usize,
    time: f64,
    e0: f64,
) -> Result<DiagnosticsRecord> {
    let e = sub_energies(disc, z, c);
    let energy = e.total();
    let rel = if e0 == 0.0 { 0.0 } else { (energy - e0) / e0 };
    let (theta_min, theta_max) = z.theta.coeffs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    Ok(DiagnosticsRecord {
        step,
        time,
        energy,
        kinetic: e.kinetic,
        internal: e.internal,
        potential: e.potential,
        rel_energy_err: rel,
        mass: total_mass(disc, &z.rho),
        dg_rho: dg_seminorm_rho(disc, &z.rho),
        dg_u: dg_seminorm_u(disc, &z.u)?,
        theta_min,
        theta_max,
    })
}

/// ∫ρ dx.
pub fn total_mass(disc: &Discretization, rho: &Field) -> f64 {
    let v: Vec<f64> = disc.eval(rho, Slot::Rho).iter().map(|s| s.val[0]).collect();
    disc.integrate(&v)
}

/// sqrt(Σ_K ∫|∇ρ|² + Σ_Γ (1/Δx_h)∫[[ρ]]²), with Δx_h the cell size across
/// the facet.
pub fn dg_seminorm_rho(disc: &Discretization, rho: &Field) -> f64 {
    let g: Vec<f64> = disc.eval(rho, Slot::Rho).iter().map(|s| s.grad[0][0].powi(2) + s.grad[0][1].powi(2)).collect();
    let mut total = disc.integrate(&g);
    let m = &disc.mesh;
    for f in &disc.interior.facets {
        let (pc, pl) = f.plus;
        let (mc, ml) = f.minus.expect("interior facet");
        let h = if pl.is_vertical() { m.dx } else { m.dz };
        let len = m.facet_measure(pl);
        let (a, b) = (disc.eval_facet(rho, Slot::Rho, pc, pl), disc.eval_facet(rho, Slot::Rho, mc, ml));
        for q in 0..a.len() {
            total += disc.fweights[q] * len * (a[q].val[0] - b[q].val[0]).powi(2) / h;
        }
    }
    total.sqrt()
}

/// sqrt(∫(∇·u)² + ω²) with ω the relative vorticity.
pub fn dg_seminorm_u(disc: &Discretization, u: &Field) -> Result<f64> {
    let w = relative_vorticity(disc, u)?;
    let uv = disc.eval(u, Slot::U);
    let wv = disc.eval(&w, Slot::Q);
    let v: Vec<f64> = uv.iter().zip(&wv).map(|(a, b)| a.div().powi(2) + b.val[0].powi(2)).collect();
    Ok(disc.integrate(&v).sqrt())
}

/// (E_t − E₀)/E₀ for an energy series.
pub fn relative_energy_error(series: &[f64]) -> Result<Vec<f64>> {
    let Some(&e0) = series.first() else { return Ok(Vec::new()) };
    if e0 == 0.0 {
        return Err(Error::InvalidArgument("zero reference energy".into()));
    }
    Ok(series.iter().map(|e| (e - e0) / e0).collect())
}

fn slot_of(disc: &Discretization, f: &Field) -> Result<Slot> {
    [Slot::U, Slot::Rho, Slot::Theta, Slot::Q]
        .into_iter()
        .find(|&s| **disc.space(s) == *f.space)
        .ok_or_else(|| Error::SpaceMismatch(format!("{} is not a space of this discretization", f.space.family.name())))
}

/// ‖a − b‖₂ by quadrature.
pub fn l2_error(disc: &Discretization, a: &Field, b: &Field) -> Result<f64> {
    a.check_space(b)?;
    let slot = slot_of(disc, a)?;
    let d = disc.eval(&a.lin_comb(1.0, b, -1.0), slot);
    let v: Vec<f64> = d.iter().map(|s| s.val[0] * s.val[0] + s.val[1] * s.val[1]).collect();
    Ok(disc.integrate(&v).sqrt())
}

/// A state with smooth random perturbations around positive ρ₀, θ₀, for
/// structural checks. Velocity and perturbation amplitudes are relative.
pub fn random_state(disc: &Discretization, rho0: f64, theta0: f64, seed: u64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rand_field = |slot: Slot, base: f64, amp: f64| {
        let sp = disc.space(slot);
        let mut f = Field::zeros(sp);
        f.coeffs.iter_mut().for_each(|c| *c = base + amp * rng.gen_range(-1.0..1.0));
        f.apply_constraints();
        f
    };
    let u = rand_field(Slot::U, 0.0, 10.0);
    let rho = rand_field(Slot::Rho, rho0, 0.1 * rho0);
    let theta = rand_field(Slot::Theta, theta0, 0.05 * theta0);
    State { model: disc.model, u, rho, theta }
}

fn unit(space: &std::sync::Arc<crate::fem::FiniteElementSpace>, j: Option<usize>) -> Field {
    let mut f = Field::zeros(space);
    if let Some(j) = j {
        f.coeffs[j] = 1.0;
    }
    f
}

/// Dense bracket matrix B(i, j) = {e_i, e_j} over the free (u, ρ, θ) dofs at
/// frozen coefficients taken from `state`.
pub fn bracket_matrix(disc: &Discretization, state: &State, c: &ModelConstants, kind: BracketKind, tau: f64) -> Result<DMatrix<f64>> {
    let q = diagnostic_vorticity(disc, &state.u, &state.rho, c.f0)?;
    let fr = Frozen { rho: &state.rho, theta: &state.theta, q: &q, ubar: &state.u };
    let (nu, nr, nt) = (disc.vu.n_dofs(), disc.vrho.n_dofs(), disc.vtheta.n_dofs());
    let free: Vec<usize> = (0..nu).filter(|&i| !disc.vu.constrained()[i]).chain(nu..nu + nr + nt).collect();
    let mtheta = disc.mass(Slot::Theta);
    let mut b = DMatrix::zeros(free.len(), free.len());
    for (col, &j) in free.iter().enumerate() {
        let hu = unit(&disc.vu, (j < nu).then_some(j));
        let hrho = unit(&disc.vrho, (nu..nu + nr).contains(&j).then(|| j - nu));
        let th = unit(&disc.vtheta, (j >= nu + nr).then(|| j - nu - nr));
        let load = mtheta.matvec(&th.coeffs);
        let act = bracket_action(disc, kind, tau, &fr, &hu, &hrho, &load)?;
        // θ rows pair with thermal variations through M M_s⁻ᵀ.
        let trows = match &act.supg_mass {
            Some(ms) => {
                let msd = ms.to_dense().transpose();
                let y = msd.lu().solve(&nalgebra::DVector::from_vec(act.therm.clone())).ok_or(Error::Singular { pivot: 0 })?;
                mtheta.matvec(y.as_slice())
            }
            None => act.therm.clone(),
        };
        let full: Vec<f64> = act.mom.iter().chain(&act.cont).chain(&trows).copied().collect();
        for (row, &i) in free.iter().enumerate() {
            b[(row, col)] = full[i];
        }
    }
    Ok(b)
}

/// max|B + Bᵀ| / max|B| for the bracket at the frozen state.
pub fn check_bracket_antisymmetry(disc: &Discretization, state: &State, c: &ModelConstants, kind: BracketKind, tau: f64) -> Result<f64> {
    let b = bracket_matrix(disc, state, c, kind, tau)?;
    let scale = b.amax();
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((&b + b.transpose()).amax() / scale)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coercivity {
    /// Smallest generalized eigenvalue of sym(M_s) relative to M.
    pub lambda_min: f64,
    /// 1 − c₁τ/2.
    pub bound: f64,
    pub c1: f64,
}

impl Coercivity {
    pub fn holds(&self, slack: f64) -> bool {
        self.lambda_min >= self.bound - slack
    }
}

/// c₁ = max |∇·u| (full SUPG) or max |∂_z u_z| (vertical SUPG) over the
/// quadrature points.
pub fn supg_c1(disc: &Discretization, uv: &[Shape]) -> f64 {
    uv.iter()
        .map(|s| match disc.supg_mode() {
            SupgMode::Full => s.div().abs(),
            SupgMode::Vertical => s.grad[1][1].abs(),
        })
        .fold(0.0, f64::max)
}

/// Dense generalized eigenvalue check of the SUPG-modified mass matrix.
pub fn coercivity_check(disc: &Discretization, tau: f64, u: &Field) -> Result<Coercivity> {
    let uv = disc.eval(u, Slot::U);
    let c1 = supg_c1(disc, &uv);
    let m = disc.mass(Slot::Theta).to_dense();
    let ms = assemble_supg_mass(disc, tau, &uv).to_dense();
    let sym = (&ms + ms.transpose()) * 0.5;
    let l = m.cholesky().ok_or(Error::Singular { pivot: 0 })?.l();
    let li = l.clone().try_inverse().ok_or(Error::Singular { pivot: 0 })?;
    let a = &li * sym * li.transpose();
    let a = (&a + a.transpose()) * 0.5;
    let lambda_min = a.symmetric_eigenvalues().min();
    Ok(Coercivity { lambda_min, bound: 1.0 - c1 * tau / 2.0, c1 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexResidual {
    /// Relative pointwise mismatch of ∇⊥ζ and its V_u interpolant.
    pub curl: f64,
    /// Relative mismatch of ∇·u and its V_ρ projection.
    pub div: f64,
    /// max |∇·∇⊥ζ| relative to max |∇⊥ζ|.
    pub div_curl: f64,
}

impl ComplexResidual {
    pub fn max(&self) -> f64 {
        self.curl.max(self.div).max(self.div_curl)
    }
}

/// Cell and reference coordinates of a physical point.
fn locate(m: &Mesh, p: [f64; 2]) -> (usize, [f64; 2]) {
    let ix = ((p[0] / m.dx).floor() as isize).clamp(0, m.nx as isize - 1) as usize;
    let iz = ((p[1] / m.dz).floor() as isize).clamp(0, m.nz as isize - 1) as usize;
    let cell = m.cell_index(ix, iz);
    let o = m.cell_origin(cell);
    (cell, [(p[0] - o[0]) / m.dx, (p[1] - o[1]) / m.dz])
}

/// Random-field check of ∇⊥V_q ⊆ V_u and ∇·V_u ⊆ V_ρ.
pub fn complex_check(disc: &Discretization, n_fields: usize, seed: u64) -> Result<ComplexResidual> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ComplexResidual { curl: 0.0, div: 0.0, div_curl: 0.0 };
    let nq = disc.nq();
    for _ in 0..n_fields {
        let mut zeta = Field::zeros(&disc.vq);
        zeta.coeffs.iter_mut().for_each(|c| *c = rng.gen_range(-1.0..1.0));
        if disc.model == Model::Euler {
            // Slip requires ζ constant on the top and bottom boundaries.
            let lz = disc.mesh.lz;
            for ((p, _), c) in disc.vq.dof_nodes().iter().zip(zeta.coeffs.iter_mut()) {
                if p[1].abs() < 1e-9 * lz || (p[1] - lz).abs() < 1e-9 * lz {
                    *c = 0.0;
                }
            }
        }
        let curl = Field::interpolate(&disc.vu, |p| {
            let (cell, xi) = locate(&disc.mesh, p);
            let s = zeta.evaluate(cell, &[xi]).expect("located point")[0];
            [-s.grad[0][1], s.grad[0][0]]
        });
        let zv = disc.eval(&zeta, Slot::Q);
        let cv = disc.eval(&curl, Slot::U);
        let (mut diff, mut scale, mut dc) = (0.0f64, 0.0f64, 0.0f64);
        for (z, c) in zv.iter().zip(&cv) {
            let exact = [-z.grad[0][1], z.grad[0][0]];
            diff = diff.max((exact[0] - c.val[0]).abs()).max((exact[1] - c.val[1]).abs());
            scale = scale.max(exact[0].abs()).max(exact[1].abs());
            dc = dc.max(c.div().abs());
        }
        out.curl = out.curl.max(diff / scale);
        out.div_curl = out.div_curl.max(dc / scale);

        let mut u = Field::zeros(&disc.vu);
        u.coeffs.iter_mut().for_each(|c| *c = rng.gen_range(-1.0..1.0));
        u.apply_constraints();
        let uv = disc.eval(&u, Slot::U);
        let dv: Vec<f64> = uv.iter().map(|s| s.div()).collect();
        let p = disc.eval(&l2_project(disc, Slot::Rho, &dv)?, Slot::Rho);
        let mut diff = 0.0f64;
        for i in 0..disc.mesh.n_cells() * nq {
            diff = diff.max((p[i].val[0] - dv[i]).abs());
        }
        let scale = dv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        out.div = out.div.max(diff / scale);
    }
    Ok(out)
}

/// Directional derivative of H from the variations and from a central
/// difference with step `eps`; returns (analytic, finite difference).
pub fn variation_fd_check(disc: &Discretization, z: &State, dir: &State, c: &ModelConstants, eps: f64) -> Result<(f64, f64)> {
    let v = variations(disc, z, c)?;
    let nq = disc.nq();
    let hu: f64 = crate::operators::inner(disc, &v.hu, Slot::U, &dir.u, Slot::U);
    let hr: f64 = crate::operators::inner(disc, &v.hrho, Slot::Rho, &dir.rho, Slot::Rho);
    let dth = disc.eval(&dir.theta, Slot::Theta);
    let ht: f64 = (0..disc.mesh.n_cells() * nq).map(|i| disc.qweight(i % nq) * v.t[i] * dth[i].val[0]).sum();
    let hp = total_energy(disc, &z.lin_comb(1.0, dir, eps), c);
    let hm = total_energy(disc, &z.lin_comb(1.0, dir, -eps), c);
    Ok((hu + hr + ht, (hp - hm) / (2.0 * eps)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus(model: Model, k: usize) -> Discretization {
        Discretization::new(&Mesh::new(4, 4, 4.0, 4.0, true).unwrap(), k, model).unwrap()
    }

    #[test]
    fn dg_rho_linear_oracle() {
        let m = Mesh::new(2, 2, 3.0, 2.0, true).unwrap();
        let d = Discretization::new(&m, 2, Model::ThermalSwe).unwrap();
        let rho = Field::interpolate_scalar(&d.vrho, |p| p[0]);
        let v = dg_seminorm_rho(&d, &rho);
        // Volume part Lx·Lz; the wrap facet jumps by Lx over length Lz.
        let expect = 3.0 * 2.0 + 2.0 * 9.0 / 1.5;
        assert!((v * v - expect).abs() < 1e-10, "{} vs {expect}", v * v);
        let r2 = rho.lin_comb(-3.0, &rho, 0.0);
        assert!((dg_seminorm_rho(&d, &r2) - 3.0 * v).abs() < 1e-10);
    }

    #[test]
    fn constant_fields_have_zero_seminorms() {
        let d = torus(Model::ThermalSwe, 2);
        let rho = Field::interpolate_scalar(&d.vrho, |_| 3.0);
        assert!(dg_seminorm_rho(&d, &rho) < 1e-12);
        let u = Field::interpolate(&d.vu, |_| [2.0, -1.0]);
        assert!(dg_seminorm_u(&d, &u).unwrap() < 1e-12);
    }

    #[test]
    fn relative_error_series() {
        assert_eq!(relative_energy_error(&[2.0, 2.0, 3.0]).unwrap(), vec![0.0, 0.0, 0.5]);
        assert!(relative_energy_error(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn l2_error_matches_mass_matrix() {
        let d = torus(Model::Euler, 2);
        let z = random_state(&d, 1.0, 300.0, 3);
        let w = random_state(&d, 1.0, 300.0, 4);
        let e = l2_error(&d, &z.theta, &w.theta).unwrap();
        let diff: Vec<f64> = z.theta.coeffs.iter().zip(&w.theta.coeffs).map(|(a, b)| a - b).collect();
        let md = d.mass(Slot::Theta).matvec(&diff);
        let oracle: f64 = diff.iter().zip(&md).map(|(a, b)| a * b).sum();
        assert!((e * e - oracle).abs() < 1e-13 * oracle.max(1.0));
        assert_eq!(l2_error(&d, &z.theta, &z.theta).unwrap(), 0.0);
        assert!(l2_error(&d, &z.theta, &z.rho).is_err());
    }

    #[test]
    fn zero_velocity_gives_unit_eigenvalue() {
        let d = torus(Model::ThermalSwe, 2);
        let c = coercivity_check(&d, 0.5, &Field::zeros(&d.vu)).unwrap();
        assert!((c.lambda_min - 1.0).abs() < 1e-10);
        assert_eq!(c.c1, 0.0);
    }

    #[test]
    fn complex_holds_k2() {
        for model in [Model::ThermalSwe, Model::Euler] {
            let mesh = Mesh::new(4, 4, 4.0, 4.0, model == Model::ThermalSwe).unwrap();
            let d = Discretization::new(&mesh, 2, model).unwrap();
            let r = complex_check(&d, 2, 1).unwrap();
            assert!(r.max() < 1e-12, "{r:?}");
        }
    }
}
