//! Structural property suite run by `hamslice verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cases::{planar_swe_balanced, SweParams};
use crate::diagnostics::{check_bracket_antisymmetry, coercivity_check, complex_check, random_state, variation_fd_check};
use crate::discretization::{Discretization, Model};
use crate::error::Result;
use crate::fem::Field;
use crate::mesh::Mesh;
use crate::physics::{ModelConstants, State};
use crate::timestepping::{BracketKind, RunConfig, SchemeKind, Stepper};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// `true` if the value must stay at or below the threshold, `false` if
    /// it must reach at least the threshold.
    pub upper: bool,
}

impl Check {
    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Check {
        Check { name: name.into(), value, threshold, upper: true }
    }

    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Check {
        Check { name: name.into(), value, threshold, upper: false }
    }

    pub fn pass(&self) -> bool {
        if self.upper {
            self.value <= self.threshold
        } else {
            self.value >= self.threshold
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.pass() { "PASS" } else { "FAIL" };
        let op = if self.upper { "<=" } else { ">=" };
        write!(f, "[{tag}] {}: {:.3e} {op} {:.3e}", self.name, self.value, self.threshold)
    }
}

fn model_constants(model: Model) -> ModelConstants {
    match model {
        Model::Euler => ModelConstants { f0: 1e-4, ..ModelConstants::euler() },
        Model::ThermalSwe => ModelConstants::thermal_swe(9.80616, 1e-4),
    }
}

/// 4×4 test discretization: a periodic square for shallow water, a slab for
/// the Euler model.
pub fn small_disc(model: Model, degree: usize, extent: f64) -> Result<Discretization> {
    let mesh = Mesh::new(4, 4, extent, extent, model == Model::ThermalSwe)?;
    Discretization::new(&mesh, degree, model)
}

fn reference_state(model: Model) -> (f64, f64) {
    match model {
        Model::Euler => (1.0, 300.0),
        Model::ThermalSwe => (1000.0, 9.8),
    }
}

/// Relative asymmetry of the SUPG bracket and of the non-conserving bracket
/// on random states.
pub fn antisymmetry_checks(tau: f64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for model in [Model::Euler, Model::ThermalSwe] {
        let d = small_disc(model, 2, 4000.0)?;
        let c = model_constants(model);
        let (r0, t0) = reference_state(model);
        let z = random_state(&d, r0, t0, 11);
        let ec = check_bracket_antisymmetry(&d, &z, &c, BracketKind::Supg, tau)?;
        out.push(Check::below(format!("antisymmetry {} ec_supg", model.name()), ec, 1e-12));
        let nec = check_bracket_antisymmetry(&d, &z, &c, BracketKind::NecBracket, tau)?;
        out.push(Check::above(format!("asymmetry witness {} nec_bracket", model.name()), nec, 1e-6));
    }
    Ok(out)
}

/// Max difference between one EC_SUPG step with τ = 0 and one step of the
/// unstabilized bracket, on a perturbed shallow water jet.
pub fn tau_zero_reduction() -> Result<f64> {
    let p = SweParams { cells: 4, dt: 600.0, ..SweParams::default() };
    let case = planar_swe_balanced(&p)?;
    let mut z = case.state.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for f in [&mut z.u, &mut z.rho, &mut z.theta] {
        let scale = f.max_abs().max(1.0);
        f.coeffs.iter_mut().for_each(|v| *v += 0.01 * scale * rng.gen_range(-1.0..1.0));
        f.apply_constraints();
    }
    let step = |scheme: SchemeKind| -> Result<State> {
        let mut cfg = RunConfig::new(Model::ThermalSwe, scheme, p.dt, 1, 4);
        cfg.tau = 0.0;
        let s = Stepper::new(case.disc.clone(), case.constants.clone(), cfg, &case.background)?;
        Ok(s.step(&z)?.0)
    };
    let a = step(SchemeKind::EcSupg)?.flat();
    let b = step(SchemeKind::PlainBracket)?.flat();
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

/// Coercivity on a unit 4×4 mesh with τ = Δt/2, Δt = 0.1: every random
/// field must satisfy λ_min ≥ 1 − c₁τ/2 − 1e−10. Returns the worst margin
/// λ_min − bound over the random fields and λ_min for a field with c₁ = 0.
pub fn coercivity_checks(model: Model, n_fields: usize, seed: u64) -> Result<(f64, f64)> {
    let d = small_disc(model, 2, 1.0)?;
    let tau = 0.05;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..n_fields {
        let mut u = Field::zeros(&d.vu);
        u.coeffs.iter_mut().for_each(|c| *c = rng.gen_range(-1.0..1.0));
        u.apply_constraints();
        let r = coercivity_check(&d, tau, &u)?;
        worst = worst.min(r.lambda_min - r.bound);
    }
    let free = match model {
        // ∇⊥ of a random streamfunction is divergence free.
        Model::ThermalSwe => {
            let mut zeta = Field::zeros(&d.vq);
            zeta.coeffs.iter_mut().for_each(|c| *c = rng.gen_range(-1.0..1.0));
            Field::interpolate(&d.vu, |p| {
                let (ix, iz) = (((p[0] / d.mesh.dx) as usize).min(3), ((p[1] / d.mesh.dz) as usize).min(3));
                let cell = d.mesh.cell_index(ix, iz);
                let o = d.mesh.cell_origin(cell);
                let s = zeta.evaluate(cell, &[[(p[0] - o[0]) / d.mesh.dx, (p[1] - o[1]) / d.mesh.dz]]).expect("point in cell")[0];
                [-s.grad[0][1], s.grad[0][0]]
            })
        }
        // With slip walls, ∂_z u_z = 0 forces u_z = 0; u_x stays random.
        Model::Euler => {
            let mut u = Field::zeros(&d.vu);
            let blocks = &d.vu.blocks;
            let xb = &blocks[0];
            for i in 0..xb.x.n_global() * xb.z.n_global() {
                u.coeffs[xb.offset + i] = rng.gen_range(-1.0..1.0);
            }
            u
        }
    };
    let r = coercivity_check(&d, tau, &free)?;
    Ok((worst, r.lambda_min))
}

/// Observed order of the central difference error of H against the
/// variations. Errors at roundoff level count as exact (order = ∞).
pub fn variation_order(model: Model, seed: u64) -> Result<(f64, f64)> {
    let d = small_disc(model, 2, 4000.0)?;
    let c = model_constants(model);
    let (r0, t0) = reference_state(model);
    let z = random_state(&d, r0, t0, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
    let mut dir = z.clone();
    for (f, amp) in [(&mut dir.u, 1.0), (&mut dir.rho, 0.05 * r0), (&mut dir.theta, 0.05 * t0)] {
        f.coeffs.iter_mut().for_each(|v| *v = amp * rng.gen_range(-1.0..1.0));
        f.apply_constraints();
    }
    let eps = 0.5;
    let (a1, f1) = variation_fd_check(&d, &z, &dir, &c, eps)?;
    let (a2, f2) = variation_fd_check(&d, &z, &dir, &c, eps / 2.0)?;
    let (e1, e2) = ((f1 - a1).abs(), (f2 - a2).abs());
    let rel = e2 / a2.abs().max(1e-300);
    let floor = 1e-11 * a1.abs();
    let order = if e1 <= floor { f64::INFINITY } else { (e1 / e2.max(1e-300)).log2() };
    Ok((order, rel))
}

/// Run every structural check.
pub fn structural_suite() -> Result<Vec<Check>> {
    let mut out = antisymmetry_checks(0.5)?;
    out.push(Check::below("tau=0 reduction (max dof difference)", tau_zero_reduction()?, 1e-12));
    for (model, name) in [(Model::ThermalSwe, "CG"), (Model::Euler, "CP")] {
        let (margin, free) = coercivity_checks(model, 20, 3)?;
        out.push(Check::above(format!("coercivity {name} margin lambda_min - (1 - c1 tau/2)"), margin, -1e-10));
        out.push(Check::above(format!("coercivity {name} c1=0 lambda_min"), free, 1.0 - 1e-10));
    }
    for k in [2, 3] {
        for model in [Model::ThermalSwe, Model::Euler] {
            let d = small_disc(model, k, 4.0)?;
            let r = complex_check(&d, 3, 17)?;
            out.push(Check::below(format!("complex k={k} {}", model.name()), r.max(), 1e-12));
        }
    }
    for model in [Model::Euler, Model::ThermalSwe] {
        let (order, _) = variation_order(model, 23)?;
        out.push(Check::above(format!("variation fd order {}", model.name()), order, 1.8));
    }
    Ok(out)
}
