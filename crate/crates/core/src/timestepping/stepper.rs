//! Picard iteration and the time loop.

use std::sync::Arc;

use crate::cases::CaseSetup;
use crate::diagnostics::{compute_record, DiagnosticsRecord};
use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::operators::diagnostic_vorticity;
use crate::physics::{total_energy, ModelConstants, State};

use super::jacobian::{build_picard_jacobian, Background, PicardJacobian};
use super::residual::{residual, StepInputs};
use super::{RunConfig, SchemeKind};

/// Advances states with a fixed scheme; the Jacobian is factorized once.
pub struct Stepper {
    pub disc: Arc<Discretization>,
    pub constants: ModelConstants,
    pub cfg: RunConfig,
    jac: PicardJacobian,
}

impl Stepper {
    pub fn new(disc: Arc<Discretization>, constants: ModelConstants, cfg: RunConfig, bg: &Background) -> Result<Stepper> {
        cfg.validate()?;
        if disc.model != cfg.model {
            return Err(Error::Config(format!(
                "run configured for {} but discretization is {}",
                cfg.model.name(),
                disc.model.name()
            )));
        }
        if bg.rho.coeffs.iter().any(|&r| !(r > 0.0)) || !(bg.theta > 0.0) {
            return Err(Error::NonPositive("Picard background".into()));
        }
        let jac = build_picard_jacobian(&disc, bg, cfg.dt, &constants, cfg.scheme, cfg.linear_tol)?;
        Ok(Stepper { disc, constants, cfg, jac })
    }

    fn inputs<'a>(&'a self, zn: &'a State, qn: Option<&'a crate::fem::Field>) -> StepInputs<'a> {
        StepInputs { disc: &self.disc, c: &self.constants, cfg: &self.cfg, zn, qn }
    }

    fn needs_vorticity(&self) -> bool {
        matches!(self.cfg.scheme, SchemeKind::EcSupg | SchemeKind::PlainBracket | SchemeKind::NecBracket)
    }

    /// One Picard update z_k → z_k + δz; returns the residual norm at z_k.
    pub fn picard_step(&self, inp: &StepInputs, zk: &mut State) -> Result<f64> {
        let r = residual(inp, zk)?;
        let (du, drho, dth) = self.jac.solve(&self.disc, &r)?;
        for (f, d) in [(&mut zk.u, du), (&mut zk.rho, drho), (&mut zk.theta, dth)] {
            f.coeffs.iter_mut().zip(d).for_each(|(c, v)| *c += v);
        }
        Ok(r.norm())
    }

    /// Exactly `picard_iters` iterations starting from zⁿ; returns the new
    /// state and the residual norm before each update.
    pub fn step(&self, zn: &State) -> Result<(State, Vec<f64>)> {
        let qn = if self.needs_vorticity() {
            Some(diagnostic_vorticity(&self.disc, &zn.u, &zn.rho, self.constants.f0)?)
        } else {
            None
        };
        let inp = self.inputs(zn, qn.as_ref());
        let mut zk = zn.clone();
        let mut log = Vec::with_capacity(self.cfg.picard_iters);
        for it in 0..self.cfg.picard_iters {
            let norm = self.picard_step(&inp, &mut zk)?;
            log::debug!("picard {it}: |R| = {norm:.3e}");
            log.push(norm);
        }
        Ok((zk, log))
    }

    /// Residual of the configured scheme (exposed for inspection).
    pub fn residual(&self, zn: &State, zk: &State) -> Result<super::Residual> {
        residual(&self.inputs(zn, None), zk)
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub state: State,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: State,
    pub snapshots: Vec<Snapshot>,
    /// Picard residual norms per step.
    pub picard_logs: Vec<Vec<f64>>,
}

/// Run a case from its initial state.
pub fn run(case: &CaseSetup, cfg: &RunConfig) -> Result<RunOutput> {
    run_from(case, cfg, &case.state, 0, None)
}

/// Continue a run from `z0` at step `first_step`. `e0` is the reference
/// energy for the relative error; defaults to the energy of `z0`.
pub fn run_from(case: &CaseSetup, cfg: &RunConfig, z0: &State, first_step: usize, e0: Option<f64>) -> Result<RunOutput> {
    let stepper = Stepper::new(case.disc.clone(), case.constants.clone(), cfg.clone(), &case.background)?;
    let disc = &stepper.disc;
    let c = &stepper.constants;
    let e0 = e0.unwrap_or_else(|| total_energy(disc, z0, c));
    let mut records = vec![compute_record(disc, z0, c, first_step, first_step as f64 * cfg.dt, e0)?];
    let mut snapshots = Vec::new();
    let keep = |step: usize| cfg.output_every > 0 && step % cfg.output_every == 0;
    if keep(first_step) {
        snapshots.push(Snapshot { step: first_step, time: first_step as f64 * cfg.dt, state: z0.clone() });
    }
    let mut z = z0.clone();
    let mut picard_logs = Vec::with_capacity(cfg.n_steps);
    for n in first_step + 1..=first_step + cfg.n_steps {
        let (next, log) = stepper.step(&z)?;
        if next.flat().iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { step: n, what: "non-finite state".into() });
        }
        if log.len() > 1 && log[log.len() - 1] > log[0] {
            log::warn!("step {n}: Picard residual grew from {:.3e} to {:.3e}", log[0], log[log.len() - 1]);
        }
        z = next;
        let time = n as f64 * cfg.dt;
        let rec = compute_record(disc, &z, c, n, time, e0)?;
        log::info!("step {n}: t = {time} rel energy err = {:.3e}", rec.rel_energy_err);
        records.push(rec);
        if keep(n) {
            snapshots.push(Snapshot { step: n, time, state: z.clone() });
        }
        picard_logs.push(log);
    }
    Ok(RunOutput { records, final_state: z, snapshots, picard_logs })
}
