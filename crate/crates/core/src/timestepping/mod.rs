//! Residuals of the implemented schemes, the Picard Jacobian and the time
//! loop.

mod jacobian;
mod residual;
mod stepper;

pub use jacobian::{build_picard_jacobian, Background, PicardJacobian};
pub use residual::{bracket_action, residual, BracketAction, BracketKind, Frozen, StepInputs};
pub use stepper::{run, run_from, RunOutput, Snapshot, Stepper};

use crate::discretization::Model;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    /// SUPG bracket with the Poisson integrator.
    EcSupg,
    /// Unstabilized bracket with the Poisson integrator (τ plays no role).
    PlainBracket,
    /// Bracket whose momentum thermal term is not paired antisymmetrically.
    NecBracket,
    /// Fully upwinded scheme with midpoint dH/du.
    EcFullUpwindApprox,
    /// Fully upwinded scheme with the advecting velocity recovered from the
    /// time-averaged dH/du.
    EcFullUpwindAveraged,
    /// Scheme written directly from the Euler equations (Euler only).
    NecDirect,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 6] = [
        SchemeKind::EcSupg,
        SchemeKind::PlainBracket,
        SchemeKind::NecBracket,
        SchemeKind::EcFullUpwindApprox,
        SchemeKind::EcFullUpwindAveraged,
        SchemeKind::NecDirect,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::EcSupg => "ec_supg",
            SchemeKind::PlainBracket => "plain_bracket",
            SchemeKind::NecBracket => "nec_bracket",
            SchemeKind::EcFullUpwindApprox => "ec_full_upwind_approx",
            SchemeKind::EcFullUpwindAveraged => "ec_full_upwind_averaged",
            SchemeKind::NecDirect => "nec_direct",
        }
    }

    pub fn parse(s: &str) -> Result<SchemeKind> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme '{s}'")))
    }

    /// Whether momentum rows are tested with ρ̄w.
    pub fn density_weighted_momentum(self) -> bool {
        matches!(self, SchemeKind::EcFullUpwindApprox | SchemeKind::EcFullUpwindAveraged)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub picard_iters: usize,
    pub tau: f64,
    pub linear_tol: f64,
    pub scheme: SchemeKind,
    pub model: Model,
    /// Snapshot cadence in steps (0 disables snapshots).
    pub output_every: usize,
    /// Gauss points of the time average of the variations.
    pub time_quadrature: usize,
}

impl RunConfig {
    pub fn new(model: Model, scheme: SchemeKind, dt: f64, n_steps: usize, picard_iters: usize) -> RunConfig {
        RunConfig {
            dt,
            n_steps,
            picard_iters,
            tau: dt / 2.0,
            linear_tol: crate::linalg::DEFAULT_TOL,
            scheme,
            model,
            output_every: 0,
            time_quadrature: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            bad.push(format!("dt must be positive (got {})", self.dt));
        }
        if self.picard_iters == 0 {
            bad.push("picard iterations must be >= 1".to_string());
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            bad.push(format!("tau must be non-negative (got {})", self.tau));
        }
        if !(self.linear_tol > 0.0 && self.linear_tol < 1.0) {
            bad.push(format!("linear tolerance must lie in (0,1) (got {})", self.linear_tol));
        }
        if !(1..=10).contains(&self.time_quadrature) {
            bad.push(format!("time quadrature must lie in 1..=10 (got {})", self.time_quadrature));
        }
        if self.scheme == SchemeKind::NecDirect && self.model != Model::Euler {
            bad.push("nec_direct is defined for the Euler model only".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.join("; ")))
        }
    }
}

/// Residual blocks over the (u, ρ, θ) dofs.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub u: Vec<f64>,
    pub rho: Vec<f64>,
    pub theta: Vec<f64>,
}

impl Residual {
    pub fn norm(&self) -> f64 {
        self.u.iter().chain(&self.rho).chain(&self.theta).map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.u.iter().chain(&self.rho).chain(&self.theta).fold(0.0, |m, v| m.max(v.abs()))
    }
}
