//! Nonlinear residuals of one implicit step.
//!
//! Sign convention: every residual has the form R = M(z − zⁿ) − Δt·F, where
//! F is the right-hand side of the semi-discrete equations tested with the
//! row's test functions. Slip-constrained velocity rows are zero.

use crate::discretization::{scalar_coef, vector_coef, zero_constrained, Discretization, Model, Slot};
use crate::error::{Error, Result};
use crate::fem::{Field, Shape};
use crate::linalg::SparseMatrix;
use crate::operators::{
    assemble_supg_mass, diagnostic_vorticity, dot, perp, solve_supg_load, transport_theta_rows, transport_u_rows,
    upwind, velocity_recovery, Advection,
};
use crate::physics::{time_averaged_variations, ModelConstants, State};

use super::{Residual, RunConfig, SchemeKind};

/// Variant of the bracket's thermal coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BracketKind {
    Supg,
    Plain,
    NecBracket,
}

/// Frozen bracket coefficients.
pub struct Frozen<'a> {
    pub rho: &'a Field,
    pub theta: &'a Field,
    pub q: &'a Field,
    pub ubar: &'a Field,
}

/// Bracket action {·, H} on every test function, for a Hamiltonian with
/// variations (H_u, H_ρ) and thermal load b_i = ⟨H_θ, γ_i⟩.
///
/// `therm` holds the raw thermal rows −L(H_u/ρ, θ; γ_i + τS(ū; γ_i)); a
/// thermal variation e_i pairs with them through M M_s⁻ᵀ.
pub struct BracketAction {
    pub mom: Vec<f64>,
    pub cont: Vec<f64>,
    pub therm: Vec<f64>,
    pub supg_mass: Option<SparseMatrix>,
}

pub fn bracket_action(
    disc: &Discretization,
    kind: BracketKind,
    tau: f64,
    fr: &Frozen,
    hu: &Field,
    hrho: &Field,
    theta_load: &[f64],
) -> Result<BracketAction> {
    let nq = disc.nq();
    let uv = disc.eval(fr.ubar, Slot::U);
    let rv = disc.eval(fr.rho, Slot::Rho);
    let tv = disc.eval(fr.theta, Slot::Theta);
    let qv = disc.eval(fr.q, Slot::Q);
    let huv = disc.eval(hu, Slot::U);
    let hrv = disc.eval(hrho, Slot::Rho);
    let mut mom = disc.load(Slot::U, |cell, q| {
        let i = cell * nq + q;
        let p = perp(huv[i].val);
        let qq = qv[i].val[0];
        vector_coef([-qq * p[0], -qq * p[1]], hrv[i].val[0])
    });
    let tau = if kind == BracketKind::Plain { 0.0 } else { tau };
    let supg_mass = (tau > 0.0).then(|| assemble_supg_mass(disc, tau, &uv));
    let add = |acc: &mut Vec<f64>, v: Vec<f64>| acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
    match kind {
        BracketKind::Supg => {
            let s = match &supg_mass {
                Some(ms) => Discretization::cached_solve(&disc.supg, ms, theta_load)?,
                None => disc.mass_solve(Slot::Theta, theta_load)?,
            };
            let s = Field::from_coeffs(&disc.vtheta, s)?;
            add(&mut mom, transport_u_rows(disc, Some(fr.rho), fr.theta, &s, fr.ubar, tau));
        }
        BracketKind::Plain => {
            let h = Field::from_coeffs(&disc.vtheta, disc.mass_solve(Slot::Theta, theta_load)?)?;
            let hv = disc.eval(&h, Slot::Theta);
            add(
                &mut mom,
                disc.load(Slot::U, |cell, q| {
                    let i = cell * nq + q;
                    let a = 1.0 / rv[i].val[0] * hv[i].val[0];
                    let g = tv[i].grad[0];
                    vector_coef([a * g[0], a * g[1]], 0.0)
                }),
            );
        }
        BracketKind::NecBracket => {
            let h = Field::from_coeffs(&disc.vtheta, disc.mass_solve(Slot::Theta, theta_load)?)?;
            let hv = disc.eval(&h, Slot::Theta);
            add(
                &mut mom,
                disc.load(Slot::U, |cell, q| {
                    let i = cell * nq + q;
                    let (r, gr) = (rv[i].val[0], rv[i].grad[0]);
                    let (hh, gh) = (hv[i].val[0], hv[i].grad[0]);
                    let a = hh / r;
                    let ga = [gh[0] / r - hh * gr[0] / (r * r), gh[1] / r - hh * gr[1] / (r * r)];
                    let th = tv[i].val[0];
                    vector_coef([-th * ga[0], -th * ga[1]], -th * a)
                }),
            );
            add(
                &mut mom,
                disc.facet_load(Slot::U, &disc.interior, |f, cp, _| {
                    let (cm, lm) = f.minus.expect("interior facet");
                    let (cpl, lp) = f.plus;
                    let hp = disc.eval_facet(&h, Slot::Theta, cpl, lp);
                    let hm = disc.eval_facet(&h, Slot::Theta, cm, lm);
                    let rp = disc.eval_facet(fr.rho, Slot::Rho, cpl, lp);
                    let rm = disc.eval_facet(fr.rho, Slot::Rho, cm, lm);
                    let tp = disc.eval_facet(fr.theta, Slot::Theta, cpl, lp);
                    let tm = disc.eval_facet(fr.theta, Slot::Theta, cm, lm);
                    for q in 0..cp.len() {
                        let jump = hp[q].val[0] / rp[q].val[0] - hm[q].val[0] / rm[q].val[0];
                        let x = jump * 0.5 * (tp[q].val[0] + tm[q].val[0]);
                        cp[q] = vector_coef([x * f.normal[0], x * f.normal[1]], 0.0);
                    }
                }),
            );
        }
    }
    zero_constrained(&disc.vu, &mut mom);
    let cont = disc.load(Slot::Rho, |cell, q| scalar_coef(-huv[cell * nq + q].div()));
    let therm = match kind {
        BracketKind::Plain => disc.load(Slot::Theta, |cell, q| {
            let i = cell * nq + q;
            scalar_coef(-(1.0 / rv[i].val[0] * dot(huv[i].val, tv[i].grad[0])))
        }),
        _ => {
            let adv = Advection { v: hu, inv_density: Some(fr.rho) };
            let mut t = transport_theta_rows(disc, &adv, fr.theta, fr.ubar, tau);
            t.iter_mut().for_each(|v| *v = -*v);
            t
        }
    };
    Ok(BracketAction { mom, cont, therm, supg_mass })
}

/// Everything a residual needs besides the Picard iterate.
pub struct StepInputs<'a> {
    pub disc: &'a Discretization,
    pub c: &'a ModelConstants,
    pub cfg: &'a RunConfig,
    pub zn: &'a State,
    /// Diagnostic vorticity of `zn` (bracket schemes only).
    pub qn: Option<&'a Field>,
}

fn diff(a: &Field, b: &Field) -> Vec<f64> {
    a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x - y).collect()
}

fn axpy_into(out: &mut [f64], a: f64, x: &[f64]) {
    out.iter_mut().zip(x).for_each(|(o, v)| *o += a * v);
}

/// Residual of the configured scheme at Picard iterate `zk`.
pub fn residual(inp: &StepInputs, zk: &State) -> Result<Residual> {
    match inp.cfg.scheme {
        SchemeKind::EcSupg => bracket_residual(inp, BracketKind::Supg, zk),
        SchemeKind::PlainBracket => bracket_residual(inp, BracketKind::Plain, zk),
        SchemeKind::NecBracket => bracket_residual(inp, BracketKind::NecBracket, zk),
        SchemeKind::EcFullUpwindApprox => approx_residual(inp, zk, false),
        SchemeKind::EcFullUpwindAveraged => approx_residual(inp, zk, true),
        SchemeKind::NecDirect => direct_residual(inp, zk),
    }
}

fn bracket_residual(inp: &StepInputs, kind: BracketKind, zk: &State) -> Result<Residual> {
    let (disc, zn, dt) = (inp.disc, inp.zn, inp.cfg.dt);
    let nq = disc.nq();
    let zb = zn.midpoint(zk);
    let var = time_averaged_variations(disc, zn, zk, inp.c, inp.cfg.time_quadrature)?;
    let qn = match inp.qn {
        Some(q) => q.clone(),
        None => diagnostic_vorticity(disc, &zn.u, &zn.rho, inp.c.f0)?,
    };
    let qk = diagnostic_vorticity(disc, &zk.u, &zk.rho, inp.c.f0)?;
    let qbar = qn.midpoint(&qk);
    let b = disc.load(Slot::Theta, |cell, q| scalar_coef(var.t[cell * nq + q]));
    let fr = Frozen { rho: &zb.rho, theta: &zb.theta, q: &qbar, ubar: &zb.u };
    let act = bracket_action(disc, kind, inp.cfg.tau, &fr, &var.hu, &var.hrho, &b)?;
    let mut ru = disc.mass(Slot::U).matvec(&diff(&zk.u, &zn.u));
    axpy_into(&mut ru, -dt, &act.mom);
    zero_constrained(&disc.vu, &mut ru);
    let mut rr = disc.mass(Slot::Rho).matvec(&diff(&zk.rho, &zn.rho));
    axpy_into(&mut rr, -dt, &act.cont);
    let dth = diff(&zk.theta, &zn.theta);
    let mut rt = match &act.supg_mass {
        Some(ms) => ms.transpose_matvec(&dth),
        None => disc.mass(Slot::Theta).matvec(&dth),
    };
    axpy_into(&mut rt, -dt, &act.therm);
    Ok(Residual { u: ru, rho: rr, theta: rt })
}

/// ⟨∇⊥(ρ w·a⊥), ū⟩ − ∫_Γ [[ρ w·a⊥]] n⊥·ũ over every velocity test function,
/// with ũ the upwind trace of ū. `rho = None` means ρ ≡ 1.
pub fn vector_invariant_rows(disc: &Discretization, rho: Option<&Field>, a: &Field, ubar: &Field) -> Vec<f64> {
    let nq = disc.nq();
    let av = disc.eval(a, Slot::U);
    let uv = disc.eval(ubar, Slot::U);
    let rv = rho.map(|r| disc.eval(r, Slot::Rho));
    let mut out = disc.load(Slot::U, |cell, q| {
        let i = cell * nq + q;
        let (r, gr) = rv.as_ref().map_or((1.0, [0.0, 0.0]), |v| (v[i].val[0], v[i].grad[0]));
        let u = uv[i].val;
        let c = [u[1], -u[0]];
        let ap = perp(av[i].val);
        let g = av[i].grad;
        let dap = [[-g[1][0], -g[1][1]], [g[0][0], g[0][1]]];
        let cr = dot(c, gr);
        let mut s = Shape::default();
        for k in 0..2 {
            s.val[k] = cr * ap[k] + r * dot(c, dap[k]);
            s.grad[k] = [r * ap[k] * c[0], r * ap[k] * c[1]];
        }
        s
    });
    let facet = disc.facet_load(Slot::U, &disc.interior, |f, cp, cm| {
        let (pc, pl) = f.plus;
        let (mc, ml) = f.minus.expect("interior facet");
        let (ap, am) = (disc.eval_facet(a, Slot::U, pc, pl), disc.eval_facet(a, Slot::U, mc, ml));
        let (up, um) = (disc.eval_facet(ubar, Slot::U, pc, pl), disc.eval_facet(ubar, Slot::U, mc, ml));
        let rp = rho.map(|r| disc.eval_facet(r, Slot::Rho, pc, pl));
        let rm = rho.map(|r| disc.eval_facet(r, Slot::Rho, mc, ml));
        let np = perp(f.normal);
        for q in 0..cp.len() {
            let ut = if dot(up[q].val, f.normal) > 0.0 { up[q].val } else { um[q].val };
            let s = dot(np, ut);
            let r1 = rp.as_ref().map_or(1.0, |v| v[q].val[0]);
            let r2 = rm.as_ref().map_or(1.0, |v| v[q].val[0]);
            let (p1, p2) = (perp(ap[q].val), perp(am[q].val));
            cp[q] = vector_coef([-r1 * s * p1[0], -r1 * s * p1[1]], 0.0);
            cm[q] = vector_coef([r2 * s * p2[0], r2 * s * p2[1]], 0.0);
        }
    });
    out.iter_mut().zip(facet).for_each(|(o, f)| *o += f);
    out
}

/// ⟨ρ a, ∇φ⟩ − ∫_Γ [[φ a]] ρ̃ over every density test function; ρ̃ is the
/// upwind trace selected by ū.
pub fn upwind_continuity_rows(disc: &Discretization, rho: &Field, a: &Field, ubar: &Field) -> Vec<f64> {
    let nq = disc.nq();
    let av = disc.eval(a, Slot::U);
    let rv = disc.eval(rho, Slot::Rho);
    let mut out = disc.load(Slot::Rho, |cell, q| {
        let i = cell * nq + q;
        let r = rv[i].val[0];
        Shape { val: [0.0; 2], grad: [[r * av[i].val[0], r * av[i].val[1]], [0.0; 2]] }
    });
    let facet = disc.facet_load(Slot::Rho, &disc.interior, |f, cp, cm| {
        let (pc, pl) = f.plus;
        let (mc, ml) = f.minus.expect("interior facet");
        let at = disc.eval_facet(a, Slot::U, pc, pl);
        let ut = disc.eval_facet(ubar, Slot::U, pc, pl);
        let (rp, rm) = (disc.eval_facet(rho, Slot::Rho, pc, pl), disc.eval_facet(rho, Slot::Rho, mc, ml));
        for q in 0..cp.len() {
            let rt = upwind(dot(ut[q].val, f.normal), rp[q].val[0], rm[q].val[0]);
            let flux = dot(at[q].val, f.normal) * rt;
            cp[q] = scalar_coef(-flux);
            cm[q] = scalar_coef(flux);
        }
    });
    out.iter_mut().zip(facet).for_each(|(o, f)| *o += f);
    out
}

/// Density and thermal rows shared by the fully upwinded schemes.
fn upwind_rho_theta(inp: &StepInputs, zk: &State, zb: &State, a: &Field, ms: Option<&SparseMatrix>) -> (Vec<f64>, Vec<f64>) {
    let (disc, zn, dt, tau) = (inp.disc, inp.zn, inp.cfg.dt, inp.cfg.tau);
    let mut rr = disc.mass(Slot::Rho).matvec(&diff(&zk.rho, &zn.rho));
    axpy_into(&mut rr, -dt, &upwind_continuity_rows(disc, &zb.rho, a, &zb.u));
    let dth = diff(&zk.theta, &zn.theta);
    let mut rt = match ms {
        Some(ms) => ms.transpose_matvec(&dth),
        None => disc.mass(Slot::Theta).matvec(&dth),
    };
    let adv = Advection { v: a, inv_density: None };
    axpy_into(&mut rt, dt, &transport_theta_rows(disc, &adv, &zb.theta, &zb.u, tau));
    (rr, rt)
}

fn approx_residual(inp: &StepInputs, zk: &State, averaged: bool) -> Result<Residual> {
    let (disc, zn, dt, tau) = (inp.disc, inp.zn, inp.cfg.dt, inp.cfg.tau);
    let nq = disc.nq();
    let zb = zn.midpoint(zk);
    let var = time_averaged_variations(disc, zn, zk, inp.c, inp.cfg.time_quadrature)?;
    let a = if averaged { velocity_recovery(disc, &zb.rho, &var.hu)? } else { zb.u.clone() };
    let uv = disc.eval(&zb.u, Slot::U);
    let rv = disc.eval(&zb.rho, Slot::Rho);
    let av = disc.eval(&a, Slot::U);
    let pv = disc.eval(&var.hrho, Slot::Rho);
    let du = disc.eval(&zk.u.lin_comb(1.0, &zn.u, -1.0), Slot::U);
    let ms = (tau > 0.0).then(|| assemble_supg_mass(disc, tau, &uv));
    let b = disc.load(Slot::Theta, |cell, q| scalar_coef(var.t[cell * nq + q]));
    let s = match &ms {
        Some(m) => Field::from_coeffs(&disc.vtheta, Discretization::cached_solve(&disc.supg, m, &b)?)?,
        None => solve_supg_load(disc, 0.0, &uv, &b)?,
    };
    let f0 = inp.c.f0;
    let mut mom = vector_invariant_rows(disc, Some(&zb.rho), &a, &zb.u);
    let vol = disc.load(Slot::U, |cell, q| {
        let i = cell * nq + q;
        let r = rv[i].val[0];
        let ap = perp(av[i].val);
        let gp = pv[i].grad[0];
        vector_coef([-r * (f0 * ap[0] + gp[0]), -r * (f0 * ap[1] + gp[1])], 0.0)
    });
    let press = disc.facet_load(Slot::U, &disc.interior, |f, cp, _| {
        let (pc, pl) = f.plus;
        let (mc, ml) = f.minus.expect("interior facet");
        let ut = disc.eval_facet(&zb.u, Slot::U, pc, pl);
        let (rp, rm) = (disc.eval_facet(&zb.rho, Slot::Rho, pc, pl), disc.eval_facet(&zb.rho, Slot::Rho, mc, ml));
        let (pp, pm) = (disc.eval_facet(&var.hrho, Slot::Rho, pc, pl), disc.eval_facet(&var.hrho, Slot::Rho, mc, ml));
        for q in 0..cp.len() {
            let rt = upwind(dot(ut[q].val, f.normal), rp[q].val[0], rm[q].val[0]);
            let x = (pp[q].val[0] - pm[q].val[0]) * rt;
            cp[q] = vector_coef([x * f.normal[0], x * f.normal[1]], 0.0);
        }
    });
    let therm = transport_u_rows(disc, None, &zb.theta, &s, &zb.u, tau);
    for (m, (v, (p, t))) in mom.iter_mut().zip(vol.iter().zip(press.iter().zip(&therm))) {
        *m += v + p + t;
    }
    let mut ru = disc.load(Slot::U, |cell, q| {
        let i = cell * nq + q;
        let r = rv[i].val[0];
        vector_coef([r * du[i].val[0], r * du[i].val[1]], 0.0)
    });
    axpy_into(&mut ru, -dt, &mom);
    zero_constrained(&disc.vu, &mut ru);
    let (rr, rt) = upwind_rho_theta(inp, zk, &zb, &a, ms.as_ref());
    Ok(Residual { u: ru, rho: rr, theta: rt })
}

fn direct_residual(inp: &StepInputs, zk: &State) -> Result<Residual> {
    let (disc, zn, dt, tau, c) = (inp.disc, inp.zn, inp.cfg.dt, inp.cfg.tau, inp.c);
    if disc.model != Model::Euler {
        return Err(Error::InvalidArgument("nec_direct requires the Euler model".into()));
    }
    let nq = disc.nq();
    let zb = zn.midpoint(zk);
    let uv = disc.eval(&zb.u, Slot::U);
    let rv = disc.eval(&zb.rho, Slot::Rho);
    let tv = disc.eval(&zb.theta, Slot::Theta);
    let mut mom = vector_invariant_rows(disc, None, &zb.u, &zb.u);
    let vol = disc.load(Slot::U, |cell, q| {
        let i = cell * nq + q;
        let (th, gt) = (tv[i].val[0], tv[i].grad[0]);
        let pi = c.exner_unchecked(rv[i].val[0], th);
        let ke = 0.5 * dot(uv[i].val, uv[i].val);
        vector_coef([c.c_p * pi * gt[0], c.c_p * pi * gt[1] - c.g], ke + c.c_p * pi * th)
    });
    let press = disc.facet_load(Slot::U, &disc.interior, |f, cp, _| {
        let (pc, pl) = f.plus;
        let (mc, ml) = f.minus.expect("interior facet");
        let (tp, tm) = (disc.eval_facet(&zb.theta, Slot::Theta, pc, pl), disc.eval_facet(&zb.theta, Slot::Theta, mc, ml));
        let (rp, rm) = (disc.eval_facet(&zb.rho, Slot::Rho, pc, pl), disc.eval_facet(&zb.rho, Slot::Rho, mc, ml));
        for q in 0..cp.len() {
            let (t1, t2) = (tp[q].val[0], tm[q].val[0]);
            let pavg = 0.5 * (c.exner_unchecked(rp[q].val[0], t1) + c.exner_unchecked(rm[q].val[0], t2));
            let x = -c.c_p * (t1 - t2) * pavg;
            cp[q] = vector_coef([x * f.normal[0], x * f.normal[1]], 0.0);
        }
    });
    for (m, (v, p)) in mom.iter_mut().zip(vol.iter().zip(&press)) {
        *m += v + p;
    }
    let mut ru = disc.mass(Slot::U).matvec(&diff(&zk.u, &zn.u));
    axpy_into(&mut ru, -dt, &mom);
    zero_constrained(&disc.vu, &mut ru);
    let ms = (tau > 0.0).then(|| assemble_supg_mass(disc, tau, &uv));
    let (rr, rt) = upwind_rho_theta(inp, zk, &zb, &zb.u, ms.as_ref());
    Ok(Residual { u: ru, rho: rr, theta: rt })
}
