//! Bracket building blocks: projections, the SUPG term and modified mass
//! solve, thermal transport, velocity recovery and vorticities.

use crate::discretization::{contract, scalar_coef, vector_coef, Discretization, Slot, SupgMode};
use crate::error::{Error, Result};
use crate::fem::{Field, Shape};
use crate::mesh::Facet;

/// SUPG contribution S(u; γ) from a velocity value and ∇γ.
#[inline]
pub fn supg_s(mode: SupgMode, u: [f64; 2], grad: [f64; 2]) -> f64 {
    match mode {
        SupgMode::Full => u[0] * grad[0] + u[1] * grad[1],
        SupgMode::Vertical => u[1] * grad[1],
    }
}

/// Coefficient of ⟨x, γ + τS(u; γ)⟩ for contraction with scalar test shapes.
#[inline]
pub fn supg_coef(mode: SupgMode, x: f64, u: [f64; 2], tau: f64) -> Shape {
    let g = match mode {
        SupgMode::Full => [tau * x * u[0], tau * x * u[1]],
        SupgMode::Vertical => [0.0, tau * x * u[1]],
    };
    Shape { val: [x, 0.0], grad: [g, [0.0; 2]] }
}

/// Upwind trace, with `un_plus` the flow through the plus cell's outward
/// normal: the plus value when the flow leaves the plus cell.
#[inline]
pub fn upwind(un_plus: f64, plus: f64, minus: f64) -> f64 {
    if un_plus > 0.0 {
        plus
    } else {
        minus
    }
}

#[inline]
pub fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// v⊥ = (−v_z, v_x).
#[inline]
pub fn perp(v: [f64; 2]) -> [f64; 2] {
    [-v[1], v[0]]
}

/// L² projection of quadrature-point values into a scalar space.
pub fn l2_project(disc: &Discretization, slot: Slot, values: &[f64]) -> Result<Field> {
    let nq = disc.nq();
    let b = disc.load(slot, |cell, q| scalar_coef(values[cell * nq + q]));
    Field::from_coeffs(disc.space(slot), disc.mass_solve(slot, &b)?)
}

/// L² projection into the slip-constrained velocity space.
pub fn l2_project_vector(disc: &Discretization, values: &[[f64; 2]]) -> Result<Field> {
    let nq = disc.nq();
    let b = disc.load(Slot::U, |cell, q| vector_coef(values[cell * nq + q], 0.0));
    Field::from_coeffs(&disc.vu, disc.mass_solve(Slot::U, &b)?)
}

/// S(u; γ) for a thermal field γ at all cell quadrature points.
pub fn supg_s_values(disc: &Discretization, u: &Field, gamma: &Field) -> Vec<f64> {
    let (uv, gv) = (disc.eval(u, Slot::U), disc.eval(gamma, Slot::Theta));
    let mode = disc.supg_mode();
    uv.iter().zip(&gv).map(|(u, g)| supg_s(mode, u.val, g.grad[0])).collect()
}

/// (M_s)_{ij} = ⟨γ_j + τS(u; γ_j), γ_i⟩ for velocity values `u` at cell
/// quadrature points.
pub fn assemble_supg_mass(disc: &Discretization, tau: f64, u: &[Shape]) -> crate::linalg::SparseMatrix {
    let mode = disc.supg_mode();
    let nq = disc.nq();
    if tau > 0.0 {
        let c1 = u.iter().map(|s| match mode {
            SupgMode::Full => s.div().abs(),
            SupgMode::Vertical => s.grad[1][1].abs(),
        });
        let c1 = c1.fold(0.0, f64::max);
        if c1 * tau / 2.0 >= 1.0 {
            log::warn!("SUPG coercivity guard violated: c1*tau/2 = {}", c1 * tau / 2.0);
        }
    }
    disc.bilinear(Slot::Theta, Slot::Theta, |cell, q, trial, test| {
        let uq = u[cell * nq + q].val;
        (trial.val[0] + tau * supg_s(mode, uq, trial.grad[0])) * test.val[0]
    })
}

/// Solve ⟨s + τS(u; s), σ⟩ = b(σ) for all σ, given the load vector b.
pub fn solve_supg_load(disc: &Discretization, tau: f64, u: &[Shape], b: &[f64]) -> Result<Field> {
    if tau == 0.0 {
        return Field::from_coeffs(&disc.vtheta, disc.mass_solve(Slot::Theta, b)?);
    }
    let ms = assemble_supg_mass(disc, tau, u);
    let s = Discretization::cached_solve(&disc.supg, &ms, b).map_err(|e| match e {
        Error::Singular { .. } | Error::SolveResidual { .. } => {
            Error::InvalidArgument(format!("SUPG mass solve failed ({e}); reduce tau"))
        }
        e => e,
    })?;
    Field::from_coeffs(&disc.vtheta, s)
}

/// SUPG operator applied to a thermal field γ: b = ⟨γ, σ⟩.
pub fn solve_supg_operator(disc: &Discretization, tau: f64, u: &Field, gamma: &Field) -> Result<Field> {
    let b = disc.mass(Slot::Theta).matvec(&gamma.coeffs);
    solve_supg_load(disc, tau, &disc.eval(u, Slot::U), &b)
}

/// Advecting velocity `a·v` with v ∈ V_u and an optional cellwise weight a.
pub struct Advection<'a> {
    pub v: &'a Field,
    /// Pointwise weight given as 1/ρ for a density field ρ.
    pub inv_density: Option<&'a Field>,
}

/// Per-side data at one facet point.
struct Trace {
    theta: f64,
    weight: f64,
    ubar: [f64; 2],
}

fn facet_traces(
    disc: &Discretization,
    f: &Facet,
    theta: &Field,
    inv_density: Option<&Field>,
    ubar: &Field,
) -> (Vec<Trace>, Vec<Trace>) {
    let side = |(cell, lf)| {
        let th = disc.eval_facet(theta, Slot::Theta, cell, lf);
        let ub = disc.eval_facet(ubar, Slot::U, cell, lf);
        let rho = inv_density.map(|r| disc.eval_facet(r, Slot::Rho, cell, lf));
        (0..disc.nfq())
            .map(|q| Trace {
                theta: th[q].val[0],
                weight: rho.as_ref().map_or(1.0, |r| 1.0 / r[q].val[0]),
                ubar: ub[q].val,
            })
            .collect::<Vec<_>>()
    };
    (side(f.plus), side(f.minus.expect("interior facet")))
}

/// t_i = L(a v, θ; γ_i + τS(ū; γ_i)) for every thermal basis function γ_i.
/// The facet upwind value is selected by ū.
pub fn transport_theta_rows(disc: &Discretization, adv: &Advection, theta: &Field, ubar: &Field, tau: f64) -> Vec<f64> {
    let mode = disc.supg_mode();
    let nq = disc.nq();
    let vv = disc.eval(adv.v, Slot::U);
    let tv = disc.eval(theta, Slot::Theta);
    let uv = disc.eval(ubar, Slot::U);
    let rv = adv.inv_density.map(|r| disc.eval(r, Slot::Rho));
    let mut out = disc.load(Slot::Theta, |cell, q| {
        let i = cell * nq + q;
        let a = rv.as_ref().map_or(1.0, |r| 1.0 / r[i].val[0]);
        supg_coef(mode, a * dot(vv[i].val, tv[i].grad[0]), uv[i].val, tau)
    });
    if mode == SupgMode::Vertical {
        let facet = disc.facet_load(Slot::Theta, &disc.vertical, |f, cp, cm| {
            let (p, m) = facet_traces(disc, f, theta, adv.inv_density, ubar);
            let vt = disc.eval_facet(adv.v, Slot::U, f.plus.0, f.plus.1);
            for q in 0..cp.len() {
                let vn = dot(vt[q].val, f.normal);
                let tt = upwind(dot(p[q].ubar, f.normal), p[q].theta, m[q].theta);
                let xp = vn * p[q].weight * (tt - p[q].theta);
                let xm = -vn * m[q].weight * (tt - m[q].theta);
                cp[q] = supg_coef(mode, xp, p[q].ubar, tau);
                cm[q] = supg_coef(mode, xm, m[q].ubar, tau);
            }
        });
        out.iter_mut().zip(facet).for_each(|(o, f)| *o += f);
    }
    out
}

/// m_i = L(a w_i, θ; σ̂) with σ̂ = s + τS(ū; s) for a fixed thermal field s,
/// over every velocity basis function w_i. The upwind value is selected by ū.
pub fn transport_u_rows(
    disc: &Discretization,
    inv_density: Option<&Field>,
    theta: &Field,
    s: &Field,
    ubar: &Field,
    tau: f64,
) -> Vec<f64> {
    let mode = disc.supg_mode();
    let nq = disc.nq();
    let tv = disc.eval(theta, Slot::Theta);
    let sv = disc.eval(s, Slot::Theta);
    let uv = disc.eval(ubar, Slot::U);
    let rv = inv_density.map(|r| disc.eval(r, Slot::Rho));
    let mut out = disc.load(Slot::U, |cell, q| {
        let i = cell * nq + q;
        let a = rv.as_ref().map_or(1.0, |r| 1.0 / r[i].val[0]);
        let sig = sv[i].val[0] + tau * supg_s(mode, uv[i].val, sv[i].grad[0]);
        let g = tv[i].grad[0];
        vector_coef([a * sig * g[0], a * sig * g[1]], 0.0)
    });
    if mode == SupgMode::Vertical {
        let facet = disc.facet_load(Slot::U, &disc.vertical, |f, cp, _| {
            let (p, m) = facet_traces(disc, f, theta, inv_density, ubar);
            let (cm, lm) = f.minus.expect("interior facet");
            let sp = disc.eval_facet(s, Slot::Theta, f.plus.0, f.plus.1);
            let sm = disc.eval_facet(s, Slot::Theta, cm, lm);
            for q in 0..cp.len() {
                let sigp = sp[q].val[0] + tau * supg_s(mode, p[q].ubar, sp[q].grad[0]);
                let sigm = sm[q].val[0] + tau * supg_s(mode, m[q].ubar, sm[q].grad[0]);
                let tt = upwind(dot(p[q].ubar, f.normal), p[q].theta, m[q].theta);
                let x = p[q].weight * sigp * (tt - p[q].theta) - m[q].weight * sigm * (tt - m[q].theta);
                cp[q] = vector_coef([x * f.normal[0], x * f.normal[1]], 0.0);
            }
        });
        out.iter_mut().zip(facet).for_each(|(o, f)| *o += f);
    }
    zero_constrained_rows(disc, &mut out);
    out
}

/// Scalar L(a v, θ; σ + τS(ū; σ)) for a thermal field σ.
pub fn transport_l(disc: &Discretization, adv: &Advection, theta: &Field, sigma: &Field, ubar: &Field, tau: f64) -> f64 {
    let rows = transport_theta_rows(disc, adv, theta, ubar, tau);
    rows.iter().zip(&sigma.coeffs).map(|(a, b)| a * b).sum()
}

pub(crate) fn zero_constrained_rows(disc: &Discretization, v: &mut [f64]) {
    crate::discretization::zero_constrained(&disc.vu, v);
}

/// 𝕌 with ⟨ρ v, 𝕌⟩ = ⟨v, m⟩ for all slip-conforming v.
pub fn velocity_recovery(disc: &Discretization, rho: &Field, m: &Field) -> Result<Field> {
    let rv = disc.eval(rho, Slot::Rho);
    if let Some(bad) = rv.iter().find(|s| !(s.val[0] > 0.0)) {
        return Err(Error::NonPositive(format!("density {} in velocity recovery", bad.val[0])));
    }
    let w: Vec<f64> = rv.iter().map(|s| s.val[0]).collect();
    let a = disc.mass_matrix(Slot::U, Some(&w)).constrain_symmetric(disc.vu.constrained());
    let mut b = disc.mass(Slot::U).matvec(&m.coeffs);
    zero_constrained_rows(disc, &mut b);
    Field::from_coeffs(&disc.vu, Discretization::cached_solve(&disc.weighted_u, &a, &b)?)
}

/// Right-hand side −⟨∇⊥η, u⟩ + ⟨⟨η, n⊥·u⟩⟩_∂Ω + ⟨η, f⟩.
fn vorticity_rhs(disc: &Discretization, u: &Field, f: f64) -> Vec<f64> {
    let nq = disc.nq();
    let uv = disc.eval(u, Slot::U);
    let mut b = disc.load(Slot::Q, |cell, q| {
        let v = uv[cell * nq + q].val;
        Shape { val: [f, 0.0], grad: [[-v[1], v[0]], [0.0; 2]] }
    });
    if !disc.boundary.is_empty() {
        let bb = disc.facet_load(Slot::Q, &disc.boundary, |fc, cp, _| {
            let v = disc.eval_facet(u, Slot::U, fc.plus.0, fc.plus.1);
            for (c, vq) in cp.iter_mut().zip(&v) {
                *c = scalar_coef(dot(perp(fc.normal), vq.val));
            }
        });
        b.iter_mut().zip(bb).for_each(|(a, c)| *a += c);
    }
    b
}

/// q ∈ V_q with ⟨η, qρ⟩ = −⟨∇⊥η, u⟩ + ⟨⟨η, n⊥·u⟩⟩ + ⟨η, f⟩.
pub fn diagnostic_vorticity(disc: &Discretization, u: &Field, rho: &Field, f: f64) -> Result<Field> {
    let rv = disc.eval(rho, Slot::Rho);
    if let Some(bad) = rv.iter().find(|s| !(s.val[0] > 0.0)) {
        return Err(Error::NonPositive(format!("density {} in vorticity solve", bad.val[0])));
    }
    let w: Vec<f64> = rv.iter().map(|s| s.val[0]).collect();
    let a = disc.mass_matrix(Slot::Q, Some(&w));
    let b = vorticity_rhs(disc, u, f);
    Field::from_coeffs(&disc.vq, Discretization::cached_solve(&disc.weighted_q, &a, &b)?)
}

/// ω ∈ V_q with ⟨η, ω⟩ = −⟨∇⊥η, u⟩ + ⟨⟨η, n⊥·u⟩⟩.
pub fn relative_vorticity(disc: &Discretization, u: &Field) -> Result<Field> {
    let b = vorticity_rhs(disc, u, 0.0);
    Field::from_coeffs(&disc.vq, disc.mass_solve(Slot::Q, &b)?)
}

/// ⟨a, b⟩ for two fields by quadrature (scalar or vector).
pub fn inner(disc: &Discretization, a: &Field, sa: Slot, b: &Field, sb: Slot) -> f64 {
    let (av, bv) = (disc.eval(a, sa), disc.eval(b, sb));
    let nq = disc.nq();
    let mut s = 0.0;
    for (i, (x, y)) in av.iter().zip(&bv).enumerate() {
        s += disc.qweight(i % nq) * (x.val[0] * y.val[0] + x.val[1] * y.val[1]);
    }
    s
}

/// Contract a coefficient with a shape (re-export for oracles in tests).
pub fn contract_shape(c: &Shape, s: &Shape) -> f64 {
    contract(c, s)
}
