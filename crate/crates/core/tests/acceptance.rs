//! End-to-end acceptance runs. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.
//!
//! The falling-bubble runs take several minutes in total on one core.

use hamslice::cases::{planar_swe_balanced, straka_falling_bubble, CaseSetup, SweParams};
use hamslice::diagnostics::{complex_check, l2_error, DiagnosticsRecord};
use hamslice::discretization::Model;
use hamslice::timestepping::{run, RunConfig, RunOutput, SchemeKind};
use hamslice::verify::{antisymmetry_checks, coercivity_checks, small_disc, tau_zero_reduction, variation_order};

struct Line {
    id: usize,
    pass: bool,
    text: String,
}

fn max_energy_err(out: &RunOutput) -> f64 {
    out.records.iter().map(|r| r.rel_energy_err.abs()).fold(0.0, f64::max)
}

fn max_mass_drift(records: &[DiagnosticsRecord]) -> f64 {
    let m0 = records[0].mass;
    records.iter().map(|r| ((r.mass - m0) / m0).abs()).fold(0.0, f64::max)
}

fn max_overshoot(out: &RunOutput) -> f64 {
    let t0 = out.records[0].theta_max;
    out.records.iter().map(|r| (r.theta_max - t0).max(0.0)).fold(0.0, f64::max)
}

/// Largest per-step ratio of DG_u series; steps where both vanish count as 0.
fn max_dg_u_ratio(a: &RunOutput, b: &RunOutput) -> f64 {
    a.records
        .iter()
        .zip(&b.records)
        .map(|(x, y)| if y.dg_u > 0.0 { x.dg_u / y.dg_u } else if x.dg_u > 0.0 { f64::INFINITY } else { 0.0 })
        .fold(0.0, f64::max)
}

fn bubble_run(case: &CaseSetup, scheme: SchemeKind, picard: usize, tau: Option<f64>) -> RunOutput {
    let mut cfg = RunConfig::new(Model::Euler, scheme, 2.0, 100, picard);
    if let Some(t) = tau {
        cfg.tau = t;
    }
    let t = std::time::Instant::now();
    let out = run(case, &cfg).unwrap_or_else(|e| panic!("{} run failed: {e}", scheme.name()));
    eprintln!("  {} (picard {picard}, tau {}) took {:.0?}", scheme.name(), cfg.tau, t.elapsed());
    out
}

#[test]
fn acceptance() {
    let mut lines: Vec<Line> = Vec::new();
    let mut push = |id: usize, pass: bool, text: String| lines.push(Line { id, pass, text });
    let mut mass = Vec::new();

    // Falling bubble at 400 m.
    let case = straka_falling_bubble(400.0, 2).expect("straka case");
    let ec = bubble_run(&case, SchemeKind::EcSupg, 32, None);
    let nec = bubble_run(&case, SchemeKind::NecBracket, 32, None);
    let mid = bubble_run(&case, SchemeKind::EcFullUpwindApprox, 4, None);
    let avg = bubble_run(&case, SchemeKind::EcFullUpwindAveraged, 4, None);
    let tau0 = bubble_run(&case, SchemeKind::EcSupg, 32, Some(0.0));
    let direct = bubble_run(&case, SchemeKind::NecDirect, 32, None);
    for (name, out) in [("ec_supg", &ec), ("nec_bracket", &nec), ("approx", &mid), ("averaged", &avg), ("ec_tau0", &tau0), ("nec_direct", &direct)] {
        mass.push((format!("bubble {name}"), max_mass_drift(&out.records)));
    }

    let e_ec = max_energy_err(&ec);
    push(1, e_ec <= 1e-9, format!("EC_SUPG energy error {e_ec:.3e} <= 1e-9"));

    let e_nec = max_energy_err(&nec);
    let gap = e_nec / e_ec;
    push(2, gap >= 100.0, format!("NEC_Bracket/EC energy error ratio {gap:.3e} >= 100 (NEC {e_nec:.3e})"));

    let (e_mid, e_avg) = (max_energy_err(&mid), max_energy_err(&avg));
    let agree = (e_mid / e_avg).max(e_avg / e_mid);
    let above = e_mid.min(e_avg) / e_ec;
    push(
        3,
        agree <= 3.0 && above >= 10.0,
        format!("approx midpoint {e_mid:.3e} vs averaged {e_avg:.3e}: factor {agree:.2} <= 3, min/EC {above:.3e} >= 10"),
    );

    // Planar shallow water jet on three meshes.
    let mut errs = Vec::new();
    for cells in [16, 32, 64] {
        let p = SweParams { cells, degree: 1, ..SweParams::default() };
        let swe = planar_swe_balanced(&p).expect("swe case");
        let t = std::time::Instant::now();
        let out = run(&swe, &swe.config).expect("swe run");
        eprintln!("  swe {cells}^2 took {:.0?}", t.elapsed());
        errs.push(l2_error(&swe.disc, &out.final_state.theta, &swe.state.theta).expect("l2 error"));
        mass.push((format!("swe {cells}^2"), max_mass_drift(&out.records)));
    }
    let ratios = [errs[0] / errs[1], errs[1] / errs[2]];
    push(
        4,
        ratios.iter().all(|r| (3.3..=4.7).contains(r)),
        format!("SWE theta error ratios {:.3} {:.3} in [3.3, 4.7] (errors {:.3e} {:.3e} {:.3e})", ratios[0], ratios[1], errs[0], errs[1], errs[2]),
    );

    let anti = antisymmetry_checks(0.5).expect("antisymmetry");
    let ok = anti.iter().all(|c| c.pass());
    let detail: Vec<String> = anti.iter().map(|c| format!("{} {:.2e}", c.name, c.value)).collect();
    push(5, ok, format!("bracket antisymmetry <= 1e-12, NEC witness >= 1e-6: {}", detail.join(", ")));

    let red = tau_zero_reduction().expect("tau=0 reduction");
    push(6, red <= 1e-12, format!("tau=0 step vs unstabilized bracket step {red:.3e} <= 1e-12"));

    let mut ok = true;
    let mut detail = Vec::new();
    for (model, mode) in [(Model::ThermalSwe, "CG"), (Model::Euler, "CP")] {
        let (margin, free) = coercivity_checks(model, 20, 3).expect("coercivity");
        ok &= margin >= -1e-10 && free >= 1.0 - 1e-10;
        detail.push(format!("{mode} margin {margin:.3e} div-free lambda {free:.6}"));
    }
    push(7, ok, format!("coercivity over 20 random fields: {}", detail.join(", ")));

    let (worst_name, worst_mass) = mass.iter().fold((String::new(), 0.0f64), |a, (n, m)| if *m > a.1 { (n.clone(), *m) } else { a });
    push(8, worst_mass <= 1e-12, format!("mass drift {worst_mass:.3e} <= 1e-12 over {} runs (worst: {worst_name})", mass.len()));

    let mut worst = 0.0f64;
    for k in [2, 3] {
        for model in [Model::ThermalSwe, Model::Euler] {
            let d = small_disc(model, k, 4.0).expect("disc");
            worst = worst.max(complex_check(&d, 3, 17).expect("complex").max());
        }
    }
    push(9, worst <= 1e-12, format!("complex/commuting residual {worst:.3e} <= 1e-12 (k=2,3)"));

    let (o_supg, o_tau0) = (max_overshoot(&ec), max_overshoot(&tau0));
    let (dg_direct, dg_bracket) = (max_dg_u_ratio(&ec, &direct), max_dg_u_ratio(&ec, &nec));
    push(
        10,
        o_supg < o_tau0 && dg_direct <= 1.1,
        format!(
            "theta overshoot SUPG {o_supg:.3e} < tau=0 {o_tau0:.3e}; max DG_u SUPG/NEC_Direct {dg_direct:.3} <= 1.1 \
             (SUPG/NEC_Bracket {dg_bracket:.3}, not scored)"
        ),
    );

    let mut ok = true;
    let mut detail = Vec::new();
    for model in [Model::Euler, Model::ThermalSwe] {
        let (order, rel) = variation_order(model, 23).expect("variations");
        ok &= order >= 1.8;
        detail.push(format!("{} order {order:.2} (rel err {rel:.1e})", model.name()));
    }
    push(11, ok, format!("variations vs central FD of H, observed order >= 1.8: {}", detail.join(", ")));

    lines.sort_by_key(|l| l.id);
    for l in &lines {
        println!("[{}] C{} {}", if l.pass { "PASS" } else { "FAIL" }, l.id, l.text);
    }
    let failed: Vec<usize> = lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
