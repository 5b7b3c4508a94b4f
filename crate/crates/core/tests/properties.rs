use proptest::prelude::*;

use hamslice::cases::{planar_swe_balanced, straka_falling_bubble, SweParams};
use hamslice::diagnostics::{random_state, total_mass, DiagnosticsRecord};
use hamslice::discretization::{Discretization, Model};
use hamslice::io::{read_diagnostics, read_snapshot, write_diagnostics, write_snapshot};
use hamslice::linalg::TripletBuilder;
use hamslice::mesh::Mesh;
use hamslice::operators::upwind;
use hamslice::physics::total_energy;
use hamslice::timestepping::{RunConfig, SchemeKind, Stepper};

fn mass_drift(scheme: SchemeKind, seed: u64) -> f64 {
    let case = straka_falling_bubble(3200.0, 2).unwrap();
    let z = random_state(&case.disc, 1.0, 300.0, seed);
    let cfg = RunConfig::new(Model::Euler, scheme, 1.0, 1, 3);
    let s = Stepper::new(case.disc.clone(), case.constants.clone(), cfg, &case.background).unwrap();
    let (z1, _) = s.step(&z).unwrap();
    let (m0, m1) = (total_mass(&case.disc, &z.rho), total_mass(&case.disc, &z1.rho));
    ((m1 - m0) / m0).abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn upwind_picks_the_inflow_side(un in -10.0f64..10.0, a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let v = upwind(un, a, b);
        prop_assert_eq!(v, if un > 0.0 { a } else { b });
        // Swapping sides and flipping the normal gives the same trace,
        // except on the tie un = 0.
        if un != 0.0 {
            prop_assert_eq!(upwind(-un, b, a), v);
        }
    }

    #[test]
    fn assembly_sums_duplicates(entries in prop::collection::vec((0usize..6, 0usize..5, -3.0f64..3.0), 0..60)) {
        let mut t = TripletBuilder::new(6, 5);
        let mut dense = [[0.0f64; 5]; 6];
        for &(i, j, v) in &entries {
            t.push(i, j, v);
            dense[i][j] += v;
        }
        let a = t.finalize();
        for (i, row) in dense.iter().enumerate() {
            for (j, &d) in row.iter().enumerate() {
                prop_assert!((a.get(i, j) - d).abs() <= 1e-12);
            }
        }
        for i in 0..6 {
            let cols: Vec<usize> = a.row(i).map(|(j, _)| j).collect();
            prop_assert!(cols.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn energy_is_quadratic_in_velocity(seed in 0u64..1000, s in 0.1f64..3.0) {
        let mesh = Mesh::new(3, 3, 3000.0, 3000.0, true).unwrap();
        let d = Discretization::new(&mesh, 2, Model::ThermalSwe).unwrap();
        let c = hamslice::physics::ModelConstants::thermal_swe(9.8, 0.0);
        let z = random_state(&d, 100.0, 9.8, seed);
        let mut still = z.clone();
        still.u.coeffs.iter_mut().for_each(|v| *v = 0.0);
        let mut scaled = z.clone();
        scaled.u.coeffs.iter_mut().for_each(|v| *v *= s);
        let (e0, e1, es) = (total_energy(&d, &still, &c), total_energy(&d, &z, &c), total_energy(&d, &scaled, &c));
        prop_assert!(((es - e0) - s * s * (e1 - e0)).abs() <= 1e-10 * e1.abs());
    }

    #[test]
    fn snapshot_roundtrip(seed in 0u64..10_000, step in 0usize..1000) {
        let p = SweParams { cells: 3, ..SweParams::default() };
        let case = planar_swe_balanced(&p).unwrap();
        let z = random_state(&case.disc, 5000.0, 9.8, seed);
        let mut buf = Vec::new();
        write_snapshot(&case.disc, &z, step, step as f64 * 600.0, &mut buf).unwrap();
        let (back, h) = read_snapshot(&case.disc, buf.as_slice()).unwrap();
        prop_assert_eq!(back, z);
        prop_assert_eq!(h.step, step);
    }

    #[test]
    fn diagnostics_roundtrip(vals in prop::collection::vec(-1e12f64..1e12, 10), step in 0usize..100_000) {
        let r = DiagnosticsRecord {
            step,
            time: vals[0].abs(),
            energy: vals[1],
            kinetic: vals[2],
            internal: vals[3],
            potential: vals[4],
            rel_energy_err: vals[5] * 1e-20,
            mass: vals[6],
            dg_rho: vals[7].abs(),
            dg_u: vals[8].abs(),
            theta_min: vals[9],
            theta_max: vals[9] + 1.0,
        };
        let mut buf = Vec::new();
        write_diagnostics(std::slice::from_ref(&r), &mut buf).unwrap();
        let back = read_diagnostics(buf.as_slice()).unwrap();
        prop_assert_eq!(back, vec![r]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    #[test]
    fn every_scheme_conserves_mass(seed in 0u64..1000) {
        for scheme in [SchemeKind::EcSupg, SchemeKind::NecBracket, SchemeKind::EcFullUpwindApprox, SchemeKind::EcFullUpwindAveraged, SchemeKind::NecDirect] {
            let drift = mass_drift(scheme, seed);
            prop_assert!(drift <= 1e-13, "{}: {drift:e}", scheme.name());
        }
    }
}
