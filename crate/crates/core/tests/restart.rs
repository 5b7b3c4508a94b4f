use hamslice::cases::{planar_swe_balanced, straka_falling_bubble, SweParams};
use hamslice::io::{read_snapshot, write_snapshot};
use hamslice::timestepping::{run, run_from, SchemeKind};

#[test]
fn restart_from_snapshot_is_bitwise_identical() {
    let case = straka_falling_bubble(3200.0, 2).unwrap();
    let mut cfg = case.config.clone();
    cfg.dt = 8.0;
    cfg.tau = 4.0;
    cfg.n_steps = 4;
    cfg.picard_iters = 3;
    let full = run(&case, &cfg).unwrap();

    let mut half = cfg.clone();
    half.n_steps = 2;
    let first = run(&case, &half).unwrap();
    let mut buf = Vec::new();
    write_snapshot(&case.disc, &first.final_state, 2, 16.0, &mut buf).unwrap();
    let (z, h) = read_snapshot(&case.disc, buf.as_slice()).unwrap();
    assert_eq!(h.step, 2);
    let second = run_from(&case, &half, &z, h.step, Some(first.records[0].energy)).unwrap();

    assert_eq!(second.final_state, full.final_state);
    assert_eq!(second.records.last().unwrap(), full.records.last().unwrap());
}

#[test]
fn snapshot_for_another_mesh_is_rejected() {
    let a = planar_swe_balanced(&SweParams { cells: 3, ..SweParams::default() }).unwrap();
    let b = planar_swe_balanced(&SweParams { cells: 4, ..SweParams::default() }).unwrap();
    let mut buf = Vec::new();
    write_snapshot(&a.disc, &a.state, 0, 0.0, &mut buf).unwrap();
    assert!(read_snapshot(&b.disc, buf.as_slice()).is_err());
    buf.push(0);
    assert!(read_snapshot(&a.disc, buf.as_slice()).is_err());
    buf.truncate(buf.len() - 9);
    assert!(read_snapshot(&a.disc, buf.as_slice()).is_err());
}

#[test]
fn swe_jet_stays_close_to_balance() {
    let case = planar_swe_balanced(&SweParams { cells: 8, ..SweParams::default() }).unwrap();
    let mut cfg = case.config.clone();
    cfg.n_steps = 10;
    let out = run(&case, &cfg).unwrap();
    let du = out.final_state.u.coeffs.iter().zip(&case.state.u.coeffs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    // The jet peaks at 20 m/s; balance keeps the drift far below that.
    assert!(du < 0.5, "{du}");
    assert_eq!(cfg.scheme, SchemeKind::EcSupg);
}
