use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hamslice"))
}

#[test]
fn run_writes_diagnostics_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("swe.toml");
    fs::write(&cfg, "case = \"planar_swe\"\ncells = 4\nsteps = 2\npicard = 3\noutput_every = 2\n").unwrap();
    let out = dir.path().join("out");
    let st = bin()
        .args(["run", "--config", cfg.to_str().unwrap(), "--output-dir", out.to_str().unwrap(), "--picard", "2"])
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let csv = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("step,time,energy"));
    assert_eq!(lines.len(), 4);
    assert!(out.join("snapshots/state_000002.bin").exists());
    assert!(out.join("snapshots/grid_000000.csv").exists());
}

#[test]
fn bad_inputs_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    let st = bin().args(["run", "--config", missing.to_str().unwrap()]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));

    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "case = \"planar_swe\"\ncells = 4\nsteps = 1\n").unwrap();
    let st = bin().args(["run", "--config", cfg.to_str().unwrap(), "--scheme", "leapfrog"]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    let st = bin().args(["run", "--config", cfg.to_str().unwrap(), "--scheme", "nec_direct"]).output().unwrap();
    assert_eq!(st.status.code(), Some(2), "nec_direct is Euler only");
}
