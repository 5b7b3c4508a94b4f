//! Run configuration files, diagnostics tables and state snapshots.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Deserialize;

use crate::cases::{planar_swe_balanced, rising_bubble, straka_falling_bubble, CaseSetup, SweParams};
use crate::diagnostics::DiagnosticsRecord;
use crate::discretization::{Discretization, Model, Slot};
use crate::error::{Error, Result};
use crate::fem::Field;
use crate::mesh::Mesh;
use crate::physics::State;
use crate::timestepping::{RunConfig, SchemeKind};

/// Contents of a TOML run file. Unset keys fall back to the case defaults.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// One of `straka`, `rising_bubble`, `planar_swe`.
    pub case: String,
    /// Cell size in metres (slice cases).
    pub resolution: Option<f64>,
    /// Cells per side (planar_swe).
    pub cells: Option<usize>,
    pub degree: Option<usize>,
    pub scheme: Option<String>,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub picard: Option<usize>,
    /// SUPG parameter; defaults to dt/2.
    pub tau: Option<f64>,
    pub linear_tol: Option<f64>,
    pub output_every: Option<usize>,
    pub time_quadrature: Option<usize>,
    pub length: Option<f64>,
    pub g: Option<f64>,
    pub f0: Option<f64>,
    pub h0: Option<f64>,
    pub u0: Option<f64>,
    pub eps: Option<f64>,
    pub bump_height: Option<f64>,
    pub bump_radius: Option<f64>,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        Config::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn swe_params(&self) -> SweParams {
        let d = SweParams::default();
        SweParams {
            length: self.length.unwrap_or(d.length),
            cells: self.cells.unwrap_or(d.cells),
            degree: self.degree.unwrap_or(d.degree),
            g: self.g.unwrap_or(d.g),
            f0: self.f0.unwrap_or(d.f0),
            h0: self.h0.unwrap_or(d.h0),
            u0: self.u0.unwrap_or(d.u0),
            eps: self.eps.unwrap_or(d.eps),
            bump_height: self.bump_height.unwrap_or(d.bump_height),
            bump_radius: self.bump_radius.unwrap_or(d.bump_radius),
            dt: self.dt.unwrap_or(d.dt),
        }
    }

    /// Build the case and the validated run configuration.
    pub fn build(&self) -> Result<(CaseSetup, RunConfig)> {
        let slice_only = [("cells", self.cells.is_some())];
        let swe_only = [
            ("resolution", self.resolution.is_some()),
            ("length", self.length.is_some()),
            ("g", self.g.is_some()),
            ("f0", self.f0.is_some()),
            ("h0", self.h0.is_some()),
            ("u0", self.u0.is_some()),
            ("eps", self.eps.is_some()),
            ("bump_height", self.bump_height.is_some()),
            ("bump_radius", self.bump_radius.is_some()),
        ];
        let reject = |keys: &[(&str, bool)]| -> Result<()> {
            match keys.iter().find(|(_, set)| *set) {
                Some((k, _)) => Err(Error::Config(format!("key '{k}' does not apply to case '{}'", self.case))),
                None => Ok(()),
            }
        };
        let case = match self.case.as_str() {
            "straka" | "rising_bubble" => {
                reject(&slice_only)?;
                reject(&swe_only[1..])?;
                let res = self.resolution.ok_or_else(|| Error::Config("missing key 'resolution'".into()))?;
                if self.case == "straka" {
                    straka_falling_bubble(res, self.degree.unwrap_or(2))?
                } else {
                    rising_bubble(res, self.degree.unwrap_or(3))?
                }
            }
            "planar_swe" => {
                reject(&swe_only[..1])?;
                planar_swe_balanced(&self.swe_params())?
            }
            other => return Err(Error::Config(format!("unknown case '{other}'"))),
        };
        let mut cfg = case.config.clone();
        if let Some(s) = &self.scheme {
            cfg.scheme = SchemeKind::parse(s)?;
        }
        if let Some(dt) = self.dt {
            if self.steps.is_none() && dt > 0.0 {
                cfg.n_steps = (cfg.n_steps as f64 * cfg.dt / dt).round() as usize;
            }
            cfg.dt = dt;
        }
        cfg.tau = self.tau.unwrap_or(cfg.dt / 2.0);
        cfg.n_steps = self.steps.unwrap_or(cfg.n_steps);
        cfg.picard_iters = self.picard.unwrap_or(cfg.picard_iters);
        cfg.linear_tol = self.linear_tol.unwrap_or(cfg.linear_tol);
        cfg.output_every = self.output_every.unwrap_or(cfg.output_every);
        cfg.time_quadrature = self.time_quadrature.unwrap_or(cfg.time_quadrature);
        cfg.validate()?;
        Ok((case, cfg))
    }
}

pub const DIAGNOSTICS_HEADER: [&str; 12] = [
    "step",
    "time",
    "energy",
    "kinetic",
    "internal",
    "potential",
    "rel_energy_err",
    "mass",
    "dg_rho",
    "dg_u",
    "theta_min",
    "theta_max",
];

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        k => Error::Config(format!("csv: {k:?}")),
    }
}

/// Diagnostics table with 17 significant digits and LF line endings.
pub fn write_diagnostics<W: Write>(records: &[DiagnosticsRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(DIAGNOSTICS_HEADER).map_err(csv_err)?;
    for r in records {
        let vals = [
            r.time,
            r.energy,
            r.kinetic,
            r.internal,
            r.potential,
            r.rel_energy_err,
            r.mass,
            r.dg_rho,
            r.dg_u,
            r.theta_min,
            r.theta_max,
        ];
        let mut row = vec![r.step.to_string()];
        row.extend(vals.iter().map(|v| format!("{v:.16e}")));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_diagnostics_file(records: &[DiagnosticsRecord], path: &Path) -> Result<()> {
    write_diagnostics(records, BufWriter::new(File::create(path)?))
}

pub fn read_diagnostics<R: Read>(input: R) -> Result<Vec<DiagnosticsRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(DIAGNOSTICS_HEADER) {
        return Err(Error::Config(format!("unexpected diagnostics header {header:?}")));
    }
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(csv_err)?;
        let f = |i: usize| -> Result<f64> {
            row[i].parse().map_err(|_| Error::Config(format!("bad number '{}' in column {}", &row[i], DIAGNOSTICS_HEADER[i])))
        };
        out.push(DiagnosticsRecord {
            step: row[0].parse().map_err(|_| Error::Config(format!("bad step '{}'", &row[0])))?,
            time: f(1)?,
            energy: f(2)?,
            kinetic: f(3)?,
            internal: f(4)?,
            potential: f(5)?,
            rel_energy_err: f(6)?,
            mass: f(7)?,
            dg_rho: f(8)?,
            dg_u: f(9)?,
            theta_min: f(10)?,
            theta_max: f(11)?,
        });
    }
    Ok(out)
}

/// Metadata stored in a snapshot header.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    pub mesh: Mesh,
    pub degree: usize,
    pub model: Model,
    pub step: usize,
    pub time: f64,
    pub families: [String; 3],
    pub lengths: [usize; 3],
}

fn model_from_name(s: &str) -> Result<Model> {
    [Model::Euler, Model::ThermalSwe]
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| Error::Snapshot(format!("unknown model '{s}'")))
}

/// Text header of `key value` lines closed by `end`, then the u, ρ and θ
/// coefficients as little-endian f64.
pub fn write_snapshot<W: Write>(disc: &Discretization, state: &State, step: usize, time: f64, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    let m = &disc.mesh;
    writeln!(w, "hamslice-snapshot 1")?;
    writeln!(w, "model {}", state.model.name())?;
    writeln!(w, "nx {}\nnz {}\nlx {:?}\nlz {:?}\nperiodic_z {}", m.nx, m.nz, m.lx, m.lz, m.periodic_z)?;
    writeln!(w, "degree {}", disc.degree)?;
    writeln!(w, "step {step}\ntime {time:?}")?;
    for (name, f) in [("u", &state.u), ("rho", &state.rho), ("theta", &state.theta)] {
        writeln!(w, "{name} {} {}", f.space.family.name(), f.coeffs.len())?;
    }
    writeln!(w, "end")?;
    for f in [&state.u, &state.rho, &state.theta] {
        for v in &f.coeffs {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn parse_header<R: BufRead>(r: &mut R) -> Result<SnapshotHeader> {
    let mut kv = std::collections::HashMap::new();
    let mut line = String::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(Error::Snapshot("header not terminated".into()));
        }
        let l = line.trim_end_matches('\n');
        if l == "end" {
            break;
        }
        let (k, v) = l.split_once(' ').ok_or_else(|| Error::Snapshot(format!("bad header line '{l}'")))?;
        kv.insert(k.to_string(), v.to_string());
    }
    let get = |k: &str| kv.get(k).ok_or_else(|| Error::Snapshot(format!("missing header key '{k}'")));
    if get("hamslice-snapshot")? != "1" {
        return Err(Error::Snapshot("unsupported snapshot version".into()));
    }
    fn num<T: std::str::FromStr>(k: &str, v: &str) -> Result<T> {
        v.parse().map_err(|_| Error::Snapshot(format!("bad value '{v}' for '{k}'")))
    }
    let mesh = Mesh::new(
        num("nx", get("nx")?)?,
        num("nz", get("nz")?)?,
        num("lx", get("lx")?)?,
        num("lz", get("lz")?)?,
        num("periodic_z", get("periodic_z")?)?,
    )?;
    let mut families: [String; 3] = Default::default();
    let mut lengths = [0; 3];
    for (i, k) in ["u", "rho", "theta"].iter().enumerate() {
        let v = get(k)?;
        let (fam, n) = v.split_once(' ').ok_or_else(|| Error::Snapshot(format!("bad field line '{v}'")))?;
        families[i] = fam.to_string();
        lengths[i] = num(k, n)?;
    }
    Ok(SnapshotHeader {
        mesh,
        degree: num("degree", get("degree")?)?,
        model: model_from_name(get("model")?)?,
        step: num("step", get("step")?)?,
        time: num("time", get("time")?)?,
        families,
        lengths,
    })
}

/// Read a snapshot written for `disc`; mesh, degree, model and spaces must
/// match.
pub fn read_snapshot<R: Read>(disc: &Discretization, input: R) -> Result<(State, SnapshotHeader)> {
    let mut r = BufReader::new(input);
    let h = parse_header(&mut r)?;
    if h.mesh != disc.mesh || h.degree != disc.degree || h.model != disc.model {
        return Err(Error::Snapshot(format!(
            "snapshot is {} degree {} on {}x{}, expected {} degree {} on {}x{}",
            h.model.name(),
            h.degree,
            h.mesh.nx,
            h.mesh.nz,
            disc.model.name(),
            disc.degree,
            disc.mesh.nx,
            disc.mesh.nz
        )));
    }
    let mut fields = Vec::new();
    for (i, slot) in [Slot::U, Slot::Rho, Slot::Theta].into_iter().enumerate() {
        let sp = disc.space(slot);
        if h.families[i] != sp.family.name() || h.lengths[i] != sp.n_dofs() {
            return Err(Error::Snapshot(format!("field {i} is {} with {} dofs", h.families[i], h.lengths[i])));
        }
        let mut buf = vec![0u8; 8 * h.lengths[i]];
        r.read_exact(&mut buf).map_err(|e| Error::Snapshot(format!("truncated data: {e}")))?;
        let coeffs = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        fields.push(Field::from_coeffs(sp, coeffs)?);
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Snapshot("trailing bytes after field data".into()));
    }
    let theta = fields.pop().expect("three fields");
    let rho = fields.pop().expect("three fields");
    let u = fields.pop().expect("three fields");
    Ok((State { model: h.model, u, rho, theta }, h))
}

/// Fields sampled on an (nx+1)×(nz+1) uniform grid, as CSV with columns
/// x,z,u_x,u_z,rho,theta.
pub fn write_sampled_grid<W: Write>(disc: &Discretization, state: &State, nx: usize, nz: usize, out: W) -> Result<()> {
    let m = &disc.mesh;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["x", "z", "u_x", "u_z", "rho", "theta"]).map_err(csv_err)?;
    for j in 0..=nz {
        for i in 0..=nx {
            let p = [m.lx * i as f64 / nx as f64, m.lz * j as f64 / nz as f64];
            let ix = ((p[0] / m.dx) as usize).min(m.nx - 1);
            let iz = ((p[1] / m.dz) as usize).min(m.nz - 1);
            let cell = m.cell_index(ix, iz);
            let o = m.cell_origin(cell);
            let xi = [(p[0] - o[0]) / m.dx, (p[1] - o[1]) / m.dz];
            let u = state.u.evaluate(cell, &[xi])?[0].val;
            let rho = state.rho.evaluate(cell, &[xi])?[0].val[0];
            let th = state.theta.evaluate(cell, &[xi])?[0].val[0];
            let row = [p[0], p[1], u[0], u[1], rho, th].map(|v| format!("{v:.16e}"));
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = Config::from_toml("case = \"straka\"\nresolution = 1600.0\nscheme = \"ec_supg\"\n").unwrap();
        let (case, cfg) = c.build().unwrap();
        assert_eq!(case.disc.mesh.nx, 20);
        assert_eq!(cfg.dt, 8.0);
        assert_eq!(cfg.tau, 4.0);
        assert_eq!(cfg.picard_iters, 32);
        assert_eq!(cfg.scheme, SchemeKind::EcSupg);
    }

    #[test]
    fn config_errors() {
        assert!(Config::from_toml("case = \"straka\"\nresolutoin = 400.0\n").is_err());
        let bad = Config::from_toml("case = \"straka\"\nresolution = 1600.0\ndt = -1.0\n").unwrap();
        assert!(matches!(bad.build(), Err(Error::Config(_))));
        let bad = Config::from_toml("case = \"straka\"\nresolution = 1600.0\nu0 = 3.0\n").unwrap();
        assert!(bad.build().is_err());
        let bad = Config::from_toml("case = \"nope\"\n").unwrap();
        assert!(bad.build().is_err());
    }

    #[test]
    fn explicit_tau_and_swe() {
        let c = Config::from_toml("case = \"planar_swe\"\ncells = 4\ndt = 100.0\ntau = 7.0\nsteps = 3\n").unwrap();
        let (case, cfg) = c.build().unwrap();
        assert_eq!(case.disc.model, Model::ThermalSwe);
        assert_eq!((cfg.tau, cfg.n_steps), (7.0, 3));
    }
}
