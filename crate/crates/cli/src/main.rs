use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use hamslice::io::{write_diagnostics_file, write_sampled_grid, write_snapshot, Config};
use hamslice::timestepping::{run, SchemeKind};

#[derive(Parser)]
#[command(name = "hamslice", version, about = "Energy-conserving compatible FE solver for vertical slices and thermal shallow water")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a case described by a TOML file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "output")]
        output_dir: PathBuf,
        /// Override the scheme (ec_supg, plain_bracket, nec_bracket,
        /// ec_full_upwind_approx, ec_full_upwind_averaged, nec_direct).
        #[arg(long)]
        scheme: Option<String>,
        /// Override the Picard iteration count.
        #[arg(long)]
        picard: Option<usize>,
    },
    /// Run the structural checks and print one line per property.
    Verify,
}

fn run_case(config: &Path, output_dir: &Path, scheme: Option<String>, picard: Option<usize>) -> Result<()> {
    let mut cfg_file = Config::load(config)?;
    if let Some(s) = scheme {
        SchemeKind::parse(&s)?;
        cfg_file.scheme = Some(s);
    }
    if picard.is_some() {
        cfg_file.picard = picard;
    }
    let (case, cfg) = cfg_file.build()?;
    log::info!("{} on {}x{} cells, scheme {}, dt {}, {} steps", case.name, case.disc.mesh.nx, case.disc.mesh.nz, cfg.scheme.name(), cfg.dt, cfg.n_steps);
    let out = run(&case, &cfg)?;
    fs::create_dir_all(output_dir).with_context(|| format!("creating {}", output_dir.display()))?;
    write_diagnostics_file(&out.records, &output_dir.join("diagnostics.csv"))?;
    if !out.snapshots.is_empty() {
        let dir = output_dir.join("snapshots");
        fs::create_dir_all(&dir)?;
        let m = &case.disc.mesh;
        let samples = case.disc.degree * 2;
        for s in &out.snapshots {
            let f = File::create(dir.join(format!("state_{:06}.bin", s.step)))?;
            write_snapshot(&case.disc, &s.state, s.step, s.time, f)?;
            let g = BufWriter::new(File::create(dir.join(format!("grid_{:06}.csv", s.step)))?);
            write_sampled_grid(&case.disc, &s.state, m.nx * samples, m.nz * samples, g)?;
        }
    }
    let last = out.records.last().expect("initial record");
    let max_err = out.records.iter().map(|r| r.rel_energy_err.abs()).fold(0.0, f64::max);
    println!("{} steps, max |relative energy error| = {max_err:.3e}, final mass = {:.16e}", last.step, last.mass);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, output_dir, scheme, picard } => run_case(&config, &output_dir, scheme, picard).map(|_| true),
        Command::Verify => hamslice::verify::structural_suite().map_err(Into::into).map(|checks| {
            for c in &checks {
                println!("{c}");
            }
            checks.iter().all(|c| c.pass())
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
