//! Command-line driver.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 configuration
//! or lattice error, 3 a dimension or degree cap was exceeded, 4 I/O error,
//! 5 the eigensolver did not converge, 6 anything else.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::RunConfig;
use crate::continuum::continuum_energy_check;
use crate::error::{Error, Result};
use crate::exact::{self, parse_rational, Rational};
use crate::lattice::ModeTable;
use crate::model::PairingModel;
use crate::spectra::{self, diagonalize_sector, multiplicities, nc_in_spectrum};
use crate::verify::run_battery;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CAP: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_NO_CONVERGENCE: i32 = 5;
pub const EXIT_OTHER: i32 = 6;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Parse(_)
        | Error::Json(_)
        | Error::InvalidLattice(_)
        | Error::EmptyShell
        | Error::UnpairedMode(_)
        | Error::TooManyModes(_)
        | Error::OffShellFormfactor(..)
        | Error::NotInShell(_)
        | Error::NotInUpperShell(_)
        | Error::NotNormalized { .. }
        | Error::MissingCoefficients(_) => EXIT_CONFIG,
        Error::BasisCap { .. } | Error::DegreeCap { .. } => EXIT_CAP,
        Error::Io(_) => EXIT_IO,
        Error::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
        _ => EXIT_OTHER,
    }
}

fn rational_arg(s: &str) -> std::result::Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "dark-pairing", version, about = "Pair states annihilated by the BCS pairing interaction")]
pub struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Master seed; overrides the config's `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Record wall times in reports (makes outputs run-dependent).
    #[arg(long, global = true)]
    pub timings: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the identity battery; writes report.json and report.txt.
    Verify(VerifyArgs),
    /// Diagonalize one sector at one coupling; writes spectrum.csv and levels.csv.
    Spectrum(SpectrumArgs),
    /// Pair-state energy against exact and variational energies over couplings; writes scan.csv.
    Scan(ScanArgs),
    /// Lattice-counting energy per particle against closed forms; writes continuum.csv.
    Continuum(ContinuumArgs),
    /// Dump the mode table; writes modes.json.
    Modes,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Couplings for the state checks (comma separated rationals).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_parser = rational_arg)]
    pub g_list: Option<Vec<Rational>>,
    /// Pair-operator parameters for the symbolic checks.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_parser = rational_arg)]
    pub lambda: Option<Vec<Rational>>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// Coupling (default: first configured coupling).
    #[arg(long, allow_hyphen_values = true, value_parser = rational_arg)]
    pub g: Option<Rational>,
    /// Particle number (default: the pair-state sector).
    #[arg(long)]
    pub sector: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Couplings (default: configured couplings).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_parser = rational_arg)]
    pub g_list: Option<Vec<Rational>>,
}

#[derive(Debug, Args)]
pub struct ContinuumArgs {
    /// Fermi wavevector (default: the config's, else 1).
    #[arg(long, value_parser = rational_arg)]
    pub kf: Option<Rational>,
    /// Shell half-width (default: the config's, else k_F/10).
    #[arg(long, value_parser = rational_arg)]
    pub delta: Option<Rational>,
    /// Grid sizes: lattice spacings per Fermi radius.
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
    pub sizes: Vec<u32>,
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("this command needs --config".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn output_dir(cli: &Cli, cfg: Option<&RunConfig>) -> Result<PathBuf> {
    let dir = cli.out.clone().or_else(|| cfg.and_then(|c| c.output_dir.clone())).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn to_json_pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json value serializes") + "\n"
}

pub fn run(cli: &Cli) -> Result<i32> {
    if let Some(n) = cli.threads {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match &cli.command {
        Command::Verify(args) => cmd_verify(cli, args),
        Command::Spectrum(args) => cmd_spectrum(cli, args),
        Command::Scan(args) => cmd_scan(cli, args),
        Command::Continuum(args) => cmd_continuum(cli, args),
        Command::Modes => cmd_modes(cli),
    }
}

fn model_for(cfg: &RunConfig) -> Result<PairingModel> {
    let table = ModeTable::build(&cfg.lattice)?;
    PairingModel::new(table, &cfg.formfactor.resolve()?, cfg.formfactor_mode)
}

fn cmd_verify(cli: &Cli, args: &VerifyArgs) -> Result<i32> {
    let mut cfg = load_config(cli)?;
    if let Some(g) = &args.g_list {
        cfg.couplings = g.iter().cloned().map(exact::Exact).collect();
    }
    if let Some(l) = &args.lambda {
        cfg.lambda_values = l.iter().cloned().map(exact::Exact).collect();
    }
    let mut opts = cfg.battery_options()?;
    opts.timings = cli.timings;
    let report = run_battery(&cfg.lattice, &opts)?;
    let dir = output_dir(cli, Some(&cfg))?;
    write(&dir, "config.json", &cfg.to_json())?;
    write(&dir, "report.json", &report.to_json())?;
    let text = report.to_text();
    write(&dir, "report.txt", &text)?;
    print!("{text}");
    Ok(if report.passed { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn cmd_spectrum(cli: &Cli, args: &SpectrumArgs) -> Result<i32> {
    let cfg = load_config(cli)?;
    let model = model_for(&cfg)?;
    let table = model.table();
    let g = match &args.g {
        Some(g) => g.clone(),
        None => cfg.couplings.first().map(|e| e.0.clone()).unwrap_or_else(|| exact::int(0)),
    };
    let sector = args.sector.unwrap_or(table.nc_particles());
    let opts = cfg.solver_options();
    let h = model.hamiltonian(&g);
    let spectrum = diagonalize_sector(&h, table, sector, &opts)?;
    let core = table.core().map_or(0.0, |c| exact::to_f64(&c.energy));
    let core_particles = table.core().map_or(0, |c| c.particles);
    let g_f64 = exact::to_f64(&g);

    let mut csv = String::from("g,sector,dim,index,energy\n");
    for (i, e) in spectrum.eigenvalues.iter().enumerate() {
        csv.push_str(&format!("{g_f64},{},{},{i},{}\n", sector + core_particles, spectrum.dim, e + core));
    }
    let mut levels = String::from("energy,multiplicity\n");
    let shifted: Vec<f64> = spectrum.eigenvalues.iter().map(|e| e + core).collect();
    for (e, m) in multiplicities(&shifted, 1e-9) {
        levels.push_str(&format!("{e},{m}\n"));
    }
    let placement = if sector == table.nc_particles() { Some(nc_in_spectrum(&model, &g, &opts)?) } else { None };
    let summary = json!({
        "lattice": table.descriptor(),
        "g": exact::render(&g),
        "sector": sector + core_particles,
        "dim": spectrum.dim,
        "method": spectrum.method,
        "ground_energy": spectrum.ground_energy() + core,
        "max_residual": spectrum.max_residual,
        "nc": placement,
        "gap_sign": placement.as_ref().map(|p| p.gap_sign(1e-10)),
    });
    let dir = output_dir(cli, Some(&cfg))?;
    write(&dir, "config.json", &cfg.to_json())?;
    write(&dir, "spectrum.csv", &csv)?;
    write(&dir, "levels.csv", &levels)?;
    write(&dir, "spectrum.json", &to_json_pretty(&summary))?;
    println!(
        "sector N={} dim={} ground={} ({} eigenvalues)",
        sector + core_particles,
        spectrum.dim,
        spectrum.ground_energy() + core,
        spectrum.eigenvalues.len()
    );
    if let Some(p) = placement {
        println!("E_NC={} gap={} residual={:e}", p.e_nc, p.gap, p.residual);
    }
    Ok(EXIT_OK)
}

fn cmd_scan(cli: &Cli, args: &ScanArgs) -> Result<i32> {
    let cfg = load_config(cli)?;
    let model = model_for(&cfg)?;
    let gs: Vec<Rational> = match &args.g_list {
        Some(g) => g.clone(),
        None => cfg.couplings.iter().map(|e| e.0.clone()).collect(),
    };
    if gs.is_empty() {
        return Err(Error::Config("empty coupling list".into()));
    }
    let rows = spectra::scan_g(&model, &gs, cfg.seed, &cfg.solver_options())?;
    let csv = spectra::to_csv(&rows);
    let summary = json!({
        "lattice": model.table().descriptor(),
        "rows": rows.len(),
        "e_nc_constant": rows.windows(2).all(|w| w[0].e_nc == w[1].e_nc),
        "variational_monotone_in_attraction": spectra::variational_monotone_in_attraction(&rows),
        "max_residual_nc": rows.iter().map(|r| r.residual_nc).fold(0.0f64, f64::max),
    });
    let dir = output_dir(cli, Some(&cfg))?;
    write(&dir, "config.json", &cfg.to_json())?;
    write(&dir, "scan.csv", &csv)?;
    write(&dir, "scan.json", &to_json_pretty(&summary))?;
    print!("{csv}");
    Ok(EXIT_OK)
}

fn cmd_continuum(cli: &Cli, args: &ContinuumArgs) -> Result<i32> {
    let cfg = match &cli.config {
        Some(_) => Some(load_config(cli)?),
        None => None,
    };
    let kf =
        args.kf.clone().or_else(|| cfg.as_ref().map(|c| c.lattice.k_fermi.clone())).unwrap_or_else(|| exact::int(1));
    let delta = args
        .delta
        .clone()
        .or_else(|| cfg.as_ref().map(|c| c.lattice.delta.clone()))
        .unwrap_or_else(|| &kf / exact::int(10));
    let report = continuum_energy_check(&kf, &delta, &args.sizes, cli.timings)?;
    let dir = output_dir(cli, cfg.as_ref())?;
    let csv = report.to_csv();
    write(&dir, "continuum.csv", &csv)?;
    write(&dir, "continuum.json", &(serde_json::to_string_pretty(&report)? + "\n"))?;
    print!("{csv}");
    println!(
        "closed form {} quadrature {} relative difference {:e} convergence order {}",
        report.closed_form,
        report.quadrature,
        report.closed_form_vs_quadrature,
        report.convergence_order.map_or("n/a".to_string(), |o| format!("{o:.3}"))
    );
    Ok(EXIT_OK)
}

fn cmd_modes(cli: &Cli) -> Result<i32> {
    let cfg = load_config(cli)?;
    let table = ModeTable::build(&cfg.lattice)?;
    let dir = output_dir(cli, Some(&cfg))?;
    write(&dir, "modes.json", &to_json_pretty(&table.to_json()))?;
    println!("{}", table.descriptor());
    Ok(EXIT_OK)
}
