//! `tmdisk`: runs the disk experiments and writes `report.json`,
//! `metadata.json` and CSV files into the output directory.
//!
//! Exit status: 0 success, 1 failed check, 2 configuration error, 3 ascent
//! stopped without converging.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use config::{parse_grid, RunConfig};
use error::CliError;
use output::OutDir;

/// Thread count for the internal worker pool; overrides `[run] threads`.
pub const THREADS_ENV: &str = "TMDISK_THREADS";

#[derive(Parser, Debug)]
#[command(name = "tmdisk", version, about = "Trudinger-Moser experiments on the Poincaré disk")]
struct Cli {
    /// TOML run configuration; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Grid resolution as NRxNT, e.g. 512x256.
    #[arg(long, global = true, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    /// Outer hyperbolic radius: of the grid, or of the covered ball for `cover`.
    #[arg(long, global = true)]
    rho_max: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one of the property suites.
    Verify(VerifyArgs),
    /// Moser-sequence probe of the exponent threshold.
    Probe(ProbeArgs),
    /// Greedy covering of a hyperbolic ball by isometric balls.
    Cover(CoverArgs),
    /// Projected gradient ascent of ∫F(u)dμ at fixed energy.
    Maximize(MaximizeArgs),
    /// Plant a sequence and extract its profiles.
    Profiles(ProfilesArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VerifyKind {
    Hardy,
    Invariance,
    Dilation,
    LocalBound,
    BrezisLieb,
}

impl VerifyKind {
    pub fn name(self) -> &'static str {
        match self {
            VerifyKind::Hardy => "hardy",
            VerifyKind::Invariance => "invariance",
            VerifyKind::Dilation => "dilation",
            VerifyKind::LocalBound => "local-bound",
            VerifyKind::BrezisLieb => "brezis-lieb",
        }
    }
}

#[derive(Args, Debug)]
struct VerifyArgs {
    kind: VerifyKind,
    /// Local bound: test every field at this ‖u‖²_W.
    #[arg(long)]
    norm: Option<f64>,
    /// Invariance: also run on a grid refined twice in each direction.
    #[arg(long)]
    refine: bool,
}

#[derive(Args, Debug)]
struct ProbeArgs {
    /// Exponent as a multiple of 4π.
    #[arg(long)]
    p_over_4pi: Option<f64>,
    #[arg(long)]
    k_max: Option<u64>,
}

#[derive(Args, Debug)]
struct CoverArgs {
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    cover_factor: Option<f64>,
    #[arg(long)]
    lattice_step: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args, Debug)]
struct MaximizeArgs {
    /// Energy level of the constraint, in (0, 1].
    #[arg(long)]
    t: Option<f64>,
    /// quartic (s4), sextic (s6) or tm-subcritical.
    #[arg(long)]
    nonlinearity: Option<String>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Field file to start from.
    #[arg(long)]
    seed_field: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ProfilesArgs {
    /// none, single or pair.
    scenario: Option<String>,
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &cli.out {
        cfg.run.out = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.run.seed = s;
    }
    if let Some((nr, nt)) = cli.grid {
        cfg.grid.n_rho = Some(nr);
        cfg.grid.n_theta = Some(nt);
    }
    match &cli.command {
        Command::Cover(a) => {
            if let Some(r) = cli.rho_max {
                cfg.cover.rho_max = r;
            }
            set(&mut cfg.cover.eps, a.eps);
            set(&mut cfg.cover.cover_factor, a.cover_factor);
            set(&mut cfg.cover.lattice_step, a.lattice_step);
            if a.samples.is_some() {
                cfg.cover.samples = a.samples;
            }
        }
        cmd => {
            if cli.rho_max.is_some() {
                cfg.grid.rho_max = cli.rho_max;
            }
            match cmd {
                Command::Verify(a) => {
                    if a.norm.is_some() {
                        cfg.verify.norm = a.norm;
                    }
                    cfg.verify.refine |= a.refine;
                }
                Command::Probe(a) => {
                    set(&mut cfg.probe.p_over_4pi, a.p_over_4pi);
                    set(&mut cfg.probe.k_max, a.k_max);
                }
                Command::Maximize(a) => {
                    set(&mut cfg.maximize.t, a.t);
                    set(&mut cfg.maximize.nonlinearity, a.nonlinearity.clone());
                    set(&mut cfg.maximize.max_iters, a.max_iters);
                    if a.seed_field.is_some() {
                        cfg.maximize.seed_field = a.seed_field.clone();
                    }
                }
                Command::Profiles(a) => {
                    if a.scenario.is_some() {
                        cfg.profiles.scenario = a.scenario.clone();
                    }
                }
                Command::Cover(_) => unreachable!(),
            }
        }
    }
    Ok(cfg)
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn init_threads(cfg: &RunConfig) -> Result<usize, CliError> {
    let n = match std::env::var(THREADS_ENV) {
        Ok(s) => Some(
            s.trim()
                .parse::<usize>()
                .map_err(|e| CliError::Config(format!("{THREADS_ENV}={s:?}: {e}")))?,
        ),
        Err(_) => cfg.run.threads,
    };
    if let Some(n) = n.filter(|&n| n > 0) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    Ok(rayon::current_num_threads())
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    let started = Instant::now();
    let cfg = resolve(cli)?;
    let threads = init_threads(&cfg)?;
    let out = OutDir::create(&cfg.run.out)?;
    let outcome = match &cli.command {
        Command::Verify(a) => commands::verify(&cfg, a.kind, &out),
        Command::Probe(_) => commands::probe(&cfg, &out),
        Command::Cover(_) => commands::cover(&cfg, &out),
        Command::Maximize(_) => commands::maximize(&cfg, &out),
        Command::Profiles(_) => commands::profiles(&cfg, &out),
    }?;
    out.json("report.json", &outcome.report)?;
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    out.json(
        "metadata.json",
        &json!({
            "tool": "tmdisk",
            "version": env!("CARGO_PKG_VERSION"),
            "command": outcome.command,
            "unix_time": timestamp,
            "elapsed_seconds": started.elapsed().as_secs_f64(),
            "threads": threads,
            "args": std::env::args().collect::<Vec<_>>(),
        }),
    )?;
    println!("{}", outcome.summary);
    println!("report: {}", out.path("report.json").display());
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("tmdisk: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
