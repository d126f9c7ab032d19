//! Command-line front end of nvscope.
//!
//! `nvscope run` executes one experiment from a TOML file, `sweep` repeats it
//! along one numeric config field, `invert` recomputes a pair geometry from
//! saved scans and `bath-gen` writes a sampled spin bath. Every CSV embeds the
//! resolved configuration, so any output can be fed back as `--config`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod exec;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{Protocol, ResolvedConfig};
use crate::error::CliError;
use crate::exec::RunOutput;
use crate::output::{parse_csv, read_config};

#[derive(Debug, Parser)]
#[command(
    name = "nvscope",
    version,
    about = "Single-molecule magnetic resonance experiments with a driven NV center"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment file: TOML, or a CSV written by nvscope.
    #[arg(long, short)]
    pub config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Random seed; overrides `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, short)]
    pub jobs: Option<usize>,
    /// Print the resolved configuration and the files that would be
    /// written, then stop.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment.
    Run(Common),
    /// Run an experiment for each value of one numeric config field.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Dotted path of the field, e.g. `labels.omega_khz`.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(
            long,
            value_delimiter = ',',
            required = true,
            allow_negative_numbers = true
        )]
        values: Vec<f64>,
    },
    /// Recompute splittings and pair geometry from the nine pair scan CSVs.
    Invert {
        /// The `pair_scan_*.csv` files of one pair run.
        #[arg(required = true)]
        scans: Vec<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Sample a spin bath and write its sites.
    BathGen(Common),
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let mut out_dir: Option<PathBuf> = None;
    match execute(cli.command, &mut out_dir) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("nvscope: {e}");
            if let Some(dir) = out_dir {
                if fs::create_dir_all(&dir).is_ok() {
                    let text = serde_json::to_string_pretty(&e.to_json()).unwrap_or_default();
                    let _ = fs::write(dir.join("error.json"), text + "\n");
                }
            }
            e.exit_code()
        }
    }
}

/// Runs `f` on a pool of `jobs` threads, or on the global pool.
fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(CliError::Schema("--jobs must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Compute(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn load(common: &Common, out_dir: &mut Option<PathBuf>) -> Result<ResolvedConfig, CliError> {
    // A dry run leaves the file system untouched, error reports included.
    let record = !common.dry_run;
    *out_dir = common.out.clone().filter(|_| record);
    let mut cfg = read_config(&common.config)?;
    if let Some(seed) = common.seed {
        cfg = cfg.with_seed(seed)?;
    }
    if record && out_dir.is_none() {
        *out_dir = Some(PathBuf::from(&cfg.config.output.dir));
    }
    Ok(cfg)
}

fn output_dir(common: &Common, cfg: &ResolvedConfig) -> PathBuf {
    common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.config.output.dir))
}

fn execute(command: Command, out_dir: &mut Option<PathBuf>) -> Result<(), CliError> {
    match command {
        Command::Run(common) => {
            let cfg = load(&common, out_dir)?;
            let dir = output_dir(&common, &cfg);
            let names = exec::planned_tables(&cfg);
            if common.dry_run {
                print_plan(&cfg, &dir, &names, "run");
                return Ok(());
            }
            let out = with_jobs(common.jobs, || exec::run(&cfg))??;
            write_outputs(&dir, &cfg, &out)
        }
        Command::Sweep {
            common,
            axis,
            values,
        } => {
            let cfg = load(&common, out_dir)?;
            let dir = output_dir(&common, &cfg);
            // Validate the axis on every point before any work starts.
            for &v in &values {
                cfg.with_value(&axis, v)?;
            }
            let names: Vec<String> = exec::planned_tables(&cfg)
                .iter()
                .map(|n| format!("sweep_{n}"))
                .collect();
            if common.dry_run {
                let plan = format!("sweep {axis} over {} values", values.len());
                print_plan(&cfg, &dir, &names, &plan);
                return Ok(());
            }
            let out = with_jobs(common.jobs, || exec::sweep(&cfg, &axis, &values))??;
            write_outputs(&dir, &cfg, &out)
        }
        Command::Invert { scans, out } => {
            *out_dir = Some(out.clone());
            let parsed = scans
                .iter()
                .map(|p| {
                    let text = fs::read_to_string(p)
                        .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                    parse_csv(&text)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let (cfg, result) = exec::invert(&parsed)?;
            write_outputs(&out, &cfg, &result)
        }
        Command::BathGen(common) => {
            let cfg = load(&common, out_dir)?;
            let dir = output_dir(&common, &cfg);
            let bath = match (&cfg.config.protocol, &cfg.config.bath) {
                (Protocol::BathDecoupling, Some(b)) => b.clone(),
                _ => {
                    return Err(CliError::Schema(
                        "bath-gen needs a bath-decoupling config".into(),
                    ))
                }
            };
            if common.dry_run {
                print_plan(&cfg, &dir, &["bath_sites".to_string()], "bath-gen");
                return Ok(());
            }
            let table = exec::bath_sites(&bath, cfg.config.seed)?;
            let out = RunOutput {
                tables: vec![table],
                warnings: Vec::new(),
            };
            write_outputs(&dir, &cfg, &out)
        }
    }
}

fn print_plan(cfg: &ResolvedConfig, dir: &Path, names: &[String], what: &str) {
    println!("# resolved configuration (sha256 {})", cfg.sha256);
    print!("{}", cfg.text);
    println!("# plan: {what} of protocol {}", cfg.config.protocol.name());
    for n in names {
        println!("# would write {}", dir.join(format!("{n}.csv")).display());
    }
    println!("# would write {}", dir.join("warnings.json").display());
}

fn write_outputs(dir: &Path, cfg: &ResolvedConfig, out: &RunOutput) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let stale = dir.join("error.json");
    if stale.exists() {
        fs::remove_file(&stale).map_err(|e| CliError::Io(format!("{}: {e}", stale.display())))?;
    }
    for t in &out.tables {
        let path = t.write(dir, cfg)?;
        println!("{}", path.display());
    }
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    let warnings =
        serde_json::to_string_pretty(&out.warnings).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(dir.join("warnings.json"), warnings + "\n")
        .map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}
