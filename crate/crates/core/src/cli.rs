//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 singular Gram matrix or failed
//! repair, 3 I/O or format error. Data goes to files (or stdout where
//! noted); diagnostics go to stderr.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::constellation::{fibonacci_constellation, random_constellation, regular_hedgehog, Constellation};
use crate::error::{Error, Result};
use crate::exec::Backend;
use crate::flow::integrate_flow;
use crate::gram::{diagnostics, gram, Threshold};
use crate::repair::{repair_with, RepairOptions, RepairStrategy};
use crate::spin::SpinLabel;
use crate::sweep::{sweep, write_sweep_csv};
use crate::tomography::{operator_to_json, QSample, Reconstructor};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SINGULAR: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "hedgehog", version, about = "Coherent-state projector bases for spin operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Regular,
    Random,
    Fibonacci,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Strategy {
    Random,
    Gradient,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a constellation (JSON, or CSV when the output ends in `.csv`).
    Gen {
        #[arg(long)]
        spin: String,
        #[arg(long, value_enum, default_value = "regular")]
        kind: Kind,
        #[arg(long, required_if_eq("kind", "random"))]
        seed: Option<u64>,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Gram diagnostics of a constellation; exits 2 if it is not a basis.
    Analyze {
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
        /// Basis threshold relative to the largest Gram eigenvalue.
        #[arg(long)]
        tau: Option<f64>,
        /// Diagnostics JSON destination.
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Reconstruct an operator from a Q-symbol sample CSV (`n,x,y,z,p`).
    Reconstruct {
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Move a singular constellation onto a nearby basis; prints the report JSON.
    Repair {
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "random")]
        strategy: Strategy,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Integrate the flow of one spike; writes `t,x,y,z,H` CSV.
    Flow {
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
        #[arg(long)]
        index: usize,
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        steps: usize,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Monte-Carlo basis test over random constellations; one CSV row per spin.
    Sweep {
        /// Comma-separated spins, e.g. `1/2,1,3/2`.
        #[arg(long)]
        spin: String,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        tau: Option<f64>,
        /// CSV destination; stdout when omitted.
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::SingularGram(_) | Error::RepairFailed { .. } => EXIT_SINGULAR,
        Error::InvalidSpin(_)
        | Error::InvalidArgument(_)
        | Error::InvalidConstruction(_)
        | Error::IndexOutOfRange { .. } => EXIT_USAGE,
        _ => EXIT_IO,
    }
}

fn threshold(tau: Option<f64>) -> Result<Threshold> {
    tau.map_or(Ok(Threshold::Default), |t| Threshold::Relative(t).validate())
}

fn positive(name: &str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidArgument(format!("--{name} must be positive, got {value}")))
    }
}

fn load_constellation(path: &Path) -> Result<Constellation> {
    Constellation::read_json(BufReader::new(File::open(path)?))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_constellation(c: &Constellation, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        c.write_csv(&mut w)?;
    } else {
        w.write_all(c.to_json_string()?.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn execute<O: Write, E: Write>(command: Command, out: &mut O, err: &mut E) -> Result<i32> {
    match command {
        Command::Gen {
            spin,
            kind,
            seed,
            output,
        } => {
            let s: SpinLabel = spin.parse()?;
            let c = match kind {
                Kind::Regular => regular_hedgehog(s, None, None)?,
                Kind::Random => random_constellation(s, seed.expect("clap enforces --seed")),
                Kind::Fibonacci => fibonacci_constellation(s),
            };
            write_constellation(&c, &output)?;
            writeln!(err, "wrote {} vectors (s = {s}) to {}", c.len(), output.display())?;
            Ok(EXIT_OK)
        }
        Command::Analyze { input, tau, output } => {
            let c = load_constellation(&input)?;
            let d = diagnostics(&gram(&c), threshold(tau)?);
            writeln!(out, "spin = {}", c.spin())?;
            writeln!(out, "n_points = {}", c.len())?;
            writeln!(out, "det = {}", d.det)?;
            writeln!(out, "log_abs_det = {}", d.log_abs_det)?;
            writeln!(out, "min_eigenvalue = {}", d.min_eigenvalue())?;
            writeln!(out, "max_eigenvalue = {}", d.max_eigenvalue())?;
            writeln!(out, "condition_number = {}", d.condition_number)?;
            writeln!(out, "tau = {} [{}]", d.tau, d.tau_rule)?;
            writeln!(out, "is_basis = {}", d.is_basis)?;
            if let Some(path) = output {
                let mut w = create(&path)?;
                w.write_all(d.to_json_string()?.as_bytes())?;
                w.flush()?;
            }
            if d.is_basis {
                Ok(EXIT_OK)
            } else {
                writeln!(err, "not a basis: min eigenvalue {:e} <= tau {:e}", d.min_eigenvalue(), d.tau)?;
                Ok(EXIT_SINGULAR)
            }
        }
        Command::Reconstruct { input, tau, output } => {
            let sample = QSample::read_csv(BufReader::new(File::open(&input)?))?;
            let rec = Reconstructor::new(sample.constellation(), threshold(tau)?)?;
            let op = rec.reconstruct(sample.values())?;
            let negative = op.negative_eigenvalues(1e-10);
            if !negative.is_empty() {
                writeln!(err, "note: reconstruction has {} negative eigenvalue(s); not a physical state", negative.len())?;
            }
            let mut w = create(&output)?;
            w.write_all(operator_to_json(&op)?.as_bytes())?;
            w.flush()?;
            writeln!(err, "condition number {:e}", rec.diagnostics().condition_number)?;
            Ok(EXIT_OK)
        }
        Command::Repair {
            input,
            epsilon,
            tau,
            seed,
            strategy,
            output,
        } => {
            let c = load_constellation(&input)?;
            let mut opts = RepairOptions::new(positive("epsilon", epsilon)?, threshold(tau)?, seed);
            opts.strategy = match strategy {
                Strategy::Random => RepairStrategy::RandomProbe,
                Strategy::Gradient => RepairStrategy::GradientAscent,
            };
            let (fixed, report) = repair_with(&c, &opts)?;
            write_constellation(&fixed, &output)?;
            out.write_all(report.to_json_string()?.as_bytes())?;
            Ok(EXIT_OK)
        }
        Command::Flow {
            input,
            index,
            dt,
            steps,
            output,
        } => {
            let c = load_constellation(&input)?;
            let v0 = *c.vectors().get(index).ok_or(Error::IndexOutOfRange {
                index,
                len: c.len(),
            })?;
            let traj = integrate_flow(&c, index, &v0, positive("dt", dt)?, steps)?;
            let mut w = create(&output)?;
            traj.write_csv(&mut w)?;
            w.flush()?;
            writeln!(
                err,
                "max |H - H0| = {:e}, max norm drift = {:e}",
                traj.max_energy_error(),
                traj.max_norm_drift()
            )?;
            Ok(EXIT_OK)
        }
        Command::Sweep {
            spin,
            trials,
            seed,
            tau,
            output,
        } => {
            let spins = spin
                .split(',')
                .map(str::parse)
                .collect::<Result<Vec<SpinLabel>>>()?;
            let rows = sweep(&spins, trials, seed, threshold(tau)?, Backend::default())?;
            match output {
                Some(path) => {
                    let mut w = create(&path)?;
                    write_sweep_csv(&rows, &mut w)?;
                    w.flush()?;
                }
                None => write_sweep_csv(&rows, &mut *out)?,
            }
            Ok(EXIT_OK)
        }
    }
}

/// Runs one command with explicit output streams; returns the exit code.
pub fn run_with<I, T, O, E>(args: I, out: &mut O, err: &mut E) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    O: Write,
    E: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}
