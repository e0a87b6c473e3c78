use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gqr::circuit::CircuitSpec;
use gqr::output::{Format, Table};
use gqr::reports::{self, spaced};
use gqr::sweep::{self, SweepSpec};
use gqr::verify::{self, Level};
use gqr::{resolve_workers, with_workers, Result, WORKERS_ENV};

const BRANCH_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(name = "gqr", version, about = "Reflectivity-sensing reports: QFI tables, detection envelopes, sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Output format.
    #[arg(long, global = true)]
    format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// QFI of every transmitter with a noiseless environment.
    Table1 {
        #[arg(long, default_value_t = 1.0)]
        ns: f64,
        #[arg(long, default_value_t = 0.5)]
        kappa: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Scaled QFI of the Hamiltonian model against signal and background energy.
    Fig2a {
        #[arg(long, default_value_t = 1e-3)]
        kappa: f64,
        /// Explicit N_S values; default 21 log-spaced points on [1, 100].
        #[arg(long, value_delimiter = ',')]
        ns: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 2.0, 5.0, 10.0, 20.0])]
        nb: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Chernoff error-probability envelopes and their upper bounds.
    Fig2b {
        #[arg(long, default_value_t = 20.0)]
        nb: f64,
        #[arg(long, default_value_t = 1e-4)]
        kappa: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 1e-1])]
        ns: Vec<f64>,
        /// Explicit copy numbers; default M = 0 then 1e4 to 1e8.
        #[arg(long, value_delimiter = ',')]
        m: Vec<f64>,
        #[arg(long, default_value_t = 4)]
        per_decade: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Grid sweep described by a TOML file; flags override file values.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Quadratic Hamiltonian equivalent to a Gaussian circuit.
    Equiv {
        /// `model1` or a TOML circuit file.
        #[arg(long, default_value = "model1")]
        circuit: String,
        #[arg(long, default_value_t = 0.4)]
        g: f64,
        #[arg(long, default_value_t = 0.3)]
        kappa: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Run the acceptance suite.
    Verify {
        #[arg(long, default_value = "quick")]
        level: Level,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
}

fn emit(table: &Table, format: Format, out: &Option<PathBuf>) -> Result<()> {
    let text = table.render(format);
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Table1 { ns, kappa, common } => {
            let w = resolve_workers(common.workers, None)?;
            let t = with_workers(w, || reports::table1(ns, kappa))??;
            emit(&t, common.format.unwrap_or_default(), &common.out)?;
        }
        Command::Fig2a { kappa, ns, nb, common } => {
            let ns = if ns.is_empty() { spaced(1.0, 100.0, 21, true) } else { ns };
            let w = resolve_workers(common.workers, None)?;
            let t = with_workers(w, || reports::fig2a(kappa, &ns, &nb))??;
            emit(&t, common.format.unwrap_or_default(), &common.out)?;
        }
        Command::Fig2b { nb, kappa, ns, m, per_decade, common } => {
            let m = if m.is_empty() { reports::default_m_grid(per_decade) } else { m };
            let w = resolve_workers(common.workers, None)?;
            let t = with_workers(w, || reports::fig2b(nb, kappa, &ns, &m))??;
            emit(&t, common.format.unwrap_or_default(), &common.out)?;
        }
        Command::Sweep { config, seed, common } => {
            let text = std::fs::read_to_string(&config).map_err(|e| format!("{}: {e}", config.display()))?;
            let mut spec = SweepSpec::from_toml(&text)?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            if let Some(f) = common.format {
                spec.format = f;
            }
            let w = resolve_workers(common.workers, spec.workers)?;
            let t = with_workers(w, || sweep::run(&spec))??;
            emit(&t, spec.format, &common.out)?;
        }
        Command::Equiv { circuit, g, kappa, common } => {
            let result = if circuit == "model1" {
                reports::model1_equivalence(g, kappa)?
            } else {
                let text = std::fs::read_to_string(&circuit).map_err(|e| format!("{circuit}: {e}"))?;
                let spec = CircuitSpec::from_toml(&text)?;
                let diagram: Vec<&str> = spec.diagram.iter().map(String::as_str).collect();
                reports::equivalence_table(&spec.name, &spec.transform()?, &diagram)?
            };
            match result {
                Ok((t, _)) => emit(&t, common.format.unwrap_or_default(), &common.out)?,
                Err(report) => {
                    eprintln!("branch failure: {}", report.reason);
                    for (re, im) in report.eigenvalues {
                        eprintln!("  eigenvalue {re:+.6e} {im:+.6e}i");
                    }
                    return Ok(ExitCode::from(BRANCH_FAILURE));
                }
            }
        }
        Command::Verify { level, seed, common } => {
            let w = resolve_workers(common.workers, None)?;
            let outcomes = with_workers(w, || {
                verify::run(level, seed, |o| println!("{}", o.line()))
            })?;
            let regressions = outcomes.iter().filter(|o| !o.pass && !o.known_red()).count();
            let red = outcomes.iter().filter(|o| !o.pass && o.known_red()).count();
            println!(
                "{} passed, {red} known red, {regressions} failed",
                outcomes.iter().filter(|o| o.pass).count()
            );
            if regressions > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
