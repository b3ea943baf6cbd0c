use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use peakcap::analysis::{
    self, cad_sweep, capacity_sweep, crossover, db_gap_at_rate, log_grid, named_constellation, named_constellations,
    rate_sweep, AnalysisConfig, RateCurve,
};
use peakcap::cad::SolverConfig;
use peakcap::channel::ConstraintKind;
use peakcap::Error;

/// Capacity and achievable rates of the complex AWGN channel under peak-power
/// constraints.
#[derive(Parser)]
#[command(name = "peakcap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rate of one or more constellations over a pSNR grid, with capacity.
    Rate {
        /// qpsk, 16psk, 16qam, 64qam, 16apsk or file:PATH; comma-separated for several.
        #[arg(long)]
        constellation: String,
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long, default_value_t = peakcap::cad::DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Capacity over a pSNR grid.
    Capacity {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long, default_value_t = peakcap::cad::DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Capacity-achieving distribution at one pSNR, as JSON.
    Cad {
        #[arg(long)]
        constraint: ConstraintKind,
        #[arg(long)]
        psnr: f64,
        #[arg(long, default_value_t = 1.0)]
        emax: f64,
        #[arg(long, default_value_t = peakcap::cad::DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Capacity-achieving distributions over a pSNR grid, as a JSON array.
    CadSweep {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long, default_value_t = peakcap::cad::DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// pSNR at which two constellation rates cross.
    Crossover {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        constraint: ConstraintKind,
        #[arg(long, default_value_t = 1.0)]
        emax: f64,
        /// Defaults to the shipped bracket for known pairs.
        #[arg(long)]
        lo: Option<f64>,
        #[arg(long)]
        hi: Option<f64>,
    },
    /// dB gap between the adaptive envelope and capacity at a target rate.
    Gap {
        #[arg(long)]
        mods: String,
        #[arg(long)]
        constraint: ConstraintKind,
        #[arg(long)]
        rate: f64,
        #[arg(long, default_value_t = 1.0)]
        emax: f64,
        #[arg(long, default_value_t = analysis::DEFAULT_PSNR_MIN)]
        psnr_min: f64,
        #[arg(long, default_value_t = 1000.0)]
        psnr_max: f64,
    },
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    constraint: ConstraintKind,
    #[arg(long, default_value_t = 1.0)]
    emax: f64,
    #[arg(long, default_value_t = analysis::DEFAULT_PSNR_MIN)]
    psnr_min: f64,
    #[arg(long, default_value_t = analysis::DEFAULT_PSNR_MAX)]
    psnr_max: f64,
    #[arg(long, default_value_t = analysis::DEFAULT_GRID_POINTS)]
    points: usize,
    /// Keep sweeping when a capacity solve fails, writing its best iterate.
    #[arg(long)]
    keep_partial: bool,
}

fn config(tol: f64, keep_partial: bool) -> AnalysisConfig {
    AnalysisConfig { solver: SolverConfig::with_tol(tol), keep_partial, ..AnalysisConfig::default() }
}

fn report_failures(failed: &[analysis::CapacityPoint]) {
    for p in failed {
        eprintln!(
            "warning: capacity at pSNR {} did not converge (kkt violation {:.3e} bits)",
            p.psnr, p.kkt_max_violation
        );
    }
}

fn run(cli: Cli) -> peakcap::Result<()> {
    match cli.command {
        Command::Rate { constellation, sweep, tol, out } => {
            let mods = named_constellations(&constellation)?;
            let grid = log_grid(sweep.psnr_min, sweep.psnr_max, sweep.points)?;
            let cfg = config(tol, sweep.keep_partial);
            let (table, failed) = rate_sweep(&mods, sweep.constraint, sweep.emax, &grid, &cfg)?;
            report_failures(&failed);
            table.save_csv(out)
        }
        Command::Capacity { sweep, tol, out } => {
            let grid = log_grid(sweep.psnr_min, sweep.psnr_max, sweep.points)?;
            let cfg = config(tol, sweep.keep_partial);
            let (table, failed) = capacity_sweep(sweep.constraint, sweep.emax, &grid, &cfg)?;
            report_failures(&failed);
            table.save_csv(out)
        }
        Command::Cad { constraint, psnr, emax, tol, out } => {
            let point = analysis::capacity_at(constraint, emax, psnr, &config(tol, false))?;
            let mut dump = point.solution.dump();
            if constraint == ConstraintKind::Box {
                dump["complex_capacity_bits"] = json!(point.capacity_bits);
            }
            dump["psnr"] = json!(psnr);
            std::fs::write(out, serde_json::to_string_pretty(&dump)? + "\n")?;
            Ok(())
        }
        Command::CadSweep { sweep, tol, out } => {
            let grid = log_grid(sweep.psnr_min, sweep.psnr_max, sweep.points)?;
            let entries = cad_sweep(sweep.constraint, sweep.emax, &grid, &config(tol, true))?;
            for e in entries.iter().filter(|e| !e.converged) {
                eprintln!("warning: CAD at pSNR {} did not converge", e.psnr);
            }
            std::fs::write(out, serde_json::to_string_pretty(&entries)? + "\n")?;
            Ok(())
        }
        Command::Crossover { a, b, constraint, emax, lo, hi } => {
            let (lo, hi) = match (lo, hi, analysis::default_crossover_bracket(&a, &b, constraint)) {
                (Some(lo), Some(hi), _) => (lo, hi),
                (None, None, Some(bracket)) => bracket,
                (lo, hi, default) => match (lo.or(default.map(|d| d.0)), hi.or(default.map(|d| d.1))) {
                    (Some(lo), Some(hi)) => (lo, hi),
                    _ => return Err(Error::InvalidArgument(format!("no default bracket for {a}/{b}; pass --lo and --hi"))),
                },
            };
            let (ca, cb) = (named_constellation(&a)?, named_constellation(&b)?);
            let result = crossover(&ca, &cb, constraint, emax, (lo, hi), &AnalysisConfig::default())?;
            println!("{}", serde_json::to_string(&result)?);
            Ok(())
        }
        Command::Gap { mods, constraint, rate, emax, psnr_min, psnr_max } => {
            let mods = named_constellations(&mods)?;
            let grid = log_grid(psnr_min, psnr_max, 31)?;
            let cfg = AnalysisConfig::default();
            let gap =
                db_gap_at_rate(&RateCurve::Envelope(mods), &RateCurve::Capacity, constraint, emax, rate, &grid, &cfg)?;
            println!("{}", json!({ "rate_bits": rate, "gap_db": gap }));
            Ok(())
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ConvergenceFailure { .. } => 3,
        Error::NoCrossover { .. } | Error::OutOfRange(_) => 4,
        Error::InvalidArgument(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_) => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
