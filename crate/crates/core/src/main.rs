use clap::{Args, Parser, Subcommand, ValueEnum};
use parest::bench::commands::{self, BenchFlags, CommandError, SolverFlags};
use parest::inertia::ParamChart;
use parest::solver::{ArrivalMethod, RolloutKind};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "parest", version, about = "Inertial parameter and state estimation for multi-contact robots")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write observations plus ground truth.
    Simulate {
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Data file to write.
        #[arg(long, default_value = "data.json")]
        out: PathBuf,
    },
    /// Estimate states and inertial parameters of a scenario.
    Estimate {
        scenario: PathBuf,
        /// Data file from `simulate`; synthesized from --seed when absent.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        solver: SolverArgs,
        /// Directory for estimate.json and trace.csv.
        #[arg(long, default_value = "estimate-out")]
        out: PathBuf,
    },
    /// Run a benchmark suite.
    Bench {
        suite: PathBuf,
        /// Replaces the suite seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[command(flatten)]
        solver: SolverArgs,
        /// Directory for records.csv, timings.csv and summary.txt.
        #[arg(long, default_value = "bench-out")]
        out: PathBuf,
    },
    /// Check analytic derivatives of a model against finite differences.
    CheckDerivatives {
        model: PathBuf,
        /// Number of random states.
        #[arg(long, short, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ChartArg {
    Raw,
    Logchol,
    Expeig,
}

#[derive(Clone, Copy, ValueEnum)]
enum RolloutArg {
    Single,
    Feasibility,
    Multiple,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArrivalArg {
    Schur,
    Nullspace,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, value_enum)]
    chart: Option<ChartArg>,
    #[arg(long, value_enum)]
    rollout: Option<RolloutArg>,
    #[arg(long, value_enum)]
    arrival: Option<ArrivalArg>,
    #[arg(long)]
    tol_grad: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

impl SolverArgs {
    fn flags(&self) -> SolverFlags {
        SolverFlags {
            chart: self.chart.map(|c| match c {
                ChartArg::Raw => ParamChart::Raw,
                ChartArg::Logchol => ParamChart::LogCholesky,
                ChartArg::Expeig => ParamChart::ExpEigenvalue,
            }),
            rollout: self.rollout.map(|r| match r {
                RolloutArg::Single => RolloutKind::Single,
                RolloutArg::Feasibility => RolloutKind::Feasibility,
                RolloutArg::Multiple => RolloutKind::Multiple,
            }),
            arrival: self.arrival.map(|a| match a {
                ArrivalArg::Schur => ArrivalMethod::Schur,
                ArrivalArg::Nullspace => ArrivalMethod::Nullspace,
            }),
            tol_grad: self.tol_grad,
            max_iter: self.max_iter,
        }
    }
}

fn init_logging() {
    let level = std::env::var("PAREST_LOG").unwrap_or_else(|_| "warn".into());
    let filter = match level.as_str() {
        "error" | "warn" | "info" | "debug" => level.as_str(),
        other => {
            eprintln!("PAREST_LOG={other} is not one of error, warn, info, debug; using warn");
            "warn"
        }
    };
    env_logger::Builder::new().parse_filters(filter).format_timestamp(None).init();
}

fn run(cli: Cli) -> Result<(), CommandError> {
    match cli.command {
        Command::Simulate { scenario, seed, out } => {
            commands::simulate(&scenario, &out, seed)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Estimate { scenario, data, seed, solver, out } => {
            let r = commands::estimate(&scenario, data.as_deref(), seed, &solver.flags(), &out)?;
            let f = &r.file;
            println!("status {} after {} iterations, cost {:.6e}", f.status, f.iterations, f.cost);
            for (name, p) in f.bodies.iter().zip(&f.theta_physical) {
                println!("{name}: {p}");
            }
            if let Some(m) = &f.metrics {
                println!("max parameter relative error {:.3e}", m.param_rel_err.iter().copied().fold(0.0, f64::max));
            }
            println!("wrote {}", out.display());
            r.outcome
        }
        Command::Bench { suite, seed, jobs, solver, out } => {
            let flags = BenchFlags { solver: solver.flags(), seed, jobs };
            let report = commands::bench(&suite, &flags, &out)?;
            print!("{}", report.table());
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::CheckDerivatives { model, samples, seed, tol } => {
            let report = commands::check_derivatives_file(&model, samples, seed, tol)?;
            for (name, e) in &report.checks {
                println!("{:<48} {:.3e} {}", name, e, if *e < tol { "ok" } else { "FAIL" });
            }
            println!("worst relative error {:.3e} over {} samples (tolerance {tol:.0e})", report.worst(), report.samples);
            if report.passed() {
                Ok(())
            } else {
                Err(CommandError::Numerical("derivative check failed".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    init_logging();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
