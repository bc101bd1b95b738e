use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use norm_descent::analysis::{SmoothnessReport, BRUTE_FORCE_MAX_DIM};
use norm_descent::experiments::{
    run_config, run_grid, write_draws_csv, write_grid_csv, ExperimentError, GridConfig, RunConfig,
};
use norm_descent::matrix::SymMatrix;
use norm_descent::optim::Trace;

const EXIT_INPUT: u8 = 2;
const EXIT_DIVERGED: u8 = 3;
const THREADS_VAR: &str = "NORM_DESCENT_THREADS";

#[derive(Parser)]
#[command(
    name = "norm-descent",
    version,
    about = "Steepest descent under arbitrary norms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the smoothness report of a symmetric matrix as JSON.
    Analyze { matrix: PathBuf },
    /// Run one optimization and emit its trace as CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare GD and sign descent over a grid of rotated quadratics.
    Quadgrid {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the starting points used by each method in each cell.
        #[arg(long)]
        dump_x0: Option<PathBuf>,
    },
}

enum Failure {
    Input(String),
    Diverged(String),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        if e.divergence_trace().is_some() {
            Failure::Diverged(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

fn input<E: ToString>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Opens the output target; stdout when no path is given.
fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            fs::File::create(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn analyze(path: &Path) -> Result<(), Failure> {
    let h = SymMatrix::parse_text(&read(path)?).map_err(input)?;
    if h.dim() > BRUTE_FORCE_MAX_DIM {
        eprintln!(
            "warning: d = {} exceeds {BRUTE_FORCE_MAX_DIM}; Linf_exact omitted",
            h.dim()
        );
    }
    let report = SmoothnessReport::compute(&h).map_err(input)?;
    let json = serde_json::to_string_pretty(&report).map_err(input)?;
    println!("{json}");
    Ok(())
}

fn write_trace(trace: &Trace, out: Option<&Path>) -> Result<(), Failure> {
    let mut w = sink(out)?;
    trace.write_csv(&mut w).map_err(input)?;
    w.flush().map_err(input)
}

fn run(config: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let cfg = RunConfig::from_json(&read(config)?)?;
    match run_config(&cfg) {
        Ok(trace) => write_trace(&trace, out),
        Err(e) => {
            if let Some(partial) = e.divergence_trace() {
                write_trace(partial, out)?;
            }
            Err(e.into())
        }
    }
}

fn quadgrid(config: &Path, out: Option<&Path>, dump: Option<&Path>) -> Result<(), Failure> {
    let cfg = GridConfig::from_json(&read(config)?)?;
    let result = run_grid(&cfg, dump.is_some(), |_, lm| {
        eprintln!("lambda_max = {lm} done");
    })?;
    if let (Some(dir), Some(draws)) = (dump, &result.draws) {
        fs::create_dir_all(dir).map_err(input)?;
        for (k, cell) in draws.iter().enumerate() {
            for (method, xs) in [("gd", &cell.gd), ("signgd", &cell.signgd)] {
                let path = dir.join(format!("cell{k:03}_{method}.csv"));
                let file = fs::File::create(&path).map_err(input)?;
                write_draws_csv(xs, BufWriter::new(file)).map_err(input)?;
            }
        }
    }
    let mut w = sink(out)?;
    write_grid_csv(&result.cells, &mut w).map_err(input)?;
    w.flush().map_err(input)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Failure::Input(format!(
                "{THREADS_VAR} must be a positive integer, got {value:?}"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(input)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Analyze { matrix } => analyze(matrix),
        Command::Run { config, out } => run(config, out.as_deref()),
        Command::Quadgrid {
            config,
            out,
            dump_x0,
        } => quadgrid(config, out.as_deref(), dump_x0.as_deref()),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Diverged(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_DIVERGED)
        }
    }
}
