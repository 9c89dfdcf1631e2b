use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use copop::config::{load_config, HsMode};
use copop::output::write_artifacts;
use copop::run::{describe_error, run, Command};

/// Composition operators on weighted Hilbert spaces of the disk: counting
/// functions, compactness, Hilbert-Schmidt and Schatten membership, closed
/// range.
#[derive(Debug, Parser)]
#[command(name = "copop", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    radial_nodes: Option<usize>,
    #[arg(long)]
    angular_nodes: Option<usize>,
    /// Radii of the truncated integrals, comma separated.
    #[arg(long, alias = "r-sequence", value_delimiter = ',')]
    rseq: Option<Vec<f64>>,
    /// Probe σ_{φ(0)} ∘ φ instead of φ.
    #[arg(long)]
    normalize_origin: bool,
    /// Schatten exponents, comma separated.
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    /// Exponent shift of the kernel test functions.
    #[arg(long)]
    delta: Option<f64>,
    /// Basis terms of the Hilbert-Schmidt sum.
    #[arg(long)]
    nmax: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<HsMode>,
}

const EXIT_COMPUTATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("COPOP_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("COPOP_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let mut cfg = match load_config(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(n) = cli.radial_nodes {
        cfg.grids.radial_nodes = n;
    }
    if let Some(n) = cli.angular_nodes {
        cfg.grids.angular_nodes = n;
    }
    if let Some(r) = cli.rseq {
        cfg.grids.r_sequence = r;
    }
    if cli.normalize_origin {
        cfg.closed_range.normalize_origin = true;
    }
    if let Some(p) = cli.p {
        cfg.schatten.p = p;
    }
    if let Some(d) = cli.delta {
        cfg.closed_range.delta = Some(d);
    }
    if let Some(n) = cli.nmax {
        cfg.operator.nmax = n;
    }
    if let Some(m) = cli.mode {
        cfg.operator.mode = m;
    }
    if let Some(out) = cli.out {
        cfg.output.directory = out.display().to_string();
    }
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }

    let artifacts = match run(cli.command, &cfg) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {}", describe_error(&e));
            return ExitCode::from(EXIT_COMPUTATION);
        }
    };
    let dir = PathBuf::from(&cfg.output.directory);
    match write_artifacts(&dir, &artifacts) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: writing {}: {e}", dir.display());
            ExitCode::from(EXIT_COMPUTATION)
        }
    }
}
