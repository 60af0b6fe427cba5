use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use surjlab_cli::{execute, is_usage_error, parse_list, Command, ExperimentConfig, UsageError};
use surjlab_core::Exponent;

#[derive(Parser)]
#[command(name = "surjlab", version, about = "Truncated convolution operators on finitely generated groups")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Word-metric ball: size, layers and elements.
    Ball(Flags),
    /// Eigenvalues of the compression of a*a, with an operator-norm estimate.
    Spectrum(Flags),
    /// Decay of ||L_a y_n||_2 / ||y_n||_2 along y_n = f_n(a* a).
    ApproxKernel(Flags),
    /// Range distance and injectivity modulus of delta_e + t_a delta_a + t_b delta_b.
    Willis(Flags),
    /// Random lower bounds on the l2 operator norm against a candidate constant.
    Herz(Flags),
    /// Noncommutative Lp norm across radii, or of a matrix file.
    Nclp(Flags),
    /// Range-distance and modulus sweeps over trial elements.
    Probe(Flags),
    /// Injectivity and surjectivity of L_a on a finite group.
    Finite(Flags),
}

#[derive(Args)]
struct Flags {
    /// TOML file with defaults; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Group descriptor: Z, Z^d, Fk, H3, Cn, Sn.
    #[arg(long)]
    group: Option<String>,
    /// Element expression or trial name.
    #[arg(long)]
    elem: Option<String>,
    /// Trial element for probe; repeatable.
    #[arg(long = "trial")]
    trials: Vec<String>,
    /// Exponent in [1, inf].
    #[arg(long, value_parser = parse_exponent)]
    p: Option<Exponent>,
    /// Radii as "2..5" (inclusive) or "2,3,5".
    #[arg(long)]
    radii: Option<String>,
    /// Ball radius.
    #[arg(long)]
    r: Option<usize>,
    /// Sequence indices as a comma list.
    #[arg(long)]
    n: Option<String>,
    /// Seed for random starts and samples.
    #[arg(long)]
    seed: Option<u64>,
    /// Coefficient of delta_a.
    #[arg(long, allow_hyphen_values = true)]
    ta: Option<String>,
    /// Coefficient of delta_b.
    #[arg(long, allow_hyphen_values = true)]
    tb: Option<String>,
    /// Number of random test vectors.
    #[arg(long)]
    samples: Option<usize>,
    /// Candidate constant.
    #[arg(long)]
    cp: Option<f64>,
    /// Random restarts of the modulus search.
    #[arg(long)]
    restarts: Option<usize>,
    /// Relative stopping tolerance of the LP refinement.
    #[arg(long)]
    lp_tol: Option<f64>,
    /// Square matrix in coordinate text format.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// JSON-lines output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the result table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn parse_exponent(text: &str) -> Result<Exponent, String> {
    Exponent::parse(text).map_err(|e| e.to_string())
}

impl Sub {
    fn split(self) -> (Command, Flags) {
        match self {
            Sub::Ball(f) => (Command::Ball, f),
            Sub::Spectrum(f) => (Command::Spectrum, f),
            Sub::ApproxKernel(f) => (Command::ApproxKernel, f),
            Sub::Willis(f) => (Command::Willis, f),
            Sub::Herz(f) => (Command::Herz, f),
            Sub::Nclp(f) => (Command::Nclp, f),
            Sub::Probe(f) => (Command::Probe, f),
            Sub::Finite(f) => (Command::Finite, f),
        }
    }
}

fn list(text: &str) -> anyhow::Result<Vec<usize>> {
    parse_list(text).map_err(|e| UsageError(e).into())
}

fn build_config(command: Command, flags: Flags) -> anyhow::Result<ExperimentConfig> {
    let base = match &flags.config {
        Some(path) => {
            let c = ExperimentConfig::load(path)?;
            if c.command != command {
                anyhow::bail!(UsageError(format!(
                    "{} is a {} config",
                    path.display(),
                    c.command.name()
                )));
            }
            c
        }
        None => ExperimentConfig::new(command),
    };
    let mut over = ExperimentConfig::new(command);
    over.group = flags.group;
    over.elem = flags.elem;
    over.trials = flags.trials;
    over.p = flags.p;
    over.radii = flags.radii.as_deref().map(list).transpose()?;
    over.r = flags.r;
    over.n = flags.n.as_deref().map(list).transpose()?;
    over.ta = flags.ta;
    over.tb = flags.tb;
    over.samples = flags.samples;
    over.cp = flags.cp;
    over.restarts = flags.restarts;
    over.lp_tol = flags.lp_tol;
    over.matrix = flags.matrix;
    over.out = flags.out;
    over.csv = flags.csv;
    let mut config = base.overlay(over);
    if let Some(seed) = flags.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn run(cli: Cli) -> anyhow::Result<Vec<String>> {
    let (command, flags) = cli.command.split();
    let report = execute(build_config(command, flags)?)?;
    report.write(std::io::stdout().lock())?;
    Ok(report.failed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(failed) if failed.is_empty() => ExitCode::SUCCESS,
        Ok(failed) => {
            for f in failed {
                eprintln!("invariant failed: {f}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_usage_error(&e) { 2 } else { 1 })
        }
    }
}
