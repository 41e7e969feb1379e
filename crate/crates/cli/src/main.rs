//! `jointva`: price, benchmark, sensitivity and validation runs from a TOML config.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use jointva_core::config::{RunConfig, RunMethod};

#[derive(Parser, Debug)]
#[command(name = "jointva", version, about = "Joint-life variable annuity pricer")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Contract maturity in years (overrides the config).
    #[arg(long, global = true, value_name = "YEARS")]
    maturity: Option<f64>,
    /// Monte Carlo samples per integral.
    #[arg(long, global = true, value_name = "N")]
    samples: Option<u64>,
    /// Seed for Monte Carlo and oracle draws (overrides numerics.seed).
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    method: Option<MethodArg>,
    /// Output directory for CSV files.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum MethodArg {
    Auto,
    Quad,
    Mc,
    Oracle,
    All,
}

impl From<MethodArg> for RunMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Auto => RunMethod::Auto,
            MethodArg::Quad => RunMethod::Quad,
            MethodArg::Mc => RunMethod::Mc,
            MethodArg::Oracle => RunMethod::Oracle,
            MethodArg::All => RunMethod::All,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Price GMAB, SB and DB and write prices.csv, integrals.csv and terms.csv.
    Price {
        /// Oracle paths (overrides numerics.oracle_paths).
        #[arg(long, value_name = "N")]
        paths: Option<u64>,
    },
    /// Quadrature against Monte Carlo for the benchmark integrals.
    Benchmark,
    /// Price over a two-parameter grid; writes gmab.csv, sb.csv, db.csv and total.csv.
    Sensitivity(commands::SensitivityArgs),
    /// Run the invariant battery.
    Validate {
        /// Paths for the simulation checks.
        #[arg(long, value_name = "N", default_value_t = 20_000)]
        paths: u64,
    },
    /// Print the effective configuration as TOML.
    ShowConfig,
}

/// Process outcome; the discriminant is the exit code.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numeric(String),
    Validation(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Numeric(_) => 2,
            Failure::Validation(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numeric(m) | Failure::Validation(m) => m,
        }
    }
}

fn load_config(g: &GlobalArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p).map_err(|e| Failure::Config(e.to_string()))?,
        None => RunConfig::default(),
    };
    if let Some(t) = g.maturity {
        cfg.contract.maturity = t;
    }
    if let Some(n) = g.samples {
        cfg.numerics.samples = n;
    }
    if let Some(s) = g.seed {
        cfg.numerics.seed = s;
    }
    if let Some(m) = g.method {
        cfg.numerics.method = m.into();
    }
    if let Some(d) = &g.out {
        cfg.output.dir = d.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = load_config(&cli.global)?;
    if let Command::ShowConfig = cli.command {
        print!("{}", cfg.to_toml_string().map_err(|e| Failure::Config(e.to_string()))?);
        return Ok(());
    }
    // validate reports bad parameters as failed checks rather than refusing to start.
    if !matches!(cli.command, Command::Validate { .. }) {
        cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Price { paths } => {
            if let Some(n) = paths {
                cfg.numerics.oracle_paths = n;
            }
            commands::price(&cfg)
        }
        Command::Benchmark => commands::benchmark(&cfg),
        Command::Sensitivity(args) => commands::sensitivity(&cfg, &args),
        Command::Validate { paths } => commands::validate(&cfg, paths),
        Command::ShowConfig => unreachable!(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
