mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::CliResult;
use config::{ConfigError, RunConfig};
use output::{Header, OutputDir, TOOL, VERSION};

#[derive(Parser)]
#[command(name = "catalysis", version, about = "Cascaded photon catalysis simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML or JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Fock-space cutoff, overriding the automatic policy.
    #[arg(long, global = true)]
    cutoff: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Qudit amplitudes, PND, success probability and oracle cross-check.
    Simulate,
    /// Closed-form and numeric Wigner grids.
    Wigner,
    /// Multistart search for a target PND.
    Optimize,
    /// Exhaustive grid evaluation.
    Scan,
    /// Fidelity and success probability under source/detector inefficiency.
    Realistic,
    /// Evaluate the built-in reference parameter sets.
    ReproduceTables,
    /// Print a target state's photon-number distribution.
    Targets,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Wigner => "wigner",
            Command::Optimize => "optimize",
            Command::Scan => "scan",
            Command::Realistic => "realistic",
            Command::ReproduceTables => "reproduce-tables",
            Command::Targets => "targets",
        }
    }
}

fn run(cli: &Cli) -> CliResult {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None if matches!(cli.command, Command::ReproduceTables) => RunConfig::default(),
        None => return Err(ConfigError::Invalid("--config is required for this command".into()).into()),
    };
    cfg.seed = cli.seed.or(cfg.seed);
    cfg.cutoff = cli.cutoff.or(cfg.cutoff);
    cfg.threads = cli.threads.or(cfg.threads);
    if let Some(n) = cfg.threads {
        if n == 0 {
            return Err(ConfigError::Invalid("threads must be >= 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    }
    let header = Header { tool: TOOL, version: VERSION, command: cli.command.name(), config: &cfg };
    let mut out = OutputDir::create(&cli.out)?;
    let result = match cli.command {
        Command::Simulate => commands::simulate(&cfg, &mut out, &header),
        Command::Wigner => commands::wigner(&cfg, &mut out, &header),
        Command::Optimize => commands::optimize_cmd(&cfg, &mut out, &header),
        Command::Scan => commands::scan(&cfg, &mut out, &header),
        Command::Realistic => commands::realistic(&cfg, &mut out, &header),
        Command::ReproduceTables => commands::reproduce_tables(&cfg, &mut out, &header),
        Command::Targets => commands::targets(&cfg, &mut out, &header),
    };
    for path in out.written() {
        eprintln!("wrote {}", path.display());
    }
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

