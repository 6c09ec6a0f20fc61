use clap::Parser;
use nvsqueeze_cli::{run, CliError, Command, Context};
use std::path::PathBuf;
use std::process::ExitCode;

/// Spin-squeezing and NV-magnetometry recipes.
#[derive(Parser)]
#[command(name = "nvsqueeze", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Run configuration (TOML with unit-suffixed quantities).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Positions file (x y z in nm per line), replacing [geometry].
    #[arg(long)]
    geometry_file: Option<PathBuf>,
    /// Worker threads for trajectory and sweep parallelism.
    #[arg(long)]
    threads: Option<usize>,
}

fn execute(cli: &Cli) -> Result<Option<String>, CliError> {
    if let Some(n) = cli.threads {
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let ctx = Context::load(&cli.config, cli.seed, cli.geometry_file.clone())?;
    let outcome = run(cli.command, &ctx)?;
    match &cli.out {
        Some(path) => std::fs::write(path, &outcome.text).map_err(|source| CliError::Io { path: path.clone(), source })?,
        None => print!("{}", outcome.text),
    }
    Ok(outcome.violation)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(violation)) => {
            eprintln!("error: numerical contract violated: {violation}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
