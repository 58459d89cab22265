use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use sdgg::commands::{run_command, Command, EXIT_CONFIG};
use sdgg::config::parse_config;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Train,
    Eval,
    Trials,
    Sweep,
    #[value(name = "simulate-2d")]
    Simulate2d,
    Gradcheck,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Train => Command::Train,
            Cmd::Eval => Command::Eval,
            Cmd::Trials => Command::Trials,
            Cmd::Sweep => Command::Sweep,
            Cmd::Simulate2d => Command::Simulate2d,
            Cmd::Gradcheck => Command::Gradcheck,
        }
    }
}

/// Graph-level anomaly detection with generated pseudo-anomalous graphs.
///
/// Exit codes: 0 success, 2 configuration error, 3 data error,
/// 4 runtime or numerical error.
#[derive(Debug, Parser)]
#[command(name = "sdgg", version)]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set lambda=0.1`. Repeatable;
    /// later values win. Takes precedence over the file and SDGG_SEED.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; overrides `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match parse_config(cli.config.as_deref(), &cli.overrides) {
        Ok(c) => c,
        Err(e) => return fail(&e, EXIT_CONFIG),
    };
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    match run_command(cli.command.into(), &cfg) {
        Ok(out) => {
            println!("{}", out.summary);
            for f in out.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = e.exit_code();
            fail(&e, code)
        }
    }
}

fn fail(e: &dyn std::error::Error, code: i32) -> ExitCode {
    eprintln!("error: {e}");
    let mut src = e.source();
    while let Some(s) = src {
        eprintln!("  caused by: {s}");
        src = s.source();
    }
    ExitCode::from(code as u8)
}
