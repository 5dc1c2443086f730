use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thermiq_cli::config::describe_kind;
use thermiq_cli::{load_config, run, CliError, EXIT_OK, EXIT_RUNTIME, KINDS};

#[derive(Parser)]
#[command(name = "thermiq", version, about = "Run seeded quantum measurement and dynamics experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its outputs and manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the output path prefix in the config.
        #[arg(long)]
        out: Option<String>,
        /// Worker threads for trajectory ensembles (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check a config without running it; exit status 0 iff valid.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// List experiment kinds.
    ListKinds,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::ListKinds => {
            for k in KINDS {
                println!("{k:<16}{}", describe_kind(k));
            }
            EXIT_OK
        }
        Command::Validate { config } => match load_config(&config) {
            Ok(_) => EXIT_OK,
            Err(e) => report(e),
        },
        Command::Run { config, seed, out, threads } => {
            if let Some(n) = threads {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("error: cannot configure {n} threads: {e}");
                    return ExitCode::from(EXIT_RUNTIME as u8);
                }
            }
            match load_config(&config) {
                Err(e) => report(e),
                Ok(mut cfg) => {
                    if let Some(s) = seed {
                        cfg.seed = s;
                    }
                    if let Some(o) = out {
                        cfg.output = o;
                    }
                    match run(&cfg) {
                        Ok(m) => {
                            for o in &m.outputs {
                                println!("{}  {}", o.sha256, o.path);
                            }
                            eprintln!("{} finished in {:.2} s", m.kind, m.duration_seconds);
                            EXIT_OK
                        }
                        Err(e) => report(e),
                    }
                }
            }
        }
    };
    ExitCode::from(code as u8)
}

fn report(e: CliError) -> i32 {
    match &e {
        CliError::Invalid(diags) => {
            for d in diags {
                eprintln!("error: {d}");
            }
        }
        other => eprintln!("error: {other}"),
    }
    e.exit_code()
}
