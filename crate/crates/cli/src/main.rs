use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use supercsp_cli::app::EXIT_ERROR;
use supercsp_cli::{compare_command, run_command, Format, RunOptions};

#[derive(Parser)]
#[command(name = "supercsp", version, about = "Support experiments for superprocesses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment or a bundle of experiments.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the classifier with the maximal-solution engine on fixtures.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, shared by bundle members and the engines.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output root.
    #[arg(long, env = "SUPERCSP_OUTPUT", default_value = "results")]
    output: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

impl Common {
    fn options(&self) -> RunOptions {
        supercsp::par::set_threads(self.jobs.max(1));
        RunOptions { seed: self.seed, jobs: self.jobs.max(1), output: self.output.clone(), format: self.format }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, common } => run_command(config, &common.options()),
        Command::Compare { config, common } => compare_command(config.as_deref(), &common.options()),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
