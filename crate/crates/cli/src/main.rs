use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dspstab_cli::commands::GreenArgs;
use dspstab_cli::{dispatch, exit_code, load_config, Command, EXIT_ERROR};

#[derive(Parser)]
#[command(name = "dspstab", version, about = "Discrete shock profiles: hypotheses, Green's function and decay experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `out_dir`
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the scheme and profile hypotheses
    Hypotheses(Common),
    /// Solve the profile family and report localization
    Profile(Common),
    /// Green's function column and its decomposition
    Green {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        j0: Option<i64>,
        #[arg(long)]
        decompose: bool,
        /// CSV file name inside the output directory
        #[arg(long)]
        csv: Option<String>,
    },
    /// Weighted-norm decay experiment
    Experiment(Common),
    /// Remainder, convolution-sum and Duhamel checks
    Bounds(Common),
}

fn init_threads() {
    let Ok(v) = std::env::var("DSPSTAB_THREADS") else {
        return;
    };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("warning: DSPSTAB_THREADS ignored: {e}");
            }
        }
        _ => eprintln!("warning: DSPSTAB_THREADS must be a positive integer, got `{v}`"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    let (cmd, common, green) = match cli.cmd {
        Cmd::Hypotheses(c) => (Command::Hypotheses, c, GreenArgs::default()),
        Cmd::Profile(c) => (Command::Profile, c, GreenArgs::default()),
        Cmd::Experiment(c) => (Command::Experiment, c, GreenArgs::default()),
        Cmd::Bounds(c) => (Command::Bounds, c, GreenArgs::default()),
        Cmd::Green { common, n, j0, decompose, csv } => (Command::Green, common, GreenArgs { n, j0, decompose, csv }),
    };
    let cfg = match load_config(&common.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_ERROR as u8);
        }
    };
    let result = dispatch(cmd, &cfg, common.out.as_deref(), &green);
    if let Err(e) = &result {
        eprintln!("error: {e:#}");
    }
    ExitCode::from(exit_code(&result) as u8)
}
