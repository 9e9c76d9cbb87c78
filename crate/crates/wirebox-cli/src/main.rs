use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use wirebox_cli::commands::{self, Command, Opts};

#[derive(Parser)]
#[command(name = "wirebox", version, about = "Compose, simulate, and check wired machine systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct FileArgs {
    /// System description file
    file: PathBuf,
    /// Steps to simulate, or the unrolling depth for check
    #[arg(long)]
    steps: Option<usize>,
    /// Time horizon for timed runs, or the contract horizon override
    #[arg(long)]
    horizon: Option<i64>,
    /// Write the primary output here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the randomized composition cross-check
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Flatten the wiring and print the composite interface and machine
    Compose(FileArgs),
    /// Run the system on the inputs from the run block and print a trace
    Simulate(FileArgs),
    /// Report totality, determinism, and inertia verdicts
    Check(FileArgs),
    /// Check machines against their contracts and compose the contracts
    Contract(FileArgs),
}

fn main() {
    let cli = Cli::parse();
    let (cmd, args) = match &cli.cmd {
        Cmd::Compose(a) => (Command::Compose, a),
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Check(a) => (Command::Check, a),
        Cmd::Contract(a) => (Command::Contract, a),
    };
    let opts = Opts {
        steps: args.steps,
        horizon: args.horizon,
        out: args.out.clone(),
        seed: args.seed,
    };
    std::process::exit(commands::run(cmd, &args.file, &opts));
}
