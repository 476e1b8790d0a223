use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use forge_cli::{run_file, Kind, Options};

#[derive(Parser)]
#[command(name = "forge", version, about = "Symbols, completion, isotropy rank tests and derived flags")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prolongations, δ-cohomology, characters and onsets of a symbol
    Symbol(Args),
    /// Completion of a linear constant-coefficient system
    Complete(Args),
    /// Isotropy rank test at jets of a prolongation rule
    Mv(Args),
    /// Derived flag of a Pfaffian system
    Flag(Args),
}

#[derive(clap::Args)]
struct Args {
    file: PathBuf,
    /// Print the report as JSON
    #[arg(long)]
    json: bool,
    /// Highest order examined (default 6)
    #[arg(long)]
    cap: Option<usize>,
    /// Seed for random flags and sample points
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Jet or evaluation point, replacing those in the file
    #[arg(long = "point")]
    points: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Symbol(a) => (Kind::Symbol, a),
        Command::Complete(a) => (Kind::Pde, a),
        Command::Mv(a) => (Kind::Rule, a),
        Command::Flag(a) => (Kind::Pfaff, a),
    };
    let opts = Options {
        cap: args.cap,
        seed: args.seed,
        points: args.points,
    };
    match run_file(&args.file, kind, &opts) {
        Ok(report) => {
            if args.json {
                print!("{}", report.to_json());
            } else {
                print!("{}", report.to_text());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("forge: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
