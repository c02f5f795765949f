use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod output;

#[derive(Parser, Debug)]
#[command(name = "chemostat", version, about = "Competitive exclusion analysis for chemostat models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certify global stability of the first species' equilibrium.
    Analyze(AnalyzeArgs),
    /// Integrate the normalized system.
    Simulate(SimulateArgs),
    /// Single-species limit cycles from the return map.
    Cycles(CyclesArgs),
    /// Tabulate the critical yield slope c_crit(b).
    Ccrit(CcritArgs),
    /// Certify a family of models obtained by varying one parameter.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// JSON model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Parameter patch `key=value`, e.g. `constants.c2=30` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Print the (patched) model file to stdout.
    #[arg(long)]
    pub echo_model: bool,
}

#[derive(Args, Debug, Clone)]
pub struct OutArgs {
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub out: OutArgs,
    /// Grid intervals on (0, 1).
    #[arg(long, default_value_t = 4096)]
    pub grid: usize,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[arg(long, default_value_t = 500.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub atol: f64,
    /// Initial state `S,x1,…,xN` in normalized units.
    #[arg(long, value_delimiter = ',')]
    pub initial: Option<Vec<f64>>,
    #[arg(long, default_value_t = 4096)]
    pub grid: usize,
}

#[derive(Args, Debug)]
pub struct CyclesArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[arg(long, default_value_t = 1e-10)]
    pub rtol: f64,
    /// Lower end of the section scan (default 0.01·x*).
    #[arg(long)]
    pub x_lo: Option<f64>,
    /// Upper end of the section scan (default 20·x*).
    #[arg(long)]
    pub x_hi: Option<f64>,
    /// Longest time to wait for a return to the section.
    #[arg(long, default_value_t = 1e4)]
    pub t_end: f64,
}

#[derive(Args, Debug)]
pub struct CcritArgs {
    #[command(flatten)]
    pub out: OutArgs,
    /// Values of b (default: 0, 0.01, …, 1.2).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub b: Vec<f64>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub out: OutArgs,
    /// Override key to vary, e.g. `constants.c2`.
    #[arg(long)]
    pub param: String,
    /// Explicit values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "range")]
    pub values: Vec<f64>,
    /// `start:stop:count`, inclusive, evenly spaced.
    #[arg(long)]
    pub range: Option<String>,
    #[arg(long, default_value_t = 4096)]
    pub grid: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Analyze(a) => commands::analyze(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Cycles(a) => commands::cycles(&a),
        Command::Ccrit(a) => commands::ccrit(&a),
        Command::Sweep(a) => commands::sweep(&a),
    };
    match code {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
