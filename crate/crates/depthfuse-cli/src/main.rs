//! Command line front end: generate synthetic datasets, fuse depth maps
//! into a cloud, refine camera poses, evaluate a cloud against ground
//! truth, and summarize files. Exit codes: 0 success, 1 usage or bad
//! content, 2 file system trouble.

use clap::{Parser, Subcommand};

mod commands;

#[derive(Parser)]
#[command(name = "depthfuse", version, about = "Depth map fusion and pose refinement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic dataset: depth maps, poses, ground truth, config
    Synth(commands::synth::SynthArgs),
    /// Fuse all views into one cloud in a single pass (no pose refinement)
    Fuse(commands::fuse::FuseArgs),
    /// Alternate fusion and pose re-registration until poses settle
    Refine(commands::refine::RefineArgs),
    /// Compare a fused cloud against ground-truth planes
    Eval(commands::eval::EvalArgs),
    /// Print a one-line summary of each given file
    Info(commands::info::InfoArgs),
}

fn main() -> std::process::ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return std::process::ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Synth(args) => commands::synth::run(args),
        Command::Fuse(args) => commands::fuse::run(args),
        Command::Refine(args) => commands::refine::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Info(args) => commands::info::run(args),
    };
    match result {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::ExitCode::from(e.exit_code() as u8)
        }
    }
}
