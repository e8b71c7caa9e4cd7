//! `graphkan`: generate benchmark graphs, train and compare the GraphKAN
//! and GCN models, and run the gradient-check suite.
//!
//! Exit codes: 0 success, 1 runtime/data failure, 2 usage error.

mod commands;
mod options;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "graphkan",
    version,
    about = "GraphKAN vs GCN node-classification benchmark harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic benchmark graph file.
    Gen(commands::gen::GenArgs),
    /// Train one model on a graph over several seeded trials.
    Train(commands::train::TrainArgs),
    /// Run both models on one or more graphs with paired seeds.
    Compare(commands::compare::CompareArgs),
    /// Check every analytic gradient against finite differences.
    Gradcheck(commands::gradcheck::GradcheckArgs),
}

fn main() -> ExitCode {
    // die quietly when a pipe closes (e.g. `graphkan gen ... | head`)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => commands::gen::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Compare(args) => commands::compare::run(args),
        Command::Gradcheck(args) => commands::gradcheck::run(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
