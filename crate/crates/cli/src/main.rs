//! `copyguard`: reproducible regurgitation experiments from the command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 remote-model error.

mod args;
mod commands;
mod failure;
mod model;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use failure::{Failure, Kind};

fn run(cli: Cli, invocation: &[String]) -> Result<(), Failure> {
    match &cli.command {
        Command::IndexBuild(a) => commands::index_build(a, invocation),
        Command::Pretrain(a) => commands::pretrain_cmd(a, invocation),
        Command::Detect(a) => commands::detect(a, invocation),
        Command::BuildDataset(a) => commands::build_dataset(a, invocation),
        Command::Train(a) => commands::train(a, invocation),
        Command::EvalExtraction(a) => commands::eval_extraction_cmd(a, invocation),
        Command::EvalCreativity(a) => commands::eval_creativity_cmd(a, invocation),
        Command::EvalQuote(a) => commands::eval_quote_cmd(a, invocation),
        Command::NllShift(a) => commands::nll_shift(a, invocation),
        Command::Toy(a) => commands::toy(a, invocation),
        Command::Report(a) => commands::report(a),
        Command::Replay(a) => commands::replay(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let raw: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&raw) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(Kind::Usage.exit_code()),
            };
        }
    };
    let invocation = output::strip_out(&raw[1..]);
    match run(cli, &invocation) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.kind.exit_code())
        }
    }
}
