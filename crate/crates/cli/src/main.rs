use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use mofix_cli::{execute, Cli, CliError, Command};

// Engine recursion goes as deep as the loop nesting.
const STACK: usize = 512 << 20;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let worker = std::thread::Builder::new()
        .stack_size(STACK)
        .spawn(move || run(&cli))
        .expect("spawn worker thread");
    match worker.join() {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => ExitCode::from(101),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let text = execute(cli)?;
    match (&cli.out, &cli.command) {
        (Some(path), cmd) if !matches!(cmd, Command::Fuzz(_)) => std::fs::write(path, text)
            .map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            }),
        _ => {
            print!("{text}");
            Ok(())
        }
    }
}
