use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let argv: Vec<String> = std::env::args().collect();
    let cli = bos_cli::Cli::parse();
    match bos_cli::run(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", bos_cli::one_line(&err));
            ExitCode::FAILURE
        }
    }
}
