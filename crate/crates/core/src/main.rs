use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(matchup::cli::run(std::env::args_os()))
}
