use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(agency::cli::run(std::env::args_os()))
}
