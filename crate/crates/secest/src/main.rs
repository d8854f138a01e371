use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(secest::cli::run(std::env::args_os()))
}
