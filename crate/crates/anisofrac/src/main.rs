use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(anisofrac::appio::cli::main_run())
}
