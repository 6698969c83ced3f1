use std::process::ExitCode;

fn main() -> ExitCode {
    cycletime::cli::run()
}
