use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(ldicheck_cli::run(std::env::args_os()))
}
