use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(sparsetf_cli::execute(std::env::args_os()))
}
