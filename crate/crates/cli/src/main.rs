use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(sdestab_cli::app::run(std::env::args_os()))
}
