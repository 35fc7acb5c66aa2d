use std::process::ExitCode;

fn main() -> ExitCode {
    ilm_cli::main_with(std::env::args_os())
}
