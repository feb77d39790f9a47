use std::process::ExitCode;

fn main() -> ExitCode {
    spectral_loft::cli::main_with_args(std::env::args_os())
}
