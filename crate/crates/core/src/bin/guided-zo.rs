use std::process::ExitCode;

fn main() -> ExitCode {
    guided_zo::cli::run(std::env::args_os())
}
