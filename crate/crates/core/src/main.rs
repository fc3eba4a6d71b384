use std::process::ExitCode;

fn main() -> ExitCode {
    equiaffine::cli::run(std::env::args_os()).into()
}
