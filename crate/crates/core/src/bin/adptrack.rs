use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(adptrack::cli::dispatch(std::env::args()) as u8)
}
