use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let code = proofline::cli::dispatch(std::env::args_os(), &mut io::stdout(), &mut io::stderr(), proofline::cli::color_enabled());
    ExitCode::from(code as u8)
}
