use std::io::{self, Write};
use std::process::ExitCode;

fn main() -> ExitCode {
    let mut err = io::stderr().lock();
    if let Err(f) = edrelax_cli::configure_threads() {
        let _ = writeln!(err, "error: {}", f.message);
        return ExitCode::from(f.code as u8);
    }
    let mut out = io::stdout().lock();
    let code = edrelax_cli::run_args(std::env::args_os(), &mut out, &mut err);
    let _ = out.flush();
    ExitCode::from(code as u8)
}
