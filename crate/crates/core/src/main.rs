use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let out = vickrey::cli::dispatch(std::env::args_os());
    // Reports go out in one write so error paths never leave partial output.
    if !out.stdout.is_empty() {
        let _ = std::io::stdout().lock().write_all(out.stdout.as_bytes());
    }
    if !out.stderr.is_empty() {
        let _ = std::io::stderr().lock().write_all(out.stderr.as_bytes());
    }
    ExitCode::from(out.status.code())
}
